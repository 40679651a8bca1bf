//! `gurarij`: evaluates norms, Katětov envelopes, amalgams, Arens-Eells
//! norms and tower builds from JSON inputs and prints JSON or CSV reports.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "gurarij", version, about, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Write the report here instead of stdout (for `build`: the manifest).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Numerical tolerance for checks, in (0, 1e-3].
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = parse_tolerance)]
    pub tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t > 0.0 && t <= 1e-3 {
        Ok(t)
    } else {
        Err(format!("tolerance {t} outside (0, 1e-3]"))
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Norm of a vector.
    NormEval {
        #[arg(long)]
        space: String,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Dual norm of a functional.
    DualNorm {
        #[arg(long)]
        space: String,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Finite Katětov functions and their convex envelopes
    #[command(subcommand)]
    Katetov(KatetovCmd),
    /// Two-point amalgams over a common space
    #[command(subcommand)]
    Amalgam(AmalgamCmd),
    /// Distance between tuples in two spaces and their amalgam
    #[command(subcommand)]
    Henson(HensonCmd),
    /// Arens-Eells norms, absolute and relative to a normed space
    #[command(subcommand)]
    Ae(AeCmd),
    /// Build the tower and write its manifest.
    Build {
        #[arg(long, default_value = "l1:2")]
        space: String,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        /// Cutoff radius per round (repeat for later rounds).
        #[arg(long = "radius", short = 'R')]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        envelopes: usize,
        #[arg(long, default_value_t = 3)]
        support: usize,
        /// Close every round under the sign flip of this coordinate.
        #[arg(long)]
        symmetry_axis: Option<usize>,
    },
    /// Realize a one-point extension of a subspace in one tower step.
    GurarijTest {
        #[arg(long)]
        space: String,
        /// Basis vectors separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        basis: String,
        /// Katětov file over the basis coefficients.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "radius", short = 'R')]
        radius: f64,
        #[arg(long, default_value_t = gurarij_core::gurarij::DEFAULT_NET)]
        net: usize,
    },
    /// Constants C, C′ and δ(ε) for a normalized basis and direction.
    PerturbConstants {
        #[arg(long)]
        space: String,
        #[arg(long, allow_hyphen_values = true)]
        basis: String,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Left-translation action of a finite group on its Arens-Eells space.
    TelemanDemo {
        /// Group file; overrides `--group`.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// `zN` (cyclic, generator weight `--weight`) or `s3`.
        #[arg(long, default_value = "z2")]
        group: String,
        #[arg(long, default_value_t = 1.0)]
        weight: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Check that a build's symmetry group lifts to the next level.
    GembedCheck {
        /// Build manifest.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Run the acceptance suite.
    Acceptance {
        /// Only these criteria (default: all, with the runtime check).
        #[arg(long)]
        only: Vec<u8>,
    },
}

#[derive(Subcommand, Debug)]
pub enum KatetovCmd {
    /// Check the Katětov inequalities on the support.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Min-plus extension at a point.
    Extend {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Canonical convex envelope; optionally written as a Katětov file.
    Convexify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        write: Option<PathBuf>,
        /// Also evaluate the envelope here.
        #[arg(long, allow_hyphen_values = true)]
        vector: Option<String>,
    },
    /// Sup distance between two envelopes.
    Dist {
        #[arg(long = "in", num_args = 1..=2, required = true, action = ArgAction::Append)]
        inputs: Vec<PathBuf>,
    },
    /// `‖αx − a‖` in the one-point extension.
    OnePointNorm {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum AmalgamCmd {
    /// Admissible range `[r₀, r₁]` of `‖x₀ − x₁‖`.
    Bounds {
        #[arg(long = "in", num_args = 1..=2, required = true, action = ArgAction::Append)]
        inputs: Vec<PathBuf>,
    },
    /// `‖a + αx₀ + βx₁‖` for a given `‖x₀ − x₁‖`.
    Norm {
        #[arg(long = "in", num_args = 1..=2, required = true, action = ArgAction::Append)]
        inputs: Vec<PathBuf>,
        #[arg(long = "radius", short = 'R')]
        radius: f64,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        beta: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum HensonCmd {
    /// Tuple distance between two tuples.
    Dist {
        #[arg(long = "in")]
        input: PathBuf,
        /// Exact rational arithmetic (explicit spaces only).
        #[arg(long)]
        exact: bool,
    },
    /// Norm of `z_E + z_F` in the tuple amalgam.
    AmalgamNorm {
        #[arg(long = "in")]
        input: PathBuf,
        /// Gluing radius (default: the tuple distance).
        #[arg(long = "radius", short = 'R')]
        radius: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        vector_e: String,
        #[arg(long, allow_hyphen_values = true)]
        vector_f: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum AeCmd {
    /// Arens-Eells norm of a molecule.
    Norm {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// McShane extension of a Lipschitz function.
    ExtendLip {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Norm of `a + Σ αᵢuᵢ` over a relative space.
    RelativeNorm {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
    },
    /// Adjoin the points of a relative space and summarize the result.
    Adjoin {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

impl Command {
    /// Files given to a command that takes exactly two `--in`, either as
    /// `--in a b` or `--in a --in b`.
    fn input_pair(&self) -> Option<&[PathBuf]> {
        match self {
            Command::Katetov(KatetovCmd::Dist { inputs })
            | Command::Amalgam(AmalgamCmd::Bounds { inputs })
            | Command::Amalgam(AmalgamCmd::Norm { inputs, .. }) => Some(inputs),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        let sub = |a: &str, b: &str| format!("{a} {b}");
        match self {
            Command::NormEval { .. } => "norm-eval".into(),
            Command::DualNorm { .. } => "dual-norm".into(),
            Command::Katetov(k) => sub(
                "katetov",
                match k {
                    KatetovCmd::Check { .. } => "check",
                    KatetovCmd::Extend { .. } => "extend",
                    KatetovCmd::Convexify { .. } => "convexify",
                    KatetovCmd::Dist { .. } => "dist",
                    KatetovCmd::OnePointNorm { .. } => "one-point-norm",
                },
            ),
            Command::Amalgam(a) => sub(
                "amalgam",
                match a {
                    AmalgamCmd::Bounds { .. } => "bounds",
                    AmalgamCmd::Norm { .. } => "norm",
                },
            ),
            Command::Henson(h) => sub(
                "henson",
                match h {
                    HensonCmd::Dist { .. } => "dist",
                    HensonCmd::AmalgamNorm { .. } => "amalgam-norm",
                },
            ),
            Command::Ae(a) => sub(
                "ae",
                match a {
                    AeCmd::Norm { .. } => "norm",
                    AeCmd::ExtendLip { .. } => "extend-lip",
                    AeCmd::RelativeNorm { .. } => "relative-norm",
                    AeCmd::Adjoin { .. } => "adjoin",
                },
            ),
            Command::Build { .. } => "build".into(),
            Command::GurarijTest { .. } => "gurarij-test".into(),
            Command::PerturbConstants { .. } => "perturb-constants".into(),
            Command::TelemanDemo { .. } => "teleman-demo".into(),
            Command::GembedCheck { .. } => "gembed-check".into(),
            Command::Acceptance { .. } => "acceptance".into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => report::EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(inputs) = cli.command.input_pair() {
        if inputs.len() != 2 {
            let e = Cli::command().error(
                clap::error::ErrorKind::WrongNumberOfValues,
                format!("--in takes exactly two files, got {}", inputs.len()),
            );
            let _ = e.print();
            return ExitCode::from(report::EXIT_USAGE);
        }
    }
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(|| commands::run(&cli.command, &cli.common));
    let outcome = match outcome {
        Ok(o) => o,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(commands::CliError::Internal(msg))
        }
    };
    ExitCode::from(report::finish(&cli, outcome, start.elapsed().as_secs_f64()))
}
