//! Subcommand implementations. Each returns the result fields of the report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use gurarij_core::aells::{
    adjoin, ae_norm, lipschitz_extend, relative_ae_norm, AellsError, RelativeSpaceOverE,
};
use gurarij_core::amalgam::{
    amalgam_bounds, henson_distance, henson_distance_exact, tuple_amalgam_norm, two_point_norm,
    AmalgamError, TupleAmalgam, TwoPointExtension,
};
use gurarij_core::gurarij::{
    build, gurarij_extension_test, perturbation_constants, sign_flip_group, BuildParams,
    GurarijError,
};
use gurarij_core::io::{
    read_json, resolve_space_label, write_json, BuildManifest, GroupFile, IoError, KatetovFile,
    MetricSpec, MoleculeFile, RelativeFile, SpaceFile, SpaceSpec,
};
use gurarij_core::katetov::{
    convexify, extend_min_plus, is_katetov, ConvexKatetovEnvelope, KatetovError,
};
use gurarij_core::optim::LpError;
use gurarij_core::space::{Space, SpaceError, SpaceRef};
use gurarij_core::universal::{
    check_teleman, left_invariant_metric, teleman_embed, verify_g_embedding,
    FiniteGroupPresentation, LinearIsometryWitness, UniversalError,
};
use gurarij_core::{acceptance, Vector};

use crate::{AeCmd, AmalgamCmd, Command, Common, HensonCmd, KatetovCmd};

#[derive(Debug)]
pub enum CliError {
    /// Bad input or a failed check; exit 2.
    Domain {
        kind: String,
        message: String,
        details: Value,
    },
    /// Solver breakdown or a bug; exit 1.
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain { kind, message, .. } => write!(f, "{kind}: {message}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl CliError {
    pub fn to_value(&self) -> Value {
        match self {
            CliError::Domain {
                kind,
                message,
                details,
            } => json!({"kind": kind, "message": message, "details": details}),
            CliError::Internal(m) => json!({"kind": "internal", "message": m, "details": null}),
        }
    }
}

fn domain(kind: &str, message: impl fmt::Display) -> CliError {
    CliError::Domain {
        kind: kind.into(),
        message: message.to_string(),
        details: Value::Null,
    }
}

fn domain_with(kind: &str, message: impl fmt::Display, details: Value) -> CliError {
    CliError::Domain {
        kind: kind.into(),
        message: message.to_string(),
        details,
    }
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::NotOptimal(_) => domain("lp", e),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        match e {
            SpaceError::Lp(l) => l.into(),
            SpaceError::InvalidGenerators(ref r) => {
                domain_with("invalid-space", &e, serde_json::to_value(r).unwrap_or_default())
            }
            SpaceError::DimensionMismatch { expected, got } => domain_with(
                "dimension-mismatch",
                &e,
                json!({"expected": expected, "got": got}),
            ),
            SpaceError::DependentBasis => domain("dependent-basis", e),
        }
    }
}

impl From<KatetovError> for CliError {
    fn from(e: KatetovError) -> Self {
        match e {
            KatetovError::Space(s) => s.into(),
            KatetovError::Lp(l) => l.into(),
            KatetovError::NotKatetov(r) => domain_with(
                "not-katetov",
                format!("{} violation(s)", r.violations.len()),
                json!({ "violations": r.violations }),
            ),
            other => domain("katetov", other),
        }
    }
}

impl From<AmalgamError> for CliError {
    fn from(e: AmalgamError) -> Self {
        match e {
            AmalgamError::Katetov(k) => k.into(),
            AmalgamError::Space(s) => s.into(),
            AmalgamError::Lp(l) => l.into(),
            AmalgamError::RadiusOutOfRange { r, r0, r1 } => domain_with(
                "radius-out-of-range",
                &e,
                json!({"r": r, "r0": r0, "r1": r1}),
            ),
            AmalgamError::RadiusTooSmall { r, distance } => domain_with(
                "radius-too-small",
                &e,
                json!({"r": r, "distance": distance}),
            ),
            other => domain("amalgam", other),
        }
    }
}

impl From<AellsError> for CliError {
    fn from(e: AellsError) -> Self {
        match e {
            AellsError::Lp(l) => l.into(),
            AellsError::Katetov(k) => k.into(),
            AellsError::Space(s) => s.into(),
            other => domain("arens-eells", other),
        }
    }
}

impl From<GurarijError> for CliError {
    fn from(e: GurarijError) -> Self {
        match e {
            GurarijError::Katetov(k) => k.into(),
            GurarijError::Aells(a) => a.into(),
            GurarijError::Amalgam(a) => a.into(),
            GurarijError::Space(s) => s.into(),
            GurarijError::Lp(l) => l.into(),
            GurarijError::OrbitEscape { element, generator } => domain_with(
                "orbit-escape",
                &e,
                json!({"element": element, "generator": generator}),
            ),
            other => domain("gurarij", other),
        }
    }
}

impl From<UniversalError> for CliError {
    fn from(e: UniversalError) -> Self {
        match e {
            UniversalError::Aells(a) => a.into(),
            UniversalError::Gurarij(g) => g.into(),
            UniversalError::Space(s) => s.into(),
            other => domain("universal", other),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Space(s) => s.into(),
            IoError::Katetov(k) => k.into(),
            IoError::Aells(a) => a.into(),
            IoError::Gurarij(g) => g.into(),
            IoError::Universal(u) => u.into(),
            IoError::UnknownSpace(_) => domain("unknown-space", e),
            IoError::Manifest(_) => domain("manifest", e),
            other => domain("io", other),
        }
    }
}

type Res<T> = Result<T, CliError>;

/// `--in` for `henson`: two tuples `xs` in `e` and `ys` in `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HensonFile {
    pub e: SpaceSpec,
    pub xs: Vec<Vector>,
    pub f: SpaceSpec,
    pub ys: Vec<Vector>,
}

/// `--in` for `ae extend-lip`: a partial function on a pointed metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipFile {
    pub metric: MetricSpec,
    pub values: BTreeMap<String, f64>,
    #[serde(default = "one")]
    pub lipschitz: f64,
}

fn one() -> f64 {
    1.0
}

pub fn parse_vector(s: &str) -> Res<Vector> {
    let v: Result<Vector, _> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect();
    match v {
        Ok(v) if v.iter().all(|x| x.is_finite()) => Ok(v),
        Ok(_) => Err(domain("bad-vector", format!("non-finite entry in {s:?}"))),
        Err(e) => Err(domain("bad-vector", format!("{s:?}: {e}"))),
    }
}

/// Vectors separated by `;`.
pub fn parse_basis(s: &str) -> Res<Vec<Vector>> {
    s.split(';').map(parse_vector).collect()
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn space_arg(label: &str) -> Res<SpaceRef> {
    Ok(Arc::new(resolve_space_label(label, Path::new("."))?))
}

fn load_katetov(path: &Path) -> Res<(KatetovFile, SpaceRef)> {
    let file: KatetovFile = read_json(path)?;
    let space = file.space.resolve(&base_dir(path))?;
    Ok((file, space))
}

/// Loads envelopes over one common space; each is checked to be Katětov.
fn load_envelopes(paths: &[PathBuf]) -> Res<Vec<ConvexKatetovEnvelope>> {
    let mut out: Vec<ConvexKatetovEnvelope> = Vec::with_capacity(paths.len());
    for p in paths {
        let (file, mut space) = load_katetov(p)?;
        if let Some(first) = out.first() {
            if **first.space() != *space {
                return Err(domain(
                    "space-mismatch",
                    format!("{} is over a different space", p.display()),
                ));
            }
            space = first.space().clone();
        }
        out.push(convexify(&file.to_finite(space)?)?);
    }
    Ok(out)
}

fn space_summary(s: &Space) -> Value {
    json!({
        "label": s.label(),
        "dim": s.dim(),
        "kind": if s.as_poly().is_some() { "explicit" } else { "oracle" },
    })
}

pub fn run(cmd: &Command, common: &Common) -> Res<Value> {
    let tol = common.tolerance;
    match cmd {
        Command::NormEval { space, vector } => {
            let s = space_arg(space)?;
            let v = parse_vector(vector)?;
            let (value, witness) = s.norm_with_witness(&v)?;
            Ok(json!({"space": space_summary(&s), "vector": v, "value": value, "witness": witness}))
        }
        Command::DualNorm { space, vector } => {
            let s = space_arg(space)?;
            let f = parse_vector(vector)?;
            let value = s.dual_norm(&f)?;
            Ok(json!({"space": space_summary(&s), "functional": f, "value": value}))
        }
        Command::Katetov(k) => katetov(k),
        Command::Amalgam(a) => amalgam(a),
        Command::Henson(h) => henson(h),
        Command::Ae(a) => ae(a, tol),
        Command::Build {
            space,
            rounds,
            radii,
            envelopes,
            support,
            symmetry_axis,
        } => {
            let start = match &*space_arg(space)? {
                Space::Poly(p) => p.clone(),
                Space::Oracle(_) => return Err(domain("build", "start space must be explicit")),
            };
            let mut params = BuildParams::new(start, *rounds, common.seed);
            if !radii.is_empty() {
                params.radii = radii.clone();
            }
            params.envelopes_per_round = *envelopes;
            params.support_size = *support;
            if let Some(axis) = symmetry_axis {
                if *axis >= params.start.dim() {
                    return Err(domain("build", format!("no coordinate {axis}")));
                }
                params.symmetry = sign_flip_group(params.start.dim(), *axis);
            }
            let state = build(&params)?;
            let manifest = BuildManifest::from_state(&params, &state);
            let mut out = json!({
                "spaces": manifest.spaces,
                "rounds": manifest.rounds,
            });
            match &common.out {
                Some(p) => {
                    std::fs::write(p, manifest.to_json())
                        .map_err(|e| domain("io", format!("{}: {e}", p.display())))?;
                    out["manifest"] = json!(p.display().to_string());
                }
                None => out["manifest"] = serde_json::to_value(&manifest).unwrap_or_default(),
            }
            Ok(out)
        }
        Command::GurarijTest {
            space,
            basis,
            input,
            radius,
            net,
        } => {
            let e = space_arg(space)?;
            let basis = parse_basis(basis)?;
            for b in &basis {
                e.check_dim(b.len())?;
            }
            let pull: SpaceRef = Arc::new(e.subspace_pullback(&basis)?.into());
            let file: KatetovFile = read_json(input)?;
            let xi = convexify(&file.to_finite(pull)?)?;
            let o = gurarij_extension_test(&e, &basis, &xi, *radius, *net)?;
            Ok(json!({
                "space": space_summary(&o.space),
                "u_index": o.u_index,
                "epsilon": o.epsilon,
                "epsilon_inside": o.epsilon_inside,
                "bound": o.bound,
                "within_bound": o.epsilon <= o.bound + tol,
                "net_points": o.net_points,
                "envelope": {"support": o.envelope.points(), "values": o.envelope.values()},
            }))
        }
        Command::PerturbConstants {
            space,
            basis,
            vector,
            epsilon,
        } => {
            let e = space_arg(space)?;
            let basis = parse_basis(basis)?;
            let v = parse_vector(vector)?;
            let pc = perturbation_constants(&e, &basis, &v)?;
            let mut out = serde_json::to_value(pc).unwrap_or_default();
            if let Some(eps) = epsilon {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(domain("bad-epsilon", format!("epsilon {eps} must be positive")));
                }
                out["epsilon"] = json!(eps);
                out["delta"] = json!(pc.delta(*eps));
            }
            Ok(out)
        }
        Command::TelemanDemo {
            input,
            group,
            weight,
            samples,
        } => {
            let g = match input {
                Some(p) => read_json::<GroupFile>(p)?.to_group()?,
                None => named_group(group, *weight)?,
            };
            let metric = left_invariant_metric(&g)?;
            let t = teleman_embed(&g)?;
            let r = check_teleman(&t, *samples, common.seed)?;
            let report = serde_json::to_value(&r).unwrap_or_default();
            if !r.passed(tol) {
                return Err(domain_with("teleman-failed", "action check failed", report));
            }
            Ok(json!({
                "group": GroupFile::from_group(&g),
                "metric": metric,
                "report": report,
                "passed": true,
            }))
        }
        Command::GembedCheck { input, level } => {
            let manifest: BuildManifest = read_json(input)?;
            let state = manifest.replay()?;
            let space = state
                .spaces
                .get(*level)
                .ok_or_else(|| domain("no-such-level", format!("level {level} not in the chain")))?
                .clone();
            let mats = match state.group.get(*level) {
                Some(g) if !g.is_empty() => g.clone(),
                _ => vec![gurarij_core::mat::identity(space.dim())],
            };
            let action = mats
                .into_iter()
                .map(|m| LinearIsometryWitness::new(m, space.clone(), 1e-8))
                .collect::<Result<Vec<_>, _>>()?;
            let r = verify_g_embedding(&state, *level, &action)?;
            let report = serde_json::to_value(&r).unwrap_or_default();
            if !r.passed() {
                return Err(domain_with("not-g-embedding", "g-embedding check failed", report));
            }
            Ok(json!({"report": report, "passed": true}))
        }
        Command::Acceptance { only } => {
            let print = |r: &acceptance::CriterionResult| eprintln!("{}", r.line());
            let results = if only.is_empty() {
                acceptance::run_all(common.seed, print)
            } else {
                only.iter()
                    .map(|&id| {
                        let r = acceptance::run_criterion(id, common.seed);
                        print(&r);
                        r
                    })
                    .collect()
            };
            let failed = results.iter().filter(|r| !r.passed).count();
            let out = json!({
                "criteria": results,
                "passed": results.len() - failed,
                "failed": failed,
            });
            if failed > 0 {
                return Err(domain_with(
                    "acceptance-failed",
                    format!("{failed} criterion(s) failed"),
                    out,
                ));
            }
            Ok(out)
        }
    }
}

fn named_group(name: &str, weight: f64) -> Res<FiniteGroupPresentation> {
    if name == "s3" {
        return Ok(FiniteGroupPresentation::symmetric3(weight)?);
    }
    match name.strip_prefix('z').and_then(|n| n.parse::<usize>().ok()) {
        Some(n) => Ok(FiniteGroupPresentation::cyclic(n, weight)?),
        None => Err(domain("unknown-group", format!("{name:?}; expected zN or s3"))),
    }
}

fn katetov(k: &KatetovCmd) -> Res<Value> {
    match k {
        KatetovCmd::Check { input } => {
            let (file, space) = load_katetov(input)?;
            let fk = file.to_finite(space)?;
            let report = is_katetov(&fk)?;
            if !report.is_empty() {
                return Err(KatetovError::NotKatetov(report).into());
            }
            Ok(json!({"katetov": true, "points": fk.len()}))
        }
        KatetovCmd::Extend { input, vector } => {
            let (file, space) = load_katetov(input)?;
            let fk = file.to_finite(space)?;
            let x = parse_vector(vector)?;
            Ok(json!({"value": extend_min_plus(&fk, &x)?}))
        }
        KatetovCmd::Convexify {
            input,
            write,
            vector,
        } => {
            let (file, space) = load_katetov(input)?;
            let ck = convexify(&file.to_finite(space)?)?;
            let canon = KatetovFile::from_envelope(file.space.clone(), &ck);
            if let Some(p) = write {
                write_json(p, &canon)?;
            }
            let mut out = json!({"katetov": canon});
            if let Some(v) = vector {
                let x = parse_vector(v)?;
                out["value"] = json!(ck.eval(&x)?);
                out["value_primal"] = json!(ck.eval_primal(&x)?);
            }
            Ok(out)
        }
        KatetovCmd::Dist { inputs } => {
            let cks = load_envelopes(inputs)?;
            let (value, witness) = cks[0].sup_distance_witness(&cks[1])?;
            Ok(json!({"value": value, "witness": witness}))
        }
        KatetovCmd::OnePointNorm {
            input,
            alpha,
            vector,
        } => {
            let ck = load_envelopes(std::slice::from_ref(input))?.remove(0);
            let a = parse_vector(vector)?;
            Ok(json!({"value": ck.one_point_norm(*alpha, &a)?}))
        }
    }
}

fn amalgam(a: &AmalgamCmd) -> Res<Value> {
    match a {
        AmalgamCmd::Bounds { inputs } => {
            let cks = load_envelopes(inputs)?;
            let (r0, r1) = amalgam_bounds(&cks[0], &cks[1])?;
            Ok(json!({"r0": r0, "r1": r1}))
        }
        AmalgamCmd::Norm {
            inputs,
            radius,
            vector,
            alpha,
            beta,
        } => {
            let mut cks = load_envelopes(inputs)?;
            let ck1 = cks.pop().expect("two envelopes");
            let ck0 = cks.pop().expect("two envelopes");
            let tpe = TwoPointExtension::new(ck0, ck1, *radius)?;
            let a = parse_vector(vector)?;
            let value = two_point_norm(&tpe, &a, *alpha, *beta)?;
            Ok(json!({"value": value, "r0": tpe.r0, "r1": tpe.r1, "t": tpe.t}))
        }
    }
}

fn load_henson(input: &Path) -> Res<(HensonFile, SpaceRef, SpaceRef)> {
    let file: HensonFile = read_json(input)?;
    let dir = base_dir(input);
    let e = file.e.resolve(&dir)?;
    let f = file.f.resolve(&dir)?;
    Ok((file, e, f))
}

fn henson(h: &HensonCmd) -> Res<Value> {
    match h {
        HensonCmd::Dist { input, exact } => {
            let (file, e, f) = load_henson(input)?;
            let r = if *exact {
                henson_distance_exact(&e, &file.xs, &f, &file.ys)?
            } else {
                henson_distance(&e, &file.xs, &f, &file.ys)?
            };
            Ok(serde_json::to_value(r).unwrap_or_default())
        }
        HensonCmd::AmalgamNorm {
            input,
            radius,
            vector_e,
            vector_f,
        } => {
            let (file, e, f) = load_henson(input)?;
            let r = match radius {
                Some(r) => *r,
                None => henson_distance(&e, &file.xs, &f, &file.ys)?.value,
            };
            let ta = TupleAmalgam::new(e, file.xs, f, file.ys, r)?;
            let ze = parse_vector(vector_e)?;
            let zf = parse_vector(vector_f)?;
            Ok(json!({"value": tuple_amalgam_norm(&ta, &ze, &zf)?, "radius": r}))
        }
    }
}

fn load_relative(input: &Path) -> Res<RelativeSpaceOverE> {
    let file: RelativeFile = read_json(input)?;
    Ok(file.to_relative(&base_dir(input))?)
}

fn ae(a: &AeCmd, tol: f64) -> Res<Value> {
    match a {
        AeCmd::Norm { input } => {
            let file: MoleculeFile = read_json(input)?;
            let metric = file.metric.resolve(&base_dir(input))?;
            let r = ae_norm(&metric, &file.molecule())?;
            let gap = r.gap();
            let mut out = serde_json::to_value(&r).unwrap_or_default();
            out["gap"] = json!(gap);
            out["certified"] = json!(gap <= tol * (1.0 + r.value.abs()));
            Ok(out)
        }
        AeCmd::ExtendLip { input } => {
            let file: LipFile = read_json(input)?;
            let metric = file.metric.resolve(&base_dir(input))?;
            let ext = lipschitz_extend(&metric, &file.values, file.lipschitz)?;
            Ok(json!({"extension": ext, "lipschitz": file.lipschitz}))
        }
        AeCmd::RelativeNorm {
            input,
            vector,
            alpha,
        } => {
            let rs = load_relative(input)?;
            let a = parse_vector(vector)?;
            let al = parse_vector(alpha)?;
            Ok(json!({"value": relative_ae_norm(&rs, &a, &al)?}))
        }
        AeCmd::Adjoin { input } => {
            let rs = load_relative(input)?;
            let label = format!("{}+{}", rs.base().label(), rs.adjoined().len());
            let space: Space = adjoin(&rs, label).into();
            let d = rs.base().dim();
            let m = rs.adjoined().len();
            let mut pair = vec![vec![0.0; m]; m];
            for (i, row) in pair.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = rs.pair_distance(i, j);
                }
            }
            let mut unit_norms = Vec::with_capacity(m);
            for i in 0..m {
                let mut u = vec![0.0; d + m];
                u[d + i] = 1.0;
                unit_norms.push(space.norm(&u)?);
            }
            let mut out = json!({
                "space": space_summary(&space),
                "pair_distances": pair,
                "unit_norms": unit_norms,
            });
            // small results are also given by their dual generators
            if space.dim() <= 4 {
                if let Ok(p) = space.to_explicit() {
                    out["explicit"] = serde_json::to_value(SpaceFile::from_space(&p))
                        .unwrap_or_default();
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_parse() {
        assert_eq!(parse_vector("3,-4").unwrap(), vec![3.0, -4.0]);
        assert_eq!(parse_vector(" 1 , 2.5e-1").unwrap(), vec![1.0, 0.25]);
        assert!(parse_vector("1,,2").is_err());
        assert!(parse_vector("nan").is_err());
        assert_eq!(parse_basis("1,0;0,1").unwrap().len(), 2);
    }

    #[test]
    fn numerical_failures_are_internal() {
        let e: CliError = KatetovError::Lp(LpError::NumericalFailure("x".into())).into();
        assert!(matches!(e, CliError::Internal(_)));
        let e: CliError = GurarijError::InvalidParams("x".into()).into();
        assert!(matches!(e, CliError::Domain { .. }));
    }

    #[test]
    fn groups_by_name() {
        assert_eq!(named_group("z5", 1.0).unwrap().order(), 5);
        assert_eq!(named_group("s3", 0.5).unwrap().order(), 6);
        assert!(named_group("q8", 1.0).is_err());
    }
}
