//! JSON file formats: spaces, Katětov data, molecules, relative spaces,
//! groups and build manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aells::{AellsError, Molecule, PointedFiniteMetric, RelativeSpaceOverE};
use crate::gurarij::{BuildParams, BuildState, GurarijError};
use crate::katetov::{ConvexKatetovEnvelope, FiniteKatetov, KatetovError};
use crate::mat::Matrix;
use crate::space::{PolyNormedSpace, Space, SpaceError, SpaceRef};
use crate::universal::{FiniteGroupPresentation, UniversalError};
use crate::Vector;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Write { path: PathBuf, message: String },
    #[error("{path}: invalid JSON: {message}")]
    Json { path: PathBuf, message: String },
    #[error("unknown space {0:?}")]
    UnknownSpace(String),
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Katetov(#[from] KatetovError),
    #[error(transparent)]
    Aells(#[from] AellsError),
    #[error(transparent)]
    Gurarij(#[from] GurarijError),
    #[error(transparent)]
    Universal(#[from] UniversalError),
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| IoError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub label: String,
    pub dim: usize,
    pub dual_generators: Vec<Vector>,
    #[serde(default)]
    pub symmetric_closure: bool,
}

impl SpaceFile {
    pub fn to_space(&self) -> Result<PolyNormedSpace, IoError> {
        Ok(PolyNormedSpace::new(
            self.label.clone(),
            self.dim,
            self.dual_generators.clone(),
            self.symmetric_closure,
        )?)
    }

    pub fn from_space(p: &PolyNormedSpace) -> Self {
        SpaceFile {
            label: p.label().to_string(),
            dim: p.dim(),
            dual_generators: p.generators().to_vec(),
            symmetric_closure: false,
        }
    }
}

/// A space given by name (`l1:d`, `linf:d` or a path to a space file) or
/// inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Label(String),
    Inline(SpaceFile),
}

fn parse_standard(s: &str) -> Option<PolyNormedSpace> {
    let (kind, d) = s.split_once(':')?;
    let d: usize = d.trim().parse().ok()?;
    if d == 0 {
        return None;
    }
    match kind.trim() {
        "l1" => Some(PolyNormedSpace::l1(d)),
        "linf" => Some(PolyNormedSpace::linf(d)),
        _ => None,
    }
}

/// Resolves a space name; relative paths are taken from `base_dir`.
pub fn resolve_space_label(label: &str, base_dir: &Path) -> Result<Space, IoError> {
    if let Some(p) = parse_standard(label) {
        return Ok(p.into());
    }
    let path = base_dir.join(label);
    if path.is_file() {
        let f: SpaceFile = read_json(&path)?;
        return Ok(f.to_space()?.into());
    }
    Err(IoError::UnknownSpace(label.to_string()))
}

impl SpaceSpec {
    pub fn resolve(&self, base_dir: &Path) -> Result<SpaceRef, IoError> {
        match self {
            SpaceSpec::Label(l) => Ok(Arc::new(resolve_space_label(l, base_dir)?)),
            SpaceSpec::Inline(f) => Ok(Arc::new(f.to_space()?.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatetovFile {
    pub space: SpaceSpec,
    pub support: Vec<Vector>,
    pub values: Vec<f64>,
    /// Set when the values already agree with the convex envelope on the
    /// support.
    #[serde(default)]
    pub canonical: bool,
}

impl KatetovFile {
    pub fn to_finite(&self, space: SpaceRef) -> Result<FiniteKatetov, IoError> {
        Ok(FiniteKatetov::new(
            space,
            self.support.clone(),
            self.values.clone(),
        )?)
    }

    /// The envelope of the generator; canonicalized on load.
    pub fn to_envelope(&self, space: SpaceRef) -> Result<ConvexKatetovEnvelope, IoError> {
        Ok(ConvexKatetovEnvelope::from_generator(
            space,
            self.support.clone(),
            self.values.clone(),
        )?)
    }

    pub fn from_envelope(space: SpaceSpec, ck: &ConvexKatetovEnvelope) -> Self {
        KatetovFile {
            space,
            support: ck.points().to_vec(),
            values: ck.values().to_vec(),
            canonical: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Path(String),
    Inline(PointedFiniteMetric),
}

impl MetricSpec {
    pub fn resolve(&self, base_dir: &Path) -> Result<PointedFiniteMetric, IoError> {
        let m = match self {
            MetricSpec::Path(p) => read_json::<PointedFiniteMetric>(&base_dir.join(p))?,
            MetricSpec::Inline(m) => m.clone(),
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeFile {
    pub metric: MetricSpec,
    pub entries: BTreeMap<String, f64>,
}

impl MoleculeFile {
    pub fn molecule(&self) -> Molecule {
        Molecule::new(self.entries.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeFile {
    pub base_space: SpaceSpec,
    pub adjoined: Vec<KatetovFile>,
}

impl RelativeFile {
    /// Adjoined envelopes must live on the base space (by name or equal
    /// content).
    pub fn to_relative(&self, base_dir: &Path) -> Result<RelativeSpaceOverE, IoError> {
        let base = self.base_space.resolve(base_dir)?;
        let adjoined = self
            .adjoined
            .iter()
            .map(|k| {
                let s = k.space.resolve(base_dir)?;
                if *s != *base {
                    return Err(IoError::Katetov(KatetovError::SpaceMismatch));
                }
                k.to_envelope(base.clone())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RelativeSpaceOverE::new(base, adjoined)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFile {
    pub elements: Vec<String>,
    pub table: Vec<Vec<String>>,
    pub identity: String,
    pub generators: BTreeMap<String, f64>,
}

impl GroupFile {
    pub fn to_group(&self) -> Result<FiniteGroupPresentation, IoError> {
        Ok(FiniteGroupPresentation::from_labels(
            self.elements.clone(),
            &self.table,
            &self.identity,
            &self.generators,
        )?)
    }

    pub fn from_group(g: &FiniteGroupPresentation) -> Self {
        GroupFile {
            elements: g.elements().to_vec(),
            table: g.label_table(),
            identity: g.elements()[g.identity()].clone(),
            generators: g
                .generators()
                .iter()
                .map(|&(s, w)| (g.elements()[s].clone(), w))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    pub index: usize,
    pub seed: u64,
    pub radius: f64,
    pub envelopes: usize,
    /// Label of the space the round's envelopes live on.
    pub over: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub label: String,
    pub dim: usize,
    pub kind: String,
    /// Adjoined points on top of the start space.
    pub adjoined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestParams {
    pub rounds: usize,
    pub envelopes_per_round: usize,
    pub support_size: usize,
    pub radii: Vec<f64>,
    pub symmetry: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjoinedEntry {
    pub round: usize,
    #[serde(flatten)]
    pub envelope: KatetovFile,
}

/// Log of a build; enough to replay the chain exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub seed: u64,
    pub start: SpaceFile,
    pub params: ManifestParams,
    pub rounds: Vec<RoundEntry>,
    pub spaces: Vec<SpaceSummary>,
    pub adjoined: Vec<AdjoinedEntry>,
}

impl BuildManifest {
    pub fn from_state(params: &BuildParams, state: &BuildState) -> Self {
        let spaces: Vec<SpaceSummary> = state
            .spaces
            .iter()
            .map(|s| SpaceSummary {
                label: s.label().to_string(),
                dim: s.dim(),
                kind: match **s {
                    Space::Poly(_) => "explicit".into(),
                    Space::Oracle(_) => "oracle".into(),
                },
                adjoined: s.dim() - params.start.dim(),
            })
            .collect();
        let mut level = 0;
        let mut rounds = Vec::new();
        let mut adjoined = Vec::new();
        for r in &state.rounds {
            let over = spaces[level].label.clone();
            for ck in &r.envelopes {
                adjoined.push(AdjoinedEntry {
                    round: r.index,
                    envelope: KatetovFile::from_envelope(SpaceSpec::Label(over.clone()), ck),
                });
            }
            rounds.push(RoundEntry {
                index: r.index,
                seed: r.seed,
                radius: r.radius,
                envelopes: r.envelopes.len(),
                over,
            });
            if !r.envelopes.is_empty() {
                level += 1;
            }
        }
        BuildManifest {
            seed: params.seed,
            start: SpaceFile::from_space(&params.start),
            params: ManifestParams {
                rounds: params.rounds,
                envelopes_per_round: params.envelopes_per_round,
                support_size: params.support_size,
                radii: params.radii.clone(),
                symmetry: params.symmetry.clone(),
            },
            rounds,
            spaces,
            adjoined,
        }
    }

    pub fn params(&self) -> Result<BuildParams, IoError> {
        Ok(BuildParams {
            start: self.start.to_space()?,
            rounds: self.params.rounds,
            envelopes_per_round: self.params.envelopes_per_round,
            support_size: self.params.support_size,
            radii: self.params.radii.clone(),
            seed: self.seed,
            symmetry: self.params.symmetry.clone(),
        })
    }

    /// Rebuilds the chain from the logged envelopes.
    pub fn replay(&self) -> Result<BuildState, IoError> {
        let mut per_round: Vec<(u64, f64, Vec<(Vec<Vector>, Vec<f64>)>)> = self
            .rounds
            .iter()
            .map(|r| (r.seed, r.radius, Vec::new()))
            .collect();
        for a in &self.adjoined {
            let slot = per_round
                .get_mut(a.round)
                .ok_or_else(|| IoError::Manifest(format!("envelope for missing round {}", a.round)))?;
            slot.2
                .push((a.envelope.support.clone(), a.envelope.values.clone()));
        }
        for (r, slot) in self.rounds.iter().zip(&per_round) {
            if r.envelopes != slot.2.len() {
                return Err(IoError::Manifest(format!(
                    "round {} lists {} envelopes, found {}",
                    r.index,
                    r.envelopes,
                    slot.2.len()
                )));
            }
        }
        Ok(BuildState::replay(
            self.start.to_space()?,
            self.params.symmetry.clone(),
            per_round,
        )?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}
