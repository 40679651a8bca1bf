//! Finite shadows of universality: a finite group acting isometrically on
//! an Arens-Eells space, and induced isometries along the tower.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aells::{ae_norm, AellsError, Molecule, PointedFiniteMetric};
use crate::gurarij::{lift_isometry, push_forward, BuildState, GurarijError};
use crate::mat::{self, Matrix};
use crate::space::{SpaceError, SpaceRef};
use crate::Vector;

/// Label of the adjoined base point.
pub const STAR: &str = "*";

/// Vectors sampled when certifying a witness.
pub const WITNESS_SAMPLES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UniversalError {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("generating set does not connect {0:?} to the identity")]
    Disconnected(String),
    #[error("matrix moves a sampled vector's norm by {deviation}")]
    NotIsometry { deviation: f64 },
    #[error("no space {0} in the chain")]
    NoSuchLevel(usize),
    #[error(transparent)]
    Aells(#[from] AellsError),
    #[error(transparent)]
    Gurarij(#[from] GurarijError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A finite group by its multiplication table.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroupPresentation {
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    generators: Vec<(usize, f64)>,
}

fn bad<T>(s: impl Into<String>) -> Result<T, UniversalError> {
    Err(UniversalError::InvalidGroup(s.into()))
}

impl FiniteGroupPresentation {
    pub fn new(
        elements: Vec<String>,
        table: Vec<Vec<usize>>,
        identity: usize,
        generators: Vec<(usize, f64)>,
    ) -> Result<Self, UniversalError> {
        let g = FiniteGroupPresentation {
            elements,
            table,
            identity,
            generators,
        };
        g.validate()?;
        Ok(g)
    }

    /// Builds from labels, as in a group file.
    pub fn from_labels(
        elements: Vec<String>,
        table: &[Vec<String>],
        identity: &str,
        generators: &BTreeMap<String, f64>,
    ) -> Result<Self, UniversalError> {
        let idx = |l: &str| -> Result<usize, UniversalError> {
            elements
                .iter()
                .position(|e| e == l)
                .ok_or_else(|| UniversalError::InvalidGroup(format!("unknown element {l:?}")))
        };
        let t = table
            .iter()
            .map(|row| row.iter().map(|l| idx(l)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let id = idx(identity)?;
        let gens = generators
            .iter()
            .map(|(l, &w)| Ok((idx(l)?, w)))
            .collect::<Result<Vec<_>, UniversalError>>()?;
        Self::new(elements, t, id, gens)
    }

    /// `ℤ/n` with generator `1` of the given weight.
    pub fn cyclic(n: usize, weight: f64) -> Result<Self, UniversalError> {
        if n == 0 {
            return bad("empty group");
        }
        let elements = (0..n).map(|i| format!("g{i}")).collect();
        let table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        let gens = if n > 1 { vec![(1, weight)] } else { Vec::new() };
        Self::new(elements, table, 0, gens)
    }

    /// `S₃` generated by the transpositions `(1 2)` and `(2 3)`.
    pub fn symmetric3(weight: f64) -> Result<Self, UniversalError> {
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [1, 0, 2],
            [0, 2, 1],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let labels = ["e", "(12)", "(23)", "(123)", "(132)", "(13)"];
        // (a·b)(i) = a(b(i))
        let table = perms
            .iter()
            .map(|a| {
                perms
                    .iter()
                    .map(|b| {
                        let c = [a[b[0]], a[b[1]], a[b[2]]];
                        perms.iter().position(|p| *p == c).expect("closed")
                    })
                    .collect()
            })
            .collect();
        Self::new(
            labels.iter().map(|s| s.to_string()).collect(),
            table,
            0,
            vec![(1, weight), (2, weight)],
        )
    }

    pub fn validate(&self) -> Result<(), UniversalError> {
        let n = self.elements.len();
        if n == 0 {
            return bad("empty group");
        }
        for (i, a) in self.elements.iter().enumerate() {
            if a == STAR {
                return bad("the label \"*\" is reserved");
            }
            if self.elements[..i].contains(a) {
                return bad(format!("duplicate element {a:?}"));
            }
        }
        if self.table.len() != n || self.table.iter().any(|r| r.len() != n) {
            return bad("table is not square of the group order");
        }
        if self.table.iter().flatten().any(|&c| c >= n) {
            return bad("table entry out of range");
        }
        if self.identity >= n {
            return bad("identity out of range");
        }
        let e = self.identity;
        for a in 0..n {
            if self.table[e][a] != a || self.table[a][e] != a {
                return bad(format!("{:?} is not an identity", self.elements[e]));
            }
            if !(0..n).any(|b| self.table[a][b] == e && self.table[b][a] == e) {
                return bad(format!("{:?} has no inverse", self.elements[a]));
            }
        }
        let check = |a: usize, b: usize, c: usize| -> Result<(), UniversalError> {
            if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]] {
                return bad(format!(
                    "not associative on ({}, {}, {})",
                    self.elements[a], self.elements[b], self.elements[c]
                ));
            }
            Ok(())
        };
        if n <= 24 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        check(a, b, c)?;
                    }
                }
            }
        } else {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..24 * 24 * 24 {
                check(
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                )?;
            }
        }
        for &(g, w) in &self.generators {
            if g >= n {
                return bad("generator out of range");
            }
            if !(w > 0.0) || !w.is_finite() {
                return bad(format!("generator {:?} has weight {w}", self.elements[g]));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn generators(&self) -> &[(usize, f64)] {
        &self.generators
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        (0..self.order())
            .find(|&b| self.table[a][b] == self.identity)
            .expect("validated")
    }

    /// Table with labels, as written to group files.
    pub fn label_table(&self) -> Vec<Vec<String>> {
        self.table
            .iter()
            .map(|r| r.iter().map(|&c| self.elements[c].clone()).collect())
            .collect()
    }
}

/// Word metric of the weighted generators (edges `h → hs` and `h → hs⁻¹`),
/// capped at 1, on `H ∪ {*}` with `*` at distance 1 from everything and as
/// base point. Right multiplication makes it left-invariant.
pub fn left_invariant_metric(
    g: &FiniteGroupPresentation,
) -> Result<PointedFiniteMetric, UniversalError> {
    let n = g.order();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (h, row) in d.iter_mut().enumerate() {
        row[h] = 0.0;
    }
    for h in 0..n {
        for &(s, w) in g.generators() {
            for t in [g.mul(h, s), g.mul(h, g.inverse(s))] {
                if w < d[h][t] {
                    d[h][t] = w;
                    d[t][h] = w;
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let e = g.identity();
    if let Some(h) = (0..n).find(|&h| !d[e][h].is_finite()) {
        return Err(UniversalError::Disconnected(g.elements()[h].clone()));
    }
    let mut full = vec![vec![1.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            full[i][j] = d[i][j].min(1.0);
        }
    }
    full[n][n] = 0.0;
    let mut labels = g.elements().to_vec();
    labels.push(STAR.to_string());
    Ok(PointedFiniteMetric::new(labels, full, STAR)?)
}

/// A linear map certified to preserve a space's norm on random samples.
#[derive(Debug, Clone)]
pub struct LinearIsometryWitness {
    matrix: Matrix,
    space: SpaceRef,
    deviation: f64,
}

/// Largest `|‖Mv‖ − ‖v‖| / ‖v‖` over `samples` Gaussian vectors.
pub fn isometry_deviation(
    m: &Matrix,
    space: &SpaceRef,
    samples: usize,
    seed: u64,
) -> Result<f64, UniversalError> {
    let d = space.dim();
    if m.len() != d || m.iter().any(|r| r.len() != d) {
        return Err(SpaceError::DimensionMismatch {
            expected: d * d,
            got: m.iter().map(|r| r.len()).sum(),
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let v: Vector = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = space.norm(&v)?;
        if a == 0.0 {
            continue;
        }
        let b = space.norm(&mat::apply(m, &v))?;
        worst = worst.max((a - b).abs() / a);
    }
    Ok(worst)
}

impl LinearIsometryWitness {
    /// Certifies `matrix` on [`WITNESS_SAMPLES`] vectors to within `tol`.
    pub fn new(matrix: Matrix, space: SpaceRef, tol: f64) -> Result<Self, UniversalError> {
        let deviation = isometry_deviation(&matrix, &space, WITNESS_SAMPLES, 0x1507)?;
        if deviation > tol {
            return Err(UniversalError::NotIsometry { deviation });
        }
        Ok(LinearIsometryWitness {
            matrix,
            space,
            deviation,
        })
    }

    pub fn identity(space: SpaceRef) -> Self {
        LinearIsometryWitness {
            matrix: mat::identity(space.dim()),
            space,
            deviation: 0.0,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn deviation(&self) -> f64 {
        self.deviation
    }
}

/// `H` acting on `Æ(H ∪ {*}, *)` by left translation of coordinates.
#[derive(Debug, Clone)]
pub struct TelemanEmbedding {
    pub group: FiniteGroupPresentation,
    pub metric: PointedFiniteMetric,
    /// `ρ(k)`: the permutation matrix `e_h ↦ e_{kh}`.
    pub rho: Vec<Matrix>,
}

/// The molecule `Σ c_h (δ_h − δ_*)`.
pub fn coords_to_molecule(g: &FiniteGroupPresentation, c: &[f64]) -> Molecule {
    let mut entries = BTreeMap::new();
    let mut total = 0.0;
    for (h, &x) in c.iter().enumerate() {
        if x != 0.0 {
            entries.insert(g.elements()[h].clone(), x);
            total += x;
        }
    }
    if total != 0.0 {
        entries.insert(STAR.to_string(), -total);
    }
    Molecule::new(entries)
}

pub fn teleman_embed(g: &FiniteGroupPresentation) -> Result<TelemanEmbedding, UniversalError> {
    let metric = left_invariant_metric(g)?;
    let n = g.order();
    let rho = (0..n)
        .map(|k| {
            let mut m = vec![vec![0.0; n]; n];
            for h in 0..n {
                m[g.mul(k, h)][h] = 1.0;
            }
            m
        })
        .collect();
    Ok(TelemanEmbedding {
        group: g.clone(),
        metric,
        rho,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemanReport {
    pub order: usize,
    pub homomorphism: bool,
    pub injective: bool,
    /// `max |‖ρ(g)δ_e − ρ(h)δ_e‖ − d(g, h)|` over all pairs.
    pub orbit_error: f64,
    /// Largest change of the Arens-Eells norm under some `ρ(k)` on the
    /// sampled molecules.
    pub norm_deviation: f64,
    pub molecules: usize,
}

impl TelemanReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.homomorphism && self.injective && self.orbit_error <= tol && self.norm_deviation <= tol
    }
}

pub fn check_teleman(
    t: &TelemanEmbedding,
    molecules: usize,
    seed: u64,
) -> Result<TelemanReport, UniversalError> {
    let g = &t.group;
    let n = g.order();
    let mut homomorphism = true;
    for a in 0..n {
        for b in 0..n {
            if mat::mul(&t.rho[a], &t.rho[b]) != t.rho[g.mul(a, b)] {
                homomorphism = false;
            }
        }
    }
    let injective = (0..n).all(|a| (0..a).all(|b| t.rho[a] != t.rho[b]));
    let mut delta_e = vec![0.0; n];
    delta_e[g.identity()] = 1.0;
    let mut orbit_error: f64 = 0.0;
    for a in 0..n {
        for b in 0..a {
            let ra = mat::apply(&t.rho[a], &delta_e);
            let rb = mat::apply(&t.rho[b], &delta_e);
            let diff: Vector = ra.iter().zip(&rb).map(|(x, y)| x - y).collect();
            let v = ae_norm(&t.metric, &coords_to_molecule(g, &diff))?.value;
            let d = t.metric.dist(&g.elements()[a], &g.elements()[b])?;
            orbit_error = orbit_error.max((v - d).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut norm_deviation: f64 = 0.0;
    for i in 0..molecules {
        let c: Vector = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let base = ae_norm(&t.metric, &coords_to_molecule(g, &c))?.value;
        let k = i % n;
        let moved = ae_norm(&t.metric, &coords_to_molecule(g, &mat::apply(&t.rho[k], &c)))?.value;
        norm_deviation = norm_deviation.max((base - moved).abs());
    }
    Ok(TelemanReport {
        order: n,
        homomorphism,
        injective,
        orbit_error,
        norm_deviation,
        molecules,
    })
}

/// Round whose adjoined envelopes produced `spaces[level + 1]`.
fn round_for_level(state: &BuildState, level: usize) -> Result<usize, UniversalError> {
    state
        .rounds
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.envelopes.is_empty())
        .nth(level)
        .map(|(i, _)| i)
        .ok_or(UniversalError::NoSuchLevel(level + 1))
}

/// `Θφ` on `E_{n+1}`: `φ` on `E_n` and the permutation `ξ ↦ ξ∘φ⁻¹` of the
/// adjoined points.
pub fn induced_isometry(
    state: &BuildState,
    level: usize,
    phi: &LinearIsometryWitness,
) -> Result<LinearIsometryWitness, UniversalError> {
    let (m, next) = induced_matrix(state, level, phi, 0)?;
    LinearIsometryWitness::new(m, next, 1e-8)
}

fn induced_matrix(
    state: &BuildState,
    level: usize,
    phi: &LinearIsometryWitness,
    element: usize,
) -> Result<(Matrix, SpaceRef), UniversalError> {
    let e = state
        .spaces
        .get(level)
        .ok_or(UniversalError::NoSuchLevel(level))?;
    e.check_dim(phi.matrix().len())?;
    let next = state
        .spaces
        .get(level + 1)
        .ok_or(UniversalError::NoSuchLevel(level + 1))?;
    let round = round_for_level(state, level)?;
    let m = lift_isometry(e, &state.rounds[round].envelopes, phi.matrix(), element)?;
    Ok((m, next.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GEmbeddingReport {
    pub level: usize,
    pub elements: usize,
    /// Each `Θφ` restricts to `φ` on `E_n` and keeps `E_n` invariant.
    pub extension: bool,
    /// `Θ(φψ) = ΘφΘψ` for all pairs.
    pub homomorphism: bool,
    /// First pair whose product is missing from the action or violates the
    /// homomorphism law.
    pub failing_pair: Option<(usize, usize)>,
    pub isometry_deviation: f64,
    pub isometry: bool,
    /// `‖(Θφ − Θψ)uⱼ‖ ≤ sup|ξⱼ∘φ⁻¹ − ξⱼ∘ψ⁻¹|` on every adjoined point.
    pub modulus: bool,
    /// `(element, generator)` when some `Θφ` does not exist in the truncation.
    pub orbit_escape: Option<(usize, usize)>,
}

impl GEmbeddingReport {
    pub fn passed(&self) -> bool {
        self.extension
            && self.homomorphism
            && self.isometry
            && self.modulus
            && self.orbit_escape.is_none()
    }
}

/// Checks that `φ ↦ Θφ` is an isometric extension homomorphism for a finite
/// action on `E_n` (algebraic surrogate for continuity: the modulus test).
pub fn verify_g_embedding(
    state: &BuildState,
    level: usize,
    action: &[LinearIsometryWitness],
) -> Result<GEmbeddingReport, UniversalError> {
    let mut report = GEmbeddingReport {
        level,
        elements: action.len(),
        extension: true,
        homomorphism: true,
        failing_pair: None,
        isometry_deviation: 0.0,
        isometry: true,
        modulus: true,
        orbit_escape: None,
    };
    let mut lifted = Vec::with_capacity(action.len());
    let mut next = None;
    for (i, phi) in action.iter().enumerate() {
        match induced_matrix(state, level, phi, i) {
            Ok((m, sp)) => {
                lifted.push(m);
                next = Some(sp);
            }
            Err(UniversalError::Gurarij(GurarijError::OrbitEscape { element, generator })) => {
                report.orbit_escape = Some((element, generator));
                report.extension = false;
                report.homomorphism = false;
                report.isometry = false;
                report.modulus = false;
                return Ok(report);
            }
            Err(e) => return Err(e),
        }
    }
    let Some(next) = next else {
        return Ok(report);
    };
    let d = state.spaces[level].dim();
    for (phi, th) in action.iter().zip(&lifted) {
        for (i, row) in th.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                let want = if i < d && j < d {
                    phi.matrix()[i][j]
                } else if i < d || j < d {
                    0.0
                } else {
                    x
                };
                if x != want {
                    report.extension = false;
                }
            }
        }
    }
    'pairs: for a in 0..action.len() {
        for b in 0..action.len() {
            let prod = mat::mul(action[a].matrix(), action[b].matrix());
            let c = action.iter().position(|w| mat::max_abs_diff(w.matrix(), &prod) <= 1e-12);
            let ok = match c {
                Some(c) => mat::mul(&lifted[a], &lifted[b]) == lifted[c],
                None => false,
            };
            if !ok {
                report.homomorphism = false;
                report.failing_pair = Some((a, b));
                break 'pairs;
            }
        }
    }
    for (i, th) in lifted.iter().enumerate() {
        let dev = isometry_deviation(th, &next, WITNESS_SAMPLES, 0x7e7a + i as u64)?;
        report.isometry_deviation = report.isometry_deviation.max(dev);
    }
    report.isometry = report.isometry_deviation <= 1e-8;
    let envs = &state.rounds[round_for_level(state, level)?].envelopes;
    for a in 0..action.len() {
        for b in 0..a {
            for (j, ck) in envs.iter().enumerate() {
                let bound = push_forward(ck, action[a].matrix())
                    .map_err(UniversalError::from)?
                    .sup_distance(&push_forward(ck, action[b].matrix())?)
                    .map_err(GurarijError::from)?;
                let mut u = vec![0.0; next.dim()];
                u[d + j] = 1.0;
                let diff: Vector = mat::apply(&lifted[a], &u)
                    .iter()
                    .zip(mat::apply(&lifted[b], &u))
                    .map(|(x, y)| x - y)
                    .collect();
                if next.norm(&diff)? > bound + 1e-8 {
                    report.modulus = false;
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
