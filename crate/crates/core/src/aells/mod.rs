//! Arens-Eells norms: molecules on pointed finite metric spaces, McShane
//! extension, and the relative construction over a normed space that turns a
//! family of convex Katětov envelopes into new points of a larger space.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::katetov::{relative_dual_ball, ConvexKatetovEnvelope, KatetovError};
use crate::optim::{LinExpr, LpBuilder, LpError, Relation, Sense};
use crate::space::{DualBall, OracleNormedSpace, Provenance, Space, SpaceError, SpaceRef};
use crate::Vector;

const METRIC_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AellsError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Katetov(#[from] KatetovError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("unknown label {0:?}")]
    SupportMismatch(String),
    #[error("molecule coefficients sum to {0}, not 0")]
    UnbalancedMolecule(f64),
    #[error("not {lipschitz}-Lipschitz between {x:?} and {y:?}")]
    NotLipschitz { x: String, y: String, lipschitz: f64 },
    #[error("empty domain")]
    EmptyDomain,
    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Finite metric space with a distinguished base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointedFiniteMetric {
    pub labels: Vec<String>,
    pub distances: Vec<Vec<f64>>,
    pub base: String,
}

impl PointedFiniteMetric {
    pub fn new(
        labels: Vec<String>,
        distances: Vec<Vec<f64>>,
        base: impl Into<String>,
    ) -> Result<Self, AellsError> {
        let m = PointedFiniteMetric {
            labels,
            distances,
            base: base.into(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), AellsError> {
        let n = self.labels.len();
        let bad = |s: String| Err(AellsError::InvalidMetric(s));
        if self.distances.len() != n || self.distances.iter().any(|r| r.len() != n) {
            return bad("distance matrix is not square".into());
        }
        if self.index(&self.base).is_none() {
            return Err(AellsError::SupportMismatch(self.base.clone()));
        }
        for i in 0..n {
            if self.labels[..i].contains(&self.labels[i]) {
                return bad(format!("duplicate label {}", self.labels[i]));
            }
        }
        let d = &self.distances;
        for i in 0..n {
            if d[i][i] != 0.0 {
                return bad(format!("d({0},{0}) ≠ 0", self.labels[i]));
            }
            for j in 0..n {
                if !d[i][j].is_finite() || d[i][j] < 0.0 || d[i][j] != d[j][i] {
                    return bad(format!("bad entry at ({i},{j})"));
                }
                if i != j && d[i][j] == 0.0 {
                    return bad(format!("distinct points {i}, {j} at distance 0"));
                }
                for k in 0..n {
                    if d[i][k] > d[i][j] + d[j][k] + METRIC_TOL {
                        return bad(format!("triangle inequality fails at ({i},{j},{k})"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn base_index(&self) -> usize {
        self.index(&self.base).expect("validated base")
    }

    pub fn dist(&self, a: &str, b: &str) -> Result<f64, AellsError> {
        let i = self
            .index(a)
            .ok_or_else(|| AellsError::SupportMismatch(a.into()))?;
        let j = self
            .index(b)
            .ok_or_else(|| AellsError::SupportMismatch(b.into()))?;
        Ok(self.distances[i][j])
    }
}

/// Finitely supported weights summing to zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub entries: BTreeMap<String, f64>,
}

impl Molecule {
    pub fn new(entries: BTreeMap<String, f64>) -> Self {
        Molecule { entries }
    }

    /// `δ_x − δ_y`.
    pub fn dipole(x: &str, y: &str) -> Self {
        let mut entries = BTreeMap::new();
        *entries.entry(x.to_string()).or_insert(0.0) += 1.0;
        *entries.entry(y.to_string()).or_insert(0.0) -= 1.0;
        Molecule { entries }
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Coefficient vector over the metric's labels.
    pub fn dense(&self, m: &PointedFiniteMetric) -> Result<Vector, AellsError> {
        let mut out = vec![0.0; m.len()];
        for (l, &c) in &self.entries {
            let i = m
                .index(l)
                .ok_or_else(|| AellsError::SupportMismatch(l.clone()))?;
            out[i] += c;
        }
        let total: f64 = out.iter().sum();
        let scale: f64 = out.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if total.abs() > 1e-12 * scale {
            return Err(AellsError::UnbalancedMolecule(total));
        }
        Ok(out)
    }
}

/// Transport-plan entry: `mass` moved from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub from: String,
    pub to: String,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeNorm {
    pub value: f64,
    pub dual_value: f64,
    pub plan: Vec<Flow>,
    /// 1-Lipschitz function vanishing at the base point attaining the value.
    pub witness: BTreeMap<String, f64>,
}

impl AeNorm {
    pub fn gap(&self) -> f64 {
        (self.value - self.dual_value).abs()
    }
}

/// Arens-Eells norm of a molecule, computed twice: as a minimum-cost
/// transport problem and as the maximum pairing against 1-Lipschitz
/// functions vanishing at the base point.
pub fn ae_norm(m: &PointedFiniteMetric, mol: &Molecule) -> Result<AeNorm, AellsError> {
    let w = mol.dense(m)?;
    let n = m.len();
    let d = &m.distances;

    let mut p = LpBuilder::new();
    let mut arcs = Vec::new();
    let mut net: Vec<LinExpr> = vec![LinExpr::new(); n];
    let mut cost = LinExpr::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let f = p.nonneg();
                arcs.push((i, j, f));
                net[i].add_term(f, 1.0);
                net[j].add_term(f, -1.0);
                cost.add_term(f, d[i][j]);
            }
        }
    }
    for (i, e) in net.into_iter().enumerate() {
        if !e.terms.is_empty() {
            p.constrain(e, Relation::Eq, w[i]);
        }
    }
    p.set_objective(cost);
    let primal = p.optimum(Sense::Minimize)?;

    let mut q = LpBuilder::new();
    let base = m.base_index();
    let g: Vec<usize> = (0..n)
        .map(|i| if i == base { q.add_var(0.0, 0.0) } else { q.free() })
        .collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                q.constrain(LinExpr::var(g[i]).term(g[j], -1.0), Relation::Le, d[i][j]);
            }
        }
    }
    let mut obj = LinExpr::new();
    for i in 0..n {
        obj.add_term(g[i], w[i]);
    }
    q.set_objective(obj);
    let dual = q.optimum(Sense::Maximize)?;

    let plan = arcs
        .iter()
        .filter(|&&(_, _, f)| primal.primal[f] > 1e-12)
        .map(|&(i, j, f)| Flow {
            from: m.labels[i].clone(),
            to: m.labels[j].clone(),
            mass: primal.primal[f],
        })
        .collect();
    let witness = (0..n)
        .map(|i| (m.labels[i].clone(), dual.primal[g[i]]))
        .collect();
    Ok(AeNorm {
        value: primal.objective.max(0.0),
        dual_value: dual.objective.max(0.0),
        plan,
        witness,
    })
}

/// McShane extension `x ↦ min_y λ(y) + L·d(x, y)`.
pub fn lipschitz_extend(
    m: &PointedFiniteMetric,
    partial: &BTreeMap<String, f64>,
    lipschitz: f64,
) -> Result<BTreeMap<String, f64>, AellsError> {
    if partial.is_empty() {
        return Err(AellsError::EmptyDomain);
    }
    let dom: Vec<(usize, f64)> = partial
        .iter()
        .map(|(l, &v)| {
            m.index(l)
                .map(|i| (i, v))
                .ok_or_else(|| AellsError::SupportMismatch(l.clone()))
        })
        .collect::<Result<_, _>>()?;
    for &(i, vi) in &dom {
        for &(j, vj) in &dom {
            let lim = lipschitz * m.distances[i][j];
            if vi - vj > lim + METRIC_TOL * (1.0 + lim) {
                return Err(AellsError::NotLipschitz {
                    x: m.labels[i].clone(),
                    y: m.labels[j].clone(),
                    lipschitz,
                });
            }
        }
    }
    Ok((0..m.len())
        .map(|x| {
            let v = dom
                .iter()
                .map(|&(y, vy)| vy + lipschitz * m.distances[x][y])
                .fold(f64::INFINITY, f64::min);
            (m.labels[x].clone(), v)
        })
        .collect())
}

/// `E` together with finitely many convex Katětov envelopes over it, seen
/// as new points `uᵢ` with `d(uᵢ, a) = ξᵢ(a)` and `d(uᵢ, uₖ)` the sup
/// distance.
#[derive(Debug, Clone)]
pub struct RelativeSpaceOverE {
    base: SpaceRef,
    adjoined: Vec<ConvexKatetovEnvelope>,
    pair_distances: Vec<Vec<f64>>,
    ball: DualBall,
}

impl RelativeSpaceOverE {
    pub fn new(base: SpaceRef, adjoined: Vec<ConvexKatetovEnvelope>) -> Result<Self, AellsError> {
        let adjoined: Vec<ConvexKatetovEnvelope> = adjoined
            .into_iter()
            .map(|ck| {
                if std::sync::Arc::ptr_eq(ck.space(), &base) {
                    Ok(ck)
                } else if **ck.space() == *base {
                    ck.with_space(base.clone())
                } else {
                    Err(KatetovError::SpaceMismatch)
                }
            })
            .collect::<Result<_, _>>()?;
        let k = adjoined.len();
        let mut pair_distances = vec![vec![0.0; k]; k];
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let d = adjoined[i].sup_distance(&adjoined[j])?;
                pair_distances[i][j] = d;
                pair_distances[j][i] = d;
                pairs.push((i, j, d));
            }
        }
        let refs: Vec<&ConvexKatetovEnvelope> = adjoined.iter().collect();
        let ball = relative_dual_ball(&base, &refs, &pairs);
        Ok(RelativeSpaceOverE {
            base,
            adjoined,
            pair_distances,
            ball,
        })
    }

    pub fn base(&self) -> &SpaceRef {
        &self.base
    }

    pub fn adjoined(&self) -> &[ConvexKatetovEnvelope] {
        &self.adjoined
    }

    pub fn pair_distance(&self, i: usize, j: usize) -> f64 {
        self.pair_distances[i][j]
    }

    /// Dual unit ball `{(λ, f)}` of the relative space.
    pub fn dual_ball(&self) -> &DualBall {
        &self.ball
    }

    /// Worst violation of the triangle inequality of the derived metric on
    /// `{u₁, …, u_k} ∪ samples`.
    pub fn metric_defect(&self, samples: &[Vector]) -> Result<f64, AellsError> {
        let k = self.adjoined.len();
        let n = k + samples.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                d[i][j] = match (i < k, j < k) {
                    (true, true) => self.pair_distances[i][j],
                    (true, false) => self.adjoined[i].eval(&samples[j - k])?,
                    (false, true) => self.adjoined[j].eval(&samples[i - k])?,
                    (false, false) => {
                        let diff: Vector = samples[i - k]
                            .iter()
                            .zip(&samples[j - k])
                            .map(|(a, b)| a - b)
                            .collect();
                        self.base.norm(&diff)?
                    }
                };
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    worst = worst.max(d[i][l] - d[i][j] - d[j][l]);
                }
            }
        }
        Ok(worst)
    }
}

/// Norm of `a + Σ αᵢuᵢ`:
/// `max ⟨λ, a⟩ + Σ αᵢfᵢ` over `‖λ‖* ≤ 1`, `ξᵢ*(λ) ≤ fᵢ ≤ −ξᵢ*(−λ)`,
/// `|fᵢ − fₖ| ≤ d(uᵢ, uₖ)`; see [`relative_dual_ball`].
pub fn relative_ae_norm(
    rs: &RelativeSpaceOverE,
    a: &[f64],
    alpha: &[f64],
) -> Result<f64, AellsError> {
    rs.base.check_dim(a.len())?;
    if alpha.len() != rs.adjoined.len() {
        return Err(AellsError::LengthMismatch {
            expected: rs.adjoined.len(),
            got: alpha.len(),
        });
    }
    let mut v = a.to_vec();
    v.extend_from_slice(alpha);
    if v.iter().all(|x| *x == 0.0) {
        return Ok(0.0);
    }
    Ok(rs.ball.support(&v)?.0.max(0.0))
}

/// The space spanned by `E` and the adjoined points, with coordinates
/// `(a, α)` and norm [`relative_ae_norm`].
pub fn adjoin(rs: &RelativeSpaceOverE, label: impl Into<String>) -> OracleNormedSpace {
    let (base_label, base_dim, base_adjoined) = match &*rs.base {
        Space::Oracle(o) => {
            let p = o.provenance();
            (p.base_label.clone(), p.base_dim, p.adjoined)
        }
        Space::Poly(p) => (p.label().to_string(), p.dim(), 0),
    };
    OracleNormedSpace::new(
        label,
        rs.ball.clone(),
        Provenance {
            base_label,
            base_dim,
            adjoined: base_adjoined + rs.adjoined.len(),
        },
    )
}

#[cfg(test)]
mod tests;
