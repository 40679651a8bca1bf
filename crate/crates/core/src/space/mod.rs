//! Finite-dimensional polyhedral normed spaces.
//!
//! A [`PolyNormedSpace`] stores the vertices of its dual unit ball (the
//! "dual generators"); the norm is `max_g ⟨g, v⟩`. Spaces produced by
//! adjoining points ([`OracleNormedSpace`]) only know their dual ball as a
//! lifted H-representation ([`DualBall`]); their norm is an LP. Both kinds can
//! be dropped into a larger LP, either as the constraint `φ ∈ B*` or as the
//! epigraph `‖z‖ ≤ t`, which is all the downstream constructions need.

mod vertex;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{LinExpr, LpBuilder, LpError, LpStatus, Relation, Sense};
use crate::Vector;

pub use vertex::{enumerate_vertices, extract_symmetric_polytope};

const GEN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid generators: {0}")]
    InvalidGenerators(ValidationReport),
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub type SpaceRef = Arc<Space>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceViolation {
    Empty,
    NonFinite { generator: usize },
    Asymmetric { generator: usize },
    NotSpanning { rank: usize, dim: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<SpaceViolation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.violations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StandardKind {
    L1,
    Linf,
    Polytope,
}

/// Norm given by the maximum of finitely many linear functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyNormedSpace {
    label: String,
    dim: usize,
    generators: Vec<Vector>,
    positive_definite: bool,
}

impl PolyNormedSpace {
    /// Builds a space without any validation; see [`PolyNormedSpace::validate`].
    pub fn unchecked(label: impl Into<String>, dim: usize, generators: Vec<Vector>) -> Self {
        let generators = dedupe(generators);
        let positive_definite = rank(&generators, dim) == dim;
        PolyNormedSpace {
            label: label.into(),
            dim,
            generators,
            positive_definite,
        }
    }

    /// Builds and validates a space. With `symmetric_closure` the negations of
    /// the listed generators are added.
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        mut generators: Vec<Vector>,
        symmetric_closure: bool,
    ) -> Result<Self, SpaceError> {
        if symmetric_closure {
            let neg: Vec<Vector> = generators
                .iter()
                .map(|g| g.iter().map(|x| -x).collect())
                .collect();
            generators.extend(neg);
        }
        let s = Self::unchecked(label, dim, generators);
        let report = s.validate();
        if report.is_empty() {
            Ok(s)
        } else {
            Err(SpaceError::InvalidGenerators(report))
        }
    }

    /// Like [`PolyNormedSpace::new`] but tolerates a non-spanning generator
    /// set, producing a seminorm flagged as not positive definite.
    pub fn seminorm(
        label: impl Into<String>,
        dim: usize,
        generators: Vec<Vector>,
    ) -> Result<Self, SpaceError> {
        let s = Self::unchecked(label, dim, generators);
        let mut report = s.validate();
        report
            .violations
            .retain(|v| !matches!(v, SpaceViolation::NotSpanning { .. }));
        if report.is_empty() {
            Ok(s)
        } else {
            Err(SpaceError::InvalidGenerators(report))
        }
    }

    /// ℓ¹ norm: dual generators are the sign vectors `{±1}^d`.
    pub fn l1(dim: usize) -> Self {
        let generators = (0..1usize << dim)
            .map(|mask| {
                (0..dim)
                    .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        Self::unchecked(format!("l1:{dim}"), dim, generators)
    }

    /// ℓ∞ norm: dual generators `±eᵢ`.
    pub fn linf(dim: usize) -> Self {
        let mut generators = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut g = vec![0.0; dim];
                g[i] = s;
                generators.push(g);
            }
        }
        Self::unchecked(format!("linf:{dim}"), dim, generators)
    }

    pub fn make_standard(
        kind: StandardKind,
        dim: usize,
        generators: Option<Vec<Vector>>,
    ) -> Result<Self, SpaceError> {
        if dim == 0 {
            return Err(SpaceError::InvalidGenerators(ValidationReport {
                violations: vec![SpaceViolation::Empty],
            }));
        }
        match kind {
            StandardKind::L1 => Ok(Self::l1(dim)),
            StandardKind::Linf => Ok(Self::linf(dim)),
            StandardKind::Polytope => Self::new(
                format!("polytope:{dim}"),
                dim,
                generators.unwrap_or_default(),
                true,
            ),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    pub fn is_positive_definite(&self) -> bool {
        self.positive_definite
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Lists violations of symmetry and spanning. Empty iff the invariants hold.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.generators.is_empty() {
            violations.push(SpaceViolation::Empty);
        }
        for (i, g) in self.generators.iter().enumerate() {
            if g.len() != self.dim || g.iter().any(|x| !x.is_finite()) {
                violations.push(SpaceViolation::NonFinite { generator: i });
            }
        }
        if !violations.is_empty() {
            return ValidationReport { violations };
        }
        for (i, g) in self.generators.iter().enumerate() {
            let has_neg = self.generators.iter().any(|h| {
                h.iter()
                    .zip(g)
                    .all(|(a, b)| (a + b).abs() <= GEN_TOL * (1.0 + b.abs()))
            });
            if !has_neg {
                violations.push(SpaceViolation::Asymmetric { generator: i });
            }
        }
        let r = rank(&self.generators, self.dim);
        if r < self.dim {
            violations.push(SpaceViolation::NotSpanning { rank: r, dim: self.dim });
        }
        ValidationReport { violations }
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64, SpaceError> {
        self.check_dim(v.len())?;
        Ok(self.norm_unchecked(v))
    }

    fn norm_unchecked(&self, v: &[f64]) -> f64 {
        self.generators
            .iter()
            .map(|g| dot(g, v))
            .fold(0.0, f64::max)
    }

    fn argmax_generator(&self, v: &[f64]) -> (f64, Vector) {
        let mut best = (0.0, vec![0.0; self.dim]);
        for g in &self.generators {
            let val = dot(g, v);
            if val > best.0 {
                best = (val, g.clone());
            }
        }
        best
    }

    fn check_dim(&self, got: usize) -> Result<(), SpaceError> {
        if got == self.dim {
            Ok(())
        } else {
            Err(SpaceError::DimensionMismatch {
                expected: self.dim,
                got,
            })
        }
    }

    /// Lifted representation: `φ = Σ μ_g g`, `Σ μ ≤ 1`, `μ ≥ 0`.
    pub fn to_dual_ball(&self) -> DualBall {
        let d = self.dim;
        let m = self.generators.len();
        let mut rows = Vec::with_capacity(d + m + 1);
        for k in 0..d {
            let mut c = vec![0.0; d + m];
            c[k] = 1.0;
            for (l, g) in self.generators.iter().enumerate() {
                c[d + l] = -g[k];
            }
            rows.push(BallRow {
                coeffs: c,
                relation: Relation::Eq,
                rhs: 0.0,
            });
        }
        let mut c = vec![0.0; d + m];
        c[d..].iter_mut().for_each(|x| *x = 1.0);
        rows.push(BallRow {
            coeffs: c,
            relation: Relation::Le,
            rhs: 1.0,
        });
        for l in 0..m {
            let mut c = vec![0.0; d + m];
            c[d + l] = -1.0;
            rows.push(BallRow {
                coeffs: c,
                relation: Relation::Le,
                rhs: 0.0,
            });
        }
        DualBall { dim: d, lift: m, rows }
    }

    /// Vertices of the unit ball `{v : ⟨g, v⟩ ≤ 1}` by brute-force enumeration.
    pub fn unit_ball_vertices(&self) -> Vec<Vector> {
        let rows: Vec<(Vector, f64)> = self.generators.iter().map(|g| (g.clone(), 1.0)).collect();
        enumerate_vertices(&rows, self.dim)
    }
}

/// One row `⟨a, (φ, w)⟩ (≤ | =) rhs` of a lifted dual-ball description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRow {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Dual unit ball `{φ ∈ ℝ^dim : ∃ w ∈ ℝ^lift, rows hold}`. All variables free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualBall {
    pub dim: usize,
    pub lift: usize,
    pub rows: Vec<BallRow>,
}

impl DualBall {
    /// Adds `φ ∈ scale·B*` to `b`; `scale = None` means scale one.
    pub fn add_membership(&self, b: &mut LpBuilder, phi: &[LinExpr], scale: Option<usize>) {
        assert_eq!(phi.len(), self.dim);
        let lift = b.free_vars(self.lift);
        for row in &self.rows {
            let mut e = LinExpr::new();
            for (k, p) in phi.iter().enumerate() {
                if row.coeffs[k] != 0.0 {
                    e.add_expr(p, row.coeffs[k]);
                }
            }
            for (l, &w) in lift.iter().enumerate() {
                e.add_term(w, row.coeffs[self.dim + l]);
            }
            match scale {
                Some(t) => {
                    e.add_term(t, -row.rhs);
                    b.constrain(e, row.relation, 0.0);
                }
                None => {
                    b.constrain(e, row.relation, row.rhs);
                }
            }
        }
    }

    /// Adds `sup_{φ ∈ B*} ⟨φ, z⟩ ≤ t` through LP duality: multipliers `π`
    /// with `Σ πᵢ aᵢ = z` on the φ block, `Σ πᵢ bᵢ = 0` on the lift block and
    /// `Σ πᵢ rhsᵢ ≤ t`; `π ≥ 0` on inequality rows.
    pub fn add_support_epigraph(&self, b: &mut LpBuilder, z: &[LinExpr], t: &LinExpr) {
        assert_eq!(z.len(), self.dim);
        let pis: Vec<usize> = self
            .rows
            .iter()
            .map(|r| match r.relation {
                Relation::Eq => b.free(),
                _ => b.nonneg(),
            })
            .collect();
        for col in 0..self.dim + self.lift {
            let mut e = LinExpr::new();
            for (row, &pi) in self.rows.iter().zip(&pis) {
                e.add_term(pi, row.coeffs[col]);
            }
            if col < self.dim {
                e.add_expr(&z[col], -1.0);
            }
            if !e.terms.is_empty() || e.constant != 0.0 {
                b.constrain(e, Relation::Eq, 0.0);
            }
        }
        let mut e = LinExpr::new();
        for (row, &pi) in self.rows.iter().zip(&pis) {
            e.add_term(pi, row.rhs);
        }
        e.add_expr(t, -1.0);
        b.constrain(e, Relation::Le, 0.0);
    }

    /// `max_{φ ∈ B*} ⟨φ, v⟩` together with a maximiser.
    pub fn support(&self, v: &[f64]) -> Result<(f64, Vector), LpError> {
        let mut b = LpBuilder::new();
        let phi = b.free_vars(self.dim);
        let exprs: Vec<LinExpr> = phi.iter().map(|&p| LinExpr::var(p)).collect();
        self.add_membership(&mut b, &exprs, None);
        let mut obj = LinExpr::new();
        for (&p, &vk) in phi.iter().zip(v) {
            obj.add_term(p, vk);
        }
        b.set_objective(obj);
        let sol = b.optimum(Sense::Maximize)?;
        Ok((sol.objective, phi.iter().map(|&p| sol.primal[p]).collect()))
    }

    /// Gauge of the ball at `f`: `min {t ≥ 0 : f ∈ t·B*}`.
    pub fn gauge(&self, f: &[f64]) -> Result<f64, LpError> {
        let mut b = LpBuilder::new();
        let t = b.nonneg();
        let exprs: Vec<LinExpr> = f.iter().map(|&x| LinExpr::constant(x)).collect();
        self.add_membership(&mut b, &exprs, Some(t));
        b.set_objective(LinExpr::var(t));
        let sol = b.solve(Sense::Minimize)?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.objective),
            LpStatus::Infeasible => Ok(f64::INFINITY),
            s => Err(LpError::NotOptimal(s)),
        }
    }
}

/// Where an oracle space came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub base_label: String,
    pub base_dim: usize,
    pub adjoined: usize,
}

/// A normed space known only through its lifted dual ball; every norm
/// evaluation is an LP.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleNormedSpace {
    label: String,
    ball: DualBall,
    provenance: Provenance,
}

impl OracleNormedSpace {
    pub fn new(label: impl Into<String>, ball: DualBall, provenance: Provenance) -> Self {
        OracleNormedSpace {
            label: label.into(),
            ball,
            provenance,
        }
    }

    pub fn dim(&self) -> usize {
        self.ball.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ball(&self) -> &DualBall {
        &self.ball
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Either kind of space. Everything above this module talks to `Space`.
#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Poly(PolyNormedSpace),
    Oracle(OracleNormedSpace),
}

impl From<PolyNormedSpace> for Space {
    fn from(s: PolyNormedSpace) -> Self {
        Space::Poly(s)
    }
}

impl From<OracleNormedSpace> for Space {
    fn from(s: OracleNormedSpace) -> Self {
        Space::Oracle(s)
    }
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Poly(s) => s.dim,
            Space::Oracle(s) => s.dim(),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Space::Poly(s) => &s.label,
            Space::Oracle(s) => &s.label,
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        match self {
            Space::Poly(s) => s.positive_definite,
            Space::Oracle(_) => true,
        }
    }

    pub fn as_poly(&self) -> Option<&PolyNormedSpace> {
        match self {
            Space::Poly(s) => Some(s),
            Space::Oracle(_) => None,
        }
    }

    pub fn check_dim(&self, got: usize) -> Result<(), SpaceError> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(SpaceError::DimensionMismatch {
                expected: self.dim(),
                got,
            })
        }
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64, SpaceError> {
        self.check_dim(v.len())?;
        match self {
            Space::Poly(s) => Ok(s.norm_unchecked(v)),
            Space::Oracle(s) => {
                if v.iter().all(|x| *x == 0.0) {
                    return Ok(0.0);
                }
                Ok(s.ball.support(v)?.0.max(0.0))
            }
        }
    }

    /// Norm together with a norming functional `φ ∈ B*`, `⟨φ, v⟩ = ‖v‖`.
    pub fn norm_with_witness(&self, v: &[f64]) -> Result<(f64, Vector), SpaceError> {
        self.check_dim(v.len())?;
        match self {
            Space::Poly(s) => Ok(s.argmax_generator(v)),
            Space::Oracle(s) => Ok(s.ball.support(v)?),
        }
    }

    /// `min {t : f ∈ t·conv(generators)}`; infinite when `f` is not bounded by
    /// a seminorm.
    pub fn dual_norm(&self, f: &[f64]) -> Result<f64, SpaceError> {
        self.check_dim(f.len())?;
        if f.iter().all(|x| *x == 0.0) {
            return Ok(0.0);
        }
        match self {
            Space::Poly(s) => {
                let mut b = LpBuilder::new();
                let mu = b.nonneg_vars(s.generators.len());
                for k in 0..s.dim {
                    let mut e = LinExpr::new();
                    for (&m, g) in mu.iter().zip(&s.generators) {
                        e.add_term(m, g[k]);
                    }
                    b.constrain(e, Relation::Eq, f[k]);
                }
                let mut obj = LinExpr::new();
                for &m in &mu {
                    obj.add_term(m, 1.0);
                }
                b.set_objective(obj);
                let sol = b.solve(Sense::Minimize)?;
                match sol.status {
                    LpStatus::Optimal => Ok(sol.objective),
                    LpStatus::Infeasible => Ok(f64::INFINITY),
                    st => Err(LpError::NotOptimal(st).into()),
                }
            }
            Space::Oracle(s) => Ok(s.ball.gauge(f)?),
        }
    }

    /// Adds `φ ∈ B*` (or `φ ∈ t·B*`) to an LP under construction.
    pub fn add_dual_ball(&self, b: &mut LpBuilder, phi: &[LinExpr], scale: Option<usize>) {
        match self {
            Space::Poly(s) => {
                let mu = b.nonneg_vars(s.generators.len());
                for (k, p) in phi.iter().enumerate() {
                    let mut e = p.clone();
                    for (&m, g) in mu.iter().zip(&s.generators) {
                        e.add_term(m, -g[k]);
                    }
                    b.constrain(e, Relation::Eq, 0.0);
                }
                let mut e = LinExpr::new();
                for &m in &mu {
                    e.add_term(m, 1.0);
                }
                match scale {
                    Some(t) => {
                        e.add_term(t, -1.0);
                        b.constrain(e, Relation::Le, 0.0)
                    }
                    None => b.constrain(e, Relation::Le, 1.0),
                };
            }
            Space::Oracle(s) => s.ball.add_membership(b, phi, scale),
        }
    }

    /// Adds `‖z‖ ≤ t` to an LP under construction.
    pub fn add_norm_epigraph(&self, b: &mut LpBuilder, z: &[LinExpr], t: &LinExpr) {
        match self {
            Space::Poly(s) => {
                for g in &s.generators {
                    let mut e = LinExpr::new();
                    for (zk, &gk) in z.iter().zip(g) {
                        if gk != 0.0 {
                            e.add_expr(zk, gk);
                        }
                    }
                    e.add_expr(t, -1.0);
                    b.constrain(e, Relation::Le, 0.0);
                }
            }
            Space::Oracle(s) => s.ball.add_support_epigraph(b, z, t),
        }
    }

    pub fn to_dual_ball(&self) -> DualBall {
        match self {
            Space::Poly(s) => s.to_dual_ball(),
            Space::Oracle(s) => s.ball.clone(),
        }
    }

    /// Norm on coefficient space: `s ↦ ‖Σ sᵢ xᵢ‖`. Explicit spaces pull the
    /// generators back directly; oracle spaces extract the projected dual
    /// polytope (basis size at most 4).
    pub fn subspace_pullback(&self, basis: &[Vector]) -> Result<PolyNormedSpace, SpaceError> {
        for x in basis {
            self.check_dim(x.len())?;
        }
        let k = basis.len();
        let label = format!("{}|pullback:{k}", self.label());
        match self {
            Space::Poly(s) => {
                let gens = s
                    .generators
                    .iter()
                    .map(|g| basis.iter().map(|x| dot(g, x)).collect())
                    .collect();
                Ok(PolyNormedSpace::unchecked(label, k, gens))
            }
            Space::Oracle(_) => {
                if rank(basis, self.dim()) < k {
                    return Err(SpaceError::DependentBasis);
                }
                let support = |c: &[f64]| -> Result<(f64, Vector), LpError> {
                    let v = combine(basis, c, self.dim());
                    let (val, phi) = self.norm_with_witness(&v).map_err(|e| match e {
                        SpaceError::Lp(l) => l,
                        other => LpError::NumericalFailure(other.to_string()),
                    })?;
                    Ok((val, basis.iter().map(|x| dot(&phi, x)).collect()))
                };
                let gens = extract_symmetric_polytope(k, support)?;
                Ok(PolyNormedSpace::unchecked(label, k, gens))
            }
        }
    }

    /// Explicit form of an oracle space (dimension at most 4).
    pub fn to_explicit(&self) -> Result<PolyNormedSpace, SpaceError> {
        match self {
            Space::Poly(s) => Ok(s.clone()),
            Space::Oracle(_) => {
                let d = self.dim();
                let basis: Vec<Vector> = (0..d).map(|i| unit(d, i)).collect();
                Ok(self.subspace_pullback(&basis)?.with_label(self.label()))
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn unit(dim: usize, i: usize) -> Vector {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

/// `Σ cᵢ xᵢ`.
pub fn combine(basis: &[Vector], coeffs: &[f64], dim: usize) -> Vector {
    let mut v = vec![0.0; dim];
    for (x, &c) in basis.iter().zip(coeffs) {
        for (vi, xi) in v.iter_mut().zip(x) {
            *vi += c * xi;
        }
    }
    v
}

/// Numerical rank of a list of vectors.
pub fn rank(vectors: &[Vector], dim: usize) -> usize {
    if vectors.is_empty() || dim == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(vectors.len(), dim, |i, j| vectors[i][j]);
    let scale = vectors
        .iter()
        .flatten()
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(1.0);
    m.rank(1e-9 * scale)
}

fn dedupe(gens: Vec<Vector>) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(gens.len());
    for g in gens {
        if g.iter().all(|x| x.abs() <= GEN_TOL) {
            continue;
        }
        let dup = out.iter().any(|h| {
            h.iter()
                .zip(&g)
                .all(|(a, b)| (a - b).abs() <= GEN_TOL * (1.0 + b.abs()))
        });
        if !dup {
            out.push(g);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_and_linf_norms() {
        let l1: Space = PolyNormedSpace::l1(2).into();
        let li: Space = PolyNormedSpace::linf(2).into();
        assert_eq!(l1.norm(&[3.0, -4.0]).unwrap(), 7.0);
        assert_eq!(li.norm(&[3.0, -4.0]).unwrap(), 4.0);
        assert_eq!(l1.norm(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            l1.norm(&[1.0]),
            Err(SpaceError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn dual_norms() {
        let l1: Space = PolyNormedSpace::l1(2).into();
        let li: Space = PolyNormedSpace::linf(2).into();
        assert!((l1.dual_norm(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((li.dual_norm(&[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(li.dual_norm(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn standard_constructors() {
        let l1 = PolyNormedSpace::make_standard(StandardKind::L1, 2, None).unwrap();
        let mut g = l1.generators().to_vec();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            g,
            vec![
                vec![-1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, -1.0],
                vec![1.0, 1.0]
            ]
        );
        let li = PolyNormedSpace::make_standard(StandardKind::Linf, 3, None).unwrap();
        assert_eq!(li.generators().len(), 6);
        let bad =
            PolyNormedSpace::make_standard(StandardKind::Polytope, 2, Some(vec![vec![1.0, 0.0]]));
        match bad {
            Err(SpaceError::InvalidGenerators(r)) => assert!(r
                .violations
                .iter()
                .any(|v| matches!(v, SpaceViolation::NotSpanning { rank: 1, dim: 2 }))),
            other => panic!("expected invalid generators, got {other:?}"),
        }
    }

    #[test]
    fn validation_reports() {
        assert!(PolyNormedSpace::l1(3).validate().is_empty());
        let asym = PolyNormedSpace::unchecked("a", 2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(asym
            .validate()
            .violations
            .iter()
            .any(|v| matches!(v, SpaceViolation::Asymmetric { .. })));
        let flat = PolyNormedSpace::unchecked(
            "f",
            2,
            vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![2.0, 2.0], vec![-2.0, -2.0]],
        );
        assert!(flat
            .validate()
            .violations
            .iter()
            .any(|v| matches!(v, SpaceViolation::NotSpanning { .. })));
    }

    #[test]
    fn pullbacks() {
        let l1: Space = PolyNormedSpace::l1(2).into();
        let id = l1
            .subspace_pullback(&[vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        assert_eq!(id.generators().len(), 4);
        let l1d1: Space = PolyNormedSpace::l1(1).into();
        let scaled = l1d1.subspace_pullback(&[vec![2.0]]).unwrap();
        let mut g = scaled.generators().to_vec();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(g, vec![vec![-2.0], vec![2.0]]);
        assert_eq!(scaled.norm(&[1.5]).unwrap(), 3.0);
        let dep = l1
            .subspace_pullback(&[vec![1.0, 0.0], vec![1.0, 0.0]])
            .unwrap();
        assert!(!dep.is_positive_definite());
        assert_eq!(dep.norm(&[1.0, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn oracle_matches_explicit_through_dual_ball() {
        let p = PolyNormedSpace::l1(3);
        let o: Space = OracleNormedSpace::new(
            "o",
            p.to_dual_ball(),
            Provenance {
                base_label: "l1:3".into(),
                base_dim: 3,
                adjoined: 0,
            },
        )
        .into();
        let v = [0.5, -2.0, 1.25];
        assert!((o.norm(&v).unwrap() - 3.75).abs() < 1e-9);
        let f = [0.3, -1.0, 0.2];
        assert!((o.dual_norm(&f).unwrap() - 1.0).abs() < 1e-9);
        let ex = o.to_explicit().unwrap();
        assert!((ex.norm(&v).unwrap() - 3.75).abs() < 1e-9);
    }

    #[test]
    fn epigraph_rows_agree_for_both_kinds() {
        let p = PolyNormedSpace::linf(2);
        for space in [
            Space::Poly(p.clone()),
            Space::Oracle(OracleNormedSpace::new(
                "o",
                p.to_dual_ball(),
                Provenance {
                    base_label: "linf:2".into(),
                    base_dim: 2,
                    adjoined: 0,
                },
            )),
        ] {
            // min ‖(x, 1)‖ + |x - 3|  = 2 at x ∈ [1,3]... check value only
            let mut b = LpBuilder::new();
            let x = b.free();
            let t = b.free();
            let u = b.free();
            space.add_norm_epigraph(
                &mut b,
                &[LinExpr::var(x), LinExpr::constant(1.0)],
                &LinExpr::var(t),
            );
            b.abs_le(&LinExpr::var(x).plus_constant(-3.0), u);
            b.set_objective(LinExpr::var(t).term(u, 1.0));
            let sol = b.optimum(Sense::Minimize).unwrap();
            assert!((sol.objective - 3.0).abs() < 1e-9, "{}", sol.objective);
        }
    }
}
