//! Katětov functions on finite subsets of a normed space and their convex
//! envelopes.
//!
//! A [`ConvexKatetovEnvelope`] with generator `(yⱼ, cⱼ)` is the greatest convex
//! function below `x ↦ minⱼ ‖x − yⱼ‖ + cⱼ`. Its conjugate is
//! `φ ↦ maxⱼ ⟨φ, yⱼ⟩ − cⱼ` on the dual unit ball (and `+∞` outside), so
//!
//! ```text
//! ck(x) = max { ⟨φ, x⟩ − s : φ ∈ B*, s ≥ ⟨φ, yⱼ⟩ − cⱼ for all j }
//! ```
//!
//! which is the LP used by [`ConvexKatetovEnvelope::eval`]. The decomposition
//! form `min Σ ‖uⱼ − λⱼyⱼ‖ + λⱼcⱼ` over `Σuⱼ = x`, `Σλⱼ = 1` is kept as an
//! independent route ([`ConvexKatetovEnvelope::eval_primal`]).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{LinExpr, LpBuilder, LpError, Relation, Sense};
use crate::space::{BallRow, DualBall, Space, SpaceError, SpaceRef};
use crate::Vector;

/// Slack allowed in the Katětov inequalities on finite data.
pub const KATETOV_TOL: f64 = 1e-9;

/// Generator values above the envelope by less than this (relative) are
/// left alone when canonicalizing.
pub const CANON_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KatetovError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("support has {points} points but {values} values")]
    LengthMismatch { points: usize, values: usize },
    #[error("empty support")]
    EmptySupport,
    #[error("envelopes live over different spaces")]
    SpaceMismatch,
    #[error("functional has dual norm {dual_norm} > 1")]
    FunctionalTooLarge { dual_norm: f64 },
    #[error("not Katětov: {0:?}")]
    NotKatetov(KatetovReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KatetovViolation {
    /// `ξ(y) > ξ(z) + ‖y − z‖`.
    Lipschitz { y: usize, z: usize, excess: f64 },
    /// `‖y − z‖ > ξ(y) + ξ(z)`.
    Separation { y: usize, z: usize, excess: f64 },
    Negative { y: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KatetovReport {
    pub violations: Vec<KatetovViolation>,
}

impl KatetovReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A function on a finite subset of a normed space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKatetov {
    pub space: SpaceRef,
    pub support: Vec<Vector>,
    pub values: Vec<f64>,
}

impl FiniteKatetov {
    pub fn new(
        space: SpaceRef,
        support: Vec<Vector>,
        values: Vec<f64>,
    ) -> Result<Self, KatetovError> {
        if support.len() != values.len() {
            return Err(KatetovError::LengthMismatch {
                points: support.len(),
                values: values.len(),
            });
        }
        for y in &support {
            space.check_dim(y.len())?;
        }
        Ok(FiniteKatetov {
            space,
            support,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks both Katětov inequalities on every pair of support points.
pub fn is_katetov(fk: &FiniteKatetov) -> Result<KatetovReport, KatetovError> {
    let mut violations = Vec::new();
    let n = fk.len();
    for (i, &v) in fk.values.iter().enumerate() {
        if v < -KATETOV_TOL || !v.is_finite() {
            violations.push(KatetovViolation::Negative { y: i });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = fk.space.norm(&sub(&fk.support[i], &fk.support[j]))?;
            let tol = KATETOV_TOL * (1.0 + d);
            let excess = fk.values[i] - fk.values[j] - d;
            if excess > tol {
                violations.push(KatetovViolation::Lipschitz { y: i, z: j, excess });
            }
            if i < j {
                let excess = d - fk.values[i] - fk.values[j];
                if excess > tol {
                    violations.push(KatetovViolation::Separation { y: i, z: j, excess });
                }
            }
        }
    }
    Ok(KatetovReport { violations })
}

/// `min_y ‖x − y‖ + ξ(y)` over the support.
pub fn extend_min_plus(fk: &FiniteKatetov, x: &[f64]) -> Result<f64, KatetovError> {
    fk.space.check_dim(x.len())?;
    if fk.is_empty() {
        return Err(KatetovError::EmptySupport);
    }
    let mut best = f64::INFINITY;
    for (y, &c) in fk.support.iter().zip(&fk.values) {
        best = best.min(fk.space.norm(&sub(x, y))? + c);
    }
    Ok(best)
}

/// Convex envelope of the min-plus extension of a valid finite Katětov
/// function, returned in canonical form.
pub fn convexify(fk: &FiniteKatetov) -> Result<ConvexKatetovEnvelope, KatetovError> {
    let report = is_katetov(fk)?;
    if !report.is_empty() {
        return Err(KatetovError::NotKatetov(report));
    }
    ConvexKatetovEnvelope::from_generator(fk.space.clone(), fk.support.clone(), fk.values.clone())
}

/// The one-generator envelope `‖· − v‖`.
pub fn point_as_katetov(space: SpaceRef, v: Vector) -> Result<ConvexKatetovEnvelope, KatetovError> {
    space.check_dim(v.len())?;
    Ok(ConvexKatetovEnvelope {
        space,
        points: vec![v],
        values: vec![0.0],
    })
}

/// Affine minorant `z ↦ ⟨φ, z⟩ − s` of an envelope, tight at the query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub phi: Vector,
    pub s: f64,
}

impl Piece {
    pub fn eval(&self, z: &[f64]) -> f64 {
        dot(&self.phi, z) - self.s
    }
}

/// Canonical convex Katětov envelope: the stored values equal the envelope at
/// the stored points.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexKatetovEnvelope {
    space: SpaceRef,
    points: Vec<Vector>,
    values: Vec<f64>,
}

impl ConvexKatetovEnvelope {
    /// Builds the envelope of `minⱼ ‖· − yⱼ‖ + cⱼ` and canonicalizes it.
    /// Does not check the Katětov inequalities; see [`convexify`].
    pub fn from_generator(
        space: SpaceRef,
        points: Vec<Vector>,
        values: Vec<f64>,
    ) -> Result<Self, KatetovError> {
        if points.len() != values.len() {
            return Err(KatetovError::LengthMismatch {
                points: points.len(),
                values: values.len(),
            });
        }
        if points.is_empty() {
            return Err(KatetovError::EmptySupport);
        }
        for y in &points {
            space.check_dim(y.len())?;
        }
        // merge repeated points, keeping the smaller value
        let mut pts: Vec<Vector> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        for (p, v) in points.into_iter().zip(values) {
            match pts.iter().position(|q| *q == p) {
                Some(i) => vals[i] = vals[i].min(v),
                None => {
                    pts.push(p);
                    vals.push(v);
                }
            }
        }
        let raw = ConvexKatetovEnvelope {
            space,
            points: pts,
            values: vals,
        };
        let canon = raw
            .points
            .iter()
            .map(|y| raw.eval(y))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ConvexKatetovEnvelope {
            values: canon
                .into_iter()
                .zip(&raw.values)
                // values within solver noise of the envelope are kept so that
                // canonicalizing twice is the identity
                .map(|(c, &v)| {
                    if c < v - CANON_TOL * (1.0 + v.abs()) {
                        c.max(0.0)
                    } else {
                        v.max(0.0)
                    }
                })
                .collect(),
            ..raw
        })
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The generator viewed as a finite Katětov function.
    pub fn restriction(&self) -> FiniteKatetov {
        FiniteKatetov {
            space: self.space.clone(),
            support: self.points.clone(),
            values: self.values.clone(),
        }
    }

    /// Same generator, reinterpreted over another space of equal dimension.
    pub fn with_space(&self, space: SpaceRef) -> Result<Self, KatetovError> {
        space.check_dim(self.dim())?;
        Ok(ConvexKatetovEnvelope {
            space,
            points: self.points.clone(),
            values: self.values.clone(),
        })
    }

    pub fn same_space(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    fn check(&self, x: &[f64]) -> Result<(), KatetovError> {
        Ok(self.space.check_dim(x.len())?)
    }

    /// Envelope value at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, KatetovError> {
        Ok(self.eval_with_piece(x)?.0)
    }

    /// Envelope value with an affine minorant `⟨φ, ·⟩ − s`, `φ ∈ B*`, that
    /// touches the envelope at `x`.
    pub fn eval_with_piece(&self, x: &[f64]) -> Result<(f64, Piece), KatetovError> {
        self.check(x)?;
        let d = self.dim();
        if self.points.len() == 1 {
            // ‖x − y‖ + c, normed by a witness functional
            let (n, phi) = self.space.norm_with_witness(&sub(x, &self.points[0]))?;
            let s = dot(&phi, &self.points[0]) - self.values[0];
            return Ok((n + self.values[0], Piece { phi, s }));
        }
        let mut b = LpBuilder::new();
        let phi = b.free_vars(d);
        let s = b.free();
        let phi_e: Vec<LinExpr> = phi.iter().map(|&p| LinExpr::var(p)).collect();
        self.space.add_dual_ball(&mut b, &phi_e, None);
        for (y, &c) in self.points.iter().zip(&self.values) {
            let mut e = LinExpr::new();
            for (&p, &yk) in phi.iter().zip(y) {
                e.add_term(p, yk);
            }
            e.add_term(s, -1.0);
            b.constrain(e, Relation::Le, c);
        }
        let mut obj = LinExpr::var(s).scaled(-1.0);
        for (&p, &xk) in phi.iter().zip(x) {
            obj.add_term(p, xk);
        }
        b.set_objective(obj);
        let sol = b.optimum(Sense::Maximize)?;
        let phi_v: Vector = phi.iter().map(|&p| sol.primal[p]).collect();
        let s_v = self
            .points
            .iter()
            .zip(&self.values)
            .map(|(y, c)| dot(&phi_v, y) - c)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((sol.objective, Piece { phi: phi_v, s: s_v }))
    }

    /// Envelope value through the decomposition LP
    /// `min Σ ‖uⱼ − λⱼyⱼ‖ + λⱼcⱼ`, `Σuⱼ = x`, `Σλⱼ = 1`, `λ ≥ 0`.
    pub fn eval_primal(&self, x: &[f64]) -> Result<f64, KatetovError> {
        self.check(x)?;
        let d = self.dim();
        let mut b = LpBuilder::new();
        let mut sum_u: Vec<LinExpr> = vec![LinExpr::new(); d];
        let mut sum_l = LinExpr::new();
        let mut obj = LinExpr::new();
        for (y, &c) in self.points.iter().zip(&self.values) {
            let u = b.free_vars(d);
            let l = b.nonneg();
            let t = b.nonneg();
            let z: Vec<LinExpr> = (0..d)
                .map(|k| LinExpr::var(u[k]).term(l, -y[k]))
                .collect();
            self.space.add_norm_epigraph(&mut b, &z, &LinExpr::var(t));
            for k in 0..d {
                sum_u[k].add_term(u[k], 1.0);
            }
            sum_l.add_term(l, 1.0);
            obj.add_term(t, 1.0);
            obj.add_term(l, c);
        }
        for (k, e) in sum_u.into_iter().enumerate() {
            b.constrain(e, Relation::Eq, x[k]);
        }
        b.constrain(sum_l, Relation::Eq, 1.0);
        b.set_objective(obj);
        Ok(b.optimum(Sense::Minimize)?.objective)
    }

    /// `sup_x ⟨f, x⟩ − ck(x) = maxⱼ ⟨f, yⱼ⟩ − cⱼ` for `‖f‖* ≤ 1`.
    pub fn conjugate(&self, f: &[f64]) -> Result<f64, KatetovError> {
        self.check(f)?;
        let dn = self.space.dual_norm(f)?;
        if dn > 1.0 + 1e-9 {
            return Err(KatetovError::FunctionalTooLarge { dual_norm: dn });
        }
        Ok(self.conjugate_unchecked(f))
    }

    pub(crate) fn conjugate_unchecked(&self, f: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(&self.values)
            .map(|(y, c)| dot(f, y) - c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Supremum distance, attained on the union of the two supports.
    pub fn sup_distance(&self, other: &Self) -> Result<f64, KatetovError> {
        Ok(self.sup_distance_witness(other)?.0)
    }

    /// Supremum distance and a point of the union of supports attaining it.
    pub fn sup_distance_witness(&self, other: &Self) -> Result<(f64, Vector), KatetovError> {
        if !self.same_space(other) {
            return Err(KatetovError::SpaceMismatch);
        }
        let mut best = (0.0, self.points[0].clone());
        for (y, &c) in self.points.iter().zip(&self.values) {
            let d = (c - other.eval(y)?).abs();
            if d > best.0 {
                best = (d, y.clone());
            }
        }
        for (y, &c) in other.points.iter().zip(&other.values) {
            let d = (c - self.eval(y)?).abs();
            if d > best.0 {
                best = (d, y.clone());
            }
        }
        Ok(best)
    }

    /// `‖αx − a‖` in the one-point extension `E(x)` determined by the
    /// envelope: `|α|·ck(a/α)`, or `‖a‖` when `α = 0`.
    pub fn one_point_norm(&self, alpha: f64, a: &[f64]) -> Result<f64, KatetovError> {
        self.check(a)?;
        if alpha == 0.0 {
            return Ok(self.space.norm(a)?);
        }
        let x: Vector = a.iter().map(|v| v / alpha).collect();
        Ok(alpha.abs() * self.eval(&x)?)
    }

    /// Dual unit ball of the one-point extension `E(x)` in coordinates
    /// `(b, α) ↦ b + αx`.
    pub fn extension_ball(&self) -> DualBall {
        relative_dual_ball(&self.space, &[self], &[])
    }

    /// Adds `‖b + αx‖ ≤ t` in the one-point extension to an LP.
    pub fn add_extension_epigraph(
        &self,
        lp: &mut LpBuilder,
        b: &[LinExpr],
        alpha: &LinExpr,
        t: &LinExpr,
    ) {
        let mut z = b.to_vec();
        z.push(alpha.clone());
        self.extension_ball().add_support_epigraph(lp, &z, t);
    }
}

/// Dual unit ball of the space spanned by `E` and new points `u₁, …, u_k`
/// realizing the envelopes, in coordinates `(a, α) ↦ a + Σ αᵢuᵢ`.
///
/// A functional is a pair `(λ, f)` with `λ` linear on `E`, `fᵢ` its value at
/// `uᵢ`, and it has norm at most one iff it is 1-Lipschitz on
/// `E ∪ {u₁, …, u_k}` with `d(uᵢ, a) = ξᵢ(a)`:
///
/// * `‖λ‖* ≤ 1`;
/// * `|fᵢ − λ(a)| ≤ ξᵢ(a)` for every `a ∈ E`. Both sides are convex in `a`, so
///   the family collapses to `ξᵢ*(λ) ≤ fᵢ ≤ −ξᵢ*(−λ)`, and the conjugate of a
///   canonical envelope is `maxⱼ ⟨λ, yⱼ⟩ − cⱼ` on `B*`: two linear rows per
///   generator point;
/// * `|fᵢ − fₖ| ≤ d(uᵢ, uₖ)` for each listed pair.
pub fn relative_dual_ball(
    space: &Space,
    envelopes: &[&ConvexKatetovEnvelope],
    pair_bounds: &[(usize, usize, f64)],
) -> DualBall {
    let base = space.to_dual_ball();
    let d = base.dim;
    let k = envelopes.len();
    let width = d + k + base.lift;
    let mut rows = Vec::new();
    for r in &base.rows {
        let mut c = vec![0.0; width];
        c[..d].copy_from_slice(&r.coeffs[..d]);
        c[d + k..].copy_from_slice(&r.coeffs[d..]);
        rows.push(BallRow {
            coeffs: c,
            relation: r.relation,
            rhs: r.rhs,
        });
    }
    for (i, ck) in envelopes.iter().enumerate() {
        for (y, &c) in ck.points.iter().zip(&ck.values) {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; width];
                for (rk, yk) in row.iter_mut().zip(y) {
                    *rk = sign * yk;
                }
                row[d + i] = -sign;
                rows.push(BallRow {
                    coeffs: row,
                    relation: Relation::Le,
                    rhs: c,
                });
            }
        }
    }
    for &(i, j, dist) in pair_bounds {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; width];
            row[d + i] = sign;
            row[d + j] = -sign;
            rows.push(BallRow {
                coeffs: row,
                relation: Relation::Le,
                rhs: dist,
            });
        }
    }
    DualBall {
        dim: d + k,
        lift: base.lift,
        rows,
    }
}

#[cfg(test)]
mod tests;
