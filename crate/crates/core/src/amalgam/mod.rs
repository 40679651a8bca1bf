//! Amalgams of one-point extensions over a common base space, and the tuple
//! distance between finite families in two normed spaces together with its
//! explicit amalgam.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::katetov::{ConvexKatetovEnvelope, KatetovError};
use crate::optim::{solve_lp_exact, LinExpr, LpBuilder, LpError, LpStatus, Relation, Sense};
use crate::space::{Space, SpaceError, SpaceRef};
use crate::Vector;

/// Tolerance on `r₀ ≤ r₁` and on admissible `r`.
pub const BOUNDS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmalgamError {
    #[error(transparent)]
    Katetov(#[from] KatetovError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("envelopes live over different spaces")]
    SpaceMismatch,
    #[error("r0 = {r0} exceeds r1 = {r1}")]
    BoundsInverted { r0: f64, r1: f64 },
    #[error("r = {r} outside [{r0}, {r1}]")]
    RadiusOutOfRange { r: f64, r0: f64, r1: f64 },
    #[error("tuples have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty tuple")]
    EmptyTuple,
    #[error("r = {r} below the tuple distance {distance}")]
    RadiusTooSmall { r: f64, distance: f64 },
    #[error("exact mode needs explicit spaces")]
    ExactNeedsExplicit,
}

/// `(r₀, r₁)`: the sup distance and `min_a ξ₀(a) + ξ₁(a)`.
pub fn amalgam_bounds(
    ck0: &ConvexKatetovEnvelope,
    ck1: &ConvexKatetovEnvelope,
) -> Result<(f64, f64), AmalgamError> {
    if !ck0.same_space(ck1) {
        return Err(AmalgamError::SpaceMismatch);
    }
    let r0 = ck0.sup_distance(ck1)?;
    let r1 = min_sum(ck0, ck1)?;
    if r0 > r1 + BOUNDS_TOL * (1.0 + r1.abs()) {
        return Err(AmalgamError::BoundsInverted { r0, r1 });
    }
    Ok((r0, r1))
}

/// Adds the decomposition form of `ck(a) ≤ Σ (tⱼ + λⱼcⱼ)` to `b` and returns
/// that bound as an expression.
fn add_envelope_epigraph(
    b: &mut LpBuilder,
    ck: &ConvexKatetovEnvelope,
    a: &[LinExpr],
) -> LinExpr {
    let d = ck.dim();
    let mut sum_u: Vec<LinExpr> = vec![LinExpr::new(); d];
    let mut sum_l = LinExpr::new();
    let mut bound = LinExpr::new();
    for (y, &c) in ck.points().iter().zip(ck.values()) {
        let u = b.free_vars(d);
        let l = b.nonneg();
        let t = b.nonneg();
        let z: Vec<LinExpr> = (0..d).map(|k| LinExpr::var(u[k]).term(l, -y[k])).collect();
        ck.space().add_norm_epigraph(b, &z, &LinExpr::var(t));
        for k in 0..d {
            sum_u[k].add_term(u[k], 1.0);
        }
        sum_l.add_term(l, 1.0);
        bound.add_term(t, 1.0);
        bound.add_term(l, c);
    }
    for (k, mut e) in sum_u.into_iter().enumerate() {
        e.add_expr(&a[k], -1.0);
        b.constrain(e, Relation::Eq, 0.0);
    }
    b.constrain(sum_l, Relation::Eq, 1.0);
    bound
}

fn min_sum(ck0: &ConvexKatetovEnvelope, ck1: &ConvexKatetovEnvelope) -> Result<f64, AmalgamError> {
    let mut b = LpBuilder::new();
    let a: Vec<LinExpr> = b.free_vars(ck0.dim()).into_iter().map(LinExpr::var).collect();
    let mut obj = add_envelope_epigraph(&mut b, ck0, &a);
    obj.add_expr(&add_envelope_epigraph(&mut b, ck1, &a), 1.0);
    b.set_objective(obj);
    Ok(b.optimum(Sense::Minimize)?.objective)
}

/// Seminorm on `E ⊕ ℝx₀ ⊕ ℝx₁` extending both one-point extensions with
/// `‖x₀ − x₁‖ = r`.
#[derive(Debug, Clone)]
pub struct TwoPointExtension {
    pub ck0: ConvexKatetovEnvelope,
    pub ck1: ConvexKatetovEnvelope,
    pub r: f64,
    pub r0: f64,
    pub r1: f64,
    /// Weight of the `r₀` seminorm.
    pub t: f64,
}

impl TwoPointExtension {
    pub fn new(
        ck0: ConvexKatetovEnvelope,
        ck1: ConvexKatetovEnvelope,
        r: f64,
    ) -> Result<Self, AmalgamError> {
        let (r0, r1) = amalgam_bounds(&ck0, &ck1)?;
        let tol = BOUNDS_TOL * (1.0 + r1.abs());
        if !(r >= r0 - tol && r <= r1 + tol) {
            return Err(AmalgamError::RadiusOutOfRange { r, r0, r1 });
        }
        let t = if r1 - r0 > tol {
            ((r1 - r) / (r1 - r0)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        Ok(TwoPointExtension {
            ck0,
            ck1,
            r,
            r0,
            r1,
            t,
        })
    }

    /// `min_{b, γ} ‖b + (α+γ)x₀‖ + ‖a − b + (β−γ)x₁‖ + w|γ|`; with
    /// `w = None` the shift `γ` is pinned to zero.
    fn glued(&self, a: &[f64], alpha: f64, beta: f64, w: Option<f64>) -> Result<f64, AmalgamError> {
        let d = self.ck0.dim();
        let mut lp = LpBuilder::new();
        let bv = lp.free_vars(d);
        let t0 = lp.free();
        let t1 = lp.free();
        let mut obj = LinExpr::var(t0).term(t1, 1.0);
        let gamma = match w {
            Some(w) => {
                let g = lp.free();
                let abs = lp.nonneg();
                lp.abs_le(&LinExpr::var(g), abs);
                obj.add_term(abs, w);
                LinExpr::var(g)
            }
            None => LinExpr::new(),
        };
        let left: Vec<LinExpr> = bv.iter().map(|&v| LinExpr::var(v)).collect();
        let right: Vec<LinExpr> = bv
            .iter()
            .zip(a)
            .map(|(&v, &ak)| LinExpr::constant(ak).term(v, -1.0))
            .collect();
        self.ck0.add_extension_epigraph(
            &mut lp,
            &left,
            &gamma.clone().plus_constant(alpha),
            &LinExpr::var(t0),
        );
        self.ck1.add_extension_epigraph(
            &mut lp,
            &right,
            &gamma.scaled(-1.0).plus_constant(beta),
            &LinExpr::var(t1),
        );
        lp.set_objective(obj);
        Ok(lp.optimum(Sense::Minimize)?.objective)
    }

    /// Seminorm with `‖x₀ − x₁‖ = r₀`.
    pub fn norm_r0(&self, a: &[f64], alpha: f64, beta: f64) -> Result<f64, AmalgamError> {
        self.glued(a, alpha, beta, Some(self.r0))
    }

    /// Greatest seminorm, `‖x₀ − x₁‖ = r₁`.
    pub fn norm_r1(&self, a: &[f64], alpha: f64, beta: f64) -> Result<f64, AmalgamError> {
        self.glued(a, alpha, beta, None)
    }
}

/// `‖a + αx₀ + βx₁‖_r = t·N_{r₀} + (1−t)·N_{r₁}`.
pub fn two_point_norm(
    tpe: &TwoPointExtension,
    a: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<f64, AmalgamError> {
    tpe.ck0.space().check_dim(a.len())?;
    let mut v = 0.0;
    if tpe.t > 0.0 {
        v += tpe.t * tpe.norm_r0(a, alpha, beta)?;
    }
    if tpe.t < 1.0 {
        v += (1.0 - tpe.t) * tpe.norm_r1(a, alpha, beta)?;
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `‖Σ sᵢxᵢ‖_E` exceeds `‖Σ sᵢyᵢ‖_F` at the maximiser.
    E,
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HensonResult {
    pub value: f64,
    /// Maximising coefficients, `‖s‖₁ = 1` (zero when the value is zero).
    pub direction: Vector,
    pub side: Side,
}

fn check_tuples(
    e: &Space,
    xs: &[Vector],
    f: &Space,
    ys: &[Vector],
) -> Result<(), AmalgamError> {
    if xs.len() != ys.len() {
        return Err(AmalgamError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(AmalgamError::EmptyTuple);
    }
    for x in xs {
        e.check_dim(x.len())?;
    }
    for y in ys {
        f.check_dim(y.len())?;
    }
    Ok(())
}

/// `max {⟨c, s⟩ − ‖Σ sᵢyᵢ‖_F : ‖s‖₁ ≤ 1}` for each pulled-back generator `c`
/// of the other side.
fn one_sided(
    gens: &[Vector],
    f: &Space,
    ys: &[Vector],
    exact: bool,
) -> Result<(f64, Vector), AmalgamError> {
    let k = ys.len();
    let mut best = (0.0, vec![0.0; k]);
    for c in gens {
        let mut b = LpBuilder::new();
        let s = b.free_vars(k);
        let w = b.nonneg_vars(k);
        let t = b.free();
        let mut l1 = LinExpr::new();
        for i in 0..k {
            b.abs_le(&LinExpr::var(s[i]), w[i]);
            l1.add_term(w[i], 1.0);
        }
        b.constrain(l1, Relation::Le, 1.0);
        let z: Vec<LinExpr> = (0..f.dim())
            .map(|j| {
                let mut e = LinExpr::new();
                for i in 0..k {
                    e.add_term(s[i], ys[i][j]);
                }
                e
            })
            .collect();
        f.add_norm_epigraph(&mut b, &z, &LinExpr::var(t));
        let mut obj = LinExpr::var(t).scaled(-1.0);
        for i in 0..k {
            obj.add_term(s[i], c[i]);
        }
        b.set_objective(obj);
        let (val, dir) = if exact {
            let sol = solve_lp_exact(&b.build(Sense::Maximize))?;
            if sol.status != LpStatus::Optimal {
                return Err(LpError::NotOptimal(sol.status).into());
            }
            use num_traits::ToPrimitive;
            let dir: Vector = s
                .iter()
                .map(|&v| sol.primal[v].to_f64().unwrap_or(f64::NAN))
                .collect();
            (sol.objective_f64(), dir)
        } else {
            let sol = b.optimum(Sense::Maximize)?;
            (sol.objective, s.iter().map(|&v| sol.primal[v]).collect())
        };
        if val > best.0 {
            best = (val, dir);
        }
    }
    Ok(best)
}

fn normalize_l1(mut s: Vector) -> Vector {
    let n: f64 = s.iter().map(|x| x.abs()).sum();
    if n > 0.0 {
        s.iter_mut().for_each(|x| *x /= n);
    }
    s
}

fn henson_impl(
    e: &Space,
    xs: &[Vector],
    f: &Space,
    ys: &[Vector],
    exact: bool,
) -> Result<HensonResult, AmalgamError> {
    check_tuples(e, xs, f, ys)?;
    let pe = e.subspace_pullback(xs)?;
    let pf = f.subspace_pullback(ys)?;
    let (ve, de) = one_sided(pe.generators(), f, ys, exact)?;
    let (vf, df) = one_sided(pf.generators(), e, xs, exact)?;
    Ok(if ve >= vf {
        HensonResult {
            value: ve.max(0.0),
            direction: normalize_l1(de),
            side: Side::E,
        }
    } else {
        HensonResult {
            value: vf.max(0.0),
            direction: normalize_l1(df),
            side: Side::F,
        }
    })
}

/// `sup_{Σ|sᵢ| = 1} |‖Σ sᵢxᵢ‖_E − ‖Σ sᵢyᵢ‖_F|` with a maximising direction.
///
/// The objective is positively homogeneous, so the sup over the ℓ¹ sphere
/// equals the sup over the ℓ¹ ball; splitting `‖·‖_E` into its pulled-back
/// generators makes each piece a concave maximisation, i.e. one LP.
pub fn henson_distance(
    e: &Space,
    xs: &[Vector],
    f: &Space,
    ys: &[Vector],
) -> Result<HensonResult, AmalgamError> {
    henson_impl(e, xs, f, ys, false)
}

/// [`henson_distance`] solved in exact rational arithmetic (explicit spaces).
pub fn henson_distance_exact(
    e: &Space,
    xs: &[Vector],
    f: &Space,
    ys: &[Vector],
) -> Result<HensonResult, AmalgamError> {
    if e.as_poly().is_none() || f.as_poly().is_none() {
        return Err(AmalgamError::ExactNeedsExplicit);
    }
    henson_impl(e, xs, f, ys, true)
}

/// Seminorm on `E ⊕ F` gluing `xᵢ` to `yᵢ` at distance at most `r`.
#[derive(Debug, Clone)]
pub struct TupleAmalgam {
    pub e: SpaceRef,
    pub xs: Vec<Vector>,
    pub f: SpaceRef,
    pub ys: Vec<Vector>,
    pub r: f64,
}

impl TupleAmalgam {
    /// Checks `r` against the tuple distance.
    pub fn new(
        e: SpaceRef,
        xs: Vec<Vector>,
        f: SpaceRef,
        ys: Vec<Vector>,
        r: f64,
    ) -> Result<Self, AmalgamError> {
        let h = henson_distance(&e, &xs, &f, &ys)?.value;
        if r < h - BOUNDS_TOL * (1.0 + h) {
            return Err(AmalgamError::RadiusTooSmall { r, distance: h });
        }
        Ok(TupleAmalgam { e, xs, f, ys, r })
    }

    /// No check on `r`; below the tuple distance the result no longer
    /// restricts isometrically to both sides.
    pub fn with_radius_unchecked(
        e: SpaceRef,
        xs: Vec<Vector>,
        f: SpaceRef,
        ys: Vec<Vector>,
        r: f64,
    ) -> Result<Self, AmalgamError> {
        check_tuples(&e, &xs, &f, &ys)?;
        Ok(TupleAmalgam { e, xs, f, ys, r })
    }

    /// Adds `‖(zE, zF)‖′ ≤ t` with `zE`, `zF` affine in LP variables.
    pub fn add_epigraph(&self, b: &mut LpBuilder, ze: &[LinExpr], zf: &[LinExpr], t: &LinExpr) {
        let k = self.xs.len();
        let s = b.free_vars(k);
        let w = b.nonneg_vars(k);
        let te = b.free();
        let tf = b.free();
        for i in 0..k {
            b.abs_le(&LinExpr::var(s[i]), w[i]);
        }
        let left: Vec<LinExpr> = (0..self.e.dim())
            .map(|j| {
                let mut e = ze[j].clone();
                for i in 0..k {
                    e.add_term(s[i], -self.xs[i][j]);
                }
                e
            })
            .collect();
        let right: Vec<LinExpr> = (0..self.f.dim())
            .map(|j| {
                let mut e = zf[j].clone();
                for i in 0..k {
                    e.add_term(s[i], self.ys[i][j]);
                }
                e
            })
            .collect();
        self.e.add_norm_epigraph(b, &left, &LinExpr::var(te));
        self.f.add_norm_epigraph(b, &right, &LinExpr::var(tf));
        let mut e = LinExpr::var(te).term(tf, 1.0);
        for &wi in &w {
            e.add_term(wi, self.r);
        }
        e.add_expr(t, -1.0);
        b.constrain(e, Relation::Le, 0.0);
    }
}

/// `min_s ‖zE − Σ sᵢxᵢ‖_E + ‖zF + Σ sᵢyᵢ‖_F + r Σ|sᵢ|`.
pub fn tuple_amalgam_norm(ta: &TupleAmalgam, ze: &[f64], zf: &[f64]) -> Result<f64, AmalgamError> {
    ta.e.check_dim(ze.len())?;
    ta.f.check_dim(zf.len())?;
    let mut b = LpBuilder::new();
    let t = b.free();
    let ze: Vec<LinExpr> = ze.iter().map(|&v| LinExpr::constant(v)).collect();
    let zf: Vec<LinExpr> = zf.iter().map(|&v| LinExpr::constant(v)).collect();
    ta.add_epigraph(&mut b, &ze, &zf, &LinExpr::var(t));
    b.set_objective(LinExpr::var(t));
    Ok(b.optimum(Sense::Minimize)?.objective)
}
