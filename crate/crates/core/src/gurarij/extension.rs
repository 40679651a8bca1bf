//! One-point extensions realized inside the tower, with measured distortion.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sample::{sample_ball_point, sphere_net};
use super::GurarijError;
use crate::aells::{adjoin, RelativeSpaceOverE};
use crate::amalgam::{henson_distance, TupleAmalgam};
use crate::katetov::{ConvexKatetovEnvelope, Piece};
use crate::mat::{self, Matrix};
use crate::optim::{LinExpr, LpBuilder, Relation, Sense};
use crate::space::{
    combine, enumerate_vertices, rank, OracleNormedSpace, PolyNormedSpace, Provenance, Space,
    SpaceRef,
};
use crate::Vector;

/// Default number of net directions.
pub const DEFAULT_NET: usize = 64;

/// Ratios `‖x‖/|t|` probed by the extension nets: `‖x‖ ∈ {1, 2, 4, 8}` and
/// `|t| ∈ {1, ½, ¼}`. Both norms are homogeneous, so each `(x, t)` is
/// evaluated at the representative `(x/|t|, ±1)`, and the net is symmetric,
/// so `t < 0` repeats `t > 0` on `−x`.
const RATIOS: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

const KELLEY_TOL: f64 = 1e-9;
const KELLEY_ROUNDS: usize = 200;

fn is_new_piece(pieces: &[Piece], p: &Piece) -> bool {
    !pieces.iter().any(|q| {
        (q.s - p.s).abs() <= 1e-10 * (1.0 + p.s.abs())
            && q.phi.iter().zip(&p.phi).all(|(a, b)| (a - b).abs() <= 1e-10)
    })
}

/// Exact generator for the restriction of a convex function to the ball
/// `{x : ‖x‖_P ≤ R}`.
///
/// Returns the vertices `q` of `epi ξ ∩ (ball × ℝ)` with values `ξ(q)`: the
/// convex envelope of `min_q ‖· − q‖ + ξ(q)` is then the greatest 1-Lipschitz
/// convex function agreeing with `ξ` on the ball. The pieces of `ξ` are
/// discovered lazily (Kelley): enumerate the vertices of the current
/// outer approximation, query `ξ` there, add the touching piece wherever the
/// approximation is too low.
pub fn restrict_to_ball(
    p: &PolyNormedSpace,
    radius: f64,
    oracle: impl Fn(&[f64]) -> Result<(f64, Piece), GurarijError>,
) -> Result<(Vec<Vector>, Vec<f64>), GurarijError> {
    if !p.is_positive_definite() {
        return Err(GurarijError::DependentBasis);
    }
    let k = p.dim();
    let ball_rows: Vec<(Vector, f64)> = p
        .generators()
        .iter()
        .map(|g| {
            let mut r = g.clone();
            r.push(0.0);
            (r, radius)
        })
        .collect();
    let mut pieces: Vec<Piece> = Vec::new();
    let mut seeds = vec![vec![0.0; k]];
    seeds.extend(
        p.unit_ball_vertices()
            .into_iter()
            .map(|v| v.iter().map(|x| x * radius).collect()),
    );
    for x in &seeds {
        let (_, piece) = oracle(x)?;
        if is_new_piece(&pieces, &piece) {
            pieces.push(piece);
        }
    }
    for _ in 0..KELLEY_ROUNDS {
        let mut rows = ball_rows.clone();
        for pc in &pieces {
            let mut r = pc.phi.clone();
            r.push(-1.0);
            rows.push((r, pc.s));
        }
        let verts = enumerate_vertices(&rows, k + 1);
        let mut grew = false;
        let mut out_pts = Vec::with_capacity(verts.len());
        let mut out_vals = Vec::with_capacity(verts.len());
        for v in &verts {
            let x = &v[..k];
            let (val, piece) = oracle(x)?;
            if val > v[k] + KELLEY_TOL * (1.0 + val.abs()) {
                if is_new_piece(&pieces, &piece) {
                    pieces.push(piece);
                    grew = true;
                }
            }
            out_pts.push(x.to_vec());
            out_vals.push(val);
        }
        if !grew {
            return Ok((out_pts, out_vals));
        }
    }
    Err(GurarijError::Precondition(
        "ball restriction did not converge".into(),
    ))
}

/// `ξ(s·)/s` with `s = ξ(0)`: the same extension with the new point rescaled
/// to norm one.
pub fn normalize_at_origin(
    ck: &ConvexKatetovEnvelope,
) -> Result<ConvexKatetovEnvelope, GurarijError> {
    let s = ck.eval(&vec![0.0; ck.dim()])?;
    if s <= 0.0 {
        return Err(GurarijError::Precondition(
            "envelope vanishes at the origin".into(),
        ));
    }
    let pts = ck
        .points()
        .iter()
        .map(|y| y.iter().map(|x| x / s).collect())
        .collect();
    let vals = ck.values().iter().map(|c| c / s).collect();
    Ok(ConvexKatetovEnvelope::from_generator(
        ck.space().clone(),
        pts,
        vals,
    )?)
}

#[derive(Debug, Clone)]
pub struct ExtensionOutcome {
    /// `E_n` with the new point appended as the last coordinate.
    pub space: SpaceRef,
    /// Restricted envelope over `E_n` realized by the new point.
    pub envelope: ConvexKatetovEnvelope,
    pub u_index: usize,
    /// Largest relative error `|‖ψx + tu‖ − ‖x + tv‖| / ‖x + tv‖` on the net.
    pub epsilon: f64,
    /// Same, restricted to net points with `‖x/t‖ ≤ R`.
    pub epsilon_inside: f64,
    /// `2/(R − 1)`.
    pub bound: f64,
    pub net_points: usize,
}

fn check_basis(e: &Space, basis: &[Vector]) -> Result<(), GurarijError> {
    for x in basis {
        e.check_dim(x.len())?;
    }
    if basis.is_empty() || rank(basis, e.dim()) < basis.len() {
        return Err(GurarijError::DependentBasis);
    }
    Ok(())
}

fn pad(v: &[f64], extra: &[f64]) -> Vector {
    let mut w = v.to_vec();
    w.extend_from_slice(extra);
    w
}

/// Adjoins to `e` a point realizing `oracle` restricted to the `radius`-ball
/// of `span(basis)`.
fn realize_restricted(
    e: &SpaceRef,
    basis: &[Vector],
    pull: &PolyNormedSpace,
    radius: f64,
    oracle: impl Fn(&[f64]) -> Result<(f64, Piece), GurarijError>,
) -> Result<(SpaceRef, ConvexKatetovEnvelope), GurarijError> {
    let (qs, vals) = restrict_to_ball(pull, radius, oracle)?;
    let pts = qs.iter().map(|q| combine(basis, q, e.dim())).collect();
    let env = ConvexKatetovEnvelope::from_generator(e.clone(), pts, vals)?;
    let rs = RelativeSpaceOverE::new(e.clone(), vec![env.clone()])?;
    let space: SpaceRef = Arc::new(adjoin(&rs, format!("{}+u", e.label())).into());
    Ok((space, env))
}

/// Realizes the one-point extension of `span(basis)` described by `xi`
/// (an envelope over the coefficient space, `ξ(x) = ‖x − v‖`, `‖v‖ = 1`)
/// inside one more tower step, after restricting `ξ` to the `radius`-ball,
/// and measures the distortion on a net.
pub fn gurarij_extension_test(
    e: &SpaceRef,
    basis: &[Vector],
    xi: &ConvexKatetovEnvelope,
    radius: f64,
    net_size: usize,
) -> Result<ExtensionOutcome, GurarijError> {
    check_basis(e, basis)?;
    if !(radius >= 2.0) {
        return Err(GurarijError::Precondition(format!(
            "radius {radius} below 2"
        )));
    }
    let k = basis.len();
    xi.space().check_dim(k)?;
    let norm_v = xi.eval(&vec![0.0; k])?;
    if (norm_v - 1.0).abs() > 1e-9 {
        return Err(GurarijError::Unnormalized {
            what: "v".into(),
            norm: norm_v,
        });
    }
    let pull = e.subspace_pullback(basis)?;
    let pull_space = Space::Poly(pull.clone());
    let dirs = sphere_net(&pull_space, net_size)?;
    for d in &dirs {
        let n = xi.space().norm(d)?;
        if (n - 1.0).abs() > 1e-9 {
            return Err(GurarijError::Precondition(
                "the envelope's space is not the pulled-back norm of the basis".into(),
            ));
        }
    }
    let (space, envelope) = realize_restricted(e, basis, &pull, radius, |x| {
        Ok(xi.eval_with_piece(x)?)
    })?;

    let mut eps: f64 = 0.0;
    let mut eps_in: f64 = 0.0;
    let mut count = 0;
    for d in &dirs {
        for &rho in &RATIOS {
            let x: Vector = d.iter().map(|c| c * rho).collect();
            let lhs = space.norm(&pad(&combine(basis, &x, e.dim()), &[1.0]))?;
            let neg: Vector = x.iter().map(|c| -c).collect();
            let rhs = xi.eval(&neg)?;
            let rel = (lhs - rhs).abs() / rhs;
            eps = eps.max(rel);
            if rho <= radius * (1.0 + 1e-12) {
                eps_in = eps_in.max(rel);
            }
            count += 1;
        }
    }
    Ok(ExtensionOutcome {
        u_index: space.dim() - 1,
        space,
        envelope,
        epsilon: eps,
        epsilon_inside: eps_in,
        bound: 2.0 / (radius - 1.0),
        net_points: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConstants {
    /// `max {‖x‖ : x ∈ F₀, t ≥ 0, ‖x + tv‖ ≤ 1}`.
    pub c: f64,
    /// `max {Σ|tᵢ| : ‖Σ tᵢxᵢ‖ ≤ 1}`.
    pub c_prime: f64,
    /// Set when the maxima were sampled rather than enumerated.
    pub lower_bound: bool,
}

impl PerturbationConstants {
    /// `ε / (6CC′ + 1 + ε)`.
    pub fn delta(&self, eps: f64) -> f64 {
        eps / (6.0 * self.c * self.c_prime + 1.0 + eps)
    }
}

/// Constants controlling how far the images of a normalized basis may move
/// before an extension stops being `ε`-isometric. Explicit (or extractable,
/// `k + 1 ≤ 4`) spaces use vertex enumeration; otherwise both maxima are
/// sampled and flagged as lower bounds.
pub fn perturbation_constants(
    space: &Space,
    basis: &[Vector],
    v: &[f64],
) -> Result<PerturbationConstants, GurarijError> {
    check_basis(space, basis)?;
    space.check_dim(v.len())?;
    let nv = space.norm(v)?;
    if (nv - 1.0).abs() > 1e-9 {
        return Err(GurarijError::Unnormalized {
            what: "v".into(),
            norm: nv,
        });
    }
    for (i, x) in basis.iter().enumerate() {
        let n = space.norm(x)?;
        if (n - 1.0).abs() > 1e-9 {
            return Err(GurarijError::Unnormalized {
                what: format!("basis vector {i}"),
                norm: n,
            });
        }
    }
    let mut all = basis.to_vec();
    all.push(v.to_vec());
    if rank(&all, space.dim()) < all.len() {
        return Err(GurarijError::DependentBasis);
    }
    let k = basis.len();
    let explicit = space.as_poly().is_some() || k < 4;
    if explicit {
        let w = space.subspace_pullback(&all)?;
        let p = space.subspace_pullback(basis)?;
        let mut rows: Vec<(Vector, f64)> = w.generators().iter().map(|g| (g.clone(), 1.0)).collect();
        let mut t_row = vec![0.0; k + 1];
        t_row[k] = -1.0;
        rows.push((t_row, 0.0));
        let c = enumerate_vertices(&rows, k + 1)
            .iter()
            .map(|q| p.norm(&q[..k]))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let c_prime = p
            .unit_ball_vertices()
            .iter()
            .map(|q| q.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        return Ok(PerturbationConstants {
            c,
            c_prime,
            lower_bound: false,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let cube = Space::Poly(PolyNormedSpace::linf(k + 1));
    let mut c: f64 = 1.0;
    let mut c_prime: f64 = 1.0;
    for _ in 0..2000 {
        let mut q = sample_ball_point(&mut rng, &cube, 1.0)?;
        q[k] = q[k].abs();
        let x = combine(basis, &q[..k], space.dim());
        let full = combine(&all, &q, space.dim());
        let nx = space.norm(&x)?;
        let nf = space.norm(&full)?;
        if nf > 1e-12 {
            c = c.max(nx / nf);
        }
        if nx > 1e-12 {
            c_prime = c_prime.max(q[..k].iter().map(|a| a.abs()).sum::<f64>() / nx);
        }
    }
    Ok(PerturbationConstants {
        c,
        c_prime,
        lower_bound: true,
    })
}

/// `max |‖φx‖ − 1|` over a unit-sphere net of `domain`; a lower bound on the
/// distortion of `φ`.
pub fn epsilon_isometry_check(
    map: &Matrix,
    domain: &Space,
    codomain: &Space,
    net_size: usize,
) -> Result<f64, GurarijError> {
    if map.len() != codomain.dim() || map.iter().any(|r| r.len() != domain.dim()) {
        return Err(GurarijError::Space(crate::space::SpaceError::DimensionMismatch {
            expected: codomain.dim() * domain.dim(),
            got: map.iter().map(|r| r.len()).sum(),
        }));
    }
    let mut eps: f64 = 0.0;
    for x in sphere_net(domain, net_size)? {
        let n = codomain.norm(&mat::apply(map, &x))?;
        eps = eps.max((n - 1.0).abs());
    }
    Ok(eps)
}

#[derive(Debug, Clone)]
pub struct PerturbedOutcome {
    pub constants: PerturbationConstants,
    pub delta: f64,
    /// Tuple distance between the basis of `F₀` and its perturbed images.
    pub henson: f64,
    pub radius: f64,
    pub space: SpaceRef,
    /// Largest relative error of `F → E_{n+1}` on the net.
    pub epsilon_net: f64,
    pub net_points: usize,
}

/// Extends a perturbed embedding `eᵢ ↦ xᵢ + δηᵢ` of `F₀ = span(basis)` to
/// the one-point extension `F = F₀ ⊕ ℝv` given by `xi`.
///
/// `F` and `E_n` are glued along the two tuples at their tuple distance;
/// the distance to `v` seen from `E_n` is a convex Katětov function on the
/// span of the perturbed images, realized in one tower step after
/// restriction to the ball of radius `1 + 2/δ`. `noise` holds `ηᵢ` with
/// `‖ηᵢ‖ ≤ 1`.
pub fn perturbed_extension(
    e: &SpaceRef,
    basis: &[Vector],
    xi: &ConvexKatetovEnvelope,
    eps: f64,
    noise: &[Vector],
    net_size: usize,
) -> Result<PerturbedOutcome, GurarijError> {
    check_basis(e, basis)?;
    let k = basis.len();
    if noise.len() != k {
        return Err(GurarijError::Precondition("one noise vector per basis vector".into()));
    }
    xi.space().check_dim(k)?;
    for x in basis {
        let n = e.norm(x)?;
        if (n - 1.0).abs() > 1e-9 {
            return Err(GurarijError::Unnormalized {
                what: "basis vector".into(),
                norm: n,
            });
        }
    }
    for eta in noise {
        if e.norm(eta)? > 1.0 + 1e-12 {
            return Err(GurarijError::Precondition("noise vectors must have norm ≤ 1".into()));
        }
    }

    // F in coordinates (s, t) ↦ Σ sᵢeᵢ + tv
    let f_oracle = Space::Oracle(OracleNormedSpace::new(
        "F",
        xi.extension_ball(),
        Provenance {
            base_label: xi.space().label().to_string(),
            base_dim: k,
            adjoined: 1,
        },
    ));
    let f1: SpaceRef = Arc::new(Space::Poly(f_oracle.to_explicit()?));
    let units: Vec<Vector> = (0..=k)
        .map(|i| {
            let mut u = vec![0.0; k + 1];
            u[i] = 1.0;
            u
        })
        .collect();
    let constants = perturbation_constants(&f1, &units[..k], &units[k])?;
    let delta = constants.delta(eps);

    let moved: Vec<Vector> = basis
        .iter()
        .zip(noise)
        .map(|(x, eta)| x.iter().zip(eta).map(|(a, b)| a + delta * b).collect())
        .collect();
    check_basis(e, &moved)?;
    let henson = henson_distance(&f1, &units[..k], e, &moved)?.value;
    let ta = TupleAmalgam::new(
        f1.clone(),
        units[..k].to_vec(),
        e.clone(),
        moved.clone(),
        henson,
    )?;

    // ζ(w) = ‖v − Σ wᵢx′ᵢ‖ in the amalgam; its subgradient is read off the
    // shadow prices of the rows pinning w
    let zeta = |w: &[f64]| -> Result<(f64, Piece), GurarijError> {
        let mut b = LpBuilder::new();
        let wv = b.free_vars(k);
        let rows: Vec<usize> = (0..k)
            .map(|i| b.constrain(LinExpr::var(wv[i]), Relation::Eq, w[i]))
            .collect();
        let t = b.free();
        let zf: Vec<LinExpr> = (0..=k)
            .map(|i| LinExpr::constant(if i == k { 1.0 } else { 0.0 }))
            .collect();
        let ze: Vec<LinExpr> = (0..e.dim())
            .map(|j| {
                let mut ex = LinExpr::new();
                for i in 0..k {
                    ex.add_term(wv[i], -moved[i][j]);
                }
                ex
            })
            .collect();
        ta.add_epigraph(&mut b, &zf, &ze, &LinExpr::var(t));
        b.set_objective(LinExpr::var(t));
        let sol = b.optimum(Sense::Minimize)?;
        let phi: Vector = rows.iter().map(|&r| sol.duals[r]).collect();
        let s = phi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - sol.objective;
        Ok((sol.objective, Piece { phi, s }))
    };

    let radius = 1.0 + 2.0 / delta;
    let pull = e.subspace_pullback(&moved)?;
    let (space, _) = realize_restricted(e, &moved, &pull, radius, zeta)?;

    let p = xi.space();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let dirs = sphere_net(p, net_size)?;
    let mut probe = |s: &[f64], t: f64| -> Result<(), GurarijError> {
        let mut coords = s.to_vec();
        coords.push(t);
        let reference = f1.norm(&coords)?;
        let img = pad(&combine(&moved, s, e.dim()), &[t]);
        let got = space.norm(&img)?;
        worst = worst.max((got - reference).abs() / reference);
        count += 1;
        Ok(())
    };
    probe(&vec![0.0; k], 1.0)?;
    for d in &dirs {
        probe(d, 0.0)?;
        for &rho in &RATIOS {
            let s: Vector = d.iter().map(|c| c * rho).collect();
            probe(&s, 1.0)?;
        }
    }
    Ok(PerturbedOutcome {
        constants,
        delta,
        henson,
        radius,
        space,
        epsilon_net: worst,
        net_points: count,
    })
}
