//! The acceptance suite: ten criteria, each run on seeded random instances
//! and reported as a [`CriterionResult`].

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aells::{ae_norm, relative_ae_norm, Molecule, PointedFiniteMetric, RelativeSpaceOverE};
use crate::amalgam::{
    amalgam_bounds, henson_distance, henson_distance_exact, tuple_amalgam_norm, two_point_norm,
    Side, TupleAmalgam, TwoPointExtension,
};
use crate::gurarij::sample::random_katetov;
use crate::gurarij::{
    build, gurarij_extension_test, normalize_at_origin, perturbed_extension, round_seed,
    sign_flip_group, BuildParams, DEFAULT_NET,
};
use crate::io::BuildManifest;
use crate::katetov::{convexify, ConvexKatetovEnvelope, FiniteKatetov};
use crate::optim::{LinExpr, LpBuilder, Relation, Sense};
use crate::space::{PolyNormedSpace, Space, SpaceRef};
use crate::universal::{
    check_teleman, teleman_embed, verify_g_embedding, FiniteGroupPresentation,
    LinearIsometryWitness,
};
use crate::Vector;

/// Wall-clock budget of the whole suite, in seconds.
pub const SUITE_BUDGET_S: f64 = 1200.0;

type Failure = Box<dyn std::error::Error + Send + Sync>;
type Res<T> = Result<T, Failure>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub elapsed_s: f64,
    pub metrics: BTreeMap<String, f64>,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {} ({:.1} s){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            if self.detail.is_empty() {
                String::new()
            } else {
                format!(": {}", self.detail)
            }
        )
    }
}

pub const NAMES: [&str; 10] = [
    "one-point seminorm",
    "convexification",
    "two-point amalgam",
    "tuple distance and amalgam",
    "Arens-Eells norms",
    "extension radius bound",
    "perturbed extension",
    "finite group actions",
    "build determinism",
    "suite runtime",
];

struct Outcome {
    passed: bool,
    metrics: BTreeMap<String, f64>,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            metrics: BTreeMap::new(),
            detail: String::new(),
        }
    }

    fn metric(&mut self, k: &str, v: f64) {
        self.metrics.insert(k.to_string(), v);
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            let w = what.into();
            if self.detail.is_empty() {
                self.detail = w;
            } else {
                self.detail = format!("{}; {w}", self.detail);
            }
        }
    }
}

fn inst_rng(seed: u64, criterion: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(round_seed(seed ^ criterion.wrapping_mul(0xA24B_AED4_963E_E407), i))
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vector {
    (0..d)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g
        })
        .collect()
}

/// ℓ¹, ℓ∞ or a random symmetric polytope norm.
pub fn random_space(rng: &mut ChaCha8Rng, d: usize) -> PolyNormedSpace {
    match rng.random_range(0..3) {
        0 => PolyNormedSpace::l1(d),
        1 => PolyNormedSpace::linf(d),
        _ => {
            let mut gens: Vec<Vector> = (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    e
                })
                .collect();
            for _ in 0..d + 1 {
                gens.push(gaussian(rng, d, 0.8));
            }
            PolyNormedSpace::new(format!("poly:{d}"), d, gens, true).expect("spanning")
        }
    }
}

fn space_ref(p: PolyNormedSpace) -> SpaceRef {
    Arc::new(p.into())
}

fn random_envelope(
    rng: &mut ChaCha8Rng,
    space: &SpaceRef,
    support: usize,
    radius: f64,
) -> Res<ConvexKatetovEnvelope> {
    let fk = random_katetov(rng, space, support, radius)?;
    Ok(convexify(&fk)?)
}

fn rel_close(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Runs one criterion; errors become failures.
pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let start = Instant::now();
    let out = match id {
        1 => seminorm_suite(seed),
        2 => convexify_suite(seed),
        3 => amalgam_suite(seed),
        4 => henson_suite(seed),
        5 => aells_suite(seed),
        6 => extension_suite(seed),
        7 => perturbation_suite(seed),
        8 => universality_suite(seed),
        9 => determinism_suite(seed),
        _ => Err(format!("no criterion {id}").into()),
    };
    let elapsed_s = start.elapsed().as_secs_f64();
    let (passed, metrics, detail) = match out {
        Ok(mut o) => {
            let budget = match id {
                1 => Some(60.0),
                2 => Some(120.0),
                6 => Some(600.0),
                _ => None,
            };
            if let Some(b) = budget {
                o.require(elapsed_s <= b, format!("took {elapsed_s:.1} s, budget {b} s"));
            }
            (o.passed, o.metrics, o.detail)
        }
        Err(e) => (false, BTreeMap::new(), format!("error: {e}")),
    };
    CriterionResult {
        id,
        name: NAMES[(id as usize).saturating_sub(1).min(9)].to_string(),
        passed,
        elapsed_s,
        metrics,
        detail,
    }
}

/// Criteria 1 through 9, then the runtime of the whole run as criterion 10.
pub fn run_all(seed: u64, mut on_result: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let start = Instant::now();
    let mut out = Vec::with_capacity(10);
    for id in 1..=9 {
        let r = run_criterion(id, seed);
        on_result(&r);
        out.push(r);
    }
    let total = start.elapsed().as_secs_f64();
    let mut metrics = BTreeMap::new();
    metrics.insert("total_s".to_string(), total);
    let r = CriterionResult {
        id: 10,
        name: NAMES[9].to_string(),
        passed: total <= SUITE_BUDGET_S,
        elapsed_s: total,
        metrics,
        detail: if total <= SUITE_BUDGET_S {
            String::new()
        } else {
            format!("suite took {total:.1} s, budget {SUITE_BUDGET_S} s")
        },
    };
    on_result(&r);
    out.push(r);
    out
}

/// Proof cases of the triangle inequality for `‖αx − a‖`.
fn sign_case(alpha: f64, beta: f64) -> usize {
    if alpha == 0.0 && beta == 0.0 {
        0
    } else if alpha * beta > 0.0 {
        1
    } else if alpha == -beta {
        2
    } else {
        3
    }
}

fn seminorm_suite(seed: u64) -> Res<Outcome> {
    let results: Vec<(usize, f64)> = (0..1000)
        .into_par_iter()
        .map(|i| -> Res<(usize, f64)> {
            let mut rng = inst_rng(seed, 1, i);
            let d = 1 + i % 3;
            let space = space_ref(random_space(&mut rng, d));
            let support = rng.random_range(1..=4);
            let ck = random_envelope(&mut rng, &space, support, 2.0)?;
            let a = gaussian(&mut rng, d, 2.0);
            let b = gaussian(&mut rng, d, 2.0);
            let mag = |rng: &mut ChaCha8Rng| -> f64 { rng.random_range(0.1..2.0) };
            let sign = |rng: &mut ChaCha8Rng| -> f64 { if rng.random_bool(0.5) { 1.0 } else { -1.0 } };
            let (alpha, beta) = match i % 4 {
                0 => (0.0, 0.0),
                1 => {
                    let s = sign(&mut rng);
                    (s * mag(&mut rng), s * mag(&mut rng))
                }
                2 => {
                    let x = sign(&mut rng) * mag(&mut rng);
                    (x, -x)
                }
                _ => {
                    let x = sign(&mut rng) * mag(&mut rng);
                    let y = if rng.random_bool(0.25) {
                        0.0
                    } else {
                        let mut m = mag(&mut rng);
                        if (m - x.abs()).abs() < 1e-3 {
                            m += 0.5;
                        }
                        -x.signum() * m
                    };
                    if rng.random_bool(0.5) {
                        (x, y)
                    } else {
                        (y, x)
                    }
                }
            };
            let sum: Vector = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let lhs = ck.one_point_norm(alpha + beta, &sum)?;
            let rhs = ck.one_point_norm(alpha, &a)? + ck.one_point_norm(beta, &b)?;
            Ok((sign_case(alpha, beta), (lhs - rhs) / (1.0 + rhs)))
        })
        .collect::<Res<Vec<_>>>()?;
    let mut o = Outcome::new();
    let mut counts = [0usize; 4];
    let mut worst = f64::NEG_INFINITY;
    for (c, excess) in &results {
        counts[*c] += 1;
        worst = worst.max(*excess);
    }
    o.metric("instances", results.len() as f64);
    o.metric("max_relative_excess", worst);
    for (c, n) in counts.iter().enumerate() {
        o.metric(&format!("case_{}", c + 1), *n as f64);
        o.require(*n >= 100, format!("case {} hit {n} times", c + 1));
    }
    o.require(worst <= 1e-8, format!("triangle inequality off by {worst:e}"));
    Ok(o)
}

/// Convexify on `conv(supp)` first, then extend to the whole space:
/// `min ‖x − Σuⱼ‖ + Σ ‖uⱼ − μⱼyⱼ‖ + μⱼcⱼ` with `uⱼ ∈ μⱼ·conv(supp)`.
pub fn convexify_then_extend(fk: &FiniteKatetov, x: &[f64]) -> Res<f64> {
    let n = fk.len();
    let d = fk.space.dim();
    let mut b = LpBuilder::new();
    let w: Vec<Vec<usize>> = (0..n).map(|_| b.nonneg_vars(n)).collect();
    let mut total = LinExpr::new();
    let mut obj = LinExpr::new();
    let mut outer: Vec<LinExpr> = x.iter().map(|&v| LinExpr::constant(v)).collect();
    for j in 0..n {
        let mut inner = vec![LinExpr::new(); d];
        for k in 0..n {
            total.add_term(w[j][k], 1.0);
            obj.add_term(w[j][k], fk.values[j]);
            for c in 0..d {
                outer[c].add_term(w[j][k], -fk.support[k][c]);
                inner[c].add_term(w[j][k], fk.support[k][c] - fk.support[j][c]);
            }
        }
        let t = b.nonneg();
        fk.space.add_norm_epigraph(&mut b, &inner, &LinExpr::var(t));
        obj.add_term(t, 1.0);
    }
    b.constrain(total, Relation::Eq, 1.0);
    let t0 = b.nonneg();
    fk.space.add_norm_epigraph(&mut b, &outer, &LinExpr::var(t0));
    obj.add_term(t0, 1.0);
    b.set_objective(obj);
    Ok(b.optimum(Sense::Minimize)?.objective)
}

fn convexify_suite(seed: u64) -> Res<Outcome> {
    let results: Vec<(f64, f64, f64)> = (0..100)
        .into_par_iter()
        .map(|i| -> Res<(f64, f64, f64)> {
            let mut rng = inst_rng(seed, 2, i);
            let d = 1 + i % 3;
            let space = space_ref(random_space(&mut rng, d));
            let support = rng.random_range(2..=5);
            let fk = random_katetov(&mut rng, &space, support, 2.0)?;
            let ck = convexify(&fk)?;
            let mut kat: f64 = f64::NEG_INFINITY;
            let mut pts: Vec<Vector> = fk.support.clone();
            for _ in 0..10 {
                pts.push(gaussian(&mut rng, d, 3.0));
            }
            let vals = pts.iter().map(|p| ck.eval(p)).collect::<Result<Vec<_>, _>>()?;
            for p in 0..pts.len() {
                for q in 0..p {
                    let diff: Vector = pts[p].iter().zip(&pts[q]).map(|(a, b)| a - b).collect();
                    let dist = space.norm(&diff)?;
                    kat = kat
                        .max((vals[p] - vals[q]).abs() - dist)
                        .max(dist - vals[p] - vals[q]);
                    let mid: Vector = pts[p].iter().zip(&pts[q]).map(|(a, b)| 0.5 * (a + b)).collect();
                    kat = kat.max(ck.eval(&mid)? - 0.5 * (vals[p] + vals[q]));
                }
            }
            let mut commute: f64 = 0.0;
            let mut primal: f64 = 0.0;
            for _ in 0..5 {
                let x = gaussian(&mut rng, d, 3.0);
                let v = ck.eval(&x)?;
                commute = commute.max(rel_close(convexify_then_extend(&fk, &x)?, v));
                primal = primal.max(rel_close(ck.eval_primal(&x)?, v));
            }
            Ok((kat, commute, primal))
        })
        .collect::<Res<Vec<_>>>()?;
    let kat = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let commute = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let primal = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut o = Outcome::new();
    o.metric("instances", results.len() as f64);
    o.metric("max_katetov_excess", kat);
    o.metric("max_commutation_error", commute);
    o.metric("max_primal_dual_error", primal);
    o.require(kat <= 1e-8, format!("Katětov or convexity violated by {kat:e}"));
    o.require(commute <= 1e-8, format!("commutation off by {commute:e}"));
    o.require(primal <= 1e-8, format!("envelope routes disagree by {primal:e}"));
    Ok(o)
}

/// `inf_a ξ₀(a) + ξ₁(a)` through the conjugates:
/// `max −ξ₀*(f) − ξ₁*(−f)` over the dual unit ball.
pub fn r1_by_conjugates(ck0: &ConvexKatetovEnvelope, ck1: &ConvexKatetovEnvelope) -> Res<f64> {
    let space = ck0.space();
    let d = space.dim();
    let mut b = LpBuilder::new();
    let f = b.free_vars(d);
    let fx: Vec<LinExpr> = f.iter().map(|&v| LinExpr::var(v)).collect();
    space.add_dual_ball(&mut b, &fx, None);
    let s0 = b.free();
    let s1 = b.free();
    for (y, &c) in ck0.points().iter().zip(ck0.values()) {
        let mut e = LinExpr::var(s0);
        for k in 0..d {
            e.add_term(f[k], -y[k]);
        }
        b.constrain(e, Relation::Ge, -c);
    }
    for (y, &c) in ck1.points().iter().zip(ck1.values()) {
        let mut e = LinExpr::var(s1);
        for k in 0..d {
            e.add_term(f[k], y[k]);
        }
        b.constrain(e, Relation::Ge, -c);
    }
    b.set_objective(LinExpr::new().term(s0, -1.0).term(s1, -1.0));
    Ok(b.optimum(Sense::Maximize)?.objective)
}

fn amalgam_suite(seed: u64) -> Res<Outcome> {
    let results: Vec<[f64; 4]> = (0..100)
        .into_par_iter()
        .map(|i| -> Res<[f64; 4]> {
            let mut rng = inst_rng(seed, 3, i);
            let d = 1 + i % 3;
            let space = space_ref(random_space(&mut rng, d));
            let n0 = rng.random_range(1..=3);
            let n1 = rng.random_range(1..=3);
            let ck0 = random_envelope(&mut rng, &space, n0, 2.0)?;
            let ck1 = random_envelope(&mut rng, &space, n1, 2.0)?;
            let (r0, r1) = amalgam_bounds(&ck0, &ck1)?;
            let r1_oracle = rel_close(r1_by_conjugates(&ck0, &ck1)?, r1);
            let mut restrict: f64 = 0.0;
            let mut realize: f64 = 0.0;
            let rs = if r1 - r0 > 1e-9 {
                vec![r0, 0.5 * (r0 + r1), r1]
            } else {
                vec![r0]
            };
            for r in rs {
                let tpe = TwoPointExtension::new(ck0.clone(), ck1.clone(), r)?;
                for _ in 0..2 {
                    let a = gaussian(&mut rng, d, 2.0);
                    let alpha: f64 = StandardNormal.sample(&mut rng);
                    let neg: Vector = a.iter().map(|x| -x).collect();
                    let l0 = two_point_norm(&tpe, &a, alpha, 0.0)?;
                    restrict = restrict.max(rel_close(l0, ck0.one_point_norm(alpha, &neg)?));
                    let l1 = two_point_norm(&tpe, &a, 0.0, alpha)?;
                    restrict = restrict.max(rel_close(l1, ck1.one_point_norm(alpha, &neg)?));
                }
                let dist = two_point_norm(&tpe, &vec![0.0; d], 1.0, -1.0)?;
                realize = realize.max(rel_close(dist, r));
            }
            Ok([r0 - r1, r1_oracle, restrict, realize])
        })
        .collect::<Res<Vec<_>>>()?;
    let col = |k: usize| results.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
    let mut o = Outcome::new();
    o.metric("instances", results.len() as f64);
    o.metric("max_r0_minus_r1", col(0));
    o.metric("max_r1_oracle_error", col(1));
    o.metric("max_restriction_error", col(2));
    o.metric("max_distance_error", col(3));
    o.require(col(0) <= 1e-9, "r0 > r1");
    o.require(col(1) <= 1e-8, format!("r1 disagrees with its conjugate form by {:e}", col(1)));
    o.require(col(2) <= 1e-8, format!("restriction off by {:e}", col(2)));
    o.require(col(3) <= 1e-8, format!("‖x0 − x1‖ off by {:e}", col(3)));
    Ok(o)
}

/// `sup |‖Σsx‖ − ‖Σsy‖|` over a grid of the ℓ¹ sphere of pairs.
pub fn henson_grid_pair(
    e: &Space,
    xs: &[Vector],
    f: &Space,
    ys: &[Vector],
    steps: usize,
) -> Res<f64> {
    let mut best: f64 = 0.0;
    for i in 0..4 * steps {
        let t = i as f64 / steps as f64;
        // walk the diamond |s₀| + |s₁| = 1
        let (s0, s1) = match i / steps {
            0 => (1.0 - t, t),
            1 => (1.0 - t, 2.0 - t),
            2 => (t - 3.0, 2.0 - t),
            _ => (t - 3.0, t - 4.0),
        };
        let ze: Vector = (0..e.dim()).map(|k| s0 * xs[0][k] + s1 * xs[1][k]).collect();
        let zf: Vector = (0..f.dim()).map(|k| s0 * ys[0][k] + s1 * ys[1][k]).collect();
        best = best.max((e.norm(&ze)? - f.norm(&zf)?).abs());
    }
    Ok(best)
}

fn tuple_checks(
    o: &mut Outcome,
    e: &SpaceRef,
    xs: &[Vector],
    f: &SpaceRef,
    ys: &[Vector],
    rng: &mut ChaCha8Rng,
) -> Res<(f64, f64, Option<f64>)> {
    let h = henson_distance(e, xs, f, ys)?;
    let r = h.value;
    let ta = TupleAmalgam::new(e.clone(), xs.to_vec(), f.clone(), ys.to_vec(), r)?;
    let mut iso: f64 = 0.0;
    for _ in 0..5 {
        let ze = gaussian(rng, e.dim(), 2.0);
        let zf = gaussian(rng, f.dim(), 2.0);
        let v = tuple_amalgam_norm(&ta, &ze, &vec![0.0; f.dim()])?;
        iso = iso.max(rel_close(v, e.norm(&ze)?));
        let v = tuple_amalgam_norm(&ta, &vec![0.0; e.dim()], &zf)?;
        iso = iso.max(rel_close(v, f.norm(&zf)?));
    }
    let mut reach: f64 = f64::NEG_INFINITY;
    for (x, y) in xs.iter().zip(ys) {
        let neg: Vector = y.iter().map(|v| -v).collect();
        reach = reach.max(tuple_amalgam_norm(&ta, x, &neg)? - r);
    }
    let broken = if r > 0.01 {
        let tight = TupleAmalgam::with_radius_unchecked(
            e.clone(),
            xs.to_vec(),
            f.clone(),
            ys.to_vec(),
            r - 0.01,
        )?;
        let comb = |vs: &[Vector], dim: usize| -> Vector {
            (0..dim)
                .map(|k| vs.iter().zip(&h.direction).map(|(v, s)| s * v[k]).sum())
                .collect()
        };
        let gap = match h.side {
            Side::E => {
                let z = comb(xs, e.dim());
                e.norm(&z)? - tuple_amalgam_norm(&tight, &z, &vec![0.0; f.dim()])?
            }
            Side::F => {
                let z = comb(ys, f.dim());
                f.norm(&z)? - tuple_amalgam_norm(&tight, &vec![0.0; e.dim()], &z)?
            }
        };
        Some(gap)
    } else {
        None
    };
    o.require(iso <= 1e-8, format!("tuple amalgam restriction off by {iso:e}"));
    o.require(reach <= 1e-8, format!("‖xᵢ − yᵢ‖ exceeds r by {reach:e}"));
    if let Some(g) = broken {
        o.require(g > 1e-4, format!("shrinking r by 0.01 only breaks a restriction by {g:e}"));
    }
    Ok((iso, reach, broken))
}

fn henson_suite(seed: u64) -> Res<Outcome> {
    let mut o = Outcome::new();
    let mut rng = inst_rng(seed, 4, 0);
    let mut exact_max: f64 = 0.0;
    for d in 1..=3 {
        let e = random_space(&mut rng, d);
        let xs: Vec<Vector> = (0..2).map(|_| gaussian(&mut rng, d, 1.0)).collect();
        let e: Space = e.into();
        let h = henson_distance_exact(&e, &xs, &e, &xs)?;
        exact_max = exact_max.max(h.value.abs());
    }
    o.metric("exact_self_distance", exact_max);
    o.require(exact_max == 0.0, "self distance is not exactly 0");

    let l1 = space_ref(PolyNormedSpace::l1(2));
    let linf = space_ref(PolyNormedSpace::linf(2));
    let basis = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let h = henson_distance(&l1, &basis, &linf, &basis)?.value;
    let grid = henson_grid_pair(&l1, &basis, &linf, &basis, 2000)?;
    o.metric("l1_linf_distance", h);
    o.metric("l1_linf_grid", grid);
    o.require((h - grid).abs() <= 1e-6, format!("l1/linf distance {h} vs grid {grid}"));

    let mut iso: f64 = 0.0;
    let mut reach: f64 = f64::NEG_INFINITY;
    let mut min_break = f64::INFINITY;
    let (a, b, c) = tuple_checks(&mut o, &l1, &basis, &linf, &basis, &mut rng)?;
    iso = iso.max(a);
    reach = reach.max(b);
    if let Some(c) = c {
        min_break = min_break.min(c);
    }
    for i in 1..=10 {
        let mut rng = inst_rng(seed, 4, i);
        let de = rng.random_range(2..=3);
        let df = rng.random_range(2..=3);
        let e = space_ref(random_space(&mut rng, de));
        let f = space_ref(random_space(&mut rng, df));
        let xs: Vec<Vector> = (0..2).map(|_| gaussian(&mut rng, de, 1.0)).collect();
        let ys: Vec<Vector> = (0..2).map(|_| gaussian(&mut rng, df, 1.0)).collect();
        let (a, b, c) = tuple_checks(&mut o, &e, &xs, &f, &ys, &mut rng)?;
        iso = iso.max(a);
        reach = reach.max(b);
        if let Some(c) = c {
            min_break = min_break.min(c);
        }
    }
    o.metric("max_restriction_error", iso);
    o.metric("max_reach_excess", reach);
    o.metric("min_break_at_r_minus_0.01", min_break);
    Ok(o)
}

fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> Res<PointedFiniteMetric> {
    let pts: Vec<Vector> = (0..n).map(|_| gaussian(rng, 2, 1.0)).collect();
    let dist = pts
        .iter()
        .map(|p| {
            pts.iter()
                .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .collect()
        })
        .collect();
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    Ok(PointedFiniteMetric::new(labels, dist, "p0")?)
}

fn aells_suite(seed: u64) -> Res<Outcome> {
    let gaps: Vec<f64> = (0..500)
        .into_par_iter()
        .map(|i| -> Res<f64> {
            let mut rng = inst_rng(seed, 5, i);
            let n = rng.random_range(3..=7);
            let m = random_metric(&mut rng, n)?;
            let w = gaussian(&mut rng, n, 1.0);
            let mean = w.iter().sum::<f64>() / n as f64;
            let entries: BTreeMap<String, f64> = m
                .labels
                .iter()
                .zip(&w)
                .map(|(l, x)| (l.clone(), x - mean))
                .collect();
            let r = ae_norm(&m, &Molecule::new(entries))?;
            Ok(r.gap())
        })
        .collect::<Res<Vec<_>>>()?;
    let embed: Vec<f64> = (0..100)
        .into_par_iter()
        .map(|i| -> Res<f64> {
            let mut rng = inst_rng(seed, 5, 1000 + i);
            let d = 1 + i % 3;
            let e = space_ref(random_space(&mut rng, d));
            let k = rng.random_range(1..=3);
            let mut envs = Vec::with_capacity(k);
            for _ in 0..k {
                let s = rng.random_range(1..=3);
                envs.push(random_envelope(&mut rng, &e, s, 2.0)?);
            }
            let rs = RelativeSpaceOverE::new(e.clone(), envs.clone())?;
            let mut worst: f64 = 0.0;
            let zero_k = vec![0.0; k];
            let mut probes: Vec<Vector> = (0..3).map(|_| gaussian(&mut rng, d, 2.0)).collect();
            for env in &envs {
                probes.extend(env.points().iter().cloned());
            }
            for a in &probes {
                worst = worst.max(rel_close(relative_ae_norm(&rs, a, &zero_k)?, e.norm(a)?));
                let neg: Vector = a.iter().map(|x| -x).collect();
                for (i, env) in envs.iter().enumerate() {
                    let mut alpha = zero_k.clone();
                    alpha[i] = 1.0;
                    worst = worst.max(rel_close(relative_ae_norm(&rs, &neg, &alpha)?, env.eval(a)?));
                }
            }
            for i in 0..k {
                for j in 0..i {
                    let mut alpha = zero_k.clone();
                    alpha[i] = 1.0;
                    alpha[j] = -1.0;
                    let v = relative_ae_norm(&rs, &vec![0.0; d], &alpha)?;
                    worst = worst.max(rel_close(v, rs.pair_distance(i, j)));
                }
            }
            Ok(worst)
        })
        .collect::<Res<Vec<_>>>()?;
    let gap = gaps.iter().cloned().fold(0.0, f64::max);
    let emb = embed.iter().cloned().fold(0.0, f64::max);
    let mut o = Outcome::new();
    o.metric("molecules", gaps.len() as f64);
    o.metric("max_primal_dual_gap", gap);
    o.metric("relative_spaces", embed.len() as f64);
    o.metric("max_embedding_error", emb);
    o.require(gap <= 1e-9, format!("transport gap {gap:e}"));
    o.require(emb <= 1e-8, format!("relative embedding off by {emb:e}"));
    Ok(o)
}

/// A random instance `(E, basis, ξ)` with `ξ(0) = 1`.
fn extension_instance(
    rng: &mut ChaCha8Rng,
    dim: usize,
    k: usize,
    normalize_basis: bool,
) -> Res<(SpaceRef, Vec<Vector>, ConvexKatetovEnvelope)> {
    let e = space_ref(random_space(rng, dim));
    let mut basis: Vec<Vector> = (0..k).map(|_| gaussian(rng, dim, 1.0)).collect();
    if normalize_basis {
        for x in basis.iter_mut() {
            let n = e.norm(x)?;
            x.iter_mut().for_each(|v| *v /= n);
        }
    }
    let pull = space_ref(e.subspace_pullback(&basis)?);
    loop {
        let support = rng.random_range(1..=3);
        let ck = random_envelope(rng, &pull, support, 2.0)?;
        if ck.eval(&vec![0.0; k])? > 1e-3 {
            return Ok((e, basis, normalize_at_origin(&ck)?));
        }
    }
}

fn extension_suite(seed: u64) -> Res<Outcome> {
    let mut o = Outcome::new();
    for (ri, r) in [3.0, 5.0, 11.0].into_iter().enumerate() {
        let res: Vec<(f64, f64)> = (0..20)
            .into_par_iter()
            .map(|i| -> Res<(f64, f64)> {
                let mut rng = inst_rng(seed, 6, 100 * ri + i);
                let dim = 2 + i % 3;
                let k = 1 + i % 2;
                let (e, basis, xi) = extension_instance(&mut rng, dim, k, false)?;
                let out = gurarij_extension_test(&e, &basis, &xi, r, DEFAULT_NET)?;
                Ok((out.epsilon, out.epsilon_inside))
            })
            .collect::<Res<Vec<_>>>()?;
        let eps = res.iter().map(|x| x.0).fold(0.0, f64::max);
        let inside = res.iter().map(|x| x.1).fold(0.0, f64::max);
        let bound = 2.0 / (r - 1.0);
        o.metric(&format!("R{r}_epsilon"), eps);
        o.metric(&format!("R{r}_epsilon_inside"), inside);
        o.require(eps <= bound + 1e-6, format!("R = {r}: ε = {eps} > {bound}"));
        o.require(inside <= 1e-6, format!("R = {r}: ε inside the ball = {inside:e}"));
    }
    Ok(o)
}

fn perturbation_suite(seed: u64) -> Res<Outcome> {
    let mut o = Outcome::new();
    for (ei, eps) in [0.5, 0.1].into_iter().enumerate() {
        let res: Vec<(f64, f64)> = (0..10)
            .into_par_iter()
            .map(|i| -> Res<(f64, f64)> {
                let mut rng = inst_rng(seed, 7, 100 * ei + i);
                let dim = 2 + i % 2;
                let k = 1 + i % 2;
                let (e, basis, xi) = extension_instance(&mut rng, dim, k, true)?;
                let noise = (0..k)
                    .map(|_| -> Res<Vector> {
                        let g = gaussian(&mut rng, dim, 1.0);
                        let n = e.norm(&g)?;
                        let s: f64 = rng.random_range(0.0..1.0);
                        Ok(g.iter().map(|v| v * s / n).collect())
                    })
                    .collect::<Res<Vec<_>>>()?;
                let out = perturbed_extension(&e, &basis, &xi, eps, &noise, DEFAULT_NET)?;
                Ok((out.epsilon_net, out.delta))
            })
            .collect::<Res<Vec<_>>>()?;
        let worst = res.iter().map(|x| x.0).fold(0.0, f64::max);
        let min_delta = res.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        o.metric(&format!("eps{eps}_net_epsilon"), worst);
        o.metric(&format!("eps{eps}_min_delta"), min_delta);
        o.require(worst <= eps, format!("ε = {eps}: net ε {worst}"));
    }
    Ok(o)
}

fn universality_suite(seed: u64) -> Res<Outcome> {
    let mut o = Outcome::new();
    let groups = [
        ("Z2", FiniteGroupPresentation::cyclic(2, 1.0)?),
        ("Z5", FiniteGroupPresentation::cyclic(5, 0.3)?),
        ("S3", FiniteGroupPresentation::symmetric3(0.5)?),
    ];
    for (name, g) in &groups {
        let t = teleman_embed(g)?;
        let r = check_teleman(&t, 200, seed)?;
        o.metric(&format!("{name}_orbit_error"), r.orbit_error);
        o.metric(&format!("{name}_norm_deviation"), r.norm_deviation);
        o.require(r.homomorphism, format!("{name}: ρ is not a homomorphism"));
        o.require(r.injective, format!("{name}: ρ is not injective"));
        o.require(r.passed(1e-9), format!("{name}: orbit or norm check failed"));
    }
    let mut p = BuildParams::new(PolyNormedSpace::l1(2), 1, seed);
    p.symmetry = sign_flip_group(2, 0);
    let state = build(&p)?;
    let action = p
        .symmetry
        .iter()
        .map(|m| LinearIsometryWitness::new(m.clone(), state.spaces[0].clone(), 1e-9))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = verify_g_embedding(&state, 0, &action)?;
    o.metric("g_embedding_isometry_deviation", rep.isometry_deviation);
    o.metric("adjoined_points", (state.spaces[1].dim() - 2) as f64);
    o.require(rep.passed(), format!("g-embedding check failed: {rep:?}"));
    Ok(o)
}

fn determinism_suite(seed: u64) -> Res<Outcome> {
    let mut p = BuildParams::new(PolyNormedSpace::l1(2), 2, seed);
    p.radii = vec![2.0, 3.0];
    let a = BuildManifest::from_state(&p, &build(&p)?).to_json();
    let b = BuildManifest::from_state(&p, &build(&p)?).to_json();
    let mut o = Outcome::new();
    o.metric("manifest_bytes", a.len() as f64);
    o.require(a == b, "manifests differ");
    Ok(o)
}
