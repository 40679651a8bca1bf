//! Independent brute-force oracles for convexification, amalgam bounds,
//! Arens-Eells norms and relative norms.

use std::collections::BTreeMap;
use std::sync::Arc;

use gurarij_core::aells::{ae_norm, relative_ae_norm, Molecule, PointedFiniteMetric, RelativeSpaceOverE};
use gurarij_core::amalgam::amalgam_bounds;
use gurarij_core::katetov::{convexify, is_katetov, ConvexKatetovEnvelope, FiniteKatetov};
use gurarij_core::space::{PolyNormedSpace, SpaceRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LO: i64 = -12;
const HI: i64 = 12;
const MAX_N: usize = 6;

fn line() -> SpaceRef {
    Arc::new(PolyNormedSpace::l1(1).into())
}

/// Equal-weight averages of `n ≤ 6` grid points: `M_n(s) = min Σ g(yₖ)` over
/// integer `yₖ` with `Σ yₖ = s`, by repeated min-plus convolution.
struct GridEnvelope {
    levels: Vec<Vec<f64>>,
}

impl GridEnvelope {
    fn new(support: &[i64], values: &[f64]) -> Self {
        let g: Vec<f64> = (LO..=HI)
            .map(|y| {
                support
                    .iter()
                    .zip(values)
                    .map(|(&s, &c)| (y - s).abs() as f64 + c)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let width = (HI - LO) as usize + 1;
        let mut levels = vec![g.clone()];
        for n in 2..=MAX_N {
            let prev = &levels[n - 2];
            let mut next = vec![f64::INFINITY; n * (width - 1) + 1];
            for (i, p) in prev.iter().enumerate() {
                for (j, q) in g.iter().enumerate() {
                    next[i + j] = next[i + j].min(p + q);
                }
            }
            levels.push(next);
        }
        GridEnvelope { levels }
    }

    fn eval(&self, x: i64) -> f64 {
        (1..=MAX_N)
            .map(|n| {
                let offset = (x - LO) as usize * n;
                self.levels[n - 1][offset] / n as f64
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Integer support in `[-3, 3]`, integer values made Katětov by the
/// Lipschitz closure (all values at least 3, diameter at most 6).
fn integer_katetov(rng: &mut ChaCha8Rng) -> (Vec<i64>, Vec<f64>) {
    let mut support: Vec<i64> = Vec::new();
    let n = rng.random_range(2..=5);
    while support.len() < n {
        let y = rng.random_range(-3..=3);
        if !support.contains(&y) {
            support.push(y);
        }
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(3..=8) as f64).collect();
    let values = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| raw[k] + (support[j] - support[k]).abs() as f64)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    (support, values)
}

fn envelope(space: &SpaceRef, support: &[i64], values: &[f64]) -> ConvexKatetovEnvelope {
    let fk = FiniteKatetov::new(
        space.clone(),
        support.iter().map(|&y| vec![y as f64]).collect(),
        values.to_vec(),
    )
    .unwrap();
    assert!(is_katetov(&fk).unwrap().is_empty());
    convexify(&fk).unwrap()
}

#[test]
fn line_envelopes_match_equal_weight_averages() {
    let space = line();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let (support, values) = integer_katetov(&mut rng);
        let ck = envelope(&space, &support, &values);
        let grid = GridEnvelope::new(&support, &values);
        let lo = *support.iter().min().unwrap();
        let hi = *support.iter().max().unwrap();
        for x in lo..=hi {
            let got = ck.eval(&[x as f64]).unwrap();
            let want = grid.eval(x);
            assert!((got - want).abs() <= 1e-9, "x = {x}: {got} vs {want}");
        }
    }
}

#[test]
fn canonical_values_on_small_supports() {
    let space = line();
    let ck = envelope(&space, &[-1, 1], &[1.0, 1.0]);
    assert_eq!(ck.values(), &[1.0, 1.0]);
    let grid = GridEnvelope::new(&[-1, 1], &[1.0, 1.0]);
    assert_eq!(grid.eval(-1), 1.0);
    assert_eq!(grid.eval(0), 1.0);

    // not Katětov as given; canonicalization lowers the middle value
    let ck = ConvexKatetovEnvelope::from_generator(
        space.clone(),
        vec![vec![-1.0], vec![0.0], vec![1.0]],
        vec![1.0, 3.0, 1.0],
    )
    .unwrap();
    assert!((ck.values()[1] - 1.0).abs() <= 1e-12);
    assert_eq!(GridEnvelope::new(&[-1, 0, 1], &[1.0, 3.0, 1.0]).eval(0), 1.0);
}

#[test]
fn amalgam_bounds_match_grid_search() {
    // both envelopes are piecewise linear with integer breakpoints and
    // slope ±1 outside [-3, 3], so integer points in [-4, 4] suffice
    let space = line();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let (s0, v0) = integer_katetov(&mut rng);
        let (s1, v1) = integer_katetov(&mut rng);
        let (g0, g1) = (GridEnvelope::new(&s0, &v0), GridEnvelope::new(&s1, &v1));
        let ck0 = envelope(&space, &s0, &v0);
        let ck1 = envelope(&space, &s1, &v1).with_space(space.clone()).unwrap();
        let (r0, r1) = amalgam_bounds(&ck0, &ck1).unwrap();
        let mut want0: f64 = 0.0;
        let mut want1 = f64::INFINITY;
        for a in -4..=4 {
            want0 = want0.max((g0.eval(a) - g1.eval(a)).abs());
            want1 = want1.min(g0.eval(a) + g1.eval(a));
        }
        assert!((r0 - want0).abs() <= 1e-9, "r0 {r0} vs {want0}");
        assert!((r1 - want1).abs() <= 1e-9, "r1 {r1} vs {want1}");
    }
}

#[test]
fn same_point_generators_give_zero_and_two() {
    let space = line();
    let a = envelope(&space, &[0], &[1.0]);
    let b = envelope(&space, &[0], &[1.0]);
    let (r0, r1) = amalgam_bounds(&a, &b).unwrap();
    assert!(r0.abs() <= 1e-12);
    assert!((r1 - 2.0).abs() <= 1e-12);
}

/// Minimum-cost matching of unit masses, by trying every permutation.
fn brute_transport(dist: &[Vec<f64>], masses: &[i64]) -> f64 {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (i, &m) in masses.iter().enumerate() {
        for _ in 0..m.max(0) {
            plus.push(i);
        }
        for _ in 0..(-m).max(0) {
            minus.push(i);
        }
    }
    assert_eq!(plus.len(), minus.len());
    let mut perm: Vec<usize> = (0..minus.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let cost: f64 = plus.iter().zip(p).map(|(&a, &j)| dist[a][minus[j]]).sum();
        best = best.min(cost);
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

#[test]
fn arens_eells_norm_is_the_cheapest_matching() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let n = rng.random_range(3..=5);
        // points on the plane with the ℓ¹ metric
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        let dist: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| pts.iter().map(|q| (p.0 - q.0).abs() + (p.1 - q.1).abs()).collect())
            .collect();
        let labels: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let m = PointedFiniteMetric::new(labels.clone(), dist.clone(), "p0").unwrap();
        let mut masses: Vec<i64> = (0..n).map(|_| rng.random_range(-2..=2)).collect();
        let total: i64 = masses.iter().sum();
        masses[0] -= total;
        if masses.iter().map(|m| m.abs()).sum::<i64>() > 12 {
            continue;
        }
        let entries: BTreeMap<String, f64> = labels
            .iter()
            .zip(&masses)
            .filter(|(_, &c)| c != 0)
            .map(|(l, &c)| (l.clone(), c as f64))
            .collect();
        let got = ae_norm(&m, &Molecule::new(entries)).unwrap();
        let want = brute_transport(&dist, &masses);
        assert!((got.value - want).abs() <= 1e-9, "{} vs {want}", got.value);
        assert!(got.gap() <= 1e-9);
    }
}

fn random_envelope(rng: &mut ChaCha8Rng, space: &SpaceRef) -> ConvexKatetovEnvelope {
    let d = space.dim();
    loop {
        let n = rng.random_range(1..=3);
        let support: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
        let fk = FiniteKatetov::new(space.clone(), support, values).unwrap();
        if is_katetov(&fk).unwrap().is_empty() {
            return convexify(&fk).unwrap();
        }
    }
}

#[test]
fn relative_norm_respects_the_quotient_bound() {
    // ‖a + Σαᵢuᵢ‖ ≤ ‖a + Σαᵢbᵢ‖ + Σ|αᵢ|ξᵢ(bᵢ) for any bᵢ ∈ E
    let space: SpaceRef = Arc::new(PolyNormedSpace::linf(2).into());
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..15 {
        let k = rng.random_range(1..=3);
        let adjoined: Vec<ConvexKatetovEnvelope> = (0..k).map(|_| random_envelope(&mut rng, &space)).collect();
        let rs = RelativeSpaceOverE::new(space.clone(), adjoined.clone()).unwrap();
        for _ in 0..10 {
            let a: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let alpha: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = relative_ae_norm(&rs, &a, &alpha).unwrap();
            for _ in 0..5 {
                let mut w = a.clone();
                let mut bound = 0.0;
                for (ck, &al) in adjoined.iter().zip(&alpha) {
                    let b: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
                    bound += al.abs() * ck.eval(&b).unwrap();
                    for (wi, bi) in w.iter_mut().zip(&b) {
                        *wi += al * bi;
                    }
                }
                bound += space.norm(&w).unwrap();
                assert!(got <= bound + 1e-9, "{got} > {bound}");
            }
            if k == 1 && alpha[0] != 0.0 {
                let x: Vec<f64> = a.iter().map(|v| -v / alpha[0]).collect();
                let want = alpha[0].abs() * adjoined[0].eval(&x).unwrap();
                assert!((got - want).abs() <= 1e-8 * (1.0 + want), "{got} vs {want}");
            }
        }
    }
}
