//! Seeded sampling: points in balls, random Katětov data, sphere nets.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::katetov::{FiniteKatetov, KatetovError};
use crate::space::{Space, SpaceError, SpaceRef};
use crate::Vector;

/// Point of the `radius`-ball of `space`: Gaussian direction rescaled to the
/// sphere, radius `R·U^{1/d}`.
pub fn sample_ball_point<R: Rng + ?Sized>(
    rng: &mut R,
    space: &Space,
    radius: f64,
) -> Result<Vector, SpaceError> {
    let d = space.dim();
    loop {
        let g: Vector = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = space.norm(&g)?;
        if n > 1e-9 {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / d as f64);
            return Ok(g.iter().map(|x| x * r / n).collect());
        }
    }
}

/// Largest 1-Lipschitz minorant of `values` (min-plus closure), then the
/// smallest uniform lift making `d(y, z) ≤ ξ(y) + ξ(z)` hold.
pub fn repair_katetov(space: &Space, support: &[Vector], values: &[f64]) -> Result<Vector, SpaceError> {
    let n = support.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let diff: Vector = support[i].iter().zip(&support[j]).map(|(a, b)| a - b).collect();
            d[i][j] = space.norm(&diff)?;
            d[j][i] = d[i][j];
        }
    }
    let mut out: Vector = (0..n)
        .map(|i| (0..n).map(|j| values[j] + d[i][j]).fold(f64::INFINITY, f64::min))
        .collect();
    let mut lift: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            lift = lift.max((d[i][j] - out[i] - out[j]) / 2.0);
        }
    }
    if lift > 0.0 {
        out.iter_mut().for_each(|v| *v += lift);
    }
    Ok(out)
}

/// Random valid finite Katětov function with support in the `radius`-ball
/// and raw values in `[0, 2·radius]`.
pub fn random_katetov<R: Rng + ?Sized>(
    rng: &mut R,
    space: &SpaceRef,
    support_size: usize,
    radius: f64,
) -> Result<FiniteKatetov, KatetovError> {
    let support = (0..support_size)
        .map(|_| sample_ball_point(rng, space, radius))
        .collect::<Result<Vec<_>, _>>()?;
    let raw: Vector = (0..support_size)
        .map(|_| rng.random_range(0.0..=2.0 * radius))
        .collect();
    let values = repair_katetov(space, &support, &raw)?;
    FiniteKatetov::new(space.clone(), support, values)
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Deterministic net of unit vectors of `space`: coordinate axes, evenly
/// spaced angles (dimension 2) or a Halton sequence on the cube, each
/// normalized, together with their negatives.
pub fn sphere_net(space: &Space, size: usize) -> Result<Vec<Vector>, SpaceError> {
    let d = space.dim();
    let mut raw: Vec<Vector> = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        raw.push(e);
    }
    match d {
        1 => {}
        2 => {
            for i in 0..size {
                let th = std::f64::consts::PI * i as f64 / size as f64;
                raw.push(vec![th.cos(), th.sin()]);
            }
        }
        _ => {
            for i in 1..=size {
                raw.push((0..d).map(|j| 2.0 * halton(i, PRIMES[j % 8]) - 1.0).collect());
            }
        }
    }
    let mut out = Vec::with_capacity(2 * raw.len());
    for v in raw {
        let n = space.norm(&v)?;
        if n > 1e-9 {
            let u: Vector = v.iter().map(|x| x / n).collect();
            out.push(u.iter().map(|x| -x).collect());
            out.push(u);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::katetov::is_katetov;
    use crate::space::PolyNormedSpace;

    #[test]
    fn random_data_is_katetov_and_in_ball() {
        let s: SpaceRef = Arc::new(PolyNormedSpace::l1(3).into());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let fk = random_katetov(&mut rng, &s, 5, 2.0).unwrap();
            assert!(is_katetov(&fk).unwrap().is_empty());
            assert!(fk.support.iter().all(|y| s.norm(y).unwrap() <= 2.0 + 1e-12));
        }
    }

    #[test]
    fn net_is_on_the_sphere() {
        let s: Space = PolyNormedSpace::linf(3).into();
        let net = sphere_net(&s, 16).unwrap();
        assert_eq!(net.len(), 2 * (3 + 16));
        assert!(net.iter().all(|v| (s.norm(v).unwrap() - 1.0).abs() < 1e-12));
    }
}
