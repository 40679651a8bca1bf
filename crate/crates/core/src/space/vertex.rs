//! Brute-force polytope routines for small dimension (at most 4 or 5).

use nalgebra::{DMatrix, DVector};

use crate::optim::LpError;
use crate::Vector;

const FEAS_TOL: f64 = 1e-9;
const MAX_ROUNDS: usize = 200;

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Solves the square system `A x = b`; `None` if (numerically) singular.
pub(crate) fn solve_square(a: &[Vector], b: &[f64]) -> Option<Vector> {
    let n = b.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let scale = a.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let lu = m.clone().lu();
    let x = lu.solve(&DVector::from_column_slice(b))?;
    // reject ill-conditioned picks: small pivot relative to scale
    let svd = m.singular_values();
    let smin = svd.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 1e-10 * scale {
        return None;
    }
    Some(x.iter().cloned().collect())
}

fn push_unique(out: &mut Vec<Vector>, p: Vector, tol: f64) -> bool {
    let scale = p.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    if out
        .iter()
        .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= tol * scale))
    {
        return false;
    }
    out.push(p);
    true
}

/// Vertices of the bounded polyhedron `{x ∈ ℝ^dim : ⟨aᵢ, x⟩ ≤ bᵢ}` by
/// enumerating every `dim`-subset of rows.
pub fn enumerate_vertices(rows: &[(Vector, f64)], dim: usize) -> Vec<Vector> {
    let mut out = Vec::new();
    for_each_subset(rows.len(), dim, |sub| {
        let a: Vec<Vector> = sub.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = sub.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve_square(&a, &b) {
            let ok = rows.iter().all(|(r, c)| {
                let v: f64 = r.iter().zip(&x).map(|(p, q)| p * q).sum();
                v <= c + FEAS_TOL * (1.0 + c.abs())
            });
            if ok {
                push_unique(&mut out, x, 1e-9);
            }
        }
    });
    out
}

/// Facet normals `n` (scaled so the facet is `⟨n, x⟩ = 1`) of the convex hull
/// of `points`, which must contain the origin in its interior.
pub(crate) fn hull_facets(points: &[Vector], k: usize) -> Vec<Vector> {
    let mut facets = Vec::new();
    let ones = vec![1.0; k];
    for_each_subset(points.len(), k, |sub| {
        let a: Vec<Vector> = sub.iter().map(|&i| points[i].clone()).collect();
        if let Some(n) = solve_square(&a, &ones) {
            let ok = points.iter().all(|p| {
                let v: f64 = p.iter().zip(&n).map(|(x, y)| x * y).sum();
                v <= 1.0 + FEAS_TOL
            });
            if ok {
                push_unique(&mut facets, n, 1e-8);
            }
        }
    });
    facets
}

/// Unit vector orthogonal to the span of `points`, if they do not span `ℝ^k`.
fn orthogonal_direction(points: &[Vector], k: usize) -> Option<Vector> {
    let scale = points.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        let mut e = vec![0.0; k];
        e[0] = 1.0;
        return Some(e);
    }
    let m = DMatrix::from_fn(k, k, |i, j| {
        points.iter().map(|p| p[i] * p[j]).sum::<f64>() / (scale * scale)
    });
    let eig = m.symmetric_eigen();
    let (i, lmin) = eig
        .eigenvalues
        .iter()
        .cloned()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if lmin > 1e-12 * lmax {
        return None;
    }
    Some(eig.eigenvectors.column(i).iter().cloned().collect())
}

/// Recovers the vertices of a centrally symmetric polytope `P ⊂ ℝ^k` with
/// the origin in its interior from a support oracle returning
/// `(max_{p ∈ P} ⟨c, p⟩, argmax)`. Cutting-plane loop: take the hull of the
/// points found so far, query each facet normal, add any point beyond it.
pub fn extract_symmetric_polytope(
    k: usize,
    support: impl Fn(&[f64]) -> Result<(f64, Vector), LpError>,
) -> Result<Vec<Vector>, LpError> {
    let mut points: Vec<Vector> = Vec::new();
    let add = |points: &mut Vec<Vector>, p: Vector| {
        let neg: Vector = p.iter().map(|x| -x).collect();
        let a = push_unique(points, p, 1e-9);
        let b = push_unique(points, neg, 1e-9);
        a || b
    };
    for i in 0..k {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; k];
            c[i] = s;
            let (_, p) = support(&c)?;
            add(&mut points, p);
        }
    }
    // thin polytopes can return the same vertex for several axes; query
    // directions orthogonal to the span found so far
    for _ in 0..k {
        let Some(c) = orthogonal_direction(&points, k) else {
            break;
        };
        let (_, p) = support(&c)?;
        if !add(&mut points, p) {
            break;
        }
    }
    for _ in 0..MAX_ROUNDS {
        let facets = hull_facets(&points, k);
        if facets.is_empty() {
            return Err(LpError::NumericalFailure(
                "support points do not span a full-dimensional hull".into(),
            ));
        }
        let mut grew = false;
        for n in &facets {
            let (h, p) = support(n)?;
            if h > 1.0 + 1e-9 && add(&mut points, p) {
                grew = true;
            }
        }
        if !grew {
            let on_boundary: Vec<Vector> = points
                .iter()
                .filter(|p| {
                    facets.iter().any(|n| {
                        let v: f64 = p.iter().zip(n).map(|(x, y)| x * y).sum();
                        v >= 1.0 - 1e-7
                    })
                })
                .cloned()
                .collect();
            return Ok(on_boundary);
        }
    }
    Err(LpError::NumericalFailure(
        "polytope extraction did not converge".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_enumerated() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 3]);
        let mut n = 0;
        for_each_subset(3, 3, |_| n += 1);
        assert_eq!(n, 1);
        let mut z = 0;
        for_each_subset(3, 0, |_| z += 1);
        assert_eq!(z, 1);
    }

    #[test]
    fn square_vertices() {
        let rows = vec![
            (vec![1.0, 0.0], 1.0),
            (vec![-1.0, 0.0], 1.0),
            (vec![0.0, 1.0], 1.0),
            (vec![0.0, -1.0], 1.0),
        ];
        let v = enumerate_vertices(&rows, 2);
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|p| p[0].abs() == 1.0 && p[1].abs() == 1.0));
    }

    #[test]
    fn extract_cross_polytope() {
        // support function of the ℓ¹ unit ball in ℝ³ is the ℓ∞ norm
        let support = |c: &[f64]| -> Result<(f64, Vector), LpError> {
            let (i, m) = c
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .unwrap();
            let mut p = vec![0.0; c.len()];
            p[i] = m.signum();
            Ok((m.abs(), p))
        };
        let v = extract_symmetric_polytope(3, support).unwrap();
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn extract_thin_polytope() {
        // one vertex maximizes both axes; hull of the axis queries is flat
        let verts = [[1.0, 1.0], [-1.0, -1.0], [0.5, -0.2], [-0.5, 0.2]];
        let support = |c: &[f64]| -> Result<(f64, Vector), LpError> {
            let best = verts
                .iter()
                .map(|v| (c[0] * v[0] + c[1] * v[1], v.to_vec()))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap();
            Ok(best)
        };
        let v = extract_symmetric_polytope(2, support).unwrap();
        assert_eq!(v.len(), 4);
    }
}
