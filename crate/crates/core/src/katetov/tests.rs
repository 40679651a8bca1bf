use std::sync::Arc;

use super::*;
use crate::space::PolyNormedSpace;

fn l1(d: usize) -> SpaceRef {
    Arc::new(PolyNormedSpace::l1(d).into())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + b.abs())
}

#[test]
fn katetov_reports() {
    let s = l1(1);
    let dist = FiniteKatetov::new(s.clone(), vec![vec![-1.0], vec![0.5], vec![3.0]], vec![1.5, 0.0, 2.5])
        .unwrap();
    assert!(is_katetov(&dist).unwrap().is_empty());
    let zero = FiniteKatetov::new(s.clone(), vec![vec![0.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
    let r = is_katetov(&zero).unwrap();
    assert!(matches!(r.violations[..], [KatetovViolation::Separation { y: 0, z: 1, .. }]));
    let steep = FiniteKatetov::new(s, vec![vec![0.0], vec![1.0]], vec![0.0, 5.0]).unwrap();
    let r = is_katetov(&steep).unwrap();
    assert!(r
        .violations
        .iter()
        .any(|v| matches!(v, KatetovViolation::Lipschitz { y: 1, z: 0, .. })));
}

#[test]
fn min_plus_examples() {
    let s = l1(1);
    let fk = FiniteKatetov::new(s.clone(), vec![vec![0.0]], vec![1.0]).unwrap();
    assert_eq!(extend_min_plus(&fk, &[2.0]).unwrap(), 3.0);
    assert_eq!(extend_min_plus(&fk, &[0.0]).unwrap(), 1.0);
    let two = FiniteKatetov::new(s, vec![vec![-1.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
    assert_eq!(extend_min_plus(&two, &[0.0]).unwrap(), 2.0);
}

#[test]
fn convexify_examples() {
    let s = l1(1);
    let two = FiniteKatetov::new(s.clone(), vec![vec![-1.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
    let ck = convexify(&two).unwrap();
    assert!(close(ck.values()[0], 1.0) && close(ck.values()[1], 1.0));
    assert!(close(ck.eval(&[0.0]).unwrap(), 1.0));

    let three = FiniteKatetov::new(
        s.clone(),
        vec![vec![-1.0], vec![0.0], vec![1.0]],
        vec![1.0, 3.0, 1.0],
    );
    // ξ(0) = 3 violates ξ(0) ≤ ξ(1) + 1, so it is not Katětov; the envelope
    // still lowers the middle value to the average of the endpoints
    let ck = ConvexKatetovEnvelope::from_generator(
        s.clone(),
        three.unwrap().support,
        vec![1.0, 3.0, 1.0],
    )
    .unwrap();
    assert!(close(ck.values()[1], 1.0));

    let v: Vec<f64> = vec![0.25];
    let pts: Vec<Vector> = vec![vec![-2.0], vec![0.0], vec![1.5]];
    let vals: Vec<f64> = pts.iter().map(|p| (p[0] - v[0]).abs()).collect();
    let ck = convexify(&FiniteKatetov::new(s, pts, vals.clone()).unwrap()).unwrap();
    for (a, b) in ck.values().iter().zip(&vals) {
        assert!(close(*a, *b));
    }
}

#[test]
fn eval_examples_and_routes_agree() {
    let s = l1(2);
    let p = point_as_katetov(s.clone(), vec![1.0, -1.0]).unwrap();
    assert!(close(p.eval(&[0.0, 0.0]).unwrap(), 2.0));
    assert!(close(p.eval(&[3.0, 0.5]).unwrap(), 3.5));
    let ck = ConvexKatetovEnvelope::from_generator(
        s,
        vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]],
        vec![1.0, 1.5, 1.5],
    )
    .unwrap();
    for x in [[0.5, 0.5], [3.0, -1.0], [1.0, 1.0], [-2.0, 4.0]] {
        let a = ck.eval(&x).unwrap();
        let b = ck.eval_primal(&x).unwrap();
        assert!(close(a, b), "{x:?}: {a} vs {b}");
        let (v, piece) = ck.eval_with_piece(&x).unwrap();
        assert!(close(piece.eval(&x), v));
    }
}

#[test]
fn conjugate_examples() {
    let s = l1(1);
    let ck = ConvexKatetovEnvelope::from_generator(s.clone(), vec![vec![-1.0], vec![1.0]], vec![1.0, 1.0])
        .unwrap();
    assert!(close(ck.conjugate(&[1.0]).unwrap(), 0.0));
    assert!(close(ck.conjugate(&[0.0]).unwrap(), -1.0));
    assert!(matches!(
        ck.conjugate(&[2.0]),
        Err(KatetovError::FunctionalTooLarge { .. })
    ));
    let p = point_as_katetov(s, vec![0.7]).unwrap();
    assert!(close(p.conjugate(&[-0.5]).unwrap(), -0.35));
}

#[test]
fn sup_distance_examples() {
    let s = l1(2);
    let v = point_as_katetov(s.clone(), vec![1.0, 0.0]).unwrap();
    let w = point_as_katetov(s.clone(), vec![0.0, 2.0]).unwrap();
    assert!(close(v.sup_distance(&v).unwrap(), 0.0));
    assert!(close(v.sup_distance(&w).unwrap(), 3.0));
    let s1 = l1(1);
    let a = ConvexKatetovEnvelope::from_generator(s1.clone(), vec![vec![0.0]], vec![1.0]).unwrap();
    let b = ConvexKatetovEnvelope::from_generator(s1, vec![vec![0.0]], vec![2.0]).unwrap();
    assert!(close(a.sup_distance(&b).unwrap(), 1.0));
    assert!(matches!(a.sup_distance(&v), Err(KatetovError::SpaceMismatch)));
}

#[test]
fn one_point_norm_examples() {
    let s = l1(2);
    let ck = ConvexKatetovEnvelope::from_generator(
        s.clone(),
        vec![vec![0.0, 0.0], vec![1.0, 1.0]],
        vec![1.0, 1.0],
    )
    .unwrap();
    assert_eq!(ck.one_point_norm(0.0, &[1.0, -2.0]).unwrap(), 3.0);
    assert!(close(ck.one_point_norm(1.0, &[0.0, 0.0]).unwrap(), ck.eval(&[0.0, 0.0]).unwrap()));
    let v = vec![0.5, -1.0];
    let p = point_as_katetov(s.clone(), v.clone()).unwrap();
    for (alpha, a) in [(2.0, [1.0, 1.0]), (-0.5, [0.0, 3.0]), (1.0, [0.5, -1.0])] {
        let direct = s
            .norm(&[alpha * v[0] - a[0], alpha * v[1] - a[1]])
            .unwrap();
        assert!(close(p.one_point_norm(alpha, &a).unwrap(), direct));
    }
}

#[test]
fn extension_ball_matches_one_point_norm() {
    let s = l1(2);
    let ck = ConvexKatetovEnvelope::from_generator(
        s,
        vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, -1.0]],
        vec![1.0, 1.5, 1.0],
    )
    .unwrap();
    let ball = ck.extension_ball();
    for (alpha, a) in [
        (1.0, [0.3, -0.2]),
        (-2.0, [1.0, 1.0]),
        (0.0, [1.0, -3.0]),
        (0.5, [4.0, 0.0]),
    ] {
        let lhs = ck.one_point_norm(alpha, &a).unwrap();
        let (rhs, _) = ball.support(&[-a[0], -a[1], alpha]).unwrap();
        assert!(close(lhs, rhs), "{alpha} {a:?}: {lhs} vs {rhs}");
    }
}
