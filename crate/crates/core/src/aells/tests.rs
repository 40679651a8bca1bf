use std::sync::Arc;

use super::*;
use crate::katetov::point_as_katetov;
use crate::space::PolyNormedSpace;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * (1.0 + b.abs())
}

fn line() -> PointedFiniteMetric {
    PointedFiniteMetric::new(
        vec!["0".into(), "p".into(), "q".into()],
        vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0],
            vec![1.0, 2.0, 0.0],
        ],
        "0",
    )
    .unwrap()
}

#[test]
fn ae_examples() {
    let m = line();
    let r = ae_norm(&m, &Molecule::dipole("p", "q")).unwrap();
    assert!(close(r.value, 2.0) && r.gap() < 1e-9);
    let r = ae_norm(&m, &Molecule::default()).unwrap();
    assert_eq!(r.value, 0.0);
    let mol = Molecule::new(
        [("p".to_string(), 1.0), ("q".to_string(), 1.0), ("0".to_string(), -2.0)]
            .into_iter()
            .collect(),
    );
    let r = ae_norm(&m, &mol).unwrap();
    assert!(close(r.value, 2.0) && close(r.dual_value, 2.0));
    assert!(close(r.witness["p"], 1.0) && close(r.witness["q"], 1.0));
    let unbalanced = Molecule::new([("p".to_string(), 1.0)].into_iter().collect());
    assert!(matches!(ae_norm(&m, &unbalanced), Err(AellsError::UnbalancedMolecule(_))));
    let stray = Molecule::dipole("p", "z");
    assert!(matches!(ae_norm(&m, &stray), Err(AellsError::SupportMismatch(_))));
}

#[test]
fn invalid_metrics() {
    let bad = PointedFiniteMetric::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ],
        "a",
    );
    assert!(matches!(bad, Err(AellsError::InvalidMetric(_))));
}

#[test]
fn mcshane_examples() {
    let m = line();
    let all: BTreeMap<String, f64> = [("0", 0.0), ("p", 0.5), ("q", -0.5)]
        .iter()
        .map(|(l, v)| (l.to_string(), *v))
        .collect();
    assert_eq!(lipschitz_extend(&m, &all, 1.0).unwrap(), all);
    let single: BTreeMap<String, f64> = [("p".to_string(), 0.0)].into_iter().collect();
    let ext = lipschitz_extend(&m, &single, 1.0).unwrap();
    assert_eq!(ext["0"], 1.0);
    assert_eq!(ext["q"], 2.0);
    let two = PointedFiniteMetric::new(
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        "a",
    )
    .unwrap();
    let steep: BTreeMap<String, f64> =
        [("a".to_string(), 0.0), ("b".to_string(), 2.0)].into_iter().collect();
    assert!(matches!(
        lipschitz_extend(&two, &steep, 1.0),
        Err(AellsError::NotLipschitz { .. })
    ));
}

#[test]
fn relative_examples() {
    let e: SpaceRef = Arc::new(PolyNormedSpace::l1(2).into());
    let v = vec![0.5, -1.0];
    let p = point_as_katetov(e.clone(), v.clone()).unwrap();
    let rs = RelativeSpaceOverE::new(e.clone(), vec![p]).unwrap();
    let a = [0.3, 2.0];
    assert!(close(relative_ae_norm(&rs, &a, &[0.0]).unwrap(), 2.3));
    assert!(relative_ae_norm(&rs, &[-0.5, 1.0], &[1.0]).unwrap().abs() < 1e-9);
    for (a, alpha) in [([1.0, 0.0], 2.0), ([-1.0, 0.5], -1.0), ([0.0, 0.0], 0.5)] {
        let direct = e.norm(&[a[0] + alpha * v[0], a[1] + alpha * v[1]]).unwrap();
        assert!(close(relative_ae_norm(&rs, &a, &[alpha]).unwrap(), direct));
    }

    let xi = ConvexKatetovEnvelope::from_generator(
        e.clone(),
        vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![-1.0, 0.5]],
        vec![1.0, 1.2, 1.5],
    )
    .unwrap();
    let rs = RelativeSpaceOverE::new(e.clone(), vec![xi.clone()]).unwrap();
    for a in [[0.0, 0.0], [0.5, 0.5], [2.0, -1.0], [-3.0, 0.25]] {
        // ‖u − a‖ = ξ(a)
        let lhs = relative_ae_norm(&rs, &[-a[0], -a[1]], &[1.0]).unwrap();
        assert!(close(lhs, xi.eval(&a).unwrap()), "{a:?}");
    }

    let empty = RelativeSpaceOverE::new(e.clone(), vec![]).unwrap();
    let sp: Space = adjoin(&empty, "E").into();
    assert!(close(sp.norm(&[1.0, -2.0]).unwrap(), 3.0));
}

#[test]
fn two_adjoined_points_sit_at_sup_distance() {
    let e: SpaceRef = Arc::new(PolyNormedSpace::linf(2).into());
    let a = ConvexKatetovEnvelope::from_generator(
        e.clone(),
        vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        vec![1.0, 1.0],
    )
    .unwrap();
    let b = ConvexKatetovEnvelope::from_generator(e.clone(), vec![vec![0.0, 1.0]], vec![0.5]).unwrap();
    let d = a.sup_distance(&b).unwrap();
    let rs = RelativeSpaceOverE::new(e, vec![a, b]).unwrap();
    let n = relative_ae_norm(&rs, &[0.0, 0.0], &[1.0, -1.0]).unwrap();
    assert!(close(n, d), "{n} vs {d}");
    assert!(rs.metric_defect(&[vec![0.0, 0.0], vec![2.0, 1.0]]).unwrap() < 1e-9);
}
