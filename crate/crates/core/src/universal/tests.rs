use std::sync::Arc;

use super::*;
use crate::gurarij::{build, sign_flip_group, BuildParams};
use crate::space::PolyNormedSpace;

#[test]
fn cyclic_metrics() {
    let z2 = FiniteGroupPresentation::cyclic(2, 1.0).unwrap();
    let m = left_invariant_metric(&z2).unwrap();
    assert_eq!(m.dist("g0", "g1").unwrap(), 1.0);
    assert_eq!(m.dist("*", "g0").unwrap(), 1.0);
    assert_eq!(m.base, "*");
    let z4 = FiniteGroupPresentation::cyclic(4, 0.4).unwrap();
    let m = left_invariant_metric(&z4).unwrap();
    assert!((m.dist("g0", "g2").unwrap() - 0.8).abs() < 1e-15);
    assert_eq!(m.dist("g0", "g1").unwrap(), 0.4);
    assert_eq!(m.dist("g0", "g3").unwrap(), 0.4);
    for a in m.labels.iter() {
        assert_eq!(m.dist(a, a).unwrap(), 0.0);
    }
}

#[test]
fn word_metric_is_left_invariant_and_capped() {
    let s3 = FiniteGroupPresentation::symmetric3(0.35).unwrap();
    let m = left_invariant_metric(&s3).unwrap();
    let n = s3.order();
    for k in 0..n {
        for g in 0..n {
            for h in 0..n {
                assert_eq!(m.distances[s3.mul(k, g)][s3.mul(k, h)], m.distances[g][h]);
            }
        }
    }
    assert!(m.distances.iter().flatten().all(|&d| d <= 1.0));
}

#[test]
fn bad_groups_are_rejected() {
    let elements = vec!["a".to_string(), "b".to_string()];
    // constant table: no identity
    assert!(FiniteGroupPresentation::new(elements.clone(), vec![vec![0, 0], vec![0, 0]], 0, vec![])
        .is_err());
    let z3 = FiniteGroupPresentation::cyclic(3, 1.0).unwrap();
    let no_gens = FiniteGroupPresentation::new(
        z3.elements().to_vec(),
        z3.label_table()
            .iter()
            .map(|r| r.iter().map(|l| z3.elements().iter().position(|e| e == l).unwrap()).collect())
            .collect(),
        0,
        vec![],
    )
    .unwrap();
    assert!(matches!(
        left_invariant_metric(&no_gens),
        Err(UniversalError::Disconnected(_))
    ));
    assert!(FiniteGroupPresentation::cyclic(2, -1.0).is_err());
}

#[test]
fn labels_round_trip() {
    let s3 = FiniteGroupPresentation::symmetric3(0.5).unwrap();
    let gens: BTreeMap<String, f64> = s3
        .generators()
        .iter()
        .map(|&(g, w)| (s3.elements()[g].clone(), w))
        .collect();
    let back = FiniteGroupPresentation::from_labels(
        s3.elements().to_vec(),
        &s3.label_table(),
        "e",
        &gens,
    )
    .unwrap();
    assert_eq!(back, s3);
}

#[test]
fn teleman_examples() {
    let z2 = FiniteGroupPresentation::cyclic(2, 1.0).unwrap();
    let t = teleman_embed(&z2).unwrap();
    assert_eq!(t.rho[0], mat::identity(2));
    assert_eq!(t.rho[1], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    let r = check_teleman(&t, 20, 1).unwrap();
    assert!(r.passed(1e-9), "{r:?}");
    let s3 = teleman_embed(&FiniteGroupPresentation::symmetric3(0.5).unwrap()).unwrap();
    let r = check_teleman(&s3, 30, 2).unwrap();
    assert!(r.homomorphism && r.injective);
    assert!(r.passed(1e-9), "{r:?}");
}

#[test]
fn identity_lifts_to_identity() {
    let s = build(&BuildParams::new(PolyNormedSpace::l1(2), 1, 4)).unwrap();
    let id = LinearIsometryWitness::identity(s.spaces[0].clone());
    let th = induced_isometry(&s, 0, &id).unwrap();
    assert_eq!(*th.matrix(), mat::identity(s.spaces[1].dim()));
}

#[test]
fn sign_flip_action_is_a_g_embedding() {
    let mut p = BuildParams::new(PolyNormedSpace::l1(2), 1, 21);
    p.symmetry = sign_flip_group(2, 1);
    let s = build(&p).unwrap();
    let e0 = s.spaces[0].clone();
    let action: Vec<LinearIsometryWitness> = p
        .symmetry
        .iter()
        .map(|m| LinearIsometryWitness::new(m.clone(), e0.clone(), 1e-9).unwrap())
        .collect();
    let r = verify_g_embedding(&s, 0, &action).unwrap();
    assert!(r.passed(), "{r:?}");
    let flip = induced_isometry(&s, 0, &action[1]).unwrap();
    let d = e0.dim();
    // adjoined coordinates are permuted in matching pairs
    let m = flip.matrix();
    for j in d..m.len() {
        let k = (d..m.len()).find(|&k| m[k][j] == 1.0).unwrap();
        assert_eq!(m[j][k], 1.0);
    }
}

#[test]
fn non_closed_action_is_flagged() {
    let mut p = BuildParams::new(PolyNormedSpace::l1(2), 1, 21);
    p.symmetry = sign_flip_group(2, 1);
    let s = build(&p).unwrap();
    let e0 = s.spaces[0].clone();
    // the flip alone: flip∘flip = id is missing
    let action = vec![LinearIsometryWitness::new(p.symmetry[1].clone(), e0, 1e-9).unwrap()];
    let r = verify_g_embedding(&s, 0, &action).unwrap();
    assert!(!r.homomorphism);
    assert_eq!(r.failing_pair, Some((0, 0)));
}

#[test]
fn unsymmetrized_rounds_escape() {
    let s = build(&BuildParams::new(PolyNormedSpace::l1(2), 1, 21)).unwrap();
    let e0: SpaceRef = Arc::new(PolyNormedSpace::l1(2).into());
    let flip = LinearIsometryWitness::new(sign_flip_group(2, 0)[1].clone(), e0, 1e-9).unwrap();
    assert!(matches!(
        induced_isometry(&s, 0, &flip),
        Err(UniversalError::Gurarij(GurarijError::OrbitEscape { .. }))
    ));
    let scale = vec![vec![2.0, 0.0], vec![0.0, 2.0]];
    assert!(matches!(
        LinearIsometryWitness::new(scale, s.spaces[0].clone(), 1e-9),
        Err(UniversalError::NotIsometry { .. })
    ));
}
