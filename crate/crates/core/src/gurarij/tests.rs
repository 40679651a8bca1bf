use super::*;
use crate::katetov::point_as_katetov;

fn l1(d: usize) -> SpaceRef {
    Arc::new(PolyNormedSpace::l1(d).into())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn zero_envelopes_log_a_round_without_growing() {
    let mut p = BuildParams::new(PolyNormedSpace::l1(2), 1, 7);
    p.envelopes_per_round = 0;
    let s = build(&p).unwrap();
    assert_eq!(s.rounds.len(), 1);
    assert_eq!(s.spaces.len(), 1);
    let p0 = BuildParams::new(PolyNormedSpace::l1(2), 0, 7);
    let s0 = build(&p0).unwrap();
    assert_eq!(s0.spaces.len(), 1);
    assert!(s0.rounds.is_empty());
}

#[test]
fn one_round_adds_one_dimension_per_envelope() {
    let p = BuildParams::new(PolyNormedSpace::l1(2), 1, 11);
    let s = build(&p).unwrap();
    assert_eq!(s.current().dim(), 4);
    let samples = vec![vec![1.0, 0.0], vec![0.3, -0.8], vec![-2.0, 1.0]];
    assert!(s.embedding_defect(0, &samples).unwrap() <= 1e-9);
}

#[test]
fn builds_are_deterministic() {
    let p = BuildParams::new(PolyNormedSpace::l1(2), 2, 5);
    let a = build(&p).unwrap();
    let b = build(&p).unwrap();
    let probe = vec![0.4, -0.1, 1.0, 0.2, -0.5, 0.3];
    assert_eq!(a.current().dim(), b.current().dim());
    let probe = &probe[..a.current().dim()];
    assert_eq!(a.current().norm(probe).unwrap(), b.current().norm(probe).unwrap());
    for (ra, rb) in a.rounds.iter().zip(&b.rounds) {
        assert_eq!(ra.seed, rb.seed);
        for (x, y) in ra.envelopes.iter().zip(&rb.envelopes) {
            assert_eq!(x.points(), y.points());
            assert_eq!(x.values(), y.values());
        }
    }
    let c = build(&BuildParams::new(PolyNormedSpace::l1(2), 2, 6)).unwrap();
    assert_ne!(
        a.rounds[0].envelopes[0].values(),
        c.rounds[0].envelopes[0].values()
    );
}

#[test]
fn replay_reproduces_the_chain() {
    let p = BuildParams::new(PolyNormedSpace::l1(2), 2, 3);
    let a = build(&p).unwrap();
    let logged = a
        .rounds
        .iter()
        .map(|r| {
            (
                r.seed,
                r.radius,
                r.envelopes
                    .iter()
                    .map(|e| (e.points().to_vec(), e.values().to_vec()))
                    .collect(),
            )
        })
        .collect();
    let b = BuildState::replay(PolyNormedSpace::l1(2), Vec::new(), logged).unwrap();
    let v: Vector = (0..a.current().dim()).map(|i| (i as f64 * 0.7).sin()).collect();
    assert!(close(a.current().norm(&v).unwrap(), b.current().norm(&v).unwrap(), 1e-12));
}

#[test]
fn symmetric_rounds_lift_the_group() {
    let mut p = BuildParams::new(PolyNormedSpace::l1(2), 1, 9);
    p.symmetry = sign_flip_group(2, 0);
    let s = build(&p).unwrap();
    let e1 = s.current().clone();
    let flip = &s.group[1][1];
    assert_eq!(flip.len(), e1.dim());
    for seed in 0..5u64 {
        let v: Vector = (0..e1.dim())
            .map(|i| ((seed * 13 + i as u64) as f64).cos())
            .collect();
        let w = mat::apply(flip, &v);
        assert!(close(e1.norm(&v).unwrap(), e1.norm(&w).unwrap(), 1e-8));
    }
}

#[test]
fn orbit_escape_is_reported() {
    let e = l1(2);
    let ck = point_as_katetov(e.clone(), vec![1.0, 0.0]).unwrap();
    let mut flip = mat::identity(2);
    flip[0][0] = -1.0;
    assert!(matches!(
        lift_isometry(&e, &[ck], &flip, 1),
        Err(GurarijError::OrbitEscape { element: 1, generator: 0 })
    ));
}

#[test]
fn invalid_params_are_rejected() {
    let mut p = BuildParams::new(PolyNormedSpace::l1(2), 1, 0);
    p.radii = vec![1.0];
    assert!(matches!(build(&p), Err(GurarijError::InvalidParams(_))));
    p.radii = vec![2.0];
    p.support_size = 0;
    assert!(matches!(build(&p), Err(GurarijError::InvalidParams(_))));
}

fn span_e1_setup() -> (SpaceRef, Vec<Vector>, SpaceRef) {
    let e = l1(2);
    let basis = vec![vec![1.0, 0.0]];
    let pull: SpaceRef = Arc::new(e.subspace_pullback(&basis).unwrap().into());
    (e, basis, pull)
}

#[test]
fn point_functions_extend_exactly() {
    // ξ(x) = ‖x − v‖ with v inside the span is realized without loss
    let (e, basis, pull) = span_e1_setup();
    let xi = point_as_katetov(pull.clone(), vec![1.0]).unwrap();
    let out = gurarij_extension_test(&e, &basis, &xi, 4.0, 16).unwrap();
    assert!(out.epsilon <= 1e-6, "{}", out.epsilon);
    assert_eq!(out.u_index, 2);
}

fn cone_envelope(pull: &SpaceRef) -> ConvexKatetovEnvelope {
    // ξ(x) = 1 + |x|: the new point is at distance one from the whole line
    ConvexKatetovEnvelope::from_generator(pull.clone(), vec![vec![0.0]], vec![1.0]).unwrap()
}

#[test]
fn restricted_extension_error_obeys_the_radius_bound() {
    let (e, basis, pull) = span_e1_setup();
    let xi = cone_envelope(&pull);
    for (r, bound) in [(3.0, 1.0), (11.0, 0.2)] {
        let out = gurarij_extension_test(&e, &basis, &xi, r, 16).unwrap();
        assert!(out.epsilon <= bound + 1e-9, "R={r}: {}", out.epsilon);
        assert!(out.epsilon_inside <= 1e-7, "R={r}: {}", out.epsilon_inside);
        assert!(close(out.bound, bound, 1e-12));
    }
}

#[test]
fn restriction_matches_xi_on_the_ball() {
    let p = PolyNormedSpace::linf(2);
    let pull: SpaceRef = Arc::new(p.clone().into());
    let xi = ConvexKatetovEnvelope::from_generator(
        pull.clone(),
        vec![vec![10.0, 0.0], vec![0.0, 0.0]],
        vec![0.0, 10.0],
    )
    .unwrap();
    let (qs, vals) = restrict_to_ball(&p, 3.0, |x| Ok(xi.eval_with_piece(x)?)).unwrap();
    let rest = ConvexKatetovEnvelope::from_generator(pull, qs, vals).unwrap();
    for x in [[3.0, 3.0], [0.0, 0.0], [-3.0, 1.0], [2.0, -3.0], [1.5, 0.5]] {
        assert!(close(rest.eval(&x).unwrap(), xi.eval(&x).unwrap(), 1e-8), "{x:?}");
    }
    // outside the ball the restriction is the largest extension
    assert!(rest.eval(&[20.0, 0.0]).unwrap() >= xi.eval(&[20.0, 0.0]).unwrap() - 1e-9);
}

#[test]
fn extension_preconditions() {
    let (e, basis, pull) = span_e1_setup();
    let unnormalized =
        ConvexKatetovEnvelope::from_generator(pull.clone(), vec![vec![0.0]], vec![2.0]).unwrap();
    assert!(matches!(
        gurarij_extension_test(&e, &basis, &unnormalized, 4.0, 8),
        Err(GurarijError::Unnormalized { .. })
    ));
    let fixed = normalize_at_origin(&unnormalized).unwrap();
    assert!(close(fixed.eval(&[0.0]).unwrap(), 1.0, 1e-12));
    let dep = vec![vec![1.0, 0.0], vec![2.0, 0.0]];
    let pull2: SpaceRef = Arc::new(PolyNormedSpace::l1(2).into());
    let xi2 = point_as_katetov(pull2, vec![1.0, 0.0]).unwrap();
    assert!(matches!(
        gurarij_extension_test(&e, &dep, &xi2, 4.0, 8),
        Err(GurarijError::DependentBasis)
    ));
}

#[test]
fn perturbation_constants_examples() {
    let e = l1(2);
    let pc = perturbation_constants(&e, &[vec![1.0, 0.0]], &[0.0, 1.0]).unwrap();
    assert!(close(pc.c_prime, 1.0, 1e-12));
    assert!(close(pc.c, 1.0, 1e-9));
    assert!(!pc.lower_bound);
    let unit = PerturbationConstants {
        c: 1.0,
        c_prime: 1.0,
        lower_bound: false,
    };
    assert!(close(unit.delta(0.1), 0.1 / 7.1, 1e-14));
    assert!(matches!(
        perturbation_constants(&e, &[vec![2.0, 0.0]], &[0.0, 1.0]),
        Err(GurarijError::Unnormalized { .. })
    ));
}

#[test]
fn isometry_check_on_identity_and_scaling() {
    let e = l1(2);
    let id = mat::identity(2);
    assert!(epsilon_isometry_check(&id, &e, &e, 16).unwrap() <= 1e-12);
    let twice = vec![vec![2.0, 0.0], vec![0.0, 2.0]];
    assert!(close(epsilon_isometry_check(&twice, &e, &e, 16).unwrap(), 1.0, 1e-12));
}

#[test]
fn perturbed_extension_stays_within_epsilon() {
    let (e, basis, pull) = span_e1_setup();
    let xi = cone_envelope(&pull);
    let noise = vec![vec![0.0, 1.0]];
    let out = perturbed_extension(&e, &basis, &xi, 0.1, &noise, 16).unwrap();
    assert!(out.henson <= out.delta + 1e-9);
    assert!(out.epsilon_net <= 0.1, "{}", out.epsilon_net);
}
