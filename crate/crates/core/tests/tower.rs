//! A short tower over ℓ¹(2) embeds each stage isometrically in the next.

use gurarij_core::gurarij::{build, BuildParams};
use gurarij_core::space::PolyNormedSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn each_stage_embeds_isometrically() {
    let mut params = BuildParams::new(PolyNormedSpace::l1(2), 2, 5);
    params.envelopes_per_round = 1;
    let state = build(&params).unwrap();
    assert_eq!(state.spaces.len(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..state.spaces.len() - 1 {
        let d = state.spaces[i].dim();
        let samples: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let defect = state.embedding_defect(i, &samples).unwrap();
        assert!(defect <= 1e-8, "stage {i}: {defect:e}");
        assert_eq!(state.spaces[i + 1].dim(), d + 1);
    }
}
