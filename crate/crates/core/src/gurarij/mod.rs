//! The tower `E₀ ⊆ E₁ ⊆ …`: each round samples finitely generated convex
//! Katětov envelopes over the current space and adjoins points realizing
//! them. Also the quantitative one-point extension test and the constants
//! used to absorb a perturbed embedding.

mod extension;
pub mod sample;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aells::{adjoin, AellsError, RelativeSpaceOverE};
use crate::amalgam::AmalgamError;
use crate::katetov::{convexify, ConvexKatetovEnvelope, KatetovError};
use crate::mat::{self, Matrix};
use crate::optim::LpError;
use crate::space::{PolyNormedSpace, Space, SpaceError, SpaceRef};
use crate::Vector;

pub use extension::{
    epsilon_isometry_check, gurarij_extension_test, normalize_at_origin, perturbation_constants,
    perturbed_extension, restrict_to_ball, ExtensionOutcome, PerturbationConstants,
    PerturbedOutcome, DEFAULT_NET,
};

/// Two envelopes closer than this in sup distance are the same point.
pub const MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GurarijError {
    #[error(transparent)]
    Katetov(#[from] KatetovError),
    #[error(transparent)]
    Aells(#[from] AellsError),
    #[error(transparent)]
    Amalgam(#[from] AmalgamError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("image of adjoined envelope {generator} under isometry {element} is not in the round")]
    OrbitEscape { element: usize, generator: usize },
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
    #[error("{what} has norm {norm}, expected 1")]
    Unnormalized { what: String, norm: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildParams {
    pub start: PolyNormedSpace,
    pub rounds: usize,
    pub envelopes_per_round: usize,
    pub support_size: usize,
    /// Cutoff radius per round; the last entry repeats.
    pub radii: Vec<f64>,
    pub seed: u64,
    /// Finite group of linear isometries of the start space; each round's
    /// envelopes are closed under it. Empty means no symmetrization.
    pub symmetry: Vec<Matrix>,
}

impl BuildParams {
    pub fn new(start: PolyNormedSpace, rounds: usize, seed: u64) -> Self {
        BuildParams {
            start,
            rounds,
            envelopes_per_round: 2,
            support_size: 3,
            radii: vec![2.0],
            seed,
            symmetry: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GurarijError> {
        let bad = |s: &str| Err(GurarijError::InvalidParams(s.to_string()));
        if self.support_size == 0 {
            return bad("support_size must be positive");
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r >= 2.0) || !r.is_finite()) {
            return bad("cutoff radii must be finite and at least 2");
        }
        let d = self.start.dim();
        for m in &self.symmetry {
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                return bad("symmetry matrices must be square of the start dimension");
            }
        }
        Ok(())
    }

    pub fn radius(&self, round: usize) -> f64 {
        *self.radii.get(round).unwrap_or_else(|| self.radii.last().expect("validated"))
    }
}

/// Per-round seed, derived from the build seed.
pub fn round_seed(seed: u64, round: usize) -> u64 {
    // splitmix64 step on the pair
    let mut z = seed ^ (round as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub index: usize,
    pub seed: u64,
    pub radius: f64,
    /// Adjoined envelopes over the space the round started from.
    pub envelopes: Vec<ConvexKatetovEnvelope>,
}

#[derive(Debug, Clone)]
pub struct BuildState {
    /// `E₀, E₁, …`; rounds that adjoin nothing add no space.
    pub spaces: Vec<SpaceRef>,
    pub rounds: Vec<RoundLog>,
    /// The symmetry group lifted to each space, in the order of
    /// [`BuildParams::symmetry`].
    pub group: Vec<Vec<Matrix>>,
}

impl BuildState {
    pub fn new(params: &BuildParams) -> Self {
        BuildState {
            spaces: vec![Arc::new(Space::Poly(params.start.clone()))],
            rounds: Vec::new(),
            group: vec![params.symmetry.clone()],
        }
    }

    pub fn current(&self) -> &SpaceRef {
        self.spaces.last().expect("non-empty chain")
    }

    pub fn round(&self) -> usize {
        self.rounds.len()
    }

    /// Rebuilds the chain from logged envelopes (e.g. from a manifest).
    pub fn replay(
        start: PolyNormedSpace,
        symmetry: Vec<Matrix>,
        rounds: Vec<(u64, f64, Vec<(Vec<Vector>, Vec<f64>)>)>,
    ) -> Result<Self, GurarijError> {
        let mut state = BuildState {
            spaces: vec![Arc::new(Space::Poly(start))],
            rounds: Vec::new(),
            group: vec![symmetry],
        };
        for (index, (seed, radius, gens)) in rounds.into_iter().enumerate() {
            let e = state.current().clone();
            let envelopes = gens
                .into_iter()
                .map(|(p, v)| ConvexKatetovEnvelope::from_generator(e.clone(), p, v))
                .collect::<Result<Vec<_>, _>>()?;
            state.push_round(RoundLog {
                index,
                seed,
                radius,
                envelopes,
            })?;
        }
        Ok(state)
    }

    fn push_round(&mut self, log: RoundLog) -> Result<(), GurarijError> {
        if !log.envelopes.is_empty() {
            let e = self.current().clone();
            let rs = RelativeSpaceOverE::new(e.clone(), log.envelopes.clone())?;
            let next: SpaceRef = Arc::new(adjoin(&rs, format!("E_{}", self.spaces.len())).into());
            let lifted = self
                .group
                .last()
                .expect("non-empty")
                .iter()
                .enumerate()
                .map(|(gi, g)| lift_isometry(&e, &log.envelopes, g, gi))
                .collect::<Result<Vec<_>, _>>()?;
            self.spaces.push(next);
            self.group.push(lifted);
        }
        self.rounds.push(log);
        Ok(())
    }

    /// Largest `|‖v‖_{E_{i+1}} − ‖v‖_{E_i}|` over the samples (padded with
    /// zeros on the new coordinates).
    pub fn embedding_defect(&self, i: usize, samples: &[Vector]) -> Result<f64, GurarijError> {
        let (a, b) = (&self.spaces[i], &self.spaces[i + 1]);
        let mut worst: f64 = 0.0;
        for v in samples {
            let mut w = v.clone();
            w.resize(b.dim(), 0.0);
            worst = worst.max((a.norm(v)? - b.norm(&w)?).abs());
        }
        Ok(worst)
    }
}

/// The envelope `ξ∘φ⁻¹`: support points pushed forward, values kept.
pub fn push_forward(
    ck: &ConvexKatetovEnvelope,
    phi: &Matrix,
) -> Result<ConvexKatetovEnvelope, GurarijError> {
    let pts = ck.points().iter().map(|y| mat::apply(phi, y)).collect();
    Ok(ConvexKatetovEnvelope::from_generator(
        ck.space().clone(),
        pts,
        ck.values().to_vec(),
    )?)
}

/// Extends an isometry `φ` of `E` to `E ⊕ span(u)` by permuting the
/// adjoined points along `ξ ↦ ξ∘φ⁻¹`. `element` only labels errors.
pub fn lift_isometry(
    _e: &SpaceRef,
    envelopes: &[ConvexKatetovEnvelope],
    phi: &Matrix,
    element: usize,
) -> Result<Matrix, GurarijError> {
    let mut perm = Vec::with_capacity(envelopes.len());
    for (i, ck) in envelopes.iter().enumerate() {
        let img = push_forward(ck, phi)?;
        let mut found = None;
        for (j, other) in envelopes.iter().enumerate() {
            if !perm.contains(&j) && img.sup_distance(other)? <= MATCH_TOL {
                found = Some(j);
                break;
            }
        }
        match found {
            Some(j) => perm.push(j),
            None => {
                return Err(GurarijError::OrbitEscape {
                    element,
                    generator: i,
                })
            }
        }
    }
    Ok(mat::block_with_permutation(phi, &perm))
}

/// Closes a family of envelopes under a finite group, dropping duplicates.
pub fn orbit_close(
    envelopes: Vec<ConvexKatetovEnvelope>,
    group: &[Matrix],
) -> Result<Vec<ConvexKatetovEnvelope>, GurarijError> {
    let mut out: Vec<ConvexKatetovEnvelope> = Vec::new();
    for ck in envelopes {
        let mut images = vec![ck.clone()];
        for g in group {
            images.push(push_forward(&ck, g)?);
        }
        for img in images {
            let mut dup = false;
            for o in &out {
                if o.sup_distance(&img)? <= MATCH_TOL {
                    dup = true;
                    break;
                }
            }
            if !dup {
                out.push(img);
            }
        }
    }
    Ok(out)
}

/// One round: sample, convexify, optionally symmetrize, adjoin.
pub fn build_step(state: &BuildState, params: &BuildParams) -> Result<BuildState, GurarijError> {
    params.validate()?;
    let index = state.round();
    let seed = round_seed(params.seed, index);
    let radius = params.radius(index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = state.current().clone();
    let mut envelopes = Vec::with_capacity(params.envelopes_per_round);
    for _ in 0..params.envelopes_per_round {
        let fk = sample::random_katetov(&mut rng, &e, params.support_size, radius)?;
        envelopes.push(convexify(&fk)?);
    }
    let group = state.group.last().expect("non-empty");
    if !group.is_empty() && !envelopes.is_empty() {
        envelopes = orbit_close(envelopes, group)?;
    }
    let mut next = state.clone();
    next.push_round(RoundLog {
        index,
        seed,
        radius,
        envelopes,
    })?;
    Ok(next)
}

/// `params.rounds` rounds from the start space; deterministic in the seed.
pub fn build(params: &BuildParams) -> Result<BuildState, GurarijError> {
    params.validate()?;
    let mut state = BuildState::new(params);
    for _ in 0..params.rounds {
        state = build_step(&state, params)?;
    }
    Ok(state)
}

/// Sign flips and coordinate permutations preserving an explicit space.
pub fn sign_flip_group(dim: usize, axis: usize) -> Vec<Matrix> {
    let mut flip = mat::identity(dim);
    flip[axis][axis] = -1.0;
    vec![mat::identity(dim), flip]
}

#[cfg(test)]
mod tests;
