//! Projective measurement of one atom in the `{|g⟩, |e⟩}` basis.
//!
//! Collapse keeps the phases of the surviving amplitudes. Stochastic
//! sampling takes an explicit RNG; [`trial_rng`] derives an independent
//! stream per trial from `(base_seed, trial)` so that parallel and serial
//! runs draw identical outcomes.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{StateVector, EXCITED, GROUND};

/// Branches with weight below this are treated as impossible.
pub const ZERO_BRANCH: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    G,
    E,
}

impl Outcome {
    pub fn level(self) -> usize {
        match self {
            Outcome::G => GROUND,
            Outcome::E => EXCITED,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::G => "g",
            Outcome::E => "e",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub atom: usize,
    pub outcome: Outcome,
    pub probability: f64,
}

fn check_atom(state: &StateVector, atom: usize) -> Result<()> {
    if !state.space().subsystem(atom)?.is_atom() {
        return Err(Error::IndexError(format!("subsystem {atom} is not an atom")));
    }
    Ok(())
}

/// Born-rule probabilities `(p_g, p_e)` for measuring `atom`.
pub fn outcome_probabilities(state: &StateVector, atom: usize) -> Result<(f64, f64)> {
    check_atom(state, atom)?;
    state.require_normalized()?;
    let space = state.space();
    let (mut p_g, mut p_e) = (0.0, 0.0);
    for (i, a) in state.amplitudes().iter().enumerate() {
        if space.digit(i, atom) == EXCITED {
            p_e += a.norm_sqr();
        } else {
            p_g += a.norm_sqr();
        }
    }
    Ok((p_g, p_e))
}

/// The unnormalized component of `state` consistent with `outcome`.
pub fn branch(state: &StateVector, atom: usize, outcome: Outcome) -> Result<StateVector> {
    check_atom(state, atom)?;
    let space = state.space().clone();
    let keep = outcome.level();
    let amplitudes = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if space.digit(i, atom) == keep { *a } else { Complex64::new(0.0, 0.0) })
        .collect();
    StateVector::from_amplitudes(space, amplitudes)
}

/// Collapse onto `outcome`. Returns the normalized post-measurement state
/// and the pre-collapse probability of that outcome.
pub fn project(state: &StateVector, atom: usize, outcome: Outcome) -> Result<(StateVector, f64)> {
    check_atom(state, atom)?;
    state.require_normalized()?;
    let part = branch(state, atom, outcome)?;
    let probability = part.norm_sqr();
    if probability < ZERO_BRANCH {
        return Err(Error::ZeroProbabilityBranch { atom, probability });
    }
    Ok((part.normalize()?, probability))
}

/// Draw an outcome with Born-rule probabilities and collapse onto it.
pub fn sample<R: Rng + ?Sized>(
    state: &StateVector,
    atom: usize,
    rng: &mut R,
) -> Result<(MeasurementRecord, StateVector)> {
    let (_, p_e) = outcome_probabilities(state, atom)?;
    let outcome = draw_outcome(p_e, rng);
    let (collapsed, probability) = project(state, atom, outcome)?;
    Ok((MeasurementRecord { atom, outcome, probability }, collapsed))
}

/// Draw `E` with probability `p_e`. Consumes exactly one `f64` from `rng`.
pub fn draw_outcome<R: Rng + ?Sized>(p_e: f64, rng: &mut R) -> Outcome {
    if rng.gen::<f64>() < p_e {
        Outcome::E
    } else {
        Outcome::G
    }
}

/// Independent generator for trial `trial` of a run seeded with `base_seed`.
pub fn trial_rng(base_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(base_seed);
    rng.set_stream(trial);
    rng
}
