//! Teleportation of `α|1,0⟩ + β|0,1⟩` from cavity C₂ (modes C, D) to
//! cavity C₁ (modes A, B) with two resonant atoms and no Bell measurement.
//!
//! Sequence, all pulses resonant:
//!
//! 1. atom 1 (in `|e⟩`) crosses C₁ and interacts with mode A for `theta1`;
//! 2. the joint state is tensored with the channel state held in C₂;
//! 3. atom 1 interacts with mode C for `theta2`;
//! 4. atom 1 is detected;
//! 5. atom 2 (in `|e⟩`) interacts with mode B for `theta1`;
//! 6. atom 2 interacts with mode D for `theta2`;
//! 7. atom 2 is detected.
//!
//! The run succeeds when both atoms are found in `|e⟩`, which leaves
//! C₁ close to the channel state (exactly it when `cos(√2·theta2) = 0`).
//!
//! The full six-subsystem space is allocated up front. An atom that has not
//! yet entered a cavity is simply held in its prepared level `|e⟩`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{jc_apply, JcPulse};
use crate::error::{Error, Result};
use crate::fock::{make_space, BasisKet, HilbertSpace, StateVector, Subsystem, DEFAULT_MODE_LEVELS, EXCITED, NORM_TOL};
use crate::measurement::{draw_outcome, outcome_probabilities, project, Outcome, ZERO_BRANCH};

/// Subsystem positions in the canonical space `[A, B, C, D, atom1, atom2]`.
pub const MODE_A: usize = 0;
pub const MODE_B: usize = 1;
pub const MODE_C: usize = 2;
pub const MODE_D: usize = 3;
pub const ATOM_1: usize = 4;
pub const ATOM_2: usize = 5;

/// Level every atom is prepared in before it enters a cavity.
pub const ATOM_INITIAL_LEVEL: usize = EXCITED;

pub const DEFAULT_THETA1: f64 = FRAC_PI_4;
pub const DEFAULT_THETA2: f64 = 7.0 * FRAC_PI_4;
pub const DEFAULT_LEAK_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `[A, B, C, D, atom1, atom2]`.
pub fn canonical_space(mode_levels: usize) -> Result<Arc<HilbertSpace>> {
    make_space(vec![
        Subsystem::mode("A", mode_levels),
        Subsystem::mode("B", mode_levels),
        Subsystem::mode("C", mode_levels),
        Subsystem::mode("D", mode_levels),
        Subsystem::atom("atom1"),
        Subsystem::atom("atom2"),
    ])
}

/// Cavity C₁ plus the atom that crosses it first: `[A, B, atom1]`.
pub fn first_cavity_space(mode_levels: usize) -> Result<Arc<HilbertSpace>> {
    make_space(vec![Subsystem::mode("A", mode_levels), Subsystem::mode("B", mode_levels), Subsystem::atom("atom1")])
}

/// Channel coefficients `(α, β)` with `|α|² + |β|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    alpha: Complex64,
    beta: Complex64,
}

impl ChannelParams {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { alpha, beta })
    }

    /// Scale `(α, β)` to unit norm.
    pub fn renormalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(norm > 1e-15) || !norm.is_finite() {
            return Err(Error::ZeroNorm(norm));
        }
        Self::new(alpha / norm, beta / norm)
    }

    pub fn real(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(c(alpha, 0.0), c(beta, 0.0))
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { alpha: c(std::f64::consts::FRAC_1_SQRT_2, 0.0), beta: c(std::f64::consts::FRAC_1_SQRT_2, 0.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub channel: ChannelParams,
    pub theta1: f64,
    pub theta2: f64,
    pub mode_levels: usize,
    pub leak_tol: f64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            channel: ChannelParams::default(),
            theta1: DEFAULT_THETA1,
            theta2: DEFAULT_THETA2,
            mode_levels: DEFAULT_MODE_LEVELS,
            leak_tol: DEFAULT_LEAK_TOL,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn with_channel(channel: ChannelParams) -> Self {
        Self { channel, ..Self::default() }
    }

    pub fn with_theta2(self, theta2: f64) -> Self {
        Self { theta2, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode_levels < 3 {
            return Err(Error::InvalidConfig(format!("mode_levels must be at least 3, got {}", self.mode_levels)));
        }
        if !(self.leak_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("leak_tol must be positive, got {}", self.leak_tol)));
        }
        if !self.theta1.is_finite() || !self.theta2.is_finite() {
            return Err(Error::InvalidConfig("pulse angles must be finite".into()));
        }
        ChannelParams::new(self.channel.alpha, self.channel.beta)?;
        Ok(())
    }
}

/// Snapshot points of the sequence, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Step {
    AfterA,
    JointWithC2,
    AfterC,
    CollapseE1,
    AfterB,
    AfterD,
    CollapseE2,
}

impl Step {
    pub const ALL: [Step; 7] =
        [Step::AfterA, Step::JointWithC2, Step::AfterC, Step::CollapseE1, Step::AfterB, Step::AfterD, Step::CollapseE2];

    pub fn label(self) -> &'static str {
        match self {
            Step::AfterA => "after_A",
            Step::JointWithC2 => "joint_with_C2",
            Step::AfterC => "after_C",
            Step::CollapseE1 => "collapse_e1",
            Step::AfterB => "after_B",
            Step::AfterD => "after_D",
            Step::CollapseE2 => "collapse_e2",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub p_e1: f64,
    pub p_e2_given_e1: f64,
    pub p_joint: f64,
    /// Post-selected, normalized.
    pub final_state: StateVector,
    pub fidelity: f64,
    pub snapshots: BTreeMap<Step, StateVector>,
}

/// A sampled run in which at least one atom was found in `|g⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureRecord {
    pub outcomes: (Outcome, Outcome),
    /// Probability of this outcome pair.
    pub path_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampledRun {
    Success(ProtocolResult),
    Failure(FailureRecord),
}

impl SampledRun {
    pub fn is_success(&self) -> bool {
        matches!(self, SampledRun::Success(_))
    }

    pub fn outcomes(&self) -> (Outcome, Outcome) {
        match self {
            SampledRun::Success(_) => (Outcome::E, Outcome::E),
            SampledRun::Failure(f) => f.outcomes,
        }
    }
}

fn state_on(space: &Arc<HilbertSpace>, terms: &[(Complex64, BasisKet)]) -> Result<StateVector> {
    let mut state = StateVector::zeros(space.clone());
    for (amp, ket) in terms {
        let basis = StateVector::ket(space.clone(), ket)?;
        state = state.add_scaled(*amp, &basis)?;
    }
    Ok(state)
}

/// `α|1⟩_x|0⟩_y + β|0⟩_x|1⟩_y` on the modes labelled `x`, `y`; other modes
/// empty, atoms in their prepared level.
fn two_mode_state(params: &ChannelParams, space: &Arc<HilbertSpace>, x: &str, y: &str) -> Result<StateVector> {
    let ix = space.position(x).ok_or_else(|| Error::InvalidConfig(format!("space has no mode `{x}`")))?;
    let iy = space.position(y).ok_or_else(|| Error::InvalidConfig(format!("space has no mode `{y}`")))?;
    let base: Vec<usize> =
        space.subsystems().iter().map(|s| if s.is_atom() { ATOM_INITIAL_LEVEL } else { 0 }).collect();
    let mut one_x = base.clone();
    one_x[ix] = 1;
    let mut one_y = base;
    one_y[iy] = 1;
    let p = ChannelParams::new(params.alpha, params.beta)?;
    state_on(space, &[(p.alpha, BasisKet(one_x)), (p.beta, BasisKet(one_y))])
}

/// The shared channel `α|1⟩_C|0⟩_D + β|0⟩_C|1⟩_D`.
pub fn channel_state(params: &ChannelParams, space: &Arc<HilbertSpace>) -> Result<StateVector> {
    two_mode_state(params, space, "C", "D")
}

/// The state teleportation should leave in C₁: `α|1⟩_A|0⟩_B + β|0⟩_A|1⟩_B`.
pub fn target_state(params: &ChannelParams, space: &Arc<HilbertSpace>) -> Result<StateVector> {
    two_mode_state(params, space, "A", "B")
}

/// Deterministic steps 1–3; returns `(after_A, joint_with_C2, after_C)`.
fn first_atom_evolution(config: &ProtocolConfig) -> Result<(StateVector, StateVector, StateVector)> {
    let levels = config.mode_levels;
    let c1 = first_cavity_space(levels)?;
    let start = StateVector::ket(c1, &[0, 0, ATOM_INITIAL_LEVEL].into())?;
    let after_a = jc_apply(&start, &JcPulse::new(2, 0, config.theta1), config.leak_tol)?;

    let c2 = make_space(vec![Subsystem::mode("C", levels), Subsystem::mode("D", levels)])?;
    let atom2 = make_space(vec![Subsystem::atom("atom2")])?;
    let joint = after_a
        .tensor(&channel_state(&config.channel, &c2)?)?
        .tensor(&StateVector::ket(atom2, &[ATOM_INITIAL_LEVEL].into())?)?
        .reorder(canonical_space(levels)?)?;

    let after_c = jc_apply(&joint, &JcPulse::new(ATOM_1, MODE_C, config.theta2), config.leak_tol)?;
    Ok((after_a, joint, after_c))
}

/// Steps 5–6; returns `(after_B, after_D)`.
fn second_atom_evolution(collapsed: &StateVector, config: &ProtocolConfig) -> Result<(StateVector, StateVector)> {
    let after_b = jc_apply(collapsed, &JcPulse::new(ATOM_2, MODE_B, config.theta1), config.leak_tol)?;
    let after_d = jc_apply(&after_b, &JcPulse::new(ATOM_2, MODE_D, config.theta2), config.leak_tol)?;
    Ok((after_b, after_d))
}

/// Run the sequence conditioned on detecting both atoms in `|e⟩`.
pub fn run_postselected(config: &ProtocolConfig) -> Result<ProtocolResult> {
    config.validate()?;
    let (after_a, joint, after_c) = first_atom_evolution(config)?;
    let (collapse_e1, p_e1) = project(&after_c, ATOM_1, Outcome::E)?;
    let (after_b, after_d) = second_atom_evolution(&collapse_e1, config)?;
    let (collapse_e2, p_e2_given_e1) = project(&after_d, ATOM_2, Outcome::E)?;

    let target = target_state(&config.channel, collapse_e2.space())?;
    let fidelity = target.fidelity(&collapse_e2)?;
    let snapshots = BTreeMap::from([
        (Step::AfterA, after_a),
        (Step::JointWithC2, joint),
        (Step::AfterC, after_c),
        (Step::CollapseE1, collapse_e1),
        (Step::AfterB, after_b),
        (Step::AfterD, after_d),
        (Step::CollapseE2, collapse_e2.clone()),
    ]);
    Ok(ProtocolResult {
        p_e1,
        p_e2_given_e1,
        p_joint: p_e1 * p_e2_given_e1,
        final_state: collapse_e2,
        fidelity,
        snapshots,
    })
}

/// `P(e₁, e₂)`, which unlike [`run_postselected`] is also defined (and
/// vanishing) when the `e₂` branch is annihilated.
pub fn joint_probability(config: &ProtocolConfig) -> Result<f64> {
    config.validate()?;
    let (_, _, after_c) = first_atom_evolution(config)?;
    let (collapse_e1, p_e1) = project(&after_c, ATOM_1, Outcome::E)?;
    let (_, after_d) = second_atom_evolution(&collapse_e1, config)?;
    let (_, p_e2) = outcome_probabilities(&after_d, ATOM_2)?;
    Ok(p_e1 * p_e2)
}

/// Run the sequence with both detections drawn at random.
///
/// Atom 2 is sent through regardless of atom 1's result, so a failure
/// always carries a full outcome pair. Failed runs are not corrected.
pub fn run_sampled<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> Result<SampledRun> {
    SamplingPlan::new(config)?.sample(rng)
}

/// Evolution after atom 1 has been detected with a given outcome.
#[derive(Debug, Clone)]
struct SecondAtom {
    collapsed: StateVector,
    probability: f64,
    after_b: StateVector,
    after_d: StateVector,
    /// `(p_g, p_e)` for atom 2.
    second: (f64, f64),
}

/// The deterministic parts of a sampled run, evaluated once for both
/// outcomes of atom 1. Sampling from a plan consumes the RNG exactly as
/// measuring step by step would, so repeated trials can share one plan.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    config: ProtocolConfig,
    after_a: StateVector,
    joint: StateVector,
    after_c: StateVector,
    /// `(p_g, p_e)` for atom 1.
    first: (f64, f64),
    /// Indexed by atom 1's level; `None` for an impossible outcome.
    branches: [Option<SecondAtom>; 2],
    /// Post-selected state and fidelity, when `(e, e)` is possible.
    success: Option<(StateVector, f64)>,
}

/// Outcome of one sampled trial without the intermediate states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub outcomes: (Outcome, Outcome),
    pub path_probability: f64,
    /// Set for `(e, e)` only.
    pub fidelity: Option<f64>,
}

impl SamplingPlan {
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let (after_a, joint, after_c) = first_atom_evolution(config)?;
        let first = outcome_probabilities(&after_c, ATOM_1)?;
        let mut branches = [None, None];
        for outcome in [Outcome::G, Outcome::E] {
            let (collapsed, probability) = match project(&after_c, ATOM_1, outcome) {
                Ok(v) => v,
                Err(Error::ZeroProbabilityBranch { .. }) => continue,
                Err(e) => return Err(e),
            };
            let (after_b, after_d) = second_atom_evolution(&collapsed, config)?;
            let second = outcome_probabilities(&after_d, ATOM_2)?;
            branches[outcome.level()] = Some(SecondAtom { collapsed, probability, after_b, after_d, second });
        }
        let success = match &branches[Outcome::E.level()] {
            Some(b) => match project(&b.after_d, ATOM_2, Outcome::E) {
                Ok((state, _)) => {
                    let fidelity = target_state(&config.channel, state.space())?.fidelity(&state)?;
                    Some((state, fidelity))
                }
                Err(Error::ZeroProbabilityBranch { .. }) => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        Ok(Self { config: *config, after_a, joint, after_c, first, branches, success })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Outcome, Outcome, &SecondAtom, f64)> {
        let o1 = draw_outcome(self.first.1, rng);
        let branch = self.branches[o1.level()].as_ref().ok_or(Error::ZeroProbabilityBranch {
            atom: ATOM_1,
            probability: if o1 == Outcome::E { self.first.1 } else { self.first.0 },
        })?;
        let o2 = draw_outcome(branch.second.1, rng);
        let p2 = if o2 == Outcome::E { branch.second.1 } else { branch.second.0 };
        if p2 < ZERO_BRANCH {
            return Err(Error::ZeroProbabilityBranch { atom: ATOM_2, probability: p2 });
        }
        Ok((o1, o2, branch, p2))
    }

    /// One trial, reporting only outcomes, path probability and fidelity.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let (o1, o2, branch, p2) = self.draw(rng)?;
        let fidelity = match (o1, o2) {
            (Outcome::E, Outcome::E) => self.success.as_ref().map(|(_, f)| *f),
            _ => None,
        };
        Ok(TrialOutcome { outcomes: (o1, o2), path_probability: branch.probability * p2, fidelity })
    }

    /// One full trial.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledRun> {
        let (o1, o2, branch, p2) = self.draw(rng)?;
        if (o1, o2) != (Outcome::E, Outcome::E) {
            return Ok(SampledRun::Failure(FailureRecord {
                outcomes: (o1, o2),
                path_probability: branch.probability * p2,
            }));
        }
        let (final_state, fidelity) =
            self.success.clone().ok_or(Error::ZeroProbabilityBranch { atom: ATOM_2, probability: p2 })?;
        let snapshots = BTreeMap::from([
            (Step::AfterA, self.after_a.clone()),
            (Step::JointWithC2, self.joint.clone()),
            (Step::AfterC, self.after_c.clone()),
            (Step::CollapseE1, branch.collapsed.clone()),
            (Step::AfterB, branch.after_b.clone()),
            (Step::AfterD, branch.after_d.clone()),
            (Step::CollapseE2, final_state.clone()),
        ]);
        Ok(SampledRun::Success(ProtocolResult {
            p_e1: branch.probability,
            p_e2_given_e1: p2,
            p_joint: branch.probability * p2,
            final_state,
            fidelity,
            snapshots,
        }))
    }
}

/// The intermediate state at `step`, written out term by term.
///
/// `AfterA` (`cos θ₁|0,0,e⟩ − i sin θ₁|1,0,g⟩` in C₁) holds for any `theta1`;
/// the later expressions are written for the beam-splitter pulse
/// `theta1 = π/4` and reject anything else. `AfterB` and `AfterD` are left
/// unnormalized, with the overall `1/√2` and the first collapse norm dropped.
pub fn closed_form_state(step: Step, config: &ProtocolConfig) -> Result<StateVector> {
    config.validate()?;
    let levels = config.mode_levels;
    if step == Step::AfterA {
        let (c1, s1) = (config.theta1.cos(), config.theta1.sin());
        let space = first_cavity_space(levels)?;
        return state_on(&space, &[(c(c1, 0.0), [0, 0, 1].into()), (c(0.0, -s1), [1, 0, 0].into())]);
    }
    if (config.theta1 - FRAC_PI_4).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "closed form at {step} is written for theta1 = π/4, got {}",
            config.theta1
        )));
    }

    let space = canonical_space(levels)?;
    let (a, b) = (config.channel.alpha, config.channel.beta);
    let t = config.theta2;
    let (ct, st) = (t.cos(), t.sin());
    let (c2, s2) = ((SQRT_2 * t).cos(), (SQRT_2 * t).sin());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let i = c(0.0, 1.0);
    // kets as [A, B, C, D, atom1, atom2]; g = 0, e = 1
    let k = |m: [usize; 4], s1: usize, s2: usize| BasisKet(vec![m[0], m[1], m[2], m[3], s1, s2]);

    let terms: Vec<(Complex64, BasisKet)> = match step {
        Step::AfterA => unreachable!(),
        Step::JointWithC2 => vec![
            (a * r, k([0, 0, 1, 0], 1, 1)),
            (b * r, k([0, 0, 0, 1], 1, 1)),
            (-i * a * r, k([1, 0, 1, 0], 0, 1)),
            (-i * b * r, k([1, 0, 0, 1], 0, 1)),
        ],
        Step::AfterC => vec![
            (a * r * c2, k([0, 0, 1, 0], 1, 1)),
            (-i * a * r * s2, k([0, 0, 2, 0], 0, 1)),
            (-i * a * r * ct, k([1, 0, 1, 0], 0, 1)),
            (-a * r * st, k([1, 0, 0, 0], 1, 1)),
            (b * r * ct, k([0, 0, 0, 1], 1, 1)),
            (-i * b * r * st, k([0, 0, 1, 1], 0, 1)),
            (-i * b * r, k([1, 0, 0, 1], 0, 1)),
        ],
        Step::CollapseE1 => {
            let terms = vec![
                (a * c2, k([0, 0, 1, 0], 1, 1)),
                (-a * st, k([1, 0, 0, 0], 1, 1)),
                (b * ct, k([0, 0, 0, 1], 1, 1)),
            ];
            let n1 = normalization(&terms)?;
            scale_terms(terms, n1)
        }
        Step::AfterB => vec![
            (a * c2, k([0, 0, 1, 0], 1, 1)),
            (-i * a * c2, k([0, 1, 1, 0], 1, 0)),
            (-a * st, k([1, 0, 0, 0], 1, 1)),
            (i * a * st, k([1, 1, 0, 0], 1, 0)),
            (b * ct, k([0, 0, 0, 1], 1, 1)),
            (-i * b * ct, k([0, 1, 0, 1], 1, 0)),
        ],
        Step::AfterD => vec![
            (a * c2 * ct, k([0, 0, 1, 0], 1, 1)),
            (-i * a * c2 * st, k([0, 0, 1, 1], 1, 0)),
            (-i * a * c2, k([0, 1, 1, 0], 1, 0)),
            (i * a * st * st, k([1, 0, 0, 1], 1, 0)),
            (i * a * st, k([1, 1, 0, 0], 1, 0)),
            (-a * st * ct, k([1, 0, 0, 0], 1, 1)),
            (b * ct * c2, k([0, 0, 0, 1], 1, 1)),
            (-i * b * ct * s2, k([0, 0, 0, 2], 1, 0)),
            (-i * b * ct * ct, k([0, 1, 0, 1], 1, 0)),
            (-b * ct * st, k([0, 1, 0, 0], 1, 1)),
        ],
        Step::CollapseE2 => {
            let terms = vec![
                (a * c2 * ct, k([0, 0, 1, 0], 1, 1)),
                (b * ct * c2, k([0, 0, 0, 1], 1, 1)),
                (-b * ct * st, k([0, 1, 0, 0], 1, 1)),
                (-a * st * ct, k([1, 0, 0, 0], 1, 1)),
            ];
            let n2 = normalization(&terms)?;
            scale_terms(terms, n2)
        }
    };
    state_on(&space, &terms)
}

fn normalization(terms: &[(Complex64, BasisKet)]) -> Result<f64> {
    let n = terms.iter().map(|(a, _)| a.norm_sqr()).sum::<f64>().sqrt();
    if !(n > 1e-15) {
        return Err(Error::ZeroNorm(n));
    }
    Ok(1.0 / n)
}

fn scale_terms(terms: Vec<(Complex64, BasisKet)>, k: f64) -> Vec<(Complex64, BasisKet)> {
    terms.into_iter().map(|(a, ket)| (a * k, ket)).collect()
}

/// Population of the final state outside the `C = D = 0` sector.
pub fn population_outside_cd_vacuum(state: &StateVector) -> Result<f64> {
    let space = state.space();
    let ic = space.position("C").ok_or_else(|| Error::InvalidConfig("space has no mode `C`".into()))?;
    let id = space.position("D").ok_or_else(|| Error::InvalidConfig("space has no mode `D`".into()))?;
    Ok(state.population(|n| n[ic] != 0 || n[id] != 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::phase_aligned_distance;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const UNIT_FIDELITY_THETA2: f64 = PI / (2.0 * SQRT_2);

    #[test]
    fn channel_examples() {
        let space = canonical_space(4).unwrap();
        let only_c = channel_state(&ChannelParams::real(1.0, 0.0).unwrap(), &space).unwrap();
        assert_eq!(only_c, StateVector::ket(space.clone(), &[0, 0, 1, 0, 1, 1].into()).unwrap());
        let even = channel_state(&ChannelParams::default(), &space).unwrap();
        assert!((even.norm() - 1.0).abs() < 1e-15);
        assert_eq!(even.terms(0.0).len(), 2);
        let p = ChannelParams::new(Complex64::from_polar(0.6, 0.4), Complex64::from_polar(0.8, -2.0)).unwrap();
        assert!((channel_state(&p, &space).unwrap().norm() - 1.0).abs() < 1e-12);
        assert!(matches!(ChannelParams::real(1.0, 1.0), Err(Error::NotNormalized(_))));
        let r = ChannelParams::renormalized(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((r.alpha().re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn target_examples() {
        let space = canonical_space(4).unwrap();
        let t = target_state(&ChannelParams::real(1.0, 0.0).unwrap(), &space).unwrap();
        assert_eq!(t, StateVector::ket(space.clone(), &[1, 0, 0, 0, 1, 1].into()).unwrap());
        let t = target_state(&ChannelParams::real(0.0, 1.0).unwrap(), &space).unwrap();
        assert_eq!(t, StateVector::ket(space.clone(), &[0, 1, 0, 0, 1, 1].into()).unwrap());
    }

    #[test]
    fn relabelled_channel_is_target() {
        let p = ChannelParams::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let space = canonical_space(4).unwrap();
        let swapped = make_space(vec![
            Subsystem::mode("C", 4),
            Subsystem::mode("D", 4),
            Subsystem::mode("A", 4),
            Subsystem::mode("B", 4),
            Subsystem::atom("atom1"),
            Subsystem::atom("atom2"),
        ])
        .unwrap();
        let target = target_state(&p, &space).unwrap();
        let moved = channel_state(&p, &swapped).unwrap();
        // same amplitudes, different labels: compare as raw vectors
        let moved = StateVector::from_amplitudes(space.clone(), moved.into_amplitudes()).unwrap();
        assert!((target.fidelity(&moved).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn snapshots_cover_every_step() {
        let result = run_postselected(&ProtocolConfig::default()).unwrap();
        let labels: Vec<_> = result.snapshots.keys().map(|s| s.label()).collect();
        assert_eq!(labels, ["after_A", "joint_with_C2", "after_C", "collapse_e1", "after_B", "after_D", "collapse_e2"]);
        assert!((result.p_joint - result.p_e1 * result.p_e2_given_e1).abs() < 1e-12);
    }

    #[test]
    fn default_run_numbers() {
        let result = run_postselected(&ProtocolConfig::default()).unwrap();
        assert!((result.fidelity - 0.98771).abs() < 1e-4);
        assert!((result.p_joint - 0.06328).abs() < 1e-4);
        assert!((result.p_e1 - 0.2516).abs() < 1e-4);
    }

    #[test]
    fn unit_fidelity_angle() {
        let config =
            ProtocolConfig::with_channel(ChannelParams::real(1.0, 0.0).unwrap()).with_theta2(UNIT_FIDELITY_THETA2);
        let result = run_postselected(&config).unwrap();
        assert!((result.fidelity - 1.0).abs() < 1e-10);
        let expect = StateVector::ket(result.final_state.space().clone(), &[1, 0, 0, 0, 1, 1].into()).unwrap();
        assert!((expect.fidelity(&result.final_state).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn annihilated_second_branch() {
        let config = ProtocolConfig::default().with_theta2(PI / 2.0);
        assert!(matches!(run_postselected(&config), Err(Error::ZeroProbabilityBranch { atom: ATOM_2, .. })));
        assert!(joint_probability(&config).unwrap() < 1e-15);
    }

    #[test]
    fn truncation_below_two_photons_is_caught() {
        let config = ProtocolConfig { mode_levels: 2, ..ProtocolConfig::default() };
        assert!(matches!(run_postselected(&config), Err(Error::InvalidConfig(_))));
        // three levels suffice: nothing in |e, 2⟩ is ever pulsed
        let config = ProtocolConfig { mode_levels: 3, ..ProtocolConfig::default() };
        let small = run_postselected(&config).unwrap();
        let big = run_postselected(&ProtocolConfig::default()).unwrap();
        assert!((small.fidelity - big.fidelity).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_match_at_defaults() {
        let config = ProtocolConfig::with_channel(ChannelParams::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap());
        let result = run_postselected(&config).unwrap();
        for step in Step::ALL {
            let oracle = closed_form_state(step, &config).unwrap();
            let d = phase_aligned_distance(&oracle, &result.snapshots[&step], 1e-6).unwrap();
            assert!(d < 1e-12, "{step} differs by {d}");
        }
    }

    #[test]
    fn closed_form_coefficients() {
        let config = ProtocolConfig::default();
        let after_a = closed_form_state(Step::AfterA, &config).unwrap();
        let mags: Vec<f64> = after_a.terms(1e-12).iter().map(|(_, a)| a.norm()).collect();
        assert_eq!(mags.len(), 2);
        assert!(mags.iter().all(|m| (m - FRAC_1_SQRT_2).abs() < 1e-15));

        let collapse_e1 = closed_form_state(Step::CollapseE1, &config).unwrap();
        let t = DEFAULT_THETA2;
        let expect = [(SQRT_2 * t).cos().abs(), t.sin().abs(), t.cos().abs()];
        let get = |m: [usize; 4]| collapse_e1.amplitude(&[m[0], m[1], m[2], m[3], 1, 1].into()).unwrap().norm();
        let got = [get([0, 0, 1, 0]), get([1, 0, 0, 0]), get([0, 0, 0, 1])];
        for (g, e) in got.iter().zip(expect) {
            assert!((g / got[1] - e / expect[1]).abs() < 1e-12);
        }
        assert!((expect[0] - 0.0789).abs() < 1e-4 && (expect[1] - FRAC_1_SQRT_2).abs() < 1e-12);

        let collapse_e2 = closed_form_state(Step::CollapseE2, &config).unwrap();
        let (a, b) = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let (ct, st, c2) = (t.cos(), t.sin(), (SQRT_2 * t).cos());
        let n2 = 1.0 / (ct * ct * (a * a + b * b) * (c2 * c2 + st * st)).sqrt();
        let lead = collapse_e2.amplitude(&[1, 0, 0, 0, 1, 1].into()).unwrap();
        assert!((lead - c(-n2 * a * st * ct, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn closed_forms_need_quarter_pulse() {
        let config = ProtocolConfig { theta1: 0.5, ..ProtocolConfig::default() };
        assert!(closed_form_state(Step::AfterA, &config).is_ok());
        assert!(matches!(closed_form_state(Step::AfterC, &config), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn sampled_failure_on_first_atom() {
        // atom 1 is found in |g⟩ about three times in four at the defaults
        let config = ProtocolConfig::default();
        let mut found = false;
        for trial in 0..64 {
            let mut rng = crate::measurement::trial_rng(3, trial);
            if let SampledRun::Failure(f) = run_sampled(&config, &mut rng).unwrap() {
                if f.outcomes.0 == Outcome::G {
                    assert!(f.path_probability > 0.0 && f.path_probability <= 1.0);
                    found = true;
                    break;
                }
            }
        }
        assert!(found);
    }
}
