//! Scans over the second pulse angle, fidelity optimisation, Monte Carlo
//! estimation of the success rate, and the protocol's time budget.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{trial_rng, Outcome};
use crate::protocol::{joint_probability, run_postselected, ChannelParams, ProtocolConfig, SamplingPlan, TrialOutcome};

/// Minimum number of grid points scanned by [`optimize_theta2`].
pub const OPTIMIZE_GRID_POINTS: usize = 1001;

/// Bracket width at which golden-section refinement stops.
pub const GOLDEN_TOL: f64 = 1e-9;

/// Default decoherence time scale for cavity and atomic qubits, in seconds.
pub const DEFAULT_DECOHERENCE_BOUND: f64 = 1e-2;

/// Post-selected fidelity `sin²θ₂ / (cos²(√2θ₂) + sin²θ₂)`.
pub fn fidelity_formula(theta2: f64) -> Result<f64> {
    let s = theta2.sin().powi(2);
    let denom = (SQRT_2 * theta2).cos().powi(2) + s;
    if !(denom > 1e-15) {
        return Err(Error::DegenerateAngle(theta2));
    }
    Ok(s / denom)
}

/// `P(e₁, e₂) = ¼ cos²θ₂ (cos²(√2θ₂) + sin²θ₂)` for `theta1 = π/4`.
pub fn joint_probability_formula(theta2: f64) -> f64 {
    0.25 * theta2.cos().powi(2) * ((SQRT_2 * theta2).cos().powi(2) + theta2.sin().powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta2: f64,
    pub fidelity_formula: f64,
    /// `None` where detecting atom 2 in `|e⟩` is impossible.
    pub fidelity_sim: Option<f64>,
    pub p_joint: f64,
    pub cos_sqrt2_theta2: f64,
}

fn check_range(min: f64, max: f64) -> Result<()> {
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidRange(format!("[{min}, {max}] is not finite")));
    }
    if min > max {
        return Err(Error::InvalidRange(format!("min {min} exceeds max {max}")));
    }
    Ok(())
}

/// Simulated post-selected fidelity, `None` on an annihilated branch.
fn simulated_fidelity(config: &ProtocolConfig) -> Result<Option<f64>> {
    match run_postselected(config) {
        Ok(r) => Ok(Some(r.fidelity)),
        Err(Error::ZeroProbabilityBranch { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn sweep_row(base: &ProtocolConfig, theta2: f64) -> Result<SweepRow> {
    let config = base.with_theta2(theta2);
    Ok(SweepRow {
        theta2,
        fidelity_formula: fidelity_formula(theta2)?,
        fidelity_sim: simulated_fidelity(&config)?,
        p_joint: joint_probability(&config)?,
        cos_sqrt2_theta2: (SQRT_2 * theta2).cos(),
    })
}

/// Evaluate `steps` uniformly spaced angles in `[min, max]`, endpoints included.
pub fn sweep(min: f64, max: f64, steps: usize, params: &ChannelParams) -> Result<Vec<SweepRow>> {
    sweep_config(min, max, steps, &ProtocolConfig::with_channel(*params))
}

/// [`sweep`] with every other setting taken from `base`.
pub fn sweep_config(min: f64, max: f64, steps: usize, base: &ProtocolConfig) -> Result<Vec<SweepRow>> {
    check_range(min, max)?;
    if steps < 2 {
        return Err(Error::InvalidRange(format!("need at least 2 steps, got {steps}")));
    }
    grid(min, max, steps).into_par_iter().map(|t| sweep_row(base, t)).collect()
}

fn grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    let h = (max - min) / (steps - 1) as f64;
    (0..steps).map(|k| if k == steps - 1 { max } else { min + h * k as f64 }).collect()
}

/// Maximise a unimodal function on `[lo, hi]` by golden-section search.
/// Returns the abscissa of the best point evaluated and its value.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Angle in `[min, max]` maximising the simulated post-selected fidelity:
/// a grid scan followed by golden-section refinement around the best point.
pub fn optimize_theta2(min: f64, max: f64, params: &ChannelParams) -> Result<(f64, f64)> {
    optimize_theta2_config(min, max, &ProtocolConfig::with_channel(*params))
}

pub fn optimize_theta2_config(min: f64, max: f64, base: &ProtocolConfig) -> Result<(f64, f64)> {
    check_range(min, max)?;
    let eval = |t: f64| simulated_fidelity(&base.with_theta2(t));
    if min == max {
        let f = eval(min)?.ok_or(Error::ZeroProbabilityBranch { atom: crate::protocol::ATOM_2, probability: 0.0 })?;
        return Ok((min, f));
    }

    let xs = grid(min, max, OPTIMIZE_GRID_POINTS);
    let values: Vec<Option<f64>> = xs.par_iter().map(|&t| eval(t)).collect::<Result<_>>()?;
    let (best, best_f) = values
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|f| (k, f)))
        .fold(None, |acc: Option<(usize, f64)>, (k, f)| match acc {
            Some((_, g)) if g >= f => acc,
            _ => Some((k, f)),
        })
        .ok_or(Error::ZeroProbabilityBranch { atom: crate::protocol::ATOM_2, probability: 0.0 })?;

    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(xs.len() - 1)];
    let mut failure = None;
    let (x, fx) = golden_section_max(
        |t| match eval(t) {
            Ok(Some(f)) => f,
            Ok(None) => f64::NEG_INFINITY,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        GOLDEN_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if fx >= best_f {
        Ok((x, fx))
    } else {
        Ok((xs[best], best_f))
    }
}

/// Outcome counts for runs that did not post-select, keyed `(atom1, atom2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub ge: u64,
    pub eg: u64,
    pub gg: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: u64,
    pub base_seed: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub stderr: f64,
    /// Mean fidelity over successful trials; `None` if none succeeded.
    pub fidelity_of_successes: Option<f64>,
    pub failures_by_outcome: FailureCounts,
}

/// Run `trials` sampled protocols, trial `i` drawing from
/// [`trial_rng(base_seed, i)`](trial_rng). Each trial draws exactly what
/// [`run_sampled`](crate::protocol::run_sampled) would with that generator.
/// Aggregation happens in trial order, so the summary does not depend on how
/// work is split across threads.
pub fn monte_carlo(config: &ProtocolConfig, trials: u64, base_seed: u64) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let plan = SamplingPlan::new(config)?;
    let runs: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| plan.sample_outcome(&mut trial_rng(base_seed, i)))
        .collect::<Result<_>>()?;

    let mut failures = FailureCounts::default();
    let mut successes = 0u64;
    let mut fidelity_sum = 0.0;
    for TrialOutcome { outcomes, fidelity, .. } in &runs {
        match outcomes {
            (Outcome::E, Outcome::E) => {
                successes += 1;
                fidelity_sum += fidelity.unwrap_or(0.0);
            }
            (Outcome::G, Outcome::E) => failures.ge += 1,
            (Outcome::E, Outcome::G) => failures.eg += 1,
            (Outcome::G, Outcome::G) => failures.gg += 1,
        }
    }
    let rate = successes as f64 / trials as f64;
    Ok(MonteCarloSummary {
        trials,
        base_seed,
        successes,
        success_rate: rate,
        stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
        fidelity_of_successes: (successes > 0).then(|| fidelity_sum / successes as f64),
        failures_by_outcome: failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseDuration {
    pub pulse: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingBudget {
    /// Coupling rate in s⁻¹.
    pub g: f64,
    pub pulses: Vec<PulseDuration>,
    pub transit_time: f64,
    pub total_time: f64,
    pub decoherence_bound: f64,
    pub within_bound: bool,
}

/// Wall-clock cost of the four pulses at coupling `g`, plus any transit time.
pub fn timing_budget(g: f64, theta1: f64, theta2: f64, transit_time: f64, bound: f64) -> Result<TimingBudget> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::NonPositiveCoupling(g));
    }
    for (name, v) in [("theta1", theta1), ("theta2", theta2), ("transit_time", transit_time), ("bound", bound)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    let pulses: Vec<PulseDuration> =
        [("atom1_A", theta1), ("atom1_C", theta2), ("atom2_B", theta1), ("atom2_D", theta2)]
            .into_iter()
            .map(|(pulse, theta)| PulseDuration { pulse: pulse.into(), seconds: theta / g })
            .collect();
    let total_time = (2.0 * theta1 + 2.0 * theta2) / g + transit_time;
    Ok(TimingBudget { g, pulses, transit_time, total_time, decoherence_bound: bound, within_bound: total_time < bound })
}
