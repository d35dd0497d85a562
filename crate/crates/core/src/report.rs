//! Serializable reports and the built-in self-check suite.
//!
//! JSON output goes through [`to_canonical_json`]: keys are emitted in
//! sorted order and floats in their shortest round-trip form, so parsing a
//! report and printing it again reproduces the same bytes.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{fidelity_formula, MonteCarloSummary, SweepRow};
use crate::dynamics::{jc_apply, jc_hamiltonian, propagator_expm, DenseMatrix, JcPulse};
use crate::error::Result;
use crate::fock::{make_space, phase_aligned_distance, StateVector, Subsystem};
use crate::protocol::{closed_form_state, run_postselected, ChannelParams, ProtocolConfig, ProtocolResult, Step};

/// Fidelity printed for the tuned second pulse.
pub const QUOTED_FIDELITY: f64 = 0.97;
/// Success probability quoted for the scheme.
pub const QUOTED_SUCCESS_PROBABILITY: f64 = 0.25;
/// Printed value of `cos(√2·7π/4)`.
pub const QUOTED_COS_SQRT2_THETA2: f64 = 0.078;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub mode_levels: usize,
    pub leak_tol: f64,
    pub seed: u64,
}

impl From<&ProtocolConfig> for ConfigEcho {
    fn from(c: &ProtocolConfig) -> Self {
        let (a, b) = (c.channel.alpha(), c.channel.beta());
        Self {
            alpha_re: a.re,
            alpha_im: a.im,
            beta_re: b.re,
            beta_im: b.im,
            theta1: c.theta1,
            theta2: c.theta2,
            mode_levels: c.mode_levels,
            leak_tol: c.leak_tol,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub p_e1: f64,
    pub p_e2_given_e1: f64,
    pub p_joint: f64,
    pub fidelity_sim: f64,
    pub fidelity_formula: f64,
    pub cos_sqrt2_theta2: f64,
    pub discrepancy_notes: Vec<String>,
}

fn quoted_gaps(fidelity: f64, p_joint: f64, theta2: f64) -> Vec<String> {
    let cos_term = (SQRT_2 * theta2).cos();
    vec![
        format!(
            "quoted fidelity ≃ {QUOTED_FIDELITY} at theta2 = 7π/4; computed {fidelity:.17} at theta2 = {theta2:.17} (gap {:+.3e})",
            fidelity - QUOTED_FIDELITY
        ),
        format!(
            "quoted success probability {QUOTED_SUCCESS_PROBABILITY} (one of four Bell outcomes); computed joint e,e detection probability {p_joint:.17} (gap {:+.3e})",
            p_joint - QUOTED_SUCCESS_PROBABILITY
        ),
        format!(
            "quoted cos(√2·theta2) ≃ {QUOTED_COS_SQRT2_THETA2} at theta2 = 7π/4; computed {cos_term:.17} at theta2 = {theta2:.17}"
        ),
    ]
}

/// Run the post-selected protocol and collect the report fields.
pub fn run_report(config: &ProtocolConfig) -> Result<RunReport> {
    let result = run_postselected(config)?;
    report_from(config, &result)
}

fn report_from(config: &ProtocolConfig, result: &ProtocolResult) -> Result<RunReport> {
    Ok(RunReport {
        config: config.into(),
        p_e1: result.p_e1,
        p_e2_given_e1: result.p_e2_given_e1,
        p_joint: result.p_joint,
        fidelity_sim: result.fidelity,
        fidelity_formula: fidelity_formula(config.theta2)?,
        cos_sqrt2_theta2: (SQRT_2 * config.theta2).cos(),
        discrepancy_notes: quoted_gaps(result.fidelity, result.p_joint, config.theta2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: ConfigEcho,
    pub summary: MonteCarloSummary,
    /// Deterministic `P(e₁, e₂)` the empirical rate estimates.
    pub p_joint: f64,
    pub deviation_in_stderr: Option<f64>,
    pub discrepancy_notes: Vec<String>,
}

pub fn monte_carlo_report(config: &ProtocolConfig, summary: MonteCarloSummary) -> Result<MonteCarloReport> {
    let result = run_postselected(config)?;
    let deviation = (summary.stderr > 0.0).then(|| (summary.success_rate - result.p_joint) / summary.stderr);
    let mut notes = quoted_gaps(result.fidelity, result.p_joint, config.theta2);
    notes.push(format!(
        "empirical success rate {:.17} over {} trials vs quoted {QUOTED_SUCCESS_PROBABILITY}",
        summary.success_rate, summary.trials
    ));
    Ok(MonteCarloReport {
        config: config.into(),
        summary,
        p_joint: result.p_joint,
        deviation_in_stderr: deviation,
        discrepancy_notes: notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub min: f64,
    pub max: f64,
    pub theta2_star: f64,
    pub fidelity_star: f64,
    pub cos_sqrt2_theta2_star: f64,
    pub fidelity_at_default: f64,
}

/// Serialize with sorted keys and shortest round-trip floats.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let tree = serde_json::to_value(value)?;
    serde_json::to_string_pretty(&tree)
}

// Same float text as the JSON output: shortest round-trip, exponent when tiny.
fn csv_float(x: f64) -> String {
    serde_json::Value::from(x).to_string()
}

/// CSV with columns `theta2, cos_sqrt2_theta2, fidelity_formula,
/// fidelity_sim, p_joint`; rows without a simulated fidelity carry `NA`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta2", "cos_sqrt2_theta2", "fidelity_formula", "fidelity_sim", "p_joint"])?;
    for r in rows {
        w.write_record([
            csv_float(r.theta2),
            csv_float(r.cos_sqrt2_theta2),
            csv_float(r.fidelity_formula),
            r.fidelity_sim.map_or_else(|| "NA".to_string(), csv_float),
            csv_float(r.p_joint),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_report_text(r: &RunReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "alpha = {}{:+}i, beta = {}{:+}i, theta1 = {}, theta2 = {}, levels = {}\n",
        r.config.alpha_re,
        r.config.alpha_im,
        r.config.beta_re,
        r.config.beta_im,
        r.config.theta1,
        r.config.theta2,
        r.config.mode_levels
    ));
    s.push_str(&format!("p(e1)            {:.17}\n", r.p_e1));
    s.push_str(&format!("p(e2 | e1)       {:.17}\n", r.p_e2_given_e1));
    s.push_str(&format!("p(e1, e2)        {:.17}\n", r.p_joint));
    s.push_str(&format!("fidelity (sim)   {:.17}\n", r.fidelity_sim));
    s.push_str(&format!("fidelity (form)  {:.17}\n", r.fidelity_formula));
    s.push_str(&format!("cos(√2 theta2)   {:.17}\n", r.cos_sqrt2_theta2));
    for n in &r.discrepancy_notes {
        s.push_str(&format!("note: {n}\n"));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

fn random_channel(rng: &mut ChaCha20Rng) -> ChannelParams {
    let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let b = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    ChannelParams::renormalized(a, b).expect("random draw is nonzero")
}

/// Draws of `(α, β, θ₂)` with `θ₂ ∈ [0, 2π]` kept away from `cos θ₂ = 0`,
/// where the second detection branch vanishes.
pub fn random_configs(seed: u64, count: usize) -> Vec<ProtocolConfig> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let theta2 = rng.gen_range(0.0..2.0 * PI);
        let channel = random_channel(&mut rng);
        if theta2.cos().abs() < 1e-3 {
            continue;
        }
        out.push(ProtocolConfig { channel, theta2, ..ProtocolConfig::default() });
    }
    out
}

/// Worst snapshot-vs-closed-form distance over `configs`.
pub fn snapshot_check(configs: &[ProtocolConfig]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for config in configs {
        let result = run_postselected(config)?;
        for step in Step::ALL {
            let oracle = closed_form_state(step, config)?;
            let d = phase_aligned_distance(&oracle, &result.snapshots[&step], 1e-6)?;
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Worst `|F_sim - F_formula|` over `configs`.
pub fn fidelity_identity_check(configs: &[ProtocolConfig]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for config in configs {
        let f = run_postselected(config)?.fidelity;
        worst = worst.max((f - fidelity_formula(config.theta2)?).abs());
    }
    Ok(worst)
}

/// Worst amplitude gap between [`jc_apply`] and the matrix exponential,
/// and worst `‖U†U − I‖_max`, over `pairs` random states and pulses.
pub fn expm_check(seed: u64, pairs: usize) -> Result<(f64, f64)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let spaces = [
        make_space(vec![Subsystem::mode("m", 4), Subsystem::atom("q")])?,
        make_space(vec![Subsystem::mode("A", 4), Subsystem::mode("B", 3), Subsystem::atom("q")])?,
        make_space(vec![Subsystem::atom("q"), Subsystem::mode("m", 5), Subsystem::atom("r")])?,
        make_space(vec![Subsystem::mode("A", 3), Subsystem::atom("q"), Subsystem::mode("B", 4), Subsystem::atom("r")])?,
    ];
    let (mut worst_amp, mut worst_unitary): (f64, f64) = (0.0, 0.0);
    for k in 0..pairs {
        let space = &spaces[k % spaces.len()];
        let atoms: Vec<usize> = (0..space.len()).filter(|&i| space.subsystems()[i].is_atom()).collect();
        let modes: Vec<usize> = (0..space.len()).filter(|&i| space.subsystems()[i].is_mode()).collect();
        let atom = atoms[rng.gen_range(0..atoms.len())];
        let mode = modes[rng.gen_range(0..modes.len())];
        let theta = rng.gen_range(0.0..4.0 * PI);
        let amps =
            (0..space.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let psi = StateVector::from_amplitudes(space.clone(), amps)?.normalize()?;

        let u = propagator_expm(&jc_hamiltonian(space, atom, mode)?, theta, 1e-12)?;
        let by_matrix = u.apply(&psi)?;
        let closed = jc_apply(&psi, &JcPulse::new(atom, mode, theta), f64::INFINITY)?;
        worst_amp = worst_amp.max(by_matrix.max_abs_diff(&closed)?);
        worst_unitary = worst_unitary.max((&u.adjoint() * &u).max_abs_diff(&DenseMatrix::identity(space.dim())));
    }
    Ok((worst_amp, worst_unitary))
}

/// Snapshot agreement, expm-oracle agreement and the fidelity identity.
pub fn run_checks() -> Vec<CheckResult> {
    let configs = random_configs(2024, 50);
    let mut out = Vec::new();
    out.push(match snapshot_check(&configs) {
        Ok(d) => CheckResult::new(
            "snapshots_vs_closed_forms",
            d <= 1e-10,
            format!("max amplitude error {d:.3e} over {} draws", configs.len()),
        ),
        Err(e) => CheckResult::new("snapshots_vs_closed_forms", false, e.to_string()),
    });
    out.push(match expm_check(7, 40) {
        Ok((amp, unit)) => CheckResult::new(
            "closed_form_vs_expm",
            amp <= 1e-10 && unit <= 1e-12,
            format!("max amplitude error {amp:.3e}, unitarity error {unit:.3e}"),
        ),
        Err(e) => CheckResult::new("closed_form_vs_expm", false, e.to_string()),
    });
    out.push(match fidelity_identity_check(&configs) {
        Ok(d) => CheckResult::new("fidelity_identity", d <= 1e-10, format!("max |F_sim - F_formula| {d:.3e}")),
        Err(e) => CheckResult::new("fidelity_identity", false, e.to_string()),
    });
    out
}
