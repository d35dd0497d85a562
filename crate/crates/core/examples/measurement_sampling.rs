//! Born-rule sampling of an atom after a partial pulse, with collapse.

use cavity_teleport::dynamics::{jc_apply, JcPulse};
use cavity_teleport::fock::{make_space, StateVector, Subsystem, EXCITED};
use cavity_teleport::measurement::{outcome_probabilities, project, sample, trial_rng, Outcome};

fn main() -> cavity_teleport::Result<()> {
    let space = make_space(vec![Subsystem::mode("m", 4), Subsystem::atom("q")])?;
    let start = StateVector::ket(space, &[0, EXCITED].into())?;
    let psi = jc_apply(&start, &JcPulse::new(1, 0, 0.6), 1e-12)?;
    let (p_g, p_e) = outcome_probabilities(&psi, 1)?;
    println!("state   {psi}");
    println!("p_g = {p_g:.6}, p_e = {p_e:.6}");

    for outcome in [Outcome::G, Outcome::E] {
        let (collapsed, p) = project(&psi, 1, outcome)?;
        println!("on {outcome} (p = {p:.6}): {collapsed}");
    }

    let n = 100_000;
    let mut rng = trial_rng(1, 0);
    let mut hits = 0;
    for _ in 0..n {
        if sample(&psi, 1, &mut rng)?.0.outcome == Outcome::E {
            hits += 1;
        }
    }
    let freq = hits as f64 / n as f64;
    let sigma = (p_e * (1.0 - p_e) / n as f64).sqrt();
    println!("sampled e in {hits}/{n} = {freq:.5} ({:+.2}σ)", (freq - p_e) / sigma);
    Ok(())
}
