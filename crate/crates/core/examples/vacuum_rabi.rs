//! Resonant atom-mode exchange starting from `|e, n⟩`.
//!
//! The excitation oscillates at `√(n+1)` times the vacuum rate, so
//! higher photon numbers flip the atom sooner.

use std::f64::consts::PI;

use cavity_teleport::dynamics::{jc_apply, JcPulse};
use cavity_teleport::fock::{make_space, StateVector, Subsystem, EXCITED};
use cavity_teleport::measurement::outcome_probabilities;

fn main() -> cavity_teleport::Result<()> {
    let space = make_space(vec![Subsystem::mode("m", 5), Subsystem::atom("q")])?;
    println!("{:>8} {:>10} {:>10} {:>10}", "θ/π", "P_e(n=0)", "P_e(n=1)", "P_e(n=2)");
    for k in 0..=16 {
        let theta = k as f64 * PI / 16.0;
        let mut row = format!("{:>8.4}", theta / PI);
        for n in 0..3 {
            let start = StateVector::ket(space.clone(), &[n, EXCITED].into())?;
            let evolved = jc_apply(&start, &JcPulse::new(1, 0, theta), 1e-12)?;
            let (_, p_e) = outcome_probabilities(&evolved, 1)?;
            row += &format!(" {p_e:>10.6}");
        }
        println!("{row}");
    }

    // a quarter pulse on the vacuum doublet splits the excitation evenly
    let start = StateVector::ket(space.clone(), &[0, EXCITED].into())?;
    println!("\nθ = π/4: {}", jc_apply(&start, &JcPulse::new(1, 0, PI / 4.0), 1e-12)?);
    Ok(())
}
