//! Compare the closed-form pulse with a dense matrix exponential of the
//! Jaynes-Cummings Hamiltonian on a small two-mode space.

use std::f64::consts::PI;

use cavity_teleport::dynamics::{jc_apply, jc_hamiltonian, propagator_expm, DenseMatrix, JcPulse};
use cavity_teleport::fock::{make_space, StateVector, Subsystem};
use cavity_teleport::Complex64;

fn main() -> cavity_teleport::Result<()> {
    let space = make_space(vec![Subsystem::mode("A", 4), Subsystem::mode("B", 3), Subsystem::atom("q")])?;
    let h = jc_hamiltonian(&space, 2, 0)?;
    println!("space {space}, H has {} nonzero entries", h.nonzeros(0.0));

    // a fixed, fully populated input state
    let amps = (0..space.dim()).map(|i| Complex64::from_polar(1.0 + (i % 5) as f64, 0.37 * i as f64)).collect();
    let psi = StateVector::from_amplitudes(space.clone(), amps)?.normalize()?;

    for theta in [0.1, PI / 4.0, 1.0, PI, 3.0 * PI] {
        let u = propagator_expm(&h, theta, 1e-12)?;
        let closed = jc_apply(&psi, &JcPulse::new(2, 0, theta), f64::INFINITY)?;
        let gap = u.apply(&psi)?.max_abs_diff(&closed)?;
        let unitarity = (&u.adjoint() * &u).max_abs_diff(&DenseMatrix::identity(space.dim()));
        println!("θ = {theta:>8.5}  amplitude gap {gap:.2e}  ‖U†U − I‖ {unitarity:.2e}");
    }
    Ok(())
}
