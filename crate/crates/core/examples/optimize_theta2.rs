//! Search for the second-pulse angle that maximises the fidelity near 7π/4.

use std::f64::consts::{PI, SQRT_2};

use cavity_teleport::analysis::{fidelity_formula, joint_probability_formula, optimize_theta2};
use cavity_teleport::protocol::{ChannelParams, DEFAULT_THETA2};

fn main() -> cavity_teleport::Result<()> {
    let channel = ChannelParams::default();
    for (lo, hi) in [(5.2, 5.8), (0.5, 1.5), (0.0, 2.0 * PI)] {
        let (theta, f) = optimize_theta2(lo, hi, &channel)?;
        println!(
            "[{lo:.3}, {hi:.3}]  θ₂* = {theta:.10}  F = {f:.12}  p(e1,e2) = {:.6}",
            joint_probability_formula(theta)
        );
    }
    let unit = PI / (2.0 * SQRT_2);
    println!("π/(2√2) = {unit:.10}  F = {:.12}", fidelity_formula(unit)?);
    println!("7π/4    = {DEFAULT_THETA2:.10}  F = {:.12}", fidelity_formula(DEFAULT_THETA2)?);
    Ok(())
}
