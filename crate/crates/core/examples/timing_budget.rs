//! Interaction time for each pulse at a 50 kHz vacuum Rabi frequency.

use std::f64::consts::PI;

use cavity_teleport::analysis::{timing_budget, DEFAULT_DECOHERENCE_BOUND};
use cavity_teleport::protocol::{DEFAULT_THETA1, DEFAULT_THETA2};

fn main() -> cavity_teleport::Result<()> {
    let g = 2.0 * PI * 5e4;
    let budget = timing_budget(g, DEFAULT_THETA1, DEFAULT_THETA2, 0.0, DEFAULT_DECOHERENCE_BOUND)?;
    for p in &budget.pulses {
        println!("{:<8} {:>8.3} µs", p.pulse, p.seconds * 1e6);
    }
    println!(
        "total    {:>8.3} µs (bound {} ms, within: {})",
        budget.total_time * 1e6,
        budget.decoherence_bound * 1e3,
        budget.within_bound
    );
    Ok(())
}
