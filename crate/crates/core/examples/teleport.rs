//! One post-selected pass of the protocol, printing every snapshot next to
//! its written-out closed form.
//!
//! ```bash
//! cargo run --example teleport -- 0.6 0.8 5.497787
//! ```
//!
//! Arguments are real `α`, real `β` (renormalized) and `θ₂`.

use cavity_teleport::fock::phase_aligned_distance;
use cavity_teleport::protocol::{
    closed_form_state, run_postselected, target_state, ChannelParams, ProtocolConfig, Step, DEFAULT_THETA2,
};
use cavity_teleport::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let alpha = args.first().copied().unwrap_or(0.6);
    let beta = args.get(1).copied().unwrap_or(0.8);
    let theta2 = args.get(2).copied().unwrap_or(DEFAULT_THETA2);

    let channel = ChannelParams::renormalized(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0))?;
    let config = ProtocolConfig::with_channel(channel).with_theta2(theta2);
    let run = run_postselected(&config)?;

    for step in Step::ALL {
        let snap = &run.snapshots[&step];
        let gap = phase_aligned_distance(&closed_form_state(step, &config)?, snap, 1e-6)?;
        println!("{step:<14} (closed form gap {gap:.1e})\n  {snap}");
    }
    println!("\ntarget         {}", target_state(&channel, run.final_state.space())?);
    println!("p(e1) = {:.6}  p(e2|e1) = {:.6}  p(e1,e2) = {:.6}", run.p_e1, run.p_e2_given_e1, run.p_joint);
    println!("fidelity = {:.8}", run.fidelity);
    Ok(())
}
