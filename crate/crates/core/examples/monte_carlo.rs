//! Sampled runs of the protocol: empirical success rate against the exact
//! post-selection probability.
//!
//! ```bash
//! cargo run --release --example monte_carlo -- 100000 0
//! ```

use std::time::Instant;

use cavity_teleport::analysis::monte_carlo;
use cavity_teleport::protocol::{run_postselected, ProtocolConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trials: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let config = ProtocolConfig::default();
    let exact = run_postselected(&config)?.p_joint;

    let start = Instant::now();
    let mc = monte_carlo(&config, trials, seed)?;
    let elapsed = start.elapsed();

    println!("trials            {}", mc.trials);
    println!("successes         {}", mc.successes);
    println!("success rate      {:.6} ± {:.6}", mc.success_rate, mc.stderr);
    println!("exact p(e1, e2)   {exact:.6}");
    println!("deviation         {:+.2} stderr", (mc.success_rate - exact) / mc.stderr);
    if let Some(f) = mc.fidelity_of_successes {
        println!("fidelity          {f:.6}");
    }
    let fails = mc.failures_by_outcome;
    println!("failures          (g,e) {}  (e,g) {}  (g,g) {}", fails.ge, fails.eg, fails.gg);
    println!("wall time         {elapsed:.2?}");
    Ok(())
}
