//! The consistency suite behind `cavity-teleport check`.

use cavity_teleport::report::run_checks;

fn main() {
    let results = run_checks();
    for c in &results {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if results.iter().any(|c| !c.passed) {
        std::process::exit(1);
    }
}
