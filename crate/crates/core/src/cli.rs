//! Command-line front end. Exit codes: 0 on success, 1 when `check` finds a
//! failure (or output cannot be written), 2 on bad arguments.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::analysis::{monte_carlo, optimize_theta2_config, sweep_config, timing_budget, DEFAULT_DECOHERENCE_BOUND};
use crate::fock::DEFAULT_MODE_LEVELS;
use crate::protocol::{
    run_postselected, ChannelParams, ProtocolConfig, DEFAULT_LEAK_TOL, DEFAULT_THETA1, DEFAULT_THETA2,
};
use crate::report::{self, OptimizeReport};

#[derive(Debug, Parser)]
#[command(
    name = "cavity-teleport",
    version,
    about = "Simulate conditional teleportation of zero/one-photon entanglement between bimodal cavities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Post-selected run: probabilities, fidelity and quoted-value gaps
    Run(RunArgs),
    /// Scan theta2 over a uniform grid
    Sweep(SweepArgs),
    /// Estimate the success rate from sampled runs
    Montecarlo(MonteCarloArgs),
    /// Find the theta2 maximising the post-selected fidelity
    Optimize(OptimizeArgs),
    /// Wall-clock budget for a given coupling rate
    Timing(TimingArgs),
    /// Run the self-consistency suite
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = FRAC_1_SQRT_2, allow_negative_numbers = true)]
    pub alpha_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_im: f64,
    #[arg(long, default_value_t = FRAC_1_SQRT_2, allow_negative_numbers = true)]
    pub beta_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta_im: f64,
    /// Scale (alpha, beta) to unit norm instead of rejecting them
    #[arg(long)]
    pub renormalize: bool,
    #[arg(long, default_value_t = DEFAULT_THETA1, allow_negative_numbers = true)]
    pub theta1: f64,
    #[arg(long, default_value_t = DEFAULT_THETA2, allow_negative_numbers = true)]
    pub theta2: f64,
    /// Fock levels kept per mode
    #[arg(long, default_value_t = DEFAULT_MODE_LEVELS)]
    pub levels: usize,
    #[arg(long, default_value_t = DEFAULT_LEAK_TOL)]
    pub leak_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ProtocolArgs {
    pub fn config(&self) -> crate::Result<ProtocolConfig> {
        let alpha = Complex64::new(self.alpha_re, self.alpha_im);
        let beta = Complex64::new(self.beta_re, self.beta_im);
        let channel =
            if self.renormalize { ChannelParams::renormalized(alpha, beta)? } else { ChannelParams::new(alpha, beta)? };
        let config = ProtocolConfig {
            channel,
            theta1: self.theta1,
            theta2: self.theta2,
            mode_levels: self.levels,
            leak_tol: self.leak_tol,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub min: f64,
    #[arg(long, default_value_t = 2.0 * PI, allow_negative_numbers = true)]
    pub max: f64,
    #[arg(long, default_value_t = 65)]
    pub steps: usize,
    /// Also write the table as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub min: f64,
    #[arg(long, default_value_t = 2.0 * PI, allow_negative_numbers = true)]
    pub max: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    /// Atom-field coupling rate in s^-1
    #[arg(long)]
    pub g: f64,
    #[arg(long, default_value_t = 0.0)]
    pub transit: f64,
    #[arg(long, default_value_t = DEFAULT_DECOHERENCE_BOUND)]
    pub bound: f64,
    #[arg(long, default_value_t = DEFAULT_THETA1)]
    pub theta1: f64,
    #[arg(long, default_value_t = DEFAULT_THETA2)]
    pub theta2: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

enum Failure {
    Usage(String),
    Check,
    Io(String),
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn emit_json<T: serde::Serialize, W: Write>(value: &T, out: &mut W) -> Result<(), Failure> {
    writeln!(out, "{}", report::to_canonical_json(value)?)?;
    Ok(())
}

fn execute<W: Write>(command: Command, out: &mut W) -> Result<(), Failure> {
    match command {
        Command::Run(args) => {
            let config = args.protocol.config()?;
            let r = report::run_report(&config)?;
            match args.format {
                Format::Json => emit_json(&r, out)?,
                Format::Text => write!(out, "{}", report::run_report_text(&r))?,
            }
        }
        Command::Sweep(args) => {
            let config = args.protocol.config()?;
            let rows = sweep_config(args.min, args.max, args.steps, &config)?;
            if let Some(path) = &args.csv {
                let file = File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                report::write_sweep_csv(&rows, file).map_err(|e| Failure::Io(e.to_string()))?;
            }
            match args.format {
                Format::Json => emit_json(&rows, out)?,
                Format::Text => {
                    writeln!(
                        out,
                        "{:>22} {:>22} {:>22} {:>22} {:>22}",
                        "theta2", "cos_sqrt2_theta2", "fidelity_formula", "fidelity_sim", "p_joint"
                    )?;
                    for r in &rows {
                        let sim = r.fidelity_sim.map_or_else(|| "NA".to_string(), |f| format!("{f:.17}"));
                        writeln!(
                            out,
                            "{:>22.17} {:>22.17} {:>22.17} {:>22} {:>22.17}",
                            r.theta2, r.cos_sqrt2_theta2, r.fidelity_formula, sim, r.p_joint
                        )?;
                    }
                }
            }
        }
        Command::Montecarlo(args) => {
            let config = args.protocol.config()?;
            let summary = monte_carlo(&config, args.trials, config.seed)?;
            let r = report::monte_carlo_report(&config, summary)?;
            match args.format {
                Format::Json => emit_json(&r, out)?,
                Format::Text => {
                    let s = &r.summary;
                    writeln!(out, "trials           {}", s.trials)?;
                    writeln!(out, "successes        {}", s.successes)?;
                    writeln!(out, "success rate     {:.17} ± {:.17}", s.success_rate, s.stderr)?;
                    writeln!(out, "p(e1, e2) exact  {:.17}", r.p_joint)?;
                    match s.fidelity_of_successes {
                        Some(f) => writeln!(out, "fidelity         {f:.17}")?,
                        None => writeln!(out, "fidelity         NA")?,
                    }
                    let f = &s.failures_by_outcome;
                    writeln!(out, "failures         ge={} eg={} gg={}", f.ge, f.eg, f.gg)?;
                    for n in &r.discrepancy_notes {
                        writeln!(out, "note: {n}")?;
                    }
                }
            }
        }
        Command::Optimize(args) => {
            let config = args.protocol.config()?;
            let (theta2_star, fidelity_star) = optimize_theta2_config(args.min, args.max, &config)?;
            let at_default = run_postselected(&config.with_theta2(DEFAULT_THETA2))?.fidelity;
            let r = OptimizeReport {
                min: args.min,
                max: args.max,
                theta2_star,
                fidelity_star,
                cos_sqrt2_theta2_star: (std::f64::consts::SQRT_2 * theta2_star).cos(),
                fidelity_at_default: at_default,
            };
            match args.format {
                Format::Json => emit_json(&r, out)?,
                Format::Text => {
                    writeln!(out, "theta2*          {:.17}", r.theta2_star)?;
                    writeln!(out, "fidelity*        {:.17}", r.fidelity_star)?;
                    writeln!(out, "cos(√2 theta2*)  {:.17}", r.cos_sqrt2_theta2_star)?;
                    writeln!(out, "fidelity @ 7π/4  {:.17}", r.fidelity_at_default)?;
                }
            }
        }
        Command::Timing(args) => {
            let t = timing_budget(args.g, args.theta1, args.theta2, args.transit, args.bound)?;
            match args.format {
                Format::Json => emit_json(&t, out)?,
                Format::Text => {
                    for p in &t.pulses {
                        writeln!(out, "{:<10} {:e} s", p.pulse, p.seconds)?;
                    }
                    writeln!(out, "transit    {:e} s", t.transit_time)?;
                    writeln!(out, "total      {:e} s", t.total_time)?;
                    writeln!(
                        out,
                        "bound      {:e} s ({})",
                        t.decoherence_bound,
                        if t.within_bound { "within" } else { "exceeded" }
                    )?;
                }
            }
        }
        Command::Check => {
            let results = report::run_checks();
            for c in &results {
                writeln!(out, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            if results.iter().any(|c| !c.passed) {
                return Err(Failure::Check);
            }
        }
    }
    Ok(())
}

/// Parse `args` (including the program name) and run the command, writing
/// results to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    2
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Check) => 1,
        Err(Failure::Io(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("cavity-teleport").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn bad_arguments_exit_two() {
        assert_eq!(call(&["run", "--theta2", "abc"]).0, 2);
        assert_eq!(call(&["nonsense"]).0, 2);
        assert_eq!(call(&["timing"]).0, 2);
        assert_eq!(call(&["timing", "--g", "0"]).0, 2);
    }

    #[test]
    fn unnormalized_channel_needs_flag() {
        let (code, _, err) = call(&["run", "--alpha-re", "1", "--beta-re", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("not normalized"));
        let (code, out, _) = call(&["run", "--alpha-re", "1", "--beta-re", "1", "--renormalize"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["config"]["alpha_re"].as_f64().unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn null_branch_is_reported() {
        let (code, _, err) = call(&["run", "--theta2", "1.5707963267948966"]);
        assert_eq!(code, 2);
        assert!(err.contains("probability"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("montecarlo"));
    }
}
