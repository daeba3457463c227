//! Instanton reconstruction and verification on flat hyperkähler space.
//!
//! Exit codes: 0 all suites pass, 1 suite failures, 2 configuration errors,
//! 3 numerical failures.

mod commands;
mod config;
mod report;
mod threads;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::Outcome;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "harmonikos", version, about = "Reconstructs Yang–Mills instantons on flat hyperkähler space from harmonic-space prepotentials and verifies the framework's identities numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigFlags {
    /// JSON run-config file; flags below override its fields.
    #[arg(long)]
    config: Option<String>,
    /// Algebra: u1, sl2 or file:<path>.
    #[arg(long)]
    algebra: Option<String>,
    /// Prepotential expression, or @<file>.
    #[arg(long)]
    prepotential: Option<String>,
    /// Box bounds "lo,hi" (centered).
    #[arg(long = "box")]
    box_bounds: Option<String>,
    /// Grid points per axis.
    #[arg(long)]
    nx: Option<usize>,
    /// Haar grid: euler:<n> | euler:<n1>x<n2>x<n3> | mc:<n>:<seed>.
    #[arg(long)]
    haar: Option<String>,
    /// Integrator tolerances "abs,rel".
    #[arg(long = "ode-tol")]
    ode_tol: Option<String>,
    /// Finite-difference spacing.
    #[arg(long = "fd-h")]
    fd_h: Option<f64>,
    /// Tolerance profile: default | loose.
    #[arg(long = "tol-profile")]
    tol_profile: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Residual sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Realization: ode | poly | auto.
    #[arg(long)]
    realization: Option<String>,
    /// Output report path (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct the gauge data of a prepotential and run the residual suites.
    Reconstruct(ConfigFlags),
    /// Re-run the suites against a stored report, with tamper detection.
    Verify {
        /// Stored reconstruction report.
        #[arg(long = "gauge-data")]
        gauge_data: String,
        /// all | gauge | lift | leznov | asd | normalized | bianchi.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long = "tol-profile")]
        tol_profile: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Norm profiles and bound-ratio observations.
    Norms(ConfigFlags),
    /// Curvature-convergence run over a prepotential family.
    Compactness {
        #[command(flatten)]
        flags: ConfigFlags,
        /// Family file: {"base", "scales", "limit", optional gates}.
        #[arg(long)]
        family: String,
    },
    /// Closed-form pipeline standalone, for cross-validation.
    Oracle(ConfigFlags),
}

fn apply_flags(mut cfg: RunConfig, f: &ConfigFlags) -> Result<RunConfig> {
    if let Some(a) = &f.algebra {
        cfg.algebra = a.clone();
    }
    if let Some(p) = &f.prepotential {
        cfg.prepotential = p.clone();
    }
    if let Some(b) = &f.box_bounds {
        let parts: Vec<f64> = b
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| anyhow::anyhow!("bad --box: {e}"))?;
        if parts.len() != 2 {
            anyhow::bail!("--box wants lo,hi");
        }
        cfg.box_bounds = [parts[0], parts[1]];
    }
    if let Some(n) = f.nx {
        cfg.nx = n;
    }
    if let Some(h) = &f.haar {
        cfg.haar_grid = parse_haar(h)?;
    }
    if let Some(t) = &f.ode_tol {
        let parts: Vec<f64> = t
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| anyhow::anyhow!("bad --ode-tol: {e}"))?;
        if parts.len() != 2 {
            anyhow::bail!("--ode-tol wants abs,rel");
        }
        cfg.ode_tol = [parts[0], parts[1]];
    }
    if let Some(h) = f.fd_h {
        cfg.fd_h = h;
    }
    if let Some(t) = &f.tol_profile {
        cfg.tol_profile = t.clone();
    }
    if let Some(s) = f.seed {
        cfg.seed = s;
    }
    if let Some(s) = f.samples {
        cfg.samples = s;
    }
    if let Some(r) = &f.realization {
        cfg.realization = r.clone();
    }
    Ok(cfg)
}

fn parse_haar(spec: &str) -> Result<harmonikos_core::harmonics::GridSpec> {
    use harmonikos_core::harmonics::GridSpec;
    if let Some(rest) = spec.strip_prefix("euler:") {
        let parts: Vec<usize> = rest
            .split('x')
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| anyhow::anyhow!("bad --haar: {e}"))?;
        return Ok(match parts.as_slice() {
            [n] => GridSpec::Euler { n: [*n; 3] },
            [a, b, c] => GridSpec::Euler { n: [*a, *b, *c] },
            _ => anyhow::bail!("--haar euler wants one or three sizes"),
        });
    }
    if let Some(rest) = spec.strip_prefix("mc:") {
        let parts: Vec<&str> = rest.split(':').collect();
        return match parts.as_slice() {
            [n] => Ok(GridSpec::Mc { n: n.parse()?, seed: 7 }),
            [n, seed] => Ok(GridSpec::Mc { n: n.parse()?, seed: seed.parse()? }),
            _ => anyhow::bail!("--haar mc wants mc:<n>[:<seed>]"),
        };
    }
    anyhow::bail!("unknown --haar spec `{spec}`")
}

fn load_config(f: &ConfigFlags) -> Result<RunConfig> {
    let base = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("reading config {path}: {e}"))?;
            serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("parsing config {path}: {e}"))?
        }
        None => RunConfig::default(),
    };
    apply_flags(base, f)
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::SuiteFailure) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Configuration problems are distinguished from numerical ones by
            // the error chain: anything raised before reconstruction starts
            // counts as configuration.
            if e.to_string().contains("invalid prepotential")
                || e.to_string().contains("config")
                || e.to_string().contains("unknown")
                || e.to_string().contains("parsing")
                || e.to_string().contains("reading")
                || e.to_string().contains("must")
            {
                2
            } else {
                3
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Reconstruct(f) => {
            let cfg = load_config(&f)?;
            commands::cmd_reconstruct(cfg, f.out.as_deref())
        }
        Command::Verify { gauge_data, suite, tol_profile, out } => {
            commands::cmd_verify(&gauge_data, &suite, tol_profile.as_deref(), out.as_deref())
        }
        Command::Norms(f) => {
            let cfg = load_config(&f)?;
            commands::cmd_norms(cfg, f.out.as_deref())
        }
        Command::Compactness { flags, family } => {
            let cfg = load_config(&flags)?;
            commands::cmd_compactness(cfg, &family, flags.out.as_deref())
        }
        Command::Oracle(f) => {
            let cfg = load_config(&f)?;
            commands::cmd_oracle(cfg, f.out.as_deref())
        }
    }
}
