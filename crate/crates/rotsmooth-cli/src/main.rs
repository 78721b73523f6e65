//! `rotsmooth`: runs one experiment from a JSON config and writes a manifest, a JSON report
//! and CSV tables into the output directory.
//!
//! Exit codes: 0 every check passed, 1 a numeric check failed or the computation did not
//! converge, 2 configuration or I/O error.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser};
use serde::{Deserialize, Serialize};

use commands::Check;
use config::{ConfigError, ExperimentConfig, SeedSource, Subcommand, SEED_ENV};

#[derive(Parser)]
#[command(name = "rotsmooth", version, about = "Rotational smoothing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Ellipticity, homogeneity and cancellation report for a symbol.
    /// CSV cancellation.csv: beta, re, im.
    CheckSymbol(Common),
    /// ⟨q⁻¹, φ⟩ and ⟨d, φ⟩ with dilation residuals.
    /// CSV dilations.csv: lambda, qinv_re, qinv_im, dalpha_re, dalpha_im, homogeneity_residual, ledger_residual.
    Pair(Common),
    /// H^{−δ}(S^{n−1}) norm of the restricted symbol.
    /// CSV convergence.csv: t, l, norm, norm_l, norm_half.
    RalphaNorm(Common),
    /// Both sides of the rotational smoothing identity.
    /// CSV convergence.csv as for ralpha-norm; radial.csv: r, norm.
    VerifyIdentity(Common),
    /// Haar sampler checks: uniformity, pushforward, invariance, norm transfer.
    /// CSV haar.csv: check, estimate, reference, std_error, z_score, p_value.
    HaarCheck(Common),
    /// Loss-of-derivatives growth of the sphere kernel integral.
    /// CSV loss.csv: n_scale, eps, kernel_integral, growth, ratio_to_growth, hs_ratio.
    CounterexampleLoss(Common),
    /// log N growth of rescaled mollified inverses for a symbol failing cancellation.
    /// CSV cancel.csv: n_scale, log_n, norm, q_norm, d_norm.
    CounterexampleCancel(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config, or a manifest from an earlier run; omitted means all defaults
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// output directory (overrides `output_dir`)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// worker threads (overrides `threads`)
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(&self) -> (Subcommand, &Common) {
        match self {
            Command::CheckSymbol(c) => (Subcommand::CheckSymbol, c),
            Command::Pair(c) => (Subcommand::Pair, c),
            Command::RalphaNorm(c) => (Subcommand::RalphaNorm, c),
            Command::VerifyIdentity(c) => (Subcommand::VerifyIdentity, c),
            Command::HaarCheck(c) => (Subcommand::HaarCheck, c),
            Command::CounterexampleLoss(c) => (Subcommand::CounterexampleLoss, c),
            Command::CounterexampleCancel(c) => (Subcommand::CounterexampleCancel, c),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    /// materialized; feed back through `--config` to rerun
    config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_source: Option<SeedSource>,
    wall_time_secs: f64,
    tolerances: BTreeMap<String, f64>,
    error_estimates: BTreeMap<String, f64>,
    checks: Vec<Check>,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    outputs: Vec<String>,
}

fn is_config_error(e: &rotsmooth::Error) -> bool {
    matches!(e, rotsmooth::Error::Config(_) | rotsmooth::Error::Domain(_) | rotsmooth::Error::Resolution { .. })
}

fn prepare(sub: Subcommand, common: &Common) -> Result<(ExperimentConfig, Option<SeedSource>), ConfigError> {
    let mut cfg = match &common.config {
        Some(p) => config::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &common.out {
        cfg.output_dir = Some(o.to_string_lossy().into_owned());
    }
    if let Some(t) = common.threads {
        cfg.threads = Some(t);
    }
    let env = std::env::var(SEED_ENV).ok();
    config::materialize(&cfg, sub, env.as_deref())
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), ConfigError> {
    fs::write(dir.join(name), text).map_err(|e| ConfigError(format!("cannot write {}: {e}", dir.join(name).display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, common) = cli.command.split();
    let (cfg, seed_source) = match prepare(sub, common) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads.unwrap()).build_global() {
        eprintln!("cannot start thread pool: {e}");
        return ExitCode::from(2);
    }
    let dir = PathBuf::from(cfg.output_dir.clone().unwrap());
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("cannot create {}: {e}", dir.display());
        return ExitCode::from(2);
    }

    let start = Instant::now();
    let result = commands::run(sub, &cfg);
    let wall = start.elapsed().as_secs_f64();

    let mut manifest = RunManifest {
        tool: "rotsmooth".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg,
        seed_source,
        wall_time_secs: wall,
        tolerances: BTreeMap::new(),
        error_estimates: BTreeMap::new(),
        checks: Vec::new(),
        passed: false,
        error: None,
        outputs: Vec::new(),
    };
    let code = match result {
        Ok(out) => {
            let mut files = vec![("report.json".to_string(), serde_json::to_string_pretty(&out.report).unwrap())];
            files.extend(out.tables);
            for (name, text) in &files {
                if let Err(e) = write(&dir, name, text) {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            }
            manifest.outputs = files.into_iter().map(|(n, _)| n).collect();
            manifest.tolerances = out.checks.iter().map(|c| (c.name.clone(), c.tolerance)).collect();
            manifest.error_estimates = out.error_estimates;
            manifest.passed = out.checks.iter().all(|c| c.pass);
            for c in &out.checks {
                println!("{} {}: {:.6e} {} {:.1e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.relation, c.tolerance);
            }
            manifest.checks = out.checks;
            if manifest.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{}: {e}", sub.name());
            manifest.error = Some(e.to_string());
            if is_config_error(&e) {
                2
            } else {
                1
            }
        }
    };
    let text = serde_json::to_string_pretty(&manifest).unwrap();
    if let Err(e) = write(&dir, "manifest.json", &text) {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    println!("manifest: {}", dir.join("manifest.json").display());
    ExitCode::from(code)
}
