//! Command-line front end.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use crate::commands::{self, RunSettings};
use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::output::{self, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    ParaproductNorm,
    LambdaNorm,
    Bmo,
    BmoSo,
    H1,
    DualityProbe,
    UmdEstimate,
    Rbound,
    LogdimScan,
    KernelCheck,
    T1Report,
    Selftest,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        commands::SUBCOMMANDS[self as usize]
    }
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "dyadlab",
    version,
    about = "Dyadic harmonic analysis experiments"
)]
pub struct Args {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default `out/<subcommand>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Symmetry tolerance for kernel checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Omit wall-clock times so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
    /// Built-in kernel name or kernel header path.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub quad_level: Option<usize>,
    /// Minimal far-field radius, in support sides.
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Named fixture (symbol or function).
    #[arg(long)]
    pub fixture: Option<String>,
}

impl Args {
    /// The configuration file (or defaults) with flag overrides applied.
    pub fn resolve(&self) -> LabResult<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let name = self.subcommand.name();
        match &c.operation {
            Some(op) if op != name => {
                return Err(LabError::Config(format!(
                    "config is for {op:?}, not {name:?}"
                )));
            }
            _ => c.operation = Some(name.to_string()),
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.tol {
            c.tolerances.tol = Some(t);
        }
        if let Some(k) = &self.kernel {
            c.params.kernel = Some(k.clone());
        }
        if let Some(q) = self.quad_level {
            c.params.quad_level = Some(q);
        }
        if let Some(r) = self.rmax {
            c.params.rmax = Some(r);
        }
        if let Some(f) = &self.fixture {
            c.params.fixture = Some(f.clone());
        }
        if let Some(o) = &self.out {
            c.output = Some(o.clone());
        }
        Ok(c)
    }
}

/// Run one subcommand, write its artifacts and manifest, print the summary
/// line and return the exit code.
pub fn run(args: &Args) -> i32 {
    let start = Instant::now();
    let sub = args.subcommand.name();
    let resolved = args.resolve();
    let (config, out_dir) = match &resolved {
        Ok(c) => (
            c.clone(),
            c.output
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(sub)),
        ),
        Err(_) => (
            ExperimentConfig::default(),
            args.out
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(sub)),
        ),
    };
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: {}", LabError::io(&out_dir, e));
        return 1;
    }
    let settings = RunSettings {
        threads: args.threads,
        timing: !args.no_timing,
    };
    let result = resolved.and_then(|c| commands::dispatch(sub, &c, &settings));
    let mut manifest = RunManifest {
        tool: output::TOOL.into(),
        version: output::VERSION.into(),
        subcommand: sub.into(),
        config_hash: config.hash(),
        seed: config.seed,
        wall_time_ms: None,
        exit_code: 0,
        checks: Vec::new(),
        artifacts: Vec::new(),
        error: None,
    };
    let code = match result {
        Ok(outcome) => match output::write_artifacts(&out_dir, sub, config.seed, &outcome) {
            Ok(paths) => {
                manifest.artifacts = paths;
                manifest.checks = outcome.checks.clone();
                let failed_suite = sub == "selftest" && outcome.checks.iter().any(|c| !c.pass);
                println!("{sub}: {}", outcome.summary);
                if let Some(h) = &outcome.hypothesis {
                    manifest.error = Some(h.clone());
                    eprintln!("hypothesis not satisfied: {h}");
                    2
                } else if failed_suite {
                    1
                } else {
                    0
                }
            }
            Err(e) => {
                manifest.error = Some(e.to_string());
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            manifest.error = Some(e.to_string());
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    manifest.exit_code = code;
    if settings.timing {
        manifest.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    manifest.artifacts.push(out_dir.join("manifest.json"));
    if let Err(e) = manifest.write(&out_dir) {
        eprintln!("error: {e}");
        return 1;
    }
    code
}
