//! Config-driven runner for the `anilap-core` experiments.
//!
//! A run reads one TOML config, executes the experiment it names and writes
//! `report.json`, one CSV per curve, `manifest.json` and `runtime.txt` into
//! the output directory.

pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anilap_core::harness::{ExperimentReport, Verdict};

pub use config::ExperimentConfig;
pub use error::CliError;

/// Conventions recorded in every manifest.
const CONVENTIONS: &[&str] = &[
    "energy forms count ordered pairs",
    "H norm is l2 plus inner plus twice the cross term",
    "rectangles are open; grids are cell-centred",
    "1-d symbol m(xi) = C(alpha)|xi|^alpha, C(alpha) = alpha(2-alpha) int_0^inf (1-cos t) t^(-1-alpha) dt",
    "solutions satisfy E(u, phi) = (f, phi) for node indicators phi, i.e. -2 L u = f",
    "stable paths: axis k moves by (C(alpha_k) dt)^(1/alpha_k) S per step, S standard symmetric stable",
    "floats are written with 17 significant digits",
];

/// Options that override the config file.
#[derive(Debug, Default, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub config_file: Option<PathBuf>,
}

/// Outcome of a run: the finalized report and where its files went.
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.verdict.exit_code()
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::parse(&text)
}

fn output_dir(cfg: Option<&ExperimentConfig>, kind: &str, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| Path::new("reports").join(kind))
}

/// Runs an already parsed config and writes its report.
pub fn run_config(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let name = cfg.experiment.name();
    let start = Instant::now();
    let mut report = match experiments::run(&cfg) {
        Ok(r) => r,
        Err(e) => ExperimentReport::error(name, CliError::from(e).to_string()),
    };
    report.param("alpha", format!("{:?}", cfg.alpha));
    report.param("seed", cfg.seed);
    report.param("q", cfg.q());
    report.param("kernel", format!("{:?}", cfg.kernel.variant).to_lowercase());
    report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    let report = report.finalize();
    let dir = output_dir(Some(&cfg), name, opts);
    let mut manifest = manifest(name, cfg.seed, cfg.to_toml(), opts);
    let files = emit::emit_report(&report, &mut manifest, &dir)?;
    Ok(RunOutcome { report, dir, files })
}

fn manifest<'a>(name: &'a str, seed: u64, config: String, opts: &RunOptions) -> emit::Manifest<'a> {
    emit::Manifest {
        tool: "anilap",
        version: env!("CARGO_PKG_VERSION"),
        core_version: anilap_core::VERSION,
        experiment: name,
        seed,
        config_file: opts.config_file.as_ref().map(|p| p.display().to_string()),
        config,
        conventions: CONVENTIONS.to_vec(),
        files: Vec::new(),
    }
}

/// Loads and runs a config file. Parse and validation failures still
/// produce an error report when an output directory is known.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let mut opts = opts.clone();
    opts.config_file = Some(path.to_path_buf());
    match load_config(path) {
        Ok(cfg) => run_config(cfg, &opts),
        Err(e @ (CliError::Parse(_) | CliError::Invalid { .. })) => {
            let Some(dir) = opts.out.clone() else {
                return Err(e);
            };
            let report = ExperimentReport::error("invalid-config", e.to_string()).finalize();
            let text = std::fs::read_to_string(path).unwrap_or_default();
            let mut manifest = manifest("invalid-config", opts.seed.unwrap_or(0), text, &opts);
            let files = emit::emit_report(&report, &mut manifest, &dir)?;
            debug_assert_eq!(report.verdict, Verdict::Error);
            Ok(RunOutcome { report, dir, files })
        }
        Err(e) => Err(e),
    }
}
