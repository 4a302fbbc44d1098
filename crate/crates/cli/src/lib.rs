//! Command implementations behind the `syk-otoc` binary.
//!
//! Every subcommand reads one TOML config, runs the corresponding library
//! call and writes its artifacts into the output directory, finishing with
//! a manifest that lists each file with its SHA-256.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use syk_otoc::ensemble::{
    depth_sweep, run_ensemble, write_depth_rows_csv, write_depth_summary_csv, write_realizations_csv,
    write_series_csv, ExperimentConfig, RunMode, CODE_VERSION,
};
use syk_otoc::hamiltonian::build;
use syk_otoc::rng::{GAUSSIAN_METHOD, GENERATOR};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "SYK_OTOC_OUT_DIR";

/// Shots used when `--mode shots` is given and the config leaves `shots = 0`.
pub const DEFAULT_SHOTS: usize = 4096;

#[derive(Debug, Parser)]
#[command(name = "syk-otoc", version, about = "OTOC simulations of full and sparse bosonic SYK models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one Hamiltonian JSON file per realization.
    Generate(CommonArgs),
    /// Run the OTOC ensemble and write the time-series CSVs.
    Otoc(CommonArgs),
    /// Route interferometric circuits and write two-qubit depth tables.
    Depth(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML experiment config; omitted keys take the defaults listed below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: `out`, or $SYK_OTOC_OUT_DIR].
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides the config's `mode`.
    #[arg(long, value_parser = ["ideal", "shots", "noisy"])]
    pub mode: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Overrides the config's `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Suppress progress messages on stderr.
    #[arg(long)]
    pub quiet: bool,
}

/// Failure classes mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Resource(_) => "resource-ceiling",
            CliError::Runtime(_) => "runtime",
        }
    }

    /// Single-line JSON object written to stderr on failure.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<syk_otoc::Error> for CliError {
    fn from(e: syk_otoc::Error) -> Self {
        use syk_otoc::Error as E;
        match e {
            E::ResourceCeiling(_) => CliError::Resource(e.to_string()),
            E::Io(_) | E::Json(_) | E::Csv(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Defaults block appended to `--help`.
pub fn defaults_help() -> String {
    let cfg = ExperimentConfig::default();
    let body = toml::to_string(&cfg).unwrap_or_default();
    format!(
        "Config defaults (TOML):\n\n{body}\nOutput directory: `out` unless --out-dir or ${OUT_DIR_ENV} is set.\n\
         --mode shots with shots = 0 uses {DEFAULT_SHOTS} shots.\n\
         Exit codes: 0 success, 2 config error, 3 resource ceiling, 4 runtime failure."
    )
}

/// Parses a TOML config; a missing path yields the defaults.
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Config with command-line overrides applied.
pub fn resolve_config(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(mode) = &args.mode {
        cfg.mode = mode.parse::<RunMode>()?;
        if cfg.mode == RunMode::Shots && cfg.shots == 0 {
            cfg.shots = DEFAULT_SHOTS;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `--out-dir`, else the environment override, else `out`.
pub fn resolve_out_dir(args: &CommonArgs) -> PathBuf {
    args.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of one completed run; written last.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub generator: String,
    pub gaussian_method: String,
    pub config: ExperimentConfig,
    pub realization_seeds: Vec<u64>,
    pub files: Vec<FileEntry>,
}

/// Collects written files and their hashes.
struct Writer<'a> {
    root: &'a Path,
    files: Vec<FileEntry>,
    quiet: bool,
}

impl<'a> Writer<'a> {
    fn new(root: &'a Path, quiet: bool) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(runtime)?;
        Ok(Self {
            root,
            files: Vec::new(),
            quiet,
        })
    }

    fn write(&mut self, rel: &str, data: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(runtime)?;
        }
        fs::write(&path, data).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        if !self.quiet {
            eprintln!("wrote {}", path.display());
        }
        self.files.push(FileEntry {
            path: rel.to_string(),
            bytes: data.len(),
            sha256: hex::encode(Sha256::digest(data)),
        });
        Ok(())
    }

    fn finish(mut self, name: &str, command: &str, cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            code_version: CODE_VERSION.to_string(),
            generator: GENERATOR.to_string(),
            gaussian_method: GAUSSIAN_METHOD.to_string(),
            config: cfg.clone(),
            realization_seeds: cfg.realization_seeds(),
            files: std::mem::take(&mut self.files),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(runtime)? + "\n";
        let path = self.root.join(name);
        fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        if !self.quiet {
            eprintln!("wrote {}", path.display());
        }
        Ok(path)
    }
}

/// Writes `hamiltonians/realization_XXXX.json` for every realization.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path, quiet: bool) -> Result<PathBuf, CliError> {
    let mut w = Writer::new(out, quiet)?;
    for (i, seed) in cfg.realization_seeds().into_iter().enumerate() {
        let h = build(cfg.model, cfg.n, cfg.kappa, cfg.coupling, seed)?;
        let text = h.to_json()? + "\n";
        w.write(&format!("hamiltonians/realization_{i:04}.json"), text.as_bytes())?;
    }
    w.finish("generate.manifest.json", "generate", cfg)
}

/// Writes `otoc_<mode>.csv` and `otoc_<mode>_realizations.csv`.
pub fn cmd_otoc(cfg: &ExperimentConfig, out: &Path, quiet: bool) -> Result<PathBuf, CliError> {
    let series = run_ensemble(cfg)?;
    let mode = cfg.mode.as_str();
    let mut w = Writer::new(out, quiet)?;
    let mut buf = Vec::new();
    write_series_csv(&series, &mut buf)?;
    w.write(&format!("otoc_{mode}.csv"), &buf)?;
    let mut buf = Vec::new();
    write_realizations_csv(&series, &mut buf)?;
    w.write(&format!("otoc_{mode}_realizations.csv"), &buf)?;
    w.finish(&format!("otoc_{mode}.manifest.json"), "otoc", cfg)
}

/// Writes `depth_rows.csv` and `depth_summary.csv` over the configured sweep.
pub fn cmd_depth(cfg: &ExperimentConfig, out: &Path, quiet: bool) -> Result<PathBuf, CliError> {
    let table = depth_sweep(cfg)?;
    let mut w = Writer::new(out, quiet)?;
    let mut buf = Vec::new();
    write_depth_rows_csv(&table, &mut buf)?;
    w.write("depth_rows.csv", &buf)?;
    let mut buf = Vec::new();
    write_depth_summary_csv(&table, &mut buf)?;
    w.write("depth_summary.csv", &buf)?;
    w.finish("depth.manifest.json", "depth", cfg)
}

/// Dispatches a parsed command line; returns the manifest path.
pub fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let (args, f): (&CommonArgs, fn(&ExperimentConfig, &Path, bool) -> Result<PathBuf, CliError>) =
        match &cli.command {
            Command::Generate(a) => (a, cmd_generate),
            Command::Otoc(a) => (a, cmd_otoc),
            Command::Depth(a) => (a, cmd_depth),
        };
    let cfg = resolve_config(args)?;
    let out = resolve_out_dir(args);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(runtime)?;
    pool.install(|| f(&cfg, &out, args.quiet))
}
