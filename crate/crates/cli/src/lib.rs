//! Runner behind the `clockinterf` binary: reads a JSON config, runs one
//! experiment mode, and writes data tables, `summary.json` and a
//! `manifest.json` with SHA-256 digests of everything written.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{parse_config, parse_config_str, Mode, RunConfig, Units};
pub use error::CliError;
pub use output::Format;

pub const TOOL_NAME: &str = "clockinterf";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub mode: Mode,
    pub seed: u64,
    pub format: Format,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    /// Effective configuration, including defaults and overrides.
    pub config: RunConfig,
    pub outputs: Vec<OutputDigest>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses `config_path` and runs `mode`.
pub fn run_from_file(mode: Mode, config_path: &Path, opts: &RunOptions) -> Result<RunManifest, CliError> {
    run(mode, parse_config(config_path)?, opts)
}

/// Runs `mode` and writes its artifacts. Returns the manifest written.
pub fn run(mode: Mode, mut config: RunConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let started_at = now();
    if let Some(m) = config.mode {
        if m != mode {
            return Err(CliError::Config(config::ConfigIssue {
                path: "mode".into(),
                message: format!("config is for mode {m} but {mode} was requested"),
            }));
        }
    }
    config.mode = Some(mode);
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let resolved = config.resolve()?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| {
            CliError::Config(config::ConfigIssue {
                path: "output_dir".into(),
                message: "no output directory; set `output_dir` or pass --out".into(),
            })
        })?;

    let outcome = match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| {
                    CliError::Config(config::ConfigIssue {
                        path: "--threads".into(),
                        message: e.to_string(),
                    })
                })?;
            pool.install(|| pipeline::dispatch(mode, &config, &resolved))
        }
        None => pipeline::dispatch(mode, &config, &resolved),
    }?;

    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let mut outputs = Vec::new();
    let mut emit = |name: String, bytes: Vec<u8>| -> Result<(), CliError> {
        output::write_file(&out_dir.join(&name), &bytes)?;
        outputs.push(OutputDigest {
            file: name,
            sha256: output::sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    };
    for table in &outcome.tables {
        emit(table.file_name(opts.format), table.encode(opts.format))?;
    }
    let summary = serde_json::json!({
        "tool": TOOL_NAME,
        "version": env!("CARGO_PKG_VERSION"),
        "mode": mode,
        "seed": config.seed,
        "results": outcome.summary,
    });
    let mut summary_bytes = serde_json::to_vec_pretty(&summary).expect("serializable");
    summary_bytes.push(b'\n');
    emit(SUMMARY_FILE.to_string(), summary_bytes)?;

    let manifest = RunManifest {
        tool: TOOL_NAME.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode,
        seed: config.seed,
        format: opts.format,
        threads: opts.threads,
        started_at,
        finished_at: now(),
        config,
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
    bytes.push(b'\n');
    output::write_file(&out_dir.join(MANIFEST_FILE), &bytes)?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let bytes = output::read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| {
        CliError::Config(config::ConfigIssue {
            path: String::new(),
            message: format!("{} is not a run manifest: {e}", path.display()),
        })
    })
}

/// Recomputes the digest of every output listed in the manifest, looking
/// for the files next to it.
pub fn verify_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let manifest = read_manifest(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    for entry in &manifest.outputs {
        match std::fs::read(dir.join(&entry.file)) {
            Ok(bytes) if output::sha256_hex(&bytes) == entry.sha256 => {}
            Ok(_) => bad.push(entry.file.clone()),
            Err(_) => bad.push(format!("{} (missing)", entry.file)),
        }
    }
    if bad.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::DigestMismatch { files: bad })
    }
}

/// Re-runs the configuration recorded in a manifest into `out`.
pub fn replay(manifest_path: &Path, out: PathBuf, threads: Option<usize>) -> Result<RunManifest, CliError> {
    let m = read_manifest(manifest_path)?;
    let opts = RunOptions {
        out: Some(out),
        seed: Some(m.seed),
        threads,
        format: m.format,
    };
    run(m.mode, m.config, &opts)
}
