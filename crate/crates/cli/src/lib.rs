//! Command-line driver: configuration, experiment runs, sweeps and manifests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use config::{parse_config, parse_raw, set_key, ConfigError, Experiment, RunConfig};
use experiments::{run_experiment, RunError};
use output::{write_artifacts, write_hashed, Cell, RunManifest, Summary, Table};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "SLEF_LAB_OUT";

pub const VERSION: &str = concat!("slef-lab ", env!("CARGO_PKG_VERSION"));

/// `--out`, then `SLEF_LAB_OUT`, then `output.dir`, then `slef-out`.
pub fn resolve_out_dir(cli: Option<&Path>, cfg: Option<&RunConfig>) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var(OUT_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    cfg.and_then(|c| c.output.as_ref())
        .and_then(|o| o.dir.clone())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("slef-out"))
}

/// Result of one run: the manifest (already written) and the summary.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub summary: Option<Summary>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

fn failed_manifest(experiment: &str, echo: String, err: &RunError) -> RunManifest {
    RunManifest {
        experiment: experiment.to_string(),
        version: VERSION.to_string(),
        config_echo: echo,
        status: "error".into(),
        exit_code: err.exit_code(),
        error: Some(err.to_string()),
        ..Default::default()
    }
}

/// Runs one validated configuration into `dir` and writes the manifest.
pub fn run(cfg: &RunConfig, dir: &Path) -> RunOutcome {
    let mut echo_cfg = cfg.clone();
    echo_cfg.sweep = None;
    let echo = toml::to_string(&echo_cfg).unwrap_or_default();
    let name = cfg.experiment.map(Experiment::name).unwrap_or("unknown");
    let start = Instant::now();
    let result = (|| -> Result<_, RunError> {
        cfg.validate()?;
        let art = run_experiment(cfg)?;
        let mut files = write_artifacts(dir, &art, cfg.precision())?;
        files.push(write_hashed(dir, "config.toml", echo.as_bytes())?);
        Ok((art, files))
    })();
    let manifest = match &result {
        Ok((art, files)) => {
            let mut timings = art.timings.clone();
            timings.push(("total".into(), start.elapsed().as_secs_f64()));
            RunManifest {
                experiment: name.to_string(),
                version: VERSION.to_string(),
                config_echo: echo,
                status: "ok".into(),
                exit_code: 0,
                error: None,
                warnings: art.warnings.clone(),
                timings,
                files: files.clone(),
            }
        }
        Err(e) => {
            let mut m = failed_manifest(name, echo, e);
            m.timings.push(("total".into(), start.elapsed().as_secs_f64()));
            m
        }
    };
    if let Err(e) = manifest.write(dir) {
        eprintln!("could not write the manifest in {}: {e}", dir.display());
    }
    RunOutcome {
        summary: result.ok().map(|(a, _)| a.summary),
        manifest,
    }
}

/// Parses `text` for the given subcommand; a present `experiment` key must
/// agree with it.
pub fn config_for(text: &str, experiment: Experiment) -> Result<RunConfig, ConfigError> {
    let mut cfg = parse_raw(text)?;
    match cfg.experiment {
        Some(e) if e != experiment => {
            return Err(ConfigError::Range {
                key: "experiment".into(),
                message: format!("config is for `{}` but the subcommand is `{}`", e.name(), experiment.name()),
            })
        }
        _ => cfg.experiment = Some(experiment),
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes a manifest for a configuration that could not be parsed.
pub fn reject(dir: &Path, experiment: &str, text: &str, err: ConfigError) -> RunOutcome {
    let manifest = failed_manifest(experiment, text.to_string(), &RunError::Config(err));
    if let Err(e) = manifest.write(dir) {
        eprintln!("could not write the manifest in {}: {e}", dir.display());
    }
    RunOutcome { manifest, summary: None }
}

/// One row of a sweep.
#[derive(Debug)]
pub struct SweepRow {
    pub value: toml::Value,
    pub exit_code: i32,
    pub error: Option<String>,
    pub summary: Option<Summary>,
}

/// Runs the template once per value of `[sweep]`, each in `dir/run_NNN`,
/// with up to `jobs` runs in parallel, and aggregates `sweep.csv`.
pub fn sweep(text: &str, dir: &Path, jobs: usize) -> Result<(RunManifest, Vec<SweepRow>), ConfigError> {
    let template = parse_config(text)?;
    template.experiment()?;
    let axis = template.sweep.clone().ok_or_else(|| ConfigError::Range {
        key: "sweep".into(),
        message: "a sweep needs a [sweep] block".into(),
    })?;
    let mut table: toml::Table = text.parse().map_err(|_| ConfigError::Range {
        key: "sweep".into(),
        message: "template is not a table".into(),
    })?;
    table.remove("sweep");
    if let Some(out) = table.get_mut("output").and_then(|o| o.as_table_mut()) {
        out.remove("dir");
    }
    let start = Instant::now();
    let n = axis.values.len();
    let rows: Vec<Mutex<Option<SweepRow>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= n {
            break;
        }
        let value = axis.values[i].clone();
        let sub = dir.join(format!("run_{i:03}"));
        let mut t = table.clone();
        let row = match set_key(&mut t, &axis.key, value.clone())
            .and_then(|_| toml::to_string(&t).map_err(|e| ConfigError::Range {
                key: axis.key.clone(),
                message: e.to_string(),
            }))
            .and_then(|s| parse_config(&s))
        {
            Ok(cfg) => {
                let out = run(&cfg, &sub);
                SweepRow {
                    value,
                    exit_code: out.exit_code(),
                    error: out.manifest.error.clone(),
                    summary: out.summary,
                }
            }
            Err(e) => {
                let out = reject(&sub, "sweep", "", e.clone());
                SweepRow {
                    value,
                    exit_code: out.exit_code(),
                    error: Some(e.to_string()),
                    summary: None,
                }
            }
        };
        *rows[i].lock().unwrap() = Some(row);
    };
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, n) {
            s.spawn(worker);
        }
    });
    let rows: Vec<SweepRow> = rows.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect();

    let keys: Vec<String> = rows
        .iter()
        .find_map(|r| r.summary.as_ref())
        .map(|s| s.entries.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut header = vec!["index", "key", "value", "status", "error"];
    header.extend(keys.iter().map(String::as_str));
    let mut agg = Table::new("sweep", &header);
    for (i, r) in rows.iter().enumerate() {
        let mut row: Vec<Cell> = vec![
            i.into(),
            axis.key.as_str().into(),
            r.value.to_string().into(),
            if r.exit_code == 0 { "ok" } else { "error" }.into(),
            r.error.clone().unwrap_or_default().into(),
        ];
        for k in &keys {
            row.push(
                r.summary
                    .as_ref()
                    .and_then(|s| s.get(k).cloned())
                    .unwrap_or(Cell::Text(String::new())),
            );
        }
        agg.push(row);
    }
    let mut manifest = RunManifest {
        experiment: format!("sweep:{}", template.experiment()?.name()),
        version: VERSION.to_string(),
        config_echo: text.to_string(),
        status: if rows.iter().all(|r| r.exit_code == 0) { "ok" } else { "partial" }.into(),
        exit_code: 0,
        ..Default::default()
    };
    let precision = template.precision();
    match agg
        .to_csv(precision)
        .and_then(|b| write_hashed_in(dir, "sweep.csv", &b))
    {
        Ok(f) => manifest.files.push(f),
        Err(e) => {
            manifest.status = "error".into();
            manifest.exit_code = 1;
            manifest.error = Some(e.to_string());
        }
    }
    for (i, r) in rows.iter().enumerate() {
        if let Some(e) = &r.error {
            manifest.warnings.push(format!("run {i} failed: {e}"));
        }
    }
    manifest.timings.push(("total".into(), start.elapsed().as_secs_f64()));
    if let Err(e) = manifest.write(dir) {
        eprintln!("could not write the manifest in {}: {e}", dir.display());
    }
    Ok((manifest, rows))
}

fn write_hashed_in(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<(String, String)> {
    std::fs::create_dir_all(dir)?;
    write_hashed(dir, name, bytes)
}
