//! The `csaf` command line.
//!
//! Exit status is 0 on success, 2 when an input cannot be parsed or is
//! semantically invalid, and 1 when a valid input fails while running.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use csaf_core::environment::generate_terrain;
use csaf_core::registry::builtin_registry;
use csaf_core::report::{from_summaries, validate_report, Demographics, Hardware};
use csaf_core::runtime::{run_headless, ExperimentSet};
use csaf_core::susceptibility::{
    build_sensitivity_schedule, generate_rft_trials, score_rft, RftConfig, SensitivityConfig,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::artifacts::{self, read_summary};
use crate::bundled::{load_plan, load_scene};
use crate::experiment::{apply_preset_refs, run_set};
use crate::formats::{self, FormatError};
use crate::gateway::{self, ServeConfig};
use crate::report::{parse_report, render_report, Format, ReportFileError};
use crate::store::PresetStore;
use crate::LoadError;

pub const DATA_DIR_ENV: &str = "CSAF_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "csaf", version, about = "Cybersickness assessment engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, Args)]
pub struct DataDir {
    /// Root for presets and generated artifacts.
    #[arg(long, env = DATA_DIR_ENV, default_value = "csaf-data")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a session plan headless and write its logs.
    Run {
        /// Bundled plan name or plan file.
        #[arg(long)]
        plan: String,
        /// Overrides the plan's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to `<data-dir>/runs/<plan>-<seed>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the plan's scene.
        #[arg(long)]
        scene: Option<String>,
        /// Controller input trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// `<type>.<name>` preset from the store, applied before the run.
        #[arg(long = "preset")]
        presets: Vec<String>,
        #[command(flatten)]
        data: DataDir,
    },
    /// Generate a rod-and-frame trial list, scoring it when responses are given.
    Rft {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV with `trial` and `response_deg` columns.
        #[arg(long)]
        responses: Option<PathBuf>,
    },
    /// Expand a sensitivity test configuration into its stimulus schedule.
    Sensitivity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Validate, render or assemble study reports.
    Report {
        #[command(subcommand)]
        action: ReportCmd,
    },
    /// Serve the setup gateway over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Bundled scene name or scene file.
        #[arg(long, default_value = "forest-simple")]
        scene: String,
        #[arg(long, default_value_t = 20.0)]
        telemetry_hz: f64,
        /// Session seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        #[command(flatten)]
        data: DataDir,
    },
    /// Write a scene's terrain heightmap as CSV.
    Terrain {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        data: DataDir,
    },
    /// Run an experiment set from its start node.
    Set {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        data: DataDir,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// Check a report file; violations go to stderr.
    Validate { file: PathBuf },
    /// Render a valid report.
    Render {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Document)]
        format: Format,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a report from run directories.
    FromRuns {
        /// JSON with `demographics` and `hardware` objects.
        #[arg(long)]
        meta: PathBuf,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0:#}")]
    Parse(anyhow::Error),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(..) => CliError::Runtime(e.into()),
            LoadError::Parse(..) | LoadError::Invalid(_) => CliError::Parse(e.into()),
        }
    }
}

fn parse_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Parse(e.into())
}

fn runtime_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

/// IO failures are runtime failures; anything else in a file is a parse failure.
fn format_err(path: &Path, e: FormatError) -> CliError {
    let io = matches!(e, FormatError::Io(_));
    let e = anyhow::Error::from(e).context(path.display().to_string());
    if io {
        CliError::Runtime(e)
    } else {
        CliError::Parse(e)
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path)
        .with_context(|| path.display().to_string())
        .map_err(runtime_err)?;
    serde_json::from_slice(&bytes)
        .with_context(|| path.display().to_string())
        .map_err(parse_err)
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| path.display().to_string())
        .map_err(runtime_err)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| dir.display().to_string())
            .map_err(runtime_err)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| path.display().to_string())
        .map_err(runtime_err)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(bytes).and_then(|()| w.flush())
        }
        None => std::io::stdout().write_all(bytes),
    }
    .map_err(runtime_err)
}

/// Parses arguments and runs; clap's own usage errors exit with status 2.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Run {
            plan,
            seed,
            out,
            scene,
            trace,
            presets,
            data,
        } => run(&plan, seed, out, scene, trace, &presets, &data.data_dir),
        Cmd::Rft {
            seed,
            out,
            config,
            responses,
        } => rft(seed, &out, config.as_deref(), responses.as_deref()),
        Cmd::Sensitivity { config, out, seed } => sensitivity(&config, &out, seed),
        Cmd::Report { action } => report(action),
        Cmd::Serve {
            port,
            host,
            scene,
            telemetry_hz,
            time_scale,
            data,
        } => serve(
            &host,
            port,
            ServeConfig {
                scene,
                data_dir: data.data_dir,
                telemetry_hz,
                time_scale,
            },
        ),
        Cmd::Terrain { scene, out, data } => terrain(&scene, &out, &data.data_dir),
        Cmd::Set {
            set,
            seed,
            out,
            data,
        } => set_cmd(&set, seed, &out, &data.data_dir),
    }
}

fn run(
    plan_ref: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
    scene_ref: Option<String>,
    trace: Option<PathBuf>,
    presets: &[String],
    data_dir: &Path,
) -> Result<(), CliError> {
    let registry = builtin_registry();
    let (mut plan, plan_dir) = load_plan(plan_ref)?;
    if let Some(s) = seed {
        plan.seed = s;
    }
    let scene_ref = scene_ref.unwrap_or_else(|| plan.scene.clone());
    let mut scene = load_scene(
        &scene_ref,
        Some(plan_dir.as_deref().unwrap_or(data_dir)),
        &registry,
    )?;
    if !presets.is_empty() {
        let (library, warnings) = PresetStore::new(data_dir.join("presets"))
            .load(&registry)
            .map_err(parse_err)?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        for w in apply_preset_refs(&mut scene, presets, &library, &registry)? {
            eprintln!("warning: {w}");
        }
    }
    plan.scene = scene.name.clone();
    plan.validate().map_err(parse_err)?;
    let trace = match &trace {
        Some(p) => Some(formats::read_input_trace(open(p)?).map_err(|e| format_err(p, e))?),
        None => None,
    };
    let run = run_headless(&plan, &scene, trace.as_ref()).map_err(runtime_err)?;
    let dir = out.unwrap_or_else(|| {
        data_dir
            .join("runs")
            .join(format!("{}-{}", plan.name, plan.seed))
    });
    artifacts::write_run(&dir, &plan, &run)
        .with_context(|| dir.display().to_string())
        .map_err(runtime_err)?;
    let s = &run.summary;
    println!("wrote {}", dir.display());
    println!(
        "{} s, {} FMS prompts, {}/{} coins, mean FMS {}",
        s.duration_s,
        s.fms_prompts,
        s.coins_collected,
        s.coins_total,
        s.mean_fms().map_or("-".to_string(), |m| format!("{m:.2}"))
    );
    Ok(())
}

fn rft(
    seed: u64,
    out: &Path,
    config: Option<&Path>,
    responses: Option<&Path>,
) -> Result<(), CliError> {
    let cfg: RftConfig = match config {
        Some(p) => read_json(p)?,
        None => RftConfig::default(),
    };
    let trials = generate_rft_trials(&cfg, seed).map_err(parse_err)?;
    let answered = match responses {
        Some(p) => {
            let r = formats::read_rft_responses(open(p)?).map_err(|e| format_err(p, e))?;
            let scored = score_rft(&trials, &r).map_err(parse_err)?;
            Some((r, scored))
        }
        None => None,
    };
    let w = create(out)?;
    formats::write_rft_csv(
        w,
        &trials,
        answered.as_ref().map(|(r, s)| (r.as_slice(), s)),
    )
    .map_err(|e| format_err(out, e))?;
    println!("wrote {} trials to {}", trials.len(), out.display());
    if let Some((_, s)) = &answered {
        println!("mean absolute error {} deg, std {} deg", s.mean, s.std);
    }
    Ok(())
}

fn sensitivity(config: &Path, out: &Path, seed: u64) -> Result<(), CliError> {
    let cfg: SensitivityConfig = read_json(config)?;
    let schedule = build_sensitivity_schedule(&cfg, seed).map_err(parse_err)?;
    formats::write_schedule_csv(create(out)?, &schedule).map_err(|e| format_err(out, e))?;
    println!(
        "wrote {} segments ({} s) to {}",
        schedule.segments.len(),
        schedule.end(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ReportMeta {
    demographics: Demographics,
    hardware: Hardware,
}

fn report_file_err(path: &Path, e: ReportFileError) -> CliError {
    let parse = matches!(e, ReportFileError::Parse(_));
    let e = anyhow::Error::from(e).context(path.display().to_string());
    if parse {
        CliError::Parse(e)
    } else {
        CliError::Runtime(e)
    }
}

fn report(action: ReportCmd) -> Result<(), CliError> {
    let load = |file: &Path| -> Result<_, CliError> {
        let bytes = fs::read(file)
            .with_context(|| file.display().to_string())
            .map_err(runtime_err)?;
        parse_report(&bytes).map_err(|e| report_file_err(file, e))
    };
    match action {
        ReportCmd::Validate { file } => {
            let r = load(&file)?;
            let violations = validate_report(&r);
            if violations.is_empty() {
                println!("{}: valid", file.display());
                return Ok(());
            }
            for v in &violations {
                eprintln!("{}: {}: {}", file.display(), v.path, v.message);
            }
            Err(runtime_err(anyhow!("{} violation(s)", violations.len())))
        }
        ReportCmd::Render { file, format, out } => {
            let r = load(&file)?;
            let bytes = render_report(&r, format).map_err(|e| report_file_err(&file, e))?;
            emit(out.as_deref(), &bytes)
        }
        ReportCmd::FromRuns { meta, runs, out } => {
            let meta: ReportMeta = read_json(&meta)?;
            let summaries = runs
                .iter()
                .map(|d| read_summary(d))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<_> = summaries.iter().collect();
            let r = from_summaries(&refs, meta.demographics, meta.hardware).map_err(runtime_err)?;
            let bytes = render_report(&r, Format::Machine).map_err(runtime_err)?;
            emit(out.as_deref(), &bytes)
        }
    }
}

fn serve(host: &str, port: u16, cfg: ServeConfig) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(runtime_err)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("bind {host}:{port}"))
            .map_err(runtime_err)?;
        let addr = listener.local_addr().map_err(runtime_err)?;
        println!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        gateway::serve(cfg, listener, shutdown)
            .await
            .map_err(runtime_err)
    })
}

fn terrain(scene_ref: &str, out: &Path, data_dir: &Path) -> Result<(), CliError> {
    let scene = load_scene(scene_ref, Some(data_dir), &builtin_registry())?;
    let spec = scene
        .terrain
        .as_ref()
        .ok_or_else(|| parse_err(anyhow!("scene `{}` has no terrain", scene.name)))?;
    let map = generate_terrain(spec).map_err(parse_err)?;
    formats::write_heightmap_csv(create(out)?, &map).map_err(|e| format_err(out, e))?;
    println!(
        "wrote {}x{} heightmap to {}",
        map.width,
        map.depth,
        out.display()
    );
    Ok(())
}

fn set_cmd(path: &Path, seed: u64, out: &Path, data_dir: &Path) -> Result<(), CliError> {
    let registry = builtin_registry();
    let set: ExperimentSet = read_json(path)?;
    set.validate().map_err(parse_err)?;
    let (library, _) = PresetStore::new(data_dir.join("presets"))
        .load(&registry)
        .map_err(parse_err)?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(data_dir);
    let runs = run_set(&set, Some(base), &registry, &library, seed).map_err(runtime_err)?;
    for (i, r) in runs.iter().enumerate() {
        let dir = out.join(format!("{:02}-{}", i + 1, r.node));
        artifacts::write_run(&dir, &r.plan, &r.artifacts)
            .with_context(|| dir.display().to_string())
            .map_err(runtime_err)?;
        println!("{} -> {}", r.node, dir.display());
    }
    Ok(())
}
