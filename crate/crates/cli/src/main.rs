//! `dyad`: generate paths, run trials and experiments, analyse logs and
//! serve live sessions.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dyad_core::harness::log::read_summary;
use dyad_core::harness::rng::{split, SCRIPT_LABEL};
use dyad_core::harness::{build_report, run_trial_as, Condition, ExperimentConfig, Report, TrialMeta, TrialSummary};
use dyad_core::predict::{evaluate_suite, extract_window, reports_to_csv};
use dyad_core::{generate_script, PathScript, Subject, TrialLog};
use dyad_server::session::ServeOptions;

#[derive(Parser)]
#[command(name = "dyad", version, about = "1-DOF haptic co-manipulation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; unknown keys are errors.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a path script as JSON.
    GeneratePath {
        #[command(flatten)]
        common: Common,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one trial and write its log.
    RunTrial {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "HFOP")]
        condition: Condition,
        /// Existing path script to run instead of generating one.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        decimate: Option<usize>,
    },
    /// Run the full schedule and write the report.
    RunExperiment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        decimate: Option<usize>,
        /// Skip writing per-trial logs.
        #[arg(long)]
        no_logs: bool,
    },
    /// Rebuild the report from annotation sidecars.
    Analyze {
        /// Directory holding `*.choices.json` files.
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the predictor suite over trial logs.
    Predict {
        /// Directory holding `*.jsonl` logs.
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Only use trials of this condition.
        #[arg(long)]
        condition: Option<Condition>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the live session server.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory for session logs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::GeneratePath { common, out } => generate_path(&common, out.as_deref()),
        Command::RunTrial { common, condition, script, out, decimate } => {
            run_trial(&common, condition, script.as_deref(), &out, decimate)
        }
        Command::RunExperiment { common, out, decimate, no_logs } => {
            run_experiment(&common, out, decimate, no_logs)
        }
        Command::Analyze { dir, common, out } => analyze(&dir, &common, out.as_deref()),
        Command::Predict { dir, common, condition, out } => predict(&dir, &common, condition, out.as_deref()),
        Command::Serve { common, addr, out } => serve(&common, addr, out),
    }
}

fn script_for(cfg: &ExperimentConfig) -> Result<PathScript> {
    Ok(generate_script(split(cfg.seed, &[SCRIPT_LABEL]), &cfg.script)?)
}

fn generate_path(common: &Common, out: Option<&Path>) -> Result<()> {
    let cfg = common.load()?;
    let text = serde_json::to_string_pretty(&script_for(&cfg)?)?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run_trial(
    common: &Common,
    condition: Condition,
    script: Option<&Path>,
    out: &Path,
    decimate: Option<usize>,
) -> Result<()> {
    let cfg = common.load()?;
    let script = match script {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => script_for(&cfg)?,
    };
    let log = run_trial_as(condition, Subject::One, &script, &cfg.trial_config(), cfg.seed, TrialMeta::default())?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(format!("{}_{}.jsonl", condition.name().to_lowercase(), cfg.seed));
    log.write(&path, decimate.unwrap_or(cfg.output.decimate))?;
    println!("{}", path.display());
    for c in &log.choices {
        println!(
            "choice {:>2} {:<4} -> {:<9} rms {:6.2} mm",
            c.index,
            c.decision_type.name(),
            format!("{:?}", c.direction),
            c.rms_mm
        );
    }
    Ok(())
}

fn print_report(r: &Report) {
    println!("analysed trials: {}  rms_max {:.2} mm", r.trials, r.rms_max_mm);
    for (c, n) in &r.choice_counts {
        match r.mean_performance(*c) {
            Some(p) => println!("{:<12} choices {:>4}  mean performance {:.3}", c.name(), n, p),
            None => println!("{:<12} choices {:>4}", c.name(), n),
        }
    }
    if let Some(d) = r.dominance {
        println!("human-led fraction (HRP): {d:.3} over {} choices", r.dominance_n);
    }
}

fn run_experiment(common: &Common, out: Option<PathBuf>, decimate: Option<usize>, no_logs: bool) -> Result<()> {
    let mut cfg = common.load()?;
    if let Some(d) = decimate {
        cfg.output.decimate = d;
    }
    if out.is_some() {
        cfg.output.dir = out;
    }
    cfg.output.write_logs = cfg.output.dir.is_some() && !no_logs;
    cfg.validate()?;
    let result = dyad_core::run_experiment(&cfg)?;
    print_report(&result.report);
    if let Some(dir) = &cfg.output.dir {
        println!("report written to {}", dir.display());
    }
    Ok(())
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix)))
        .collect();
    out.sort();
    if out.is_empty() {
        bail!("no {suffix} files in {}", dir.display());
    }
    Ok(out)
}

fn analyze(dir: &Path, common: &Common, out: Option<&Path>) -> Result<()> {
    let cfg = common.load()?;
    let summaries: Vec<TrialSummary> = files_with_suffix(dir, ".choices.json")?
        .iter()
        .map(|p| read_summary(p))
        .collect::<dyad_core::Result<_>>()?;
    let report = build_report(&summaries, cfg.ttest)?;
    print_report(&report);
    let out = out.unwrap_or(dir);
    report.write(out)?;
    println!("report written to {}", out.display());
    Ok(())
}

fn predict(dir: &Path, common: &Common, condition: Option<Condition>, out: Option<&Path>) -> Result<()> {
    let cfg = common.load()?;
    let opts = cfg.predict;
    let mut windows = Vec::new();
    for path in files_with_suffix(dir, ".jsonl")? {
        let log = TrialLog::read(&path)?;
        if log.header.training || condition.is_some_and(|c| c != log.header.condition) {
            continue;
        }
        for choice in log.header.script.choices() {
            let w = extract_window(&log, choice, opts.t_start, opts.t_stop)
                .with_context(|| format!("{} choice {}", path.display(), choice.index))?;
            windows.push(w);
        }
    }
    if windows.is_empty() {
        bail!("no analysable choices in {}", dir.display());
    }
    let csv = reports_to_csv(&evaluate_suite(&windows, &opts)?);
    print!("{csv}");
    if let Some(p) = out {
        std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))?;
        let file = p.join("predictors.csv");
        std::fs::write(&file, &csv).with_context(|| format!("writing {}", file.display()))?;
    }
    Ok(())
}

fn serve(common: &Common, addr: SocketAddr, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = common.load()?;
    if out.is_some() {
        cfg.output.dir = out;
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(dyad_server::serve(cfg, ServeOptions::default(), addr))?;
    Ok(())
}
