use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cognopipe::acoustic::FeatureSetId;
use cognopipe::classifiers::ClassifierKind;
use cognopipe::corpus::{load_manifest, summarize_with, validate_manifest, Task};
use cognopipe::evaluation::{read_report, render_summary_table, write_report};
use cognopipe::synth::{generate, SynthSpec};
use cognopipe::{pipeline, RunConfig};

const DEFAULT_OUT: &str = "cognopipe-out";
const REPORT_FILE: &str = "report.txt";
const STATS_FILE: &str = "corpus_stats.txt";

/// Speech-based cognitive screening pipeline: corpus checks, feature
/// extraction, cross-validated classification and reporting.
#[derive(Parser)]
#[command(name = "cognopipe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a manifest and list every problem found.
    Validate(Common),
    /// Print demographic and recording statistics of a corpus.
    Summarize(Common),
    /// Write per-(task, feature set) feature matrices.
    Extract(Common),
    /// Run the cross-validated experiment grid and write a report.
    TrainEval(Common),
    /// Print the summary table of an existing report.
    Report {
        /// Report file, or a directory holding report.txt.
        path: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic corpus from a TOML spec.
    Synth {
        /// Spec file; defaults are used for missing keys.
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Default)]
struct Common {
    /// Manifest directory or recordings.csv path.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of cross-validation folds.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated tasks.
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<Task>>,
    /// Comma-separated feature sets.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<FeatureSetId>>,
    /// Comma-separated classifiers.
    #[arg(long, value_delimiter = ',')]
    classifiers: Option<Vec<ClassifierKind>>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.manifest {
            cfg.manifest = Some(m.clone());
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(t) = &self.tasks {
            cfg.tasks = t.clone();
        }
        if let Some(f) = &self.features {
            cfg.feature_sets = f.clone();
        }
        if let Some(c) = &self.classifiers {
            cfg.classifiers = c.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// A scratch directory next to the output directory. Files are moved into
/// place by `commit`; dropping the stage removes everything written so far.
struct Stage {
    dir: tempfile::TempDir,
    out: PathBuf,
}

impl Stage {
    fn new(out: &Path) -> Result<Self> {
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).with_context(|| format!("cli::stage: {}", parent.display()))?;
        let dir = tempfile::Builder::new()
            .prefix(".cognopipe-stage-")
            .tempdir_in(&parent)
            .with_context(|| format!("cli::stage: {}", parent.display()))?;
        Ok(Stage {
            dir,
            out: out.to_path_buf(),
        })
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    /// Moves every top-level entry of the stage into the output directory,
    /// replacing entries of the same name.
    fn commit(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.out).with_context(|| format!("cli::commit: {}", self.out.display()))?;
        let mut entries: Vec<_> = fs::read_dir(self.path())?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.file_name());
        let mut moved = Vec::new();
        for e in entries {
            let target = self.out.join(e.file_name());
            if target.is_dir() {
                fs::remove_dir_all(&target)
            } else if target.exists() {
                fs::remove_file(&target)
            } else {
                Ok(())
            }
            .with_context(|| format!("cli::commit: {}", target.display()))?;
            fs::rename(e.path(), &target).with_context(|| format!("cli::commit: {}", target.display()))?;
            moved.push(target);
        }
        Ok(moved)
    }
}

fn cmd_validate(common: &Common) -> Result<bool> {
    let cfg = common.config()?;
    let (corpus, diags) = validate_manifest(cfg.manifest()?);
    for d in &diags {
        println!("{d}");
    }
    if let Some(c) = &corpus {
        log::info!("{} subjects, {} recordings", c.subjects().len(), c.recordings().len());
    }
    println!("{} errors", diags.len());
    Ok(diags.is_empty())
}

fn cmd_summarize(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let corpus = load_manifest(cfg.manifest()?)?;
    let stats = pipeline::with_workers(cfg.workers, || summarize_with(&corpus, &cfg.vad))??;
    let table = stats.render();
    let out = out_dir(&cfg);
    let stage = Stage::new(&out)?;
    fs::write(stage.path().join(STATS_FILE), &table)?;
    stage.commit()?;
    print!("{table}");
    Ok(())
}

fn cmd_extract(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let corpus = load_manifest(cfg.manifest()?)?;
    let out = out_dir(&cfg);
    let stage = Stage::new(&out)?;
    let written = pipeline::extract(&corpus, &cfg, stage.path())?;
    log::info!("extracted {} files", written.len());
    for p in stage.commit()? {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_train_eval(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let corpus = load_manifest(cfg.manifest()?)?;
    log::info!(
        "{} subjects, {} feature sets x {} classifiers x {} tasks, k={}",
        corpus.subjects().len(),
        cfg.feature_sets.len(),
        cfg.classifiers.len(),
        cfg.tasks.len(),
        cfg.k
    );
    let report = pipeline::train_eval(&corpus, &cfg)?;
    let out = out_dir(&cfg);
    let stage = Stage::new(&out)?;
    write_report(&report, &stage.path().join(REPORT_FILE))?;
    stage.commit()?;
    print!("{}", render_summary_table(&report));
    println!("report: {}", out.join(REPORT_FILE).display());
    Ok(())
}

fn cmd_report(path: Option<&Path>, common: &Common) -> Result<()> {
    let path = match path {
        Some(p) => p.to_path_buf(),
        None => common.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    };
    let file = if path.is_dir() { path.join(REPORT_FILE) } else { path };
    let report = read_report(&file)?;
    print!("{}", render_summary_table(&report));
    Ok(())
}

fn cmd_synth(spec_path: Option<&Path>, common: &Common) -> Result<()> {
    let mut spec = match spec_path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("synth::read_spec: {}", p.display()))?;
            SynthSpec::from_toml(&text)?
        }
        None => SynthSpec::default(),
    };
    if let Some(s) = common.seed {
        spec.seed = s;
    }
    if let Some(t) = &common.tasks {
        spec.tasks = t.clone();
    }
    spec.validate()?;
    let Some(out) = &common.out else {
        bail!("synth::generate: out: --out is required");
    };
    let stage = Stage::new(out)?;
    generate(&spec, stage.path())?;
    stage.commit()?;
    println!("{}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Validate(c) => return cmd_validate(c),
        Command::Summarize(c) => cmd_summarize(c)?,
        Command::Extract(c) => cmd_extract(c)?,
        Command::TrainEval(c) => cmd_train_eval(c)?,
        Command::Report { path, common } => cmd_report(path.as_deref(), common)?,
        Command::Synth { spec, common } => cmd_synth(spec.as_deref(), common)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COGNOPIPE_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
