use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bfecc_core::analysis::{verify_expansions, EXPANSION_GAP_TOLERANCE};
use bfecc_core::study::{preset, run_study, StudyConfig, StudyReport, PRESETS};

/// Environment variable capping the number of worker threads.
const THREADS_ENV: &str = "BFECC_THREADS";

#[derive(Parser)]
#[command(name = "bfecc", version, about = "BFECC interpolation convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run convergence studies.
    #[command(subcommand)]
    Study(StudyCommand),
    /// Numerical checks of analytic error expansions.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Inspect built-in presets.
    #[command(subcommand)]
    Preset(PresetCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Run a study described by a TOML file.
    Run {
        config: PathBuf,
        /// Write `<name>.csv` and `<name>.txt` here instead of the configured paths.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run a built-in preset.
    Preset {
        name: String,
        /// Directory for `<name>.csv` and `<name>.txt`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Compare measured leading error coefficients with their closed forms.
    Expansions,
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List preset names.
    List,
    /// Write a preset as an equivalent TOML study file.
    Export { name: String, path: PathBuf },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("{THREADS_ENV} must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Runs a study, writes its outputs and prints the table and check results.
/// Returns whether every check passed.
fn execute(cfg: &StudyConfig, out_dir: Option<&Path>) -> Result<bool> {
    let report: StudyReport = run_study(cfg)?;
    let text = report.to_text();
    let csv = report.to_csv();
    let (csv_path, text_path) = match out_dir {
        Some(dir) => (
            Some(dir.join(format!("{}.csv", cfg.study.name))),
            Some(dir.join(format!("{}.txt", cfg.study.name))),
        ),
        None => (cfg.output.csv.clone(), cfg.output.text.clone()),
    };
    if let Some(p) = &csv_path {
        write_file(p, &csv)?;
    }
    if let Some(p) = &text_path {
        write_file(p, &text)?;
    }
    let mut out = io::stdout().lock();
    write!(out, "{text}")?;
    let mut ok = true;
    for o in report.check_outcomes() {
        writeln!(out, "{} {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.label, o.detail)?;
        ok &= o.passed;
    }
    Ok(ok)
}

fn verify() -> Result<bool> {
    let checks = verify_expansions()?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:>3} {:>5} {:>5} {:>12} {:>6} {:>5} {:>13} {:>13} {:>9}",
        "dim", "alpha", "beta", "function", "method", "term", "predicted", "estimated", "gap"
    )?;
    let mut ok = true;
    for c in &checks {
        let pass = c.passes(EXPANSION_GAP_TOLERANCE);
        ok &= pass;
        writeln!(
            out,
            "{:>3} {:>5} {:>5} {:>12} {:>6} {:>5} {:>13.6e} {:>13.6e} {:>9.3e} {}",
            c.dim,
            c.alpha,
            c.beta,
            c.function.id(),
            c.booster,
            c.term.name(),
            c.predicted,
            c.estimated,
            c.relative_gap,
            if pass { "PASS" } else { "FAIL" }
        )?;
    }
    writeln!(out, "gap tolerance {EXPANSION_GAP_TOLERANCE}")?;
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Study(StudyCommand::Run { config, out_dir }) => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = StudyConfig::from_toml_str(&text)
                .with_context(|| format!("in {}", config.display()))?;
            execute(&cfg, out_dir.as_deref())
        }
        Command::Study(StudyCommand::Preset { name, out_dir }) => {
            let cfg = preset(&name)?;
            execute(&cfg, out_dir.as_deref())
        }
        Command::Verify(VerifyCommand::Expansions) => verify(),
        Command::Preset(PresetCommand::List) => {
            let mut out = io::stdout().lock();
            for (name, description) in PRESETS {
                writeln!(out, "{name:<22} {description}")?;
            }
            Ok(true)
        }
        Command::Preset(PresetCommand::Export { name, path }) => {
            let cfg = preset(&name)?;
            write_file(&path, &cfg.to_toml_string())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|c| c.kind() == io::ErrorKind::BrokenPipe)
}
