//! `shearlab`: experiment runner for the shear-mixing models.
//!
//! One experiment per invocation. `run` executes a preset and writes its
//! artifacts (norms.csv, verdicts.txt, config.txt, checkpoint.txt, and
//! optionally plot.svg) into the output directory; `resume` continues an
//! interrupted run from its checkpoint; `verify` re-evaluates a single
//! check against an existing CSV.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 configuration or
//! file-format error, 3 a numerical guard tripped.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shearlab_cli::checkpoint::{self, Checkpoint};
use shearlab_cli::config::{parse_override, ExperimentConfig, Preset};
use shearlab_cli::presets::{self, ResumePoint, RunOutput};
use shearlab_cli::verdict::{self, Status, Verdict};
use shearlab_cli::{csvio, svg, CliError};
use shearlab_core::diagnostics::{
    fit_log_norm, ratio_growth_check, stagnation_check_with, Classification,
    DEFAULT_STAGNATION_FLOOR,
};

#[derive(Parser)]
#[command(
    name = "shearlab",
    version,
    about = "Shear-mixing experiments: run presets, record norm curves, check verdicts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset and write its artifacts.
    Run {
        /// Preset name (main-theorem, mixer, pulsed, model-1d,
        /// couette-contrast, appendix-ratio).
        #[arg(long)]
        preset: Option<String>,
        /// Flat key-value config file to start from instead of --preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one config key, repeatable: --set mu=0.5 --set T=8.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Continue an interrupted run from its checkpoint file.
    Resume {
        /// Path to the checkpoint; artifacts are rewritten next to it.
        #[arg(long)]
        ckpt: PathBuf,
    },
    /// Re-evaluate one named check against an existing norms.csv.
    Verify {
        #[arg(long)]
        csv: PathBuf,
        /// Check name: stagnation, ratio-growth, exp-class, superexp-class.
        #[arg(long)]
        check: String,
        /// Check parameters: mu, u_inf, stagnation_floor.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_thread_pool()?;
    match cli.command {
        Command::Run { preset, config, set, out } => cmd_run(preset, config, set, out),
        Command::Resume { ckpt } => cmd_resume(ckpt),
        Command::Verify { csv, check, set } => cmd_verify(csv, check, set),
    }
}

/// SHEARLAB_THREADS caps the worker count of the global rayon pool; unset
/// means one worker per core.
fn init_thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SHEARLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| {
            CliError::Config(format!(
                "SHEARLAB_THREADS must be a positive integer, got '{raw}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool setup failed: {e}")))
}

fn cmd_run(
    preset: Option<String>,
    config_file: Option<PathBuf>,
    sets: Vec<String>,
    out: PathBuf,
) -> Result<(), CliError> {
    let mut config = match (&preset, &config_file) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "pass either --preset or --config, not both".into(),
            ));
        }
        (Some(name), None) => ExperimentConfig::defaults(name.parse::<Preset>()?),
        (None, Some(path)) => ExperimentConfig::load(path)?,
        (None, None) => {
            return Err(CliError::Config("one of --preset or --config is required".into()));
        }
    };
    for s in &sets {
        let (k, v) = parse_override(s)?;
        config.set(k, v)?;
    }
    config.validate()?;
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;

    let output = presets::run(&config)?;
    write_artifacts(&out, &config, &output)?;
    report(&out, output)
}

fn cmd_resume(ckpt_path: PathBuf) -> Result<(), CliError> {
    let ckpt = checkpoint::load(&ckpt_path)?;
    let dir = match ckpt_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let prior = csvio::read(&dir.join("norms.csv"), ckpt.config.preset.name())?;
    let point = ResumePoint { state: ckpt.state, elapsed: ckpt.elapsed, prior };

    // The resumed leg runs to the horizon; a stale stop_at would re-trigger.
    let mut config = ckpt.config;
    config.stop_at = None;

    let output = presets::resume(&config, point)?;
    write_artifacts(&dir, &config, &output)?;
    report(&dir, output)
}

fn cmd_verify(csv: PathBuf, check: String, sets: Vec<String>) -> Result<(), CliError> {
    let series = csvio::read(&csv, "verify")?;
    let mut mu = 1.0;
    let mut u_inf = 1.0;
    let mut floor = DEFAULT_STAGNATION_FLOOR;
    for s in &sets {
        let (k, v) = parse_override(s)?;
        let value: f64 = v
            .parse()
            .map_err(|_| CliError::Config(format!("invalid value '{v}' for {k}")))?;
        match k {
            "mu" => mu = value,
            "u_inf" => u_inf = value,
            "stagnation_floor" => floor = value,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown verify key '{k}' (expected mu, u_inf, stagnation_floor)"
                )));
            }
        }
    }

    let verdict = match check.as_str() {
        "stagnation" => {
            let r = stagnation_check_with(&series, None, floor)?;
            Verdict::new(
                "stagnation",
                r.passes,
                format!("inf={:.4e} floor={:.1e}", r.infimum, r.floor),
            )
        }
        "ratio-growth" => {
            let r = ratio_growth_check(&series, mu, u_inf, None)?;
            Verdict::new(
                "ratio-growth",
                r.passes,
                format!("rate={:.4} bound={:.4}", r.fitted_rate, r.bound_quadratic),
            )
        }
        "exp-class" => {
            let f = fit_log_norm(&series, None)?;
            Verdict::new(
                "exp-class",
                f.classification == Classification::Exponential,
                format!("({})", f.classification),
            )
        }
        "superexp-class" => {
            let f = fit_log_norm(&series, None)?;
            Verdict::new(
                "superexp-class",
                f.classification == Classification::SuperExponential,
                format!("({})", f.classification),
            )
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown check '{other}' (expected stagnation, ratio-growth, \
                 exp-class, superexp-class)"
            )));
        }
    };
    println!("{}", verdict.line());
    if verdict.status == Status::Fail {
        return Err(CliError::ChecksFailed { failed: 1, total: 1 });
    }
    Ok(())
}

fn write_artifacts(
    dir: &Path,
    config: &ExperimentConfig,
    output: &RunOutput,
) -> Result<(), CliError> {
    let write = |name: &str, text: &str| {
        std::fs::write(dir.join(name), text)
            .map_err(|e| CliError::Config(format!("cannot write {name}: {e}")))
    };

    csvio::write(&dir.join("norms.csv"), &output.series)?;
    for (name, series) in &output.extra {
        csvio::write(&dir.join(name), series)?;
    }
    write("config.txt", &config.to_text())?;
    let verdict_text = if output.stopped_early {
        format!(
            "# run stopped at t = {} before completion; resume to evaluate checks\n",
            output.elapsed
        )
    } else {
        verdict::render(&output.verdicts)
    };
    write("verdicts.txt", &verdict_text)?;
    if config.plot {
        write("plot.svg", &svg::render(&output.series, config.preset.name()))?;
    }
    let ckpt = Checkpoint {
        config: config.clone(),
        elapsed: output.elapsed,
        state: output.state.clone(),
    };
    checkpoint::save(&dir.join("checkpoint.txt"), &ckpt)
}

fn report(dir: &Path, output: RunOutput) -> Result<(), CliError> {
    if output.stopped_early {
        println!(
            "stopped at t = {}; resume with `shearlab resume --ckpt {}`",
            output.elapsed,
            dir.join("checkpoint.txt").display()
        );
        return Ok(());
    }
    for v in &output.verdicts {
        println!("{}", v.line());
    }
    let failed = verdict::hard_failures(&output.verdicts);
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total: output.verdicts.len() });
    }
    Ok(())
}
