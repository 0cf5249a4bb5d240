use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use ppgbp::dataset::Target;
use ppgbp::pipeline::{with_jobs, Pipeline, PipelineConfig};
use ppgbp::synthetic::{write_cohort, CohortSpec};

/// Cuffless blood pressure estimation from fingertip PPG.
#[derive(Debug, Parser)]
#[command(name = "ppgbp", version)]
struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Restrict select/train/tune/predict to one target.
    #[arg(long, global = true)]
    target: Option<Target>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read signal files and the subject table into records.jsonl.
    Ingest,
    /// Skewness quality screening and train/test split.
    Qc,
    /// Preprocess, detect fiducials and write features.csv.
    Extract,
    /// Rank features on the training rows.
    Select,
    /// Fit models with the configured hyperparameters and cross-validate.
    Train,
    /// Search GPR hyperparameters, then fit and cross-validate.
    Tune,
    /// Predict the held-out rows.
    Predict,
    /// Score predictions into report.json.
    Evaluate,
    /// Render report.md and plot data.
    Report,
    /// Every stage in order.
    RunAll,
    /// Write a synthetic cohort and a config that points at it.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60)]
        subjects: usize,
        #[arg(long, default_value_t = 3)]
        segments: u32,
    },
}

fn targets(t: Option<Target>) -> Vec<Target> {
    t.map_or(Target::BOTH.to_vec(), |t| vec![t])
}

fn synth(out: PathBuf, subjects: usize, segments: u32, seed: u64) -> anyhow::Result<()> {
    let spec = CohortSpec {
        subjects,
        segments_per_subject: segments,
        seed,
        ..CohortSpec::default()
    };
    write_cohort(&out, &spec)?;
    let mut cfg = PipelineConfig::new(seed, "signals".into(), "subjects.csv".into(), "out".into());
    let total = subjects * segments as usize;
    cfg.qc.calibrate_to_count = Some((total * 85 / 100).max(1));
    let path = out.join("ppgbp.toml");
    std::fs::write(&path, cfg.to_toml()?)?;
    println!("wrote {total} segments and {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Command::Synth { out, subjects, segments } = cli.command {
        return synth(out, subjects, segments, cli.seed.unwrap_or(7));
    }
    let Some(path) = cli.config else {
        bail!("--config is required for this command");
    };
    let mut cfg = PipelineConfig::from_toml_file(&path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let p = Pipeline::new(cfg)?;
    let ts = targets(cli.target);
    with_jobs(cli.jobs, || -> anyhow::Result<()> {
        match cli.command {
            Command::Ingest => println!("ingested {} segments", p.ingest()?),
            Command::Qc => {
                let q = p.qc()?;
                println!(
                    "threshold {:.4}: kept {} of {} segments ({} subjects)",
                    q.threshold, q.n_accepted, q.n_input, q.n_subjects_accepted
                );
            }
            Command::Extract => {
                let e = p.extract()?;
                println!(
                    "extracted {} records ({} train, {} test), {} failed",
                    e.n_extracted,
                    e.n_train,
                    e.n_test,
                    e.failures.len()
                );
            }
            Command::Select => {
                for (t, e) in p.select(&ts)? {
                    println!("{t}: {}", e.chosen_names.join(", "));
                }
            }
            Command::Train => {
                for (t, cv) in p.train(&ts)? {
                    println!("{t}: CV RMSE {:.3}, R {:.3}", cv.aggregate.rmse, cv.aggregate.r);
                }
            }
            Command::Tune => {
                for (t, r) in p.tune(&ts)? {
                    println!("{t}: best CV MSE {:.3} ({:?})", r.best_objective, r.best);
                }
            }
            Command::Predict => println!("{} predictions", p.predict(&ts)?.len()),
            Command::Evaluate => {
                let r = p.evaluate()?;
                for e in [&r.sbp, &r.dbp] {
                    println!(
                        "{}: RMSE {:.2}, MAE {:.2}, R {:.3}, BHS {}, AAMI {}",
                        e.target,
                        e.rmse,
                        e.mae,
                        e.r,
                        e.bhs.grade,
                        if e.aami.pass { "pass" } else { "fail" }
                    );
                }
            }
            Command::Report => print!("{}", p.report()?),
            Command::RunAll => {
                let r = p.run_all()?;
                println!("sbp RMSE {:.2}, dbp RMSE {:.2}", r.sbp.rmse, r.dbp.rmse);
                println!("report: {}", p.path(ppgbp::pipeline::artifacts::REPORT_MD).display());
            }
            Command::Synth { .. } => unreachable!(),
        }
        Ok(())
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
