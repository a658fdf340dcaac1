//! `gaitmode`: train transition classifiers, replay trials through the
//! gait FSM, benchmark the TH and ML prediction paths, and generate
//! synthetic trials.
//!
//! Exit codes: 0 success, 1 data error, 2 configuration/usage error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use gaitmode::data::synth::{generate_synthetic, SyntheticScript};
use gaitmode::data::{load_trial, load_trial_dir, save_trial, split_dataset, Trial};
use gaitmode::latency::run_benchmarks;
use gaitmode::replay::replay_trials;
use gaitmode::report::{
    bench_report_from_json, bench_report_json, bench_table_csv, bench_table_text,
    write_transition_log, ReplaySummary,
};
use gaitmode::train::{format_summary, train_from_trials};
use gaitmode::{EngineConfig, Error, ErrorClass, LocomotionMode, ModelBank, PredictPath};

#[derive(Parser)]
#[command(
    name = "gaitmode",
    version,
    about = "Locomotion-transition detection: training, replay and latency benchmarks"
)]
struct Cli {
    /// Engine config file (TOML). GAITMODE_* environment variables
    /// override individual keys, e.g. GAITMODE_DETECTOR_HS_LOAD_THRESHOLD.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the six transition classifiers and write a model bank.
    Train {
        /// Directory of annotated canonical trial CSVs.
        #[arg(long)]
        data: PathBuf,
        /// Output bank file (TOML).
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay trials sample-by-sample and report recognition accuracy.
    Replay {
        /// Trial CSV files or directories of them.
        #[arg(long, required = true, num_args = 1..)]
        trials: Vec<PathBuf>,
        /// Trained model bank.
        #[arg(long)]
        bank: PathBuf,
        /// Starting FSM mode (overrides the config).
        #[arg(long, value_parser = parse_mode_arg)]
        initial_mode: Option<LocomotionMode>,
        /// Prediction path to drive the FSM with.
        #[arg(long, default_value = "th", value_parser = parse_method)]
        method: PredictPath,
        /// Write one decision-log CSV per trial into this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Write the accuracy summary as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Benchmark TH vs ML latency for all six classifiers and the FSM.
    Bench {
        /// Trained model bank.
        #[arg(long)]
        bank: PathBuf,
        /// Recorded cycles per classifier and method (overrides the config).
        #[arg(long)]
        cycles: Option<usize>,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the plot-friendly table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Generate synthetic trials from a script file.
    Generate {
        /// Script file (TOML), or the word `protocol` for the built-in
        /// six-transition evaluation script.
        #[arg(long)]
        script: String,
        /// Base seed; trial k uses seed + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of trials to generate.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Angle noise standard deviation override, degrees.
        #[arg(long)]
        noise_sd: Option<f64>,
    },
    /// Pretty-print a saved replay or bench summary JSON.
    Report {
        /// Summary file produced by `replay --summary` or `bench --out`.
        #[arg(long)]
        summary: PathBuf,
    },
}

fn parse_method(s: &str) -> Result<PredictPath, String> {
    match s.to_ascii_lowercase().as_str() {
        "th" | "threshold" => Ok(PredictPath::Threshold),
        "ml" => Ok(PredictPath::Ml),
        other => Err(format!("unknown method `{other}` (expected th or ml)")),
    }
}

fn parse_mode_arg(s: &str) -> Result<LocomotionMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.class() {
                ErrorClass::Data => 1,
                ErrorClass::Config => 2,
            };
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = EngineConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Train { data, out } => cmd_train(&config, &data, &out),
        Command::Replay {
            trials,
            bank,
            initial_mode,
            method,
            log_dir,
            summary,
        } => cmd_replay(
            &config,
            &trials,
            &bank,
            initial_mode,
            method,
            log_dir.as_deref(),
            summary.as_deref(),
        ),
        Command::Bench {
            bank,
            cycles,
            out,
            csv,
        } => cmd_bench(&config, &bank, cycles, out.as_deref(), csv.as_deref()),
        Command::Generate {
            script,
            seed,
            count,
            out,
            noise_sd,
        } => cmd_generate(&script, seed, count, &out, noise_sd),
        Command::Report { summary } => cmd_report(&summary),
    }
}

fn cmd_train(config: &EngineConfig, data: &Path, out: &Path) -> Result<(), Error> {
    let trials = load_trial_dir(data)?;
    let split = split_dataset(&trials, config.training.split_seed);
    if split.degenerate {
        eprintln!(
            "warning: only {} trials; degenerate split, everything goes to training",
            trials.len()
        );
    }
    println!(
        "{} trials -> {} train / {} test / {} validation (seed {})",
        trials.len(),
        split.train.len(),
        split.test.len(),
        split.validation.len(),
        split.seed
    );

    let train: Vec<&Trial> = trials.iter().filter(|t| split.train.contains(&t.id)).collect();
    let test: Vec<&Trial> = trials.iter().filter(|t| split.test.contains(&t.id)).collect();
    let outcome = train_from_trials(&train, &test, &config.detector, &config.training)?;

    print!("{}", format_summary(&outcome.summary));
    outcome.bank.save(out)?;
    println!("bank written to {}", out.display());
    Ok(())
}

fn collect_trials(paths: &[PathBuf]) -> Result<Vec<Trial>, Error> {
    let mut trials = Vec::new();
    for path in paths {
        if path.is_dir() {
            trials.extend(load_trial_dir(path)?);
        } else {
            trials.push(load_trial(path)?);
        }
    }
    if trials.is_empty() {
        return Err(Error::EmptyInput("no trials given".into()));
    }
    Ok(trials)
}

fn cmd_replay(
    config: &EngineConfig,
    trial_paths: &[PathBuf],
    bank_path: &Path,
    initial_mode: Option<LocomotionMode>,
    method: PredictPath,
    log_dir: Option<&Path>,
    summary_path: Option<&Path>,
) -> Result<(), Error> {
    let bank = ModelBank::load(bank_path)?;
    let trials = collect_trials(trial_paths)?;

    let mut replay_cfg = config.replay;
    if let Some(mode) = initial_mode {
        replay_cfg.initial_mode = mode;
    }

    let (replays, total) = replay_trials(&trials, &bank, &config.detector, &replay_cfg, method)?;

    if let Some(dir) = log_dir {
        std::fs::create_dir_all(dir)?;
        for r in &replays {
            let path = dir.join(format!("{}.log.csv", r.trial_id));
            let file = std::fs::File::create(&path)?;
            write_transition_log(&r.log, file)?;
        }
        println!("{} decision logs written to {}", replays.len(), dir.display());
    }

    let unannotated = replays
        .iter()
        .filter(|r| r.accuracy.overall().n_total == 0)
        .count();
    if unannotated > 0 {
        eprintln!("note: {unannotated} trial(s) lack annotations; accuracy omitted for them");
    }

    let summary = ReplaySummary::new(&replays, &total);
    print!("{}", summary.to_table());
    if let Some(path) = summary_path {
        std::fs::write(path, summary.to_json()?)?;
        println!("summary written to {}", path.display());
    }
    Ok(())
}

fn cmd_bench(
    config: &EngineConfig,
    bank_path: &Path,
    cycles: Option<usize>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<(), Error> {
    let bank = ModelBank::load(bank_path)?;
    let mut bench_cfg = config.bench;
    if let Some(c) = cycles {
        if c < 10 {
            return Err(Error::Config("--cycles must be at least 10".into()));
        }
        bench_cfg.cycles = c;
    }

    // The end-to-end rows replay the built-in protocol trial.
    let trial = generate_synthetic(&SyntheticScript::protocol(0.0), bench_cfg.seed)?;
    let report = run_benchmarks(
        &bank,
        &trial,
        &config.detector,
        LocomotionMode::Sit,
        &bench_cfg,
    )?;

    print!("{}", bench_table_text(&report));
    if let Some(path) = out {
        std::fs::write(path, bench_report_json(&report)?)?;
        println!("report written to {}", path.display());
    }
    if let Some(path) = csv {
        std::fs::write(path, bench_table_csv(&report))?;
        println!("table written to {}", path.display());
    }
    Ok(())
}

fn cmd_generate(
    script_arg: &str,
    seed: u64,
    count: u64,
    out: &Path,
    noise_sd: Option<f64>,
) -> Result<(), Error> {
    let mut script = if script_arg == "protocol" {
        SyntheticScript::protocol(0.0)
    } else {
        let text = std::fs::read_to_string(script_arg)
            .map_err(|e| Error::Config(format!("{script_arg}: {e}")))?;
        SyntheticScript::from_toml(&text)?
    };
    if let Some(sd) = noise_sd {
        script.noise_sd = sd;
    }
    script.validate()?;

    std::fs::create_dir_all(out)?;
    for k in 0..count {
        let trial_seed = seed + k;
        let trial = generate_synthetic(&script, trial_seed)?;
        let path = out.join(format!("trial_{trial_seed:04}.csv"));
        save_trial(&trial, &path)?;
    }
    println!("{count} trial(s) written to {}", out.display());
    Ok(())
}

fn cmd_report(summary: &Path) -> Result<(), Error> {
    let text = std::fs::read_to_string(summary)?;
    if let Ok(replay) = ReplaySummary::from_json(&text) {
        print!("{}", replay.to_table());
        return Ok(());
    }
    match bench_report_from_json(&text) {
        Ok(report) => {
            print!("{}", bench_table_text(&report));
            Ok(())
        }
        Err(_) => Err(Error::Data {
            path: summary.display().to_string(),
            row: 0,
            msg: "not a replay or bench summary JSON".into(),
        }),
    }
}
