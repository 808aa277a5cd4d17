use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pcfg_ga::corpus::CorpusFormat;
use pcfg_ga::{Error, Result, ScoreMode, ToyLanguage};
use pcfg_ga_cli::config::{ExperimentConfig, RawConfig, RawValue};
use pcfg_ga_cli::{
    cmd_evaluate, cmd_gen_data, cmd_parse, cmd_sweep, cmd_train, exit_code, report_json, summary_table,
    EvaluateArgs, GenDataArgs, GridMode,
};

/// Grammar induction with genetic algorithms over covering PCFGs.
#[derive(Parser)]
#[command(name = "pcfg-ga", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the builtin training set and regenerated test sets for L1/L2.
    GenData {
        #[arg(long)]
        lang: ToyLanguage,
        #[arg(long)]
        pos: Option<usize>,
        #[arg(long)]
        neg: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
        /// Keep the L1 training sentence exactly as printed.
        #[arg(long)]
        verbatim: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "plain")]
        format: CorpusFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the repeats of one experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score corpora under a dumped grammar and print a JSON report.
    Evaluate {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        pos: Option<PathBuf>,
        #[arg(long)]
        neg: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.05")]
        thresholds: Vec<f64>,
        #[arg(long)]
        format: Option<CorpusFormat>,
        #[arg(long, default_value = "normalized")]
        score_mode: ScoreMode,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every setup of a sweep config; rerunning resumes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Cartesian product of all axes instead of one-at-a-time.
        #[arg(long)]
        full_grid: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print ln P(x) for every sentence of a corpus.
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: Option<CorpusFormat>,
    },
}

fn load_raw(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<RawConfig> {
    let mut raw = RawConfig::load(config)?;
    if let Some(s) = seed {
        raw.set("seed", s.to_string());
    }
    if let Some(o) = out {
        let o = std::path::absolute(&o).unwrap_or(o);
        raw.set("out", o.display().to_string());
    }
    Ok(raw)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            lang,
            pos,
            neg,
            max_len,
            verbatim,
            seed,
            format,
            out,
        } => cmd_gen_data(&GenDataArgs {
            language: lang,
            test_pos: pos,
            test_neg: neg,
            max_len,
            verbatim,
            seed,
            format,
            out,
        }),
        Command::Train { config, seed, out } => {
            let cfg = ExperimentConfig::from_raw(&load_raw(&config, seed, out)?)?;
            let outcomes = cmd_train(cfg.clone())?;
            print!("{}", summary_table(&cfg, &outcomes));
            Ok(())
        }
        Command::Evaluate {
            grammar,
            train,
            pos,
            neg,
            thresholds,
            format,
            score_mode,
            out,
        } => {
            let report = cmd_evaluate(&EvaluateArgs {
                grammar,
                train,
                test_pos: pos,
                test_neg: neg,
                thresholds,
                format,
                score_mode,
            })?;
            let json = report_json(&report);
            match out {
                Some(p) => std::fs::write(&p, json).map_err(|e| Error::io(&p, e)),
                None => {
                    print!("{json}");
                    Ok(())
                }
            }
        }
        Command::Sweep { config, full_grid, out } => {
            let raw = load_raw(&config, None, out)?;
            let mode = match raw.entries.get("grid") {
                _ if full_grid => GridMode::Full,
                None => GridMode::Baseline,
                Some(RawValue::Single(s)) if s == "baseline" => GridMode::Baseline,
                Some(RawValue::Single(s)) if s == "full" => GridMode::Full,
                Some(_) => {
                    return Err(Error::InvalidInput("config field grid: expected baseline or full".into()))
                }
            };
            let o = cmd_sweep(&raw, mode)?;
            println!(
                "{} setups: {} runs executed, {} resumed from manifest",
                o.setups, o.executed, o.skipped
            );
            Ok(())
        }
        Command::Parse { grammar, input, format } => {
            print!("{}", cmd_parse(&grammar, &input, format)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
