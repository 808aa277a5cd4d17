//! Experiment runner behind the `pcfg-ga` binary: test-data generation,
//! training runs, grammar evaluation, parameter sweeps and sentence scoring.
//!
//! Every artifact that is written (JSON reports, CSV traces and summaries,
//! grammar dumps) depends only on the config and its seed; wall-clock times
//! go to separate `timings.csv` and `sweep_walltimes.tsv` files.

pub mod config;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use pcfg_ga::corpus::{read_corpus, write_corpus, CorpusFormat};
use pcfg_ga::eval::{kfold_split, threshold_key, FoldPlan};
use pcfg_ga::evo::{self, StopReason, TraceRow};
use pcfg_ga::languages::{builtin_training_set, sample_negative, sample_positive};
use pcfg_ga::{
    build_covering_ruleset, evaluate_grammar, Alphabet, Corpus, EncodedCorpus, Error, EvalReport,
    LabeledSample, Pcfg, Result, RunResult, RuleSet, ScoreMode, ToyLanguage,
};

use crate::config::{AlphabetSource, ExperimentConfig, RawConfig, RawValue, SWEEP_AXES};

/// Process exit code for an error: 2 invalid input, 3 precondition or
/// resource failure, 4 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidInput(_) => 2,
        Error::PreconditionViolation(_) | Error::ResourceExhausted(_) => 3,
        Error::Io { .. } => 4,
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Regenerated positive and negative test sets; negatives follow the
/// positive length distribution.
pub fn generate_test_sets(
    lang: ToyLanguage,
    pos_count: usize,
    neg_count: usize,
    max_len: usize,
    seed: u64,
) -> Result<(Corpus, Corpus)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = sample_positive(lang, pos_count, max_len, &mut rng)?;
    let lengths: Vec<usize> = pos.iter().map(|x| x.len()).collect();
    let neg = sample_negative(lang, neg_count, &lengths, &mut rng)?;
    Ok((pos, neg))
}

#[derive(Debug, Clone)]
pub struct GenDataArgs {
    pub language: ToyLanguage,
    pub test_pos: Option<usize>,
    pub test_neg: Option<usize>,
    pub max_len: Option<usize>,
    pub verbatim: bool,
    pub seed: u64,
    pub format: CorpusFormat,
    pub out: PathBuf,
}

/// Writes `train.txt`, `test_pos.txt`, `test_neg.txt` and `manifest.txt`.
pub fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let defaults = args.language.default_sizes();
    let pos_count = args.test_pos.unwrap_or(defaults.test_pos);
    let neg_count = args.test_neg.unwrap_or(defaults.test_neg);
    let max_len = args.max_len.unwrap_or(defaults.max_len);
    let train = builtin_training_set(args.language, args.verbatim);
    let (pos, neg) = generate_test_sets(args.language, pos_count, neg_count, max_len, args.seed)?;
    create_dir(&args.out)?;
    write_corpus(&args.out.join("train.txt"), &train, args.format)?;
    write_corpus(&args.out.join("test_pos.txt"), &pos, args.format)?;
    write_corpus(&args.out.join("test_neg.txt"), &neg, args.format)?;
    let manifest = format!(
        "language = {}\nseed = {}\ntrain = {}\ntest_pos = {}\ntest_neg = {}\nmax_len = {}\nverbatim = {}\n",
        args.language,
        args.seed,
        train.len(),
        pos.len(),
        neg.len(),
        max_len,
        args.verbatim
    );
    write_file(&args.out.join("manifest.txt"), manifest)
}

/// Training and test corpora plus the alphabet the covering set is built on.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub alphabet: Alphabet,
    pub sample: LabeledSample,
}

fn corpus_format(cfg: &ExperimentConfig, path: &Path) -> CorpusFormat {
    cfg.format.unwrap_or_else(|| CorpusFormat::from_path(path))
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let read = |p: &Option<PathBuf>| -> Result<Option<Corpus>> {
        p.as_ref().map(|p| read_corpus(p, corpus_format(cfg, p))).transpose()
    };
    let train = match (read(&cfg.train)?, cfg.language) {
        (Some(c), _) => c,
        (None, Some(lang)) => builtin_training_set(lang, cfg.verbatim),
        (None, None) => unreachable!("config validation requires language or train"),
    };
    if train.is_empty() {
        return Err(Error::InvalidInput("training corpus is empty".into()));
    }
    let mut test_pos = read(&cfg.test_pos)?;
    let mut test_neg = read(&cfg.test_neg)?;
    if let Some(lang) = cfg.language {
        if test_pos.is_none() || test_neg.is_none() {
            let d = lang.default_sizes();
            let (pos, neg) = generate_test_sets(
                lang,
                cfg.test_pos_count.unwrap_or(d.test_pos),
                cfg.test_neg_count.unwrap_or(d.test_neg),
                cfg.test_max_len.unwrap_or(d.max_len),
                cfg.data_seed,
            )?;
            test_pos.get_or_insert(pos);
            test_neg.get_or_insert(neg);
        }
    }
    let sample = LabeledSample {
        train,
        test_pos: test_pos.unwrap_or_default(),
        test_neg: test_neg.unwrap_or_default(),
    };
    let alphabet = match &cfg.alphabet {
        AlphabetSource::Symbols(s) if s == "abc" => Alphabet::abc(),
        AlphabetSource::Symbols(s) if s == "amino" => Alphabet::amino_acids(),
        AlphabetSource::Symbols(s) => Alphabet::new(s.chars())?,
        AlphabetSource::Auto => match cfg.language {
            Some(lang) => lang.alphabet(),
            None => Alphabet::from_corpus(
                sample.train.iter().chain(&sample.test_pos).chain(&sample.test_neg),
            )?,
        },
    };
    Ok(Dataset { alphabet, sample })
}

/// One GA run inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    pub index: usize,
    pub fold: Option<usize>,
    pub seed: u64,
}

pub fn run_specs(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let folds = cfg.folds.unwrap_or(1);
    (0..folds)
        .flat_map(|f| (0..cfg.repeats).map(move |r| (f, r)))
        .map(|(f, r)| {
            let index = f * cfg.repeats + r;
            RunSpec {
                index,
                fold: cfg.folds.map(|_| f),
                seed: cfg.ga.seed.wrapping_add(index as u64),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub result: RunResult,
    pub grammar: Pcfg,
    pub report: EvalReport,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
struct RunInfo {
    index: usize,
    seed: u64,
    scheme: &'static str,
    covering: String,
    n_rules: usize,
    best_f: f64,
    generations_run: usize,
    stop_reason: StopReason,
}

#[derive(Debug, Clone, Serialize)]
struct RunReport<'a> {
    #[serde(flatten)]
    eval: &'a EvalReport,
    run: RunInfo,
    config: &'a BTreeMap<String, String>,
}

/// Prepared experiment: rule set, data and fold plan.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub ruleset: Arc<RuleSet>,
    pub data: Dataset,
    pub folds: Option<FoldPlan>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let data = load_dataset(&cfg)?;
        let ruleset = Arc::new(build_covering_ruleset(
            &data.alphabet,
            cfg.covering.n_lex,
            cfg.covering.n_struct,
        )?);
        let folds = cfg
            .folds
            .map(|k| kfold_split(data.sample.train.len(), k, &mut ChaCha8Rng::seed_from_u64(cfg.data_seed)))
            .transpose()?;
        Ok(Experiment {
            cfg,
            ruleset,
            data,
            folds,
        })
    }

    fn sample_for(&self, spec: &RunSpec) -> LabeledSample {
        match (spec.fold, &self.folds) {
            (Some(f), Some(plan)) => {
                let (train, held_out) = plan.split(&self.data.sample.train, f);
                LabeledSample {
                    train,
                    test_pos: held_out,
                    test_neg: self.data.sample.test_neg.clone(),
                }
            }
            _ => self.data.sample.clone(),
        }
    }

    pub fn execute(&self, spec: RunSpec) -> Result<RunOutcome> {
        let started = Instant::now();
        let sample = self.sample_for(&spec);
        let corpus = EncodedCorpus::new(&self.ruleset, &sample.train)?;
        let mut ga = self.cfg.ga.clone();
        ga.seed = spec.seed;
        let result = evo::run_seeded(&ga, &self.ruleset, &corpus)?;
        let grammar = Pcfg::new(self.ruleset.clone(), result.theta_best.clone())?;
        let mut report = evaluate_grammar(&grammar, &sample, &self.cfg.thresholds, self.cfg.score_mode)?;
        report.fold = spec.fold;
        Ok(RunOutcome {
            spec,
            result,
            grammar,
            report,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = String::from("generation,best_f,mean_f,diversity\n");
    for r in trace {
        let _ = writeln!(s, "{},{},{},{}", r.generation, r.best_f, r.mean_f, r.diversity);
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs every repeat (and fold) of a config and writes its artifacts under
/// `cfg.out`. Returns the outcomes in run order.
pub fn cmd_train(cfg: ExperimentConfig) -> Result<Vec<RunOutcome>> {
    let exp = Experiment::new(cfg)?;
    let cfg = &exp.cfg;
    let specs = run_specs(cfg);
    let outcomes = specs
        .par_iter()
        .map(|s| exp.execute(*s))
        .collect::<Result<Vec<_>>>()?;

    create_dir(&cfg.out)?;
    let resolved = cfg.resolved();
    let mut config_txt = String::new();
    for (k, v) in &resolved {
        let _ = writeln!(config_txt, "{k} = {v}");
    }
    write_file(&cfg.out.join("config.txt"), config_txt)?;

    let keys: Vec<String> = cfg.thresholds.iter().map(|&t| threshold_key(t)).collect();
    let mut summary = String::from("run,fold,seed,best_f,perplexity,auroc");
    for k in &keys {
        let _ = write!(summary, ",active_{k}");
    }
    summary.push_str(",generations,stop_reason\n");
    let mut timings = String::from("run,wall_seconds\n");
    for o in &outcomes {
        let dir = cfg.out.join(format!("run_{:02}", o.spec.index));
        create_dir(&dir)?;
        let info = RunInfo {
            index: o.spec.index,
            seed: o.spec.seed,
            scheme: cfg.ga.scheme.name(),
            covering: cfg.covering.to_string(),
            n_rules: exp.ruleset.len(),
            best_f: o.result.best.raw_fitness,
            generations_run: o.result.generations_run,
            stop_reason: o.result.stop_reason,
        };
        let report = RunReport {
            eval: &o.report,
            run: info,
            config: &resolved,
        };
        write_file(&dir.join("report.json"), to_json(&report))?;
        write_file(&dir.join("trace.csv"), trace_csv(&o.result.trace))?;
        write_file(&dir.join("grammar.txt"), o.grammar.dump())?;
        let _ = write!(
            summary,
            "{},{},{},{},{},{}",
            o.spec.index,
            o.spec.fold.map(|f| f.to_string()).unwrap_or_default(),
            o.spec.seed,
            o.result.best.raw_fitness,
            opt(o.report.perplexity_nats_per_letter),
            opt(o.report.auroc)
        );
        for k in &keys {
            let _ = write!(summary, ",{}", o.report.active_rules[k]);
        }
        let _ = writeln!(summary, ",{},{}", o.result.generations_run, stop_name(o.result.stop_reason));
        let _ = writeln!(timings, "{},{:.3}", o.spec.index, o.wall_seconds);
    }
    write_file(&cfg.out.join("summary.csv"), summary)?;
    write_file(&cfg.out.join("timings.csv"), timings)?;
    Ok(outcomes)
}

fn stop_name(r: StopReason) -> &'static str {
    match r {
        StopReason::MaxGenerations => "max-generations",
        StopReason::Converged => "converged",
    }
}

/// Human-readable table of run outcomes.
pub fn summary_table(cfg: &ExperimentConfig, outcomes: &[RunOutcome]) -> String {
    let mut s = format!(
        "{:>4} {:>6} {:>12} {:>12} {:>8}",
        "run", "fold", "best_f", "ppl/letter", "auroc"
    );
    for t in &cfg.thresholds {
        let _ = write!(s, " {:>9}", format!("rules>{t}"));
    }
    s.push_str("  generations    wall\n");
    for o in outcomes {
        let _ = write!(
            s,
            "{:>4} {:>6} {:>12.5} {:>12} {:>8}",
            o.spec.index,
            o.spec.fold.map(|f| f.to_string()).unwrap_or_else(|| "-".into()),
            o.result.best.raw_fitness,
            o.report
                .perplexity_nats_per_letter
                .map_or("inf".into(), |p| format!("{p:.5}")),
            o.report.auroc.map_or("-".into(), |a| format!("{a:.4}")),
        );
        for t in &cfg.thresholds {
            let _ = write!(s, " {:>9}", o.report.active_rules[&threshold_key(*t)]);
        }
        let _ = writeln!(s, "  {:>11} {:>6.1}s", o.result.generations_run, o.wall_seconds);
    }
    s
}

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub grammar: PathBuf,
    pub train: Option<PathBuf>,
    pub test_pos: Option<PathBuf>,
    pub test_neg: Option<PathBuf>,
    pub thresholds: Vec<f64>,
    pub format: Option<CorpusFormat>,
    pub score_mode: ScoreMode,
}

pub fn load_grammar(path: &Path) -> Result<Pcfg> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Pcfg::parse_dump(&text).map_err(|e| match e {
        Error::InvalidArgument(m) | Error::InvalidInput(m) => {
            Error::InvalidInput(format!("{}: {m}", path.display()))
        }
        other => other,
    })
}

/// Scores the given corpora under a dumped grammar. Absent test files leave
/// AuROC out of the report.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvalReport> {
    let g = load_grammar(&args.grammar)?;
    let read = |p: &Option<PathBuf>| -> Result<Corpus> {
        match p {
            Some(p) => read_corpus(p, args.format.unwrap_or_else(|| CorpusFormat::from_path(p))),
            None => Ok(Vec::new()),
        }
    };
    let sample = LabeledSample {
        train: read(&args.train)?,
        test_pos: read(&args.test_pos)?,
        test_neg: read(&args.test_neg)?,
    };
    evaluate_grammar(&g, &sample, &args.thresholds, args.score_mode)
}

pub fn report_json(report: &EvalReport) -> String {
    to_json(report)
}

/// Tab-separated `sentence, ln P, ln P per letter` for every sentence of
/// `input`; `-inf` marks sentences without a parse.
pub fn cmd_parse(grammar: &Path, input: &Path, format: Option<CorpusFormat>) -> Result<String> {
    let g = load_grammar(grammar)?;
    let corpus = read_corpus(input, format.unwrap_or_else(|| CorpusFormat::from_path(input)))?;
    let mut out = String::from("sentence\tlog_prob\tlog_prob_per_letter\n");
    for x in &corpus {
        let lp = pcfg_ga::inside_log_probability(&g, x)?;
        let _ = writeln!(out, "{x}\t{lp}\t{}", lp / x.len() as f64);
    }
    Ok(out)
}

/// How sweep axes are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Middle list value of every axis is the baseline; each setup moves
    /// at most one axis away from it.
    Baseline,
    /// Cartesian product of all axes.
    Full,
}

/// Expands list-valued axes into single-valued configs, in deterministic order.
pub fn expand_sweep(raw: &RawConfig, mode: GridMode) -> Result<Vec<RawConfig>> {
    let axes: Vec<(&str, Vec<String>)> = SWEEP_AXES
        .iter()
        .filter_map(|&k| match raw.entries.get(k) {
            Some(RawValue::List(v)) => Some((k, v.clone())),
            _ => None,
        })
        .collect();
    if let Some((k, _)) = raw
        .entries
        .iter()
        .find(|(k, v)| matches!(v, RawValue::List(_)) && !SWEEP_AXES.contains(&k.as_str()) && *k != "thresholds")
    {
        return Err(Error::InvalidInput(format!("config field {k}: not a sweep axis")));
    }
    if axes.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let with = |choice: &[(&str, &str)]| {
        let mut r = raw.clone();
        for (k, v) in choice {
            r.set(k, *v);
        }
        r
    };
    let mut setups = Vec::new();
    match mode {
        GridMode::Baseline => {
            let baseline: Vec<(&str, &str)> = axes.iter().map(|(k, v)| (*k, v[v.len() / 2].as_str())).collect();
            let mut seen = Vec::new();
            if axes.is_empty() {
                setups.push(raw.clone());
            }
            for (ai, (_, values)) in axes.iter().enumerate() {
                for v in values {
                    let mut choice = baseline.clone();
                    choice[ai].1 = v;
                    if !seen.contains(&choice) {
                        setups.push(with(&choice));
                        seen.push(choice);
                    }
                }
            }
        }
        GridMode::Full => {
            let mut combos: Vec<Vec<(&str, &str)>> = vec![Vec::new()];
            for (k, values) in &axes {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        values.iter().map(move |v| {
                            let mut c = c.clone();
                            c.push((*k, v.as_str()));
                            c
                        })
                    })
                    .collect();
            }
            setups.extend(combos.iter().map(|c| with(c)));
        }
    }
    Ok(setups)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOutcome {
    pub setups: usize,
    pub executed: usize,
    pub skipped: usize,
}

const MANIFEST: &str = "sweep_manifest.tsv";
const WALL_LOG: &str = "sweep_walltimes.tsv";

/// `key<TAB>value` lines of a resume log.
fn read_log(path: &Path) -> Result<HashMap<String, String>> {
    if !path.exists() {
        return Ok(HashMap::new());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

fn append_log(path: &Path) -> Result<std::sync::Mutex<fs::File>> {
    let f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    Ok(std::sync::Mutex::new(f))
}

/// Runs every (setup, repeat) of a sweep config not already recorded in
/// `out/sweep_manifest.tsv`, then writes `summary.csv` and `timings.csv` in
/// setup order. Finished rows are appended to the manifest as they complete
/// and the manifest is rewritten in setup order at the end; wall times go to
/// `sweep_walltimes.tsv`.
pub fn cmd_sweep(raw: &RawConfig, mode: GridMode) -> Result<SweepOutcome> {
    let setups = expand_sweep(raw, mode)?;
    let experiments = setups
        .iter()
        .map(|r| ExperimentConfig::from_raw(r).and_then(Experiment::new))
        .collect::<Result<Vec<_>>>()?;
    let out = experiments[0].cfg.out.clone();
    create_dir(&out)?;
    let manifest_path = out.join(MANIFEST);
    let wall_path = out.join(WALL_LOG);
    let done = read_log(&manifest_path)?;
    let mut walls = read_log(&wall_path)?;

    let key_of = |si: usize, exp: &Experiment, spec: &RunSpec| {
        let resolved: Vec<String> = exp.cfg.resolved().iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("setup={si};run={};{}", spec.index, resolved.join(";"))
    };
    let keys: Vec<String> = experiments[0].cfg.thresholds.iter().map(|&t| threshold_key(t)).collect();
    let mut jobs = Vec::new();
    let mut all = Vec::new();
    for (si, exp) in experiments.iter().enumerate() {
        for spec in run_specs(&exp.cfg) {
            let key = key_of(si, exp, &spec);
            if !done.contains_key(&key) {
                jobs.push((si, spec, key.clone()));
            }
            all.push(key);
        }
    }
    let skipped = all.len() - jobs.len();

    let manifest = append_log(&manifest_path)?;
    let wall_log = append_log(&wall_path)?;
    let fresh = jobs
        .par_iter()
        .map(|(si, spec, key)| {
            let exp = &experiments[*si];
            let o = exp.execute(*spec)?;
            let ga = &exp.cfg.ga;
            let mut row = format!(
                "{si},{},{},{},{},{},{},{},{},{},{},{},{}",
                spec.index,
                spec.fold.map(|f| f.to_string()).unwrap_or_default(),
                ga.scheme.name(),
                exp.cfg.covering,
                ga.population_size,
                ga.crossover_prob,
                ga.mutation_prob,
                ga.mutation_scale,
                spec.seed,
                o.result.best.raw_fitness,
                opt(o.report.perplexity_nats_per_letter),
                opt(o.report.auroc)
            );
            for k in &keys {
                let _ = write!(row, ",{}", o.report.active_rules.get(k).copied().unwrap_or(0));
            }
            let _ = write!(row, ",{}", o.result.generations_run);
            let wall = format!("{:.3}", o.wall_seconds);
            writeln!(manifest.lock().expect("manifest lock"), "{key}\t{row}")
                .map_err(|e| Error::io(&manifest_path, e))?;
            writeln!(wall_log.lock().expect("wall log lock"), "{key}\t{wall}")
                .map_err(|e| Error::io(&wall_path, e))?;
            Ok((key.clone(), row, wall))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = done;
    for (key, row, wall) in fresh {
        rows.insert(key.clone(), row);
        walls.insert(key, wall);
    }

    let mut summary = String::from(
        "setup,run,fold,scheme,covering,population,crossover,mutation,scale,seed,best_f,perplexity,auroc",
    );
    for k in &keys {
        let _ = write!(summary, ",active_{k}");
    }
    summary.push_str(",generations\n");
    let mut timings = String::from("setup,run,wall_seconds\n");
    let mut canonical = String::new();
    for key in &all {
        let row = &rows[key];
        let _ = writeln!(summary, "{row}");
        let _ = writeln!(canonical, "{key}\t{row}");
        let mut it = row.splitn(3, ',');
        let wall = walls.get(key).map(String::as_str).unwrap_or("");
        let _ = writeln!(timings, "{},{},{wall}", it.next().unwrap_or(""), it.next().unwrap_or(""));
    }
    // Rows of setups no longer in the config stay resumable.
    let mut stale: Vec<_> = rows.iter().filter(|(k, _)| !all.contains(k)).collect();
    stale.sort();
    for (key, row) in stale {
        let _ = writeln!(canonical, "{key}\t{row}");
    }
    drop(manifest);
    write_file(&manifest_path, canonical)?;
    write_file(&out.join("summary.csv"), summary)?;
    write_file(&out.join("timings.csv"), timings)?;
    Ok(SweepOutcome {
        setups: experiments.len(),
        executed: jobs.len(),
        skipped,
    })
}
