//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use pcfg_ga::eval::mle_theta_by_derivation_counting;
use pcfg_ga::evo::{
    self, apply_delta, crossover_blend, crossover_one_point, mutate_delta, GaState, Individual,
};
use pcfg_ga::grammar::{normalize_into, Rhs};
use pcfg_ga::languages::{builtin_training_set, reference_grammar};
use pcfg_ga::{
    auroc, build_covering_ruleset, evaluate_grammar, inside_log_probability, perplexity_per_letter, Alphabet,
    EncodedCorpus, GaConfig, Genome, LabeledSample, Pcfg, RunResult, Scheme, ScoreMode, Sentence,
    ToyLanguage,
};
use pcfg_ga_cli::generate_test_sets;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const RUNS: u64 = 10;
const SUCCESS_PPL: f64 = 0.48;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn inside_matches_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let abc = Alphabet::abc();
    let strings = oracle::all_strings(&abc, 6);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let mut compare = |g: &Pcfg, x: &Sentence| {
        let lp = inside_log_probability(g, x).unwrap();
        let p = oracle::derivation_probability(g, x);
        checked += 1;
        if p == 0.0 {
            if lp != f64::NEG_INFINITY {
                mismatches += 1;
            }
        } else {
            let rel = (lp.exp() - p).abs() / p;
            worst = worst.max(rel);
            if rel.is_nan() || rel > 1e-9 {
                mismatches += 1;
            }
        }
    };
    for _ in 0..200 {
        let g = oracle::random_grammar(&mut rng, &abc, 4, 16);
        for x in &strings {
            compare(&g, x);
        }
    }
    // 20 letters: every string of length ≤ 6 over the grammar's terminals;
    // strings with any other letter must have no parse.
    let amino = Alphabet::amino_acids();
    for _ in 0..20 {
        let g = oracle::random_grammar(&mut rng, &amino, 4, 16);
        let used: Vec<char> = g
            .ruleset()
            .rules()
            .iter()
            .filter_map(|r| match r.rhs {
                Rhs::Terminal(a) => Some(amino.symbol(a)),
                Rhs::Pair(..) => None,
            })
            .collect();
        let sub = Alphabet::new(used.iter().copied().collect::<std::collections::BTreeSet<_>>()).unwrap();
        for x in oracle::all_strings(&sub, 6) {
            compare(&g, &x);
        }
        for len in 1..=6 {
            compare(&g, &oracle::random_string(&mut rng, &amino, len));
        }
    }
    outcome(
        mismatches == 0,
        format!(
            "Inside vs derivation enumeration: 220 grammars (20 over 20 letters), {checked} sentences, \
             {mismatches} mismatches, max rel err {worst:.1e} (tol 1e-9)"
        ),
    )
}

fn properness() -> Outcome {
    let rs = build_covering_ruleset(&Alphabet::abc(), 3, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut zero_groups = 0;
    let mut zero_ok = true;
    let mut theta = Vec::new();
    for i in 0..1000 {
        let mut genes: Vec<f64> = (0..rs.len()).map(|_| rng.gen::<f64>()).collect();
        if i % 4 == 0 {
            let g = rs.groups()[rng.gen_range(0..rs.groups().len())].clone();
            genes[g].iter_mut().for_each(|x| *x = 0.0);
        }
        normalize_into(&genes, &rs, &mut theta);
        for g in rs.groups() {
            worst = worst.max((theta[g.clone()].iter().sum::<f64>() - 1.0).abs());
            if genes[g.clone()].iter().all(|&x| x == 0.0) {
                zero_groups += 1;
                let u = 1.0 / g.len() as f64;
                zero_ok &= theta[g.clone()].iter().all(|&p| p == u);
            }
        }
    }
    outcome(
        rs.len() == 205 && worst <= 1e-12 && zero_ok && zero_groups >= 250,
        format!(
            "properness: 1000 genomes over {} rules, max |sum-1| = {worst:.1e} (tol 1e-12), \
             {zero_groups} zero-sum groups uniform: {zero_ok}",
            rs.len()
        ),
    )
}

/// Closed-form derivation counts of `aⁿbⁿcᵐ` in the L1 reference grammar.
fn l1_oracle_perplexity(train: &[Sentence]) -> f64 {
    let (mut tc, mut sc, mut ab, mut av, mut letters) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for x in train {
        let s = x.to_string();
        let n = s.chars().filter(|&c| c == 'a').count() as f64;
        let m = s.chars().filter(|&c| c == 'c').count() as f64;
        tc += 1.0;
        sc += m - 1.0;
        ab += 1.0;
        av += n - 1.0;
        letters += s.len() as f64;
    }
    // V -> T B is used av times with probability 1, lexical rules likewise.
    let ll = tc * (tc / (tc + sc)).ln()
        + sc * (sc / (tc + sc)).ln()
        + ab * (ab / (ab + av)).ln()
        + av * (av / (ab + av)).ln();
    -ll / letters
}

fn perplexity_anchor() -> Outcome {
    let train = builtin_training_set(ToyLanguage::L1, false);
    let rs = Arc::new(reference_grammar(ToyLanguage::L1));
    let theta = mle_theta_by_derivation_counting(&rs, &train).unwrap();
    let g = Pcfg::new(rs, theta).unwrap();
    let ppl = perplexity_per_letter(&g, &train).unwrap();
    let oracle = l1_oracle_perplexity(&train);
    outcome(
        (ppl - 0.43).abs() <= 0.02 && (ppl - oracle).abs() < 1e-12,
        format!("perplexity anchor: {ppl:.4} nats/letter (target 0.43 ± 0.02), closed-form oracle {oracle:.4}"),
    )
}

struct Runs {
    mlgd: Vec<RunResult>,
    pge: Vec<RunResult>,
    ppl_mlgd: Vec<f64>,
    ppl_pge: Vec<f64>,
    seconds: f64,
}

fn l1_runs() -> Runs {
    let started = Instant::now();
    let train = builtin_training_set(ToyLanguage::L1, false);
    let rs = Arc::new(build_covering_ruleset(&Alphabet::abc(), 3, 4).unwrap());
    let corpus = EncodedCorpus::new(&rs, &train).unwrap();
    let run = |scheme: Scheme| -> Vec<RunResult> {
        (1..=RUNS)
            .into_par_iter()
            .map(|seed| {
                let mut cfg = GaConfig::for_scheme(scheme, seed);
                cfg.population_size = 80;
                cfg.crossover_prob = 0.5;
                cfg.mutation_prob = 0.001;
                cfg.mutation_scale = 0.5;
                cfg.max_generations = 2000;
                cfg.parallel = false;
                evo::run_seeded(&cfg, &rs, &corpus).unwrap()
            })
            .collect()
    };
    let mlgd = run(Scheme::Mlgd);
    let pge = run(Scheme::Pge);
    let ppl = |r: &[RunResult]| -> Vec<f64> {
        r.iter()
            .map(|x| {
                let g = Pcfg::new(rs.clone(), x.theta_best.clone()).unwrap();
                perplexity_per_letter(&g, &train).unwrap()
            })
            .collect()
    };
    Runs {
        ppl_mlgd: ppl(&mlgd),
        ppl_pge: ppl(&pge),
        mlgd,
        pge,
        seconds: started.elapsed().as_secs_f64(),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}

fn mlgd_success(r: &Runs) -> Outcome {
    let ok = r.ppl_mlgd.iter().filter(|&&p| p <= SUCCESS_PPL).count();
    outcome(
        ok >= 3,
        format!(
            "MLGD success: {ok}/{RUNS} runs reach ≤ {SUCCESS_PPL} nats/letter within 2000 generations \
             (need ≥ 3); per run [{}] ({:.0}s for 20 runs)",
            fmt_list(&r.ppl_mlgd),
            r.seconds
        ),
    )
}

fn pge_direction(r: &Runs) -> Outcome {
    let m = r.ppl_mlgd.iter().filter(|&&p| p <= SUCCESS_PPL).count();
    let p = r.ppl_pge.iter().filter(|&&p| p <= SUCCESS_PPL).count();
    let gens: Vec<usize> = r.pge.iter().map(|x| x.generations_run).collect();
    outcome(
        p <= m,
        format!(
            "PGE vs MLGD: PGE {p}/{RUNS} ≤ MLGD {m}/{RUNS}; PGE per run [{}], generations {gens:?}",
            fmt_list(&r.ppl_pge)
        ),
    )
}

fn classifier_quality(r: &Runs) -> Outcome {
    let rs = Arc::new(build_covering_ruleset(&Alphabet::abc(), 3, 4).unwrap());
    let (pos, neg) = generate_test_sets(ToyLanguage::L1, 76, 100, 24, 1).unwrap();
    let sample = LabeledSample {
        train: builtin_training_set(ToyLanguage::L1, false),
        test_pos: pos,
        test_neg: neg,
    };
    let mut aucs = Vec::new();
    for (run, ppl) in r.mlgd.iter().zip(&r.ppl_mlgd) {
        if *ppl <= SUCCESS_PPL {
            let g = Pcfg::new(rs.clone(), run.theta_best.clone()).unwrap();
            let rep = evaluate_grammar(&g, &sample, &[0.01], ScoreMode::Normalized).unwrap();
            aucs.push(rep.auroc.unwrap());
        }
    }
    outcome(
        !aucs.is_empty() && aucs.iter().all(|&a| a >= 0.95),
        format!(
            "classifier quality: AuROC of {} successful grammars on 76/100 L1 test sets [{}] (need ≥ 0.95)",
            aucs.len(),
            fmt_list(&aucs)
        ),
    )
}

fn best_l2_active(n_lex: usize, n_struct: usize) -> usize {
    let train = builtin_training_set(ToyLanguage::L2, false);
    let rs = build_covering_ruleset(&Alphabet::abc(), n_lex, n_struct).unwrap();
    let corpus = EncodedCorpus::new(&rs, &train).unwrap();
    let best = (1..=5u64)
        .map(|seed| {
            let mut cfg = GaConfig::mlgd(seed);
            cfg.max_generations = 2000;
            evo::run_seeded(&cfg, &rs, &corpus).unwrap()
        })
        .max_by(|a, b| a.best.raw_fitness.total_cmp(&b.best.raw_fitness))
        .unwrap();
    best.theta_best.active_rule_count(0.01)
}

fn grammar_sizes(r: &Runs) -> Outcome {
    let mut order: Vec<usize> = (0..r.mlgd.len()).collect();
    order.sort_by(|&a, &b| r.mlgd[b].best.raw_fitness.total_cmp(&r.mlgd[a].best.raw_fitness));
    let best: Vec<usize> = order
        .iter()
        .take(5)
        .filter(|&&i| r.ppl_mlgd[i] <= SUCCESS_PPL)
        .map(|&i| r.mlgd[i].theta_best.active_rule_count(0.01))
        .collect();
    let l2_3 = best_l2_active(2, 1);
    let l2_4 = best_l2_active(2, 2);
    let pass = !best.is_empty() && best.iter().all(|n| (10..=18).contains(n)) && l2_3 <= 10 && l2_4 <= 10;
    outcome(
        pass,
        format!(
            "grammar size: five best L1 grammars that succeed have {best:?} rules with θ > 0.01 (band 10–18); \
             best L2 grammars: {l2_3} rules with 3 variables, {l2_4} with 4 (need ≤ 10)"
        ),
    )
}

fn auroc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut mismatches = 0;
    let mut with_ties = 0;
    for _ in 0..100 {
        let levels = rng.gen_range(2..12);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(0..levels) as f64 * 0.25 - 1.0).collect() };
        let np = 1 + (levels * 7) % 40;
        let pos = draw(np);
        let neg = draw(1 + (levels * 13) % 50);
        let (mut wins, mut ties) = (0u64, 0u64);
        for p in &pos {
            for n in &neg {
                if p > n {
                    wins += 1;
                } else if p == n {
                    ties += 1;
                }
            }
        }
        if ties > 0 {
            with_ties += 1;
        }
        let expected = (wins as f64 + 0.5 * ties as f64) / (pos.len() * neg.len()) as f64;
        if auroc(&pos, &neg).unwrap() != expected {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0 && with_ties > 50,
        format!("AuROC oracle: 100 score-set pairs ({with_ties} with ties), {mismatches} inexact results"),
    )
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let name = p.strip_prefix(dir).unwrap().display().to_string();
                let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
                let file = p.file_name().unwrap().to_str().unwrap();
                let timing = matches!(file, "timings.csv" | "sweep_walltimes.tsv");
                if !timing && matches!(ext, "json" | "csv" | "txt" | "tsv") {
                    out.insert(name, std::fs::read(&p).unwrap());
                }
            }
        }
    }
    out
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_pcfg-ga"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let train_cfg = tmp.path().join("train.cfg");
    std::fs::write(
        &train_cfg,
        "language = L1\nscheme = pge\nrepeats = 3\nmax_generations = 40\npopulation = 20\nseed = 5\n",
    )
    .unwrap();
    let sweep_cfg = tmp.path().join("sweep.cfg");
    std::fs::write(
        &sweep_cfg,
        "language = L2\ncovering = 2+2\nrepeats = 2\nmax_generations = 40\nscheme = {mlgd, pge}\npopulation = {10, 20}\n",
    )
    .unwrap();
    let mut sets = Vec::new();
    let mut ok = true;
    for (i, threads) in ["1", "4", "1"].iter().enumerate() {
        let t = tmp.path().join(format!("train{i}"));
        let s = tmp.path().join(format!("sweep{i}"));
        ok &= cli(&["--threads", threads, "train", "--config", train_cfg.to_str().unwrap(), "--out", t.to_str().unwrap()]);
        ok &= cli(&["--threads", threads, "sweep", "--config", sweep_cfg.to_str().unwrap(), "--out", s.to_str().unwrap()]);
        sets.push((artifacts(&t), artifacts(&s)));
    }
    let files = sets[0].0.len() + sets[0].1.len();
    let identical = sets.windows(2).all(|w| w[0] == w[1]);
    outcome(
        ok && identical && files >= 10,
        format!(
            "determinism: train and sweep run 3 times (threads 1, 4, 1): {files} JSON/CSV/text artifacts, \
             byte-identical: {identical}"
        ),
    )
}

fn operator_properties() -> Outcome {
    const TRIALS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let len = 205;
    let genome = |rng: &mut ChaCha8Rng| {
        Genome::new((0..len).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen::<f64>() }).collect()).unwrap()
    };
    let in_range = |g: &Genome| g.genes().iter().all(|x| (0.0..=1.0).contains(x));
    let mut failures = BTreeMap::from([("range", 0), ("multiset", 0), ("blx", 0), ("zero-clip", 0), ("monotone", 0)]);
    for _ in 0..TRIALS {
        let (a, b) = (genome(&mut rng), genome(&mut rng));
        let (mut x, y) = crossover_one_point(&a, &b, &mut rng).unwrap();
        let mut before: Vec<f64> = a.genes().iter().chain(b.genes()).copied().collect();
        let mut after: Vec<f64> = x.genes().iter().chain(y.genes()).copied().collect();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        if before != after {
            *failures.get_mut("multiset").unwrap() += 1;
        }
        let c = crossover_blend(&a, &b, &mut rng).unwrap();
        let hull_ok = c.genes().iter().zip(a.genes().iter().zip(b.genes())).all(|(&g, (&p, &q))| {
            let (lo, hi) = (p.min(q), p.max(q));
            let d = hi - lo;
            g >= (lo - 0.5 * d).max(0.0) && g <= (hi + 0.5 * d).min(1.0)
        });
        if !hull_ok {
            *failures.get_mut("blx").unwrap() += 1;
        }
        mutate_delta(&mut x, rng.gen_range(0.0..1.0), rng.gen_range(0.02..=1.0), &mut rng);
        if !in_range(&x) || !in_range(&c) || !in_range(&y) {
            *failures.get_mut("range").unwrap() += 1;
        }
        let gene: f64 = rng.gen_range(0.0..1.0);
        let delta = rng.gen_range(gene.max(0.01)..=1.0);
        if apply_delta(gene, delta, false) != 0.0 {
            *failures.get_mut("zero-clip").unwrap() += 1;
        }
    }
    // Monotone best fitness: 10⁴ generation steps over 100 short runs.
    let rs = build_covering_ruleset(&Alphabet::abc(), 2, 2).unwrap();
    let train = builtin_training_set(ToyLanguage::L2, false);
    let corpus = EncodedCorpus::new(&rs, &train).unwrap();
    let mut steps = 0;
    for seed in 0..100u64 {
        let scheme = if seed % 2 == 0 { Scheme::Mlgd } else { Scheme::Pge };
        let mut cfg = GaConfig::for_scheme(scheme, seed);
        cfg.population_size = 12;
        cfg.mutation_prob = 0.05;
        cfg.parallel = false;
        let mut r = cfg.rng();
        let mut state = GaState::new(evo::init_population(&cfg, &rs, &mut r), &cfg, &rs, &corpus).unwrap();
        let mut best = state.best().raw_fitness;
        for _ in 0..100 {
            evo::step_generation(&mut state, &cfg, &rs, &corpus, &mut r).unwrap();
            steps += 1;
            let now = state.best().raw_fitness;
            if now < best || !state.population.iter().all(|i: &Individual| in_range(&i.genome)) {
                *failures.get_mut("monotone").unwrap() += 1;
            }
            best = now;
        }
    }
    let total: usize = failures.values().sum();
    outcome(
        total == 0,
        format!("operator properties: {TRIALS} trials per operator, {steps} generation steps, failures {failures:?}"),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let mut results: Vec<(u32, Outcome)> = vec![
        (1, inside_matches_oracle()),
        (2, properness()),
        (3, perplexity_anchor()),
    ];
    let runs = l1_runs();
    results.push((4, mlgd_success(&runs)));
    results.push((5, pge_direction(&runs)));
    results.push((6, classifier_quality(&runs)));
    results.push((7, grammar_sizes(&runs)));
    results.push((8, auroc_oracle()));
    results.push((9, determinism()));
    results.push((10, operator_properties()));

    let mut failed = 0;
    for (n, o) in &results {
        println!("criterion {n:>2}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
