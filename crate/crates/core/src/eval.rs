//! Grammar evaluation: sentence scores, AuROC, k-fold plans, MLE by
//! derivation counting, and the report bundle.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{Corpus, Pcfg, ProbabilityAssignment, Rhs, RuleSet, Sentence, VarId};
use crate::inside::{CompiledGrammar, EncodedCorpus, InsideChart};

/// Classification score given to a sentence with no parse.
pub const SCORE_FLOOR: f64 = f64::MIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// Log-probability divided by sentence length (nats per letter).
    #[default]
    Normalized,
    /// Plain log-probability.
    Raw,
}

impl std::str::FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(ScoreMode::Normalized),
            "raw" => Ok(ScoreMode::Raw),
            _ => Err(Error::invalid_arg(format!("unknown score mode {s:?} (normalized | raw)"))),
        }
    }
}

fn score_from_log_prob(lp: f64, len: usize, mode: ScoreMode) -> f64 {
    if lp == f64::NEG_INFINITY {
        return SCORE_FLOOR;
    }
    match mode {
        ScoreMode::Normalized => lp / len as f64,
        ScoreMode::Raw => lp,
    }
}

pub fn sentence_score(g: &Pcfg, x: &Sentence, mode: ScoreMode) -> Result<f64> {
    let lp = crate::inside::inside_log_probability(g, x)?;
    Ok(score_from_log_prob(lp, x.len(), mode))
}

fn corpus_scores(grammar: &CompiledGrammar, rs: &RuleSet, corpus: &[Sentence], mode: ScoreMode) -> Result<Vec<f64>> {
    let mut chart = InsideChart::default();
    corpus
        .iter()
        .map(|x| {
            let enc = rs.alphabet().encode(x)?;
            Ok(score_from_log_prob(grammar.log_prob(&enc, &mut chart), x.len(), mode))
        })
        .collect()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half, via midranks (Mann–Whitney U).
pub fn auroc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid_arg("AuROC needs non-empty positive and negative scores"));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::invalid_arg("AuROC scores contain NaN"));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of positive ranks, doubled so midranks stay integral.
    let mut rank_sum2: u64 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // Ranks i+1..=j share the midrank (i+1+j)/2.
        let n_pos = all[i..j].iter().filter(|e| e.1).count() as u64;
        rank_sum2 += n_pos * (i as u64 + 1 + j as u64);
        i = j;
    }
    let np = pos.len() as u64;
    let nn = neg.len() as u64;
    // U = R − np(np+1)/2, all doubled.
    let u2 = rank_sum2 - np * (np + 1);
    Ok((u2 as f64 / 2.0) / (np * nn) as f64)
}

/// Assignment of corpus indices to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold id per corpus index.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// Indices per fold, ascending.
    pub fn folds(&self) -> Vec<Vec<usize>> {
        let mut folds = vec![Vec::new(); self.k];
        for (i, &f) in self.assignments.iter().enumerate() {
            folds[f].push(i);
        }
        folds
    }

    /// `(train, test)` corpora for `fold`.
    pub fn split(&self, corpus: &[Sentence], fold: usize) -> (Corpus, Corpus) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (x, &f) in corpus.iter().zip(&self.assignments) {
            if f == fold {
                test.push(x.clone());
            } else {
                train.push(x.clone());
            }
        }
        (train, test)
    }
}

/// Random partition of `n` items into `k` folds whose sizes differ by at most one.
pub fn kfold_split<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid_arg("k-fold split needs k ≥ 2"));
    }
    if k > n {
        return Err(Error::invalid_arg(format!("cannot split {n} sentences into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments })
}

/// Up to two derivations per (variable, span); each is a list of rule indices.
type Derivations = Vec<Vec<usize>>;

struct DerivationEnumerator<'a> {
    rs: &'a RuleSet,
    x: &'a [usize],
    memo: HashMap<(VarId, usize, usize), Derivations>,
}

impl DerivationEnumerator<'_> {
    const CAP: usize = 2;

    fn derive(&mut self, v: VarId, i: usize, j: usize) -> Derivations {
        if let Some(d) = self.memo.get(&(v, i, j)) {
            return d.clone();
        }
        let mut out: Derivations = Vec::new();
        for r in self.rs.group(v) {
            match self.rs.rules()[r].rhs {
                Rhs::Terminal(s) => {
                    if j == i + 1 && self.x[i] == s {
                        out.push(vec![r]);
                    }
                }
                Rhs::Pair(c, d) => {
                    for k in i + 1..j {
                        let left = self.derive(c, i, k);
                        if left.is_empty() {
                            continue;
                        }
                        let right = self.derive(d, k, j);
                        for l in &left {
                            for rt in &right {
                                let mut tree = Vec::with_capacity(1 + l.len() + rt.len());
                                tree.push(r);
                                tree.extend_from_slice(l);
                                tree.extend_from_slice(rt);
                                out.push(tree);
                                if out.len() >= Self::CAP {
                                    self.memo.insert((v, i, j), out.clone());
                                    return out;
                                }
                            }
                        }
                    }
                }
            }
            if out.len() >= Self::CAP {
                break;
            }
        }
        self.memo.insert((v, i, j), out.clone());
        out
    }
}

/// Rule indices used by the unique derivation of `x`, or a precondition
/// error when `x` has none or several.
pub fn unique_derivation(rs: &RuleSet, x: &Sentence) -> Result<Vec<usize>> {
    let enc = rs.alphabet().encode(x)?;
    let mut e = DerivationEnumerator {
        rs,
        x: &enc,
        memo: HashMap::new(),
    };
    let mut found = e.derive(rs.vars().start(), 0, enc.len());
    match found.len() {
        0 => Err(Error::PreconditionViolation(format!("sentence {x} has no derivation"))),
        1 => Ok(found.pop().unwrap()),
        _ => Err(Error::PreconditionViolation(format!("sentence {x} is ambiguous"))),
    }
}

/// Relative rule-usage frequencies over the unique derivations of `corpus`.
/// Groups never used become uniform.
pub fn mle_theta_by_derivation_counting(rs: &RuleSet, corpus: &[Sentence]) -> Result<ProbabilityAssignment> {
    let mut counts = vec![0u64; rs.len()];
    for x in corpus {
        for r in unique_derivation(rs, x)? {
            counts[r] += 1;
        }
    }
    let mut probs = vec![0.0; rs.len()];
    for g in rs.groups() {
        let total: u64 = counts[g.clone()].iter().sum();
        for i in g.clone() {
            probs[i] = if total == 0 {
                1.0 / g.len() as f64
            } else {
                counts[i] as f64 / total as f64
            };
        }
    }
    ProbabilityAssignment::new(probs, rs, 1e-12)
}

/// Training corpus plus optional positive and negative test sets (empty
/// when absent).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledSample {
    pub train: Corpus,
    pub test_pos: Corpus,
    pub test_neg: Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `null` when some training sentence has no parse.
    pub perplexity_nats_per_letter: Option<f64>,
    /// `null` unless both test sets are present.
    pub auroc: Option<f64>,
    /// Threshold (as written) → number of rules with θ above it.
    pub active_rules: BTreeMap<String, usize>,
    pub scores_pos: Vec<f64>,
    pub scores_neg: Vec<f64>,
    pub fold: Option<usize>,
}

pub fn threshold_key(t: f64) -> String {
    format!("{t}")
}

pub fn evaluate_grammar(
    g: &Pcfg,
    sample: &LabeledSample,
    thresholds: &[f64],
    mode: ScoreMode,
) -> Result<EvalReport> {
    if let Some(t) = thresholds.iter().find(|t| !(0.0..1.0).contains(*t)) {
        return Err(Error::invalid_arg(format!("threshold {t} outside [0, 1)")));
    }
    let rs = g.ruleset();
    let compiled = CompiledGrammar::from_pcfg(g);
    let perplexity = if sample.train.is_empty() {
        None
    } else {
        Some(EncodedCorpus::new(rs, &sample.train)?.perplexity_per_letter(&compiled)).filter(|p| p.is_finite())
    };
    let scores_pos = corpus_scores(&compiled, rs, &sample.test_pos, mode)?;
    let scores_neg = corpus_scores(&compiled, rs, &sample.test_neg, mode)?;
    let auroc = if scores_pos.is_empty() || scores_neg.is_empty() {
        None
    } else {
        Some(auroc(&scores_pos, &scores_neg)?)
    };
    let active_rules = thresholds
        .iter()
        .map(|&t| (threshold_key(t), g.theta().active_rule_count(t)))
        .collect();
    Ok(EvalReport {
        perplexity_nats_per_letter: perplexity,
        auroc,
        active_rules,
        scores_pos,
        scores_neg,
        fold: None,
    })
}
