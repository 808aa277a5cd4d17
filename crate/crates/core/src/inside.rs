//! Inside algorithm over bipartite-CNF grammars.
//!
//! The chart stores natural-log probabilities. Each span is accumulated in
//! linear space relative to a per-cell scale (the running maximum of the
//! child log-maxima), so a cell never underflows no matter how long the
//! sentence is, while the inner rule loop stays free of `exp`/`ln`.

use crate::error::{Error, Result};
use crate::grammar::{Corpus, Pcfg, Rhs, RuleSet, Sentence};

/// Per-sentence log-probability used in place of a no-parse inside the GA
/// objective.
pub const LOG_PROB_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy)]
struct BinaryRule {
    lhs: u32,
    left: u32,
    right: u32,
    prob: f64,
}

/// Rules with nonzero probability, laid out for the Inside recursion.
#[derive(Debug, Clone)]
pub struct CompiledGrammar {
    n_vars: usize,
    start: usize,
    /// Per terminal symbol: `(lexical variable, ln θ)`.
    lexical: Vec<Vec<(u32, f64)>>,
    binary: Vec<BinaryRule>,
}

impl CompiledGrammar {
    /// `theta` must be aligned with `rs`.
    pub fn new(rs: &RuleSet, theta: &[f64]) -> Self {
        debug_assert_eq!(rs.len(), theta.len());
        let mut lexical = vec![Vec::new(); rs.alphabet().len()];
        let mut binary = Vec::new();
        for (rule, &p) in rs.rules().iter().zip(theta) {
            if p <= 0.0 {
                continue;
            }
            match rule.rhs {
                Rhs::Terminal(s) => lexical[s].push((rule.lhs.0, p.ln())),
                Rhs::Pair(c, d) => binary.push(BinaryRule {
                    lhs: rule.lhs.0,
                    left: c.0,
                    right: d.0,
                    prob: p,
                }),
            }
        }
        binary.sort_by_key(|r| (r.left, r.right, r.lhs));
        CompiledGrammar {
            n_vars: rs.vars().len(),
            start: rs.vars().start().index(),
            lexical,
            binary,
        }
    }

    pub fn from_pcfg(g: &Pcfg) -> Self {
        CompiledGrammar::new(g.ruleset(), g.theta().probs())
    }

    /// Fills `chart` for `x` (symbol indices) and returns the start-symbol
    /// log-probability of the whole sentence, `-inf` for no parse.
    pub fn log_prob(&self, x: &[usize], chart: &mut InsideChart) -> f64 {
        let n = x.len();
        if n == 0 {
            return f64::NEG_INFINITY;
        }
        let nv = self.n_vars;
        chart.reset(n, nv);
        for (i, &sym) in x.iter().enumerate() {
            let cell = chart.cell_mut(i, 1);
            for &(v, lp) in &self.lexical[sym] {
                cell[v as usize] = lp;
            }
        }
        let mut left_lin = vec![0.0; nv];
        let mut right_lin = vec![0.0; nv];
        let mut acc = vec![0.0; nv];
        let mut part = vec![0.0; nv];
        for len in 2..=n {
            for i in 0..=n - len {
                acc.fill(0.0);
                let mut scale = f64::NEG_INFINITY;
                for k in 1..len {
                    let left_max = exp_relative(chart.cell(i, k), &mut left_lin);
                    if left_max == f64::NEG_INFINITY {
                        continue;
                    }
                    let right_max = exp_relative(chart.cell(i + k, len - k), &mut right_lin);
                    if right_max == f64::NEG_INFINITY {
                        continue;
                    }
                    part.fill(0.0);
                    let mut any = false;
                    for r in &self.binary {
                        let l = left_lin[r.left as usize];
                        if l == 0.0 {
                            continue;
                        }
                        let rr = right_lin[r.right as usize];
                        if rr == 0.0 {
                            continue;
                        }
                        part[r.lhs as usize] += r.prob * l * rr;
                        any = true;
                    }
                    if !any {
                        continue;
                    }
                    let split_scale = left_max + right_max;
                    if split_scale > scale {
                        if scale > f64::NEG_INFINITY {
                            let shrink = (scale - split_scale).exp();
                            acc.iter_mut().for_each(|a| *a *= shrink);
                        }
                        scale = split_scale;
                        acc.iter_mut().zip(&part).for_each(|(a, p)| *a += p);
                    } else {
                        let grow = (split_scale - scale).exp();
                        acc.iter_mut().zip(&part).for_each(|(a, p)| *a += p * grow);
                    }
                }
                if scale == f64::NEG_INFINITY {
                    continue;
                }
                let cell = chart.cell_mut(i, len);
                for (c, &a) in cell.iter_mut().zip(&acc) {
                    if a > 0.0 {
                        *c = a.ln() + scale;
                    }
                }
            }
        }
        chart.cell(0, n)[self.start]
    }
}

/// Writes `exp(v - max)` into `out` and returns `max` (`-inf` if the cell
/// is empty).
fn exp_relative(cell: &[f64], out: &mut [f64]) -> f64 {
    let max = cell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    for (o, &v) in out.iter_mut().zip(cell) {
        *o = (v - max).exp();
    }
    max
}

/// Inside table: log-probability per `(span_start, span_length, variable)`,
/// `-inf` where the variable cannot derive the span.
#[derive(Debug, Clone, Default)]
pub struct InsideChart {
    n: usize,
    n_vars: usize,
    cells: Vec<f64>,
}

impl InsideChart {
    fn reset(&mut self, n: usize, n_vars: usize) {
        self.n = n;
        self.n_vars = n_vars;
        self.cells.clear();
        self.cells.resize(n * n * n_vars, f64::NEG_INFINITY);
    }

    #[inline]
    fn offset(&self, start: usize, len: usize) -> usize {
        debug_assert!(len >= 1 && start + len <= self.n);
        (start * self.n + (len - 1)) * self.n_vars
    }

    pub fn cell(&self, start: usize, len: usize) -> &[f64] {
        let o = self.offset(start, len);
        &self.cells[o..o + self.n_vars]
    }

    fn cell_mut(&mut self, start: usize, len: usize) -> &mut [f64] {
        let o = self.offset(start, len);
        &mut self.cells[o..o + self.n_vars]
    }

    pub fn sentence_len(&self) -> usize {
        self.n
    }
}

/// Full chart for `x` under `g`.
pub fn inside_chart(g: &Pcfg, x: &Sentence) -> Result<InsideChart> {
    let encoded = g.ruleset().alphabet().encode(x)?;
    let mut chart = InsideChart::default();
    CompiledGrammar::from_pcfg(g).log_prob(&encoded, &mut chart);
    Ok(chart)
}

/// `ln P(x | g)` in nats; `f64::NEG_INFINITY` when `x` has no derivation.
pub fn inside_log_probability(g: &Pcfg, x: &Sentence) -> Result<f64> {
    let encoded = g.ruleset().alphabet().encode(x)?;
    let mut chart = InsideChart::default();
    Ok(CompiledGrammar::from_pcfg(g).log_prob(&encoded, &mut chart))
}

/// A corpus mapped onto alphabet indices once, for repeated scoring.
#[derive(Debug, Clone)]
pub struct EncodedCorpus {
    sentences: Vec<Vec<usize>>,
    letters: usize,
}

impl EncodedCorpus {
    pub fn new(rs: &RuleSet, corpus: &[Sentence]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::invalid_arg("corpus must not be empty"));
        }
        let sentences = corpus
            .iter()
            .map(|s| rs.alphabet().encode(s))
            .collect::<Result<Vec<_>>>()?;
        let letters = sentences.iter().map(Vec::len).sum();
        Ok(EncodedCorpus { sentences, letters })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn sentences(&self) -> &[Vec<usize>] {
        &self.sentences
    }

    /// Per-sentence log-probabilities (`-inf` for no parse).
    pub fn log_probs(&self, grammar: &CompiledGrammar) -> Vec<f64> {
        let mut chart = InsideChart::default();
        self.sentences
            .iter()
            .map(|x| grammar.log_prob(x, &mut chart))
            .collect()
    }

    /// Mean of per-sentence log-probabilities, each floored at
    /// [`LOG_PROB_FLOOR`].
    pub fn mean_log_likelihood(&self, grammar: &CompiledGrammar) -> f64 {
        let mut chart = InsideChart::default();
        let total: f64 = self
            .sentences
            .iter()
            .map(|x| grammar.log_prob(x, &mut chart).max(LOG_PROB_FLOOR))
            .sum();
        total / self.sentences.len() as f64
    }

    /// Negative total log-probability per terminal symbol; `+inf` if any
    /// sentence has no parse.
    pub fn perplexity_per_letter(&self, grammar: &CompiledGrammar) -> f64 {
        let total: f64 = self.log_probs(grammar).iter().sum();
        -total / self.letters as f64
    }
}

/// The GA objective: mean floored log-likelihood of `corpus`, in nats.
pub fn corpus_mean_log_likelihood(g: &Pcfg, corpus: &Corpus) -> Result<f64> {
    let enc = EncodedCorpus::new(g.ruleset(), corpus)?;
    Ok(enc.mean_log_likelihood(&CompiledGrammar::from_pcfg(g)))
}

/// `-(Σ ln P(x)) / (Σ |x|)` in nats per letter, `+inf` if some sentence
/// cannot be derived.
pub fn perplexity_per_letter(g: &Pcfg, corpus: &Corpus) -> Result<f64> {
    let enc = EncodedCorpus::new(g.ruleset(), corpus)?;
    Ok(enc.perplexity_per_letter(&CompiledGrammar::from_pcfg(g)))
}
