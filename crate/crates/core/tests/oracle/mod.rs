//! Brute-force reference for sentence probabilities: sums the probability of
//! every leftmost derivation of a sentence.

#![allow(dead_code)]

use std::sync::Arc;

use pcfg_ga::grammar::Rhs;
use pcfg_ga::{Alphabet, Genome, Pcfg, Rule, RuleSet, Sentence, VarId, VariableSet};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random bipartite CNF grammar with at most `max_vars` variables and
/// `max_rules` rules. Some rules may get probability zero.
pub fn random_grammar<R: Rng>(rng: &mut R, alphabet: &Alphabet, max_vars: usize, max_rules: usize) -> Pcfg {
    let n_lex = rng.gen_range(1..=(max_vars - 1).min(2));
    let n_struct = rng.gen_range(1..=max_vars - n_lex);
    let vars = VariableSet::with_counts(n_lex, n_struct).unwrap();
    let mut rules = Vec::new();
    for v in vars.lexical() {
        let k = rng.gen_range(1..=alphabet.len().min(3));
        let symbols = rand::seq::index::sample(rng, alphabet.len(), k);
        rules.extend(symbols.iter().map(|s| Rule::lexical(v, s)));
    }
    let all: Vec<VarId> = vars.all().collect();
    let budget = (max_rules - rules.len()) / n_struct;
    for v in vars.structural() {
        let mut pairs: Vec<(VarId, VarId)> = all.iter().flat_map(|&l| all.iter().map(move |&r| (l, r))).collect();
        pairs.shuffle(rng);
        let k = rng.gen_range(1..=budget.min(pairs.len()));
        rules.extend(pairs[..k].iter().map(|&(l, r)| Rule::structural(v, l, r)));
    }
    let rs = RuleSet::new(alphabet.clone(), vars, rules).unwrap();
    let genes = (0..rs.len())
        .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    Pcfg::from_genome(Arc::new(rs), &Genome::new(genes).unwrap()).unwrap()
}

/// P(x) by enumerating leftmost derivations. Every variable yields at least
/// one letter, which bounds the search.
pub fn derivation_probability(g: &Pcfg, x: &Sentence) -> f64 {
    let rs = g.ruleset();
    let x = rs.alphabet().encode(x).unwrap();
    let mut stack = vec![rs.vars().start()];
    expand(g, &x, 0, &mut stack)
}

fn expand(g: &Pcfg, x: &[usize], pos: usize, stack: &mut Vec<VarId>) -> f64 {
    let Some(v) = stack.pop() else {
        return if pos == x.len() { 1.0 } else { 0.0 };
    };
    let rs = g.ruleset();
    let theta = g.theta().probs();
    let mut total = 0.0;
    for i in rs.group(v) {
        let p = theta[i];
        if p == 0.0 {
            continue;
        }
        match rs.rules()[i].rhs {
            Rhs::Terminal(a) => {
                if pos < x.len() && x[pos] == a {
                    total += p * expand(g, x, pos + 1, stack);
                }
            }
            Rhs::Pair(l, r) => {
                if pos + stack.len() + 2 <= x.len() {
                    stack.push(r);
                    stack.push(l);
                    total += p * expand(g, x, pos, stack);
                    stack.pop();
                    stack.pop();
                }
            }
        }
    }
    stack.push(v);
    total
}

/// Every string over the alphabet with length in `1..=max_len`.
pub fn all_strings(alphabet: &Alphabet, max_len: usize) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<char>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                alphabet.symbols().iter().map(move |&c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().map(|s| Sentence::new(s.clone()).unwrap()));
    }
    out
}

/// Uniformly random string of the given length.
pub fn random_string<R: Rng>(rng: &mut R, alphabet: &Alphabet, len: usize) -> Sentence {
    Sentence::new((0..len).map(|_| alphabet.symbol(rng.gen_range(0..alphabet.len()))).collect()).unwrap()
}
