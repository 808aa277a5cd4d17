//! Alphabets, variables, bipartite-CNF rule sets and proper probability
//! assignments.
//!
//! Variables are small integer ids. Lexical variables always come first,
//! structural variables after them, and the start symbol is structural.
//! Rules are kept sorted by `(lhs, rhs)` so that rule index `i` and gene
//! index `i` of a [`Genome`] always refer to the same production, and all
//! rules rewriting one variable form a contiguous group.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance accepted when loading probabilities from outside (dumps, user input).
pub const LOAD_TOLERANCE: f64 = 1e-6;

const LEXICAL_NAMES: &str = "ABCDEFGHIJKLMNOPQR";
const STRUCTURAL_NAMES: &str = "STUVWXYZ";

/// Ordered set of single-character terminal symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::invalid_arg("alphabet must not be empty"));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, &c) in symbols.iter().enumerate() {
            if c.is_whitespace() || c.is_control() {
                return Err(Error::invalid_arg(format!(
                    "alphabet symbol {c:?} is whitespace or control"
                )));
            }
            if index.insert(c, i).is_some() {
                return Err(Error::invalid_arg(format!("duplicate alphabet symbol {c:?}")));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// The three-letter alphabet of the toy languages.
    pub fn abc() -> Self {
        Alphabet::new("abc".chars()).expect("valid alphabet")
    }

    /// The 20 one-letter amino-acid codes.
    pub fn amino_acids() -> Self {
        Alphabet::new("ACDEFGHIKLMNPQRSTVWY".chars()).expect("valid alphabet")
    }

    /// Alphabet of all distinct characters in the given sentences, sorted.
    pub fn from_corpus<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Result<Self> {
        let mut chars: Vec<char> = sentences
            .into_iter()
            .flat_map(|s| s.symbols().iter().copied())
            .collect();
        chars.sort_unstable();
        chars.dedup();
        Alphabet::new(chars)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> char {
        self.symbols[i]
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    /// Maps a sentence onto symbol indices.
    pub fn encode(&self, sentence: &Sentence) -> Result<Vec<usize>> {
        sentence
            .symbols()
            .iter()
            .map(|&c| {
                self.index_of(c).ok_or_else(|| {
                    Error::invalid_arg(format!("symbol {c:?} in {sentence} is not in the alphabet"))
                })
            })
            .collect()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.symbols {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A non-empty string of terminal symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sentence(Vec<char>);

impl Sentence {
    pub fn new(symbols: Vec<char>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid_arg("sentence must not be empty"));
        }
        Ok(Sentence(symbols))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Sentence::new(text.chars().collect())
    }

    pub fn symbols(&self) -> &[char] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// An ordered list of sentences.
pub type Corpus = Vec<Sentence>;

/// Builds a corpus from string slices, e.g. `corpus(&["ab", "aab"])`.
pub fn corpus(texts: &[&str]) -> Result<Corpus> {
    texts.iter().map(|t| Sentence::parse(t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Lexical,
    Structural,
}

/// Lexical and structural variables plus the start symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSet {
    names: Vec<String>,
    n_lexical: usize,
    start: VarId,
}

impl VariableSet {
    /// Ids `0..lexical.len()` are lexical, the rest structural.
    pub fn new(lexical: Vec<String>, structural: Vec<String>, start: &str) -> Result<Self> {
        if lexical.is_empty() || structural.is_empty() {
            return Err(Error::invalid_arg(
                "need at least one lexical and one structural variable",
            ));
        }
        let n_lexical = lexical.len();
        let mut names = lexical;
        names.extend(structural);
        for (i, name) in names.iter().enumerate() {
            if name.is_empty()
                || name.chars().any(char::is_whitespace)
                || name.starts_with('\'')
                || name.starts_with('#')
            {
                return Err(Error::invalid_arg(format!("bad variable name {name:?}")));
            }
            if names[..i].contains(name) {
                return Err(Error::invalid_arg(format!("duplicate variable name {name:?}")));
            }
        }
        let start_idx = names
            .iter()
            .position(|n| n == start)
            .ok_or_else(|| Error::invalid_arg(format!("unknown start symbol {start:?}")))?;
        if start_idx < n_lexical {
            return Err(Error::invalid_arg(format!(
                "start symbol {start:?} must be structural"
            )));
        }
        Ok(VariableSet {
            names,
            n_lexical,
            start: VarId(start_idx as u32),
        })
    }

    /// Default naming: lexical `A, B, C, ...`, structural `S, T, U, ...`;
    /// start is the first structural variable.
    pub fn with_counts(n_lex: usize, n_struct: usize) -> Result<Self> {
        let name = |pool: &str, prefix: char, i: usize| {
            pool.chars()
                .nth(i)
                .map(String::from)
                .unwrap_or_else(|| format!("{prefix}{i}"))
        };
        let lexical = (0..n_lex).map(|i| name(LEXICAL_NAMES, 'L', i)).collect();
        let structural: Vec<String> = (0..n_struct).map(|i| name(STRUCTURAL_NAMES, 'N', i)).collect();
        let start = structural.first().cloned().unwrap_or_default();
        VariableSet::new(lexical, structural, &start)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn n_lexical(&self) -> usize {
        self.n_lexical
    }

    pub fn n_structural(&self) -> usize {
        self.names.len() - self.n_lexical
    }

    pub fn start(&self) -> VarId {
        self.start
    }

    pub fn kind(&self, v: VarId) -> VarKind {
        if v.index() < self.n_lexical {
            VarKind::Lexical
        } else {
            VarKind::Structural
        }
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    pub fn id_of(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(|i| VarId(i as u32))
    }

    pub fn lexical(&self) -> impl Iterator<Item = VarId> {
        (0..self.n_lexical as u32).map(VarId)
    }

    pub fn structural(&self) -> impl Iterator<Item = VarId> {
        (self.n_lexical as u32..self.names.len() as u32).map(VarId)
    }

    pub fn all(&self) -> impl Iterator<Item = VarId> {
        (0..self.names.len() as u32).map(VarId)
    }

    pub fn lexical_names(&self) -> &[String] {
        &self.names[..self.n_lexical]
    }

    pub fn structural_names(&self) -> &[String] {
        &self.names[self.n_lexical..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rhs {
    /// Index into the alphabet.
    Terminal(usize),
    Pair(VarId, VarId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub lhs: VarId,
    pub rhs: Rhs,
}

impl Rule {
    pub fn lexical(lhs: VarId, symbol: usize) -> Self {
        Rule {
            lhs,
            rhs: Rhs::Terminal(symbol),
        }
    }

    pub fn structural(lhs: VarId, left: VarId, right: VarId) -> Self {
        Rule {
            lhs,
            rhs: Rhs::Pair(left, right),
        }
    }

    pub fn is_lexical(&self) -> bool {
        matches!(self.rhs, Rhs::Terminal(_))
    }
}

/// A fixed set of bipartite-CNF rules in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    alphabet: Alphabet,
    vars: VariableSet,
    rules: Vec<Rule>,
    /// Rule index range per variable id.
    groups: Vec<Range<usize>>,
}

impl RuleSet {
    /// Validates and sorts `rules` into canonical order.
    pub fn new(alphabet: Alphabet, vars: VariableSet, mut rules: Vec<Rule>) -> Result<Self> {
        let n_vars = vars.len();
        for r in &rules {
            if r.lhs.index() >= n_vars {
                return Err(Error::invalid_arg(format!("rule lhs {:?} out of range", r.lhs)));
            }
            match r.rhs {
                Rhs::Terminal(s) => {
                    if vars.kind(r.lhs) != VarKind::Lexical {
                        return Err(Error::invalid_arg(format!(
                            "lexical rule headed by structural variable {}",
                            vars.name(r.lhs)
                        )));
                    }
                    if s >= alphabet.len() {
                        return Err(Error::invalid_arg(format!("terminal index {s} out of range")));
                    }
                }
                Rhs::Pair(c, d) => {
                    if vars.kind(r.lhs) != VarKind::Structural {
                        return Err(Error::invalid_arg(format!(
                            "structural rule headed by lexical variable {}",
                            vars.name(r.lhs)
                        )));
                    }
                    if c.index() >= n_vars || d.index() >= n_vars {
                        return Err(Error::invalid_arg("structural rule child out of range"));
                    }
                }
            }
        }
        rules.sort_unstable();
        if let Some(w) = rules.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid_arg(format!(
                "duplicate rule {}",
                format_rule(&alphabet, &vars, &w[0])
            )));
        }
        let mut groups = vec![0..0; n_vars];
        let mut i = 0;
        while i < rules.len() {
            let lhs = rules[i].lhs;
            let start = i;
            while i < rules.len() && rules[i].lhs == lhs {
                i += 1;
            }
            groups[lhs.index()] = start..i;
        }
        if let Some(v) = vars.all().find(|v| groups[v.index()].is_empty()) {
            return Err(Error::invalid_arg(format!(
                "variable {} heads no rule",
                vars.name(v)
            )));
        }
        Ok(RuleSet {
            alphabet,
            vars,
            rules,
            groups,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn vars(&self) -> &VariableSet {
        &self.vars
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Contiguous rule-index range of the rules rewriting `v`.
    pub fn group(&self, v: VarId) -> Range<usize> {
        self.groups[v.index()].clone()
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn n_lexical_rules(&self) -> usize {
        self.rules.iter().filter(|r| r.is_lexical()).count()
    }

    pub fn n_structural_rules(&self) -> usize {
        self.len() - self.n_lexical_rules()
    }

    pub fn index_of(&self, rule: &Rule) -> Option<usize> {
        self.rules.binary_search(rule).ok()
    }

    pub fn format_rule(&self, i: usize) -> String {
        format_rule(&self.alphabet, &self.vars, &self.rules[i])
    }

    /// Parses `A -> 'a'` or `S -> T C` into a rule index.
    pub fn find_rule(&self, text: &str) -> Option<usize> {
        let rule = parse_rule(&self.alphabet, &self.vars, text).ok()?;
        self.index_of(&rule)
    }
}

fn format_rule(alphabet: &Alphabet, vars: &VariableSet, rule: &Rule) -> String {
    match rule.rhs {
        Rhs::Terminal(s) => format!("{} -> '{}'", vars.name(rule.lhs), alphabet.symbol(s)),
        Rhs::Pair(c, d) => format!("{} -> {} {}", vars.name(rule.lhs), vars.name(c), vars.name(d)),
    }
}

fn parse_rule(alphabet: &Alphabet, vars: &VariableSet, text: &str) -> Result<Rule> {
    let (lhs, rhs) = text
        .split_once("->")
        .ok_or_else(|| Error::invalid_input(format!("rule without '->': {text:?}")))?;
    let var = |name: &str| {
        vars.id_of(name)
            .ok_or_else(|| Error::invalid_input(format!("unknown variable {name:?} in {text:?}")))
    };
    let lhs = var(lhs.trim())?;
    let rhs = rhs.trim();
    if let Some(quoted) = rhs.strip_prefix('\'') {
        let mut chars = quoted.chars();
        let (Some(c), Some('\''), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::invalid_input(format!("bad terminal in {text:?}")));
        };
        let s = alphabet
            .index_of(c)
            .ok_or_else(|| Error::invalid_input(format!("unknown terminal {c:?} in {text:?}")))?;
        Ok(Rule::lexical(lhs, s))
    } else {
        let parts: Vec<&str> = rhs.split_whitespace().collect();
        let [c, d] = parts[..] else {
            return Err(Error::invalid_input(format!("bad structural rhs in {text:?}")));
        };
        Ok(Rule::structural(lhs, var(c)?, var(d)?))
    }
}

/// All bipartite-CNF rules over `n_lex` lexical and `n_struct` structural
/// variables: `n_lex·|Σ| + n_struct·(n_lex+n_struct)²` rules.
pub fn build_covering_ruleset(alphabet: &Alphabet, n_lex: usize, n_struct: usize) -> Result<RuleSet> {
    if n_lex == 0 || n_struct == 0 {
        return Err(Error::invalid_arg(format!(
            "covering set needs n_lex ≥ 1 and n_struct ≥ 1, got {n_lex}+{n_struct}"
        )));
    }
    let vars = VariableSet::with_counts(n_lex, n_struct)?;
    let mut rules = Vec::with_capacity(n_lex * alphabet.len() + n_struct * (n_lex + n_struct).pow(2));
    for a in vars.lexical() {
        for s in 0..alphabet.len() {
            rules.push(Rule::lexical(a, s));
        }
    }
    for b in vars.structural() {
        for c in vars.all() {
            for d in vars.all() {
                rules.push(Rule::structural(b, c, d));
            }
        }
    }
    RuleSet::new(alphabet.clone(), vars, rules)
}

/// GA individual: one gene in `[0, 1]` per rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(Vec<f64>);

impl Genome {
    pub fn new(genes: Vec<f64>) -> Result<Self> {
        if let Some((i, g)) = genes.iter().enumerate().find(|(_, g)| !(0.0..=1.0).contains(*g)) {
            return Err(Error::invalid_arg(format!("gene {i} = {g} outside [0, 1]")));
        }
        Ok(Genome(genes))
    }

    /// Caller guarantees every gene is in `[0, 1]`.
    pub(crate) fn from_vec_unchecked(genes: Vec<f64>) -> Self {
        debug_assert!(genes.iter().all(|g| (0.0..=1.0).contains(g)));
        Genome(genes)
    }

    pub fn genes(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn genes_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Rule probabilities, index-aligned with a [`RuleSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityAssignment(Vec<f64>);

impl ProbabilityAssignment {
    /// Checks alignment, range, and that every group sums to 1 within `tolerance`.
    pub fn new(probs: Vec<f64>, rs: &RuleSet, tolerance: f64) -> Result<Self> {
        if probs.len() != rs.len() {
            return Err(Error::invalid_arg(format!(
                "{} probabilities for {} rules",
                probs.len(),
                rs.len()
            )));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid_input(format!(
                "probability {p} of rule {} outside [0, 1]",
                rs.format_rule(i)
            )));
        }
        for v in rs.vars().all() {
            let sum: f64 = probs[rs.group(v)].iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::invalid_input(format!(
                    "rules of {} sum to {sum}, not 1",
                    rs.vars().name(v)
                )));
            }
        }
        Ok(ProbabilityAssignment(probs))
    }

    /// Uniform distribution within every group.
    pub fn uniform(rs: &RuleSet) -> Self {
        let mut probs = vec![0.0; rs.len()];
        for g in rs.groups() {
            let p = 1.0 / g.len() as f64;
            probs[g.clone()].fill(p);
        }
        ProbabilityAssignment(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of rules with probability strictly above `threshold`.
    pub fn active_rule_count(&self, threshold: f64) -> usize {
        self.0.iter().filter(|&&p| p > threshold).count()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.0
    }
}

/// Normalizes `genes` group-wise into `out`. A group whose genes sum to
/// zero becomes uniform.
pub fn normalize_into(genes: &[f64], rs: &RuleSet, out: &mut Vec<f64>) {
    out.clear();
    out.resize(genes.len(), 0.0);
    for g in rs.groups() {
        let sum: f64 = genes[g.clone()].iter().sum();
        if sum > 0.0 {
            for i in g.clone() {
                out[i] = genes[i] / sum;
            }
        } else {
            out[g.clone()].fill(1.0 / g.len() as f64);
        }
    }
}

pub fn normalize_to_proper(z: &Genome, rs: &RuleSet) -> Result<ProbabilityAssignment> {
    if z.len() != rs.len() {
        return Err(Error::invalid_arg(format!(
            "genome has {} genes, rule set has {} rules",
            z.len(),
            rs.len()
        )));
    }
    let mut out = Vec::with_capacity(z.len());
    normalize_into(z.genes(), rs, &mut out);
    Ok(ProbabilityAssignment(out))
}

/// A rule set together with a proper probability assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Pcfg {
    ruleset: Arc<RuleSet>,
    theta: ProbabilityAssignment,
}

impl Pcfg {
    pub fn new(ruleset: Arc<RuleSet>, theta: ProbabilityAssignment) -> Result<Self> {
        // Re-validate: the assignment may have been built against another rule set.
        let theta = ProbabilityAssignment::new(theta.0, &ruleset, LOAD_TOLERANCE)?;
        Ok(Pcfg { ruleset, theta })
    }

    pub fn from_genome(ruleset: Arc<RuleSet>, z: &Genome) -> Result<Self> {
        let theta = normalize_to_proper(z, &ruleset)?;
        Ok(Pcfg { ruleset, theta })
    }

    pub fn uniform(ruleset: Arc<RuleSet>) -> Self {
        let theta = ProbabilityAssignment::uniform(&ruleset);
        Pcfg { ruleset, theta }
    }

    pub fn ruleset(&self) -> &Arc<RuleSet> {
        &self.ruleset
    }

    pub fn theta(&self) -> &ProbabilityAssignment {
        &self.theta
    }

    pub fn prob(&self, rule_text: &str) -> Option<f64> {
        self.ruleset.find_rule(rule_text).map(|i| self.theta.0[i])
    }

    /// Text dump: header directives followed by one rule per line in
    /// canonical order,
    ///
    /// ```text
    /// # pcfg-ga grammar v1
    /// # alphabet: abc
    /// # lexical: A B C
    /// # structural: S T U V
    /// # start: S
    /// A -> 'a'  p=3.3333333333333331e-1
    /// S -> A B  p=1.0000000000000000e0
    /// ```
    ///
    /// Probabilities carry 17 significant digits so a dump reloads bit-exactly.
    pub fn dump(&self) -> String {
        let rs = &*self.ruleset;
        let vars = rs.vars();
        let mut out = String::from("# pcfg-ga grammar v1\n");
        out.push_str(&format!("# alphabet: {}\n", rs.alphabet()));
        out.push_str(&format!("# lexical: {}\n", vars.lexical_names().join(" ")));
        out.push_str(&format!("# structural: {}\n", vars.structural_names().join(" ")));
        out.push_str(&format!("# start: {}\n", vars.name(vars.start())));
        for (i, p) in self.theta.0.iter().enumerate() {
            out.push_str(&format!("{}  p={:.16e}\n", rs.format_rule(i), p));
        }
        out
    }

    /// Parses the format written by [`Pcfg::dump`]. Blank lines and `#`
    /// comments other than the four directives are ignored.
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut alphabet = None;
        let mut lexical = None;
        let mut structural = None;
        let mut start = None;
        let mut rule_lines = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once(':') {
                    let value = value.trim();
                    match key.trim() {
                        "alphabet" => alphabet = Some(Alphabet::new(value.chars())?),
                        "lexical" => lexical = Some(split_names(value)),
                        "structural" => structural = Some(split_names(value)),
                        "start" => start = Some(value.to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            rule_lines.push((lineno + 1, line));
        }
        let missing = |what: &str| Error::invalid_input(format!("grammar dump lacks '# {what}:' line"));
        let alphabet = alphabet.ok_or_else(|| missing("alphabet"))?;
        let vars = VariableSet::new(
            lexical.ok_or_else(|| missing("lexical"))?,
            structural.ok_or_else(|| missing("structural"))?,
            &start.ok_or_else(|| missing("start"))?,
        )?;
        let mut parsed = Vec::with_capacity(rule_lines.len());
        for (lineno, line) in rule_lines {
            let (rule_text, prob_text) = line
                .rsplit_once("p=")
                .ok_or_else(|| Error::invalid_input(format!("line {lineno}: missing 'p='")))?;
            let rule = parse_rule(&alphabet, &vars, rule_text.trim())
                .map_err(|e| Error::invalid_input(format!("line {lineno}: {e}")))?;
            let p: f64 = prob_text.trim().parse().map_err(|_| {
                Error::invalid_input(format!("line {lineno}: bad probability {prob_text:?}"))
            })?;
            parsed.push((rule, p));
        }
        let rs = RuleSet::new(alphabet, vars, parsed.iter().map(|(r, _)| *r).collect())
            .map_err(|e| Error::invalid_input(e.to_string()))?;
        let mut probs = vec![0.0; rs.len()];
        for (rule, p) in parsed {
            let i = rs.index_of(&rule).expect("rule was inserted");
            probs[i] = p;
        }
        let theta = ProbabilityAssignment::new(probs, &rs, LOAD_TOLERANCE)?;
        Ok(Pcfg {
            ruleset: Arc::new(rs),
            theta,
        })
    }
}

fn split_names(value: &str) -> Vec<String> {
    value.split_whitespace().map(String::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts covering rules by filtering every candidate production
    /// `lhs -> rhs` for bipartite admissibility.
    fn enumerate_covering(n_sym: usize, n_lex: usize, n_struct: usize) -> (usize, usize) {
        let n = n_lex + n_struct;
        let mut candidates = Vec::new();
        for lhs in 0..n {
            for s in 0..n_sym {
                candidates.push((lhs, Some(s), None));
            }
            for c in 0..n {
                for d in 0..n {
                    candidates.push((lhs, None, Some((c, d))));
                }
            }
        }
        let lex = candidates.iter().filter(|(l, t, _)| *l < n_lex && t.is_some()).count();
        let structural = candidates.iter().filter(|(l, _, p)| *l >= n_lex && p.is_some()).count();
        (lex, structural)
    }

    #[test]
    fn covering_counts() {
        let abc = Alphabet::abc();
        let rs = build_covering_ruleset(&abc, 3, 4).unwrap();
        assert_eq!(rs.n_lexical_rules(), 9);
        assert_eq!(rs.n_structural_rules(), 196);
        assert_eq!(rs.len(), 205);

        let a = Alphabet::new(['a']).unwrap();
        let rs = build_covering_ruleset(&a, 1, 1).unwrap();
        assert_eq!((rs.n_lexical_rules(), rs.n_structural_rules()), (1, 4));

        let rs = build_covering_ruleset(&abc, 2, 1).unwrap();
        assert_eq!((rs.n_lexical_rules(), rs.n_structural_rules()), (6, 9));
        assert_eq!(enumerate_covering(3, 2, 1), (6, 9));
    }

    #[test]
    fn covering_formula_matches_enumeration() {
        for sigma in [1usize, 3, 20] {
            let alphabet = Alphabet::new(Alphabet::amino_acids().symbols()[..sigma].to_vec()).unwrap();
            for nl in 1..=5 {
                for ns in 1..=5 {
                    let rs = build_covering_ruleset(&alphabet, nl, ns).unwrap();
                    let (l, s) = enumerate_covering(sigma, nl, ns);
                    assert_eq!(rs.n_lexical_rules(), l);
                    assert_eq!(rs.n_structural_rules(), s);
                    assert_eq!(rs.len(), nl * sigma + ns * (nl + ns).pow(2));
                }
            }
        }
    }

    #[test]
    fn covering_rejects_bad_arguments() {
        let abc = Alphabet::abc();
        assert!(matches!(build_covering_ruleset(&abc, 0, 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_covering_ruleset(&abc, 2, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(Alphabet::new([]), Err(Error::InvalidArgument(_))));
        assert!(Alphabet::new("aba".chars()).is_err());
    }

    #[test]
    fn canonical_order_is_deterministic_and_grouped() {
        let abc = Alphabet::abc();
        let a = build_covering_ruleset(&abc, 3, 4).unwrap();
        let b = build_covering_ruleset(&abc, 3, 4).unwrap();
        assert_eq!(a.rules(), b.rules());
        assert!(a.rules().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a.vars().name(a.vars().start()), "S");
        assert_eq!(a.format_rule(0), "A -> 'a'");
        assert_eq!(a.format_rule(9), "S -> A A");
        let mut covered = 0;
        for v in a.vars().all() {
            let g = a.group(v);
            assert!(a.rules()[g.clone()].iter().all(|r| r.lhs == v));
            covered += g.len();
        }
        assert_eq!(covered, a.len());
    }

    #[test]
    fn normalize_examples() {
        let a = Alphabet::new(['a', 'b']).unwrap();
        // 1 lexical var with 2 rules, 1 structural var with 4 rules.
        let rs = build_covering_ruleset(&a, 1, 1).unwrap();
        let z = Genome::new(vec![0.2, 0.6, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let theta = normalize_to_proper(&z, &rs).unwrap();
        assert!((theta.probs()[0] - 0.25).abs() < 1e-15);
        assert!((theta.probs()[1] - 0.75).abs() < 1e-15);
        assert_eq!(&theta.probs()[2..], &[0.25; 4]);

        let z = Genome::new(vec![0.7, 0.7, 0.3, 0.3, 0.3, 0.3]).unwrap();
        let theta = normalize_to_proper(&z, &rs).unwrap();
        assert_eq!(theta.probs(), &[0.5, 0.5, 0.25, 0.25, 0.25, 0.25]);

        let b = Alphabet::abc();
        let rs = build_covering_ruleset(&b, 1, 1).unwrap();
        let z = Genome::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let theta = normalize_to_proper(&z, &rs).unwrap();
        assert_eq!(&theta.probs()[..3], &[1.0 / 3.0; 3]);

        let short = Genome::new(vec![0.5; 3]).unwrap();
        assert!(matches!(normalize_to_proper(&short, &rs), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn active_rule_counts() {
        let abc = Alphabet::abc();
        let rs = build_covering_ruleset(&abc, 3, 1).unwrap();
        // S group has 16 rules; lexical groups have 3.
        let theta = ProbabilityAssignment::uniform(&rs);
        assert_eq!(theta.active_rule_count(0.01), rs.len());
        let rs9 = build_covering_ruleset(&Alphabet::amino_acids(), 1, 1).unwrap();
        let mut probs = ProbabilityAssignment::uniform(&rs9).into_probs();
        let g = rs9.group(VarId(1));
        probs[g.start] = 0.005;
        probs[g.start + 1] = 1.0 - 0.005 - 0.0 - 0.0;
        probs[g.start + 2] = 0.0;
        probs[g.start + 3] = 0.0;
        let theta = ProbabilityAssignment::new(probs, &rs9, 1e-12).unwrap();
        assert_eq!(theta.active_rule_count(0.01), 20 + 1);
    }

    #[test]
    fn dump_round_trip_is_exact() {
        let abc = Alphabet::abc();
        let rs = Arc::new(build_covering_ruleset(&abc, 2, 2).unwrap());
        let genes: Vec<f64> = (0..rs.len()).map(|i| ((i * 7919) % 101) as f64 / 100.0).collect();
        let g = Pcfg::from_genome(rs, &Genome::new(genes).unwrap()).unwrap();
        let text = g.dump();
        assert!(text.contains("\nS -> A A  p="));
        let back = Pcfg::parse_dump(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn dump_rejects_improper_theta() {
        let text = "# alphabet: ab\n# lexical: A\n# structural: S\n# start: S\n\
                    A -> 'a'  p=0.5\nA -> 'b'  p=0.6\nS -> A A  p=1\n";
        assert!(matches!(Pcfg::parse_dump(text), Err(Error::InvalidInput(_))));
        let ok = text.replace("p=0.6", "p=0.5");
        let g = Pcfg::parse_dump(&ok).unwrap();
        assert_eq!(g.prob("S -> A A"), Some(1.0));
    }

    #[test]
    fn rule_set_validation() {
        let abc = Alphabet::abc();
        let vars = VariableSet::new(vec!["A".into()], vec!["S".into()], "S").unwrap();
        let a = VarId(0);
        let s = VarId(1);
        assert!(RuleSet::new(abc.clone(), vars.clone(), vec![Rule::structural(a, s, s)]).is_err());
        assert!(RuleSet::new(abc.clone(), vars.clone(), vec![Rule::lexical(s, 0)]).is_err());
        let dup = vec![Rule::lexical(a, 0), Rule::lexical(a, 0), Rule::structural(s, a, a)];
        assert!(RuleSet::new(abc.clone(), vars.clone(), dup).is_err());
        // S heads nothing
        assert!(RuleSet::new(abc.clone(), vars.clone(), vec![Rule::lexical(a, 0)]).is_err());
        assert!(VariableSet::new(vec!["A".into()], vec!["S".into()], "A").is_err());
        assert!(VariableSet::new(vec!["A".into()], vec!["A".into()], "A").is_err());
    }
}
