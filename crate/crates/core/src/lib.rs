//! Learning rule probabilities of bipartite-CNF probabilistic context-free
//! grammars with genetic algorithms.
//!
//! A fixed covering [`RuleSet`] is weighted by a real-valued [`Genome`];
//! genomes are normalized into proper [`Pcfg`]s, scored with the Inside
//! algorithm, and evolved by one of two GA presets ([`evo::Scheme`]).

pub mod corpus;
pub mod error;
pub mod eval;
pub mod evo;
pub mod grammar;
pub mod inside;
pub mod languages;

pub use error::{Error, Result};
pub use eval::{auroc, evaluate_grammar, EvalReport, LabeledSample, ScoreMode};
pub use evo::{GaConfig, RunResult, Scheme};
pub use grammar::{
    build_covering_ruleset, normalize_to_proper, Alphabet, Corpus, Genome, Pcfg,
    ProbabilityAssignment, Rule, RuleSet, Sentence, VarId, VariableSet,
};
pub use inside::{
    corpus_mean_log_likelihood, inside_log_probability, perplexity_per_letter, EncodedCorpus,
};
pub use languages::ToyLanguage;
