//! Python bindings: `import pcfg_ga_py`.

use std::sync::Arc;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pcfg_ga::evo::{self, Convergence};
use pcfg_ga::grammar::normalize_into;
use pcfg_ga::languages::{self, builtin_training_set, sample_negative, sample_positive};
use pcfg_ga::{
    build_covering_ruleset, Alphabet, Corpus, EncodedCorpus, Error, GaConfig, Genome, Pcfg, Scheme, Sentence,
    ToyLanguage,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(m) | Error::InvalidInput(m) => PyValueError::new_err(m),
        Error::PreconditionViolation(m) | Error::ResourceExhausted(m) => PyRuntimeError::new_err(m),
        e @ Error::Io { .. } => PyOSError::new_err(e.to_string()),
    }
}

fn sentences(texts: &[String]) -> PyResult<Corpus> {
    texts.iter().map(|t| Sentence::parse(t).map_err(py_err)).collect()
}

fn parse_alphabet(symbols: &str) -> PyResult<Alphabet> {
    match symbols {
        "abc" => Ok(Alphabet::abc()),
        "amino" => Ok(Alphabet::amino_acids()),
        s => Alphabet::new(s.chars()).map_err(py_err),
    }
}

fn language(name: &str) -> PyResult<ToyLanguage> {
    name.parse().map_err(py_err)
}

/// Fixed set of CNF rules over an alphabet.
#[pyclass(name = "RuleSet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRuleSet(Arc<pcfg_ga::RuleSet>);

#[pymethods]
impl PyRuleSet {
    /// All bipartite CNF rules over `n_lex` lexical and `n_struct` structural variables.
    #[staticmethod]
    #[pyo3(signature = (alphabet = "abc", n_lex = 3, n_struct = 4))]
    fn covering(alphabet: &str, n_lex: usize, n_struct: usize) -> PyResult<Self> {
        let a = parse_alphabet(alphabet)?;
        Ok(PyRuleSet(Arc::new(build_covering_ruleset(&a, n_lex, n_struct).map_err(py_err)?)))
    }

    /// Concise generating grammar of a toy language (`"L1"` or `"L2"`).
    #[staticmethod]
    fn reference(lang: &str) -> PyResult<Self> {
        Ok(PyRuleSet(Arc::new(languages::reference_grammar(language(lang)?))))
    }

    fn rules(&self) -> Vec<String> {
        (0..self.0.len()).map(|i| self.0.format_rule(i)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("RuleSet({} rules over {})", self.0.len(), self.0.alphabet())
    }

    /// Per-lhs normalization of a genome in [0, 1]^|R|.
    fn normalize(&self, genes: Vec<f64>) -> PyResult<Vec<f64>> {
        let z = Genome::new(genes).map_err(py_err)?;
        if z.len() != self.0.len() {
            return Err(PyValueError::new_err(format!(
                "genome has {} genes, rule set has {} rules",
                z.len(),
                self.0.len()
            )));
        }
        let mut out = Vec::new();
        normalize_into(z.genes(), &self.0, &mut out);
        Ok(out)
    }

    fn uniform(&self) -> PyGrammar {
        PyGrammar(Pcfg::uniform(self.0.clone()))
    }

    fn grammar(&self, genes: Vec<f64>) -> PyResult<PyGrammar> {
        let z = Genome::new(genes).map_err(py_err)?;
        Ok(PyGrammar(Pcfg::from_genome(self.0.clone(), &z).map_err(py_err)?))
    }
}

/// Proper PCFG: a rule set plus rule probabilities.
#[pyclass(name = "Grammar", frozen)]
struct PyGrammar(Pcfg);

#[pymethods]
impl PyGrammar {
    #[staticmethod]
    fn loads(text: &str) -> PyResult<Self> {
        Ok(PyGrammar(Pcfg::parse_dump(text).map_err(py_err)?))
    }

    fn dumps(&self) -> String {
        self.0.dump()
    }

    fn ruleset(&self) -> PyRuleSet {
        PyRuleSet(self.0.ruleset().clone())
    }

    /// Rule text → probability.
    fn theta<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let rs = self.0.ruleset();
        for (i, p) in self.0.theta().probs().iter().enumerate() {
            d.set_item(rs.format_rule(i), *p)?;
        }
        Ok(d)
    }

    fn prob(&self, rule: &str) -> PyResult<f64> {
        self.0
            .prob(rule)
            .ok_or_else(|| PyValueError::new_err(format!("no rule {rule:?}")))
    }

    fn active_rules(&self, threshold: f64) -> usize {
        self.0.theta().active_rule_count(threshold)
    }

    /// ln P(sentence); `-inf` without a parse.
    fn log_prob(&self, sentence: &str) -> PyResult<f64> {
        let x = Sentence::parse(sentence).map_err(py_err)?;
        pcfg_ga::inside_log_probability(&self.0, &x).map_err(py_err)
    }

    fn mean_log_likelihood(&self, corpus: Vec<String>) -> PyResult<f64> {
        pcfg_ga::corpus_mean_log_likelihood(&self.0, &sentences(&corpus)?).map_err(py_err)
    }

    fn perplexity(&self, corpus: Vec<String>) -> PyResult<f64> {
        pcfg_ga::perplexity_per_letter(&self.0, &sentences(&corpus)?).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Grammar({} rules, {} with p > 0.01)", self.0.ruleset().len(), self.active_rules(0.01))
    }
}

#[pyfunction]
fn auroc(pos: Vec<f64>, neg: Vec<f64>) -> PyResult<f64> {
    pcfg_ga::auroc(&pos, &neg).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (lang, verbatim = false))]
fn training_set(lang: &str, verbatim: bool) -> PyResult<Vec<String>> {
    Ok(builtin_training_set(language(lang)?, verbatim)
        .iter()
        .map(|x| x.to_string())
        .collect())
}

/// Positive and negative test sentences; negatives copy the positive lengths.
#[pyfunction]
#[pyo3(signature = (lang, pos, neg, max_len, seed = 1))]
fn test_sets(lang: &str, pos: usize, neg: usize, max_len: usize, seed: u64) -> PyResult<(Vec<String>, Vec<String>)> {
    let lang = language(lang)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = sample_positive(lang, pos, max_len, &mut rng).map_err(py_err)?;
    let lengths: Vec<usize> = p.iter().map(|x| x.len()).collect();
    let n = sample_negative(lang, neg, &lengths, &mut rng).map_err(py_err)?;
    let s = |c: Corpus| c.iter().map(|x| x.to_string()).collect();
    Ok((s(p), s(n)))
}

/// Runs one GA and returns a dict with the best grammar, its fitness and the
/// per-generation trace `(generation, best_f, mean_f, diversity)`.
#[pyfunction]
#[pyo3(signature = (
    ruleset, corpus, scheme = "mlgd", seed = 1, population = None, crossover = None,
    mutation = None, scale = None, max_generations = None, convergence = None
))]
#[allow(clippy::too_many_arguments)]
fn run_ga<'py>(
    py: Python<'py>,
    ruleset: &PyRuleSet,
    corpus: Vec<String>,
    scheme: &str,
    seed: u64,
    population: Option<usize>,
    crossover: Option<f64>,
    mutation: Option<f64>,
    scale: Option<f64>,
    max_generations: Option<usize>,
    convergence: Option<bool>,
) -> PyResult<Bound<'py, PyDict>> {
    let scheme: Scheme = scheme.parse().map_err(py_err)?;
    let mut cfg = GaConfig::for_scheme(scheme, seed);
    if let Some(v) = population {
        cfg.population_size = v;
    }
    if let Some(v) = crossover {
        cfg.crossover_prob = v;
    }
    if let Some(v) = mutation {
        cfg.mutation_prob = v;
    }
    if let Some(v) = scale {
        cfg.mutation_scale = v;
    }
    if let Some(v) = max_generations {
        cfg.max_generations = v;
    }
    if let Some(on) = convergence {
        cfg.convergence = on.then(Convergence::default);
    }
    let rs = ruleset.0.clone();
    let corpus = sentences(&corpus)?;
    let encoded = EncodedCorpus::new(&rs, &corpus).map_err(py_err)?;
    let result = evo::run_seeded(&cfg, &rs, &encoded).map_err(py_err)?;
    let grammar = Pcfg::new(rs, result.theta_best.clone()).map_err(py_err)?;

    let d = PyDict::new(py);
    d.set_item("best_fitness", result.best.raw_fitness)?;
    d.set_item("generations", result.generations_run)?;
    d.set_item(
        "stop_reason",
        match result.stop_reason {
            evo::StopReason::MaxGenerations => "max-generations",
            evo::StopReason::Converged => "converged",
        },
    )?;
    let trace: Vec<(usize, f64, f64, f64)> = result
        .trace
        .iter()
        .map(|r| (r.generation, r.best_f, r.mean_f, r.diversity))
        .collect();
    d.set_item("trace", trace)?;
    d.set_item("grammar", Bound::new(py, PyGrammar(grammar))?)?;
    Ok(d)
}

#[pymodule]
fn pcfg_ga_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRuleSet>()?;
    m.add_class::<PyGrammar>()?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(training_set, m)?)?;
    m.add_function(wrap_pyfunction!(test_sets, m)?)?;
    m.add_function(wrap_pyfunction!(run_ga, m)?)?;
    Ok(())
}
