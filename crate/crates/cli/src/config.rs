//! Experiment configuration files.
//!
//! A config is a flat `key = value` text file. `#` starts a comment, blank
//! lines are ignored, and a value in braces (`population = {40, 80, 160}`)
//! is a list, allowed only for sweep axes. Relative paths are resolved
//! against the directory holding the config file.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `scheme` | `mlgd` or `pge` | `mlgd` |
//! | `language` | builtin toy language `L1` / `L2` | none |
//! | `train`, `test_pos`, `test_neg` | corpus files (override builtin data) | none |
//! | `format` | `plain` or `fasta` | from file extension |
//! | `alphabet` | `abc`, `amino`, or literal symbols | language or corpus-derived |
//! | `covering` | `n_lex+n_struct` | `3+4` |
//! | `population`, `crossover`, `mutation`, `scale` | GA parameters p, c, m, M | 80, 0.5, 0.001, 0.5 |
//! | `sigma`, `sharing_window` | PGE sharing radius and intensity window | `0.05·√|R|`, 20 |
//! | `max_generations` | generation cap | 2000 (pge), 1000 (mlgd) |
//! | `convergence` | PGE convergence stop `on`/`off` | `on` |
//! | `convergence_window`, `convergence_min_improvement` | stop rule | 50, 1e-6 |
//! | `repeats` | independent runs per setup, seeds `seed + i` | 3 |
//! | `folds` | k-fold cross-validation over the training corpus | off |
//! | `thresholds` | active-rule thresholds | `{0.01, 0.05}` |
//! | `score_mode` | `normalized` or `raw` classification score | `normalized` |
//! | `seed`, `data_seed` | run seed; seed for regenerated test sets | 1, `seed` |
//! | `test_pos_count`, `test_neg_count`, `test_max_len` | regenerated test sets | per language |
//! | `verbatim` | keep the misprinted L1 training sentence | `false` |
//! | `out` | output directory | `out` |
//! | `grid` | sweep mode `baseline` or `full` | `baseline` |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pcfg_ga::corpus::CorpusFormat;
use pcfg_ga::evo::Convergence;
use pcfg_ga::{Error, GaConfig, Result, Scheme, ScoreMode, ToyLanguage};

const KNOWN_KEYS: &[&str] = &[
    "scheme",
    "language",
    "train",
    "test_pos",
    "test_neg",
    "format",
    "alphabet",
    "covering",
    "population",
    "crossover",
    "mutation",
    "scale",
    "sigma",
    "sharing_window",
    "max_generations",
    "convergence",
    "convergence_window",
    "convergence_min_improvement",
    "repeats",
    "folds",
    "thresholds",
    "score_mode",
    "seed",
    "data_seed",
    "test_pos_count",
    "test_neg_count",
    "test_max_len",
    "verbatim",
    "out",
    "grid",
];

/// Keys that may hold a list in a sweep config.
pub const SWEEP_AXES: &[&str] = &["scheme", "covering", "population", "crossover", "mutation", "scale"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawValue {
    Single(String),
    List(Vec<String>),
}

/// Parsed but uninterpreted config.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawConfig {
    pub entries: BTreeMap<String, RawValue>,
    pub base_dir: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("config line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidInput(format!("config line {}: unknown key {key:?}", lineno + 1)));
            }
            let value = value.trim();
            let value = if let Some(inner) = value.strip_prefix('{') {
                let inner = inner.strip_suffix('}').ok_or_else(|| {
                    Error::InvalidInput(format!("config line {}: unterminated list for {key}", lineno + 1))
                })?;
                let items: Vec<String> = inner
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if items.is_empty() {
                    return Err(Error::InvalidArgument(format!("empty list for {key}")));
                }
                RawValue::List(items)
            } else {
                RawValue::Single(value.to_string())
            };
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::InvalidInput(format!("config key {key:?} given twice")));
            }
        }
        Ok(RawConfig {
            entries,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RawConfig::parse(&text, &base)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), RawValue::Single(value.into()));
    }

    fn single(&self, key: &str) -> Result<Option<&str>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(RawValue::Single(s)) => Ok(Some(s)),
            Some(RawValue::List(_)) if key == "thresholds" => Ok(None),
            Some(RawValue::List(_)) => Err(Error::InvalidInput(format!(
                "config field {key}: a list is only allowed in sweep configs"
            ))),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.single(key)?
            .map(|s| {
                s.parse::<T>()
                    .map_err(|_| Error::InvalidInput(format!("config field {key}: cannot parse {s:?}")))
            })
            .transpose()
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.single(key)?.map(|s| {
            let p = PathBuf::from(s);
            if p.is_absolute() {
                p
            } else {
                self.base_dir.join(p)
            }
        }))
    }
}

/// Covering-set size as `n_lex + n_struct`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Covering {
    pub n_lex: usize,
    pub n_struct: usize,
}

impl std::str::FromStr for Covering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("covering {s:?} is not of the form n_lex+n_struct"));
        let (a, b) = s.split_once('+').ok_or_else(bad)?;
        Ok(Covering {
            n_lex: a.trim().parse().map_err(|_| bad())?,
            n_struct: b.trim().parse().map_err(|_| bad())?,
        })
    }
}

impl std::fmt::Display for Covering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}+{}", self.n_lex, self.n_struct)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphabetSource {
    /// From the language, else from the corpora.
    Auto,
    Symbols(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ga: GaConfig,
    pub language: Option<ToyLanguage>,
    pub train: Option<PathBuf>,
    pub test_pos: Option<PathBuf>,
    pub test_neg: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
    pub alphabet: AlphabetSource,
    pub covering: Covering,
    pub repeats: usize,
    pub folds: Option<usize>,
    pub thresholds: Vec<f64>,
    pub score_mode: ScoreMode,
    pub data_seed: u64,
    pub test_pos_count: Option<usize>,
    pub test_neg_count: Option<usize>,
    pub test_max_len: Option<usize>,
    pub verbatim: bool,
    pub out: PathBuf,
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidInput(format!("config field {key}: expected on/off, got {s:?}"))),
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let scheme: Scheme = raw.parsed("scheme")?.unwrap_or(Scheme::Mlgd);
        let seed: u64 = raw.parsed("seed")?.unwrap_or(1);
        let mut ga = GaConfig::for_scheme(scheme, seed);
        if let Some(v) = raw.parsed("population")? {
            ga.population_size = v;
        }
        if let Some(v) = raw.parsed("crossover")? {
            ga.crossover_prob = v;
        }
        if let Some(v) = raw.parsed("mutation")? {
            ga.mutation_prob = v;
        }
        if let Some(v) = raw.parsed("scale")? {
            ga.mutation_scale = v;
        }
        if let Some(v) = raw.parsed("sigma")? {
            ga.sharing_sigma = Some(v);
        }
        if let Some(v) = raw.parsed("sharing_window")? {
            ga.sharing_window = v;
        }
        if let Some(v) = raw.parsed("max_generations")? {
            ga.max_generations = v;
        }
        let mut conv = Convergence::default();
        if let Some(v) = raw.parsed("convergence_window")? {
            conv.window = v;
        }
        if let Some(v) = raw.parsed("convergence_min_improvement")? {
            conv.min_improvement = v;
        }
        let conv_on = match raw.single("convergence")? {
            Some(s) => parse_bool("convergence", s)?,
            None => scheme == Scheme::Pge,
        };
        ga.convergence = conv_on.then_some(conv);
        ga.validate()
            .map_err(|e| Error::InvalidInput(format!("config: {e}")))?;

        let thresholds = match raw.entries.get("thresholds") {
            None => vec![0.01, 0.05],
            Some(RawValue::Single(s)) => vec![s.parse().map_err(|_| {
                Error::InvalidInput(format!("config field thresholds: cannot parse {s:?}"))
            })?],
            Some(RawValue::List(items)) => items
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("config field thresholds: cannot parse {s:?}")))
                })
                .collect::<Result<_>>()?,
        };
        if thresholds.iter().any(|t| !(0.0..1.0).contains(t)) {
            return Err(Error::InvalidInput("config field thresholds: values must lie in [0, 1)".into()));
        }

        let repeats: usize = raw.parsed("repeats")?.unwrap_or(3);
        if repeats == 0 {
            return Err(Error::InvalidInput("config field repeats: must be at least 1".into()));
        }
        let folds: Option<usize> = raw.parsed("folds")?;
        if matches!(folds, Some(k) if k < 2) {
            return Err(Error::InvalidInput("config field folds: must be at least 2".into()));
        }
        let language: Option<ToyLanguage> = raw.parsed("language")?;
        let train = raw.path("train")?;
        if language.is_none() && train.is_none() {
            return Err(Error::InvalidInput(
                "config: set either language (builtin data) or train (corpus file)".into(),
            ));
        }
        for key in ["train", "test_pos", "test_neg"] {
            if let Some(p) = raw.path(key)? {
                if !p.is_file() {
                    return Err(Error::InvalidInput(format!(
                        "config field {key}: {} is not a readable file",
                        p.display()
                    )));
                }
            }
        }
        let alphabet = match raw.single("alphabet")? {
            None => AlphabetSource::Auto,
            Some(s) => AlphabetSource::Symbols(s.to_string()),
        };
        Ok(ExperimentConfig {
            ga,
            language,
            train,
            test_pos: raw.path("test_pos")?,
            test_neg: raw.path("test_neg")?,
            format: raw.parsed("format")?,
            alphabet,
            covering: raw.parsed("covering")?.unwrap_or(Covering { n_lex: 3, n_struct: 4 }),
            repeats,
            folds,
            thresholds,
            score_mode: raw.parsed("score_mode")?.unwrap_or_default(),
            data_seed: raw.parsed("data_seed")?.unwrap_or(seed),
            test_pos_count: raw.parsed("test_pos_count")?,
            test_neg_count: raw.parsed("test_neg_count")?,
            test_max_len: raw.parsed("test_max_len")?,
            verbatim: raw
                .single("verbatim")?
                .map(|s| parse_bool("verbatim", s))
                .transpose()?
                .unwrap_or(false),
            out: raw.path("out")?.unwrap_or_else(|| raw.base_dir.join("out")),
        })
    }

    /// Canonical `key = value` listing, embedded in run artifacts.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let ga = &self.ga;
        m.insert("scheme".into(), ga.scheme.name().into());
        m.insert("covering".into(), self.covering.to_string());
        m.insert("population".into(), ga.population_size.to_string());
        m.insert("crossover".into(), ga.crossover_prob.to_string());
        m.insert("mutation".into(), ga.mutation_prob.to_string());
        m.insert("scale".into(), ga.mutation_scale.to_string());
        m.insert(
            "sigma".into(),
            ga.sharing_sigma.map_or("auto".into(), |s| s.to_string()),
        );
        m.insert("sharing_window".into(), ga.sharing_window.to_string());
        m.insert("max_generations".into(), ga.max_generations.to_string());
        match ga.convergence {
            Some(c) => {
                m.insert("convergence".into(), "on".into());
                m.insert("convergence_window".into(), c.window.to_string());
                m.insert("convergence_min_improvement".into(), c.min_improvement.to_string());
            }
            None => {
                m.insert("convergence".into(), "off".into());
            }
        }
        m.insert("seed".into(), ga.seed.to_string());
        m.insert("data_seed".into(), self.data_seed.to_string());
        m.insert("repeats".into(), self.repeats.to_string());
        if let Some(k) = self.folds {
            m.insert("folds".into(), k.to_string());
        }
        if let Some(l) = self.language {
            m.insert("language".into(), l.to_string());
        }
        for (key, p) in [("train", &self.train), ("test_pos", &self.test_pos), ("test_neg", &self.test_neg)] {
            if let Some(p) = p {
                m.insert(key.into(), p.display().to_string());
            }
        }
        if let AlphabetSource::Symbols(s) = &self.alphabet {
            m.insert("alphabet".into(), s.clone());
        }
        let ts: Vec<String> = self.thresholds.iter().map(|t| t.to_string()).collect();
        m.insert("thresholds".into(), format!("{{{}}}", ts.join(", ")));
        m.insert(
            "score_mode".into(),
            match self.score_mode {
                ScoreMode::Normalized => "normalized",
                ScoreMode::Raw => "raw",
            }
            .into(),
        );
        m.insert("verbatim".into(), self.verbatim.to_string());
        m
    }
}
