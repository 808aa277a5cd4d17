//! Real-coded steady-state GA over rule-probability genomes.
//!
//! Two presets share one loop:
//!
//! * [`Scheme::Pge`]: triangular fitness sharing with adaptive intensity,
//!   binary tournament, BLX-0.5 blend crossover, uniform-redraw mutation and
//!   an optional convergence stop.
//! * [`Scheme::Mlgd`]: roulette wheel on shifted fitness, one-point
//!   crossover and additive delta mutation clipped to `[0, 1]`, where a gene
//!   clipped to zero hides its rule.
//!
//! Each generation adds `⌈p/2⌉` freshly evaluated offspring to the
//! population and drops the `⌈p/2⌉` worst of the merged pool (by raw
//! fitness), so the best individual always survives. Fitness evaluation may
//! run on a rayon pool; it never touches the RNG, so results do not depend on
//! the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{normalize_into, Genome, ProbabilityAssignment, RuleSet};
use crate::inside::{CompiledGrammar, EncodedCorpus};

/// Fraction of the population replaced every generation.
pub const REPLACEMENT_FRACTION: f64 = 0.5;
/// Added to shifted fitness so roulette weights stay positive.
pub const ROULETTE_EPSILON: f64 = 1e-6;
/// BLX-α parameter of the PGE blend crossover.
pub const BLX_ALPHA: f64 = 0.5;
/// Lower bound of the MLGD mutation step, `δ ~ U(0.01, M)`.
pub const DELTA_MIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pge,
    Mlgd,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pge => "pge",
            Scheme::Mlgd => "mlgd",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pge" => Ok(Scheme::Pge),
            "mlgd" => Ok(Scheme::Mlgd),
            _ => Err(Error::invalid_arg(format!("unknown scheme {s:?} (pge | mlgd)"))),
        }
    }
}

/// Stop once best raw fitness improves by less than `min_improvement` nats
/// over the trailing `window` generations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub window: usize,
    pub min_improvement: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence {
            window: 50,
            min_improvement: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub scheme: Scheme,
    pub population_size: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    /// Upper bound `M` of the MLGD mutation step.
    pub mutation_scale: f64,
    /// Sharing radius on θ-space distances; `None` uses `0.05·√|R|`.
    pub sharing_sigma: Option<f64>,
    /// Trailing window for the adaptive sharing intensity.
    pub sharing_window: usize,
    pub max_generations: usize,
    /// PGE only.
    pub convergence: Option<Convergence>,
    pub seed: u64,
    /// Evaluate fitness on the current rayon pool.
    pub parallel: bool,
}

impl GaConfig {
    pub fn pge(seed: u64) -> Self {
        GaConfig {
            scheme: Scheme::Pge,
            population_size: 80,
            crossover_prob: 0.5,
            mutation_prob: 0.001,
            mutation_scale: 0.5,
            sharing_sigma: None,
            sharing_window: 20,
            max_generations: 2000,
            convergence: Some(Convergence::default()),
            seed,
            parallel: true,
        }
    }

    pub fn mlgd(seed: u64) -> Self {
        GaConfig {
            scheme: Scheme::Mlgd,
            max_generations: 1000,
            convergence: None,
            ..GaConfig::pge(seed)
        }
    }

    pub fn for_scheme(scheme: Scheme, seed: u64) -> Self {
        match scheme {
            Scheme::Pge => GaConfig::pge(seed),
            Scheme::Mlgd => GaConfig::mlgd(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::invalid_arg("population_size must be at least 2"));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid_arg(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(self.mutation_scale > DELTA_MIN && self.mutation_scale <= 1.0) {
            return Err(Error::invalid_arg(format!(
                "mutation_scale = {} outside (0.01, 1]",
                self.mutation_scale
            )));
        }
        if let Some(sigma) = self.sharing_sigma {
            if sigma.is_nan() || sigma <= 0.0 {
                return Err(Error::invalid_arg("sharing_sigma must be positive"));
            }
        }
        if self.sharing_window == 0 {
            return Err(Error::invalid_arg("sharing_window must be positive"));
        }
        if let Some(c) = self.convergence {
            if c.window == 0 {
                return Err(Error::invalid_arg("convergence window must be positive"));
            }
        }
        Ok(())
    }

    pub fn sigma_for(&self, rs: &RuleSet) -> f64 {
        self.sharing_sigma
            .unwrap_or_else(|| 0.5 * (rs.len() as f64).sqrt() * 0.1)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn offspring_quota(&self) -> usize {
        (self.population_size as f64 * REPLACEMENT_FRACTION).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    /// Normalized rule probabilities of `genome`.
    pub theta: Vec<f64>,
    /// Mean floored log-likelihood of the training corpus, nats.
    pub raw_fitness: f64,
    /// Selection fitness; equals `raw_fitness` unless sharing is active.
    pub shared_fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    pub best_f: f64,
    pub mean_f: f64,
    pub diversity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxGenerations,
    Converged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best: Individual,
    pub theta_best: ProbabilityAssignment,
    /// Row 0 is the initial population.
    pub trace: Vec<TraceRow>,
    pub generations_run: usize,
    pub stop_reason: StopReason,
}

/// `p` genomes with genes drawn i.i.d. from `U(0, 1)`.
pub fn init_population<R: Rng + ?Sized>(cfg: &GaConfig, rs: &RuleSet, rng: &mut R) -> Vec<Genome> {
    (0..cfg.population_size)
        .map(|_| Genome::from_vec_unchecked((0..rs.len()).map(|_| rng.gen::<f64>()).collect()))
        .collect()
}

fn evaluate_one(genome: Genome, rs: &RuleSet, corpus: &EncodedCorpus) -> Individual {
    let mut theta = Vec::with_capacity(genome.len());
    normalize_into(genome.genes(), rs, &mut theta);
    let raw = corpus.mean_log_likelihood(&CompiledGrammar::new(rs, &theta));
    Individual {
        genome,
        theta,
        raw_fitness: raw,
        shared_fitness: raw,
    }
}

/// Scores every genome by the mean floored log-likelihood of `corpus`.
/// Output order matches input order regardless of `parallel`.
pub fn evaluate(
    genomes: Vec<Genome>,
    rs: &RuleSet,
    corpus: &EncodedCorpus,
    parallel: bool,
) -> Result<Vec<Individual>> {
    if let Some(g) = genomes.iter().find(|g| g.len() != rs.len()) {
        return Err(Error::invalid_arg(format!(
            "genome has {} genes, rule set has {} rules",
            g.len(),
            rs.len()
        )));
    }
    Ok(if parallel {
        genomes
            .into_par_iter()
            .map(|g| evaluate_one(g, rs, corpus))
            .collect()
    } else {
        genomes
            .into_iter()
            .map(|g| evaluate_one(g, rs, corpus))
            .collect()
    })
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Triangular fitness sharing on θ-space distances.
///
/// With niche count `nᵢ = Σⱼ max(0, 1 − dᵢⱼ/σ)` and shifted score
/// `raw'ᵢ = rawᵢ − min raw + ε`, the shared fitness is
/// `rawᵢ − raw'ᵢ · intensity · (1 − 1/nᵢ)`: plain `raw'/n` sharing at
/// intensity 1, no sharing at intensity 0, and always `raw` for an
/// individual alone in its niche.
pub fn share_fitness(pop: &mut [Individual], sigma: f64, intensity: f64) -> Result<()> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::invalid_arg(format!("sharing sigma must be positive, got {sigma}")));
    }
    if !(0.0..=1.0).contains(&intensity) {
        return Err(Error::invalid_arg(format!("sharing intensity {intensity} outside [0, 1]")));
    }
    let min = pop.iter().map(|i| i.raw_fitness).fold(f64::INFINITY, f64::min);
    let niche: Vec<f64> = (0..pop.len())
        .map(|i| {
            pop.iter()
                .map(|other| (1.0 - euclidean(&pop[i].theta, &other.theta) / sigma).max(0.0))
                .sum()
        })
        .collect();
    for (ind, n) in pop.iter_mut().zip(niche) {
        let shifted = ind.raw_fitness - min + ROULETTE_EPSILON;
        let penalty = shifted * intensity * (1.0 - 1.0 / n);
        ind.shared_fitness = if penalty > 0.0 {
            ind.raw_fitness - penalty
        } else {
            ind.raw_fitness
        };
    }
    Ok(())
}

/// Binary tournament with replacement on shared fitness; ties go to the
/// first draw. Returns an index into `pop`.
pub fn select_tournament2<R: Rng + ?Sized>(pop: &[Individual], rng: &mut R) -> usize {
    assert!(!pop.is_empty(), "tournament on an empty population");
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    if pop[b].shared_fitness > pop[a].shared_fitness {
        b
    } else {
        a
    }
}

/// Index drawn with probability proportional to `weights`; uniform when
/// the weights carry no mass.
pub fn roulette_pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    assert!(!weights.is_empty(), "roulette on an empty population");
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return rng.gen_range(0..weights.len());
    }
    let mut target = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if target < *w {
            return i;
        }
        target -= w;
    }
    // Rounding left a sliver past the last bucket.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

/// Roulette wheel on `fᵢ − min f + ε`.
pub fn select_roulette<R: Rng + ?Sized>(pop: &[Individual], rng: &mut R) -> usize {
    let min = pop.iter().map(|i| i.shared_fitness).fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = pop
        .iter()
        .map(|i| i.shared_fitness - min + ROULETTE_EPSILON)
        .collect();
    roulette_pick(&weights, rng)
}

/// BLX-0.5: each child gene uniform on `[lo − α·d, hi + α·d]`, clipped to `[0, 1]`.
pub fn crossover_blend<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> Result<Genome> {
    if a.len() != b.len() {
        return Err(Error::invalid_arg("blend crossover on genomes of different lengths"));
    }
    let genes = a
        .genes()
        .iter()
        .zip(b.genes())
        .map(|(&x, &y)| {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            let d = hi - lo;
            if d == 0.0 {
                return lo;
            }
            let v = rng.gen_range((lo - BLX_ALPHA * d)..=(hi + BLX_ALPHA * d));
            v.clamp(0.0, 1.0)
        })
        .collect();
    Ok(Genome::from_vec_unchecked(genes))
}

/// Swaps the suffixes from position `cut` on.
pub fn one_point_at(a: &Genome, b: &Genome, cut: usize) -> Result<(Genome, Genome)> {
    if a.len() != b.len() {
        return Err(Error::invalid_arg("one-point crossover on genomes of different lengths"));
    }
    if a.len() < 2 {
        return Err(Error::invalid_arg("one-point crossover needs at least two genes"));
    }
    if cut == 0 || cut >= a.len() {
        return Err(Error::invalid_arg(format!("cut point {cut} outside [1, {}]", a.len() - 1)));
    }
    let mut x = a.genes()[..cut].to_vec();
    x.extend_from_slice(&b.genes()[cut..]);
    let mut y = b.genes()[..cut].to_vec();
    y.extend_from_slice(&a.genes()[cut..]);
    Ok((Genome::from_vec_unchecked(x), Genome::from_vec_unchecked(y)))
}

/// One-point crossover with the cut drawn uniformly from `[1, len − 1]`.
pub fn crossover_one_point<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    rng: &mut R,
) -> Result<(Genome, Genome)> {
    if a.len() < 2 {
        return Err(Error::invalid_arg("one-point crossover needs at least two genes"));
    }
    let cut = rng.gen_range(1..a.len());
    one_point_at(a, b, cut)
}

/// Replaces each gene by a fresh `U(0, 1)` draw with probability `m`.
pub fn mutate_uniform_redraw<R: Rng + ?Sized>(genome: &mut Genome, m: f64, rng: &mut R) {
    if m <= 0.0 {
        return;
    }
    for g in genome.genes_mut() {
        if rng.gen::<f64>() < m {
            *g = rng.gen::<f64>();
        }
    }
}

/// `gene ± delta`, clipped to `[0, 1]`. Clipping at zero hides the rule.
pub fn apply_delta(gene: f64, delta: f64, increase: bool) -> f64 {
    let v = if increase { gene + delta } else { gene - delta };
    v.clamp(0.0, 1.0)
}

/// With probability `m` per gene, shifts it by `±δ`, `δ ~ U(0.01, M)`.
pub fn mutate_delta<R: Rng + ?Sized>(genome: &mut Genome, m: f64, scale: f64, rng: &mut R) {
    if m <= 0.0 {
        return;
    }
    for g in genome.genes_mut() {
        if rng.gen::<f64>() < m {
            let delta = rng.gen_range(DELTA_MIN..scale);
            let increase = rng.gen_bool(0.5);
            *g = apply_delta(*g, delta, increase);
        }
    }
}

/// Mean Euclidean distance of the genomes to their centroid.
pub fn diversity(pop: &[Individual]) -> f64 {
    let Some(first) = pop.first() else {
        return 0.0;
    };
    let n = pop.len() as f64;
    let mut centroid = vec![0.0; first.genome.len()];
    for ind in pop {
        for (c, g) in centroid.iter_mut().zip(ind.genome.genes()) {
            *c += g;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n);
    pop.iter()
        .map(|ind| euclidean(ind.genome.genes(), &centroid))
        .sum::<f64>()
        / n
}

fn best_index(pop: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate() {
        if ind.raw_fitness > pop[best].raw_fitness {
            best = i;
        }
    }
    best
}

/// Population plus the per-generation history the loop needs.
#[derive(Debug, Clone)]
pub struct GaState {
    pub population: Vec<Individual>,
    pub generation: usize,
    pub trace: Vec<TraceRow>,
}

impl GaState {
    /// Evaluates an initial population and records generation 0.
    pub fn new(genomes: Vec<Genome>, cfg: &GaConfig, rs: &RuleSet, corpus: &EncodedCorpus) -> Result<Self> {
        let population = evaluate(genomes, rs, corpus, cfg.parallel)?;
        let mut state = GaState {
            population,
            generation: 0,
            trace: Vec::new(),
        };
        state.apply_sharing(cfg, rs)?;
        state.record();
        Ok(state)
    }

    pub fn best(&self) -> &Individual {
        &self.population[best_index(&self.population)]
    }

    fn record(&mut self) {
        let best = self.best().raw_fitness;
        let mean = self.population.iter().map(|i| i.raw_fitness).sum::<f64>() / self.population.len() as f64;
        self.trace.push(TraceRow {
            generation: self.generation,
            best_f: best,
            mean_f: mean,
            diversity: diversity(&self.population),
        });
    }

    /// Share of recent improvement in the total improvement so far: 1 while
    /// the run is young or still climbing, falling to 0 as it stalls.
    pub fn sharing_intensity(&self, window: usize) -> f64 {
        let t = self.trace.len();
        if t <= window {
            return 1.0;
        }
        let now = self.trace[t - 1].best_f;
        let then = self.trace[t - 1 - window].best_f;
        let total = now - self.trace[0].best_f;
        if total <= 0.0 {
            return 0.0;
        }
        ((now - then) / total).clamp(0.0, 1.0)
    }

    fn apply_sharing(&mut self, cfg: &GaConfig, rs: &RuleSet) -> Result<()> {
        if cfg.scheme == Scheme::Pge {
            let intensity = self.sharing_intensity(cfg.sharing_window);
            share_fitness(&mut self.population, cfg.sigma_for(rs), intensity)
        } else {
            Ok(())
        }
    }

    fn converged(&self, cfg: &GaConfig) -> bool {
        let Some(conv) = cfg.convergence.filter(|_| cfg.scheme == Scheme::Pge) else {
            return false;
        };
        let t = self.trace.len();
        if t <= conv.window {
            return false;
        }
        self.trace[t - 1].best_f - self.trace[t - 1 - conv.window].best_f < conv.min_improvement
    }
}

/// One steady-state generation: breed `⌈p/2⌉` offspring, evaluate them, merge
/// them into the population and drop the `⌈p/2⌉` worst by raw fitness.
pub fn step_generation<R: Rng + ?Sized>(
    state: &mut GaState,
    cfg: &GaConfig,
    rs: &RuleSet,
    corpus: &EncodedCorpus,
    rng: &mut R,
) -> Result<()> {
    let quota = cfg.offspring_quota();
    let pop = &state.population;
    let select = |rng: &mut R| match cfg.scheme {
        Scheme::Pge => select_tournament2(pop, rng),
        Scheme::Mlgd => select_roulette(pop, rng),
    };
    let mutate = |g: &mut Genome, rng: &mut R| match cfg.scheme {
        Scheme::Pge => mutate_uniform_redraw(g, cfg.mutation_prob, rng),
        Scheme::Mlgd => mutate_delta(g, cfg.mutation_prob, cfg.mutation_scale, rng),
    };

    let mut offspring = Vec::with_capacity(quota + 1);
    while offspring.len() < quota {
        let a = select(rng);
        if rng.gen::<f64>() < cfg.crossover_prob {
            let b = select(rng);
            match cfg.scheme {
                Scheme::Pge => {
                    let mut child = crossover_blend(&pop[a].genome, &pop[b].genome, rng)?;
                    mutate(&mut child, rng);
                    offspring.push(child);
                }
                Scheme::Mlgd => {
                    let (mut x, mut y) = crossover_one_point(&pop[a].genome, &pop[b].genome, rng)?;
                    mutate(&mut x, rng);
                    mutate(&mut y, rng);
                    offspring.push(x);
                    offspring.push(y);
                }
            }
        } else {
            let mut child = pop[a].genome.clone();
            mutate(&mut child, rng);
            offspring.push(child);
        }
    }
    offspring.truncate(quota);

    // Offspring join the population and the worst `quota` of the merged
    // pool are dropped. Offspring go first so they win fitness ties.
    let mut pool = evaluate(offspring, rs, corpus, cfg.parallel)?;
    pool.append(&mut state.population);
    pool.sort_by(|x, y| y.raw_fitness.total_cmp(&x.raw_fitness));
    pool.truncate(cfg.population_size);
    state.population = pool;
    state.generation += 1;
    // Intensity looks at the trace up to the previous generation.
    state.apply_sharing(cfg, rs)?;
    state.record();
    Ok(())
}

/// Runs the GA until `max_generations` or, for PGE with a convergence rule,
/// until the best fitness stalls.
pub fn run<R: Rng + ?Sized>(
    cfg: &GaConfig,
    rs: &RuleSet,
    corpus: &EncodedCorpus,
    rng: &mut R,
) -> Result<RunResult> {
    cfg.validate()?;
    let genomes = init_population(cfg, rs, rng);
    let mut state = GaState::new(genomes, cfg, rs, corpus)?;
    let mut stop_reason = StopReason::MaxGenerations;
    while state.generation < cfg.max_generations {
        step_generation(&mut state, cfg, rs, corpus, rng)?;
        if state.converged(cfg) {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    let best = state.best().clone();
    let theta_best = ProbabilityAssignment::new(best.theta.clone(), rs, 1e-9)?;
    Ok(RunResult {
        best,
        theta_best,
        generations_run: state.generation,
        trace: state.trace,
        stop_reason,
    })
}

/// [`run`] with the RNG seeded from `cfg.seed`.
pub fn run_seeded(cfg: &GaConfig, rs: &RuleSet, corpus: &EncodedCorpus) -> Result<RunResult> {
    run(cfg, rs, corpus, &mut cfg.rng())
}
