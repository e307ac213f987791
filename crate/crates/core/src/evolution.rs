//! The genetic search engine shared by the committee optimizer and the
//! hybrid-forecaster search.
//!
//! Populations evolve by rank-based pairing of the better half with the
//! worse half, uniform gene exchange at the crossover rate, Gaussian
//! re-sampling of numeric genes at the mutation rate, and elitism: the
//! best genomes are copied unchanged, fitness and all, so the best-so-far
//! curve is non-increasing by construction.
//!
//! Fitness evaluations inside a generation may run in parallel; each slot
//! receives a seed derived from (config seed, generation, index), so the
//! outcome is identical at any thread count. A failed evaluation scores
//! +∞ and the search continues.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error)]
pub enum GaError {
    #[error("EmptySpace: genome space declares no genes")]
    EmptySpace,
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("DomainViolation: gene `{gene}`: {reason}")]
    DomainViolation { gene: String, reason: String },
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}

/// Admissible domain of one gene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum GeneDomain {
    Int { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64 },
    /// Real gene sampled log-uniformly (bounds must be positive).
    LogReal { lo: f64, hi: f64 },
    Cat { options: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl GeneValue {
    pub fn as_int(&self) -> i64 {
        match self {
            GeneValue::Int(v) => *v,
            GeneValue::Real(v) => *v as i64,
            GeneValue::Cat(_) => panic!("categorical gene read as int"),
        }
    }

    pub fn as_real(&self) -> f64 {
        match self {
            GeneValue::Int(v) => *v as f64,
            GeneValue::Real(v) => *v,
            GeneValue::Cat(_) => panic!("categorical gene read as real"),
        }
    }

    pub fn as_cat(&self) -> &str {
        match self {
            GeneValue::Cat(s) => s,
            _ => panic!("numeric gene read as categorical"),
        }
    }
}

/// Ordered gene declarations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneSpace {
    genes: Vec<(String, GeneDomain)>,
}

impl GeneSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, domain: GeneDomain) -> &mut Self {
        self.genes.push((name.into(), domain));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn genes(&self) -> &[(String, GeneDomain)] {
        &self.genes
    }

    fn domain(&self, name: &str) -> Option<&GeneDomain> {
        self.genes.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Genome {
        let values = self
            .genes
            .iter()
            .map(|(name, domain)| (name.clone(), sample_domain(domain, rng)))
            .collect();
        Genome { values }
    }

    /// Check that `genome` covers exactly the declared genes within their
    /// domains.
    pub fn validate(&self, genome: &Genome) -> Result<(), GaError> {
        for (name, domain) in &self.genes {
            let value = genome.values.get(name).ok_or_else(|| GaError::DomainViolation {
                gene: name.clone(),
                reason: "missing".into(),
            })?;
            let ok = match (domain, value) {
                (GeneDomain::Int { lo, hi }, GeneValue::Int(v)) => v >= lo && v <= hi,
                (GeneDomain::Real { lo, hi }, GeneValue::Real(v)) => v >= lo && v <= hi,
                (GeneDomain::LogReal { lo, hi }, GeneValue::Real(v)) => v >= lo && v <= hi,
                (GeneDomain::Cat { options }, GeneValue::Cat(v)) => options.contains(v),
                _ => false,
            };
            if !ok {
                return Err(GaError::DomainViolation {
                    gene: name.clone(),
                    reason: format!("value {value:?} outside domain {domain:?}"),
                });
            }
        }
        for name in genome.values.keys() {
            if self.domain(name).is_none() {
                return Err(GaError::DomainViolation {
                    gene: name.clone(),
                    reason: "not declared in the space".into(),
                });
            }
        }
        Ok(())
    }
}

fn sample_domain(domain: &GeneDomain, rng: &mut ChaCha8Rng) -> GeneValue {
    match domain {
        GeneDomain::Int { lo, hi } => GeneValue::Int(rng.random_range(*lo..=*hi)),
        GeneDomain::Real { lo, hi } => GeneValue::Real(rng.random_range(*lo..=*hi)),
        GeneDomain::LogReal { lo, hi } => {
            let v = rng.random_range(lo.ln()..=hi.ln()).exp();
            GeneValue::Real(v.clamp(*lo, *hi))
        }
        GeneDomain::Cat { options } => {
            GeneValue::Cat(options[rng.random_range(0..options.len())].clone())
        }
    }
}

fn mutate_gene(domain: &GeneDomain, value: &GeneValue, rng: &mut ChaCha8Rng) -> GeneValue {
    match domain {
        GeneDomain::Cat { .. } => sample_domain(domain, rng),
        GeneDomain::Int { lo, hi } => {
            let width = (*hi - *lo) as f64;
            let noise: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * 0.1 * width;
            GeneValue::Int(((value.as_int() as f64 + noise).round() as i64).clamp(*lo, *hi))
        }
        GeneDomain::Real { lo, hi } => {
            let noise: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * 0.1 * (hi - lo);
            GeneValue::Real((value.as_real() + noise).clamp(*lo, *hi))
        }
        GeneDomain::LogReal { lo, hi } => {
            let width = hi.ln() - lo.ln();
            let noise: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * 0.1 * width;
            GeneValue::Real((value.as_real().ln() + noise).exp().clamp(*lo, *hi))
        }
    }
}

/// One candidate configuration: named gene values in key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub values: BTreeMap<String, GeneValue>,
}

impl Genome {
    pub fn get(&self, name: &str) -> &GeneValue {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("genome missing gene `{name}`"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elite_count: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 30,
            generations: 10,
            crossover_rate: 0.8,
            mutation_rate: 0.2,
            elite_count: 1,
            seed: 42,
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<(), GaError> {
        if self.population_size < 2 {
            return Err(GaError::InvalidConfig("population_size must be >= 2".into()));
        }
        if self.generations < 1 {
            return Err(GaError::InvalidConfig("generations must be >= 1".into()));
        }
        if self.elite_count < 1 || self.elite_count >= self.population_size {
            return Err(GaError::InvalidConfig(
                "elite_count must be in [1, population_size)".into(),
            ));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(GaError::InvalidConfig(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Fitness contract: lower is better. The second argument is the derived
/// evaluation seed for this (generation, slot); implementations that need
/// reproducibility across generations should ignore it and derive their
/// own randomness from the genome and a fixed seed.
pub trait Fitness: Sync {
    fn evaluate(&self, genome: &Genome, eval_seed: u64) -> Result<f64, String>;
}

impl<F> Fitness for F
where
    F: Fn(&Genome, u64) -> Result<f64, String> + Sync,
{
    fn evaluate(&self, genome: &Genome, eval_seed: u64) -> Result<f64, String> {
        self(genome, eval_seed)
    }
}

/// Snapshot of one generation, written when a checkpoint directory is
/// given.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub generation: usize,
    pub population: Vec<Genome>,
    pub fitness: Vec<f64>,
    pub best_genome: Genome,
    pub best_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Genome,
    pub best_fitness: f64,
    /// Best-so-far fitness after each generation; length = generations.
    pub history: Vec<f64>,
    /// (genome index, message) pairs for evaluations that failed.
    pub failures: Vec<(usize, usize, String)>,
}

struct Individual {
    genome: Genome,
    fitness: Option<f64>,
}

/// Run the genetic search.
///
/// `seeds_in` lets callers plant known-good genomes into the initial
/// population (validated against the space); remaining slots are sampled
/// uniformly. Checkpoints (one JSON per generation) are written to
/// `checkpoint_dir` when given.
pub fn run_ga(
    space: &GeneSpace,
    fitness: &dyn Fitness,
    config: &GaConfig,
    seeds_in: &[Genome],
    checkpoint_dir: Option<&Path>,
) -> Result<GaOutcome, GaError> {
    if space.is_empty() {
        return Err(GaError::EmptySpace);
    }
    config.validate()?;
    if seeds_in.len() > config.population_size {
        return Err(GaError::InvalidConfig(
            "more seed genomes than population slots".into(),
        ));
    }
    for genome in seeds_in {
        space.validate(genome)?;
    }
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Individual> = seeds_in
        .iter()
        .map(|g| Individual {
            genome: g.clone(),
            fitness: None,
        })
        .collect();
    while population.len() < config.population_size {
        population.push(Individual {
            genome: space.sample(&mut rng),
            fitness: None,
        });
    }

    let mut history = Vec::with_capacity(config.generations);
    let mut failures = Vec::new();
    let mut best: Option<(Genome, f64)> = None;

    for generation in 0..config.generations {
        // evaluate every slot without a carried-forward fitness
        let pending: Vec<(usize, Genome)> = population
            .iter()
            .enumerate()
            .filter(|(_, ind)| ind.fitness.is_none())
            .map(|(i, ind)| (i, ind.genome.clone()))
            .collect();
        let results = crate::exec::map_slice(&pending, |(slot, genome)| {
            let eval_seed = seeds::derive(config.seed, &[generation as u64, *slot as u64]);
            (*slot, fitness.evaluate(genome, eval_seed))
        });
        for (slot, outcome) in results {
            match outcome {
                Ok(value) if value.is_finite() => population[slot].fitness = Some(value),
                Ok(value) => {
                    failures.push((generation, slot, format!("non-finite fitness {value}")));
                    population[slot].fitness = Some(f64::INFINITY);
                }
                Err(message) => {
                    failures.push((generation, slot, message));
                    population[slot].fitness = Some(f64::INFINITY);
                }
            }
        }

        // rank ascending; ties keep slot order
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| {
            population[a]
                .fitness
                .unwrap()
                .partial_cmp(&population[b].fitness.unwrap())
                .unwrap()
                .then(a.cmp(&b))
        });

        let gen_best = &population[order[0]];
        let gen_best_fitness = gen_best.fitness.unwrap();
        if best.as_ref().is_none_or(|(_, f)| gen_best_fitness < *f) {
            best = Some((gen_best.genome.clone(), gen_best_fitness));
        }
        let (best_genome, best_fitness) = best.clone().unwrap();
        history.push(best_fitness);

        if let Some(dir) = checkpoint_dir {
            let checkpoint = Checkpoint {
                generation,
                population: population.iter().map(|i| i.genome.clone()).collect(),
                fitness: population.iter().map(|i| i.fitness.unwrap()).collect(),
                best_genome: best_genome.clone(),
                best_fitness,
            };
            let path = dir.join(format!("checkpoint_gen_{generation:03}.json"));
            let json = serde_json::to_string_pretty(&checkpoint).expect("checkpoint serialization");
            std::fs::File::create(path)?.write_all(json.as_bytes())?;
        }

        if generation + 1 == config.generations {
            break;
        }

        // breed the next generation: elites carry their fitness forward
        let mut next: Vec<Individual> = order[..config.elite_count]
            .iter()
            .map(|&i| Individual {
                genome: population[i].genome.clone(),
                fitness: population[i].fitness,
            })
            .collect();

        let half = population.len() / 2;
        let mut pair = 0usize;
        while next.len() < config.population_size {
            // pair the i-th best with the i-th worst
            let a = &population[order[pair % half.max(1)]].genome;
            let b = &population[order[population.len() - 1 - (pair % half.max(1))]].genome;
            let (mut child_a, mut child_b) = (a.clone(), b.clone());
            for (name, _) in space.genes() {
                if rng.random::<f64>() < config.crossover_rate {
                    let va = child_a.values.get(name).cloned().unwrap();
                    let vb = child_b.values.get(name).cloned().unwrap();
                    child_a.values.insert(name.clone(), vb);
                    child_b.values.insert(name.clone(), va);
                }
            }
            for child in [child_a, child_b] {
                if next.len() == config.population_size {
                    break;
                }
                let mut mutated = child;
                for (name, domain) in space.genes() {
                    if rng.random::<f64>() < config.mutation_rate {
                        let current = mutated.values.get(name).cloned().unwrap();
                        mutated
                            .values
                            .insert(name.clone(), mutate_gene(domain, &current, &mut rng));
                    }
                }
                next.push(Individual {
                    genome: mutated,
                    fitness: None,
                });
            }
            pair += 1;
        }
        population = next;
    }

    let (best_genome, best_fitness) = best.unwrap();
    Ok(GaOutcome {
        best: best_genome,
        best_fitness,
        history,
        failures,
    })
}
