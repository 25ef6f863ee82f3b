use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{best_index, midpoint_gaussian};
use crate::benchmark::BudgetedObjective;
use crate::error::{invalid, Result};
use crate::optimizer::{
    exhausted_as_done, seeded_rng, uniform_point, Event, EventKind, Observer, Optimizer, Particle,
    Rng, RunSettings, Step,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdeConfig {
    pub np: usize,
    pub cr_mean: f64,
    pub cr_std: f64,
    pub settings: RunSettings,
}

impl Default for GbdeConfig {
    fn default() -> Self {
        Self { np: 100, cr_mean: 0.5, cr_std: 0.1, settings: RunSettings::default() }
    }
}

impl GbdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.np < 4 {
            return Err(invalid("GBDE population size must be at least 4"));
        }
        if !self.cr_std.is_finite() || self.cr_std < 0.0 || !self.cr_mean.is_finite() {
            return Err(invalid("GBDE crossover distribution needs finite mean and std >= 0"));
        }
        self.settings.validate()
    }
}

/// Crossover-rate draws are clamped into `[0, 1]`.
pub fn clamp_crossover_rate(cr: f64) -> f64 {
    cr.clamp(0.0, 1.0)
}

/// Gaussian bare-bones DE: mutants are drawn midway between each individual
/// and the population best, then binomially crossed with the parent and kept
/// when not worse.
pub struct Gbde {
    config: GbdeConfig,
    rng: Rng,
    cr_dist: Normal<f64>,
    population: Vec<Particle>,
    best: usize,
    generation: u64,
}

impl Gbde {
    pub fn new(config: GbdeConfig) -> Result<Self> {
        config.validate()?;
        let rng = seeded_rng(config.settings.seed);
        let cr_dist = Normal::new(config.cr_mean, config.cr_std)
            .map_err(|e| invalid(format!("crossover distribution: {e}")))?;
        Ok(Self { config, rng, cr_dist, population: Vec::new(), best: 0, generation: 0 })
    }

    pub fn population(&self) -> &[Particle] {
        &self.population
    }

    /// Starts from a given population instead of a random one.
    pub fn with_population(mut self, population: Vec<Particle>) -> Self {
        self.best = best_index(&population);
        self.population = population;
        self
    }

    /// Mutant for individual `i`, before crossover.
    pub fn mutant(&mut self, i: usize) -> Vec<f64> {
        let best = &self.population[self.best].position;
        self.population[i]
            .position
            .iter()
            .zip(best)
            .map(|(&x, &b)| midpoint_gaussian(b, x, &mut self.rng))
            .collect()
    }
}

impl Optimizer for Gbde {
    fn name(&self) -> &'static str {
        "gbde"
    }

    fn settings(&self) -> &RunSettings {
        &self.config.settings
    }

    fn step(&mut self, objective: &mut BudgetedObjective, observer: &mut dyn Observer) -> Result<Step> {
        let spec = objective.spec().clone();
        if self.population.is_empty() {
            for i in 0..self.config.np {
                let x = uniform_point(spec.lower(), spec.upper(), &mut self.rng);
                let f = match exhausted_as_done(objective.evaluate(&x))? {
                    Ok(f) => f,
                    Err(done) => return Ok(done),
                };
                observer.on_event(&Event::evaluation(objective.evals_used(), 0, i, EventKind::Init, &x, f));
                self.population.push(Particle::new(x, f));
            }
            self.best = best_index(&self.population);
            return Ok(Step::Continue);
        }

        self.generation += 1;
        let dim = spec.dim();
        let mut outcome = Step::Continue;
        for i in 0..self.population.len() {
            let cr = clamp_crossover_rate(self.cr_dist.sample(&mut self.rng));
            let forced = self.rng.random_range(0..dim);
            let mutant = self.mutant(i);
            let mut trial: Vec<f64> = (0..dim)
                .map(|d| {
                    if d == forced || self.rng.random::<f64>() < cr {
                        mutant[d]
                    } else {
                        self.population[i].position[d]
                    }
                })
                .collect();
            self.config.settings.bounds.apply(&mut trial, spec.lower(), spec.upper(), &mut self.rng);
            let f = match exhausted_as_done(objective.evaluate(&trial))? {
                Ok(f) => f,
                Err(done) => {
                    outcome = done;
                    break;
                }
            };
            let kind = if f <= self.population[i].fitness { EventKind::AcceptBetter } else { EventKind::Reject };
            observer.on_event(&Event::evaluation(objective.evals_used(), self.generation, i, kind, &trial, f));
            if kind == EventKind::AcceptBetter {
                self.population[i] = Particle::new(trial, f);
            }
        }
        self.best = best_index(&self.population);
        Ok(outcome)
    }
}
