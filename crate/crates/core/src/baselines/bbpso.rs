use serde::{Deserialize, Serialize};

use super::{best_index, midpoint_gaussian};
use crate::benchmark::BudgetedObjective;
use crate::error::{invalid, Result};
use crate::optimizer::{
    exhausted_as_done, seeded_rng, uniform_point, Event, EventKind, Observer, Optimizer, Particle,
    Rng, RunSettings, Step,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbpsoConfig {
    pub np: usize,
    pub settings: RunSettings,
}

impl Default for BbpsoConfig {
    fn default() -> Self {
        Self { np: 20, settings: RunSettings::default() }
    }
}

impl BbpsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.np < 2 {
            return Err(invalid("BBPSO swarm size must be at least 2"));
        }
        self.settings.validate()
    }
}

/// Bare-bones PSO: every coordinate is drawn from a Gaussian centred midway
/// between the personal and global best, with their distance as deviation.
pub struct Bbpso {
    config: BbpsoConfig,
    rng: Rng,
    pbest: Vec<Particle>,
    gbest: usize,
    generation: u64,
}

impl Bbpso {
    pub fn new(config: BbpsoConfig) -> Result<Self> {
        config.validate()?;
        let rng = seeded_rng(config.settings.seed);
        Ok(Self { config, rng, pbest: Vec::new(), gbest: 0, generation: 0 })
    }

    pub fn personal_bests(&self) -> &[Particle] {
        &self.pbest
    }

    pub fn global_best(&self) -> Option<&Particle> {
        self.pbest.get(self.gbest)
    }

    /// Seeds the swarm with given memories instead of a random start.
    pub fn with_population(mut self, pbest: Vec<Particle>) -> Self {
        self.gbest = best_index(&pbest);
        self.pbest = pbest;
        self
    }
}

impl Optimizer for Bbpso {
    fn name(&self) -> &'static str {
        "bbpso"
    }

    fn settings(&self) -> &RunSettings {
        &self.config.settings
    }

    fn step(&mut self, objective: &mut BudgetedObjective, observer: &mut dyn Observer) -> Result<Step> {
        let spec = objective.spec().clone();
        if self.pbest.is_empty() {
            for i in 0..self.config.np {
                let x = uniform_point(spec.lower(), spec.upper(), &mut self.rng);
                let f = match exhausted_as_done(objective.evaluate(&x))? {
                    Ok(f) => f,
                    Err(done) => return Ok(done),
                };
                observer.on_event(&Event::evaluation(objective.evals_used(), 0, i, EventKind::Init, &x, f));
                self.pbest.push(Particle::new(x, f));
            }
            self.gbest = best_index(&self.pbest);
            return Ok(Step::Continue);
        }

        self.generation += 1;
        let gbest = self.pbest[self.gbest].position.clone();
        let mut outcome = Step::Continue;
        for i in 0..self.pbest.len() {
            let mut x: Vec<f64> = self.pbest[i]
                .position
                .iter()
                .zip(&gbest)
                .map(|(&p, &g)| midpoint_gaussian(p, g, &mut self.rng))
                .collect();
            self.config.settings.bounds.apply(&mut x, spec.lower(), spec.upper(), &mut self.rng);
            let f = match exhausted_as_done(objective.evaluate(&x))? {
                Ok(f) => f,
                Err(done) => {
                    outcome = done;
                    break;
                }
            };
            let kind = if f < self.pbest[i].fitness { EventKind::AcceptBetter } else { EventKind::Reject };
            observer.on_event(&Event::evaluation(objective.evals_used(), self.generation, i, kind, &x, f));
            if kind == EventKind::AcceptBetter {
                self.pbest[i] = Particle::new(x, f);
            }
        }
        self.gbest = best_index(&self.pbest);
        Ok(outcome)
    }
}
