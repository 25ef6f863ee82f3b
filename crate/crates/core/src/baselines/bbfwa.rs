use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::benchmark::BudgetedObjective;
use crate::error::{invalid, Result};
use crate::optimizer::{
    exhausted_as_done, seeded_rng, uniform_point, Event, EventKind, Observer, Optimizer, Particle,
    Rng, RunSettings, Step,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbfwaConfig {
    /// Sparks per generation.
    pub np: usize,
    /// Initial amplitude; `None` uses the full box span of each dimension.
    pub amp_init: Option<f64>,
    pub amp_grow: f64,
    pub amp_shrink: f64,
    pub settings: RunSettings,
}

impl Default for BbfwaConfig {
    fn default() -> Self {
        Self { np: 300, amp_init: None, amp_grow: 1.2, amp_shrink: 0.9, settings: RunSettings::default() }
    }
}

impl BbfwaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.np < 1 {
            return Err(invalid("BBFWA needs at least one spark"));
        }
        if !(self.amp_shrink > 0.0 && self.amp_shrink < 1.0 && self.amp_grow > 1.0) {
            return Err(invalid("BBFWA amplitudes need 0 < shrink < 1 < grow"));
        }
        if !self.amp_grow.is_finite() {
            return Err(invalid("BBFWA growth factor must be finite"));
        }
        if let Some(a) = self.amp_init {
            if !a.is_finite() || a <= 0.0 {
                return Err(invalid("BBFWA initial amplitude must be positive"));
            }
        }
        self.settings.validate()
    }
}

/// Bare-bones fireworks: a single firework explodes into uniform sparks in a
/// hyperbox around it. The amplitude grows after an improving generation and
/// shrinks otherwise.
pub struct Bbfwa {
    config: BbfwaConfig,
    rng: Rng,
    firework: Option<Particle>,
    amplitude: Vec<f64>,
    max_amplitude: Vec<f64>,
    generation: u64,
}

impl Bbfwa {
    pub fn new(config: BbfwaConfig) -> Result<Self> {
        config.validate()?;
        let rng = seeded_rng(config.settings.seed);
        Ok(Self { config, rng, firework: None, amplitude: Vec::new(), max_amplitude: Vec::new(), generation: 0 })
    }

    pub fn firework(&self) -> Option<&Particle> {
        self.firework.as_ref()
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }
}

impl Optimizer for Bbfwa {
    fn name(&self) -> &'static str {
        "bbfwa"
    }

    fn settings(&self) -> &RunSettings {
        &self.config.settings
    }

    fn step(&mut self, objective: &mut BudgetedObjective, observer: &mut dyn Observer) -> Result<Step> {
        let spec = objective.spec().clone();
        let Some(fw) = self.firework.clone() else {
            let x = uniform_point(spec.lower(), spec.upper(), &mut self.rng);
            let f = match exhausted_as_done(objective.evaluate(&x))? {
                Ok(f) => f,
                Err(done) => return Ok(done),
            };
            observer.on_event(&Event::evaluation(objective.evals_used(), 0, 0, EventKind::Init, &x, f));
            self.firework = Some(Particle::new(x, f));
            self.max_amplitude = spec.lower().iter().zip(spec.upper()).map(|(l, u)| u - l).collect();
            self.amplitude = match self.config.amp_init {
                Some(a) => self.max_amplitude.iter().map(|m| a.min(*m)).collect(),
                None => self.max_amplitude.clone(),
            };
            return Ok(Step::Continue);
        };

        self.generation += 1;
        let mut sparks: Vec<(u64, Particle)> = Vec::with_capacity(self.config.np);
        let mut outcome = Step::Continue;
        for _ in 0..self.config.np {
            let mut x: Vec<f64> = fw
                .position
                .iter()
                .zip(&self.amplitude)
                .map(|(&c, &a)| c + a * self.rng.random_range(-1.0..=1.0))
                .collect();
            self.config.settings.bounds.apply(&mut x, spec.lower(), spec.upper(), &mut self.rng);
            match exhausted_as_done(objective.evaluate(&x))? {
                Ok(f) => sparks.push((objective.evals_used(), Particle::new(x, f))),
                Err(done) => {
                    outcome = done;
                    break;
                }
            }
        }
        if sparks.is_empty() {
            return Ok(outcome);
        }

        let mut best = 0;
        for (j, (_, s)) in sparks.iter().enumerate().skip(1) {
            if s.fitness < sparks[best].1.fitness {
                best = j;
            }
        }
        // a spark equal to the firework is not an improvement
        let improved = sparks[best].1.fitness < fw.fitness;
        for (j, (idx, s)) in sparks.iter().enumerate() {
            let kind = if improved && j == best { EventKind::AcceptBetter } else { EventKind::Reject };
            observer.on_event(&Event {
                scale: self.amplitude.iter().cloned().fold(0.0, f64::max),
                ..Event::evaluation(*idx, self.generation, 0, kind, &s.position, s.fitness)
            });
        }
        let factor = if improved { self.config.amp_grow } else { self.config.amp_shrink };
        for (a, m) in self.amplitude.iter_mut().zip(&self.max_amplitude) {
            *a = (*a * factor).clamp(f64::EPSILON, *m);
        }
        if improved {
            self.firework = Some(sparks.swap_remove(best).1);
        }
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{double_well, make_benchmark, DoubleWellParams};
    use crate::optimizer::Silent;

    #[test]
    fn amplitude_shrinks_geometrically_on_failure() {
        // Firework starts at the unique minimum of the tilted well, so no
        // spark can improve on it.
        let spec = double_well(DoubleWellParams { dim: 1, ..Default::default() }).unwrap();
        let mut obj = BudgetedObjective::new(spec.clone(), 1_000_000);
        let mut fwa = Bbfwa::new(BbfwaConfig { np: 10, ..Default::default() }).unwrap();
        fwa.step(&mut obj, &mut Silent).unwrap();
        let x0 = spec.optimum_position().to_vec();
        let f0 = spec.evaluate(&x0);
        fwa.firework = Some(Particle::new(x0, f0));
        fwa.amplitude = vec![1.0];
        for g in 1..=20 {
            fwa.step(&mut obj, &mut Silent).unwrap();
            let expected = 0.9f64.powi(g);
            assert!((fwa.amplitude()[0] - expected).abs() < 1e-12, "g={g}");
        }
    }

    #[test]
    fn amplitude_stays_within_span() {
        let spec = make_benchmark(7, 3).unwrap();
        let mut obj = BudgetedObjective::new(spec.clone(), 30_000);
        let mut fwa = Bbfwa::new(BbfwaConfig::default()).unwrap();
        while fwa.step(&mut obj, &mut Silent).unwrap() == Step::Continue {
            assert!(fwa.amplitude().iter().all(|&a| a >= f64::EPSILON && a <= spec.span()));
        }
    }

    #[test]
    fn invalid_factors_rejected() {
        assert!(Bbfwa::new(BbfwaConfig { amp_shrink: 1.0, ..Default::default() }).is_err());
        assert!(Bbfwa::new(BbfwaConfig { amp_grow: 0.9, ..Default::default() }).is_err());
    }
}
