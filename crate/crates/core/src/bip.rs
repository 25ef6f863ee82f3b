//! Basic Iteration Process: multi-scale Gaussian sampling with a
//! barrier-penetration (tunneling) acceptance rule, per-scale annealing of the
//! tunneling energy, ground-state detection and mean replacement.
//!
//! One call to [`Bip::step`](crate::optimizer::Optimizer::step) performs one
//! sweep over the `k` particles. After each sweep the annealing counter is
//! advanced and, once the population spread falls below the sampling scale,
//! the worst particle moves to the population mean and the scale is divided
//! by `scale_divisor`.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::benchmark::BudgetedObjective;
use crate::error::{invalid, Result};
use crate::optimizer::{
    euclidean_distance, exhausted_as_done, seeded_rng, uniform_point, BoundsPolicy, Event,
    EventKind, Observer, Optimizer, Particle, Rng, RunSettings, Step, StopReason,
};

/// How the tunneling energy decays with the sweep counter `Ac` inside a scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnnealSchedule {
    /// `gamma0 * exp(-ac / tau)`: strictly decreasing in `ac`.
    Exponential { tau: f64 },
    /// `gamma0 * exp(-1 / ac)`: rises back toward `gamma0` as `ac` grows.
    Reciprocal,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule::Exponential { tau: 1.0 }
    }
}

impl AnnealSchedule {
    pub fn gamma(&self, gamma0: f64, ac: u64) -> f64 {
        match *self {
            AnnealSchedule::Exponential { tau } => gamma0 * (-(ac as f64) / tau).exp(),
            AnnealSchedule::Reciprocal if ac == 0 => gamma0,
            AnnealSchedule::Reciprocal => gamma0 * (-1.0 / ac as f64).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipConfig {
    /// Population size `k`.
    pub k: usize,
    /// Proportionality constant `A` of the tunneling probability. `0` disables tunneling.
    pub amplitude: f64,
    pub schedule: AnnealSchedule,
    pub scale_divisor: f64,
    /// Stop once the sampling scale drops below this value.
    pub min_scale: f64,
    pub mean_replacement: bool,
    /// Combination of per-dimension spreads compared against the scale.
    pub spread: SpreadAggregate,
    /// Start every particle at this point instead of uniformly in the box.
    pub init: Option<Vec<f64>>,
    pub settings: RunSettings,
}

impl Default for BipConfig {
    fn default() -> Self {
        Self {
            k: 15,
            amplitude: 1.0,
            schedule: AnnealSchedule::default(),
            scale_divisor: 2.0,
            min_scale: 0.0,
            mean_replacement: true,
            spread: SpreadAggregate::default(),
            init: None,
            settings: RunSettings::default(),
        }
    }
}

impl BipConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(invalid("BIP population size k must be at least 2"));
        }
        if !self.amplitude.is_finite() || self.amplitude < 0.0 {
            return Err(invalid("tunneling amplitude A must be finite and non-negative"));
        }
        if let AnnealSchedule::Exponential { tau } = self.schedule {
            if !tau.is_finite() || tau <= 0.0 {
                return Err(invalid("annealing tau must be positive"));
            }
        }
        if !self.scale_divisor.is_finite() || self.scale_divisor <= 1.0 {
            return Err(invalid("scale divisor must be greater than 1"));
        }
        if self.min_scale.is_nan() || self.min_scale < 0.0 {
            return Err(invalid("minimum scale must be non-negative"));
        }
        self.settings.validate()
    }
}

/// Full per-sweep state of a BIP run.
#[derive(Debug, Clone, PartialEq)]
pub struct BipState {
    pub particles: Vec<Particle>,
    pub sigma_s: f64,
    pub gamma: f64,
    pub gamma0: f64,
    pub ac: u64,
    pub best_so_far: Particle,
    pub scale_index: u32,
    pub initial_span: f64,
    pub sweeps: u64,
}

impl BipState {
    /// Sampling scale after `scale_index` divisions, computed in closed form.
    pub fn scale_at(initial_span: f64, divisor: f64, scale_index: u32) -> f64 {
        initial_span / divisor.powi(scale_index as i32)
    }
}

/// Gaussian move `x + sigma * z`, `z ~ N(0, I)`, mapped back into the box.
pub fn gaussian_step(
    x: &[f64],
    sigma: f64,
    lower: &[f64],
    upper: &[f64],
    bounds: BoundsPolicy,
    rng: &mut Rng,
) -> Vec<f64> {
    let mut out: Vec<f64> = x
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sigma * z
        })
        .collect();
    bounds.apply(&mut out, lower, upper, rng);
    out
}

/// `min(1, A exp(-dx sqrt(df) / gamma))`.
///
/// `delta_f <= 0` is treated as no barrier. `gamma` must be positive.
pub fn tunneling_probability(delta_f: f64, delta_x: f64, gamma: f64, amplitude: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(invalid(format!("tunneling energy gamma must be positive, got {gamma}")));
    }
    if delta_x.is_nan() || delta_x < 0.0 {
        return Err(invalid(format!("barrier width must be non-negative, got {delta_x}")));
    }
    if amplitude.is_nan() || amplitude < 0.0 {
        return Err(invalid(format!("amplitude must be non-negative, got {amplitude}")));
    }
    Ok(transmission(delta_f, delta_x, gamma, amplitude))
}

/// Total version of [`tunneling_probability`] used inside the sweep, where
/// `gamma` may have decayed to zero.
pub(crate) fn transmission(delta_f: f64, delta_x: f64, gamma: f64, amplitude: f64) -> f64 {
    let barrier = delta_x * delta_f.max(0.0).sqrt();
    if barrier == 0.0 {
        return amplitude.min(1.0);
    }
    (amplitude * (-barrier / gamma).exp()).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acceptance {
    pub kind: EventKind,
    pub delta_f: f64,
    pub delta_x: f64,
    /// Probability with which the candidate was accepted (1 for better moves).
    pub probability_used: f64,
    /// Whether the candidate was worse and went through the tunneling draw.
    pub tunneling_decision: bool,
}

impl Acceptance {
    pub fn accepted(&self) -> bool {
        self.kind != EventKind::Reject
    }

    /// Probability recorded in diagnostics: only tunneling decisions carry one.
    pub fn logged_probability(&self) -> Option<f64> {
        self.tunneling_decision.then_some(self.probability_used)
    }
}

/// Barrier-penetration acceptance. A candidate no worse than the current
/// particle always replaces it; a worse one replaces it with the tunneling
/// probability. Returns the decision; `current` is updated in place.
pub fn accept_sample(
    current: &mut Particle,
    candidate: Particle,
    gamma: f64,
    amplitude: f64,
    rng: &mut Rng,
) -> Acceptance {
    let delta_f = candidate.fitness - current.fitness;
    let delta_x = euclidean_distance(&candidate.position, &current.position);
    let mut decision = Acceptance {
        kind: EventKind::AcceptBetter,
        delta_f,
        delta_x,
        probability_used: 1.0,
        tunneling_decision: false,
    };
    if candidate.fitness <= current.fitness {
        *current = candidate;
        return decision;
    }
    if amplitude == 0.0 {
        decision.kind = EventKind::Reject;
        decision.probability_used = 0.0;
        return decision;
    }
    let t = transmission(delta_f, delta_x, gamma, amplitude);
    let u: f64 = rng.random();
    decision.probability_used = t;
    decision.tunneling_decision = true;
    if u < t {
        *current = candidate;
        decision.kind = EventKind::AcceptTunnel;
    } else {
        decision.kind = EventKind::Reject;
    }
    decision
}

/// How per-dimension standard deviations are combined into one spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpreadAggregate {
    Max,
    #[default]
    Rms,
    Mean,
}

/// Sample standard deviation (n - 1 denominator) of every coordinate.
pub fn per_dimension_std(particles: &[Particle]) -> Vec<f64> {
    let k = particles.len();
    if k < 2 {
        return vec![0.0; particles.first().map_or(0, |p| p.position.len())];
    }
    let dim = particles[0].position.len();
    (0..dim)
        .map(|d| {
            let mean = particles.iter().map(|p| p.position[d]).sum::<f64>() / k as f64;
            let ss: f64 = particles.iter().map(|p| (p.position[d] - mean).powi(2)).sum();
            (ss / (k - 1) as f64).sqrt()
        })
        .collect()
}

impl SpreadAggregate {
    pub fn combine(self, stds: &[f64]) -> f64 {
        if stds.is_empty() {
            return 0.0;
        }
        let n = stds.len() as f64;
        match self {
            SpreadAggregate::Max => stds.iter().cloned().fold(0.0, f64::max),
            SpreadAggregate::Rms => (stds.iter().map(|s| s * s).sum::<f64>() / n).sqrt(),
            SpreadAggregate::Mean => stds.iter().sum::<f64>() / n,
        }
    }
}

/// Largest per-dimension sample standard deviation.
pub fn population_spread(particles: &[Particle]) -> f64 {
    SpreadAggregate::Max.combine(&per_dimension_std(particles))
}

/// Ground state of the current scale: population spread strictly below `sigma_s`.
pub fn ground_state_reached(particles: &[Particle], sigma_s: f64, spread: SpreadAggregate) -> bool {
    spread.combine(&per_dimension_std(particles)) < sigma_s
}

/// Arithmetic mean position of the population.
pub fn mean_position(particles: &[Particle]) -> Vec<f64> {
    let k = particles.len() as f64;
    let dim = particles[0].position.len();
    (0..dim)
        .map(|d| particles.iter().map(|p| p.position[d]).sum::<f64>() / k)
        .collect()
}

/// Index of the worst particle; ties go to the lowest index.
pub fn worst_index(particles: &[Particle]) -> usize {
    let mut worst = 0;
    for (i, p) in particles.iter().enumerate().skip(1) {
        if p.fitness > particles[worst].fitness {
            worst = i;
        }
    }
    worst
}

/// Moves the worst particle to the mean of all positions (taken before the
/// move, worst included) and re-evaluates it. Returns the replaced index.
pub fn mean_replace_worst(
    particles: &mut [Particle],
    objective: &mut BudgetedObjective,
) -> Result<usize> {
    if particles.len() < 2 {
        return Err(invalid("mean replacement needs at least two particles"));
    }
    let mean = mean_position(particles);
    let worst = worst_index(particles);
    let fitness = objective.evaluate(&mean)?;
    particles[worst] = Particle::new(mean, fitness);
    Ok(worst)
}

/// Advances the annealing counter by one sweep and returns the new gamma.
pub fn anneal_gamma(state: &mut BipState, schedule: &AnnealSchedule) -> f64 {
    state.ac += 1;
    state.gamma = schedule.gamma(state.gamma0, state.ac);
    state.gamma
}

/// Starts a new scale: `Ac = 0`, `gamma0 = gamma = sigma_s`.
pub fn reset_scale(state: &mut BipState) {
    state.ac = 0;
    state.gamma0 = state.sigma_s;
    state.gamma = state.sigma_s;
}

pub struct Bip {
    config: BipConfig,
    rng: Rng,
    state: Option<BipState>,
}

impl Bip {
    pub fn new(config: BipConfig) -> Result<Self> {
        config.validate()?;
        let rng = seeded_rng(config.settings.seed);
        Ok(Self { config, rng, state: None })
    }

    pub fn config(&self) -> &BipConfig {
        &self.config
    }

    /// `None` until the population has been initialized.
    pub fn state(&self) -> Option<&BipState> {
        self.state.as_ref()
    }

    fn initialize(
        &mut self,
        objective: &mut BudgetedObjective,
        observer: &mut dyn Observer,
    ) -> Result<Step> {
        let spec = objective.spec().clone();
        if let Some(init) = &self.config.init {
            if init.len() != spec.dim() {
                return Err(invalid(format!(
                    "init point has {} coordinates, objective has {}",
                    init.len(),
                    spec.dim()
                )));
            }
        }
        let mut particles = Vec::with_capacity(self.config.k);
        for i in 0..self.config.k {
            let position = match &self.config.init {
                Some(p) => {
                    let mut p = p.clone();
                    self.config.settings.bounds.apply(&mut p, spec.lower(), spec.upper(), &mut self.rng);
                    p
                }
                None => uniform_point(spec.lower(), spec.upper(), &mut self.rng),
            };
            let fitness = match exhausted_as_done(objective.evaluate(&position))? {
                Ok(f) => f,
                Err(done) => return Ok(done),
            };
            observer.on_event(&Event {
                scale: spec.span(),
                ..Event::evaluation(objective.evals_used(), 0, i, EventKind::Init, &position, fitness)
            });
            particles.push(Particle::new(position, fitness));
        }
        let best = particles[..]
            .iter()
            .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
            .cloned()
            .expect("k >= 2");
        let span = spec.span();
        self.state = Some(BipState {
            particles,
            sigma_s: span,
            gamma: span,
            gamma0: span,
            ac: 0,
            best_so_far: best,
            scale_index: 0,
            initial_span: span,
            sweeps: 0,
        });
        Ok(Step::Continue)
    }

    fn sweep(&mut self, objective: &mut BudgetedObjective, observer: &mut dyn Observer) -> Result<Step> {
        let cfg = &self.config;
        let state = self.state.as_mut().expect("initialized");
        let (lower, upper) = (objective.spec().lower().to_vec(), objective.spec().upper().to_vec());
        state.sweeps += 1;
        let generation = state.sweeps;
        for i in 0..cfg.k {
            let position = gaussian_step(
                &state.particles[i].position,
                state.sigma_s,
                &lower,
                &upper,
                cfg.settings.bounds,
                &mut self.rng,
            );
            let fitness = match exhausted_as_done(objective.evaluate(&position))? {
                Ok(f) => f,
                Err(done) => return Ok(done),
            };
            let decision = accept_sample(
                &mut state.particles[i],
                Particle::new(position.clone(), fitness),
                state.gamma,
                cfg.amplitude,
                &mut self.rng,
            );
            observer.on_event(&Event {
                evaluation_index: objective.evals_used(),
                generation,
                particle_index: Some(i),
                kind: decision.kind,
                position: &position,
                fitness,
                delta_f: decision.delta_f,
                delta_x: decision.delta_x,
                gamma: state.gamma,
                probability: decision.logged_probability(),
                scale: state.sigma_s,
            });
            if fitness < state.best_so_far.fitness {
                state.best_so_far = Particle::new(position, fitness);
            }
        }
        anneal_gamma(state, &cfg.schedule);

        if !ground_state_reached(&state.particles, state.sigma_s, cfg.spread) {
            return Ok(Step::Continue);
        }
        if cfg.mean_replacement {
            let worst = match exhausted_as_done(mean_replace_worst(&mut state.particles, objective))? {
                Ok(w) => w,
                Err(done) => return Ok(done),
            };
            let p = &state.particles[worst];
            observer.on_event(&Event {
                gamma: state.gamma,
                scale: state.sigma_s,
                ..Event::evaluation(
                    objective.evals_used(),
                    generation,
                    worst,
                    EventKind::MeanReplace,
                    &p.position,
                    p.fitness,
                )
            });
            if p.fitness < state.best_so_far.fitness {
                state.best_so_far = p.clone();
            }
        }
        state.scale_index += 1;
        state.sigma_s = BipState::scale_at(state.initial_span, cfg.scale_divisor, state.scale_index);
        reset_scale(state);
        observer.on_event(&Event {
            evaluation_index: objective.evals_used(),
            generation,
            particle_index: None,
            kind: EventKind::ScaleHalve,
            position: &[],
            fitness: state.best_so_far.fitness,
            delta_f: f64::NAN,
            delta_x: f64::NAN,
            gamma: state.gamma,
            probability: None,
            scale: state.sigma_s,
        });
        if state.sigma_s.is_nan() || state.sigma_s <= 0.0 || state.sigma_s < cfg.min_scale {
            return Ok(Step::Done(StopReason::ScaleFloor));
        }
        Ok(Step::Continue)
    }
}

impl Optimizer for Bip {
    fn name(&self) -> &'static str {
        "bip"
    }

    fn settings(&self) -> &RunSettings {
        &self.config.settings
    }

    fn step(&mut self, objective: &mut BudgetedObjective, observer: &mut dyn Observer) -> Result<Step> {
        if self.state.is_none() {
            return self.initialize(objective, observer);
        }
        self.sweep(objective, observer)
    }
}
