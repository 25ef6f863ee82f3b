//! Pieces shared by every optimizer: particles, bound handling, the event
//! stream consumed by diagnostics, and the step-wise driver.

use rand::Rng as _;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::benchmark::BudgetedObjective;
use crate::error::{invalid, Error, Result};

/// Random stream used by all optimizers. Seeded explicitly, never from entropy.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Success threshold on `f(x) - f(x*)` used for Sr unless overridden.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-8;

/// Longest error trace kept per trial.
pub const MAX_TRACE_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub fitness: f64,
}

impl Particle {
    pub fn new(position: Vec<f64>, fitness: f64) -> Self {
        Self { position, fitness }
    }
}

/// What happens to a coordinate that leaves the search box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundsPolicy {
    #[default]
    Clamp,
    Reflect,
    Resample,
}

impl BoundsPolicy {
    /// Maps every coordinate of `x` back into `[lower, upper]`.
    pub fn apply(self, x: &mut [f64], lower: &[f64], upper: &[f64], rng: &mut Rng) {
        for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
            if *v >= lo && *v <= hi {
                continue;
            }
            *v = match self {
                BoundsPolicy::Clamp => v.clamp(lo, hi),
                BoundsPolicy::Reflect => reflect(*v, lo, hi),
                BoundsPolicy::Resample => rng.random_range(lo..=hi),
            };
        }
    }
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    if !v.is_finite() {
        return v.clamp(lo, hi);
    }
    let width = hi - lo;
    // fold onto a period of 2 * width, then mirror the upper half
    let t = (v - lo).rem_euclid(2.0 * width);
    let folded = if t > width { 2.0 * width - t } else { t };
    (lo + folded).clamp(lo, hi)
}

/// Settings every algorithm shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    /// Error at or below which a trial counts as a success.
    pub success_threshold: f64,
    /// Stop as soon as the best error reaches `success_threshold`.
    /// Off by default, so runs spend their whole budget.
    pub stop_at_success: bool,
    pub bounds: BoundsPolicy,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            stop_at_success: false,
            bounds: BoundsPolicy::Clamp,
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if self.success_threshold.is_nan() || self.success_threshold < 0.0 {
            return Err(invalid("success threshold must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Init,
    AcceptBetter,
    AcceptTunnel,
    Reject,
    MeanReplace,
    ScaleHalve,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Init => "init",
            EventKind::AcceptBetter => "accept-better",
            EventKind::AcceptTunnel => "accept-tunnel",
            EventKind::Reject => "reject",
            EventKind::MeanReplace => "mean-replace",
            EventKind::ScaleHalve => "scale-halve",
        }
    }

    /// Whether the event carries a freshly evaluated position.
    pub fn is_evaluation(self) -> bool {
        !matches!(self, EventKind::ScaleHalve)
    }

    /// Whether the particle now sits at the event's position.
    pub fn moves_particle(self) -> bool {
        matches!(
            self,
            EventKind::Init | EventKind::AcceptBetter | EventKind::AcceptTunnel | EventKind::MeanReplace
        )
    }
}

/// One diagnostics event, emitted synchronously by an optimizer.
///
/// For `Reject` the position is the rejected candidate. `ScaleHalve` carries no
/// position and reuses the evaluation index of the preceding evaluation;
/// `scale` then holds the new sampling scale.
#[derive(Debug, Clone, Copy)]
pub struct Event<'a> {
    pub evaluation_index: u64,
    pub generation: u64,
    pub particle_index: Option<usize>,
    pub kind: EventKind,
    pub position: &'a [f64],
    pub fitness: f64,
    pub delta_f: f64,
    pub delta_x: f64,
    pub gamma: f64,
    /// Tunneling probability, present only when a tunneling decision was made.
    pub probability: Option<f64>,
    pub scale: f64,
}

impl<'a> Event<'a> {
    /// A plain evaluation event with no tunneling information.
    pub fn evaluation(
        evaluation_index: u64,
        generation: u64,
        particle_index: usize,
        kind: EventKind,
        position: &'a [f64],
        fitness: f64,
    ) -> Self {
        Self {
            evaluation_index,
            generation,
            particle_index: Some(particle_index),
            kind,
            position,
            fitness,
            delta_f: f64::NAN,
            delta_x: f64::NAN,
            gamma: f64::NAN,
            probability: None,
            scale: f64::NAN,
        }
    }
}

pub trait Observer {
    fn on_event(&mut self, event: &Event<'_>);
}

impl<F: FnMut(&Event<'_>)> Observer for F {
    fn on_event(&mut self, event: &Event<'_>) {
        self(event)
    }
}

/// Observer that discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct Silent;

impl Observer for Silent {
    fn on_event(&mut self, _: &Event<'_>) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    BudgetExhausted,
    TargetReached,
    ScaleFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    Done(StopReason),
}

/// A population-based optimizer driven one sweep (generation) at a time.
///
/// The first call to [`step`](Optimizer::step) initializes the population.
pub trait Optimizer {
    fn name(&self) -> &'static str;

    fn step(&mut self, objective: &mut BudgetedObjective, observer: &mut dyn Observer)
        -> Result<Step>;

    fn settings(&self) -> &RunSettings;

    /// Runs until the budget is spent or another stop condition fires.
    fn run(
        &mut self,
        objective: &mut BudgetedObjective,
        observer: &mut dyn Observer,
    ) -> Result<StopReason> {
        let settings = *self.settings();
        loop {
            if objective.is_exhausted() {
                return Ok(StopReason::BudgetExhausted);
            }
            if let Step::Done(reason) = self.step(objective, observer)? {
                return Ok(reason);
            }
            if settings.stop_at_success
                && objective.best_error().is_some_and(|e| e <= settings.success_threshold)
            {
                return Ok(StopReason::TargetReached);
            }
        }
    }
}

/// Turns a budget-exhaustion error into a normal stop.
pub(crate) fn exhausted_as_done<T>(r: Result<T>) -> Result<std::result::Result<T, Step>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(Error::BudgetExhausted { .. }) => Ok(Err(Step::Done(StopReason::BudgetExhausted))),
        Err(e) => Err(e),
    }
}

/// Uniform random point in the box.
pub fn uniform_point(lower: &[f64], upper: &[f64], rng: &mut Rng) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&l, &u)| if l < u { rng.random_range(l..=u) } else { l })
        .collect()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Result of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub algorithm: String,
    pub function: String,
    pub dim: usize,
    pub seed: u64,
    /// `f(x_best) - f(x*)`, or `+inf` when no evaluation happened.
    pub final_error: f64,
    pub evals_used: u64,
    /// `(evaluation_index, best_error)` points, non-increasing in the error.
    pub error_trace: Vec<(u64, f64)>,
    pub succeeded: bool,
    /// `None` when the budget allowed no evaluation at all.
    pub best_position: Option<Vec<f64>>,
    pub stop_reason: StopReason,
}

impl TrialOutcome {
    pub fn from_objective(
        algorithm: &str,
        seed: u64,
        objective: &BudgetedObjective,
        success_threshold: f64,
        stop_reason: StopReason,
    ) -> Self {
        let final_error = objective.best_error().unwrap_or(f64::INFINITY);
        Self {
            algorithm: algorithm.to_string(),
            function: objective.spec().name().to_string(),
            dim: objective.spec().dim(),
            seed,
            final_error,
            evals_used: objective.evals_used(),
            error_trace: downsample_trace(objective.improvements(), objective.evals_used()),
            succeeded: final_error <= success_threshold,
            best_position: objective.best().map(|(x, _)| x.to_vec()),
            stop_reason,
        }
    }

    pub fn has_best(&self) -> bool {
        self.best_position.is_some()
    }
}

/// Keeps at most [`MAX_TRACE_POINTS`] points of an improvement trace, always
/// including the first improvement and a closing point at `last_eval`.
pub fn downsample_trace(points: &[(u64, f64)], last_eval: u64) -> Vec<(u64, f64)> {
    let mut full: Vec<(u64, f64)> = points.to_vec();
    if let Some(&(idx, err)) = full.last() {
        if idx < last_eval {
            full.push((last_eval, err));
        }
    }
    if full.len() <= MAX_TRACE_POINTS {
        return full;
    }
    let n = full.len();
    let m = MAX_TRACE_POINTS;
    (0..m).map(|j| full[j * (n - 1) / (m - 1)]).collect()
}
