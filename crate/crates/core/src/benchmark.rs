//! Benchmark objectives and the evaluation-budget wrapper.
//!
//! Twelve classic box-constrained test functions (six multimodal, F1-F6, and
//! six unimodal, F7-F12), a tilted double-well and a paraboloid. Every
//! objective knows its search box and its global optimum so that errors
//! `f(x) - f(x*)` can be reported directly.

use std::f64::consts::{E, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Schwefel optimum coordinate. Table values usually quote it truncated.
pub const SCHWEFEL_OPTIMUM: f64 = 420.968746;

/// Parameters of the tilted double-well `sum_i V0 (x_i^2 - a^2)^2 / a^4 + delta x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellParams {
    pub v0: f64,
    pub a: f64,
    pub delta: f64,
    pub dim: usize,
}

impl Default for DoubleWellParams {
    /// Wells at +-2 in a [-4, 4] box, favouring the negative well slightly.
    fn default() -> Self {
        Self { v0: 1.0, a: 2.0, delta: 0.05, dim: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Griewank,
    Rastrigin,
    Ackley,
    Levy,
    Alpine,
    Schwefel,
    Sphere,
    SumSquares,
    RotatedHyperEllipsoid,
    Ellipsoidal,
    SumDifferentPowers,
    Zakharov,
    DoubleWell { v0: f64, a: f64, delta: f64 },
    Paraboloid,
}

/// A box-constrained objective with a known global optimum.
///
/// Evaluation is pure, so a single spec can be shared across threads.
#[derive(Clone, PartialEq)]
pub struct ObjectiveSpec {
    name: String,
    kind: Kind,
    lower: Vec<f64>,
    upper: Vec<f64>,
    optimum_position: Vec<f64>,
    optimum_value: f64,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("optimum_value", &self.optimum_value)
            .finish()
    }
}

/// Function ids accepted by [`ObjectiveSpec::from_id`].
pub const REGISTRY: [&str; 14] = [
    "F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "F9", "F10", "F11", "F12", "double_well",
    "paraboloid",
];

/// Builds benchmark `id` (1..=12) in `dim` dimensions.
pub fn make_benchmark(id: usize, dim: usize) -> Result<ObjectiveSpec> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let (name, kind, lo, hi) = match id {
        1 => ("F1", Kind::Griewank, -100.0, 100.0),
        2 => ("F2", Kind::Rastrigin, -5.12, 5.12),
        3 => ("F3", Kind::Ackley, -32.77, 32.77),
        4 => ("F4", Kind::Levy, -10.0, 10.0),
        5 => ("F5", Kind::Alpine, 0.0, 10.0),
        6 => ("F6", Kind::Schwefel, -500.0, 500.0),
        7 => ("F7", Kind::Sphere, -5.12, 5.12),
        8 => ("F8", Kind::SumSquares, -10.0, 10.0),
        9 => ("F9", Kind::RotatedHyperEllipsoid, -65.54, 65.54),
        10 => ("F10", Kind::Ellipsoidal, -100.0, 100.0),
        11 => ("F11", Kind::SumDifferentPowers, -1.0, 1.0),
        12 => ("F12", Kind::Zakharov, -5.0, 10.0),
        _ => return Err(invalid(format!("unknown benchmark id {id}, expected 1..=12"))),
    };
    let optimum_position = match kind {
        Kind::Levy => vec![1.0; dim],
        Kind::Schwefel => vec![SCHWEFEL_OPTIMUM; dim],
        Kind::Ellipsoidal => (1..=dim).map(|i| i as f64).collect(),
        _ => vec![0.0; dim],
    };
    Ok(ObjectiveSpec {
        name: name.to_string(),
        kind,
        lower: vec![lo; dim],
        upper: vec![hi; dim],
        optimum_position,
        optimum_value: 0.0,
    })
}

/// Tilted double-well over the box `[-2|a|, 2|a|]^n`.
///
/// The reported optimum is the minimiser of the well nearest `-|a|` in every
/// coordinate; for `delta > 0` it is the unique global minimum.
pub fn double_well(params: DoubleWellParams) -> Result<ObjectiveSpec> {
    let DoubleWellParams { v0, a, delta, dim } = params;
    if a == 0.0 || !a.is_finite() {
        return Err(invalid("double-well half-separation `a` must be finite and non-zero"));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(invalid("double-well tilt `delta` must be finite and non-negative"));
    }
    if !v0.is_finite() || v0 <= 0.0 {
        return Err(invalid("double-well barrier height `v0` must be positive"));
    }
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let a4 = a.powi(4);
    let a2 = a * a;
    // Newton on the 1-D derivative 4 V0 x (x^2 - a^2) / a^4 + delta, from -|a|.
    let mut x = -a.abs();
    for _ in 0..100 {
        let g = 4.0 * v0 * x * (x * x - a2) / a4 + delta;
        let dg = 4.0 * v0 * (3.0 * x * x - a2) / a4;
        let next = x - g / dg;
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    let well = v0 * (x * x - a2).powi(2) / a4 + delta * x;
    let half = 2.0 * a.abs();
    Ok(ObjectiveSpec {
        name: "double_well".to_string(),
        kind: Kind::DoubleWell { v0, a, delta },
        lower: vec![-half; dim],
        upper: vec![half; dim],
        optimum_position: vec![x; dim],
        optimum_value: well * dim as f64,
    })
}

/// `sum x_i^2` on the Sphere box.
pub fn paraboloid(dim: usize) -> Result<ObjectiveSpec> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    Ok(ObjectiveSpec {
        name: "paraboloid".to_string(),
        kind: Kind::Paraboloid,
        lower: vec![-5.12; dim],
        upper: vec![5.12; dim],
        optimum_position: vec![0.0; dim],
        optimum_value: 0.0,
    })
}

impl ObjectiveSpec {
    /// Looks up an objective by registry id (`"F1"`..`"F12"`, `"double_well"`,
    /// `"paraboloid"`). Ids are case-insensitive.
    pub fn from_id(id: &str, dim: usize) -> Result<Self> {
        let lower = id.trim().to_ascii_lowercase();
        match lower.as_str() {
            "double_well" | "double-well" => {
                double_well(DoubleWellParams { dim, ..DoubleWellParams::default() })
            }
            "paraboloid" => paraboloid(dim),
            s => match s.strip_prefix('f').and_then(|n| n.parse::<usize>().ok()) {
                Some(n) => make_benchmark(n, dim),
                None => Err(invalid(format!(
                    "unknown function `{id}`, expected one of {}",
                    REGISTRY.join(", ")
                ))),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn optimum_position(&self) -> &[f64] {
        &self.optimum_position
    }

    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    /// Largest per-dimension box width.
    pub fn span(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max)
    }

    /// Non-negative error `f - f*`. Round-off below the optimum reads as zero.
    pub fn error_of(&self, fitness: f64) -> f64 {
        (fitness - self.optimum_value).max(0.0)
    }

    /// Evaluates the objective. `x` must have length [`dim`](Self::dim).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let n = x.len() as f64;
        match self.kind {
            Kind::Griewank => {
                let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let prod: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                sum - prod + 1.0
            }
            Kind::Rastrigin => {
                10.0 * n + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
            }
            Kind::Ackley => {
                let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            Kind::Levy => {
                let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let last = w[w.len() - 1];
                let head = (PI * w[0]).sin().powi(2);
                let middle: f64 = w[..w.len() - 1]
                    .iter()
                    .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
                    .sum();
                let tail = (last - 1.0).powi(2) * (1.0 + (2.0 * PI * last).sin().powi(2));
                head + middle + tail
            }
            Kind::Alpine => x.iter().map(|v| (v * v.sin() + 0.1 * v).abs()).sum(),
            Kind::Schwefel => {
                418.9829 * n - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
            }
            Kind::Sphere | Kind::Paraboloid => x.iter().map(|v| v * v).sum(),
            Kind::SumSquares => x
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * v * v)
                .sum(),
            Kind::RotatedHyperEllipsoid => {
                let mut prefix = 0.0;
                let mut total = 0.0;
                for v in x {
                    prefix += v;
                    total += prefix * prefix;
                }
                total
            }
            Kind::Ellipsoidal => x
                .iter()
                .enumerate()
                .map(|(i, v)| (v - (i + 1) as f64).powi(2))
                .sum(),
            Kind::SumDifferentPowers => x
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs().powi(i as i32 + 2))
                .sum(),
            Kind::Zakharov => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                let lin: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| 0.5 * (i + 1) as f64 * v)
                    .sum();
                sq + lin.powi(2) + lin.powi(4)
            }
            Kind::DoubleWell { v0, a, delta } => {
                let a2 = a * a;
                let a4 = a2 * a2;
                x.iter()
                    .map(|v| v0 * (v * v - a2).powi(2) / a4 + delta * v)
                    .sum()
            }
        }
    }

    /// Whether `x` lies inside the search box (boundaries included).
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }
}

/// An objective metered by a hard evaluation budget.
///
/// Besides counting, the wrapper tracks the best point seen and a compact
/// error trace, so every optimizer reports progress the same way.
#[derive(Debug, Clone)]
pub struct BudgetedObjective {
    spec: ObjectiveSpec,
    evals_used: u64,
    max_fes: u64,
    best: Option<(Vec<f64>, f64)>,
    trace: Vec<(u64, f64)>,
}

impl BudgetedObjective {
    pub fn new(spec: ObjectiveSpec, max_fes: u64) -> Self {
        Self { spec, evals_used: 0, max_fes, best: None, trace: Vec::new() }
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn evals_used(&self) -> u64 {
        self.evals_used
    }

    pub fn max_fes(&self) -> u64 {
        self.max_fes
    }

    pub fn remaining(&self) -> u64 {
        self.max_fes - self.evals_used
    }

    pub fn is_exhausted(&self) -> bool {
        self.evals_used >= self.max_fes
    }

    /// Evaluates `x`, consuming one unit of budget.
    ///
    /// At the cap nothing is evaluated and [`Error::BudgetExhausted`] is returned.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.spec.dim() {
            return Err(Error::DimensionMismatch { expected: self.spec.dim(), got: x.len() });
        }
        if self.is_exhausted() {
            return Err(Error::BudgetExhausted { used: self.evals_used });
        }
        let value = self.spec.evaluate(x);
        self.evals_used += 1;
        let improved = match &self.best {
            None => true,
            Some((_, f)) => value < *f,
        };
        if improved {
            self.best = Some((x.to_vec(), value));
            self.trace.push((self.evals_used, self.spec.error_of(value)));
        }
        Ok(value)
    }

    /// Best point and fitness seen so far, if any evaluation happened.
    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, f)| (x.as_slice(), *f))
    }

    pub fn best_error(&self) -> Option<f64> {
        self.best.as_ref().map(|(_, f)| self.spec.error_of(*f))
    }

    /// Improvement points `(evaluation_index, best_error)`; the best error is a
    /// step function of the evaluation index so this is lossless.
    pub fn improvements(&self) -> &[(u64, f64)] {
        &self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(id: usize, x: &[f64]) -> f64 {
        make_benchmark(id, x.len()).unwrap().evaluate(x)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn table_examples() {
        assert_eq!(f(7, &[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(f(2, &[0.0, 0.0]), 0.0);
        assert_eq!(f(10, &[1.0, 2.0, 3.0]), 0.0);
        assert!(close(f(2, &[0.5]), 20.25));
    }

    #[test]
    fn hand_computed_values() {
        assert!(close(f(1, &[100.0]), 2.637681127712316));
        assert!(close(f(1, &[3.0, 4.0]), 0.06440764161308299));
        assert!(close(f(3, &[1.0, 1.0]), 3.6253849384403627));
        assert!(close(f(4, &[0.0, 0.0]), 0.7158445541169746));
        assert!(close(f(5, &[std::f64::consts::FRAC_PI_2]), 1.7278759594743862));
        assert!(close(f(6, &[0.0]), 418.9829));
        assert_eq!(f(8, &[1.0, 1.0, 1.0]), 6.0);
        assert_eq!(f(9, &[1.0, 2.0, 3.0]), 46.0);
        assert_eq!(f(11, &[0.5, 0.5]), 0.375);
        assert_eq!(f(12, &[1.0, 1.0]), 9.3125);
    }

    #[test]
    fn optimum_values_at_several_dims() {
        for dim in [2, 10, 30] {
            for id in 1..=12 {
                let s = make_benchmark(id, dim).unwrap();
                let v = s.evaluate(s.optimum_position());
                let tol = if id == 6 { 1e-3 } else { 1e-9 };
                assert!((v - s.optimum_value()).abs() <= tol, "F{id} {dim}D: {v}");
                assert!(s.lower().iter().zip(s.upper()).all(|(l, u)| l < u));
                assert!(s.contains(s.optimum_position()), "F{id} optimum outside box");
            }
        }
    }

    #[test]
    fn finite_over_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for id in 1..=12 {
            let s = make_benchmark(id, 10).unwrap();
            for _ in 0..10_000 {
                let x: Vec<f64> =
                    (0..10).map(|d| rng.random_range(s.lower()[d]..=s.upper()[d])).collect();
                assert!(s.evaluate(&x).is_finite(), "F{id} at {x:?}");
            }
        }
    }

    #[test]
    fn unimodal_strictly_above_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for id in 7..=12 {
            let s = make_benchmark(id, 10).unwrap();
            let mut checked = 0;
            while checked < 1000 {
                let x: Vec<f64> =
                    (0..10).map(|d| rng.random_range(s.lower()[d]..=s.upper()[d])).collect();
                if crate::optimizer::euclidean_distance(&x, s.optimum_position()) <= 1e-3 {
                    continue;
                }
                assert!(s.evaluate(&x) > s.optimum_value(), "F{id} at {x:?}");
                checked += 1;
            }
        }
    }

    #[test]
    fn unknown_ids_and_zero_dim() {
        assert!(make_benchmark(0, 2).is_err());
        assert!(make_benchmark(13, 2).is_err());
        assert!(make_benchmark(7, 0).is_err());
        assert!(ObjectiveSpec::from_id("F99", 2).is_err());
        assert!(ObjectiveSpec::from_id("rosenbrock", 2).is_err());
        assert_eq!(ObjectiveSpec::from_id("f7", 3).unwrap().name(), "F7");
        assert_eq!(ObjectiveSpec::from_id("double-well", 2).unwrap().name(), "double_well");
    }

    #[test]
    fn double_well_examples() {
        let flat = double_well(DoubleWellParams { v0: 1.0, a: 2.0, delta: 0.0, dim: 1 }).unwrap();
        assert_eq!(flat.evaluate(&[2.0]), 0.0);
        assert_eq!(flat.evaluate(&[0.0]), 1.0);
        assert_eq!(flat.optimum_value(), 0.0);
        assert_eq!(flat.optimum_position(), &[-2.0]);

        let tilted = double_well(DoubleWellParams { v0: 1.0, a: 2.0, delta: 0.05, dim: 1 }).unwrap();
        assert!(tilted.evaluate(&[-2.0]) < tilted.evaluate(&[2.0]));
        assert_eq!((tilted.lower()[0], tilted.upper()[0]), (-4.0, 4.0));
    }

    #[test]
    fn double_well_optimum_is_stationary_and_global() {
        let s = double_well(DoubleWellParams { v0: 1.0, a: 2.0, delta: 0.05, dim: 2 }).unwrap();
        let x = s.optimum_position()[0];
        assert!((x + 2.0).abs() < 0.05);
        assert!((s.evaluate(s.optimum_position()) - s.optimum_value()).abs() < 1e-12);
        let step = 1e-3;
        for t in [-step, step] {
            assert!(s.evaluate(&[x + t, x]) > s.optimum_value());
        }
        let grid_min = (0..=8000)
            .map(|i| -4.0 + i as f64 * 1e-3)
            .map(|v| s.evaluate(&[v, x]))
            .fold(f64::INFINITY, f64::min);
        assert!(grid_min >= s.optimum_value() - 1e-12);
    }

    #[test]
    fn double_well_rejects_bad_params() {
        let base = DoubleWellParams::default();
        assert!(double_well(DoubleWellParams { a: 0.0, ..base }).is_err());
        assert!(double_well(DoubleWellParams { delta: -0.1, ..base }).is_err());
        assert!(double_well(DoubleWellParams { v0: 0.0, ..base }).is_err());
        assert!(double_well(DoubleWellParams { dim: 0, ..base }).is_err());
    }

    #[test]
    fn paraboloid_examples() {
        assert_eq!(paraboloid(2).unwrap().evaluate(&[0.0, 0.0]), 0.0);
        assert_eq!(paraboloid(2).unwrap().evaluate(&[2.0, 2.0]), 8.0);
        assert_eq!(paraboloid(1).unwrap().evaluate(&[-3.0]), 9.0);
        assert_eq!(paraboloid(3).unwrap().upper(), &[5.12; 3]);
    }

    #[test]
    fn budget_examples() {
        let mut obj = BudgetedObjective::new(make_benchmark(7, 3).unwrap(), 10);
        assert_eq!(obj.evaluate(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(obj.evals_used(), 1);

        let mut obj = BudgetedObjective::new(make_benchmark(7, 3).unwrap(), 1);
        obj.evaluate(&[1.0; 3]).unwrap();
        assert!(matches!(obj.evaluate(&[0.0; 3]), Err(Error::BudgetExhausted { used: 1 })));
        assert_eq!(obj.evals_used(), 1);
        assert_eq!(obj.best_error(), Some(3.0));

        let mut obj = BudgetedObjective::new(make_benchmark(7, 30).unwrap(), 300_000);
        assert_eq!(obj.remaining(), 300_000);
        assert!(matches!(
            obj.evaluate(&[0.0; 2]),
            Err(Error::DimensionMismatch { expected: 30, got: 2 })
        ));
        assert_eq!(obj.evals_used(), 0);
    }

    #[test]
    fn improvements_track_strict_gains() {
        let mut obj = BudgetedObjective::new(make_benchmark(7, 1).unwrap(), 10);
        for x in [3.0, 2.0, 2.0, 4.0, 1.0] {
            obj.evaluate(&[x]).unwrap();
        }
        assert_eq!(obj.improvements(), &[(1, 9.0), (2, 4.0), (5, 1.0)]);
        assert_eq!(obj.best().unwrap().0, &[1.0]);
    }
}
