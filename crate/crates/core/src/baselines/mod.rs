//! Reference bare-bones comparators sharing the [`Optimizer`](crate::optimizer::Optimizer)
//! interface: bare-bones PSO, bare-bones fireworks and Gaussian bare-bones DE.

mod bbfwa;
mod bbpso;
mod gbde;

pub use bbfwa::{Bbfwa, BbfwaConfig};
pub use bbpso::{Bbpso, BbpsoConfig};
pub use gbde::{Gbde, GbdeConfig};

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::optimizer::{Particle, Rng};

/// Draw from `N((a + b) / 2, |a - b|)`. Collapses to `a` exactly when `a == b`.
pub(crate) fn midpoint_gaussian(a: f64, b: f64, rng: &mut Rng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (a + b) / 2.0 + (a - b).abs() * z
}

pub(crate) fn best_index(pop: &[Particle]) -> usize {
    let mut best = 0;
    for (i, p) in pop.iter().enumerate().skip(1) {
        if p.fitness < pop[best].fitness {
            best = i;
        }
    }
    best
}
