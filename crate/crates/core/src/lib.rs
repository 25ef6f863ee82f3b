//! Bare-bones global optimization.
//!
//! The centrepiece is the Basic Iteration Process ([`bip`]), an optimizer
//! built from three ingredients: multi-scale Gaussian sampling, probabilistic
//! acceptance of worse samples through a tunneling rule, and relocation of
//! the worst particle to the population mean once a scale has settled.
//! Three bare-bones comparators live in [`baselines`]. The [`harness`] runs
//! seeded trial grids and reports Best/Mean/Std/Sr plus average rankings, and
//! [`diagnostics`] turns event streams into trajectories, position
//! histograms and transmission-probability traces.
//!
//! ```
//! use qdopt::{BipConfig, Bip, BudgetedObjective, ObjectiveSpec, Optimizer, Silent};
//!
//! let spec = ObjectiveSpec::from_id("F7", 5).unwrap();
//! let mut objective = BudgetedObjective::new(spec, 5_000);
//! let mut bip = Bip::new(BipConfig::default()).unwrap();
//! bip.run(&mut objective, &mut Silent).unwrap();
//! assert!(objective.best_error().unwrap() < 1e-3);
//! ```

pub mod baselines;
pub mod benchmark;
pub mod bip;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod optimizer;

pub use benchmark::{double_well, make_benchmark, paraboloid, BudgetedObjective, DoubleWellParams, ObjectiveSpec};
pub use bip::{Bip, BipConfig, BipState};
pub use error::{Error, Result};
pub use harness::{Algorithm, AlgorithmConfig};
pub use optimizer::{
    BoundsPolicy, Event, EventKind, Observer, Optimizer, Particle, RunSettings, Silent, Step,
    StopReason, TrialOutcome,
};
