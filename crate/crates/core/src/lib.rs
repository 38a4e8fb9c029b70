//! # speedscale
//!
//! Solvers for non-preemptive speed-scaling scheduling. Jobs carry a work
//! volume, a release date and a deadline; processors run at a speed `s` chosen
//! freely over time and dissipate power `s^alpha`. The goal is a feasible
//! non-preemptive schedule of minimum energy.
//!
//! The crate contains:
//!  * [`model`] - instances, schedules, energy accounting and a feasibility checker
//!  * [`discretize`] - landmark slot grids and job configurations
//!  * [`lp`] - the configuration LP and a revised simplex solver
//!  * [`single`] - randomized rounding, per-slot speed-up, agreeable restriction and EDF
//!  * [`yds`] - the optimal preemptive single-processor schedule (critical intervals)
//!  * [`multi`] - LP-based assignment for fully heterogeneous processors followed by
//!    per-processor non-preemptive conversion
//!  * [`oracle`] - exact small-instance optimum, generalized Bell numbers, schedule fuzzers
//!  * [`bounds`] - closed-form approximation ratios
//!  * [`gen`] - seeded instance generators
//!
//! Times and works are exact rationals ([`Rational`]); energies and LP arithmetic
//! are generic over the floating point type through [`Scalar`]. The aliases at
//! the crate root fix the scalar to `f64`.
//!
//! ## Example
//! ```rust
//! use speedscale::{model::Instance, rational::int, single, SolveParams};
//!
//! let instance = Instance::single(2.0, vec![(int(1), int(0), int(1)), (int(1), int(0), int(2))]).unwrap();
//! let outcome = single::solve_single::<f64>(&instance, &SolveParams::default()).unwrap();
//! assert!((outcome.energy - 2.0).abs() < 1e-9);
//! ```

pub mod bounds;
pub mod discretize;
pub mod error;
pub mod gen;
pub mod lp;
pub mod model;
pub mod multi;
pub mod oracle;
pub mod rational;
pub mod scalar;
pub mod single;
pub mod yds;

pub use error::{Error, Result};
pub use rational::Rational;
pub use scalar::Scalar;
pub use single::SolveParams;

pub type EnergyReport = model::EnergyReport<f64>;
pub type ConfigLp = lp::ConfigLp<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type SingleOutcome = single::SingleOutcome<f64>;
pub type Trial = single::Trial<f64>;
pub type MultiOutcome = multi::MultiOutcome<f64>;
pub type YdsOutcome = yds::YdsOutcome<f64>;
pub type BellTilde = oracle::BellTilde<f64>;
