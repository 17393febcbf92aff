//! Linear programming with PDHG iterations and concurrent crossover.
//!
//! A PDHG loop produces iterates of steadily improving accuracy. Whenever the
//! relative residual crosses the next threshold of a geometric schedule, a
//! crossover worker is started from a copy of that iterate; it guesses a
//! basis, cleans it up with a bounded primal simplex, and verifies the result.
//! The first verified basic optimal solution wins and every other worker,
//! along with the PDHG loop, is cancelled.
//!
//! The numeric core is generic over [`Scalar`] (`f32`/`f64`). The aliases at
//! the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod bench;
pub mod crossover;
pub mod error;
pub mod kkt;
pub mod lp;
pub mod mps;
pub mod pdhg;
pub mod race;
pub mod scalar;
pub mod scaling;
pub mod simplex;
pub mod sparse;
pub mod standard;

pub use error::{Error, Result};
pub use kkt::{Iterate, ResidualReport, Tolerances};
pub use lp::{LinearProgram, ObjSense, RowSense};
pub use scalar::Scalar;
pub use sparse::SparseMatrix;

pub type Lp = LinearProgram<f64>;
pub type Matrix = SparseMatrix<f64>;
pub type Point = Iterate<f64>;
pub type Report = ResidualReport<f64>;
pub type Tols = Tolerances<f64>;
pub type StandardForm = standard::StandardFormMap<f64>;
pub type Scaling = scaling::ScalingInfo<f64>;
pub type PdhgOutcome = pdhg::PdhgOutcome<f64>;
pub type CrossoverResult = crossover::CrossoverResult<f64>;
pub type RaceOutcome = race::RaceOutcome<f64>;
pub type Solution = race::Solution<f64>;

pub type Lp32 = LinearProgram<f32>;
