//! Exact solver and verifier for the coboundary equation `f = g∘T − g` on
//! unions of intervals, where `T` is an interval exchange and
//! `‖g‖∞ ≤ (1 + ε)‖f‖∞`.
//!
//! Everything is computed in exact rational arithmetic. Finite-valued
//! (step) functions are solved exactly by [`exact::solve_step`]. Functions
//! with a continuous part go through the partition tower in [`tower`], which
//! reaches any prescribed residual `δ`. [`pipeline::solve_full`] splits a
//! mixed input into blocks and glues the results, and
//! [`verify::verify_certificate`] rechecks any certificate from `(f, T, g)`
//! alone.
//!
//! ```
//! use coboundary::{rat, solve_step, verify_certificate, Rat, StepFunction, StepPiece, VerifyMode};
//!
//! let f = StepFunction::new(vec![
//!     StepPiece::new(Rat::zero(), rat(2, 5), rat(3, 5)),
//!     StepPiece::new(rat(2, 5), Rat::one(), rat(-2, 5)),
//! ])
//! .unwrap();
//! let cert = solve_step(&f).unwrap();
//! assert!(verify_certificate(&cert, VerifyMode::Exact, &Rat::zero()).unwrap().pass);
//! ```

pub mod carve;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod exact;
pub mod exchange;
pub mod function;
pub mod interval;
pub mod pipeline;
pub mod quadratic;
pub mod rational;
pub mod rearrange;
pub mod tower;
pub mod trim;
pub mod verify;

pub use certificate::CoboundaryCertificate;
pub use error::{Error, Result};
pub use exact::solve_step;
pub use exchange::IntervalExchange;
pub use function::{HybridFunction, PiecewiseAffine, SampledFunction, StepFunction, StepPiece};
pub use interval::{Interval, IntervalSet};
pub use pipeline::{decompose_domain, solve_full, PipelineConfig};
pub use rational::{rat, Rat};
pub use rearrange::{rearrange_matrix, rearrange_zero_sum, Permutation};
pub use tower::{solve_tower, TowerConfig, TowerMode};
pub use verify::{verify_certificate, VerifyMode};
