//! Population protocols under adversarial crash failures.
//!
//! - [`model`]: configurations, steps, snipes, consensus.
//! - [`zoo`]: the protocol families and parallel composition.
//! - [`presburger`]: monadic Presburger formulas and their compilation to
//!   robust protocols.
//! - [`verify`]: exhaustive correctness and robustness checks, lower-bound
//!   analyses.
//! - [`sim`]: seeded random scheduling against snipe adversaries.

pub mod model;
pub mod presburger;
pub mod sim;
pub mod verify;
pub mod zoo;
