//! Private computation of approximate correlated equilibria in large games.
//!
//! A recommender mechanism for an n-player game runs no-regret dynamics on
//! noisy expected losses so that, for every player, the joint recommendation
//! delivered to everyone *else* is differentially private in that player's
//! reported type. Low swap regret turns the recorded play into an approximate
//! correlated equilibrium; the privacy of the recommendations makes opting in
//! and following them an approximate Bayes-Nash equilibrium of the game with
//! the proxy attached.
//!
//! The crate provides:
//!
//! - [`noregret`]: Hedge and the swap-regret learner, plus the loss/regret
//!   functionals and their noise-tolerance bounds;
//! - [`privacy`]: Laplace sampling, adaptive composition, concentration, and
//!   feasibility planning for the round count;
//! - [`game`]: the game abstraction with exact, count-based, and Monte Carlo
//!   expected-loss backends and empirical sensitivity probing;
//! - [`suite`]: concrete families (the beach/mountain anonymous game, random
//!   games, and the subset-sum query-release reduction with its decoder);
//! - [`mech`]: the Laplace-noise mechanism and the candidate-net mechanism;
//! - [`equilibrium`]: the mixture-of-products correlated distribution,
//!   sampling, and exact/Monte Carlo certificate verification;
//! - [`audit`]: the opt-in/opt-out incentive auditor and the naive
//!   majority-rule counterexample it is contrasted with;
//! - [`formats`]: versioned JSON artifacts and the regret-trace CSV.

pub mod audit;
pub mod equilibrium;
pub mod error;
pub mod formats;
pub mod game;
pub mod mech;
pub mod noregret;
pub mod privacy;
pub mod rng;
pub mod scalar;
pub mod strategy;
pub mod suite;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};
