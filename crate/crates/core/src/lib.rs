//! Equilibrium analysis, behavioral choice models and structural complexity
//! features for two-player 2×2 matrix games.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! computation over in-memory values; file formats and the command-line
//! pipelines live in the companion `gamecx-cli` crate.
//!
//! Module map:
//!
//! - [`game`]: payoff matrices, permutations and the ordinal topology.
//! - [`solvers`]: best responses, pure and mixed equilibria, dominance.
//! - [`behavioral`]: CARA utility, quantal response, level-k and QRE models.
//! - [`fitting`]: metrics, Nelder–Mead estimation, completeness and
//!   cross-validation.
//! - [`neural`]: a feed-forward network, Adam, and networks that supply
//!   behavioral parameters per game.
//! - [`features`], [`lasso`], [`tree`], [`stats`], [`psychometric`]:
//!   game features and the complexity index built on them.
//! - [`data`]: game generation, trial aggregation and simulation.
#![no_std]

extern crate alloc;

pub mod behavioral;
pub mod data;
pub mod error;
pub mod features;
pub mod fitting;
pub mod game;
pub mod lasso;
pub mod math;
pub mod model;
pub mod neural;
pub mod optim;
pub mod psychometric;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod stats;
pub mod tree;

pub use error::Error;
pub use game::{Action, GameMatrix, Payoffs, Permutation, Role, Topology};
pub use model::{ModelSpec, Params, Structure};
