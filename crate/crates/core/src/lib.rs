//! Two-stage robust and optimistic-robust (BIO-λ) inventory positioning for
//! omnichannel networks.
//!
//! Instances and uncertainty sets load from JSON ([`instance`],
//! [`uncertainty`]). [`ccg::solve_two_stage`] solves the model by
//! column-and-constraint generation on the in-crate LP/MIP [`solver`].
//! [`tuning`] picks λ on samples and [`simulator`] replays policies on a
//! weekly rolling horizon.

pub mod ccg;
pub mod cli;
pub mod error;
pub mod formulations;
pub mod instance;
pub mod reference;
pub mod simulator;
pub mod solver;
pub mod synthetic;
pub mod tuning;
pub mod uncertainty;

pub use error::{Error, Result};
