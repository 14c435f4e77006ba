//! Transport costs between point configurations and point-process laws, and
//! numerical checks of transport-entropy, concentration and modified
//! log-Sobolev inequalities for mixed binomial and Poisson point processes.
//!
//! Everything is computed exactly on finite ground spaces (enumerating all
//! configurations up to a mass cap) and by seeded Monte Carlo on Euclidean
//! boxes.
//!
//! | module | contents |
//! |--------|----------|
//! | [`ground`] | ground spaces, base costs, the convex families `α_t`, `φ_λ`, `φ_w` |
//! | [`config`] | configurations, difference operators, U-statistics |
//! | [`measures`] | discrete measures, relative entropy, total variation |
//! | [`transport`] | exact OT, assignment, partial assignment, Marton and weak costs |
//! | [`processes`] | enumerated binomial/Poisson laws, thinning, samplers |
//! | [`lifted`] | transport costs between process laws |
//! | [`inequalities`] | verifiers for the transport-entropy inequalities |
//! | [`concentration`] | convex distance, two-set and U-statistic experiments |
//! | [`logsob`] | entropy functional, `R_c`, log-Sobolev verifiers |
//! | [`experiment`] | JSON-configured batch runner behind the `ppt` binary |

pub mod concentration;
pub mod config;
pub mod error;
pub mod experiment;
pub mod ground;
pub mod inequalities;
pub mod lifted;
pub mod logsob;
pub mod measures;
pub mod processes;
pub mod solver;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
