//! Quasi-Monte Carlo estimation of quantiles (value-at-risk) and expected
//! shortfalls.
//!
//! * [`lowdisc`]: Sobol' points, net verification, 1-d star discrepancy.
//! * [`randomize`]: Owen scrambling and digital shifts.
//! * [`estimators`]: empirical CDF, order-statistic quantile, shortfall.
//! * [`models`]: loss models on the unit cube, including the 15-activity
//!   stochastic activity network.
//! * [`experiments`]: reference values by large-sample Monte Carlo and
//!   replicated convergence studies with log-log rate fits.
//! * [`cli`]: the `qmc-risk` command-line front end.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod lowdisc;
pub mod models;
pub mod numfmt;
pub mod prf;
pub mod randomize;

pub use error::{Error, Result};
