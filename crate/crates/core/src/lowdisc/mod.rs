//! Base-2 digital sequences and net verification.

mod direction;
mod discrepancy;
mod net;
mod pointset;
mod sobol;

pub use direction::{DimensionRecord, DirectionNumbers, DEFAULT_BIT_DEPTH, MAX_BIT_DEPTH};
pub use discrepancy::star_discrepancy_1d;
pub use net::{is_net, t_value, NetCheck, NetParams, Witness, MAX_CELL_INCREMENTS};
pub use pointset::{PointMeta, PointSet};
pub use sobol::{radical_inverse, sobol_generate, van_der_corput, Sobol};
