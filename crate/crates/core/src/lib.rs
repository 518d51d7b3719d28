//! Numerical laboratory for the explicit-formula positivity circle:
//! multiplicative autocorrelation test functions, finite-place weights,
//! the Weil distribution, the trace of the operator product `V(h)T`, and
//! spectral checks of the positivity statements on a logarithmic grid.
//!
//! Everything lives on the reduced real side: the finite places enter only
//! through Mobius-weighted frequency lattices and the `varpi` weight rule,
//! so no p-adic arithmetic is ever materialized.

pub mod error;
pub mod operator;
pub mod places;
pub mod quad;
pub mod rng;
pub mod special;
pub mod suite;
pub mod testfn;
pub mod trace;
pub mod weil;

pub use error::{Error, Result};
pub use places::{NsLattice, PlaceSet};
pub use testfn::{Bump, HFunction, TestFunction};
pub use trace::TraceReport;
pub use weil::WeilBreakdown;
