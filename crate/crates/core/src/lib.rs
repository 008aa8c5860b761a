//! Numerical toolkit for local deformation theory of Calabi–Yau and
//! hyperkähler manifolds.
//!
//! The crate is organized bottom-up:
//!
//! * [`series`], [`blocks`], [`tolerances`]: truncated multi-variable power
//!   series, block upper-unipotent matrices and the shared tolerance policy.
//! * [`dolbeault`]: the `∂̄` complex behind one contract, with a spectral
//!   flat-torus backend and a finite-dimensional DGLA backend.
//! * [`kuranishi`]: the Kuranishi power-series solver, Maurer–Cartan residuals,
//!   obstruction series, the holomorphic volume-form family and the majorant
//!   estimate suite.
//! * [`period`]: weight-2 quasi-period blocks, Griffiths transversality and
//!   purity determinants.
//! * [`transport`]: Kähler-class transport along block curves and pointwise
//!   metric positivity.
//! * [`lattice`]: Mukai lattice, period-domain membership and bounded
//!   lattice searches.

pub mod blocks;
pub mod dolbeault;
pub mod error;
pub mod kuranishi;
pub mod lattice;
pub mod linalg;
pub mod period;
pub mod series;
pub mod tolerances;
pub mod transport;

pub use num_complex::Complex64;

pub use blocks::BlockUpperUnipotent;
pub use error::{HodgeError, Result};
pub use series::{Linear, MultiIndex, TruncatedSeries};
pub use tolerances::Tolerances;
