//! Chi-square divergence between densities and the standard normal, and the
//! explicit bounds on `χ²(S_n, 𝒩)` for normalized sums of independent
//! standardized variables.
//!
//! The crate is organized bottom-up:
//!
//! | module | contents |
//! |--------|----------|
//! | [`hermite`] | probabilists' Hermite polynomials and their addition formulas |
//! | [`quadrature`] | adaptive Gauss–Kronrod integration with breakpoints and infinite ranges |
//! | [`densities`] | standardized test densities and the exact convolution oracle |
//! | [`distances`] | χ² by direct integral and by Hermite/Parseval series, metric converters |
//! | [`constants`] | `g`, `h⁰_J`, exact `h_J`, the certified maxima `C_J(p)` and the constant table |
//! | [`bounds`] | recurrence identity, single-step inequality, unrolled bounds |
//! | [`subgaussian`] | χ² thresholds implying `E e^{tY} < e^{t²}` and MGF checks |
//!
//! Shared helpers (normal CDF, compensated sums, 1-D searches) live in
//! [`special`] and [`search`].

pub mod bounds;
pub mod constants;
pub mod densities;
pub mod distances;
mod error;
pub mod hermite;
pub mod quadrature;
pub mod search;
pub mod special;
pub mod subgaussian;

pub use bounds::{BoundReport, CorollaryBound, VarianceProfile};
pub use constants::{ConstantEstimate, IndexSet, Method as ConstantMethod};
pub use densities::{PiecewisePolyDensity, StandardizedDensity};
pub use distances::{Chi2Method, Chi2Result, HermiteProfile};
pub use error::{Error, Result};
pub use quadrature::{Integral, QuadratureSpec};
pub use subgaussian::{ThresholdResult, ThresholdSet};
