//! Lorentz quasi-norms on power-weighted half-lines, Hardy-Hilbert type
//! integral operators, exact `(1/p, 1/q)` boundedness regions, Bessel-based
//! resolvent envelopes and a radial model of a manifold with ends.

pub mod ends_model;
pub mod error;
pub mod hh_operators;
pub mod lorentz;
pub mod measure_grid;
pub mod quad;
pub mod regions;
pub mod special_kernels;
pub mod sum;

pub use error::{DivergenceSign, Error, Result};
pub use measure_grid::{GridFunction, LogGrid, PowerMeasure, PowerPart};
pub use lorentz::{LorentzIndex, RearrangedFunction};
pub use ends_model::{CounterexampleKind, CounterexampleSpec, EndsFunction, EndsModel};
pub use hh_operators::{HomogeneousKernel, PiecewisePowerKernel};
pub use regions::{BoundednessRegion, RegionPoint};
