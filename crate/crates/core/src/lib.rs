//! Pseudo-spectral solver and verification tools for the two-dimensional
//! electrified thin-film equation
//!
//! ```text
//! u_t + u u_{x1} + (R - kappa) u_{x1 x1} - kappa u_{x2 x2}
//!     - alpha (-Delta)^{3/2} u + Delta^2 u = 0
//! ```
//!
//! on a periodic box `[0, L)^2`. Fields are stored as Fourier-series
//! coefficients; the linear part is the Fourier multiplier
//! `e^{-f(xi) t}` with `f(xi) = -(R - kappa) xi1^2 + kappa xi2^2
//! - alpha |xi|^3 + |xi|^4`.

pub mod asymptotics;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod field;
pub mod fit;
pub mod grid;
pub mod illposed;
pub mod kernel;
pub mod norms;
pub mod params;
pub mod phi;
pub mod random;
pub mod report;
pub mod trajectory;

pub use error::{Error, Result};
pub use field::{to_fourier, to_physical, FourierField};
pub use grid::SpectralGrid;
pub use norms::{sobolev_norm, SobolevIndex};
pub use params::PhysicalParams;
pub use report::{ArtifactMeta, Cell, ExperimentReport};
pub use trajectory::{et_norm, Trajectory};
