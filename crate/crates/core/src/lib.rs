//! Complex WKB analysis of `y'' = λ² q(x) y` for real polynomial `q`.
//!
//! Turning points, Stokes graphs, WKB actions, shooting eigenvalues,
//! complex zeros of eigenfunctions and their semiclassical limits.

pub mod action;
pub mod error;
pub mod export;
pub mod limits;
pub mod ode;
pub mod poly;
pub mod quad;
pub mod spectrum;
pub mod stokes;
pub mod wkbmat;
pub mod zeros;

pub use num_complex::Complex64;

pub use action::{ActionValue, PathC};
pub use error::{Error, Result};
pub use limits::{DensityReport, Family, MeasureReport, PredictedZeroLine, ZeroLineFit};
pub use poly::{Poly, TurningPoint};
pub use spectrum::{EigenRecord, Precision, ShootConfig};
pub use stokes::{LevelLine, LineKind, StokesGraph, Termination, TraceConfig};
pub use wkbmat::{DoubleWell, Mat2};
pub use zeros::{Rect, ZeroConfig, ZeroSet};
