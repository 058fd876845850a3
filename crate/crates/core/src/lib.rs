//! Metric measure space geometry on finite samples.
//!
//! Flat (bounded-Lipschitz dual) metrics, the pointed local Hausdorff distance,
//! ε-isometries and couplings, Hausdorff content and density statistics, a
//! multiscale Hölder surface construction, and tangent blow-up diagnostics.

pub mod alignment;
pub mod error;
pub mod flat;
pub mod flow;
pub mod hausdorff;
pub mod holder;
pub mod measure;
pub mod io;
pub mod par;
pub mod space;
pub mod tangent;
pub mod tol;

pub use error::{Error, Result};
pub use space::{
    ball_of as ball, ball_with_ties, restrict, rescale, validate, Cloud, EmbeddedPair, MeasuredSpace,
    Norm, PointedSpace, Violation,
};

/// Crate version, echoed in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
