//! Content, densities, doubling scans and good tangential approximation.

mod content;
mod density;
mod gta;
mod model;

pub use content::{aggregated_content, content, piece_cost, CoverEstimate, CoverMode, Piece, EXACT_MAX};
pub use density::{density_profile, doubling_scan, DensityProfile, DoublingRecord, DoublingScan, PointMax};
pub use gta::{verify_gta, ApproxRecord, DensityRecord, GtaParams, GtaReport};
pub use model::{bilip_model_fit, chart_distortion, model_sample, ChartPoint, ModelFit, MODEL_MAX};
