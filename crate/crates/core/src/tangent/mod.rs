//! Finite-scale tangent diagnostics: blowups, model tangents, flatness scans
//! and a rectifiability separation experiment on labelled fixtures.

mod blowup;
mod fixtures;
mod scan;

pub use blowup::{blowup, doubling_inheritance, model_tangent, BlowupSequence, BlowupSummary, DoublingInheritance, Gauge, DEFAULT_WINDOW};
pub use fixtures::{generate, Fixture, FixtureKind, FixtureParams};
pub use scan::{
    flatness_scan, percentile, separation_experiment, SEPARATION_SCALES, Confusion, FixtureVerdict, FlatnessRecord, FlatnessReport, ModelKind, PointSummary,
    ScanParams, SeparationReport,
};
