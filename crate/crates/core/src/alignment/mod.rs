//! Couplings, ε-isometries and interval estimates of the pointed distances.

mod coupling;
mod doubling;
mod estimate;
mod iso;
mod subsets;

pub use coupling::{distortion, Coupling, CouplingViolation, Glued};
pub use doubling::{doubling_subset_bound, DoublingBound};
pub use estimate::{
    coupling_flat, coupling_hz, estimate_dpgh, estimate_dpmgh, estimate_dstar, greedy_couplings, radial_flat_lower,
    radial_hz_lower, radial_pushforward, Budget, DistanceEstimate, Method, Objective,
};
pub use iso::{
    check_eps_isometry, coupling_from_eps_isometry, critical_values, eps_isometry_from_hausdorff, maps_at,
    min_eps_isometry, EpsIsometry, HausdorffIso, IsoCheck, IsoSearch, IsoViolation, Provenance, SearchEnd,
};
pub use subsets::{
    converse_direction, dstar_sandwich, extract_large_subsets, restricted_pmgh, subset_flat_radius,
    ConverseCertificate, ForwardCertificate, LargeSubsetPair, SandwichReport, DEFAULT_DELTA,
};
