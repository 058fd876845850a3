//! Multiscale construction of a Hölder surface through the good part of a cloud.
//!
//! A seed map on a coarse lattice of `[0,1]^n` is refined level by level. At
//! each level the cubes whose corner images see the good set `G` are extended
//! face by face through affine charts; the others are frozen as bad cubes. The
//! union of the level maps is extended to the finest lattice by McShane and
//! audited exhaustively, and the bad cubes are charged against the mass of the
//! cloud outside `G`.

mod assemble;
mod build;
mod constants;
mod host;
mod lattice;
mod mcshane;

pub use assemble::{assemble_holder, BadBall, Check, ContentRecord, HolderCertificate, MapEntry};
pub use build::{
    affine_seed, extend_face, extend_skeleton, iterate_levels, split_good_bad, CubeEntry, FaceContext, FaceOutcome, Ledger,
    LevelRecord, PartialMap, RungRecord, Split,
};
pub use constants::{solve_constants, Constants};
pub use host::{Frame, Host};
pub use lattice::{CubeComplex, Face, Grid};
pub use mcshane::{mcshane_extend, mcshane_extend_vec};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::space::MeasuredSpace;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildParams {
    pub n: usize,
    pub k: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Physical side of the parameter cube.
    pub r: f64,
    /// Image of the lattice origin is the `C` point nearest to this point.
    pub origin: usize,
    pub grid: Grid,
    /// Host-by-parameter matrix; the first `n` host axes when absent.
    pub frame: Option<Vec<Vec<f64>>>,
}

/// Seed, iterate and assemble in one call.
pub fn holder_build(space: &MeasuredSpace, c: &[usize], g: &[usize], p: &BuildParams) -> Result<HolderCertificate> {
    let consts = solve_constants(p.k, p.gamma, p.n, p.eta)?;
    let host = Host::new(space, c, g, p.r)?;
    let cx = CubeComplex::new(p.n, p.grid)?;
    let frame = match &p.frame {
        Some(a) => Frame::new(a.clone())?,
        None => Frame::coordinate(host.dim, p.n)?,
    };
    let seed = affine_seed(&host, &cx, p.origin, &frame)?;
    let ledger = iterate_levels(&host, &cx, &seed, &consts, &frame)?;
    assemble_holder(&host, &cx, &ledger, &consts)
}
