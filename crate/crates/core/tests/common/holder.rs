//! Lattice fixtures for the Hölder construction.

use mmgeo::holder::{BuildParams, Grid};
use mmgeo::space::{Cloud, Norm};
use mmgeo::{MeasuredSpace, PointedSpace};

/// `(side+1)²` points of `A·[0,1]²` at spacing `1/side` in `ℓ∞²`, weights `1/side²`.
pub fn plane(side: usize, a: [[f64; 2]; 2]) -> MeasuredSpace {
    let mut pts = Vec::new();
    for j in 0..=side {
        for i in 0..=side {
            let (u, v) = (i as f64 / side as f64, j as f64 / side as f64);
            pts.push(vec![a[0][0] * u + a[0][1] * v, a[1][0] * u + a[1][1] * v]);
        }
    }
    let n = pts.len();
    let cloud = Cloud::new(2, Norm::Linf, &pts).unwrap();
    MeasuredSpace::new(PointedSpace::from_cloud(cloud, 0).unwrap(), vec![1.0 / (side * side) as f64; n]).unwrap()
}

pub const ID: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

/// Indices of the plane grid whose lattice coordinates are not both in `lo..=hi`.
pub fn outside_square(side: usize, lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for j in 0..=side {
        for i in 0..=side {
            if !((lo..=hi).contains(&i) && (lo..=hi).contains(&j)) {
                out.push(j * (side + 1) + i);
            }
        }
    }
    out
}

pub fn params(k: f64, depth: u32) -> BuildParams {
    BuildParams {
        n: 2,
        k,
        gamma: 0.5,
        eta: 1.0,
        r: 1.0,
        origin: 0,
        grid: Grid { seed_bits: 3, refine_bits: 1, depth },
        frame: None,
    }
}
