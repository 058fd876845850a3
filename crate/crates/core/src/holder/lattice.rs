//! Dyadic lattices, cubes and faces on `[0,1]^n`.
//!
//! Points are stored as integer coordinates on the finest lattice and packed
//! into a single `u64`. Level `k` has `2^{seed_bits + refine_bits·k}` cells
//! per axis; level 0 is the seed lattice.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub seed_bits: u32,
    pub refine_bits: u32,
    pub depth: u32,
}

impl Grid {
    /// Refinement ratio between consecutive levels.
    pub fn ratio(&self) -> f64 {
        2f64.powi(-(self.refine_bits as i32))
    }

    pub fn side(&self, k: u32) -> f64 {
        2f64.powi(-((self.seed_bits + self.refine_bits * k) as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Face {
    pub level: u32,
    /// Packed lowest vertex.
    pub corner: u64,
    /// Bit `j` set when the face extends along axis `j`.
    pub mask: u32,
}

#[derive(Debug, Clone)]
pub struct CubeComplex {
    pub n: usize,
    pub grid: Grid,
    /// Finest cells per axis.
    cells: u64,
}

impl CubeComplex {
    pub fn new(n: usize, grid: Grid) -> Result<Self> {
        if n == 0 || grid.refine_bits == 0 {
            return domain("need n ≥ 1 and a refinement of at least one bit per level");
        }
        let bits = grid.seed_bits as u64 + grid.refine_bits as u64 * grid.depth as u64;
        if bits >= 31 || (bits + 1) * n as u64 >= 62 {
            return domain(format!("lattice with {bits} bits per axis in dimension {n} is too fine"));
        }
        Ok(Self { n, grid, cells: 1 << bits })
    }

    pub fn cells(&self) -> u64 {
        self.cells
    }

    /// Finest-lattice units per level-`k` cell.
    pub fn step(&self, k: u32) -> u64 {
        1 << (self.grid.refine_bits * (self.grid.depth - k))
    }

    /// Cells per axis at level `k`.
    pub fn per_axis(&self, k: u32) -> u64 {
        self.cells / self.step(k)
    }

    pub fn b(&self) -> u64 {
        1 << self.grid.refine_bits
    }

    pub fn encode(&self, c: &[u64]) -> u64 {
        c.iter().rev().fold(0, |acc, &x| acc * (self.cells + 1) + x)
    }

    pub fn decode(&self, mut code: u64) -> Vec<u64> {
        (0..self.n)
            .map(|_| {
                let x = code % (self.cells + 1);
                code /= self.cells + 1;
                x
            })
            .collect()
    }

    /// Normalized sup-norm distance between packed points.
    pub fn dist(&self, a: u64, b: u64) -> f64 {
        self.units(a, b) as f64 / self.cells as f64
    }

    /// Sup-norm distance in finest units.
    pub fn units(&self, a: u64, b: u64) -> u64 {
        self.decode(a).iter().zip(self.decode(b)).map(|(&x, y)| x.abs_diff(y)).max().unwrap_or(0)
    }

    pub fn position(&self, code: u64) -> Vec<f64> {
        self.decode(code).iter().map(|&x| x as f64 / self.cells as f64).collect()
    }

    /// Lattice points with coordinates in `0..=count` times `step`, packed.
    fn box_points(&self, origin: &[u64], step: u64, count: &[u64]) -> Vec<u64> {
        let mut out = Vec::new();
        let mut digits = vec![0u64; self.n];
        loop {
            let c: Vec<u64> = origin.iter().zip(&digits).map(|(&o, &d)| o + d * step).collect();
            out.push(self.encode(&c));
            let mut j = 0;
            while j < self.n {
                digits[j] += 1;
                if digits[j] <= count[j] {
                    break;
                }
                digits[j] = 0;
                j += 1;
            }
            if j == self.n {
                return out;
            }
        }
    }

    /// All points of the level-`k` lattice.
    pub fn points(&self, k: u32) -> Vec<u64> {
        self.box_points(&vec![0; self.n], self.step(k), &vec![self.per_axis(k); self.n])
    }

    /// Lower corners of all level-`k` cubes.
    pub fn cubes(&self, k: u32) -> Vec<u64> {
        self.box_points(&vec![0; self.n], self.step(k), &vec![self.per_axis(k) - 1; self.n])
    }

    pub fn corners(&self, k: u32, cube: u64) -> Vec<u64> {
        self.box_points(&self.decode(cube), self.step(k), &vec![1; self.n])
    }

    /// Level-`k+1` cubes inside a level-`k` cube.
    pub fn children(&self, k: u32, cube: u64) -> Vec<u64> {
        self.box_points(&self.decode(cube), self.step(k + 1), &vec![self.b() - 1; self.n])
    }

    /// Level-`k+1` lattice points of the closed cube.
    pub fn cube_points(&self, k: u32, cube: u64, level: u32) -> Vec<u64> {
        let ratio = self.step(k) / self.step(level);
        self.box_points(&self.decode(cube), self.step(level), &vec![ratio; self.n])
    }

    /// The `m`-dimensional faces of a level-`k` cube.
    pub fn faces(&self, k: u32, cube: u64, m: usize) -> Vec<Face> {
        let base = self.decode(cube);
        let mut out = Vec::new();
        for mask in 0u32..(1 << self.n) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let fixed: Vec<usize> = (0..self.n).filter(|j| mask & (1 << j) == 0).collect();
            for side in 0u32..(1 << fixed.len()) {
                let mut c = base.clone();
                for (t, &j) in fixed.iter().enumerate() {
                    if side & (1 << t) != 0 {
                        c[j] += self.step(k);
                    }
                }
                out.push(Face { level: k, corner: self.encode(&c), mask });
            }
        }
        out
    }

    /// Level-`k+1` lattice points of a level-`k` face, with a boundary flag.
    pub fn face_points(&self, f: &Face) -> Vec<(u64, bool)> {
        let step = self.step(f.level + 1);
        let b = self.b();
        let count: Vec<u64> = (0..self.n).map(|j| if f.mask & (1 << j) != 0 { b } else { 0 }).collect();
        let origin = self.decode(f.corner);
        self.box_points(&origin, step, &count)
            .into_iter()
            .map(|p| {
                let c = self.decode(p);
                let boundary = (0..self.n)
                    .filter(|j| f.mask & (1 << j) != 0)
                    .any(|j| c[j] == origin[j] || c[j] == origin[j] + b * step);
                (p, boundary)
            })
            .collect()
    }

    /// Packed neighbours of `p` at `step` spacing within `reach` steps, in the
    /// positive half space only (each unordered pair is visited once).
    pub fn forward_neighbours(&self, p: u64, step: u64, reach: u64) -> Vec<u64> {
        let c = self.decode(p);
        let r = reach as i64;
        let mut out = Vec::new();
        let mut off = vec![-r; self.n];
        loop {
            let first_nonzero = off.iter().rev().find(|&&o| o != 0);
            if matches!(first_nonzero, Some(&o) if o > 0) {
                let q: Option<Vec<u64>> = c
                    .iter()
                    .zip(&off)
                    .map(|(&x, &o)| {
                        let y = x as i64 + o * step as i64;
                        (0..=self.cells as i64).contains(&y).then_some(y as u64)
                    })
                    .collect();
                if let Some(q) = q {
                    out.push(self.encode(&q));
                }
            }
            let mut j = 0;
            while j < self.n {
                off[j] += 1;
                if off[j] <= r {
                    break;
                }
                off[j] = -r;
                j += 1;
            }
            if j == self.n {
                return out;
            }
        }
    }
}
