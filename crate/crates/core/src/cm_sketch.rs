//! Count-min sketches over non-negative real vectors.
//!
//! A sketch is a `depth x width` matrix; coordinate `i` with value `x` adds
//! `x` to one cell per row, picked by that row's hash of `i`. When every
//! coordinate of two vectors is non-negative, the row-wise dot product of
//! their sketches can only overcount, so the minimum over rows is an upper
//! bound on the true inner product, and exceeds it by more than
//! `||a||_1 ||b||_1 / width` with probability at most `exp(-depth)`.
//!
//! Sketches are only comparable when built from the same [`HashFamily`].

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

const MERSENNE_61: u64 = (1 << 61) - 1;

#[inline]
fn mod_mersenne(x: u128) -> u64 {
    let lo = (x as u64) & MERSENNE_61;
    let hi = (x >> 61) as u64;
    let s = lo + (hi & MERSENNE_61) + (hi >> 61);
    let s = (s & MERSENNE_61) + (s >> 61);
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

/// `depth` independent draws from the pairwise-independent family
/// `h(x) = ((a x + b) mod (2^61 - 1)) mod width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    width: usize,
    rows: Vec<(u64, u64)>,
}

impl HashFamily {
    pub fn new<R: Rng + ?Sized>(width: usize, depth: usize, rng: &mut R) -> Result<Self> {
        if width == 0 || depth == 0 {
            return Err(Error::ZeroSketchDimensions { width, depth });
        }
        let rows = (0..depth)
            .map(|_| {
                (
                    rng.gen_range(1..MERSENNE_61),
                    rng.gen_range(0..MERSENNE_61),
                )
            })
            .collect();
        Ok(HashFamily { width, rows })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn bucket(&self, row: usize, key: u64) -> usize {
        let (a, b) = self.rows[row];
        let x = mod_mersenne(key as u128);
        let h = mod_mersenne(a as u128 * x as u128 + b as u128);
        (h % self.width as u64) as usize
    }
}

#[derive(Debug, Clone)]
pub struct CountMinSketch {
    family: Arc<HashFamily>,
    cells: Vec<f64>,
    l1_mass: f64,
}

impl CountMinSketch {
    /// A zeroed sketch over the shared `family`.
    pub fn new(family: Arc<HashFamily>) -> Self {
        let cells = vec![0.0; family.width() * family.depth()];
        CountMinSketch {
            family,
            cells,
            l1_mass: 0.0,
        }
    }

    /// Convenience constructor that draws a fresh family.
    pub fn with_dimensions<R: Rng + ?Sized>(width: usize, depth: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::new(Arc::new(HashFamily::new(width, depth, rng)?)))
    }

    pub fn family(&self) -> &Arc<HashFamily> {
        &self.family
    }

    pub fn width(&self) -> usize {
        self.family.width()
    }

    pub fn depth(&self) -> usize {
        self.family.depth()
    }

    /// Running sum of all updates, i.e. the l1 norm of the (non-negative)
    /// sketched vector.
    pub fn l1_mass(&self) -> f64 {
        self.l1_mass
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.width();
        &self.cells[r * w..(r + 1) * w]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.depth()).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn is_compatible(&self, other: &CountMinSketch) -> bool {
        Arc::ptr_eq(&self.family, &other.family) || self.family == other.family
    }

    /// Adds `delta` to `coordinate`. The caller keeps every coordinate's
    /// running value non-negative.
    #[inline]
    pub fn update(&mut self, coordinate: u64, delta: f64) {
        let w = self.width();
        for r in 0..self.depth() {
            let j = self.family.bucket(r, coordinate);
            self.cells[r * w + j] += delta;
        }
        self.l1_mass += delta;
    }

    /// Cell-wise sum; the result sketches the sum of the two vectors.
    pub fn add_assign(&mut self, other: &CountMinSketch) -> Result<()> {
        if !self.is_compatible(other) {
            return Err(Error::IncompatibleSketches);
        }
        for (c, o) in self.cells.iter_mut().zip(&other.cells) {
            *c += o;
        }
        self.l1_mass += other.l1_mass;
        Ok(())
    }

    /// Upper-bound estimate of the inner product of the two sketched vectors.
    pub fn inner_product_estimate(&self, other: &CountMinSketch) -> Result<f64> {
        if !self.is_compatible(other) {
            return Err(Error::IncompatibleSketches);
        }
        Ok((0..self.depth())
            .map(|r| dot(self.row(r), other.row(r)))
            .fold(f64::INFINITY, f64::min))
    }

    /// Estimate for the inner product after dropping one coordinate from each
    /// side: `own = (i, x)` removes value `x` at coordinate `i` from `self`,
    /// `theirs` likewise from `other`. Both values must be the true current
    /// values, so the adjusted sketches stay sketches of non-negative vectors.
    pub fn inner_product_estimate_excluding(
        &self,
        own: Option<(u64, f64)>,
        other: &CountMinSketch,
        theirs: Option<(u64, f64)>,
    ) -> Result<f64> {
        if !self.is_compatible(other) {
            return Err(Error::IncompatibleSketches);
        }
        let mut best = f64::INFINITY;
        for r in 0..self.depth() {
            let (mine, yours) = (self.row(r), other.row(r));
            let mut est = dot(mine, yours);
            let own_at = own.map(|(i, x)| (self.family.bucket(r, i), x));
            let theirs_at = theirs.map(|(i, x)| (self.family.bucket(r, i), x));
            if let Some((j, x)) = own_at {
                est -= x * yours[j];
            }
            if let Some((j, y)) = theirs_at {
                est -= y * mine[j];
            }
            if let (Some((j, x)), Some((k, y))) = (own_at, theirs_at) {
                if j == k {
                    est += x * y;
                }
            }
            best = best.min(est);
        }
        Ok(best)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
