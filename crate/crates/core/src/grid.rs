//! Discretization of the periodic square `[0, L)²`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{KseError, Result};
use crate::fft::Fft2d;

/// Shared handle to an immutable grid.
pub type Grid = Arc<GridSpec>;

/// Which Fourier modes survive the truncation applied after every product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Square 2/3 rule: drop every mode with `max(|k1|, |k2|) >= n/3`.
    TwoThirds,
    /// Euclidean ball `|k| <= radius` (integer wavevectors), i.e. a Galerkin
    /// projection. The radius must stay below `n/3` so products are alias free.
    Ball(f64),
}

#[derive(Debug)]
pub struct GridSpec {
    n: usize,
    domain_length: f64,
    truncation: Truncation,
    /// Integer wavenumber for each FFT index along one axis.
    axis: Vec<i64>,
    /// Physical wavenumbers `(2π/L) k1`, `(2π/L) k2` per mode.
    k1: Vec<f64>,
    k2: Vec<f64>,
    /// `|k|²` in physical units per mode.
    ksq: Vec<f64>,
    mask: Vec<bool>,
    pub(crate) fft: Fft2d,
}

/// Builds the standard grid with the square 2/3 dealiasing rule.
pub fn build_grid(n: usize, domain_length: f64) -> Result<Grid> {
    GridSpec::new(n, domain_length, Truncation::TwoThirds)
}

impl GridSpec {
    pub fn new(n: usize, domain_length: f64, truncation: Truncation) -> Result<Grid> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(KseError::config(format!(
                "grid size must be even and at least 4, got {n}"
            )));
        }
        if !(domain_length > 0.0 && domain_length.is_finite()) {
            return Err(KseError::config(format!(
                "domain length must be positive, got {domain_length}"
            )));
        }
        if let Truncation::Ball(r) = truncation {
            if !(r >= 0.0 && 3.0 * r < n as f64) {
                return Err(KseError::config(format!(
                    "ball truncation radius {r} must lie in [0, n/3) for n = {n}"
                )));
            }
        }

        let half = (n / 2) as i64;
        let axis: Vec<i64> = (0..n as i64)
            .map(|j| if j < half { j } else { j - n as i64 })
            .collect();
        let scale = 2.0 * PI / domain_length;

        let mut k1 = Vec::with_capacity(n * n);
        let mut k2 = Vec::with_capacity(n * n);
        let mut ksq = Vec::with_capacity(n * n);
        let mut mask = Vec::with_capacity(n * n);
        for &a in &axis {
            for &b in &axis {
                let (x, y) = (scale * a as f64, scale * b as f64);
                k1.push(x);
                k2.push(y);
                ksq.push(x * x + y * y);
                let keep = match truncation {
                    Truncation::TwoThirds => 3 * a.abs().max(b.abs()) < n as i64,
                    Truncation::Ball(r) => ((a * a + b * b) as f64) <= r * r,
                };
                mask.push(keep);
            }
        }

        Ok(Arc::new(GridSpec {
            n,
            domain_length,
            truncation,
            axis,
            k1,
            k2,
            ksq,
            mask,
            fft: Fft2d::new(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// `n/3`; modes at or beyond this (in max-norm) are removed by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> f64 {
        self.n as f64 / 3.0
    }

    /// Grid spacing `L/n`.
    pub fn dx(&self) -> f64 {
        self.domain_length / self.n as f64
    }

    /// Cell area `(L/n)²`, the quadrature weight of each sample.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    pub fn area(&self) -> f64 {
        self.domain_length * self.domain_length
    }

    /// Integer wavenumbers along one axis in FFT order.
    pub fn axis_wavenumbers(&self) -> &[i64] {
        &self.axis
    }

    /// Integer wavevector of flat mode index `idx`.
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (self.axis[idx / self.n], self.axis[idx % self.n])
    }

    /// Flat index of the integer wavevector `(k1, k2)`, if it is on the grid.
    pub fn index_of(&self, k1: i64, k2: i64) -> Option<usize> {
        let n = self.n as i64;
        let half = n / 2;
        if k1 < -half || k1 >= half || k2 < -half || k2 >= half {
            return None;
        }
        let j1 = k1.rem_euclid(n) as usize;
        let j2 = k2.rem_euclid(n) as usize;
        Some(j1 * self.n + j2)
    }

    /// Flat index of `-k` (with the Nyquist row/column mapping onto itself).
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (j1, j2) = (idx / n, idx % n);
        ((n - j1) % n) * n + (n - j2) % n
    }

    pub fn k1(&self) -> &[f64] {
        &self.k1
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    /// Physical `|k|²` per mode.
    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    /// `true` for modes retained by the truncation rule.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `true` if either component of the wavevector sits at `-n/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let (a, b) = self.wavevector(idx);
        let h = -((self.n / 2) as i64);
        a == h || b == h
    }

    /// Physical coordinates of sample `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.dx();
        ((idx / self.n) as f64 * h, (idx % self.n) as f64 * h)
    }

    pub fn same_discretization(&self, other: &GridSpec) -> bool {
        self.n == other.n
            && self.domain_length == other.domain_length
            && self.truncation == other.truncation
    }
}
