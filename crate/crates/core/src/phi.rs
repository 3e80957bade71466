//! φ-functions of exponential integrators, evaluated by contour averaging.
//!
//! `φ₀(z) = eᶻ`, `φ₁(z) = (eᶻ - 1)/z`, `φ₂(z) = (eᶻ - 1 - z)/z²`,
//! `φ₃(z) = (eᶻ - 1 - z - z²/2)/z³`. The closed forms cancel catastrophically
//! near `z = 0`; averaging them over a circle centred at `z` sidesteps the
//! removable singularity because every φ is entire.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{KseError, Result};

/// Quadrature circle used for every φ evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub points: usize,
    pub radius: f64,
}

impl Default for Contour {
    fn default() -> Self {
        Self {
            points: 32,
            radius: 1.0,
        }
    }
}

impl Contour {
    pub fn new(points: usize, radius: f64) -> Result<Self> {
        if points < 16 || !points.is_multiple_of(2) {
            return Err(KseError::config(format!(
                "contour needs an even number of points >= 16, got {points}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(KseError::config(format!("contour radius must be positive, got {radius}")));
        }
        Ok(Self { points, radius })
    }

    /// Offsets `r·e^{iθⱼ}` with `θⱼ = 2π(j + ½)/M`; the half shift keeps every
    /// node off the real axis.
    pub fn offsets(&self) -> Vec<Complex64> {
        (0..self.points)
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + 0.5) / self.points as f64;
                Complex64::from_polar(self.radius, theta)
            })
            .collect()
    }
}

/// Closed-form `φ₀..φ₃` at a point away from the origin.
pub fn phi_closed(z: Complex64) -> [Complex64; 4] {
    let e = z.exp();
    let one = Complex64::new(1.0, 0.0);
    let p1 = (e - one) / z;
    let p2 = (e - one - z) / (z * z);
    let p3 = (e - one - z - z * z * 0.5) / (z * z * z);
    [e, p1, p2, p3]
}

/// Real part of the contour mean of `φ₀..φ₃` around real `z`, together with
/// the largest imaginary residue (relative to the value) that was discarded.
pub fn phi_contour(z: f64, contour: &Contour, offsets: &[Complex64]) -> ([f64; 4], f64) {
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    for w in offsets {
        let vals = phi_closed(Complex64::new(z, 0.0) + w);
        for (a, v) in acc.iter_mut().zip(vals) {
            *a += v;
        }
    }
    let m = contour.points as f64;
    let mut out = [0.0; 4];
    let mut residue: f64 = 0.0;
    for (o, a) in out.iter_mut().zip(acc) {
        let mean = a / m;
        *o = mean.re;
        let scale = mean.re.abs().max(f64::MIN_POSITIVE);
        residue = residue.max(mean.im.abs() / scale);
    }
    (out, residue)
}

/// `φ_order(z)` by contour averaging, for `order` in `1..=3`.
pub fn phi(order: usize, z: f64, contour: &Contour) -> f64 {
    assert!((1..=3).contains(&order), "phi order must be 1, 2 or 3");
    phi_contour(z, contour, &contour.offsets()).0[order]
}
