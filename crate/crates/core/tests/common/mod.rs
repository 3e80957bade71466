//! Shared oracles for the integration tests. Everything here works directly on
//! Fourier coefficients and never calls the library's transforms.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

use kse::initial::{random_band, UniformStream};
use kse::{Grid, SpectralField, VectorField};

pub const TWO_PI: f64 = 2.0 * PI;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Seeded real field with support on `0 < |k| <= k_max`.
pub fn random_field(grid: &Grid, k_max: usize, seed: u64) -> SpectralField {
    random_band(grid, k_max, &mut UniformStream::new(seed)).unwrap()
}

pub fn random_vector(grid: &Grid, k_max: usize, seed: u64) -> VectorField {
    let mut rng = UniformStream::new(seed);
    VectorField::new(
        random_band(grid, k_max, &mut rng).unwrap(),
        random_band(grid, k_max, &mut rng).unwrap(),
    )
    .unwrap()
}

/// Seeded complex white noise on every mode.
pub fn white_noise(grid: &Grid, seed: u64) -> SpectralField {
    let mut rng = UniformStream::new(seed);
    let samples: Vec<f64> = (0..grid.len()).map(|_| rng.next_signed()).collect();
    SpectralField::from_physical(grid, &samples).unwrap()
}

fn wrap(k: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if k < -half || k >= half {
        None
    } else {
        Some(k.rem_euclid(n as i64) as usize)
    }
}

/// Index of `(k1, k2)` in row-major FFT order, if representable.
pub fn index(n: usize, k1: i64, k2: i64) -> Option<usize> {
    Some(wrap(k1, n)? * n + wrap(k2, n)?)
}

pub fn wavevector(n: usize, idx: usize) -> (i64, i64) {
    let w = |j: usize| if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
    (w(idx / n), w(idx % n))
}

/// Square 2/3 rule written out independently.
pub fn keep(n: usize, k1: i64, k2: i64) -> bool {
    3 * k1.abs().max(k2.abs()) < n as i64
}

/// `Σ_{p+q=k} a(p) b(q)` over the whole table, restricted to kept modes.
pub fn convolve(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![c(0.0, 0.0); n * n];
    let nz_a: Vec<usize> = (0..n * n).filter(|&i| a[i].norm() > 0.0).collect();
    let nz_b: Vec<usize> = (0..n * n).filter(|&i| b[i].norm() > 0.0).collect();
    for &i in &nz_a {
        let (p1, p2) = wavevector(n, i);
        for &j in &nz_b {
            let (q1, q2) = wavevector(n, j);
            let (k1, k2) = (p1 + q1, p2 + q2);
            if !keep(n, k1, k2) {
                continue;
            }
            if let Some(idx) = index(n, k1, k2) {
                out[idx] += a[i] * b[j];
            }
        }
    }
    out
}

/// `i·(2π/L)·k_axis·a(k)`, axis 0 or 1.
pub fn derivative(n: usize, domain_length: f64, a: &[Complex64], axis: usize) -> Vec<Complex64> {
    let s = TWO_PI / domain_length;
    (0..n * n)
        .map(|i| {
            let (k1, k2) = wavevector(n, i);
            let k = if axis == 0 { k1 } else { k2 };
            // Nyquist wavenumbers carry no derivative
            if k == -((n / 2) as i64) {
                return c(0.0, 0.0);
            }
            a[i] * c(0.0, s * k as f64)
        })
        .collect()
}

/// `-(u·∇)u_c` by direct convolution, truncated by the 2/3 rule.
pub fn advective_oracle(u: &VectorField) -> [Vec<Complex64>; 2] {
    let g = u.grid();
    let n = g.n();
    let l = g.domain_length();
    let comps = [u.u1.coeffs(), u.u2.coeffs()];
    let mut out = [vec![c(0.0, 0.0); n * n], vec![c(0.0, 0.0); n * n]];
    for (cidx, target) in out.iter_mut().enumerate() {
        for (j, uj) in comps.iter().enumerate() {
            let du = derivative(n, l, comps[cidx], j);
            for (o, v) in target.iter_mut().zip(convolve(n, uj, &du)) {
                *o -= v;
            }
        }
    }
    out
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `φ_k(z)` by its power series `Σ_j z^j/(j+k)!`.
pub fn phi_series(k: usize, z: f64) -> f64 {
    let mut fact = 1.0;
    for i in 1..=k {
        fact *= i as f64;
    }
    let mut term = 1.0 / fact;
    let mut sum = 0.0;
    for j in 0..200 {
        sum += term;
        term *= z / (j + k + 1) as f64;
        if term.abs() < 1e-300 {
            break;
        }
    }
    sum
}

/// Midpoint-rule quadrature of `f` on `[-π, π)²` with `m²` cells.
pub fn quadrature(m: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let h = TWO_PI / m as f64;
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            let x = -PI + (i as f64 + 0.5) * h;
            let y = -PI + (j as f64 + 0.5) * h;
            s += f(x, y);
        }
    }
    s * h * h
}
