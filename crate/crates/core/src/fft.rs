//! Square 2D complex FFTs built from 1D `rustfft` plans.
//!
//! Layout is row-major: index `j1 * n + j2`, with `j1` along the first
//! coordinate. The forward transform carries the `1/n²` factor so that
//! coefficients are the Fourier-series amplitudes; the inverse is unscaled.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub(crate) struct Fft2d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2d").field("n", &self.n).finish()
    }
}

impl Fft2d {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }

    /// Physical samples to Fourier coefficients (scaled by `1/n²`).
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.forward, data);
        let scale = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Fourier coefficients to physical samples (unscaled series sum).
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inverse, data);
    }

    /// Synthesizes two real fields with a single complex transform.
    ///
    /// Both coefficient arrays must be conjugate symmetric.
    pub(crate) fn inverse_real_pair(
        &self,
        a: &[Complex64],
        b: &[Complex64],
    ) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
        self.inverse(&mut buf);
        buf.into_iter().map(|z| (z.re, z.im)).unzip()
    }

    /// Analyzes a single real field; the output is exactly conjugate symmetric.
    pub(crate) fn forward_real(&self, p: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = p.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for j1 in 0..n {
            let m1 = (n - j1) % n;
            for j2 in 0..n {
                let m2 = (n - j2) % n;
                out[j1 * n + j2] = (buf[j1 * n + j2] + buf[m1 * n + m2].conj()) * 0.5;
            }
        }
        out
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}
