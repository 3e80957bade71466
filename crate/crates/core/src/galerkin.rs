//! The Galerkin-truncated system on the Fourier ball `|k| <= n`, evaluated
//! by direct convolution and integrated with classical RK4.
//!
//! Nothing here touches an FFT or the ETD machinery, so it can serve as an
//! independent check of the pseudo-spectral solver: on a grid whose
//! truncation is the same ball, both must produce the same ODE.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{KseError, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;
use crate::models::{Fields, ModelKind, ModelParams, Nonlinearity};

/// Integer wavevectors with `k1² + k2² <= n²`, in lexicographic order.
pub fn ball_modes(n_trunc: usize) -> Vec<(i64, i64)> {
    let n = n_trunc as i64;
    let mut modes = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            if a * a + b * b <= n * n {
                modes.push((a, b));
            }
        }
    }
    modes
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    pub n_trunc: usize,
    pub domain_length: f64,
    pub modes: Vec<(i64, i64)>,
    /// One coefficient table per component, aligned with `modes`.
    pub coeffs: Vec<Vec<Complex64>>,
    pub t: f64,
}

impl GalerkinState {
    pub fn zeros(n_trunc: usize, components: usize, domain_length: f64) -> Self {
        let modes = ball_modes(n_trunc);
        let len = modes.len();
        Self {
            n_trunc,
            domain_length,
            modes,
            coeffs: vec![vec![Complex64::new(0.0, 0.0); len]; components],
            t: 0.0,
        }
    }

    /// Projects grid fields onto the ball `|k| <= n_trunc`.
    pub fn project(fields: &Fields, n_trunc: usize) -> Result<Self> {
        let grid = fields.grid();
        if 2 * n_trunc >= grid.n() {
            return Err(KseError::config(format!(
                "truncation {n_trunc} does not fit on an n = {} grid",
                grid.n()
            )));
        }
        let comps = fields.components();
        let mut s = Self::zeros(n_trunc, comps.len(), grid.domain_length());
        for (table, field) in s.coeffs.iter_mut().zip(&comps) {
            for (slot, &(a, b)) in table.iter_mut().zip(&s.modes) {
                *slot = field.coeff(a, b);
            }
        }
        Ok(s)
    }

    /// Writes the retained coefficients onto `grid` (all other modes zero).
    pub fn to_fields(&self, grid: &Grid) -> Result<Fields> {
        if grid.domain_length() != self.domain_length {
            return Err(KseError::config("grid and Galerkin state have different periods"));
        }
        let mut out: Vec<SpectralField> = Vec::with_capacity(self.coeffs.len());
        for table in &self.coeffs {
            let mut f = SpectralField::zeros(grid, true);
            for (&(a, b), &c) in self.modes.iter().zip(table) {
                let idx = grid.index_of(a, b).ok_or_else(|| {
                    KseError::config(format!("mode ({a}, {b}) is not on the grid"))
                })?;
                f.coeffs_mut()[idx] = c;
            }
            out.push(f);
        }
        let mut it = out.into_iter();
        Ok(match (it.next(), it.next()) {
            (Some(u1), Some(u2)) => Fields::Vector(VectorField { u1, u2 }),
            (Some(phi), None) => Fields::Scalar(phi),
            _ => return Err(KseError::config("empty Galerkin state")),
        })
    }

    fn scale(&self) -> f64 {
        2.0 * PI / self.domain_length
    }

    /// `(Σ_c Σ_k (1 + |k|)² |û_c(k)|²)^{1/2}`.
    pub fn h1_norm(&self) -> f64 {
        let sc = self.scale();
        let mut sum = 0.0;
        for table in &self.coeffs {
            for (&(a, b), c) in self.modes.iter().zip(table) {
                let k = sc * ((a * a + b * b) as f64).sqrt();
                sum += (1.0 + k) * (1.0 + k) * c.norm_sqr();
            }
        }
        sum.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// L² distance between two states on the same mode set.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.modes != other.modes || self.coeffs.len() != other.coeffs.len() {
            return Err(KseError::config("Galerkin states have different mode sets"));
        }
        Ok(self
            .coeffs
            .iter()
            .flatten()
            .zip(other.coeffs.iter().flatten())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// The truncated vector field with its convolution structure precomputed.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    params: ModelParams,
    modes: Vec<(i64, i64)>,
    /// Physical wavevectors per mode.
    wave: Vec<(f64, f64)>,
    sigma: Vec<Vec<f64>>,
    /// `(k, p, q)` index triples with `p + q = k`, all inside the ball.
    triads: Vec<(usize, usize, usize)>,
}

impl GalerkinSystem {
    pub fn new(params: ModelParams, n_trunc: usize, domain_length: f64) -> Result<Self> {
        params.validate()?;
        let modes = ball_modes(n_trunc);
        let index: HashMap<(i64, i64), usize> =
            modes.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let sc = 2.0 * PI / domain_length;
        let wave: Vec<(f64, f64)> = modes
            .iter()
            .map(|&(a, b)| (sc * a as f64, sc * b as f64))
            .collect();
        let ksq: Vec<f64> = wave.iter().map(|(x, y)| x * x + y * y).collect();
        let kse: Vec<f64> = ksq
            .iter()
            .map(|&k| params.lambda * k - k * k)
            .collect();
        let sigma = match params.kind {
            ModelKind::KseScalar => vec![kse],
            ModelKind::KseVector => vec![kse.clone(), kse],
            ModelKind::Rkse => vec![ksq.iter().map(|&k| -params.nu * k).collect(), kse],
        };
        let mut triads = Vec::new();
        for (ki, &(k1, k2)) in modes.iter().enumerate() {
            for (pi, &(p1, p2)) in modes.iter().enumerate() {
                if let Some(&qi) = index.get(&(k1 - p1, k2 - p2)) {
                    triads.push((ki, pi, qi));
                }
            }
        }
        Ok(Self {
            params,
            modes,
            wave,
            sigma,
            triads,
        })
    }

    pub fn modes(&self) -> &[(i64, i64)] {
        &self.modes
    }

    /// Smallest linear eigenvalue over the retained modes.
    pub fn min_sigma(&self) -> f64 {
        self.sigma
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Nonlinear part of `dû/dt` (already carrying its minus sign).
    pub fn nonlinear(&self, coeffs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let len = self.modes.len();
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self.params.kind {
            ModelKind::KseScalar => {
                // -½|∇φ|²: (ip·iq) = -(p·q)
                let phi = &coeffs[0];
                let mut out = vec![zero; len];
                for &(k, p, q) in &self.triads {
                    let (p1, p2) = self.wave[p];
                    let (q1, q2) = self.wave[q];
                    out[k] += phi[p] * phi[q] * (0.5 * (p1 * q1 + p2 * q2));
                }
                vec![out]
            }
            ModelKind::KseVector | ModelKind::Rkse => {
                let (u1, u2) = (&coeffs[0], &coeffs[1]);
                let mut n1 = vec![zero; len];
                let mut n2 = vec![zero; len];
                match self.params.nonlinearity {
                    Nonlinearity::Advective => {
                        // (u·∇)u_c at k = Σ_{p+q=k} (û₁(p) iq₁ + û₂(p) iq₂) û_c(q)
                        for &(k, p, q) in &self.triads {
                            let (q1, q2) = self.wave[q];
                            let adv = (u1[p] * q1 + u2[p] * q2) * i;
                            n1[k] -= adv * u1[q];
                            n2[k] -= adv * u2[q];
                        }
                    }
                    Nonlinearity::GradSq => {
                        let mut sq = vec![zero; len];
                        for &(k, p, q) in &self.triads {
                            sq[k] += u1[p] * u1[q] + u2[p] * u2[q];
                        }
                        for (k, s) in sq.iter().enumerate() {
                            let (k1, k2) = self.wave[k];
                            n1[k] = -(i * k1) * s * 0.5;
                            n2[k] = -(i * k2) * s * 0.5;
                        }
                    }
                }
                vec![n1, n2]
            }
        }
    }

    /// Full `dû/dt` on the retained modes.
    pub fn rhs(&self, coeffs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let mut out = self.nonlinear(coeffs);
        for (c, table) in out.iter_mut().enumerate() {
            for (k, o) in table.iter_mut().enumerate() {
                *o += coeffs[c][k] * self.sigma[c][k];
            }
        }
        out
    }

    /// Same as [`rhs`](Self::rhs) with the nonlinearity switched off.
    pub fn linear_rhs(&self, coeffs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        coeffs
            .iter()
            .zip(&self.sigma)
            .map(|(t, s)| t.iter().zip(s).map(|(c, &sg)| c * sg).collect())
            .collect()
    }
}

/// `dû/dt` of the Galerkin system at `state`.
pub fn galerkin_rhs(state: &GalerkinState, params: &ModelParams) -> Result<Vec<Vec<Complex64>>> {
    let sys = GalerkinSystem::new(*params, state.n_trunc, state.domain_length)?;
    if state.coeffs.len() != params.kind.components() {
        return Err(KseError::Shape {
            expected: params.kind.components(),
            got: state.coeffs.len(),
        });
    }
    Ok(sys.rhs(&state.coeffs))
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<GalerkinState>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&GalerkinState> {
        self.samples.last()
    }

    pub fn h1_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.h1_norm())).collect()
    }

    /// CSV with a header row: `t`, then `re`/`im` of every retained
    /// coefficient, component by component.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        if let Some(first) = self.samples.first() {
            for c in 0..first.coeffs.len() {
                for &(a, b) in &first.modes {
                    let _ = write!(out, ",re_u{}_{}_{},im_u{}_{}_{}", c + 1, a, b, c + 1, a, b);
                }
            }
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{:e}", s.t);
            for z in s.coeffs.iter().flatten() {
                let _ = write!(out, ",{:e},{:e}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }
}

fn axpy(y: &[Vec<Complex64>], a: f64, x: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    y.iter()
        .zip(x)
        .map(|(ty, tx)| ty.iter().zip(tx).map(|(u, v)| u + v * a).collect())
        .collect()
}

fn rk4_step(
    f: &dyn Fn(&[Vec<Complex64>]) -> Vec<Vec<Complex64>>,
    y: &[Vec<Complex64>],
    h: f64,
) -> Vec<Vec<Complex64>> {
    let k1 = f(y);
    let k2 = f(&axpy(y, h / 2.0, &k1));
    let k3 = f(&axpy(y, h / 2.0, &k2));
    let k4 = f(&axpy(y, h, &k3));
    y.iter()
        .enumerate()
        .map(|(c, t)| {
            t.iter()
                .enumerate()
                .map(|(i, v)| v + (k1[c][i] + (k2[c][i] + k3[c][i]) * 2.0 + k4[c][i]) * (h / 6.0))
                .collect()
        })
        .collect()
}

/// Classical RK4 with fixed step `dt`, sampled every `sample_every` steps and
/// at `t_final` (the last step is shortened to land exactly).
pub fn integrate_galerkin(
    s0: &GalerkinState,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    params: &ModelParams,
) -> Result<Trajectory> {
    integrate_with(s0, t_final, dt, sample_every, params, false)
}

/// As [`integrate_galerkin`] with the nonlinear term removed.
pub fn integrate_galerkin_linear(
    s0: &GalerkinState,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    params: &ModelParams,
) -> Result<Trajectory> {
    integrate_with(s0, t_final, dt, sample_every, params, true)
}

fn integrate_with(
    s0: &GalerkinState,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    params: &ModelParams,
    linear_only: bool,
) -> Result<Trajectory> {
    let sys = GalerkinSystem::new(*params, s0.n_trunc, s0.domain_length)?;
    if s0.coeffs.len() != params.kind.components() {
        return Err(KseError::Shape {
            expected: params.kind.components(),
            got: s0.coeffs.len(),
        });
    }
    if !(dt > 0.0) || !(t_final >= s0.t) {
        return Err(KseError::config("need dt > 0 and t_final >= t0"));
    }
    if sys.min_sigma() * dt <= -2.5 {
        return Err(KseError::config(format!(
            "dt = {dt} violates explicit RK4 stability (min σ = {})",
            sys.min_sigma()
        )));
    }
    let sample_every = sample_every.max(1);
    let f = |y: &[Vec<Complex64>]| {
        if linear_only {
            sys.linear_rhs(y)
        } else {
            sys.rhs(y)
        }
    };

    let mut traj = Trajectory {
        samples: vec![s0.clone()],
    };
    let mut state = s0.clone();
    let mut count = 0usize;
    let eps = 1e-12 * t_final.abs().max(1.0);
    while t_final - state.t > eps {
        let remaining = t_final - state.t;
        let (h, last) = if remaining <= dt * (1.0 + 1e-9) {
            (remaining, true)
        } else {
            (dt, false)
        };
        let next = rk4_step(&f, &state.coeffs, h);
        let worst = next.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if !worst.is_finite() || worst > 1e8 {
            return Err(KseError::BlowUp {
                t: state.t + h,
                norm: worst,
            });
        }
        state.coeffs = next;
        state.t = if last { t_final } else { state.t + h };
        count += 1;
        if last || count.is_multiple_of(sample_every) {
            traj.samples.push(state.clone());
        }
    }
    Ok(traj)
}

/// Fit of the local-existence bound
/// `H(t) <= (1 + H₀)/[1 - 4ct(1 + H₀)⁴]^{1/4} - 1` to an observed H¹ series.
#[derive(Debug, Clone, PartialEq)]
pub struct H1GrowthReport {
    pub series: Vec<(f64, f64)>,
    pub h1_initial: f64,
    /// Smallest `c >= 0` for which the bound dominates every sample.
    pub fitted_c: f64,
    /// `1/(4c(1 + H₀)⁴)`; infinite when `c = 0`.
    pub existence_time: f64,
}

pub fn h1_growth_check(series: &[(f64, f64)]) -> Result<H1GrowthReport> {
    let &(t0, h0) = series
        .first()
        .ok_or_else(|| KseError::config("empty H1 series"))?;
    if series.iter().any(|(t, h)| !t.is_finite() || !h.is_finite()) {
        return Err(KseError::config("H1 series contains non-finite values"));
    }
    let base = 1.0 + h0;
    let base4 = base.powi(4);
    let mut c: f64 = 0.0;
    for &(t, h) in &series[1..] {
        let dt = t - t0;
        if dt <= 0.0 || h <= h0 {
            continue;
        }
        let ratio = (base / (1.0 + h)).powi(4);
        c = c.max((1.0 - ratio) / (4.0 * dt * base4));
    }
    let existence_time = if c > 0.0 {
        1.0 / (4.0 * c * base4)
    } else {
        f64::INFINITY
    };
    Ok(H1GrowthReport {
        series: series.to_vec(),
        h1_initial: h0,
        fitted_c: c,
        existence_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_sizes() {
        assert_eq!(ball_modes(0), vec![(0, 0)]);
        assert_eq!(ball_modes(1).len(), 5);
        assert_eq!(ball_modes(3).len(), 29);
    }

    #[test]
    fn constant_state_is_stationary() {
        let mut s = GalerkinState::zeros(0, 2, 2.0 * PI);
        s.coeffs[0][0] = Complex64::new(0.4, 0.0);
        s.coeffs[1][0] = Complex64::new(-0.1, 0.0);
        let r = galerkin_rhs(&s, &ModelParams::rkse(5.01, 0.5)).unwrap();
        assert!(r.iter().flatten().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn self_interaction_is_projected_out() {
        // u₁ = cos(x₁): (u·∇)u₁ = -½ sin(2x₁), which lives at |k| = 2.
        let mut s = GalerkinState::zeros(1, 2, 2.0 * PI);
        let ip = s.modes.iter().position(|&m| m == (1, 0)).unwrap();
        let im = s.modes.iter().position(|&m| m == (-1, 0)).unwrap();
        s.coeffs[0][ip] = Complex64::new(0.5, 0.0);
        s.coeffs[0][im] = Complex64::new(0.5, 0.0);
        let r = galerkin_rhs(&s, &ModelParams::rkse(5.01, 0.5)).unwrap();
        for (k, z) in r[0].iter().enumerate() {
            let want = if k == ip || k == im { -0.5 * 0.5 } else { 0.0 };
            assert!((z - Complex64::new(want, 0.0)).norm() < 1e-15);
        }
        assert!(r[1].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn zero_trajectory() {
        let s = GalerkinState::zeros(2, 2, 2.0 * PI);
        let tr = integrate_galerkin(&s, 0.01, 1e-3, 1, &ModelParams::kse(5.01)).unwrap();
        assert_eq!(tr.samples.len(), 11);
        assert!(tr.samples.iter().all(|x| x.l2_norm() == 0.0));
        assert_eq!(tr.last().unwrap().t, 0.01);
    }

    #[test]
    fn rejects_unstable_dt() {
        let s = GalerkinState::zeros(3, 2, 2.0 * PI);
        assert!(integrate_galerkin(&s, 1.0, 0.1, 1, &ModelParams::kse(5.01)).is_err());
    }

    #[test]
    fn growth_fit_cases() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, 2.0)).collect();
        assert_eq!(h1_growth_check(&flat).unwrap().fitted_c, 0.0);
        let decay: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, (-(i as f64)).exp())).collect();
        let r = h1_growth_check(&decay).unwrap();
        assert_eq!(r.fitted_c, 0.0);
        assert!(r.existence_time.is_infinite());
        let grow: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, (0.4 * i as f64).exp())).collect();
        let r = h1_growth_check(&grow).unwrap();
        assert!(r.fitted_c > 0.0 && r.fitted_c.is_finite());
        // the fitted bound dominates every sample
        let base = 1.0 + r.h1_initial;
        for &(t, h) in &grow {
            let denom = 1.0 - 4.0 * r.fitted_c * t * base.powi(4);
            if denom <= 0.0 {
                // past the existence time the bound is vacuous
                continue;
            }
            let bound = base / denom.powf(0.25) - 1.0;
            assert!(h <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = GalerkinState::zeros(1, 2, 2.0 * PI);
        let tr = Trajectory { samples: vec![s] };
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 1 + 2 * 2 * 5);
        assert_eq!(lines[1].split(',').count(), 1 + 2 * 2 * 5);
    }
}
