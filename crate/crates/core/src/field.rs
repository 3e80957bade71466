//! Fourier-coefficient fields on a [`Grid`] and the spectral calculus on them.
//!
//! Coefficients are the amplitudes `f̂(k)` of `f(x) = Σ f̂(k) e^{ik·x}`, so
//! every norm below is a literal sum over the coefficient table.

use num_complex::Complex64;

use crate::error::{KseError, Result};
use crate::grid::Grid;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coefficientwise spectral operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralOp {
    /// `∂/∂x₁`, symbol `i k₁`.
    D1,
    /// `∂/∂x₂`, symbol `i k₂`.
    D2,
    /// `Δ`, symbol `-|k|²`.
    Laplacian,
    /// `Δ²`, symbol `|k|⁴`.
    Bilaplacian,
    /// `Λˢ = (-Δ)^{s/2}`, symbol `|k|ˢ`, with the zero mode mapped to zero.
    Lambda(f64),
}

impl SpectralOp {
    pub fn symbol(self, k1: f64, k2: f64) -> Complex64 {
        let ksq = k1 * k1 + k2 * k2;
        match self {
            SpectralOp::D1 => Complex64::new(0.0, k1),
            SpectralOp::D2 => Complex64::new(0.0, k2),
            SpectralOp::Laplacian => Complex64::new(-ksq, 0.0),
            SpectralOp::Bilaplacian => Complex64::new(ksq * ksq, 0.0),
            SpectralOp::Lambda(s) => {
                if ksq == 0.0 {
                    ZERO
                } else {
                    Complex64::new(ksq.sqrt().powf(s), 0.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `(Σ (1 + |k|ˢ)² |f̂|²)^{1/2}`.
    Inhomogeneous,
    /// `(Σ |k|^{2s} |f̂|²)^{1/2}`.
    Homogeneous,
    /// `(Σ |f̂|²)^{1/2}`; the order is ignored.
    L2,
}

#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_discretization(&other.grid)
            && self.real == other.real
            && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(grid: &Grid, real: bool) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![ZERO; grid.len()],
            real,
        }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(KseError::Shape {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
            real,
        })
    }

    /// Forward transform of real samples (row-major, `x₁` slow).
    pub fn from_physical(grid: &Grid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(KseError::Shape {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs: grid.fft.forward_real(samples),
            real: true,
        })
    }

    /// Forward transform of complex samples; the result is not flagged real.
    pub fn from_complex_physical(grid: &Grid, samples: &[Complex64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(KseError::Shape {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        let mut coeffs = samples.to_vec();
        grid.fft.forward(&mut coeffs);
        Ok(Self {
            grid: grid.clone(),
            coeffs,
            real: false,
        })
    }

    /// Samples `f(x)` on the grid by evaluating a closure at each point.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let samples: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.point(i);
                f(x, y)
            })
            .collect();
        Self::from_physical(grid, &samples).expect("sample count matches grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.grid
            .index_of(k1, k2)
            .map(|i| self.coeffs[i])
            .unwrap_or(ZERO)
    }

    /// Sets `f̂(k)`; for real fields `f̂(-k)` is set to the conjugate as well.
    pub fn set_coeff(&mut self, k1: i64, k2: i64, value: Complex64) -> Result<()> {
        let idx = self.grid.index_of(k1, k2).ok_or_else(|| {
            KseError::config(format!("wavevector ({k1}, {k2}) is not on the grid"))
        })?;
        self.coeffs[idx] = value;
        if self.real {
            let c = self.grid.conjugate_index(idx);
            if c == idx {
                self.coeffs[idx] = Complex64::new(value.re, 0.0);
            } else {
                self.coeffs[c] = value.conj();
            }
        }
        Ok(())
    }

    /// Inverse transform; the real part of the samples.
    pub fn to_physical(&self) -> Vec<f64> {
        self.to_physical_complex().into_iter().map(|z| z.re).collect()
    }

    pub fn to_physical_complex(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        self.grid.fft.inverse(&mut buf);
        buf
    }

    /// Largest `|f̂(-k) - conj f̂(k)|` relative to the largest coefficient.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..self.coeffs.len())
            .map(|i| {
                let c = self.grid.conjugate_index(i);
                (self.coeffs[c] - self.coeffs[i].conj()).norm()
            })
            .fold(0.0, f64::max);
        worst / scale
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Zeroes every mode removed by the grid's truncation rule.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        for (c, &keep) in self.coeffs.iter_mut().zip(self.grid.mask()) {
            if !keep {
                *c = ZERO;
            }
        }
    }

    /// Applies `op` coefficientwise. Nyquist modes are zeroed first.
    pub fn apply(&self, op: SpectralOp) -> Self {
        let g = &self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if g.is_nyquist(i) {
                    ZERO
                } else {
                    c * op.symbol(g.k1()[i], g.k2()[i])
                }
            })
            .collect();
        Self {
            grid: g.clone(),
            coeffs,
            real: self.real,
        }
    }

    pub fn sobolev_norm(&self, s: f64, kind: NormKind) -> f64 {
        let ksq = self.grid.ksq();
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(ksq)
            .map(|(c, &k2)| {
                let w = match kind {
                    NormKind::L2 => 1.0,
                    NormKind::Homogeneous => {
                        if k2 == 0.0 {
                            if s == 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            k2.powf(s)
                        }
                    }
                    NormKind::Inhomogeneous => {
                        let ks = if k2 == 0.0 && s > 0.0 { 0.0 } else { k2.sqrt().powf(s) };
                        (1.0 + ks) * (1.0 + ks)
                    }
                };
                w * c.norm_sqr()
            })
            .sum();
        sum.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0, NormKind::L2)
    }

    /// `(∫ |f|² dx)^{1/2}` over the whole period cell.
    pub fn l2_integral_norm(&self) -> f64 {
        self.grid.area().sqrt() * self.l2_norm()
    }

    /// Maximum of `|f|` over the physical sample grid.
    pub fn linf_norm(&self) -> f64 {
        if self.real {
            self.to_physical().iter().map(|v| v.abs()).fold(0.0, f64::max)
        } else {
            self.to_physical_complex()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            real: self.real,
        }
    }

    /// `self - other`; both fields must share a discretization.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
            real: self.real && other.real,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            real: self.real && other.real,
        })
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.grid.same_discretization(&other.grid) {
            return Err(KseError::config("fields live on different grids"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VectorField {
    pub fn new(u1: SpectralField, u2: SpectralField) -> Result<Self> {
        u1.check_compatible(&u2)?;
        Ok(Self { u1, u2 })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            u1: SpectralField::zeros(grid, true),
            u2: SpectralField::zeros(grid, true),
        }
    }

    /// `∇φ` computed spectrally.
    pub fn gradient(phi: &SpectralField) -> Self {
        Self {
            u1: phi.apply(SpectralOp::D1),
            u2: phi.apply(SpectralOp::D2),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    /// `(Σ_c ‖u_c‖²)^{1/2}` in the chosen norm.
    pub fn sobolev_norm(&self, s: f64, kind: NormKind) -> f64 {
        let a = self.u1.sobolev_norm(s, kind);
        let b = self.u2.sobolev_norm(s, kind);
        (a * a + b * b).sqrt()
    }

    pub fn l2_integral_norm(&self) -> f64 {
        self.grid().area().sqrt() * self.sobolev_norm(0.0, NormKind::L2)
    }

    pub fn dealias(&self) -> Self {
        Self {
            u1: self.u1.dealias(),
            u2: self.u2.dealias(),
        }
    }

    /// Largest pointwise speed component, `max(‖u₁‖_∞, ‖u₂‖_∞)`.
    pub fn max_component_speed(&self) -> f64 {
        let (a, b) = self
            .grid()
            .fft
            .inverse_real_pair(self.u1.coeffs(), self.u2.coeffs());
        a.iter()
            .chain(&b)
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            u1: self.u1.sub(&other.u1)?,
            u2: self.u2.sub(&other.u2)?,
        })
    }
}
