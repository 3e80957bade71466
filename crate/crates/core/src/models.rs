//! Right-hand sides of the vector KSE, the scalar (integrated) KSE and the
//! reduced r-KSE, split into a diagonal linear symbol and a dealiased
//! pseudo-spectral nonlinear part. Everything returned is `du/dt`, so the
//! nonlinearity enters with a minus sign.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{KseError, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `∂ₜu + (u·∇)u = -λΔu - Δ²u` for `u = (u₁, u₂)`.
    KseVector,
    /// `∂ₜφ + ½|∇φ|² = -λΔφ - Δ²φ`.
    KseScalar,
    /// Reduced system: `u₁` diffuses with `νΔ`, `u₂` keeps the KSE linear part.
    Rkse,
}

impl ModelKind {
    pub fn components(self) -> usize {
        match self {
            ModelKind::KseScalar => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::KseVector => "kse",
            ModelKind::KseScalar => "kse_scalar",
            ModelKind::Rkse => "rkse",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = KseError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kse" | "kse_vector" => Ok(ModelKind::KseVector),
            "kse_scalar" | "scalar" => Ok(ModelKind::KseScalar),
            "rkse" | "r-kse" => Ok(ModelKind::Rkse),
            other => Err(KseError::config(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nonlinearity {
    /// `(u·∇)u`.
    #[default]
    Advective,
    /// `½∇|u|²`.
    GradSq,
}

impl Nonlinearity {
    pub fn name(self) -> &'static str {
        match self {
            Nonlinearity::Advective => "advective",
            Nonlinearity::GradSq => "grad_sq",
        }
    }
}

impl FromStr for Nonlinearity {
    type Err = KseError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "advective" => Ok(Nonlinearity::Advective),
            "grad_sq" | "gradsq" => Ok(Nonlinearity::GradSq),
            other => Err(KseError::config(format!("unknown nonlinearity '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub lambda: f64,
    /// Diffusivity of `u₁` in the r-KSE; unused otherwise.
    pub nu: f64,
    pub nonlinearity: Nonlinearity,
}

impl ModelParams {
    pub fn kse(lambda: f64) -> Self {
        Self {
            kind: ModelKind::KseVector,
            lambda,
            nu: 0.0,
            nonlinearity: Nonlinearity::Advective,
        }
    }

    pub fn kse_scalar(lambda: f64) -> Self {
        Self {
            kind: ModelKind::KseScalar,
            ..Self::kse(lambda)
        }
    }

    pub fn rkse(lambda: f64, nu: f64) -> Self {
        Self {
            kind: ModelKind::Rkse,
            nu,
            ..Self::kse(lambda)
        }
    }

    pub fn with_nonlinearity(mut self, nonlinearity: Nonlinearity) -> Self {
        self.nonlinearity = nonlinearity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(KseError::config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.kind == ModelKind::Rkse && !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(KseError::config(format!("nu must be positive, got {}", self.nu)));
        }
        if self.kind == ModelKind::KseScalar && self.nonlinearity == Nonlinearity::GradSq {
            return Err(KseError::config(
                "grad_sq nonlinearity applies to vector models only",
            ));
        }
        Ok(())
    }
}

/// Per-component diagonal linear operator `σ_c(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSymbol {
    pub tables: Vec<Vec<f64>>,
}

impl LinearSymbol {
    pub fn component(&self, c: usize) -> &[f64] {
        &self.tables[c]
    }

    pub fn components(&self) -> usize {
        self.tables.len()
    }

    /// Largest value over all components and modes.
    pub fn max(&self) -> f64 {
        self.tables
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.tables
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn kse_symbol(lambda: f64, ksq: f64) -> f64 {
    lambda * ksq - ksq * ksq
}

pub fn linear_symbol(params: &ModelParams, grid: &Grid) -> LinearSymbol {
    let ksq = grid.ksq();
    let kse: Vec<f64> = ksq.iter().map(|&k| kse_symbol(params.lambda, k)).collect();
    let tables = match params.kind {
        ModelKind::KseScalar => vec![kse],
        ModelKind::KseVector => vec![kse.clone(), kse],
        ModelKind::Rkse => vec![ksq.iter().map(|&k| -params.nu * k).collect(), kse],
    };
    LinearSymbol { tables }
}

/// State of one of the three models.
#[derive(Debug, Clone, PartialEq)]
pub enum Fields {
    Vector(VectorField),
    Scalar(SpectralField),
}

impl Fields {
    pub fn grid(&self) -> &Grid {
        match self {
            Fields::Vector(v) => v.grid(),
            Fields::Scalar(s) => s.grid(),
        }
    }

    pub fn components(&self) -> Vec<&SpectralField> {
        match self {
            Fields::Vector(v) => vec![&v.u1, &v.u2],
            Fields::Scalar(s) => vec![s],
        }
    }

    pub fn components_mut(&mut self) -> Vec<&mut SpectralField> {
        match self {
            Fields::Vector(v) => vec![&mut v.u1, &mut v.u2],
            Fields::Scalar(s) => vec![s],
        }
    }

    pub fn coefficient_tables(&self) -> Vec<Vec<Complex64>> {
        self.components().iter().map(|c| c.coeffs().to_vec()).collect()
    }

    /// Rebuilds a state of the same shape from raw coefficient tables.
    pub fn with_tables(&self, tables: Vec<Vec<Complex64>>) -> Result<Fields> {
        let grid = self.grid().clone();
        let mut it = tables.into_iter();
        let mut next = |real: bool| -> Result<SpectralField> {
            let t = it
                .next()
                .ok_or_else(|| KseError::config("missing component table"))?;
            SpectralField::from_coeffs(&grid, t, real)
        };
        Ok(match self {
            Fields::Vector(v) => Fields::Vector(VectorField {
                u1: next(v.u1.is_real())?,
                u2: next(v.u2.is_real())?,
            }),
            Fields::Scalar(s) => Fields::Scalar(next(s.is_real())?),
        })
    }

    /// The velocity-like field: `u` itself, or `∇φ` for the scalar model.
    pub fn velocity(&self) -> VectorField {
        match self {
            Fields::Vector(v) => v.clone(),
            Fields::Scalar(s) => VectorField::gradient(s),
        }
    }

    pub fn dealias(&self) -> Fields {
        match self {
            Fields::Vector(v) => Fields::Vector(v.dealias()),
            Fields::Scalar(s) => Fields::Scalar(s.dealias()),
        }
    }
}

/// A model bound to a grid with its linear symbol precomputed.
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    grid: Grid,
    symbol: LinearSymbol,
}

impl Model {
    pub fn new(params: ModelParams, grid: &Grid) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            grid: grid.clone(),
            symbol: linear_symbol(&params, grid),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn symbol(&self) -> &LinearSymbol {
        &self.symbol
    }
}

fn check_shape(u: &Fields, params: &ModelParams) -> Result<()> {
    let want = params.kind.components();
    let got = u.components().len();
    if want != got {
        return Err(KseError::Shape {
            expected: want,
            got,
        });
    }
    Ok(())
}

/// Dealiased nonlinear contribution to `du/dt`.
pub fn nonlinear_rhs(u: &Fields, params: &ModelParams) -> Result<Fields> {
    check_shape(u, params)?;
    let out = nonlinear_tables(u.grid(), params, &u.coefficient_tables());
    u.with_tables(out)
}

/// Linear symbol applied coefficientwise plus the nonlinear part.
pub fn full_rhs(u: &Fields, params: &ModelParams) -> Result<Fields> {
    check_shape(u, params)?;
    let grid = u.grid();
    let symbol = linear_symbol(params, grid);
    let tables = u.coefficient_tables();
    let mut out = nonlinear_tables(grid, params, &tables);
    for (c, comp) in out.iter_mut().enumerate() {
        for ((o, v), s) in comp.iter_mut().zip(&tables[c]).zip(symbol.component(c)) {
            *o += v * s;
        }
    }
    u.with_tables(out)
}

fn masked_derivative(grid: &Grid, v: &[Complex64], k: &[f64]) -> Vec<Complex64> {
    v.iter()
        .zip(k)
        .zip(grid.mask())
        .map(|((c, &kj), &keep)| {
            if keep {
                Complex64::new(-kj * c.im, kj * c.re)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

fn masked(grid: &Grid, v: &[Complex64]) -> Vec<Complex64> {
    v.iter()
        .zip(grid.mask())
        .map(|(&c, &keep)| if keep { c } else { Complex64::new(0.0, 0.0) })
        .collect()
}

/// Nonlinear part on raw coefficient tables. Inputs are truncated before the
/// products are formed and the result is truncated again.
pub(crate) fn nonlinear_tables(
    grid: &Grid,
    params: &ModelParams,
    tables: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let fft = &grid.fft;
    let (k1, k2) = (grid.k1(), grid.k2());
    match params.kind {
        ModelKind::KseScalar => {
            let p1 = masked_derivative(grid, &tables[0], k1);
            let p2 = masked_derivative(grid, &tables[0], k2);
            let (g1, g2) = fft.inverse_real_pair(&p1, &p2);
            let w: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| -0.5 * (a * a + b * b)).collect();
            vec![masked(grid, &fft.forward_real(&w))]
        }
        ModelKind::KseVector | ModelKind::Rkse => match params.nonlinearity {
            Nonlinearity::Advective => {
                let u1 = masked(grid, &tables[0]);
                let u2 = masked(grid, &tables[1]);
                let (x1, x2) = fft.inverse_real_pair(&u1, &u2);
                let (d11, d21) = fft.inverse_real_pair(
                    &masked_derivative(grid, &u1, k1),
                    &masked_derivative(grid, &u1, k2),
                );
                let (d12, d22) = fft.inverse_real_pair(
                    &masked_derivative(grid, &u2, k1),
                    &masked_derivative(grid, &u2, k2),
                );
                let len = grid.len();
                let mut n1 = vec![0.0; len];
                let mut n2 = vec![0.0; len];
                for i in 0..len {
                    n1[i] = -(x1[i] * d11[i] + x2[i] * d21[i]);
                    n2[i] = -(x1[i] * d12[i] + x2[i] * d22[i]);
                }
                // separate transforms: a component whose product vanishes
                // identically must get an exactly zero tendency
                vec![
                    masked(grid, &fft.forward_real(&n1)),
                    masked(grid, &fft.forward_real(&n2)),
                ]
            }
            Nonlinearity::GradSq => {
                let u1 = masked(grid, &tables[0]);
                let u2 = masked(grid, &tables[1]);
                let (x1, x2) = fft.inverse_real_pair(&u1, &u2);
                let w: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| -0.5 * (a * a + b * b)).collect();
                let what = masked(grid, &fft.forward_real(&w));
                vec![
                    masked_derivative(grid, &what, k1),
                    masked_derivative(grid, &what, k2),
                ]
            }
        },
    }
}
