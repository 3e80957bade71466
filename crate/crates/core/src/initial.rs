//! Initial data.
//!
//! `PaperSines`: `φ = C(sin(x₁+x₂) + sin x₁ + sin x₂)` on the lowest modes of
//! the box, `u = ∇φ`, with `C` fixing `‖u‖_{L²} = 1` as an integral over the
//! domain. `‖∇φ₀‖² = 8π²` for every box length, so `C = 1/(2√2·π)`.
//!
//! `RandomBand`: coefficients on `0 < |k| <= k_max` drawn from SplitMix64
//! (seeded by `seed`); each draw `x` maps to `2·(x >> 11)·2⁻⁵³ - 1`, real part
//! first. Modes are visited with `k1` outer and `k2` inner, both ascending
//! from `-k_max`, skipping the lower half-plane. Vector models draw `u₁` then
//! `u₂`; scalar and co-simulated runs draw `φ` and take `u = ∇φ`. The result
//! is scaled to `‖u‖_{L²} = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::config::{InitialKind, RunConfig};
use crate::error::{KseError, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;
use crate::models::{Fields, ModelKind};
use crate::snapshot;

/// `1/(2√2·π)`.
pub const PAPER_C: f64 = 1.0 / (2.0 * std::f64::consts::SQRT_2 * PI);

/// Initial state plus, when it exists, the potential it is the gradient of.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub fields: Fields,
    pub phi: Option<SpectralField>,
}

/// `sin(x₁+x₂) + sin x₁ + sin x₂` without normalization.
pub fn paper_potential(grid: &Grid) -> Result<SpectralField> {
    let mut phi = SpectralField::zeros(grid, true);
    for (a, b) in [(1, 1), (1, 0), (0, 1)] {
        phi.set_coeff(a, b, Complex64::new(0.0, -0.5))?;
    }
    Ok(phi)
}

/// Uniform draws on `[-1, 1)`.
pub struct UniformStream(SplitMix64);

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn next_signed(&mut self) -> f64 {
        let unit = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * unit - 1.0
    }
}

/// Random real field on `0 < |k| <= k_max`.
pub fn random_band(grid: &Grid, k_max: usize, rng: &mut UniformStream) -> Result<SpectralField> {
    if k_max == 0 || 3 * k_max >= grid.n() {
        return Err(KseError::config(format!(
            "band limit {k_max} must lie in [1, n/3) for n = {}",
            grid.n()
        )));
    }
    let km = k_max as i64;
    let mut f = SpectralField::zeros(grid, true);
    for a in -km..=km {
        for b in -km..=km {
            let upper = a > 0 || (a == 0 && b > 0);
            if !upper || a * a + b * b > km * km {
                continue;
            }
            let re = rng.next_signed();
            let im = rng.next_signed();
            f.set_coeff(a, b, Complex64::new(re, im))?;
        }
    }
    Ok(f)
}

fn normalized_gradient(phi: SpectralField) -> Result<(VectorField, SpectralField)> {
    let norm = VectorField::gradient(&phi).l2_integral_norm();
    if !(norm > 0.0) {
        return Err(KseError::config("initial potential has zero gradient"));
    }
    let phi = phi.scaled(1.0 / norm);
    Ok((VectorField::gradient(&phi), phi))
}

/// Builds the initial state described by `cfg` on `grid`.
pub fn initial_data(cfg: &RunConfig, grid: &Grid) -> Result<InitialData> {
    let kind = cfg.params.kind;
    let gradient_data = |phi: SpectralField| -> Result<InitialData> {
        let (u, phi) = normalized_gradient(phi)?;
        Ok(match kind {
            ModelKind::KseScalar => InitialData {
                fields: Fields::Scalar(phi.clone()),
                phi: Some(phi),
            },
            _ => InitialData {
                fields: Fields::Vector(u),
                phi: Some(phi),
            },
        })
    };
    match &cfg.initial {
        InitialKind::PaperSines => {
            let phi = paper_potential(grid)?;
            gradient_data(phi)
        }
        InitialKind::RandomBand { k_max } => {
            let mut rng = UniformStream::new(cfg.seed);
            if kind == ModelKind::KseScalar || cfg.cosim {
                gradient_data(random_band(grid, *k_max, &mut rng)?)
            } else {
                let u1 = random_band(grid, *k_max, &mut rng)?;
                let u2 = random_band(grid, *k_max, &mut rng)?;
                let u = VectorField::new(u1, u2)?;
                let norm = u.l2_integral_norm();
                let u = VectorField::new(u.u1.scaled(1.0 / norm), u.u2.scaled(1.0 / norm))?;
                Ok(InitialData {
                    fields: Fields::Vector(u),
                    phi: None,
                })
            }
        }
        InitialKind::File(paths) => {
            let mut comps = paths
                .iter()
                .map(|p| snapshot::read(p)?.into_field_on(grid))
                .collect::<Result<Vec<_>>>()?;
            let fields = match kind {
                ModelKind::KseScalar => Fields::Scalar(comps.remove(0)),
                _ => {
                    let u2 = comps.pop().expect("two components");
                    let u1 = comps.pop().expect("two components");
                    Fields::Vector(VectorField::new(u1, u2)?)
                }
            };
            Ok(InitialData { fields, phi: None })
        }
    }
}
