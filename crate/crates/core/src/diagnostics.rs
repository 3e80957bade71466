//! Sampled diagnostics and the invariant monitors built on them.

use std::fmt::Write as _;

use crate::error::{KseError, Result};
use crate::field::{NormKind, SpectralField, VectorField};
use crate::models::Fields;

/// Machine epsilon of IEEE double precision.
pub const MACHINE_EPS: f64 = 2.2204e-16;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Coefficient-sum L² norm per component (`u₁`, `u₂`; `φ`, 0 for the scalar model).
    pub l2: [f64; 2],
    /// Inhomogeneous H¹ norm of the whole state.
    pub h1: f64,
    /// Grid maximum of `|u₁|` (of `|φ|` for the scalar model).
    pub linf_u1: f64,
    /// `E(κ)` for integer shells `κ = 0, 1, ...`.
    pub spectrum: Vec<f64>,
    /// `∫ (u·∇)u·u dx`.
    pub nonlinear_energy: f64,
    /// `∫ (u·∇)u dx`.
    pub mean_drift: [f64; 2],
    pub cosim_error: Option<f64>,
    /// Largest `|û|` among retained modes within 2 of the dealias cutoff.
    pub spectrum_tail: f64,
    /// Largest `|û|` over all modes.
    pub spectrum_peak: f64,
}

impl DiagnosticsRecord {
    pub fn csv_header(with_cosim: bool) -> String {
        let mut h = String::from(
            "t,l2_u1,l2_u2,h1,linf_u1,nonlinear_energy,drift_x,drift_y,spectrum_tail",
        );
        if with_cosim {
            h.push_str(",cosim_err");
        }
        h
    }

    /// Shortest round-trip float formatting, so identical runs give identical bytes.
    pub fn csv_row(&self) -> String {
        let mut s = format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.l2[0],
            self.l2[1],
            self.h1,
            self.linf_u1,
            self.nonlinear_energy,
            self.mean_drift[0],
            self.mean_drift[1],
            self.spectrum_tail
        );
        if let Some(e) = self.cosim_error {
            let _ = write!(s, ",{e:e}");
        }
        s
    }

    /// Rows `t,kappa,E` for the companion spectrum file.
    pub fn spectrum_rows(&self) -> String {
        let mut out = String::new();
        for (k, e) in self.spectrum.iter().enumerate() {
            let _ = writeln!(out, "{:e},{},{:e}", self.t, k, e);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.l2.iter().all(|v| v.is_finite())
            && self.h1.is_finite()
            && self.linf_u1.is_finite()
            && self.spectrum.iter().all(|v| v.is_finite() && *v >= 0.0)
            && self.nonlinear_energy.is_finite()
            && self.mean_drift.iter().all(|v| v.is_finite())
            && self.spectrum_tail.is_finite()
    }
}

/// Shell-summed energy `E(κ) = Σ_{κ-½ <= |k| < κ+½} Σ_c |û_c(k)|²`.
pub fn shell_spectrum(components: &[&SpectralField]) -> Vec<f64> {
    let Some(first) = components.first() else {
        return Vec::new();
    };
    let grid = first.grid();
    let ksq = grid.ksq();
    let shell = |i: usize| (ksq[i].sqrt() + 0.5).floor() as usize;
    let top = (0..grid.len()).map(shell).max().unwrap_or(0);
    let mut e = vec![0.0; top + 1];
    for comp in components {
        for (i, c) in comp.coeffs().iter().enumerate() {
            e[shell(i)] += c.norm_sqr();
        }
    }
    e
}

/// `(tail, peak)`: largest `|û|` among retained modes whose max-norm
/// wavenumber is within 2 of the dealias cutoff, and over all modes.
pub fn spectrum_tail(components: &[&SpectralField]) -> (f64, f64) {
    let Some(first) = components.first() else {
        return (0.0, 0.0);
    };
    let grid = first.grid();
    let cutoff = grid.dealias_cutoff();
    let mut tail: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for comp in components {
        for (i, c) in comp.coeffs().iter().enumerate() {
            let m = c.norm();
            peak = peak.max(m);
            let (a, b) = grid.wavevector(i);
            let kmax = a.abs().max(b.abs()) as f64;
            if kmax < cutoff && kmax >= cutoff - 2.0 {
                tail = tail.max(m);
            }
        }
    }
    (tail, peak)
}

/// Grid samples of `u₁, u₂, ∂₁u₁, ∂₂u₁, ∂₁u₂, ∂₂u₂`.
fn velocity_samples(u: &VectorField) -> [Vec<f64>; 6] {
    use crate::field::SpectralOp::{D1, D2};
    [
        u.u1.to_physical(),
        u.u2.to_physical(),
        u.u1.apply(D1).to_physical(),
        u.u1.apply(D2).to_physical(),
        u.u2.apply(D1).to_physical(),
        u.u2.apply(D2).to_physical(),
    ]
}

/// Grid quadrature of `∫ (u·∇)u·u dx`.
pub fn nonlinear_energy(u: &VectorField) -> f64 {
    let [x1, x2, d11, d21, d12, d22] = velocity_samples(u);
    let mut sum = 0.0;
    for i in 0..x1.len() {
        let a1 = x1[i] * d11[i] + x2[i] * d21[i];
        let a2 = x1[i] * d12[i] + x2[i] * d22[i];
        sum += a1 * x1[i] + a2 * x2[i];
    }
    sum * u.grid().cell_area()
}

/// Grid quadrature of `∫ (u·∇)u dx`.
pub fn mean_drift(u: &VectorField) -> [f64; 2] {
    let [x1, x2, d11, d21, d12, d22] = velocity_samples(u);
    let (mut s1, mut s2) = (0.0, 0.0);
    for i in 0..x1.len() {
        s1 += x1[i] * d11[i] + x2[i] * d21[i];
        s2 += x1[i] * d12[i] + x2[i] * d22[i];
    }
    let w = u.grid().cell_area();
    [s1 * w, s2 * w]
}

/// Builds the record for the current state.
pub fn sample(t: f64, fields: &Fields) -> DiagnosticsRecord {
    let comps = fields.components();
    let l2 = [
        comps[0].l2_norm(),
        comps.get(1).map(|c| c.l2_norm()).unwrap_or(0.0),
    ];
    let h1 = comps
        .iter()
        .map(|c| c.sobolev_norm(1.0, NormKind::Inhomogeneous).powi(2))
        .sum::<f64>()
        .sqrt();
    let vel = fields.velocity();
    let (tail, peak) = spectrum_tail(&comps);
    DiagnosticsRecord {
        t,
        l2,
        h1,
        linf_u1: comps[0].linf_norm(),
        spectrum: shell_spectrum(&comps),
        nonlinear_energy: nonlinear_energy(&vel),
        mean_drift: mean_drift(&vel),
        cosim_error: None,
        spectrum_tail: tail,
        spectrum_peak: peak,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrincipleReport {
    pub verdict: Verdict,
    /// `max_t ‖u₁(t)‖_∞ - ‖u₁^{in}‖_∞`; negative when the sup norm decayed.
    pub max_excess: f64,
    pub tolerance: f64,
}

/// Default relative tolerance for the sampled maximum principle.
pub const MAX_PRINCIPLE_REL_TOL: f64 = 1e-6;

/// Checks `sup_t ‖u₁(t)‖_∞ <= ‖u₁^{in}‖_∞` up to `rel_tol·‖u₁^{in}‖_∞`.
pub fn max_principle_monitor(linf_u1: &[f64], linf_u1_initial: f64, rel_tol: f64) -> MaxPrincipleReport {
    let tolerance = rel_tol * linf_u1_initial;
    let max_excess = if linf_u1.is_empty() {
        0.0
    } else {
        linf_u1
            .iter()
            .map(|v| v - linf_u1_initial)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    MaxPrincipleReport {
        verdict: Verdict::from_bool(max_excess <= tolerance),
        max_excess,
        tolerance,
    }
}

/// Grid L∞ distance `max(‖u₁ - ∂₁φ‖_∞, ‖u₂ - ∂₂φ‖_∞)`.
pub fn cosim_error(u: &VectorField, phi: &SpectralField) -> Result<f64> {
    if !u.grid().same_discretization(phi.grid()) {
        return Err(KseError::config("co-simulation runs use different grids"));
    }
    let diff = u.sub(&VectorField::gradient(phi))?;
    Ok(diff.u1.linf_norm().max(diff.u2.linf_norm()))
}

/// Per-sample co-simulation error over paired snapshots. The pairs must be
/// taken at identical times.
pub fn cosim_series(pairs: &[(f64, &VectorField, f64, &SpectralField)]) -> Result<Vec<(f64, f64)>> {
    pairs
        .iter()
        .map(|&(tu, u, tp, phi)| {
            if tu != tp {
                return Err(KseError::config(format!(
                    "co-simulation samples at different times {tu} and {tp}"
                )));
            }
            Ok((tu, cosim_error(u, phi)?))
        })
        .collect()
}

/// Relative threshold on the spectrum tail used when none is given.
pub const DEFAULT_RESOLUTION_REL: f64 = MACHINE_EPS;

/// Passes iff `spectrum_tail < rel·spectrum_peak`.
pub fn resolution_check(record: &DiagnosticsRecord, rel: f64) -> Verdict {
    Verdict::from_bool(record.spectrum_tail < rel * record.spectrum_peak)
}
