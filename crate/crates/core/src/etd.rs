//! Fourth-order exponential time differencing (ETD-RK4) with the stiff
//! diagonal part integrated exactly and an advective-CFL step controller.
//!
//! The stage structure is the Cox–Matthews scheme in the Kassam–Trefethen
//! form: two half-step exponential predictors `a`, `b`, a full-step corrector
//! `c`, and a weighted combination with φ-function weights.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{KseError, Result};
use crate::field::VectorField;
use crate::grid::Grid;
use crate::models::{nonlinear_tables, Fields, LinearSymbol, Model};
use crate::phi::{phi_contour, Contour};

/// A semilinear system `du/dt = σ·u + N(u)` with diagonal `σ`.
pub trait SplitSystem {
    fn grid(&self) -> &Grid;
    fn symbol(&self) -> &LinearSymbol;
    /// `N(u)` on raw coefficient tables, one per component.
    fn nonlinear(&self, tables: &[Vec<Complex64>]) -> Vec<Vec<Complex64>>;
}

impl SplitSystem for Model {
    fn grid(&self) -> &Grid {
        Model::grid(self)
    }

    fn symbol(&self) -> &LinearSymbol {
        Model::symbol(self)
    }

    fn nonlinear(&self, tables: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        nonlinear_tables(Model::grid(self), self.params(), tables)
    }
}

/// Per-mode, per-component ETD-RK4 weights for one step size.
#[derive(Debug, Clone)]
pub struct EtdCoefficients {
    pub dt: f64,
    pub contour: Contour,
    /// `e^{σΔt}`
    pub e: Vec<Vec<f64>>,
    /// `e^{σΔt/2}`
    pub e_half: Vec<Vec<f64>>,
    /// `(Δt/2)·φ₁(σΔt/2)`, the half-step stage weight.
    pub q: Vec<Vec<f64>>,
    /// `Δt·(φ₁ - 3φ₂ + 4φ₃)`
    pub f1: Vec<Vec<f64>>,
    /// `Δt·(φ₂ - 2φ₃)`
    pub f2: Vec<Vec<f64>>,
    /// `Δt·(4φ₃ - φ₂)`
    pub f3: Vec<Vec<f64>>,
    /// Largest relative imaginary part dropped from a contour mean.
    pub imag_residue: f64,
}

#[derive(Debug, Clone, Copy)]
struct ModeWeights {
    e: f64,
    e_half: f64,
    q: f64,
    f1: f64,
    f2: f64,
    f3: f64,
    residue: f64,
}

fn mode_weights(sigma: f64, dt: f64, contour: &Contour, offsets: &[Complex64]) -> ModeWeights {
    let z = sigma * dt;
    let (full, r1) = phi_contour(z, contour, offsets);
    let (half, r2) = phi_contour(z / 2.0, contour, offsets);
    let [_, p1, p2, p3] = full;
    ModeWeights {
        e: z.exp(),
        e_half: (z / 2.0).exp(),
        q: 0.5 * dt * half[1],
        f1: dt * (p1 - 3.0 * p2 + 4.0 * p3),
        f2: dt * (p2 - 2.0 * p3),
        f3: dt * (4.0 * p3 - p2),
        residue: r1.max(r2),
    }
}

/// Builds the weight tables. Modes sharing a symbol value share one contour
/// evaluation.
pub fn etd_coefficients(symbol: &LinearSymbol, dt: f64, contour: Contour) -> Result<EtdCoefficients> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(KseError::config(format!("time step must be positive, got {dt}")));
    }
    let offsets = contour.offsets();
    let mut memo: BTreeMap<u64, ModeWeights> = BTreeMap::new();
    let comps = symbol.components();
    let mut out = EtdCoefficients {
        dt,
        contour,
        e: Vec::with_capacity(comps),
        e_half: Vec::with_capacity(comps),
        q: Vec::with_capacity(comps),
        f1: Vec::with_capacity(comps),
        f2: Vec::with_capacity(comps),
        f3: Vec::with_capacity(comps),
        imag_residue: 0.0,
    };
    for table in &symbol.tables {
        let len = table.len();
        let (mut e, mut eh, mut q) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
        let (mut f1, mut f2, mut f3) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
        for &sigma in table {
            let w = *memo
                .entry(sigma.to_bits())
                .or_insert_with(|| mode_weights(sigma, dt, &contour, &offsets));
            e.push(w.e);
            eh.push(w.e_half);
            q.push(w.q);
            f1.push(w.f1);
            f2.push(w.f2);
            f3.push(w.f3);
            out.imag_residue = out.imag_residue.max(w.residue);
        }
        out.e.push(e);
        out.e_half.push(eh);
        out.q.push(q);
        out.f1.push(f1);
        out.f2.push(f2);
        out.f3.push(f3);
    }
    let finite = [&out.e, &out.e_half, &out.q, &out.f1, &out.f2, &out.f3]
        .iter()
        .all(|t| t.iter().flatten().all(|v| v.is_finite()));
    if !finite {
        return Err(KseError::BlowUp {
            t: f64::NAN,
            norm: f64::INFINITY,
        });
    }
    Ok(out)
}

/// Step-size policy: advective CFL with a cap, and a tolerance band inside
/// which the cached coefficients are reused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepController {
    pub cfl: f64,
    pub dt_max: f64,
    /// Coefficients are rebuilt when `|dt_new/dt_old - 1|` exceeds this.
    pub rebuild_threshold: f64,
    pub contour: Contour,
    /// Lower bound on the speed used in the CFL quotient.
    pub speed_floor: f64,
    /// `‖u‖_∞` above this is reported as blow-up.
    pub blowup_threshold: f64,
}

impl Default for StepController {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            dt_max: 1e-3,
            rebuild_threshold: 0.02,
            contour: Contour::default(),
            speed_floor: 1e-12,
            blowup_threshold: 1e8,
        }
    }
}

impl StepController {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(KseError::config(format!("cfl must be positive, got {}", self.cfl)));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(KseError::config(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        Contour::new(self.contour.points, self.contour.radius)?;
        Ok(())
    }

    /// `cfl·Δx / max(speed, floor)`, capped at `dt_max`.
    pub fn dt_for_speed(&self, grid: &Grid, max_speed: f64) -> f64 {
        (self.cfl * grid.dx() / max_speed.max(self.speed_floor)).min(self.dt_max)
    }
}

/// Advective CFL step for `u`, capped at `dt_max`.
pub fn cfl_dt(u: &VectorField, cfl: f64, dt_max: f64) -> f64 {
    let ctl = StepController {
        cfl,
        dt_max,
        ..StepController::default()
    };
    ctl.dt_for_speed(u.grid(), u.max_component_speed())
}

#[derive(Debug, Clone, Default)]
struct CoefficientCache {
    main: Option<Arc<EtdCoefficients>>,
    /// Last off-size step (final partial steps, fixed-step drivers).
    other: Option<Arc<EtdCoefficients>>,
}

impl CoefficientCache {
    fn lookup(&self, dt: f64) -> Option<Arc<EtdCoefficients>> {
        [&self.main, &self.other]
            .into_iter()
            .flatten()
            .find(|c| c.dt == dt)
            .cloned()
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub fields: Fields,
    pub step_count: u64,
    cache: CoefficientCache,
}

impl SimState {
    /// Starts at `t` with the fields truncated by the grid's rule.
    pub fn new(fields: Fields, t: f64) -> Self {
        Self {
            t,
            fields: fields.dealias(),
            step_count: 0,
            cache: CoefficientCache::default(),
        }
    }

    /// Step size of the coefficients the controller is currently reusing.
    pub fn cached_dt(&self) -> Option<f64> {
        self.cache.main.as_ref().map(|c| c.dt)
    }

    fn coefficients(
        &mut self,
        sys: &dyn SplitSystem,
        dt: f64,
        contour: Contour,
        as_main: bool,
    ) -> Result<(Arc<EtdCoefficients>, bool)> {
        if let Some(c) = self.cache.lookup(dt) {
            if c.contour == contour {
                return Ok((c, false));
            }
        }
        let c = Arc::new(etd_coefficients(sys.symbol(), dt, contour)?);
        if as_main {
            self.cache.main = Some(c.clone());
        } else {
            self.cache.other = Some(c.clone());
        }
        Ok((c, true))
    }
}

fn combine(
    out: &mut [Complex64],
    a: &[f64],
    x: &[Complex64],
    b: &[f64],
    y: &[Complex64],
) {
    for i in 0..out.len() {
        out[i] = x[i] * a[i] + y[i] * b[i];
    }
}

/// One ETD-RK4 step of size `coef.dt` on raw tables.
pub fn etd_rk4_tables(
    sys: &dyn SplitSystem,
    coef: &EtdCoefficients,
    v: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let comps = v.len();
    let len = v[0].len();
    let zero = Complex64::new(0.0, 0.0);

    let nv = sys.nonlinear(v);
    let mut a = vec![vec![zero; len]; comps];
    for c in 0..comps {
        combine(&mut a[c], &coef.e_half[c], &v[c], &coef.q[c], &nv[c]);
    }
    let na = sys.nonlinear(&a);
    let mut b = vec![vec![zero; len]; comps];
    for c in 0..comps {
        combine(&mut b[c], &coef.e_half[c], &v[c], &coef.q[c], &na[c]);
    }
    let nb = sys.nonlinear(&b);
    let mut cc = vec![vec![zero; len]; comps];
    for c in 0..comps {
        let (eh, q) = (&coef.e_half[c], &coef.q[c]);
        for i in 0..len {
            cc[c][i] = a[c][i] * eh[i] + (nb[c][i] * 2.0 - nv[c][i]) * q[i];
        }
    }
    let nc = sys.nonlinear(&cc);

    let mask = sys.grid().mask();
    let mut out = vec![vec![zero; len]; comps];
    for c in 0..comps {
        let (e, f1, f2, f3) = (&coef.e[c], &coef.f1[c], &coef.f2[c], &coef.f3[c]);
        for i in 0..len {
            if mask[i] {
                out[c][i] = v[c][i] * e[i]
                    + nv[c][i] * f1[i]
                    + (na[c][i] + nb[c][i]) * (2.0 * f2[i])
                    + nc[c][i] * f3[i];
            }
        }
    }
    out
}

fn largest_coefficient(tables: &[Vec<Complex64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for z in tables.iter().flatten() {
        let m = z.norm();
        if !m.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(m);
    }
    worst
}

fn step_with(state: &mut SimState, sys: &dyn SplitSystem, coef: &EtdCoefficients) -> Result<()> {
    let v = state.fields.coefficient_tables();
    let next = etd_rk4_tables(sys, coef, &v);
    let worst = largest_coefficient(&next);
    if !worst.is_finite() {
        return Err(KseError::BlowUp {
            t: state.t + coef.dt,
            norm: worst,
        });
    }
    state.fields = state.fields.with_tables(next)?;
    state.t += coef.dt;
    state.step_count += 1;
    Ok(())
}

/// Advances `state` by one step of size `dt`. Returns whether coefficients
/// had to be built. The state is left untouched on error.
pub fn step(state: &mut SimState, dt: f64, sys: &dyn SplitSystem, contour: Contour) -> Result<bool> {
    let (coef, built) = state.coefficients(sys, dt, contour, false)?;
    step_with(state, sys, &coef)?;
    Ok(built)
}

/// `steps` fixed steps of size `dt`.
pub fn integrate_fixed(
    state: &mut SimState,
    dt: f64,
    steps: usize,
    sys: &dyn SplitSystem,
    contour: Contour,
) -> Result<()> {
    for _ in 0..steps {
        step(state, dt, sys, contour)?;
    }
    Ok(())
}

/// One row of the step log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub max_speed: f64,
    pub coeff_rebuilt: bool,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str = "step,t,dt,max_speed,coeff_rebuilt";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{}",
            self.step, self.t, self.dt, self.max_speed, self.coeff_rebuilt as u8
        )
    }
}

/// Advances to exactly `t_target` under `controller`.
pub fn advance_to(
    state: &mut SimState,
    t_target: f64,
    sys: &dyn SplitSystem,
    controller: &StepController,
) -> Result<Vec<StepRecord>> {
    advance_coupled(&mut [state], t_target, &[sys], controller)
}

/// Advances several states with one shared step sequence, chosen from the
/// first state's velocity. Every state lands exactly on `t_target`.
pub fn advance_coupled(
    states: &mut [&mut SimState],
    t_target: f64,
    systems: &[&dyn SplitSystem],
    controller: &StepController,
) -> Result<Vec<StepRecord>> {
    if states.is_empty() || states.len() != systems.len() {
        return Err(KseError::config("need one system per state"));
    }
    let t0 = states[0].t;
    if states.iter().any(|s| s.t != t0) {
        return Err(KseError::config("coupled states must share their current time"));
    }
    // tolerance for landing on the target
    let eps = 1e-12 * t_target.abs().max(1.0);
    if t_target < t0 - eps {
        return Err(KseError::config(format!(
            "target time {t_target} lies before current time {t0}"
        )));
    }

    let mut log = Vec::new();
    loop {
        let t = states[0].t;
        let remaining = t_target - t;
        if remaining <= eps {
            for s in states.iter_mut() {
                s.t = t_target;
            }
            return Ok(log);
        }

        let mut speed: f64 = 0.0;
        for (i, s) in states.iter().enumerate() {
            let v = s.fields.velocity().max_component_speed();
            if !v.is_finite() || v > controller.blowup_threshold {
                return Err(KseError::BlowUp { t, norm: v });
            }
            if i == 0 {
                speed = v;
            }
        }
        let grid = systems[0].grid();
        let proposed = controller.dt_for_speed(grid, speed);

        let mut dt = match states[0].cached_dt() {
            Some(old) if (proposed / old - 1.0).abs() <= controller.rebuild_threshold => old,
            _ => proposed,
        };
        let mut as_main = true;
        let mut lands = false;
        if remaining <= dt * (1.0 + 1e-9) {
            lands = true;
            if (remaining - dt).abs() > 1e-9 * dt {
                dt = remaining;
                as_main = false;
            }
        }

        let mut rebuilt = false;
        let mut coefs = Vec::with_capacity(states.len());
        for (s, sys) in states.iter_mut().zip(systems) {
            let (c, built) = s.coefficients(*sys, dt, controller.contour, as_main)?;
            rebuilt |= built;
            coefs.push(c);
        }
        for ((s, sys), c) in states.iter_mut().zip(systems).zip(&coefs) {
            step_with(s, *sys, c)?;
        }
        if lands {
            for s in states.iter_mut() {
                s.t = t_target;
            }
        }
        log.push(StepRecord {
            step: states[0].step_count,
            t: states[0].t,
            dt,
            max_speed: speed,
            coeff_rebuilt: rebuilt,
        });
        if lands {
            return Ok(log);
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::SpectralField;
    use crate::grid::build_grid;
    use crate::models::ModelParams;

    #[test]
    fn zero_symbol_weights() {
        let sym = LinearSymbol {
            tables: vec![vec![0.0]],
        };
        let c = etd_coefficients(&sym, 0.1, Contour::default()).unwrap();
        assert_eq!(c.e[0][0], 1.0);
        assert_eq!(c.e_half[0][0], 1.0);
        assert!((c.q[0][0] - 0.05).abs() < 1e-15);
        // f1 = f3 = Δt/6, f2 = Δt/6 at σ = 0 (classical RK4 weights)
        for f in [&c.f1, &c.f2, &c.f3] {
            assert!((f[0][0] - 0.1 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cfl_formula() {
        let g = build_grid(512, 2.0 * PI).unwrap();
        let u = VectorField {
            u1: SpectralField::from_fn(&g, |x, _| x.sin()),
            u2: SpectralField::zeros(&g, true),
        };
        let dt = cfl_dt(&u, 0.5, 1.0);
        assert!((dt - 0.5 * 2.0 * PI / 512.0).abs() < 1e-15);
        assert!((dt - 6.14e-3).abs() < 1e-5);
        assert_eq!(cfl_dt(&VectorField::zeros(&g), 0.5, 1e-3), 1e-3);
    }

    #[test]
    fn advance_by_zero_is_identity() {
        let g = build_grid(16, 2.0 * PI).unwrap();
        let m = Model::new(ModelParams::kse(5.01), &g).unwrap();
        let u = VectorField {
            u1: SpectralField::from_fn(&g, |x, y| 0.1 * (x + y).cos()),
            u2: SpectralField::from_fn(&g, |x, _| 0.1 * x.cos()),
        };
        let mut s = SimState::new(Fields::Vector(u), 0.0);
        let before = s.fields.clone();
        let log = advance_to(&mut s, 0.0, &m, &StepController::default()).unwrap();
        assert!(log.is_empty());
        assert_eq!(s.fields, before);
        assert!(advance_to(&mut s, -1.0, &m, &StepController::default()).is_err());
    }

    #[test]
    fn constant_rkse_state_is_stationary() {
        let g = build_grid(16, 2.0 * PI).unwrap();
        let m = Model::new(ModelParams::rkse(5.01, 0.5), &g).unwrap();
        let u = VectorField {
            u1: SpectralField::from_fn(&g, |_, _| 0.3),
            u2: SpectralField::from_fn(&g, |_, _| -0.2),
        };
        let mut s = SimState::new(Fields::Vector(u.clone()), 0.0);
        advance_to(&mut s, 0.01, &m, &StepController::default()).unwrap();
        assert_eq!(s.t, 0.01);
        let Fields::Vector(v) = &s.fields else { panic!() };
        assert!(v.sub(&u).unwrap().sobolev_norm(0.0, crate::field::NormKind::L2) < 1e-15);
    }

    #[test]
    fn lands_on_target_with_partial_step() {
        let g = build_grid(16, 2.0 * PI).unwrap();
        let m = Model::new(ModelParams::kse(5.01), &g).unwrap();
        let u = VectorField {
            u1: SpectralField::from_fn(&g, |x, _| 0.1 * x.sin()),
            u2: SpectralField::zeros(&g, true),
        };
        let mut s = SimState::new(Fields::Vector(u), 0.0);
        let log = advance_to(&mut s, 0.0025, &m, &StepController::default()).unwrap();
        assert_eq!(s.t, 0.0025);
        assert_eq!(log.len(), 3);
        assert!((log[2].dt - 0.0005).abs() < 1e-15);
        assert!(log[0].coeff_rebuilt && !log[1].coeff_rebuilt && log[2].coeff_rebuilt);
        assert_eq!(s.cached_dt(), Some(1e-3));
    }

    #[test]
    fn nonfinite_state_reports_blow_up() {
        let g = build_grid(8, 2.0 * PI).unwrap();
        let m = Model::new(ModelParams::kse(5.01), &g).unwrap();
        let mut u = VectorField::zeros(&g);
        u.u1.set_coeff(1, 0, Complex64::new(f64::NAN, 0.0)).unwrap();
        let mut s = SimState::new(Fields::Vector(u), 0.0);
        let err = advance_to(&mut s, 0.01, &m, &StepController::default()).unwrap_err();
        assert!(matches!(err, KseError::BlowUp { .. }));
        assert_eq!(s.t, 0.0);
    }
}
