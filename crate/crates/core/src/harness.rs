//! Run orchestration: initial data, stepping between sample times,
//! diagnostics and snapshot persistence, co-simulation and the Galerkin
//! cross-check.
//!
//! Files written into the output directory:
//!
//! * `diagnostics.csv`: one row per sample.
//! * `spectrum.csv`: `t,kappa,E` per sample.
//! * `step_log.csv`: one row per accepted step.
//! * `snap_t<time>_<component>.ksef`: coefficient snapshots at every
//!   multiple of the snapshot interval and at the final time.
//! * `mag_t<time>.dat`: `x y |u|` on the grid, blank line between rows.
//! * `cosim.dat`: `t err` (co-simulation only).
//! * `manifest.txt`: status, verdicts, version, wall time and the config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::diagnostics::{
    cosim_error, max_principle_monitor, resolution_check, sample, DiagnosticsRecord,
    MaxPrincipleReport, DEFAULT_RESOLUTION_REL, MAX_PRINCIPLE_REL_TOL,
};
use crate::error::{KseError, Result};
use crate::etd::{advance_coupled, integrate_fixed, SimState, SplitSystem, StepRecord};
use crate::field::SpectralField;
use crate::galerkin::{integrate_galerkin, GalerkinState};
use crate::grid::{build_grid, GridSpec, Truncation};
use crate::initial::initial_data;
use crate::models::{Fields, Model, ModelKind, ModelParams};
use crate::snapshot;

/// Everything a finished (or blown-up) run produced in memory.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: Vec<StepRecord>,
    /// Times at which snapshots were written.
    pub snapshot_times: Vec<f64>,
    /// Samples whose spectrum tail failed the resolution check.
    pub under_resolved: Vec<f64>,
    /// Only for r-KSE runs.
    pub max_principle: Option<MaxPrincipleReport>,
    pub final_state: SimState,
    pub wall_time: f64,
}

impl RunSummary {
    pub fn resolution_ok(&self) -> bool {
        self.under_resolved.is_empty()
    }

    pub fn cosim_series(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.cosim_error.map(|e| (r.t, e)))
            .collect()
    }
}

/// `k·interval` for `k = 0, 1, ...` up to `t_final`, plus `t_final` itself.
pub fn sample_times(t_final: f64, interval: f64) -> Vec<f64> {
    let eps = 1e-9 * interval;
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * interval;
        if t > t_final + eps {
            break;
        }
        times.push(t.min(t_final));
        k += 1;
    }
    if t_final - times.last().copied().unwrap_or(0.0) > eps {
        times.push(t_final);
    } else if let Some(last) = times.last_mut() {
        *last = t_final;
    }
    times
}

/// Indices into `times` that receive snapshots: the sample nearest each
/// multiple of `snapshot_interval`, and the last sample.
fn snapshot_indices(times: &[f64], sample_interval: f64, snapshot_interval: f64) -> Vec<usize> {
    let mut idx = Vec::new();
    let t_final = *times.last().expect("at least one sample");
    let mut m = 0u64;
    loop {
        let target = m as f64 * snapshot_interval;
        if target > t_final + 1e-9 * snapshot_interval {
            break;
        }
        let i = ((target / sample_interval).round() as usize).min(times.len() - 1);
        if idx.last() != Some(&i) {
            idx.push(i);
        }
        m += 1;
    }
    if idx.last() != Some(&(times.len() - 1)) {
        idx.push(times.len() - 1);
    }
    idx
}

struct Writer {
    dir: PathBuf,
    diagnostics: String,
    spectrum: String,
    cosim: String,
}

impl Writer {
    fn new(dir: &Path, with_cosim: bool) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| KseError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            diagnostics: DiagnosticsRecord::csv_header(with_cosim) + "\n",
            spectrum: String::from("t,kappa,E\n"),
            cosim: String::from("# t ||u - grad phi||_inf\n"),
        })
    }

    fn put(&self, name: &str, text: &str) -> Result<()> {
        let p = self.dir.join(name);
        fs::write(&p, text).map_err(|e| KseError::io(p, e))
    }

    fn record(&mut self, r: &DiagnosticsRecord) {
        self.diagnostics.push_str(&r.csv_row());
        self.diagnostics.push('\n');
        self.spectrum.push_str(&r.spectrum_rows());
        if let Some(e) = r.cosim_error {
            let _ = writeln!(self.cosim, "{:e} {:e}", r.t, e);
        }
    }

    fn snapshot(&self, tag: &str, fields: &Fields, phi: Option<&SpectralField>) -> Result<()> {
        let names: &[&str] = match fields {
            Fields::Vector(_) => &["u1", "u2"],
            Fields::Scalar(_) => &["phi"],
        };
        for (c, name) in fields.components().into_iter().zip(names) {
            snapshot::write(&self.dir.join(format!("snap_{tag}_{name}.ksef")), c)?;
        }
        if let Some(p) = phi {
            snapshot::write(&self.dir.join(format!("snap_{tag}_cosim_phi.ksef")), p)?;
        }
        self.put(&format!("mag_{tag}.dat"), &magnitude_plot(fields))
    }
}

/// Gnuplot grid of `|u| = √(u₁² + u₂²)` (`|∇φ|` for the scalar model).
pub fn magnitude_plot(fields: &Fields) -> String {
    let v = fields.velocity();
    let grid = v.grid().clone();
    let a = v.u1.to_physical();
    let b = v.u2.to_physical();
    let n = grid.n();
    let mut out = String::from("# x y |u|\n");
    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            let (x, y) = grid.point(idx);
            let _ = writeln!(out, "{:e} {:e} {:e}", x, y, a[idx].hypot(b[idx]));
        }
        out.push('\n');
    }
    out
}

fn time_tag(t: f64) -> String {
    format!("t{t:.4}")
}

fn manifest(cfg: &RunConfig, summary: &RunSummary, status: &str) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "kse {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "status = {status}");
    let _ = writeln!(m, "wall_time_s = {:.3}", summary.wall_time);
    let _ = writeln!(m, "steps = {}", summary.steps.len());
    let _ = writeln!(m, "samples = {}", summary.records.len());
    let _ = writeln!(m, "initial = {}", cfg.describe_initial());
    if summary.resolution_ok() {
        let _ = writeln!(m, "resolution = ok");
    } else {
        let _ = writeln!(
            m,
            "resolution = WARNING spectrum tail above {:e} x peak at {} samples (first t = {:e})",
            DEFAULT_RESOLUTION_REL,
            summary.under_resolved.len(),
            summary.under_resolved[0]
        );
    }
    if let Some(mp) = &summary.max_principle {
        let _ = writeln!(
            m,
            "max_principle = {} (excess {:e}, tolerance {:e})",
            if mp.verdict.passed() { "PASS" } else { "FAIL" },
            mp.max_excess,
            mp.tolerance
        );
    }
    let _ = writeln!(
        m,
        "snapshots = {}",
        summary
            .snapshot_times
            .iter()
            .map(|t| format!("{t:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    m.push_str("\n# config\n");
    m.push_str(&cfg.to_text());
    m
}

/// Runs `cfg` and writes its artifacts. A blow-up still writes everything
/// gathered so far plus the last good state (tagged `blowup`), then returns
/// the blow-up error.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    run_in(cfg, &cfg.resolved_output_dir())
}

/// As [`run`] but into an explicit directory.
pub fn run_in(cfg: &RunConfig, dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let grid = build_grid(cfg.n, cfg.domain_length)?;
    let model = Model::new(cfg.params, &grid)?;
    let init = initial_data(cfg, &grid)?;

    let mut state = SimState::new(init.fields, 0.0);
    let scalar_model;
    let mut partner = if cfg.cosim {
        scalar_model = Some(Model::new(ModelParams::kse_scalar(cfg.params.lambda), &grid)?);
        let phi = init
            .phi
            .ok_or_else(|| KseError::config("co-simulation needs gradient initial data"))?;
        Some(SimState::new(Fields::Scalar(phi), 0.0))
    } else {
        scalar_model = None;
        None
    };

    let mut w = Writer::new(dir, cfg.cosim)?;
    let times = sample_times(cfg.t_final, cfg.sample_interval);
    let snaps = snapshot_indices(&times, cfg.sample_interval, cfg.snapshot_interval);

    let mut summary = RunSummary {
        output_dir: dir.to_path_buf(),
        records: Vec::with_capacity(times.len()),
        steps: Vec::new(),
        snapshot_times: Vec::new(),
        under_resolved: Vec::new(),
        max_principle: None,
        final_state: state.clone(),
        wall_time: 0.0,
    };

    let mut failure = None;
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            let mut states: Vec<&mut SimState> = vec![&mut state];
            let mut systems: Vec<&dyn SplitSystem> = vec![&model];
            if let (Some(p), Some(m)) = (partner.as_mut(), scalar_model.as_ref()) {
                states.push(p);
                systems.push(m);
            }
            match advance_coupled(&mut states, t, &systems, &cfg.controller) {
                Ok(log) => summary.steps.extend(log),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        let mut rec = sample(state.t, &state.fields);
        if let Some(p) = &partner {
            let Fields::Scalar(phi) = &p.fields else {
                unreachable!("partner state is scalar")
            };
            rec.cosim_error = Some(cosim_error(&state.fields.velocity(), phi)?);
        }
        if !rec.is_finite() {
            failure = Some(KseError::BlowUp {
                t: state.t,
                norm: f64::NAN,
            });
            break;
        }
        if !resolution_check(&rec, DEFAULT_RESOLUTION_REL).passed() {
            summary.under_resolved.push(rec.t);
        }
        w.record(&rec);
        summary.records.push(rec);
        if snaps.contains(&k) {
            let phi = partner.as_ref().and_then(|p| match &p.fields {
                Fields::Scalar(s) => Some(s),
                Fields::Vector(_) => None,
            });
            w.snapshot(&time_tag(state.t), &state.fields, phi)?;
            summary.snapshot_times.push(state.t);
        }
    }

    if cfg.params.kind == ModelKind::Rkse {
        let linf: Vec<f64> = summary.records.iter().map(|r| r.linf_u1).collect();
        if let Some(first) = linf.first() {
            summary.max_principle = Some(max_principle_monitor(&linf, *first, MAX_PRINCIPLE_REL_TOL));
        }
    }
    summary.final_state = state.clone();
    summary.wall_time = start.elapsed().as_secs_f64();

    let mut steps_csv = String::from(StepRecord::CSV_HEADER);
    steps_csv.push('\n');
    for s in &summary.steps {
        steps_csv.push_str(&s.csv_row());
        steps_csv.push('\n');
    }
    w.put("diagnostics.csv", &w.diagnostics)?;
    w.put("spectrum.csv", &w.spectrum)?;
    w.put("step_log.csv", &steps_csv)?;
    if cfg.cosim {
        w.put("cosim.dat", &w.cosim)?;
    }

    match failure {
        None => {
            w.put("manifest.txt", &manifest(cfg, &summary, "ok"))?;
            Ok(summary)
        }
        Some(e) => {
            w.snapshot("blowup", &state.fields, None)?;
            w.put("manifest.txt", &manifest(cfg, &summary, &format!("failed: {e}")))?;
            Err(e)
        }
    }
}

/// Runs independent configs on up to `jobs` threads. Results keep input order.
pub fn run_many(configs: &[RunConfig], jobs: usize) -> Result<Vec<Result<RunSummary>>> {
    let mut dirs: Vec<PathBuf> = configs.iter().map(RunConfig::resolved_output_dir).collect();
    dirs.sort();
    if dirs.windows(2).any(|w| w[0] == w[1]) {
        return Err(KseError::config("concurrent runs must use distinct output directories"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| KseError::config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| configs.par_iter().map(run).collect()))
}

/// Pseudo-spectral solution on a grid truncated to the ball `|k| <= n_trunc`
/// against the Galerkin ODE integrated by classical RK4, both from the
/// projected initial data with the same fixed step.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub spectral: GalerkinState,
    pub galerkin: GalerkinState,
    /// `‖u_spectral - u_galerkin‖_{L²}` (coefficient sum) at `t_final`.
    pub l2_gap: f64,
    /// Relative to the Galerkin solution's norm.
    pub relative_gap: f64,
}

pub fn galerkin_cross_check(
    params: ModelParams,
    n_trunc: usize,
    n_grid: usize,
    domain_length: f64,
    t_final: f64,
    dt: f64,
) -> Result<OracleReport> {
    let grid = GridSpec::new(n_grid, domain_length, Truncation::Ball(n_trunc as f64))?;
    let mut cfg = RunConfig::new(params, n_grid, t_final);
    cfg.domain_length = domain_length;
    let init = initial_data(&cfg, &grid)?;
    let fields = init.fields.dealias();
    let g0 = GalerkinState::project(&fields, n_trunc)?;

    let steps = (t_final / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(KseError::config("t_final must be a positive multiple of dt"));
    }
    let model = Model::new(params, &grid)?;
    let mut state = SimState::new(fields, 0.0);
    integrate_fixed(&mut state, dt, steps, &model, cfg.controller.contour)?;
    let mut spectral = GalerkinState::project(&state.fields, n_trunc)?;
    spectral.t = t_final;

    let traj = integrate_galerkin(&g0, t_final, dt, steps, &params)?;
    let galerkin = traj.last().expect("trajectory has samples").clone();
    let l2_gap = spectral.l2_distance(&galerkin)?;
    let relative_gap = l2_gap / galerkin.l2_norm().max(f64::MIN_POSITIVE);
    Ok(OracleReport {
        spectral,
        galerkin,
        l2_gap,
        relative_gap,
    })
}
