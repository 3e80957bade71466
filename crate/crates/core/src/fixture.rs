//! Regression fixtures.
//!
//! A fixture is a small `key = value` file:
//!
//! ```text
//! [fixture]
//! kind = golden             # golden | galerkin_oracle
//! config = run.cfg          # relative to the fixture file
//! golden = diagnostics.csv  # golden only
//! n_trunc = 3               # galerkin_oracle only
//!
//! [tolerances]
//! default = 0               # absolute, per column; 0 means bit-identical
//! h1 = 1e-12
//! l2_gap = 1e-6             # galerkin_oracle only
//! ```
//!
//! Golden fixtures re-run the config into a scratch directory and compare
//! `diagnostics.csv` column by column. Oracle fixtures run the Galerkin
//! cross-check with the config's model, grid size and `t_final`, using
//! `dt_max` as the fixed step.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{KeyValues, RunConfig};
use crate::error::{KseError, Result};
use crate::harness::{galerkin_cross_check, run_in};

#[derive(Debug, Clone, PartialEq)]
pub enum FixtureKind {
    Golden { golden: PathBuf },
    GalerkinOracle { n_trunc: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub path: PathBuf,
    pub config: RunConfig,
    pub kind: FixtureKind,
    pub default_tolerance: f64,
    pub tolerances: BTreeMap<String, f64>,
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(KseError::config(format!("fixture {} not found", path.display())));
        }
        let text = fs::read_to_string(path).map_err(|e| KseError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let kv = KeyValues::parse(&text)?;
        let cfg_path = base.join(
            kv.get("fixture.config")
                .ok_or_else(|| KseError::config("fixture needs fixture.config"))?,
        );
        let config = RunConfig::load(&cfg_path)?;
        let kind = match kv.get("fixture.kind").unwrap_or("golden") {
            "golden" => FixtureKind::Golden {
                golden: base.join(
                    kv.get("fixture.golden")
                        .ok_or_else(|| KseError::config("golden fixture needs fixture.golden"))?,
                ),
            },
            "galerkin_oracle" => FixtureKind::GalerkinOracle {
                n_trunc: kv
                    .usize("fixture.n_trunc")?
                    .ok_or_else(|| KseError::config("oracle fixture needs fixture.n_trunc"))?,
            },
            other => return Err(KseError::config(format!("unknown fixture kind '{other}'"))),
        };
        let mut default_tolerance = 0.0;
        let mut tolerances = BTreeMap::new();
        for key in kv.keys() {
            if let Some(col) = key.strip_prefix("tolerances.") {
                let v = kv.f64(key)?.expect("key present");
                if !(v >= 0.0) {
                    return Err(KseError::config(format!("tolerance {col} must be >= 0")));
                }
                if col == "default" {
                    default_tolerance = v;
                } else {
                    tolerances.insert(col.to_string(), v);
                }
            } else if !matches!(
                key,
                "fixture.kind" | "fixture.config" | "fixture.golden" | "fixture.n_trunc"
            ) {
                return Err(KseError::config(format!("unknown fixture key '{key}'")));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            config,
            kind,
            default_tolerance,
            tolerances,
        })
    }

    pub fn tolerance(&self, column: &str) -> f64 {
        self.tolerances.get(column).copied().unwrap_or(self.default_tolerance)
    }
}

/// First place where a replay left its tolerance band.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// Data row, 0-based, header excluded.
    pub row: usize,
    pub column: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureReport {
    pub fixture: PathBuf,
    pub rows_compared: usize,
    pub divergence: Option<Divergence>,
    /// Structural problems (header or row-count mismatch) or oracle gaps.
    pub note: Option<String>,
    /// Measured quantity for oracle fixtures, e.g. `("l2_gap", 3e-9)`.
    pub metric: Option<(String, f64)>,
}

impl FixtureReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none() && self.note.is_none()
    }
}

impl fmt::Display for FixtureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({} rows compared)",
            self.fixture.display(),
            if self.passed() { "PASS" } else { "FAIL" },
            self.rows_compared
        )?;
        if let Some(d) = &self.divergence {
            write!(
                f,
                "; first divergence at row {} column '{}': expected {}, got {}",
                d.row, d.column, d.expected, d.got
            )?;
        }
        if let Some((name, v)) = &self.metric {
            write!(f, "; {name} = {v:e}")?;
        }
        if let Some(n) = &self.note {
            write!(f, "; {n}")?;
        }
        Ok(())
    }
}

/// Compares two diagnostics CSVs; `tol` gives the absolute tolerance per column.
pub fn compare_csv(
    expected: &str,
    got: &str,
    tol: &dyn Fn(&str) -> f64,
) -> (usize, Option<Divergence>, Option<String>) {
    let mut e_lines = expected.lines();
    let mut g_lines = got.lines();
    let (eh, gh) = (e_lines.next().unwrap_or(""), g_lines.next().unwrap_or(""));
    if eh != gh {
        return (0, None, Some(format!("header mismatch: '{eh}' vs '{gh}'")));
    }
    let columns: Vec<&str> = eh.split(',').collect();
    let e_rows: Vec<&str> = e_lines.collect();
    let g_rows: Vec<&str> = g_lines.collect();
    let mut compared = 0;
    for (row, (e, g)) in e_rows.iter().zip(&g_rows).enumerate() {
        compared += 1;
        for ((col, a), b) in columns.iter().zip(e.split(',')).zip(g.split(',')) {
            let ok = match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    let t = tol(col);
                    if t == 0.0 {
                        x.to_bits() == y.to_bits()
                    } else {
                        (x - y).abs() <= t
                    }
                }
                _ => a == b,
            };
            if !ok {
                let d = Divergence {
                    row,
                    column: col.to_string(),
                    expected: a.to_string(),
                    got: b.to_string(),
                };
                return (compared, Some(d), None);
            }
        }
    }
    let note = (e_rows.len() != g_rows.len())
        .then(|| format!("row count {} vs {}", e_rows.len(), g_rows.len()));
    (compared, None, note)
}

/// Re-runs a fixture and compares against its reference.
pub fn replay_fixture(path: &Path) -> Result<FixtureReport> {
    let fx = Fixture::load(path)?;
    match &fx.kind {
        FixtureKind::Golden { golden } => {
            let expected = fs::read_to_string(golden).map_err(|e| KseError::io(golden, e))?;
            let scratch = tempfile::tempdir().map_err(|e| KseError::io(std::env::temp_dir(), e))?;
            run_in(&fx.config, scratch.path())?;
            let out = scratch.path().join("diagnostics.csv");
            let got = fs::read_to_string(&out).map_err(|e| KseError::io(&out, e))?;
            let (rows_compared, divergence, note) = compare_csv(&expected, &got, &|c| fx.tolerance(c));
            Ok(FixtureReport {
                fixture: fx.path.clone(),
                rows_compared,
                divergence,
                note,
                metric: None,
            })
        }
        FixtureKind::GalerkinOracle { n_trunc } => {
            let c = &fx.config;
            let r = galerkin_cross_check(
                c.params,
                *n_trunc,
                c.n,
                c.domain_length,
                c.t_final,
                c.controller.dt_max,
            )?;
            let limit = fx.tolerances.get("l2_gap").copied().unwrap_or(1e-6);
            let note = (!(r.l2_gap < limit))
                .then(|| format!("L2 gap {:e} exceeds {:e}", r.l2_gap, limit));
            Ok(FixtureReport {
                fixture: fx.path.clone(),
                rows_compared: 1,
                divergence: None,
                note,
                metric: Some(("l2_gap".into(), r.l2_gap)),
            })
        }
    }
}

/// Runs `config` and stores it with its diagnostics as a golden fixture in
/// `dir` (`fixture.kse`, `config.cfg`, `golden.csv`). Returns the fixture path.
pub fn record_fixture(config: &Path, dir: &Path) -> Result<PathBuf> {
    let cfg = RunConfig::load(config)?;
    fs::create_dir_all(dir).map_err(|e| KseError::io(dir, e))?;
    let scratch = tempfile::tempdir().map_err(|e| KseError::io(std::env::temp_dir(), e))?;
    run_in(&cfg, scratch.path())?;
    let put = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| KseError::io(p, e))
    };
    put("config.cfg", &cfg.to_text())?;
    let csv = scratch.path().join("diagnostics.csv");
    let golden = fs::read_to_string(&csv).map_err(|e| KseError::io(&csv, e))?;
    put("golden.csv", &golden)?;
    put(
        "fixture.kse",
        "[fixture]\nkind = golden\nconfig = config.cfg\ngolden = golden.csv\n\n[tolerances]\ndefault = 0\n",
    )?;
    Ok(dir.join("fixture.kse"))
}
