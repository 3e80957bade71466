//! Run configuration in a plain `key = value` format with `[section]`
//! headers. `#` and `;` start comments.
//!
//! ```text
//! [model]
//! kind = rkse            # kse | kse_scalar | rkse
//! lambda = 5.01
//! nu = 0.5
//! nonlinearity = advective
//!
//! [grid]
//! n = 128
//! domain_length = 2pi
//!
//! [time]
//! t_final = 0.8
//! cfl = 0.5
//! dt_max = 1e-3
//! sample_interval = 1e-3
//! snapshot_interval = 0.2
//!
//! [initial]
//! kind = paper_sines     # paper_sines | random_band | file
//! k_max = 4
//! seed = 0
//! path = u1.ksef, u2.ksef
//!
//! [output]
//! dir = out/rkse
//! cosim = false
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{KseError, Result};
use crate::etd::StepController;
use crate::models::{ModelKind, ModelParams, Nonlinearity};

/// Environment variable that replaces the working directory as output root.
pub const OUT_DIR_ENV: &str = "KSE_OUT_DIR";

/// Parsed `[section] key = value` document, keys stored as `section.key`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw
                .split(['#', ';'])
                .next()
                .unwrap_or("")
                .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    KseError::config(format!("line {}: unterminated section header", lineno + 1))
                })?;
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                KseError::config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = if section.is_empty() {
                k.trim().to_ascii_lowercase()
            } else {
                format!("{}.{}", section, k.trim().to_ascii_lowercase())
            };
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(KseError::config(format!("duplicate key '{key}'")));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| KseError::config(format!("{key}: '{v}' is not a non-negative integer")))
            })
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(KseError::config(format!("{key}: '{v}' is not a boolean"))),
            })
            .transpose()
    }

    /// Fails on any key outside `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for k in self.keys() {
            if !allowed.contains(&k) {
                return Err(KseError::config(format!("unknown key '{k}'")));
            }
        }
        Ok(())
    }
}

/// Parses a float; also accepts `pi`, `2pi` and `<x>pi`.
pub fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let s = v.trim().to_ascii_lowercase();
    let parsed = if let Some(prefix) = s.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*');
        if prefix.is_empty() {
            Ok(PI)
        } else {
            prefix.parse::<f64>().map(|x| x * PI)
        }
    } else {
        s.parse::<f64>()
    };
    parsed.map_err(|_| KseError::config(format!("{key}: '{v}' is not a number")))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    /// `φ = C(sin(x₁+x₂) + sin x₁ + sin x₂)`, `u = ∇φ`, with `‖u‖_{L²} = 1`.
    PaperSines,
    /// Seeded random coefficients on `0 < |k| <= k_max`.
    RandomBand { k_max: usize },
    /// KSEF snapshots, one per component.
    File(Vec<PathBuf>),
}

impl InitialKind {
    fn describe(&self) -> String {
        match self {
            InitialKind::PaperSines => "paper_sines".into(),
            InitialKind::RandomBand { k_max } => format!("random_band (k_max = {k_max})"),
            InitialKind::File(p) => format!(
                "file ({})",
                p.iter().map(|x| x.display().to_string()).collect::<Vec<_>>().join(", ")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub n: usize,
    pub domain_length: f64,
    pub t_final: f64,
    pub controller: StepController,
    pub sample_interval: f64,
    pub snapshot_interval: f64,
    pub seed: u64,
    pub initial: InitialKind,
    /// As written in the config; see [`RunConfig::resolved_output_dir`].
    pub output_dir: PathBuf,
    pub cosim: bool,
}

const KEYS: &[&str] = &[
    "model.kind",
    "model.lambda",
    "model.nu",
    "model.nonlinearity",
    "grid.n",
    "grid.domain_length",
    "time.t_final",
    "time.cfl",
    "time.dt_max",
    "time.sample_interval",
    "time.snapshot_interval",
    "time.contour_points",
    "time.contour_radius",
    "initial.kind",
    "initial.k_max",
    "initial.seed",
    "initial.path",
    "output.dir",
    "output.cosim",
];

impl RunConfig {
    /// Desk-scale defaults: vector KSE, λ = 5.01, n = 128, `t ∈ [0, 0.8]`.
    pub fn new(params: ModelParams, n: usize, t_final: f64) -> Self {
        Self {
            params,
            n,
            domain_length: 2.0 * PI,
            t_final,
            controller: StepController::default(),
            sample_interval: 1e-3,
            snapshot_interval: 0.2,
            seed: 0,
            initial: InitialKind::PaperSines,
            output_dir: PathBuf::from("out"),
            cosim: false,
        }
    }

    /// Parses `text`; relative initial-data paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(KEYS)?;

        let kind: ModelKind = kv
            .get("model.kind")
            .ok_or_else(|| KseError::config("missing model.kind"))?
            .parse()?;
        let lambda = kv
            .f64("model.lambda")?
            .ok_or_else(|| KseError::config("missing model.lambda"))?;
        let nu = kv.f64("model.nu")?.unwrap_or(0.0);
        let nonlinearity: Nonlinearity = kv
            .get("model.nonlinearity")
            .map(str::parse)
            .transpose()?
            .unwrap_or_default();
        let params = ModelParams {
            kind,
            lambda,
            nu,
            nonlinearity,
        };

        let n = kv
            .usize("grid.n")?
            .ok_or_else(|| KseError::config("missing grid.n"))?;
        let t_final = kv
            .f64("time.t_final")?
            .ok_or_else(|| KseError::config("missing time.t_final"))?;

        let mut cfg = RunConfig::new(params, n, t_final);
        if let Some(l) = kv.f64("grid.domain_length")? {
            cfg.domain_length = l;
        }
        if let Some(v) = kv.f64("time.cfl")? {
            cfg.controller.cfl = v;
        }
        if let Some(v) = kv.f64("time.dt_max")? {
            cfg.controller.dt_max = v;
        }
        if let Some(v) = kv.usize("time.contour_points")? {
            cfg.controller.contour.points = v;
        }
        if let Some(v) = kv.f64("time.contour_radius")? {
            cfg.controller.contour.radius = v;
        }
        if let Some(v) = kv.f64("time.sample_interval")? {
            cfg.sample_interval = v;
        }
        if let Some(v) = kv.f64("time.snapshot_interval")? {
            cfg.snapshot_interval = v;
        }
        if let Some(v) = kv.usize("initial.seed")? {
            cfg.seed = v as u64;
        }
        cfg.initial = match kv.get("initial.kind").unwrap_or("paper_sines").to_ascii_lowercase().as_str() {
            "paper_sines" => InitialKind::PaperSines,
            "random_band" => InitialKind::RandomBand {
                k_max: kv
                    .usize("initial.k_max")?
                    .ok_or_else(|| KseError::config("random_band needs initial.k_max"))?,
            },
            "file" => {
                let paths = kv
                    .get("initial.path")
                    .ok_or_else(|| KseError::config("file initial data needs initial.path"))?;
                InitialKind::File(
                    paths
                        .split(',')
                        .map(|p| base.join(p.trim()))
                        .collect(),
                )
            }
            other => return Err(KseError::config(format!("unknown initial.kind '{other}'"))),
        };
        if let Some(d) = kv.get("output.dir") {
            cfg.output_dir = PathBuf::from(d);
        }
        cfg.cosim = kv.bool("output.cosim")?.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| KseError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.controller.validate()?;
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(KseError::config(format!("grid.n must be even and >= 4, got {}", self.n)));
        }
        if !(self.domain_length > 0.0 && self.domain_length.is_finite()) {
            return Err(KseError::config("grid.domain_length must be positive"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(KseError::config("time.t_final must be non-negative"));
        }
        if !(self.sample_interval > 0.0) || !(self.snapshot_interval > 0.0) {
            return Err(KseError::config("sample and snapshot intervals must be positive"));
        }
        if self.cosim && self.params.kind != ModelKind::KseVector {
            return Err(KseError::config("cosim requires model.kind = kse"));
        }
        match &self.initial {
            InitialKind::RandomBand { k_max } => {
                if *k_max == 0 || 3 * k_max >= self.n {
                    return Err(KseError::config(format!(
                        "initial.k_max must lie in [1, n/3), got {k_max}"
                    )));
                }
            }
            InitialKind::File(paths) => {
                if self.cosim {
                    return Err(KseError::config("cosim needs generated initial data"));
                }
                if paths.len() != self.params.kind.components() {
                    return Err(KseError::config(format!(
                        "model {} needs {} snapshot files, got {}",
                        self.params.kind,
                        self.params.kind.components(),
                        paths.len()
                    )));
                }
                for p in paths {
                    if !p.is_file() {
                        return Err(KseError::config(format!(
                            "initial data file {} does not exist",
                            p.display()
                        )));
                    }
                }
            }
            InitialKind::PaperSines => {}
        }
        Ok(())
    }

    /// Output directory with `KSE_OUT_DIR` (if set) as the root for relative paths.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Canonical text form, parseable by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "kind = {}", p.kind);
        let _ = writeln!(s, "lambda = {:e}", p.lambda);
        let _ = writeln!(s, "nu = {:e}", p.nu);
        let _ = writeln!(s, "nonlinearity = {}", p.nonlinearity.name());
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "domain_length = {:e}", self.domain_length);
        let _ = writeln!(s, "\n[time]");
        let _ = writeln!(s, "t_final = {:e}", self.t_final);
        let _ = writeln!(s, "cfl = {:e}", self.controller.cfl);
        let _ = writeln!(s, "dt_max = {:e}", self.controller.dt_max);
        let _ = writeln!(s, "sample_interval = {:e}", self.sample_interval);
        let _ = writeln!(s, "snapshot_interval = {:e}", self.snapshot_interval);
        let _ = writeln!(s, "contour_points = {}", self.controller.contour.points);
        let _ = writeln!(s, "contour_radius = {:e}", self.controller.contour.radius);
        let _ = writeln!(s, "\n[initial]");
        match &self.initial {
            InitialKind::PaperSines => {
                let _ = writeln!(s, "kind = paper_sines");
            }
            InitialKind::RandomBand { k_max } => {
                let _ = writeln!(s, "kind = random_band");
                let _ = writeln!(s, "k_max = {k_max}");
            }
            InitialKind::File(paths) => {
                let _ = writeln!(s, "kind = file");
                let joined: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                let _ = writeln!(s, "path = {}", joined.join(", "));
            }
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", self.output_dir.display());
        let _ = writeln!(s, "cosim = {}", self.cosim);
        s
    }

    pub fn describe_initial(&self) -> String {
        self.initial.describe()
    }
}
