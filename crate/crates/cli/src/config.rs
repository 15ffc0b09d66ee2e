//! Run configuration: a flat `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

/// Every key accepted in a config file. Flags use the same names.
pub const KEYS: &[&str] = &[
    "masses", "q1", "q2", "grid", "basis", "trials", "refine", "seed", "tol", "jobs", "out", "format", "sector", "coarse",
    "samples", "families",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            _ => Err(format!("unknown format '{s}' (expected csv, json or svg)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Svg => "svg",
        })
    }
}

/// Closed interval `lo:hi`, or a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Span {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
        let (lo, hi) = match s.split_once(':') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => {
                let v = num(s)?;
                (v, v)
            }
        };
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(format!("bad range '{s}'"));
        }
        Ok(Self { lo, hi })
    }
}

impl Span {
    /// `lo, lo + step, ...` up to `hi` inclusive, computed by index so values
    /// do not accumulate rounding.
    pub fn points(&self, step: f64) -> Vec<f64> {
        if self.hi == self.lo {
            return vec![self.lo];
        }
        let count = ((self.hi - self.lo) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| round12(self.lo + i as f64 * step)).collect()
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Masses as given: three particle masses, or a nuclear mass for the
/// two-electron commands (`inf` for a static nucleus).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Masses(pub Vec<f64>);

impl FromStr for Masses {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(',')
            .map(|t| match t.trim() {
                "inf" | "infinity" => Ok(f64::INFINITY),
                t => t.parse::<f64>().map_err(|_| format!("'{t}' is not a mass")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if v.iter().any(|m| !(*m > 0.0)) {
            return Err("masses must be positive".into());
        }
        Ok(Self(v))
    }
}

impl Masses {
    pub fn triple(&self) -> Result<[f64; 3], String> {
        match self.0.as_slice() {
            &[a, b, c] if [a, b, c].iter().all(|m| m.is_finite()) => Ok([a, b, c]),
            _ => Err("expected three finite masses m1,m2,m3".into()),
        }
    }

    /// Nuclear mass for a nucleus with two unit-mass electrons; `None` is static.
    pub fn nuclear(&self) -> Result<Option<f64>, String> {
        let m = match *self.0.as_slice() {
            [m] => m,
            [m, e1, e2] if e1 == 1.0 && e2 == 1.0 => m,
            _ => return Err("expected a nuclear mass M or M,1,1".into()),
        };
        Ok(m.is_finite().then_some(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorArg {
    Upper,
    Lower,
}

impl FromStr for SectorArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            _ => Err(format!("unknown sector '{s}' (expected upper or lower)")),
        }
    }
}

/// Raw settings before per-command defaults are applied. Later layers win.
#[derive(Debug, Clone, Default)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(format!("line {}: expected key = value", i + 1));
            };
            let k = k.trim().to_string();
            if !KEYS.contains(&k.as_str()) {
                return Err(format!("line {}: unknown key '{k}'", i + 1));
            }
            map.insert(k, v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn set(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.0.insert(key.to_string(), v);
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: fmt::Display,
    {
        self.0.get(key).map(|v| v.parse::<T>().map_err(|e| format!("{key}: {e}"))).transpose()
    }
}

/// Per-command defaults.
pub struct Defaults {
    pub masses: &'static str,
    pub q1: &'static str,
    pub q2: &'static str,
    pub grid: f64,
    pub basis: usize,
    pub trials: usize,
    pub refine: usize,
    pub tol: f64,
    pub format: Format,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub masses: Masses,
    pub q1: Span,
    pub q2: Span,
    pub grid: f64,
    pub basis: usize,
    pub trials: usize,
    pub refine: usize,
    pub seed: Option<u64>,
    pub tol: f64,
    pub jobs: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
    pub sector: SectorArg,
    pub coarse: usize,
    pub samples: usize,
    pub families: usize,
}

impl RunConfig {
    pub fn resolve(s: &Settings, d: &Defaults) -> Result<Self, String> {
        let cfg = Self {
            masses: s.get("masses")?.map_or_else(|| d.masses.parse(), Ok)?,
            q1: s.get("q1")?.map_or_else(|| d.q1.parse(), Ok)?,
            q2: s.get("q2")?.map_or_else(|| d.q2.parse(), Ok)?,
            grid: s.get("grid")?.unwrap_or(d.grid),
            basis: s.get("basis")?.unwrap_or(d.basis),
            trials: s.get("trials")?.unwrap_or(d.trials),
            refine: s.get("refine")?.unwrap_or(d.refine),
            seed: s.get("seed")?,
            tol: s.get("tol")?.unwrap_or(d.tol),
            jobs: s.get("jobs")?.unwrap_or(0),
            out: s.get::<PathBuf>("out")?,
            format: s.get("format")?.unwrap_or(d.format),
            sector: s.get("sector")?.unwrap_or(SectorArg::Upper),
            coarse: s.get("coarse")?.unwrap_or(8),
            samples: s.get("samples")?.unwrap_or(d.samples),
            families: s.get("families")?.unwrap_or(1000),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.grid > 0.0 && self.grid.is_finite()) {
            return Err("grid step must be positive".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err("tolerance must be positive".into());
        }
        if self.basis == 0 || self.trials == 0 {
            return Err("basis and trials must be positive".into());
        }
        if self.coarse < 2 {
            return Err("coarse must be at least 2".into());
        }
        if self.q1.lo < 0.0 || self.q2.lo < 0.0 {
            return Err("charges must be non-negative".into());
        }
        Ok(())
    }

    pub fn seed(&self) -> Result<u64, String> {
        self.seed.ok_or_else(|| "a seed is required for stochastic runs (--seed)".into())
    }
}
