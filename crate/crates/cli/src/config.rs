//! Flat `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use ncdirac::invariant::InvariantConstants;
use ncdirac::{NCParams, UnitMode, C64};

pub const KEYS: [&str; 27] = [
    "theta",
    "eta",
    "gamma",
    "B",
    "e",
    "m",
    "hbar",
    "kappa",
    "q1",
    "q2",
    "unit_mode",
    "t0",
    "t1",
    "dt",
    "grid_points",
    "fock_N",
    "fock_ell",
    "xi3_0",
    "xi4_0",
    "a1",
    "a3",
    "b1",
    "b3",
    "c1",
    "output_dir",
    "emit",
    "debug_flip_bopp_sign",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub csv: bool,
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: NCParams,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub grid_points: usize,
    pub fock_n: usize,
    pub fock_ell: Option<f64>,
    pub xi3_0: C64,
    pub xi4_0: C64,
    pub constants: InvariantConstants,
    pub output_dir: PathBuf,
    pub emit: Emit,
    /// Reverses the sign of the position shift in the Bopp map; for
    /// exercising the failure path of `verify-algebra`.
    pub debug_flip_bopp_sign: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: NCParams::default(),
            t0: 0.0,
            t1: 1.0,
            dt: 1e-3,
            grid_points: 16,
            fock_n: 16,
            fock_ell: None,
            xi3_0: C64::new(0.0, 0.0),
            xi4_0: C64::new(0.0, 0.0),
            constants: InvariantConstants::new(1.0, 0.0, 0.0, -0.5, 0.0),
            output_dir: PathBuf::from("."),
            emit: Emit { csv: true, json: true },
            debug_flip_bopp_sign: false,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.trim().parse().map_err(|_| ConfigError(format!("{key}: expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(ConfigError(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim().parse().map_err(|_| ConfigError(format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn parse_complex(key: &str, v: &str) -> Result<C64, ConfigError> {
    let parts: Vec<&str> = v.split(',').collect();
    match parts.as_slice() {
        [re] => Ok(C64::new(parse_f64(key, re)?, 0.0)),
        [re, im] => Ok(C64::new(parse_f64(key, re)?, parse_f64(key, im)?)),
        _ => Err(ConfigError(format!("{key}: expected 're,im', got '{v}'"))),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError(format!("{key}: expected true or false, got '{v}'"))),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected 'key = value', got '{raw}'", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parses trailing `--key value` / `--key=value` arguments.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| ConfigError(format!("unexpected argument '{a}', expected --key value")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = it.next().ok_or_else(|| ConfigError(format!("--{key} needs a value")))?;
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then the file (if any), then overrides, then validation.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)], out: Option<&Path>) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            entries = parse_entries(&text)?;
        }
        entries.extend(overrides.iter().cloned());
        let mut cfg = Self::from_entries(&entries)?;
        if let Some(dir) = out {
            cfg.output_dir = dir.to_path_buf();
        }
        Ok(cfg)
    }

    pub fn from_entries(entries: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        let mut kappa: Option<f64> = None;
        for (k, v) in entries {
            let p = &mut c.params;
            match k.as_str() {
                "theta" => p.theta = parse_f64(k, v)?,
                "eta" => p.eta = parse_f64(k, v)?,
                "gamma" => p.gamma = parse_f64(k, v)?,
                "B" => p.b_field = parse_f64(k, v)?,
                "e" => p.charge = parse_f64(k, v)?,
                "m" => p.mass = parse_f64(k, v)?,
                "hbar" => p.hbar = parse_f64(k, v)?,
                "kappa" => kappa = Some(parse_f64(k, v)?),
                "q1" => p.q1 = parse_f64(k, v)?,
                "q2" => p.q2 = parse_f64(k, v)?,
                "unit_mode" => {
                    p.unit_mode = UnitMode::parse(v)
                        .ok_or_else(|| ConfigError(format!("unit_mode: expected natural or SI, got '{v}'")))?
                }
                "t0" => c.t0 = parse_f64(k, v)?,
                "t1" => c.t1 = parse_f64(k, v)?,
                "dt" => c.dt = parse_f64(k, v)?,
                "grid_points" => c.grid_points = parse_usize(k, v)?,
                "fock_N" => c.fock_n = parse_usize(k, v)?,
                "fock_ell" => c.fock_ell = Some(parse_f64(k, v)?),
                "xi3_0" => c.xi3_0 = parse_complex(k, v)?,
                "xi4_0" => c.xi4_0 = parse_complex(k, v)?,
                "a1" => c.constants.a1 = parse_f64(k, v)?,
                "a3" => c.constants.a3 = parse_f64(k, v)?,
                "b1" => c.constants.b1 = parse_f64(k, v)?,
                "b3" => c.constants.b3 = parse_f64(k, v)?,
                "c1" => c.constants.c1 = parse_f64(k, v)?,
                "output_dir" => c.output_dir = PathBuf::from(v),
                "emit" => {
                    let mut e = Emit { csv: false, json: false };
                    for item in v.split(',').map(str::trim) {
                        match item {
                            "csv" => e.csv = true,
                            "json" => e.json = true,
                            _ => return Err(ConfigError(format!("emit: unknown format '{item}'"))),
                        }
                    }
                    c.emit = e;
                }
                "debug_flip_bopp_sign" => c.debug_flip_bopp_sign = parse_bool(k, v)?,
                _ => {
                    return Err(ConfigError(format!("unknown configuration key '{k}' (known: {})", KEYS.join(", "))))
                }
            }
        }
        c.params.kappa = kappa.unwrap_or_else(|| (c.params.q2 - c.params.q1).exp());
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) {
            return Err(ConfigError(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t1 > self.t0) {
            return Err(ConfigError(format!("t1 must exceed t0, got t0={} t1={}", self.t0, self.t1)));
        }
        if self.fock_n < 2 {
            return Err(ConfigError(format!("fock_N must be at least 2, got {}", self.fock_n)));
        }
        if self.grid_points < 2 {
            return Err(ConfigError(format!("grid_points must be at least 2, got {}", self.grid_points)));
        }
        if let Some(ell) = self.fock_ell {
            if !(ell > 0.0) {
                return Err(ConfigError(format!("fock_ell must be positive, got {ell}")));
            }
        }
        self.params.validate().map_err(|e| ConfigError(e.to_string()))
    }

    /// `grid_points` uniform times on `[t0, t1]`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        (0..n).map(|k| self.t0 + (self.t1 - self.t0) * k as f64 / (n - 1) as f64).collect()
    }

    /// Every key with its effective value, sorted; the output directory is
    /// left out so that reruns elsewhere hash the same.
    pub fn canonical(&self) -> BTreeMap<&'static str, String> {
        let p = &self.params;
        let f = |x: f64| format!("{x:?}");
        let z = |x: C64| format!("{:?},{:?}", x.re, x.im);
        let mut m = BTreeMap::new();
        m.insert("theta", f(p.theta));
        m.insert("eta", f(p.eta));
        m.insert("gamma", f(p.gamma));
        m.insert("B", f(p.b_field));
        m.insert("e", f(p.charge));
        m.insert("m", f(p.mass));
        m.insert("hbar", f(p.hbar));
        m.insert("kappa", f(p.kappa));
        m.insert("q1", f(p.q1));
        m.insert("q2", f(p.q2));
        m.insert("unit_mode", p.unit_mode.to_string());
        m.insert("t0", f(self.t0));
        m.insert("t1", f(self.t1));
        m.insert("dt", f(self.dt));
        m.insert("grid_points", self.grid_points.to_string());
        m.insert("fock_N", self.fock_n.to_string());
        m.insert("fock_ell", self.fock_ell.map(f).unwrap_or_else(|| "default".into()));
        m.insert("xi3_0", z(self.xi3_0));
        m.insert("xi4_0", z(self.xi4_0));
        m.insert("a1", f(self.constants.a1));
        m.insert("a3", f(self.constants.a3));
        m.insert("b1", f(self.constants.b1));
        m.insert("b3", f(self.constants.b3));
        m.insert("c1", f(self.constants.c1));
        let mut emit = Vec::new();
        if self.emit.csv {
            emit.push("csv");
        }
        if self.emit.json {
            emit.push("json");
        }
        m.insert("emit", emit.join(","));
        m.insert("debug_flip_bopp_sign", self.debug_flip_bopp_sign.to_string());
        m
    }
}
