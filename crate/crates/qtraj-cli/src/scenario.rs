//! Flat `key = value` scenario files.
//!
//! `#` starts a comment. Every key may appear at most once; keys that are
//! unknown or meaningless for the chosen `state.kind` are rejected.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use qtraj::sde_engine::{BoundaryMethod, DEFAULT_KEPT_PATHS};
use qtraj::{Amplifier, Mode, Superposition, TwoMode};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

const KEYS: &[&str] = &[
    "state.kind",
    "state.x1",
    "state.r",
    "state.phi",
    "state.c1_sq",
    "meter.x1b",
    "meter.r2",
    "amp.g",
    "amp.gtf",
    "amp.n_steps",
    "run.trajectories",
    "run.seed",
    "run.boundary",
    "run.keep_paths",
    "run.multiplicity",
    "sweep.x1",
    "sweep.r",
    "sweep.x1b",
];

const NOT_SQUEEZED: &[&str] = &["state.phi", "state.c1_sq", "meter.x1b", "meter.r2", "sweep.x1b"];
const NOT_SUPERPOSITION: &[&str] = &["meter.x1b", "meter.r2", "sweep.x1b"];
const NOT_TWO_MODE: &[&str] = &["state.c1_sq", "run.boundary", "run.multiplicity", "sweep.x1", "sweep.r"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Squeezed,
    Superposition,
    TwoMode,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Squeezed => "squeezed",
            Kind::Superposition => "superposition",
            Kind::TwoMode => "two_mode",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: Kind,
    pub x1: f64,
    pub r: f64,
    pub phi: f64,
    pub c1_sq: f64,
    pub x1b: f64,
    pub r2: f64,
    pub g: f64,
    pub gtf: f64,
    pub n_steps: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub boundary: BoundaryMethod,
    pub keep_paths: usize,
    pub multiplicity: usize,
    pub sweep_x1: Vec<f64>,
    pub sweep_r: Vec<f64>,
    pub sweep_x1b: Vec<f64>,
    /// Lowercase hex SHA-256 of the file bytes.
    pub sha256: String,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(CliError::io(path))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Syntax {
            path: path.into(),
            line: 0,
            msg: "file is not UTF-8".into(),
        })?;
        let mut sc = Self::parse(&text, path)?;
        sc.sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        Ok(sc)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut kv: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(CliError::Syntax {
                    path: path.into(),
                    line,
                    msg: format!("expected `key = value`, got `{body}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(CliError::UnknownKey { path: path.into(), line, key: k.into() });
            }
            if kv.insert(k, (line, v)).is_some() {
                return Err(CliError::Syntax { path: path.into(), line, msg: format!("duplicate key `{k}`") });
            }
        }
        Fields { kv, path: path.into() }.build()
    }

    pub fn amp(&self) -> Amplifier {
        Amplifier::from_gtf(self.g, self.gtf, self.n_steps)
    }

    /// Single-mode state with the given centre and squeezing.
    pub fn single(&self, x1: f64, r: f64) -> Superposition {
        let mode = Mode::new(x1, r);
        match self.kind {
            Kind::Squeezed => Superposition::single(mode),
            _ => Superposition::from_c1_sq(mode, self.c1_sq, self.phi),
        }
    }

    pub fn two_mode(&self, x1b: f64) -> TwoMode {
        TwoMode::new(Mode::new(self.x1, self.r), Mode::new(x1b, self.r2), self.phi)
    }

    /// `(r, x1)` points of a postselection sweep, r-major.
    pub fn sweep_points(&self) -> Vec<(f64, f64)> {
        self.sweep_r.iter().flat_map(|&r| self.sweep_x1.iter().map(move |&x| (r, x))).collect()
    }
}

struct Fields<'a> {
    kv: BTreeMap<&'a str, (usize, &'a str)>,
    path: PathBuf,
}

impl Fields<'_> {
    fn bad(&self, key: &str, msg: impl Into<String>) -> CliError {
        CliError::BadValue { path: self.path.clone(), key: key.into(), msg: msg.into() }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.kv.get(key).map(|&(_, v)| v)
    }

    fn require(&self, key: &'static str) -> Result<&str> {
        self.raw(key).ok_or_else(|| CliError::MissingKey { path: self.path.clone(), key })
    }

    fn float_value(&self, key: &str, v: &str) -> Result<f64> {
        let x = if key == "state.phi" { parse_phase(v) } else { v.parse().ok() };
        match x {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(self.bad(key, format!("`{v}` is not a finite number"))),
        }
    }

    fn float(&self, key: &str, default: f64) -> Result<f64> {
        self.raw(key).map_or(Ok(default), |v| self.float_value(key, v))
    }

    fn float_req(&self, key: &'static str) -> Result<f64> {
        let v = self.require(key)?;
        self.float_value(key, v)
    }

    fn count(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| self.bad(key, format!("`{v}` is not a nonnegative integer"))),
        }
    }

    fn list(&self, key: &str, default: f64) -> Result<Vec<f64>> {
        let Some(v) = self.raw(key) else { return Ok(vec![default]) };
        let out = v.split(',').map(|s| self.float_value(key, s.trim())).collect::<Result<Vec<_>>>()?;
        Ok(out)
    }

    fn build(self) -> Result<Scenario> {
        let kind = match self.require("state.kind")? {
            "squeezed" => Kind::Squeezed,
            "superposition" => Kind::Superposition,
            "two_mode" => Kind::TwoMode,
            other => {
                return Err(self.bad("state.kind", format!("`{other}` is not one of squeezed, superposition, two_mode")))
            }
        };
        let excluded = match kind {
            Kind::Squeezed => NOT_SQUEEZED,
            Kind::Superposition => NOT_SUPERPOSITION,
            Kind::TwoMode => NOT_TWO_MODE,
        };
        if let Some(k) = excluded.iter().find(|k| self.kv.contains_key(*k)) {
            return Err(self.bad(k, format!("not used for state.kind = {}", kind.name())));
        }
        let x1 = self.float_req("state.x1")?;
        let r = self.float("state.r", 0.0)?;
        let phi = if kind == Kind::Squeezed { 0.0 } else { self.float_req("state.phi")? };
        let c1_sq = self.float("state.c1_sq", 0.5)?;
        if !(0.0..=1.0).contains(&c1_sq) {
            return Err(self.bad("state.c1_sq", "must lie in [0, 1]"));
        }
        let x1b = if kind == Kind::TwoMode { self.float_req("meter.x1b")? } else { 0.0 };
        let g = self.float("amp.g", 1.0)?;
        if g == 0.0 {
            return Err(self.bad("amp.g", "must be nonzero"));
        }
        if kind == Kind::TwoMode && g < 0.0 {
            return Err(self.bad("amp.g", "two-mode runs amplify x, so g must be positive"));
        }
        let gtf = self.float_req("amp.gtf")?;
        if !(gtf > 0.0) {
            return Err(self.bad("amp.gtf", "must be positive"));
        }
        let positive = |key: &str, default: u64| -> Result<u64> {
            match self.count(key, default)? {
                0 => Err(self.bad(key, "must be at least 1")),
                n => Ok(n),
            }
        };
        let boundary = match self.raw("run.boundary").unwrap_or("direct") {
            "direct" => BoundaryMethod::Direct,
            "wigner" => BoundaryMethod::Wigner,
            other => return Err(self.bad("run.boundary", format!("`{other}` is not one of direct, wigner"))),
        };
        Ok(Scenario {
            kind,
            x1,
            r,
            phi,
            c1_sq,
            x1b,
            r2: self.float("meter.r2", 0.0)?,
            g,
            gtf,
            n_steps: positive("amp.n_steps", 300)? as usize,
            trajectories: positive("run.trajectories", 100_000)? as usize,
            seed: self.count("run.seed", 1)?,
            boundary,
            keep_paths: self.count("run.keep_paths", DEFAULT_KEPT_PATHS as u64)? as usize,
            multiplicity: positive("run.multiplicity", 1)? as usize,
            sweep_x1: self.list("sweep.x1", x1)?,
            sweep_r: self.list("sweep.r", r)?,
            sweep_x1b: self.list("sweep.x1b", x1b)?,
            sha256: String::new(),
        })
    }
}

/// Accepts a plain number or `[-][k*]pi[/d]`.
fn parse_phase(v: &str) -> Option<f64> {
    let Some((pre, post)) = v.split_once("pi") else { return v.parse().ok() };
    let (sign, pre) = match pre.trim().strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, pre.trim()),
    };
    let k = match pre.strip_suffix('*').map(str::trim) {
        Some(k) => k.parse::<f64>().ok()?,
        None if pre.is_empty() => 1.0,
        None => return None,
    };
    let post = post.trim();
    let d = if post.is_empty() { 1.0 } else { post.strip_prefix('/')?.trim().parse::<f64>().ok()? };
    Some(sign * k * PI / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn parse(s: &str) -> Result<Scenario> {
        Scenario::parse(s, Path::new("t.scenario"))
    }

    #[test]
    fn phases() {
        assert_eq!(parse_phase("pi/2"), Some(FRAC_PI_2));
        assert_eq!(parse_phase("-pi"), Some(-PI));
        assert_eq!(parse_phase("2*pi/4"), Some(FRAC_PI_2));
        assert_eq!(parse_phase("0.25"), Some(0.25));
        assert_eq!(parse_phase("pie"), None);
        assert_eq!(parse_phase("x*pi"), None);
    }

    #[test]
    fn minimal_squeezed() {
        let s = parse("state.kind = squeezed\nstate.x1 = 3 # centre\namp.gtf=3\n").unwrap();
        assert_eq!(s.kind, Kind::Squeezed);
        assert_eq!((s.x1, s.r, s.g, s.n_steps, s.trajectories), (3.0, 0.0, 1.0, 300, 100_000));
        assert_eq!(s.sweep_points(), vec![(0.0, 3.0)]);
    }

    #[test]
    fn sweeps_and_two_mode() {
        let s =
            parse("state.kind=superposition\nstate.x1=1\nstate.phi=pi/2\namp.gtf=3\nsweep.x1=0.5, 1,2\nsweep.r=0,1\n")
                .unwrap();
        assert_eq!(s.sweep_points().len(), 6);
        assert_eq!(s.sweep_points()[3], (1.0, 0.5));
        let t = parse("state.kind=two_mode\nstate.x1=1\nstate.phi=pi/2\nmeter.x1b=4\namp.gtf=2\n").unwrap();
        assert_eq!(t.two_mode(t.x1b).mode_b.mean_x, 4.0);
    }

    #[test]
    fn rejections_name_the_key() {
        let e = parse("state.kind=squeezed\nstate.x1=1\namp.gtf=1\nstate.xl=2\n").unwrap_err();
        assert!(e.to_string().contains("`state.xl`") && e.to_string().contains("line 4"), "{e}");
        let e = parse("state.kind=squeezed\nstate.x1=1\n").unwrap_err();
        assert!(e.to_string().contains("amp.gtf"), "{e}");
        let e = parse("state.kind=squeezed\nstate.x1=1\namp.gtf=1\nmeter.x1b=2\n").unwrap_err();
        assert!(e.to_string().contains("meter.x1b"), "{e}");
        let e = parse("state.kind=squeezed\nstate.x1=one\namp.gtf=1\n").unwrap_err();
        assert!(e.to_string().contains("state.x1"), "{e}");
        assert!(parse("state.kind=squeezed\nstate.x1=1\nstate.x1=2\namp.gtf=1\n").is_err());
        assert!(parse("state.kind=squeezed\nstate.x1 1\namp.gtf=1\n").is_err());
        assert!(parse("state.kind=cat\nstate.x1=1\namp.gtf=1\n").is_err());
        assert!(parse("state.kind=two_mode\nstate.x1=1\nstate.phi=0\nmeter.x1b=1\namp.gtf=1\namp.g=-1\n").is_err());
    }

    #[test]
    fn shipped_scenarios_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let s = Scenario::load(&path).unwrap_or_else(|e| panic!("{e}"));
            assert_eq!(s.sha256.len(), 64);
            s.amp().check().unwrap();
            n += 1;
        }
        assert_eq!(n, 16);
    }
}
