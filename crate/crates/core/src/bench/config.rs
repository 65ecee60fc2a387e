//! Experiment configuration: a sectioned `key = value` text format with flat
//! keys. Section headers only group keys for readability; every key may
//! appear under any section, but at most once.
//!
//! ```text
//! [experiment]
//! name = time-rate
//! seed = 42
//!
//! [problem]
//! beta = 0.5
//! x0 = smooth_bump
//! ```

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problem::Profile;
use crate::riccati::RiccatiScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    RiccatiRate,
    TimeRate,
    SpaceRate,
    GdRun,
    Compare,
    RegressDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::RiccatiRate,
        Experiment::TimeRate,
        Experiment::SpaceRate,
        Experiment::GdRun,
        Experiment::Compare,
        Experiment::RegressDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::RiccatiRate => "riccati-rate",
            Experiment::TimeRate => "time-rate",
            Experiment::SpaceRate => "space-rate",
            Experiment::GdRun => "gd-run",
            Experiment::Compare => "compare",
            Experiment::RegressDemo => "regress-demo",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub a: f64,
    pub b: f64,
    pub n_elements: Vec<usize>,
    pub ref_elements: usize,
    pub horizon: f64,
    pub steps: Vec<usize>,
    pub ref_steps: usize,
    pub beta: f64,
    pub alpha: f64,
    pub x0: Profile,
    pub sigma: Profile,
    pub scheme: RiccatiScheme,
    pub paths: usize,
    pub seed: u64,
    /// Gradient-descent step denominator; `None` uses the admissible bound.
    pub kappa: Option<f64>,
    /// Regression cells; `None` uses the default rule for the sample size.
    pub cells: Option<usize>,
    pub samples: Vec<usize>,
    pub max_iters: usize,
    pub tol: f64,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    pub out: Option<PathBuf>,
}

/// Every accepted key, in the order the meta file lists them.
pub const KEYS: [&str; 22] = [
    "name",
    "a",
    "b",
    "n_elements",
    "ref_elements",
    "horizon",
    "steps",
    "ref_steps",
    "beta",
    "alpha",
    "x0",
    "sigma",
    "scheme",
    "paths",
    "seed",
    "kappa",
    "cells",
    "samples",
    "max_iters",
    "tol",
    "workers",
    "out",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value for '{key}': '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(|v| parse_num(key, v))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("'{key}' needs at least one value")));
    }
    Ok(items)
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "auto" | "" => Ok(None),
        v => parse_num(key, v).map(Some),
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// The built-in settings of each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            a: 0.0,
            b: 1.0,
            n_elements: vec![16],
            ref_elements: 256,
            horizon: 1.0,
            steps: vec![16, 32, 64, 128, 256],
            ref_steps: 4096,
            beta: 1.0,
            alpha: 1.0,
            x0: Profile::SmoothBump,
            sigma: Profile::TimeModulatedSine,
            scheme: RiccatiScheme::V2,
            paths: 1000,
            seed: 20_240_601,
            kappa: None,
            cells: None,
            samples: vec![256, 1024, 4096, 16384],
            max_iters: 500,
            tol: 1e-10,
            workers: 0,
            out: None,
        };
        match experiment {
            Experiment::RiccatiRate => base,
            Experiment::TimeRate => Self {
                a: 0.0,
                b: 4.0,
                steps: vec![16, 32, 64, 128],
                ref_steps: 2048,
                beta: 0.5,
                paths: 2000,
                ..base
            },
            Experiment::SpaceRate => Self {
                n_elements: vec![8, 16, 32, 64],
                steps: vec![64],
                beta: 0.0,
                paths: 20,
                ..base
            },
            Experiment::GdRun => Self {
                n_elements: vec![9],
                steps: vec![16],
                beta: 0.0,
                paths: 2000,
                ..base
            },
            Experiment::Compare => Self {
                n_elements: vec![9],
                steps: vec![16, 64],
                beta: 0.0,
                paths: 2000,
                ..base
            },
            Experiment::RegressDemo => Self {
                paths: 0,
                ..base
            },
        }
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "name" => self.experiment = v.parse()?,
            "a" => self.a = parse_num(key, v)?,
            "b" => self.b = parse_num(key, v)?,
            "n_elements" => self.n_elements = parse_list(key, v)?,
            "ref_elements" => self.ref_elements = parse_num(key, v)?,
            "horizon" => self.horizon = parse_num(key, v)?,
            "steps" => self.steps = parse_list(key, v)?,
            "ref_steps" => self.ref_steps = parse_num(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "x0" => self.x0 = v.parse()?,
            "sigma" => self.sigma = v.parse()?,
            "scheme" => self.scheme = v.parse()?,
            "paths" => self.paths = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "kappa" => self.kappa = parse_optional(key, v)?,
            "cells" => self.cells = parse_optional(key, v)?,
            "samples" => self.samples = parse_list(key, v)?,
            "max_iters" => self.max_iters = parse_num(key, v)?,
            "tol" => self.tol = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            "out" => self.out = (!v.is_empty()).then(|| PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parse a config file. The experiment comes from the `name` key, or
    /// from `experiment` when the file has none.
    pub fn parse(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().to_string();
            if pairs.iter().any(|(k, _): &(String, String)| *k == key) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            pairs.push((key, value.trim().to_string()));
        }
        let named = pairs
            .iter()
            .find(|(k, _)| k == "name")
            .map(|(_, v)| v.parse::<Experiment>())
            .transpose()?;
        let experiment = match (named, experiment) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!("config is for '{a}', not '{b}'")))
            }
            (Some(e), _) | (None, Some(e)) => e,
            (None, None) => return Err(Error::Config("no experiment named".into())),
        };
        let mut cfg = Self::defaults(experiment);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.a < self.b) {
            return fail(format!("need a < b, got {} and {}", self.a, self.b));
        }
        if self.n_elements.iter().any(|&n| n < 2) || self.ref_elements < 2 {
            return fail("meshes need at least 2 elements".into());
        }
        if self.steps.contains(&0) || self.ref_steps == 0 {
            return fail("step counts must be positive".into());
        }
        if !(self.horizon > 0.0) {
            return fail(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.alpha >= 0.0) {
            return fail(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !(self.tol > 0.0) {
            return fail(format!("tol must be positive, got {}", self.tol));
        }
        if self.samples.contains(&0) {
            return fail("sample sizes must be positive".into());
        }
        Ok(())
    }

    /// The resolved configuration in the file format, one key per line.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "name = {}", self.experiment);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "\n[mesh]");
        let _ = writeln!(s, "a = {}", self.a);
        let _ = writeln!(s, "b = {}", self.b);
        let _ = writeln!(s, "n_elements = {}", join(&self.n_elements));
        let _ = writeln!(s, "ref_elements = {}", self.ref_elements);
        let _ = writeln!(s, "\n[time]");
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "steps = {}", join(&self.steps));
        let _ = writeln!(s, "ref_steps = {}", self.ref_steps);
        let _ = writeln!(s, "\n[problem]");
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "x0 = {}", self.x0);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "\n[solver]");
        let _ = writeln!(s, "paths = {}", self.paths);
        let _ = writeln!(s, "kappa = {}", opt(self.kappa.map(|k| k.to_string())));
        let _ = writeln!(s, "cells = {}", opt(self.cells.map(|c| c.to_string())));
        let _ = writeln!(s, "samples = {}", join(&self.samples));
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "tol = {}", self.tol);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "\n[output]\nout = {}", out.display());
        }
        s
    }
}
