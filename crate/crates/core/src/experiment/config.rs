use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::sos::Epsilons;
use crate::{Error, Result};

/// Environment variable consulted for the output directory when neither the
/// config file nor the command line sets one.
pub const OUTPUT_DIR_ENV: &str = "SOSIL_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "sosil-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    NonlinearSystem,
    NonlinearControl,
    Custom,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::NonlinearSystem => "nonlinear_system",
            ExperimentKind::NonlinearControl => "nonlinear_control",
            ExperimentKind::Custom => "custom",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonlinear_system" | "exp1" => Ok(ExperimentKind::NonlinearSystem),
            "nonlinear_control" | "exp2" => Ok(ExperimentKind::NonlinearControl),
            "custom" => Ok(ExperimentKind::Custom),
            _ => Err(Error::InvalidConfig(format!("unknown experiment '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Admm,
    Pgd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Admm => "admm",
            Algorithm::Pgd => "pgd",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "admm" => Ok(Algorithm::Admm),
            "pgd" => Ok(Algorithm::Pgd),
            _ => Err(Error::InvalidConfig(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// Plant and expert for `experiment = custom`, in the polynomial text format.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CustomSystem {
    pub nvars: Option<usize>,
    pub a: Option<String>,
    pub b: Option<String>,
    pub z: Option<String>,
    pub expert: Option<String>,
}

/// One sweep: every `(N, seed)` pair runs the chosen algorithm once.
///
/// Fields left as `None` take the built-in experiment's default when the
/// sweep is resolved; see [`ExperimentConfig::resolved_text`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub n_samples: Vec<usize>,
    pub iterations: Option<usize>,
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: f64,
    pub init_halfwidth: f64,
    pub data_halfwidth: f64,
    pub d_f: Option<u32>,
    pub d_p: Option<u32>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    /// PGD minibatch size; `None` uses full-batch gradients.
    pub minibatch: Option<usize>,
    /// Closed-loop trajectories simulated per run (two-state systems only).
    pub trajectories: usize,
    pub output_dir: Option<PathBuf>,
    pub custom: CustomSystem,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::NonlinearSystem,
            algorithm: Algorithm::Admm,
            seeds: (0..10).collect(),
            n_samples: vec![10, 100, 1000],
            iterations: None,
            rho: None,
            alpha: None,
            sigma: 1.0,
            init_halfwidth: 5.0,
            data_halfwidth: 10.0,
            d_f: None,
            d_p: None,
            eps1: None,
            eps2: None,
            minibatch: None,
            trajectories: 20,
            output_dir: None,
            custom: CustomSystem::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value '{value}' for '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(parse(key, item)?);
    }
    Ok(out)
}

/// Seeds accept comma lists and half-open ranges: `0..10`, `1,2,5..7`.
fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi): (u64, u64) = (parse("seeds", lo.trim())?, parse("seeds", hi.trim())?);
                out.extend(lo..hi);
            }
            None => out.push(parse("seeds", item)?),
        }
    }
    Ok(out)
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are ignored;
    /// later keys override earlier ones.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let optional = |v: &str| v.is_empty() || v == "default";
        match key {
            "experiment" => self.experiment = value.parse()?,
            "algorithm" => self.algorithm = value.parse()?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "n_samples" => self.n_samples = parse_list(key, value)?,
            "iterations" => {
                self.iterations = if optional(value) {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "rho" => {
                self.rho = if optional(value) {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "alpha" => {
                self.alpha = if optional(value) {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "sigma" => self.sigma = parse(key, value)?,
            "init_halfwidth" => self.init_halfwidth = parse(key, value)?,
            "data_halfwidth" => self.data_halfwidth = parse(key, value)?,
            "d_f" => {
                self.d_f = if optional(value) {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "d_p" => {
                self.d_p = if optional(value) {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "eps1" => {
                self.eps1 = if optional(value) {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "eps2" => {
                self.eps2 = if optional(value) {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "minibatch" => {
                self.minibatch = match value {
                    "" | "full" | "0" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "trajectories" => self.trajectories = parse(key, value)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "nvars" => self.custom.nvars = Some(parse(key, value)?),
            "a" => self.custom.a = Some(value.to_string()),
            "b" => self.custom.b = Some(value.to_string()),
            "z" => self.custom.z = Some(value.to_string()),
            "expert" => self.custom.expert = Some(value.to_string()),
            _ => return Err(Error::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Output directory: the configured one, else `$SOSIL_OUT`, else
    /// `sosil-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must be nonempty".into()));
        }
        if self.n_samples.is_empty() || self.n_samples.contains(&0) {
            return Err(Error::InvalidConfig(
                "n_samples must be nonempty and positive".into(),
            ));
        }
        if !(self.sigma >= 0.0 && self.init_halfwidth > 0.0 && self.data_halfwidth > 0.0) {
            return Err(Error::InvalidConfig(
                "sigma must be non-negative and half-widths positive".into(),
            ));
        }
        if self.rho.is_some_and(|r| !(r > 0.0)) {
            return Err(Error::InvalidConfig("rho must be positive".into()));
        }
        if self.alpha.is_some_and(|a| !(a > 0.0)) {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if self.minibatch == Some(0) {
            return Err(Error::InvalidConfig("minibatch must be positive".into()));
        }
        Ok(())
    }
}

/// A config with every default filled in from the experiment definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub n_samples: Vec<usize>,
    pub iterations: usize,
    pub rho: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub init_halfwidth: f64,
    pub data_halfwidth: f64,
    pub d_f: u32,
    pub d_p: u32,
    pub eps: Epsilons,
    pub minibatch: Option<usize>,
    pub trajectories: usize,
    pub custom: CustomSystem,
}

impl ResolvedConfig {
    /// Canonical `key = value` text. Equal configs give equal text, and
    /// parsing the text back reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("experiment", self.experiment.name().into());
        line("algorithm", self.algorithm.name().into());
        line("seeds", join(&self.seeds));
        line("n_samples", join(&self.n_samples));
        line("iterations", self.iterations.to_string());
        line("rho", format!("{:?}", self.rho));
        line("alpha", format!("{:?}", self.alpha));
        line("sigma", format!("{:?}", self.sigma));
        line("init_halfwidth", format!("{:?}", self.init_halfwidth));
        line("data_halfwidth", format!("{:?}", self.data_halfwidth));
        line("d_f", self.d_f.to_string());
        line("d_p", self.d_p.to_string());
        line("eps1", format!("{:?}", self.eps.eps1));
        line("eps2", format!("{:?}", self.eps.eps2));
        line(
            "minibatch",
            self.minibatch
                .map_or_else(|| "full".to_string(), |b| b.to_string()),
        );
        line("trajectories", self.trajectories.to_string());
        if self.experiment == ExperimentKind::Custom {
            let c = &self.custom;
            line("nvars", c.nvars.map(|n| n.to_string()).unwrap_or_default());
            for (k, v) in [("a", &c.a), ("b", &c.b), ("z", &c.z), ("expert", &c.expert)] {
                line(k, v.clone().unwrap_or_default());
            }
        }
        s
    }
}
