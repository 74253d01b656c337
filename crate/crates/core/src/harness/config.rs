use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::flux::{FluxError, RateFunction, SpeedField};
use crate::fv::StepProfile;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("key {key}: {msg}")]
    Value { key: String, msg: String },
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Documentation of every accepted key, printed by `--help`.
pub const KEYS_HELP: &str = "\
config keys (flat key=value, '#' starts a comment):
  lambda          const:C | step:P0:V0,P1:V1,...      speed field (default step:0:2,0.5:1)
  rate            indicator | identity | table:0;G1;G2;...   rate g, last value repeats
  sigma           S          mollifier scale eps = N^-S in the particle system (default 0.5)
  mollify         true|false particle system uses mollified speeds (default true)
  profile         constant:C | piecewise:P0:V0,P1:V1,... | steady:ALPHA | table:V0;V1;...
  n_ladder        N1,N2,...  lattice sizes, strictly increasing (default 250,500,1000,2000)
  replicas        M          ensemble size, at least 2 (default 50)
  block           L | quarter   block radius, fixed or floor(N^(1/4)) (default 10)
  t               T          horizon (default 0.4)
  grid            CELLS      finite-volume cells (default 1024)
  bins            B          macro-cells for the L1 error (default 10)
  young_bins      B          macro-cells for the Young-measure estimate (default 5)
  seed            U64        master seed (default 1)
  out             DIR        output directory
  epsilon0        E          PDE mollifier scale, first level of the epsilon ladder (default 1/16)
  levels          K          number of epsilon levels (default 4)
  event_budget    EVENTS     cap on events per trajectory (default 1e9)
  snapshots       T1,T2,...  output times (default: t)
  alpha           A1,A2,...  flux levels for steady/couple (default 0.5)
  study           hydro | epsilon | both   what `hydro` runs (default hydro)
  audit_tolerance C          fail `audit` if the fitted constant exceeds C
  deterministic   true|false write wall_seconds as 0 (default false)
";

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSpec {
    Constant(f64),
    Piecewise(StepProfile),
    /// Steady state at this flux level.
    Steady(f64),
    /// Values on equal cells of `[0, 1)`.
    Table(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSchedule {
    Fixed(usize),
    /// `l = ⌊N^{1/4}⌋`.
    Quarter,
}

impl BlockSchedule {
    pub fn radius(self, n: usize) -> usize {
        match self {
            BlockSchedule::Fixed(l) => l,
            BlockSchedule::Quarter => (n as f64).powf(0.25).floor() as usize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    Hydro,
    Epsilon,
    Both,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub lambda: SpeedField,
    pub lambda_spec: String,
    pub rate: RateFunction,
    pub sigma: f64,
    pub mollify: bool,
    pub profile: ProfileSpec,
    pub n_ladder: Vec<usize>,
    pub replicas: usize,
    pub block: BlockSchedule,
    pub t: f64,
    pub grid: usize,
    pub bins: usize,
    pub young_bins: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub epsilon0: f64,
    pub levels: usize,
    pub event_budget: u64,
    pub snapshots: Vec<f64>,
    pub alphas: Vec<f64>,
    pub study: Study,
    pub audit_tolerance: Option<f64>,
    pub deterministic: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let lambda_spec = "step:0:2,0.5:1".to_string();
        Self {
            lambda: parse_lambda(&lambda_spec).expect("default speed"),
            lambda_spec,
            rate: RateFunction::Indicator,
            sigma: 0.5,
            mollify: true,
            profile: ProfileSpec::Piecewise(StepProfile::new(vec![(0.0, 1.0 / 3.0), (0.5, 2.0)]).unwrap()),
            n_ladder: vec![250, 500, 1000, 2000],
            replicas: 50,
            block: BlockSchedule::Fixed(10),
            t: 0.4,
            grid: 1024,
            bins: 10,
            young_bins: 5,
            seed: 1,
            out: None,
            epsilon0: 1.0 / 16.0,
            levels: 4,
            event_budget: 1_000_000_000,
            snapshots: Vec::new(),
            alphas: vec![0.5],
            study: Study::Hydro,
            audit_tolerance: None,
            deterministic: false,
        }
    }
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let v = v.trim();
    let x = match v.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| value_err(key, format!("bad number {v:?}")))?;
            let b: f64 = b.trim().parse().map_err(|_| value_err(key, format!("bad number {v:?}")))?;
            a / b
        }
        None => v.parse().map_err(|_| value_err(key, format!("bad number {v:?}")))?,
    };
    if !x.is_finite() {
        return Err(value_err(key, format!("non-finite number {v:?}")));
    }
    Ok(x)
}

fn parse_list<T, F: Fn(&str) -> Result<T, ConfigError>>(v: &str, sep: char, f: F) -> Result<Vec<T>, ConfigError> {
    v.split(sep).filter(|s| !s.trim().is_empty()).map(|s| f(s.trim())).collect()
}

fn parse_pairs(key: &str, v: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    parse_list(v, ',', |item| {
        let (p, x) = item
            .split_once(':')
            .ok_or_else(|| value_err(key, format!("expected POS:VALUE, got {item:?}")))?;
        Ok((parse_f64(key, p)?, parse_f64(key, x)?))
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(value_err(key, format!("expected true or false, got {other:?}"))),
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    let x = parse_f64(key, v)?;
    if x < 0.0 || x.fract() != 0.0 {
        return Err(value_err(key, format!("expected a nonnegative integer, got {v:?}")));
    }
    Ok(x as usize)
}

pub fn parse_lambda(v: &str) -> Result<SpeedField, ConfigError> {
    let (kind, rest) = v.split_once(':').ok_or_else(|| value_err("lambda", "expected const:C or step:..."))?;
    match kind {
        "const" => Ok(SpeedField::constant(parse_f64("lambda", rest)?)?),
        "step" => Ok(SpeedField::piecewise_constant(&parse_pairs("lambda", rest)?)?),
        other => Err(value_err("lambda", format!("unknown speed kind {other:?}"))),
    }
}

pub fn parse_rate(v: &str) -> Result<RateFunction, ConfigError> {
    match v.split_once(':') {
        None if v == "indicator" => Ok(RateFunction::Indicator),
        None if v == "identity" => Ok(RateFunction::Identity),
        Some(("table", rest)) => {
            let vals = parse_list(rest, ';', |s| parse_f64("rate", s))?;
            Ok(RateFunction::table(&vals)?)
        }
        _ => Err(value_err("rate", format!("unknown rate {v:?}"))),
    }
}

pub fn parse_profile(v: &str) -> Result<ProfileSpec, ConfigError> {
    let (kind, rest) = v.split_once(':').ok_or_else(|| value_err("profile", "expected KIND:ARGS"))?;
    match kind {
        "constant" => Ok(ProfileSpec::Constant(parse_f64("profile", rest)?)),
        "piecewise" => StepProfile::new(parse_pairs("profile", rest)?)
            .map(ProfileSpec::Piecewise)
            .ok_or_else(|| value_err("profile", "positions must increase within [0, 1)")),
        "steady" => Ok(ProfileSpec::Steady(parse_f64("profile", rest)?)),
        "table" => {
            let vals = parse_list(rest, ';', |s| parse_f64("profile", s))?;
            if vals.is_empty() {
                return Err(value_err("profile", "empty table"));
            }
            Ok(ProfileSpec::Table(vals))
        }
        other => Err(value_err("profile", format!("unknown profile kind {other:?}"))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Defaults overridden by the given text.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: i + 1, key },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "lambda" => {
                self.lambda = parse_lambda(v)?;
                self.lambda_spec = v.to_string();
            }
            "rate" => self.rate = parse_rate(v)?,
            "sigma" => self.sigma = parse_f64(key, v)?,
            "mollify" => self.mollify = parse_bool(key, v)?,
            "profile" => self.profile = parse_profile(v)?,
            "n_ladder" => self.n_ladder = parse_list(v, ',', |s| parse_usize(key, s))?,
            "replicas" => self.replicas = parse_usize(key, v)?,
            "block" => {
                self.block = if v == "quarter" {
                    BlockSchedule::Quarter
                } else {
                    BlockSchedule::Fixed(parse_usize(key, v)?)
                }
            }
            "t" => self.t = parse_f64(key, v)?,
            "grid" => self.grid = parse_usize(key, v)?,
            "bins" => self.bins = parse_usize(key, v)?,
            "young_bins" => self.young_bins = parse_usize(key, v)?,
            "seed" => self.seed = v.parse().map_err(|_| value_err(key, format!("bad seed {v:?}")))?,
            "out" => self.out = Some(PathBuf::from(v)),
            "epsilon0" => self.epsilon0 = parse_f64(key, v)?,
            "levels" => self.levels = parse_usize(key, v)?,
            "event_budget" => self.event_budget = parse_f64(key, v)? as u64,
            "snapshots" => self.snapshots = parse_list(v, ',', |s| parse_f64(key, s))?,
            "alpha" => self.alphas = parse_list(v, ',', |s| parse_f64(key, s))?,
            "study" => {
                self.study = match v {
                    "hydro" => Study::Hydro,
                    "epsilon" => Study::Epsilon,
                    "both" => Study::Both,
                    other => return Err(value_err(key, format!("unknown study {other:?}"))),
                }
            }
            "audit_tolerance" => self.audit_tolerance = Some(parse_f64(key, v)?),
            "deterministic" => self.deterministic = parse_bool(key, v)?,
            other => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_ladder.is_empty() || self.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(value_err("n_ladder", "must be nonempty and strictly increasing"));
        }
        if self.n_ladder[0] < 4 {
            return Err(value_err("n_ladder", "lattices need at least 4 sites"));
        }
        if self.replicas < 2 {
            return Err(value_err("replicas", "need at least 2"));
        }
        if !(self.t >= 0.0) {
            return Err(value_err("t", "must be nonnegative"));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(value_err("sigma", "must lie in (0, 1)"));
        }
        if self.grid == 0 || self.bins == 0 || self.young_bins == 0 || self.levels == 0 {
            return Err(value_err("grid", "grid, bins, young_bins and levels must be positive"));
        }
        if !(self.epsilon0 > 0.0) {
            return Err(value_err("epsilon0", "must be positive"));
        }
        if self.snapshots.windows(2).any(|w| w[0] > w[1]) || self.snapshots.iter().any(|&s| s < 0.0) {
            return Err(value_err("snapshots", "must be nonnegative and nondecreasing"));
        }
        for &n in &self.n_ladder {
            if 2 * self.block.radius(n) + 1 > n {
                return Err(value_err("block", format!("radius too large for N = {n}")));
            }
        }
        Ok(())
    }

    /// Output times, defaulting to the horizon.
    pub fn output_times(&self) -> Vec<f64> {
        if self.snapshots.is_empty() {
            vec![self.t]
        } else {
            self.snapshots.clone()
        }
    }
}
