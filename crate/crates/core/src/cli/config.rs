//! Flat `key = value` experiment configuration.
//!
//! Values are layered: per-subcommand defaults, then an optional config
//! file, then command-line flags. Every key accepted in a file is also a
//! flag (`n_p` ↔ `--n-p`).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exponents::Estimator;
use crate::linear::Matrix2;

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "TWISTLAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    RandomExact,
    RandomMc,
    LambdaScan,
    Diffused,
    FixedPoints,
    BifurcationMap,
    DoubleZeroCurves,
    MegnoDemo,
    LinearCheck,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::RandomExact,
        Command::RandomMc,
        Command::LambdaScan,
        Command::Diffused,
        Command::FixedPoints,
        Command::BifurcationMap,
        Command::DoubleZeroCurves,
        Command::MegnoDemo,
        Command::LinearCheck,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::RandomExact => "random-exact",
            Command::RandomMc => "random-mc",
            Command::LambdaScan => "lambda-scan",
            Command::Diffused => "diffused",
            Command::FixedPoints => "fixed-points",
            Command::BifurcationMap => "bifurcation-map",
            Command::DoubleZeroCurves => "double-zero-curves",
            Command::MegnoDemo => "megno-demo",
            Command::LinearCheck => "linear-check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Command> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand `{s}`")))
    }
}

/// Every configuration key, in echo order.
pub const KEYS: &[&str] = &[
    "eps",
    "n",
    "m",
    "n_p",
    "n_g",
    "m_r",
    "m_p",
    "delta",
    "seed",
    "estimator",
    "transient",
    "beta",
    "theta",
    "theta_cells",
    "beta_cells",
    "theta_min",
    "theta_max",
    "beta_min",
    "beta_max",
    "samples",
    "matrix",
    "n_alpha",
    "n_z",
    "threads",
    "out",
];

/// Keys that cannot change any numeric output and are left out of the hash.
const UNHASHED: &[&str] = &["threads", "out"];

/// Settings for one run. The meaning of `n` and `m` depends on the
/// subcommand: steps and runs for Monte Carlo, iterates for orbits.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub eps: Vec<f64>,
    pub n: u64,
    pub m: u64,
    pub n_p: u64,
    pub n_g: u64,
    pub m_r: u64,
    pub m_p: u64,
    pub delta: f64,
    pub seed: u64,
    pub estimator: Estimator,
    pub transient: u64,
    pub beta: f64,
    pub theta: f64,
    pub theta_cells: u64,
    pub beta_cells: u64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub samples: u64,
    pub matrix: [f64; 4],
    pub n_alpha: u64,
    pub n_z: u64,
    pub threads: u64,
    pub out: PathBuf,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(key: &str, v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("`{key}` expects a number, got `{v}`"))?;
    if !x.is_finite() {
        return Err(format!("`{key}` must be finite, got `{v}`"));
    }
    Ok(x)
}

fn parse_u64(key: &str, v: &str) -> std::result::Result<u64, String> {
    let v = v.trim().replace('_', "");
    if let Ok(x) = v.parse::<u64>() {
        return Ok(x);
    }
    // Accept exact scientific notation such as 1e6.
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("`{key}` expects a non-negative integer, got `{v}`")),
    }
}

/// ε values: a comma-separated list, or `log:LO:HI:COUNT` for COUNT
/// log-spaced values including both ends.
pub fn parse_eps_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    let v = v.trim();
    let list = if let Some(rest) = v.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("`eps` log range must be log:LO:HI:COUNT, got `{v}`"));
        }
        let lo = parse_f64("eps", parts[0])?;
        let hi = parse_f64("eps", parts[1])?;
        let count = parse_u64("eps", parts[2])?;
        if !(lo > 0.0 && hi >= lo) || count < 2 {
            return Err(format!("`eps` log range needs 0 < LO ≤ HI and COUNT ≥ 2, got `{v}`"));
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..count)
            .map(|i| {
                if i == 0 {
                    lo
                } else if i == count - 1 {
                    hi
                } else {
                    (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                }
            })
            .collect()
    } else {
        v.split(',')
            .map(|s| parse_f64("eps", s))
            .collect::<std::result::Result<Vec<f64>, String>>()?
    };
    if list.is_empty() {
        return Err("`eps` must list at least one value".into());
    }
    if let Some(bad) = list.iter().find(|e| **e < 0.0) {
        return Err(format!("`eps` values must be ≥ 0, got {bad}"));
    }
    Ok(list)
}

fn parse_matrix(v: &str) -> std::result::Result<[f64; 4], String> {
    let xs: Vec<f64> = v
        .split(',')
        .map(|s| parse_f64("matrix", s))
        .collect::<std::result::Result<_, _>>()?;
    xs.try_into()
        .map_err(|_| format!("`matrix` expects four entries a,b,c,d, got `{v}`"))
}

impl ExperimentConfig {
    /// Defaults sized for a run of seconds to a minute.
    pub fn defaults(command: Command) -> ExperimentConfig {
        let out = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("twistlab-out"));
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get()) as u64;
        let (n, m) = match command {
            Command::RandomMc => (100_000, 16),
            Command::Diffused => (100_000, 1),
            Command::LambdaScan => (1, 1024),
            Command::MegnoDemo => (8192, 1),
            _ => (1, 1),
        };
        ExperimentConfig {
            command,
            eps: vec![0.3],
            n,
            m,
            n_p: 8,
            n_g: 8,
            m_r: 8,
            m_p: 2,
            delta: 0.3,
            seed: 1,
            estimator: Estimator::MegnoImproved,
            transient: crate::experiments::DEFAULT_TRANSIENT,
            beta: 0.3,
            theta: 2.0,
            theta_cells: 64,
            beta_cells: 64,
            theta_min: 0.0,
            theta_max: std::f64::consts::TAU,
            beta_min: 0.0,
            beta_max: std::f64::consts::FRAC_PI_2,
            samples: 1001,
            matrix: [2.0, 0.0, 0.0, 0.5],
            n_alpha: 64,
            n_z: 128,
            threads,
            out,
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "eps" => self.eps = parse_eps_list(v)?,
            "n" => self.n = parse_u64(key, v)?,
            "m" => self.m = parse_u64(key, v)?,
            "n_p" => self.n_p = parse_u64(key, v)?,
            "n_g" => self.n_g = parse_u64(key, v)?,
            "m_r" => self.m_r = parse_u64(key, v)?,
            "m_p" => self.m_p = parse_u64(key, v)?,
            "delta" => self.delta = parse_f64(key, v)?,
            "seed" => self.seed = parse_u64(key, v)?,
            "estimator" => self.estimator = v.parse().map_err(|e: Error| e.to_string())?,
            "transient" => self.transient = parse_u64(key, v)?,
            "beta" => self.beta = parse_f64(key, v)?,
            "theta" => self.theta = parse_f64(key, v)?,
            "theta_cells" => self.theta_cells = parse_u64(key, v)?,
            "beta_cells" => self.beta_cells = parse_u64(key, v)?,
            "theta_min" => self.theta_min = parse_f64(key, v)?,
            "theta_max" => self.theta_max = parse_f64(key, v)?,
            "beta_min" => self.beta_min = parse_f64(key, v)?,
            "beta_max" => self.beta_max = parse_f64(key, v)?,
            "samples" => self.samples = parse_u64(key, v)?,
            "matrix" => self.matrix = parse_matrix(v)?,
            "n_alpha" => self.n_alpha = parse_u64(key, v)?,
            "n_z" => self.n_z = parse_u64(key, v)?,
            "threads" => self.threads = parse_u64(key, v)?,
            "out" => {
                if v.is_empty() {
                    return Err("`out` must not be empty".into());
                }
                self.out = PathBuf::from(v)
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Text form of one key; `set(key, get(key))` is the identity.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "eps" => self.eps.iter().map(|e| fmt_f64(*e)).collect::<Vec<_>>().join(","),
            "n" => self.n.to_string(),
            "m" => self.m.to_string(),
            "n_p" => self.n_p.to_string(),
            "n_g" => self.n_g.to_string(),
            "m_r" => self.m_r.to_string(),
            "m_p" => self.m_p.to_string(),
            "delta" => fmt_f64(self.delta),
            "seed" => self.seed.to_string(),
            "estimator" => self.estimator.as_str().to_string(),
            "transient" => self.transient.to_string(),
            "beta" => fmt_f64(self.beta),
            "theta" => fmt_f64(self.theta),
            "theta_cells" => self.theta_cells.to_string(),
            "beta_cells" => self.beta_cells.to_string(),
            "theta_min" => fmt_f64(self.theta_min),
            "theta_max" => fmt_f64(self.theta_max),
            "beta_min" => fmt_f64(self.beta_min),
            "beta_max" => fmt_f64(self.beta_max),
            "samples" => self.samples.to_string(),
            "matrix" => self.matrix.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","),
            "n_alpha" => self.n_alpha.to_string(),
            "n_z" => self.n_z.to_string(),
            "threads" => self.threads.to_string(),
            "out" => self.out.display().to_string(),
            _ => return None,
        })
    }

    /// Applies a config file; errors carry the file name and line number.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        self.apply_text(&text)
            .map_err(|e| Error::Config(format!("{}:{e}", path.display())))
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> std::result::Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("{lineno}: expected `key = value`, got `{line}`"))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(format!("{lineno}: duplicate key `{k}`"));
            }
            self.set(k, v).map_err(|e| format!("{lineno}: {e}"))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("m", self.m),
            ("n_p", self.n_p),
            ("n_g", self.n_g),
            ("m_r", self.m_r),
            ("m_p", self.m_p),
            ("theta_cells", self.theta_cells),
            ("beta_cells", self.beta_cells),
            ("samples", self.samples),
            ("n_alpha", self.n_alpha),
            ("n_z", self.n_z),
            ("threads", self.threads),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("`{k}` must be ≥ 1")));
            }
        }
        if self.n_g % 2 != 0 {
            return Err(Error::Config(format!(
                "`n_g` must be an even number of Simpson intervals, got {}",
                self.n_g
            )));
        }
        if !(self.delta > 0.0 && self.delta <= std::f64::consts::TAU) {
            return Err(Error::Config(format!("`delta` must lie in (0, 2π], got {}", self.delta)));
        }
        if !(self.theta_min < self.theta_max && self.beta_min < self.beta_max) {
            return Err(Error::Config("parameter window must have min < max".into()));
        }
        Ok(())
    }

    /// `(key, value)` for every key, in [`KEYS`] order.
    pub fn echo(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .map(|k| (k.to_string(), self.get(k).expect("listed key")))
            .collect()
    }

    /// SHA-256 of the subcommand and every key that affects results.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_str().as_bytes());
        h.update(b"\n");
        for (k, v) in self.echo() {
            if UNHASHED.contains(&k.as_str()) {
                continue;
            }
            h.update(format!("{k}={v}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn linear_matrix(&self) -> Matrix2 {
        let [a, b, c, d] = self.matrix;
        Matrix2::new(a, b, c, d)
    }
}
