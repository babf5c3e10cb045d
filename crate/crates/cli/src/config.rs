//! `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Lists are comma separated. Unknown keys, duplicates and malformed values
//! are errors carrying the 1-based line number.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use mipt_core::Boundary;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config{}: {message}", line.map_or(String::new(), |l| format!(" line {l}")))]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SingleComplete,
    SinglePostselected,
    Doubled,
    Trajectories,
}

/// What the output file tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Report {
    /// `t,gamma,L_A,value`.
    Series,
    /// `sweep_var,gamma,value,stderr` with `sweep_var = L_A`.
    SaturationVsSubsystem,
    /// `sweep_var,gamma,value,stderr` with `sweep_var = n_sites`.
    SaturationVsSites,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }

        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(format!(
                        "unknown value '{other}' (expected one of: {})",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

keyword_enum!(Mode {
    SingleComplete => "single-complete",
    SinglePostselected => "single-postselected",
    Doubled => "doubled",
    Trajectories => "trajectories",
});

keyword_enum!(Report {
    Series => "series",
    SaturationVsSubsystem => "saturation-vs-subsystem",
    SaturationVsSites => "saturation-vs-sites",
});

fn boundary_str(b: Boundary) -> &'static str {
    match b {
        Boundary::Open => "open",
        Boundary::Periodic => "periodic",
    }
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    match s {
        "open" => Ok(Boundary::Open),
        "periodic" => Ok(Boundary::Periodic),
        other => Err(format!("unknown boundary '{other}' (expected open or periodic)")),
    }
}

/// Largest single-copy dimension accepted per mode, checked before any
/// allocation.
pub const MAX_DOUBLED_DIM: usize = 35;
pub const MAX_SINGLE_DIM: usize = 924;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub n_sites: usize,
    pub n_bosons: usize,
    pub j: f64,
    pub u: f64,
    pub boundary: Boundary,
    pub gamma: Vec<f64>,
    pub initial_state: String,
    pub subsystem: Vec<usize>,
    pub t_total: f64,
    pub n_steps: usize,
    pub check_every: usize,
    /// `None` keeps every channel.
    pub retained_channels: Option<usize>,
    pub n_trajectories: usize,
    pub seed: u64,
    pub report: Report,
    pub output_path: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Doubled,
            n_sites: 6,
            n_bosons: 3,
            j: 1.0,
            u: 1.0,
            boundary: Boundary::Open,
            gamma: vec![1.0],
            initial_state: "000111".into(),
            subsystem: vec![3],
            t_total: 30.0,
            n_steps: 11_000,
            check_every: 100,
            retained_channels: None,
            n_trajectories: 1000,
            seed: 0,
            report: Report::Series,
            output_path: PathBuf::from("out.csv"),
        }
    }
}

const KEYS: &[&str] = &[
    "mode",
    "n_sites",
    "n_bosons",
    "j",
    "u",
    "boundary",
    "gamma",
    "initial_state",
    "subsystem",
    "t_total",
    "n_steps",
    "check_every",
    "retained_channels",
    "n_trajectories",
    "seed",
    "report",
    "output_path",
];

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError::at(line, format!("{key}: cannot parse '{value}': {e}")))
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .map(|s| parse_value(line, key, s.trim()))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::at(line, format!("{key}: empty list")));
    }
    Ok(items)
}

fn keyword<T>(line: usize, key: &str, parsed: Result<T, String>) -> Result<T, ConfigError> {
    parsed.map_err(|e| ConfigError::at(line, format!("{key}: {e}")))
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses and validates a configuration; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected 'key = value', found '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::at(line, format!("unknown key '{key}'")));
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::at(line, format!("duplicate key '{key}'")));
        }
        match key {
            "mode" => cfg.mode = keyword(line, key, value.parse())?,
            "n_sites" => cfg.n_sites = parse_value(line, key, value)?,
            "n_bosons" => cfg.n_bosons = parse_value(line, key, value)?,
            "j" => cfg.j = parse_value(line, key, value)?,
            "u" => cfg.u = parse_value(line, key, value)?,
            "boundary" => cfg.boundary = keyword(line, key, parse_boundary(value))?,
            "gamma" => cfg.gamma = parse_list(line, key, value)?,
            "initial_state" => cfg.initial_state = value.to_string(),
            "subsystem" => cfg.subsystem = parse_list(line, key, value)?,
            "t_total" => cfg.t_total = parse_value(line, key, value)?,
            "n_steps" => cfg.n_steps = parse_value(line, key, value)?,
            "check_every" => cfg.check_every = parse_value(line, key, value)?,
            "retained_channels" => {
                cfg.retained_channels = if value == "all" {
                    None
                } else {
                    Some(parse_value(line, key, value)?)
                }
            }
            "n_trajectories" => cfg.n_trajectories = parse_value(line, key, value)?,
            "seed" => cfg.seed = parse_value(line, key, value)?,
            "report" => cfg.report = keyword(line, key, value.parse())?,
            "output_path" => {
                if value.is_empty() {
                    return Err(ConfigError::at(line, "output_path: empty path"));
                }
                cfg.output_path = PathBuf::from(value)
            }
            _ => unreachable!("key list and match arms agree"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

impl RunConfig {
    /// Cross-field checks; run before anything is allocated.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::global(m));
        if self.n_sites == 0 || self.n_sites > 63 {
            return bad(format!("n_sites = {} out of range 1..=63", self.n_sites));
        }
        if self.n_bosons > self.n_sites {
            return bad(format!(
                "n_bosons = {} exceeds n_sites = {}",
                self.n_bosons, self.n_sites
            ));
        }
        if self.initial_state.len() != self.n_sites {
            return bad(format!(
                "initial_state '{}' has length {}, expected n_sites = {}",
                self.initial_state,
                self.initial_state.len(),
                self.n_sites
            ));
        }
        if let Some(c) = self.initial_state.chars().find(|c| *c != '0' && *c != '1') {
            return bad(format!("initial_state contains '{c}'; only 0 and 1 are allowed"));
        }
        let ones = self.initial_state.chars().filter(|&c| c == '1').count();
        if ones != self.n_bosons {
            return bad(format!(
                "initial_state has {ones} occupied sites, expected n_bosons = {}",
                self.n_bosons
            ));
        }
        let dim = binomial(self.n_sites, self.n_bosons);
        let limit = match self.mode {
            Mode::Doubled => MAX_DOUBLED_DIM,
            _ => MAX_SINGLE_DIM,
        };
        if dim > limit {
            return bad(format!(
                "{} sites with {} bosons give dimension {dim}; mode {} allows at most {limit}",
                self.n_sites,
                self.n_bosons,
                self.mode.as_str()
            ));
        }
        if !(self.j.is_finite() && self.u.is_finite()) {
            return bad("j and u must be finite".into());
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return bad(format!("gamma = {g} must be finite and nonnegative"));
        }
        if let Some(l) = self.subsystem.iter().find(|&&l| l == 0 || l >= self.n_sites) {
            return bad(format!("subsystem L_A = {l} must satisfy 0 < L_A < n_sites"));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return bad(format!("t_total = {} must be positive", self.t_total));
        }
        if self.n_steps == 0 || self.check_every == 0 {
            return bad("n_steps and check_every must be positive".into());
        }
        if let Some(m) = self.retained_channels {
            if m == 0 || m > 2 * self.n_sites {
                return bad(format!("retained_channels = {m} must lie in 1..={}", 2 * self.n_sites));
            }
        }
        if self.mode == Mode::Trajectories {
            let dt = self.t_total / self.n_steps as f64;
            if let Some(g) = self.gamma.iter().find(|&&g| g * dt >= 0.1) {
                return bad(format!("gamma * dt = {} must stay below 0.1", g * dt));
            }
            if self.n_trajectories == 0 {
                return bad("n_trajectories must be positive".into());
            }
            if self.report != Report::Series && self.n_trajectories < 2 {
                return bad("saturation reports need at least two trajectories".into());
            }
        }
        Ok(())
    }

    /// Config text that [`parse_config`] maps back to `self`.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("mode", self.mode.as_str().into());
        put("n_sites", self.n_sites.to_string());
        put("n_bosons", self.n_bosons.to_string());
        put("j", self.j.to_string());
        put("u", self.u.to_string());
        put("boundary", boundary_str(self.boundary).into());
        put("gamma", join(&self.gamma));
        put("initial_state", self.initial_state.clone());
        put("subsystem", join(&self.subsystem));
        put("t_total", self.t_total.to_string());
        put("n_steps", self.n_steps.to_string());
        put("check_every", self.check_every.to_string());
        put(
            "retained_channels",
            self.retained_channels.map_or("all".into(), |m| m.to_string()),
        );
        put("n_trajectories", self.n_trajectories.to_string());
        put("seed", self.seed.to_string());
        put("report", self.report.as_str().into());
        put("output_path", self.output_path.display().to_string());
        s
    }
}
