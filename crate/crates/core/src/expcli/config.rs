use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    GroundState,
    Dichotomy,
    VirialCheck,
    Inequalities,
    MassCurve,
    SpectralCheck,
    PlotData,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::GroundState,
        Command::Dichotomy,
        Command::VirialCheck,
        Command::Inequalities,
        Command::MassCurve,
        Command::SpectralCheck,
        Command::PlotData,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::GroundState => "groundstate",
            Command::Dichotomy => "dichotomy",
            Command::VirialCheck => "virial-check",
            Command::Inequalities => "inequalities",
            Command::MassCurve => "mass-curve",
            Command::SpectralCheck => "spectral-check",
            Command::PlotData => "plotdata",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| config_err(format!("unknown command `{s}`")))
    }
}

/// Resolution presets. `Mid` sits between the two published tiers so that a
/// three-level convergence order can be measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Quick,
    Mid,
    Production,
}

impl Tier {
    pub fn name(self) -> &'static str {
        match self {
            Tier::Quick => "quick",
            Tier::Mid => "mid",
            Tier::Production => "production",
        }
    }

    pub fn r_max(self) -> f64 {
        20.0
    }

    pub fn points(self) -> usize {
        match self {
            Tier::Quick => 2000,
            Tier::Mid => 4000,
            Tier::Production => 8000,
        }
    }

    pub fn dt(self) -> f64 {
        match self {
            Tier::Quick => 2e-3,
            Tier::Mid => 1e-3,
            Tier::Production => 5e-4,
        }
    }

    pub fn horizon(self) -> f64 {
        match self {
            Tier::Quick | Tier::Mid => 3.0,
            Tier::Production => 10.0,
        }
    }
}

impl FromStr for Tier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Tier::Quick),
            "mid" => Ok(Tier::Mid),
            "production" => Ok(Tier::Production),
            _ => Err(config_err(format!("unknown tier `{s}` (quick | mid | production)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(config_err(format!("unknown format `{s}` (csv | json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Diagnostics,
    Profile,
    Spectrum,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Diagnostics => "diagnostics",
            PlotKind::Profile => "profile",
            PlotKind::Spectrum => "spectrum",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagnostics" => Ok(PlotKind::Diagnostics),
            "profile" => Ok(PlotKind::Profile),
            "spectrum" => Ok(PlotKind::Spectrum),
            _ => Err(config_err(format!("unknown plot kind `{s}` (diagnostics | profile | spectrum)"))),
        }
    }
}

/// Flat parameter record shared by every subcommand. Unset grid and integrator
/// fields fall back to the tier.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n: usize,
    pub p: f64,
    pub lambda: f64,
    pub tier: Tier,
    pub rmax: Option<f64>,
    pub points: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    pub kind: Option<PlotKind>,
    pub input: Option<PathBuf>,
    /// Test hook: negate the quartic before scanning it.
    pub inject_sign_flip: bool,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| config_err(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_num(key, value)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(config_err(format!("`{key}` must be positive and finite, got {value}")));
    }
    Ok(v)
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            n: 3,
            p: 3.0,
            lambda: 0.0,
            tier: Tier::Quick,
            rmax: None,
            points: None,
            dt: None,
            horizon: None,
            alphas: Vec::new(),
            seed: 0,
            out: PathBuf::from("out"),
            format: Format::Csv,
            kind: None,
            input: None,
            inject_sign_flip: false,
        }
    }

    /// Set one key from its textual value. `alpha` accepts a comma list and appends.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "n" => self.n = parse_num(key, value)?,
            "p" => self.p = parse_positive(key, value)?,
            "lambda" => {
                let v: f64 = parse_num(key, value)?;
                if !v.is_finite() {
                    return Err(config_err("`lambda` must be finite"));
                }
                self.lambda = v;
            }
            "tier" => self.tier = value.parse()?,
            "rmax" => self.rmax = Some(parse_positive(key, value)?),
            "points" => {
                let v: usize = parse_num(key, value)?;
                if v == 0 {
                    return Err(config_err("`points` must be positive"));
                }
                self.points = Some(v);
            }
            "dt" => self.dt = Some(parse_positive(key, value)?),
            "horizon" => self.horizon = Some(parse_positive(key, value)?),
            "alpha" => {
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    self.alphas.push(parse_positive(key, item)?);
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "format" => self.format = value.parse()?,
            "kind" => self.kind = Some(value.parse()?),
            "input" => self.input = Some(PathBuf::from(value)),
            "inject_sign_flip" => self.inject_sign_flip = parse_num(key, value)?,
            _ => return Err(config_err(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| config_err(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if key == "config" {
                return Err(config_err(format!("line {}: config files do not nest", lineno + 1)));
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn r_max(&self) -> f64 {
        self.rmax.unwrap_or(self.tier.r_max())
    }

    pub fn points(&self) -> usize {
        self.points.unwrap_or(self.tier.points())
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(self.tier.dt())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(self.tier.horizon())
    }

    /// Canonical `key=value` lines for everything that affects the numbers. Output
    /// location and file format are left out, and so is the alpha list: rows carry
    /// their own alpha, so reports over the same physics and grid can be merged.
    pub fn canonical(&self) -> String {
        let mut lines = vec![
            format!("command={}", self.command.name()),
            format!("n={}", self.n),
            format!("p={}", self.p),
            format!("lambda={}", self.lambda),
            format!("tier={}", self.tier.name()),
            format!("rmax={}", opt(self.rmax)),
            format!("points={}", opt(self.points)),
            format!("dt={}", opt(self.dt)),
            format!("horizon={}", opt(self.horizon)),
            format!("seed={}", self.seed),
            format!("inject_sign_flip={}", self.inject_sign_flip),
        ];
        if let Some(k) = self.kind {
            lines.push(format!("kind={}", k.name()));
        }
        if let Some(i) = &self.input {
            lines.push(format!("input={}", i.display()));
        }
        lines.sort();
        lines.join("\n") + "\n"
    }

    /// SHA-256 of [`ExperimentConfig::canonical`], hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Full config as a flat text that [`ExperimentConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = self.canonical().lines().filter(|l| !l.starts_with("command=")).fold(String::new(), |mut acc, l| {
            if !l.ends_with('=') {
                acc.push_str(l);
                acc.push('\n');
            }
            acc
        });
        if !self.alphas.is_empty() {
            let list: Vec<String> = self.alphas.iter().map(|a| a.to_string()).collect();
            s.push_str(&format!("alpha={}\n", list.join(",")));
        }
        s.push_str(&format!("format={}\nout={}\n", self.format.extension(), self.out.display()));
        s
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_and_digest() {
        let mut c = ExperimentConfig::new(Command::Dichotomy);
        c.apply_text("n = 2\n# comment\nalpha=0.5, 1.1\nalpha=1.5\ndt=0.001 # trailing\ntier=production\n").unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.alphas, vec![0.5, 1.1, 1.5]);
        assert_eq!(c.dt(), 1e-3);
        assert_eq!(c.points(), 8000);
        let mut d = ExperimentConfig::new(Command::Dichotomy);
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.digest(), d.digest());
        d.out = PathBuf::from("elsewhere");
        d.format = Format::Json;
        assert_eq!(c.digest(), d.digest());
        d.set("seed", "7").unwrap();
        assert_ne!(c.digest(), d.digest());
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = ExperimentConfig::new(Command::GroundState);
        assert!(c.set("dt", "-1").is_err());
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("tier", "huge").is_err());
        assert!(c.apply_text("n 3").is_err());
        assert!(c.apply_text("config=x").is_err());
    }
}
