//! Flat `key = value` run configuration.

use std::path::PathBuf;
use std::str::FromStr;

use rbsp_core::decoy_bounds::validate_protocol;
use rbsp_core::{reference, ChannelParams, DecoyProtocol, ErrorModel, GainMode, HeraldingDetector, SourceModel};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Wcp,
    Hsps,
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "wcp" => Ok(Self::Wcp),
            "hsps" => Ok(Self::Hsps),
            other => Err(format!("unknown source `{other}` (expected wcp or hsps)")),
        }
    }
}

fn parse_mode(s: &str) -> Result<GainMode, String> {
    match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "exact" => Ok(GainMode::Exact),
        "paperapprox" | "approx" => Ok(GainMode::PaperApprox),
        other => Err(format!("unknown mode `{other}` (expected exact or paper-approx)")),
    }
}

pub fn mode_name(mode: GainMode) -> &'static str {
    match mode {
        GainMode::Exact => "exact",
        GainMode::PaperApprox => "paper-approx",
    }
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
            if step <= 0.0 || stop < start {
                return Err(format!("range `{s}` needs start <= stop and a positive step"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| start + k as f64 * step).collect())
        }
        [_] => s.split(',').map(|v| parse_f64(v.trim())).collect(),
        _ => Err(format!("`{s}` is neither a list nor start:stop:step")),
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_int<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

/// Parameters of one run. Defaults are the reference link with a WCP source.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: SourceKind,
    pub mu: Option<f64>,
    pub mu_grid: Option<Vec<f64>>,
    pub eta_a: f64,
    pub dark_a: f64,
    /// Time-multiplexed detector modes `X`.
    pub modes: u32,
    pub alpha: f64,
    pub length: f64,
    pub lengths: Option<Vec<f64>>,
    pub t_s: f64,
    pub eta_s: f64,
    pub y0: f64,
    pub v1: f64,
    pub v2: f64,
    pub p_mu: f64,
    pub eps_over_s: f64,
    pub size: u64,
    pub mode: GainMode,
    pub e0: f64,
    pub e_d: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let err = ErrorModel::default();
        Self {
            source: SourceKind::Wcp,
            mu: None,
            mu_grid: None,
            eta_a: reference::HERALD_EFFICIENCY,
            dark_a: reference::HERALD_DARK_RATE,
            modes: 1 << HeraldingDetector::DEFAULT_STAGES,
            alpha: reference::LOSS_DB_PER_KM,
            length: reference::LENGTH_KM,
            lengths: None,
            t_s: reference::SERVER_TRANSMITTANCE,
            eta_s: reference::SERVER_EFFICIENCY,
            y0: reference::DARK_COUNT,
            v1: reference::V1,
            v2: reference::V2,
            p_mu: reference::P_MU,
            eps_over_s: reference::EPS_OVER_S,
            size: 1,
            mode: GainMode::Exact,
            e0: err.vacuum,
            e_d: err.detection,
            seed: 0,
            output: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "source",
    "mu",
    "mu_grid",
    "eta_a",
    "dark_a",
    "modes",
    "alpha",
    "length",
    "lengths",
    "t_s",
    "eta_s",
    "y0",
    "v1",
    "v2",
    "p_mu",
    "eps_over_s",
    "size",
    "mode",
    "e0",
    "e_d",
    "seed",
    "output",
];

impl RunConfig {
    /// Reads `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut errors = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = cfg.set(k.trim(), v.trim()) {
                        errors.push(format!("line {}: {e}", n + 1));
                    }
                }
                None => errors.push(format!("line {}: expected key = value", n + 1)),
            }
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(CliError::Validation(errors))
        }
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), CliError> {
        let mut errors = Vec::new();
        for o in overrides {
            let o = o.as_ref();
            match o.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = self.set(k.trim(), v.trim()) {
                        errors.push(format!("--set {o}: {e}"));
                    }
                }
                None => errors.push(format!("--set {o}: expected key=value")),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors))
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "source" => self.source = value.parse()?,
            "mu" => self.mu = Some(parse_f64(value)?),
            "mu_grid" => self.mu_grid = Some(parse_list(value)?),
            "eta_a" => self.eta_a = parse_f64(value)?,
            "dark_a" => self.dark_a = parse_f64(value)?,
            "modes" => self.modes = parse_int(value)?,
            "alpha" => self.alpha = parse_f64(value)?,
            "length" => self.length = parse_f64(value)?,
            "lengths" => self.lengths = Some(parse_list(value)?),
            "t_s" => self.t_s = parse_f64(value)?,
            "eta_s" => self.eta_s = parse_f64(value)?,
            "y0" => self.y0 = parse_f64(value)?,
            "v1" => self.v1 = parse_f64(value)?,
            "v2" => self.v2 = parse_f64(value)?,
            "p_mu" => self.p_mu = parse_f64(value)?,
            "eps_over_s" => self.eps_over_s = parse_f64(value)?,
            "size" => self.size = parse_int(value)?,
            "mode" => self.mode = parse_mode(value)?,
            "e0" => self.e0 = parse_f64(value)?,
            "e_d" => self.e_d = parse_f64(value)?,
            "seed" => self.seed = parse_int(value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key `{other}` (known: {})", KEYS.join(", "))),
        }
        Ok(())
    }

    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            loss_db_per_km: self.alpha,
            length_km: self.length,
            server_transmittance: self.t_s,
            server_efficiency: self.eta_s,
            dark_count: self.y0,
        }
    }

    /// Protocol at `mu`, or at zero if no intensity is set.
    pub fn protocol(&self) -> DecoyProtocol {
        DecoyProtocol::new(self.mu.unwrap_or(0.0), self.v1, self.v2, self.p_mu, self.eps_over_s)
    }

    pub fn error_model(&self) -> ErrorModel {
        ErrorModel { vacuum: self.e0, detection: self.e_d }
    }

    pub fn source_model(&self) -> Result<SourceModel, CliError> {
        let mean = self.mu.unwrap_or(0.0);
        let source = match self.source {
            SourceKind::Wcp => SourceModel::wcp(mean),
            SourceKind::Hsps => {
                SourceModel::hsps(mean, HeraldingDetector::with_modes(self.modes, self.eta_a, self.dark_a)?)
            }
        };
        Ok(source?)
    }

    /// Checks everything a sweep needs. With `need_mu` the scalar intensity
    /// must be present and form a valid decoy protocol.
    pub fn validate(&self, need_mu: bool) -> Result<(), CliError> {
        let mut errors = Vec::new();
        if let Err(e) = self.channel().validate() {
            errors.push(e.to_string());
        }
        if self.source == SourceKind::Hsps {
            if let Err(e) = HeraldingDetector::with_modes(self.modes, self.eta_a, self.dark_a) {
                errors.push(e.to_string());
            }
        }
        if self.size == 0 {
            errors.push("size must be at least 1".into());
        }
        for (name, v) in [("e0", self.e0), ("e_d", self.e_d)] {
            if !(0.0..=1.0).contains(&v) {
                errors.push(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if let Some(ls) = &self.lengths {
            if let Some(l) = ls.iter().find(|l| **l < 0.0) {
                errors.push(format!("length {l} km is negative"));
            }
        }
        let protocol = self.protocol();
        let violations = validate_protocol(&protocol);
        if need_mu {
            match self.mu {
                None => errors.push("mu is required".into()),
                Some(_) => errors.extend(violations.iter().map(ToString::to_string)),
            }
        } else {
            // Without an intensity only the decoy part of the protocol is checked.
            let probe = protocol.with_mu(f64::MAX.sqrt());
            errors.extend(validate_protocol(&probe).iter().map(ToString::to_string));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors))
        }
    }
}
