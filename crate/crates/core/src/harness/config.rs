//! Run configuration: JSON, `"schema": 1`, complex numbers as `[re, im]`.

use crate::gauge::{GaugeIndexWindow, GaugeParams};
use crate::sampling::{SampleError, Sampler, Scenario};
use crate::theta::{Eta, ModularContext};
use crate::vertex::ModelParams;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const SCHEMA: u32 = 1;
pub const MAX_SITES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config line {line} column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Field { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Random,
}

/// Either the keyword `"random"` (drawn from the seed) or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Keyword(Keyword),
    Given(T),
}

impl<T> Default for Source<T> {
    fn default() -> Self {
        Source::Keyword(Keyword::Random)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub s: [f64; 2],
    pub t: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(rename = "N", default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_tau")]
    pub tau: [f64; 2],
    #[serde(default = "default_eta")]
    pub eta: String,
    #[serde(default)]
    pub xi: Source<Vec<[f64; 2]>>,
    #[serde(default)]
    pub gauge: Source<GaugeSpec>,
    #[serde(default)]
    pub nu: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<i64>,
    #[serde(default = "default_kappa")]
    pub kappa: Vec<i64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_sizes() -> Vec<usize> {
    vec![2, 4]
}
fn default_tau() -> [f64; 2] {
    [0.1, 0.9]
}
fn default_eta() -> String {
    "1/2".into()
}
fn default_kappa() -> Vec<i64> {
    vec![-2, -1, 0, 1, 2]
}
fn default_seed() -> u64 {
    1
}
fn default_grid() -> usize {
    80
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: SCHEMA,
            sizes: default_sizes(),
            tau: default_tau(),
            eta: default_eta(),
            xi: Source::default(),
            gauge: Source::default(),
            nu: 0,
            lambda: None,
            kappa: default_kappa(),
            seed: default_seed(),
            grid: default_grid(),
            tolerances: BTreeMap::new(),
            out: None,
        }
    }
}

pub fn c64(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.into(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn tau(&self) -> C64 {
        c64(self.tau)
    }

    pub fn eta_value(&self) -> Result<Eta, ConfigError> {
        parse_eta(&self.eta).ok_or_else(|| ConfigError::field("eta", format!("expected a rational p/q, got {:?}", self.eta)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA {
            return Err(ConfigError::field("schema", format!("unsupported schema {}, expected {SCHEMA}", self.schema)));
        }
        if self.sizes.is_empty() {
            return Err(ConfigError::field("N", "at least one chain length is required"));
        }
        for &n in &self.sizes {
            if n % 2 != 0 || n == 0 {
                return Err(ConfigError::field("N", format!("N must be even: the chain needs an even number of sites, got {n}")));
            }
            if n > MAX_SITES {
                return Err(ConfigError::field("N", format!("N = {n} exceeds the dense-storage limit {MAX_SITES}")));
            }
        }
        if !(self.tau[0].is_finite() && self.tau[1].is_finite()) {
            return Err(ConfigError::field("tau", "must be finite"));
        }
        ModularContext::new(self.tau()).map_err(|e| ConfigError::field("tau", e.to_string()))?;
        if self.eta_value()? != Eta::HALF {
            return Err(ConfigError::field("eta", "only eta = 1/2 (free fermions) is supported"));
        }
        if let Source::Given(xi) = &self.xi {
            if self.sizes.len() != 1 || xi.len() != self.sizes[0] {
                return Err(ConfigError::field("xi", "explicit xi needs a single N and exactly N entries"));
            }
        }
        if let Some(k) = self.kappa.iter().find(|k| !(-2..=2).contains(*k)) {
            return Err(ConfigError::field("kappa", format!("imbalance {k} outside -2..=2")));
        }
        if self.grid < 8 {
            return Err(ConfigError::field("grid", "grid must be at least 8"));
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v > 0.0) {
                return Err(ConfigError::field(&format!("tolerances.{k}"), "must be a positive number"));
            }
        }
        Ok(())
    }

    /// Model parameters at chain length `n_sites`; random ξ̄ come from `sampler`.
    pub fn model(&self, n_sites: usize, sampler: &mut Sampler) -> Result<ModelParams, SampleError> {
        let ctx = ModularContext::new(self.tau())?;
        let xi = match &self.xi {
            Source::Given(v) => v.iter().map(|&z| c64(z)).collect(),
            Source::Keyword(Keyword::Random) => sampler.xi(n_sites)?,
        };
        Ok(ModelParams::new(n_sites, Eta::HALF, ctx, xi)?)
    }

    pub fn gauge(&self, p: &ModelParams, sampler: &mut Sampler) -> Result<GaugeParams, SampleError> {
        let window = GaugeIndexWindow::for_bethe(p.n() + 2);
        match self.gauge {
            Source::Given(g) => {
                let g = GaugeParams::new(c64(g.s), c64(g.t));
                g.validate(p, window)?;
                Ok(g)
            }
            Source::Keyword(Keyword::Random) => sampler.gauge(p, window),
        }
    }

    /// Model, gauge and solved on-shell state for one chain length.
    pub fn scenario(&self, n_sites: usize, seed: u64) -> Result<Scenario, SampleError> {
        let mut sampler = Sampler::new(seed);
        let params = self.model(n_sites, &mut sampler)?;
        let gauge = self.gauge(&params, &mut sampler)?;
        Scenario::from_parts_with_grid(params, gauge, self.nu.rem_euclid(4), sampler, self.grid)
    }
}

fn parse_eta(s: &str) -> Option<Eta> {
    let (a, b) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
    let num: i64 = a.trim().parse().ok()?;
    let den: i64 = b.trim().parse().ok()?;
    if den <= 0 {
        return None;
    }
    let g = gcd(num.abs(), den);
    Some(Eta::Rational { num: num / g, den: den / g })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// Parses `0.3`, `0.5i`, `-i`, `0.1+0.9i`, `1e-3-2.5e-1i`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse {s:?} as a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

/// Shortest round-trip form understood by [`parse_complex`].
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { "-" } else { "+" };
    format!("{:?}{}{:?}i", z.re, sign, z.im.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0.5i").unwrap(), C64::new(0.0, 0.5));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("0.25").unwrap(), C64::new(0.25, 0.0));
        assert_eq!(parse_complex("1e-3-2.5e-1i").unwrap(), C64::new(1e-3, -0.25));
        assert_eq!(parse_complex("-1e+2+3E-2i").unwrap(), C64::new(-100.0, 0.03));
        assert!(parse_complex("abc").is_err());
        let z = C64::new(-0.1234567890123, 9.87e-17);
        assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
    }

    #[test]
    fn odd_chain_rejected() {
        let err = RunConfig::from_json(r#"{"schema": 1, "N": [3]}"#).unwrap_err();
        assert!(err.to_string().contains("N must be even"), "{err}");
    }

    #[test]
    fn unknown_field_has_position() {
        let err = RunConfig::from_json("{\"schema\": 1,\n \"tua\": [0, 1]}").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::from_json(r#"{"schema": 1}"#).unwrap();
        assert_eq!(cfg, RunConfig::default());
        let again = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn explicit_gauge() {
        let cfg = RunConfig::from_json(r#"{"schema": 1, "gauge": {"s": [0.1, 0.02], "t": [-0.2, 0.05]}}"#).unwrap();
        assert!(matches!(cfg.gauge, Source::Given(_)));
    }
}
