//! Model parameters and their flat `key = value` text form.
//!
//! The same key names are used by the CLI flags, the plan files and the CSV
//! headers: `n alpha beta gamma L Wa Wc delta c1 c_r q0 seed rounds`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tunable parameter of the network model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Node count.
    pub n: usize,
    /// Concentration factor: contact-group membership decays as `d^-alpha`.
    pub alpha: f64,
    /// Communication activity factor: destination choice decays as `d^-beta`.
    pub beta: f64,
    /// Clustering factor: group size follows `q^-gamma`.
    pub gamma: f64,
    /// Hop threshold of L-routing, in cubes.
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(rename = "Wa")]
    pub wa: f64,
    #[serde(rename = "Wc")]
    pub wc: f64,
    /// Guard zone factor of the protocol model.
    pub delta: f64,
    /// Cube side as a fraction of the transmission range.
    pub c1: f64,
    /// Multiplicative constant of the transmission range.
    pub c_r: f64,
    /// Leader/normal degree threshold; `None` selects the 90th percentile of
    /// the degree distribution.
    pub q0: Option<f64>,
    pub seed: u64,
    pub rounds: u32,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n: 100,
            alpha: 1.0,
            beta: 0.5,
            gamma: 2.0,
            l: 2,
            wa: 0.5,
            wc: 0.5,
            delta: 1.0,
            c1: 0.4,
            c_r: 1.0,
            q0: None,
            seed: 0,
            rounds: 64,
        }
    }
}

/// Canonical key order used for serialization.
pub const CONFIG_KEYS: [&str; 13] =
    ["n", "alpha", "beta", "gamma", "L", "Wa", "Wc", "delta", "c1", "c_r", "q0", "seed", "rounds"];

impl NetworkConfig {
    /// Total bandwidth `W = Wa + Wc`.
    pub fn total_bandwidth(&self) -> f64 {
        self.wa + self.wc
    }

    /// True when any two points in face-adjacent cubes are within range,
    /// which holds for `c1 <= 1/sqrt(6)`.
    pub fn neighbors_within_range(&self) -> bool {
        self.c1 <= 1.0 / 6f64.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for (name, v) in [("Wa", self.wa), ("Wc", self.wc)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad(format!("delta must be > 0, got {}", self.delta));
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return bad(format!("c1 must lie in (0, 1), got {}", self.c1));
        }
        if !(self.c_r.is_finite() && self.c_r > 0.0) {
            return bad(format!("c_r must be > 0, got {}", self.c_r));
        }
        if let Some(q0) = self.q0 {
            if !(q0.is_finite() && q0 >= 1.0) {
                return bad(format!("q0 must be >= 1, got {q0}"));
            }
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        Ok(())
    }

    /// Sets one parameter from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let invalid = |e: &dyn std::fmt::Display| Error::InvalidConfig(format!("cannot parse {key} = {value:?}: {e}"));
        let float = || value.parse::<f64>().map_err(|e| invalid(&e));
        match key {
            "n" => self.n = value.parse().map_err(|e| invalid(&e))?,
            "alpha" => self.alpha = float()?,
            "beta" => self.beta = float()?,
            "gamma" => self.gamma = float()?,
            "L" => self.l = value.parse().map_err(|e| invalid(&e))?,
            "Wa" => self.wa = float()?,
            "Wc" => self.wc = float()?,
            "delta" => self.delta = float()?,
            "c1" => self.c1 = float()?,
            "c_r" => self.c_r = float()?,
            "q0" => self.q0 = if value.eq_ignore_ascii_case("auto") { None } else { Some(float()?) },
            "seed" => self.seed = value.parse().map_err(|e| invalid(&e))?,
            "rounds" => self.rounds = value.parse().map_err(|e| invalid(&e))?,
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "n" => self.n.to_string(),
            "alpha" => self.alpha.to_string(),
            "beta" => self.beta.to_string(),
            "gamma" => self.gamma.to_string(),
            "L" => self.l.to_string(),
            "Wa" => self.wa.to_string(),
            "Wc" => self.wc.to_string(),
            "delta" => self.delta.to_string(),
            "c1" => self.c1.to_string(),
            "c_r" => self.c_r.to_string(),
            "q0" => self.q0.map_or_else(|| "auto".to_string(), |q| q.to_string()),
            "seed" => self.seed.to_string(),
            "rounds" => self.rounds.to_string(),
            _ => return None,
        })
    }

    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            // get() is total over CONFIG_KEYS
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap());
        }
        out
    }

    /// Parses a `key = value` file on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, key, value) in kv_lines(text)? {
            cfg.set(key, value).map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        }
        Ok(cfg)
    }

    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_kv_str(&text)
    }

    /// Applies every `<prefix><KEY>` environment variable, e.g. `SIM_alpha`
    /// or `SIM_ALPHA`.
    pub fn apply_env(&mut self, prefix: &str) -> Result<()> {
        for key in CONFIG_KEYS {
            for var in [format!("{prefix}{key}"), format!("{prefix}{}", key.to_uppercase())] {
                if let Ok(v) = std::env::var(&var) {
                    self.set(key, &v)?;
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Splits `key = value` text into (1-based line, key, value) triples.
pub(crate) fn kv_lines(text: &str) -> Result<Vec<(usize, &str, &str)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse { line: i + 1, message: format!("expected `key = value`, got {line:?}") });
        };
        out.push((i + 1, k.trim(), v.trim()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = NetworkConfig::default();
        cfg.validate().unwrap();
        assert!(cfg.neighbors_within_range());
        assert_eq!(cfg.total_bandwidth(), 1.0);
    }

    #[test]
    fn kv_round_trip() {
        let mut cfg = NetworkConfig::default();
        cfg.n = 500;
        cfg.alpha = 2.25;
        cfg.q0 = Some(17.33);
        cfg.l = 7;
        let parsed = NetworkConfig::from_kv_str(&cfg.to_kv_string()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn comments_and_unknown_keys() {
        let cfg = NetworkConfig::from_kv_str("# header\nn = 30  # nodes\n\nq0 = auto\n").unwrap();
        assert_eq!(cfg.n, 30);
        assert_eq!(cfg.q0, None);
        let err = NetworkConfig::from_kv_str("n = 30\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(NetworkConfig::from_kv_str("n 30").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let cases: [(&str, &str); 6] =
            [("n", "1"), ("alpha", "-1"), ("c1", "1.0"), ("delta", "0"), ("rounds", "0"), ("q0", "0.5")];
        for (k, v) in cases {
            let mut cfg = NetworkConfig::default();
            cfg.set(k, v).unwrap();
            assert!(cfg.validate().is_err(), "{k} = {v} accepted");
        }
    }
}
