//! Network parameters and their text-file form.
//!
//! The file format is TOML restricted to numeric leaves under dotted keys,
//! e.g. `power.P_s_tot = 9.1`. Unknown keys are rejected so typos surface as
//! errors instead of silently falling back to defaults.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

/// Prefix for environment-variable overrides. `power.P_s_tot` is overridden
/// by `IABNET_POWER__P_S_TOT`.
pub const ENV_PREFIX: &str = "IABNET_";

/// Every tunable of the model.
///
/// Distances are in meters, densities in nodes per square meter, powers in
/// watts. Path-loss intercepts are linear gains at 1 m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// SBS density.
    pub lambda_s: f64,
    /// MBS density.
    pub lambda_m: f64,
    /// User density.
    pub lambda_u: f64,
    /// Total mmWave bandwidth shared by access and backhaul, Hz.
    pub bandwidth_hz: f64,
    pub a_los: f64,
    pub alpha_los: f64,
    pub a_nlos: f64,
    pub alpha_nlos: f64,
    /// Blockage rate, per meter.
    pub beta: f64,
    pub bias_s: f64,
    pub bias_m: f64,
    pub p_s_tot: f64,
    pub p_m_tot: f64,
    pub p_s_fc: f64,
    pub p_m_fc: f64,
    pub rho_s: f64,
    pub rho_m: f64,
    /// Caching power coefficient, W per cached bit.
    pub w_ca: f64,
    /// Library size, files.
    pub library_size: u64,
    /// SBS cache capacity, files.
    pub cache_size: u64,
    pub file_bits: f64,
    pub zipf_exponent: f64,
    /// Noise power, W.
    pub noise_w: f64,
}

/// Noise figure applied on top of thermal noise for the default noise power.
pub const DEFAULT_NOISE_FIGURE_DB: f64 = 5.0;
/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Thermal noise over `bandwidth_hz` plus a receiver noise figure.
pub fn thermal_noise_watts(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let bandwidth_hz = 400e6;
        Self {
            lambda_s: 1e-4,
            lambda_m: 1e-5,
            lambda_u: 3e-4,
            bandwidth_hz,
            a_los: 10f64.powf(-10.38),
            alpha_los: 2.09,
            a_nlos: 10f64.powf(-14.54),
            alpha_nlos: 3.75,
            beta: 2.7e-2,
            bias_s: 10.0,
            bias_m: 1.0,
            p_s_tot: 9.1,
            p_m_tot: 610.0,
            p_s_fc: 0.1,
            p_m_fc: 10.16,
            rho_s: 4.0,
            rho_m: 15.13,
            w_ca: 2.5e-9,
            library_size: 1000,
            cache_size: 100,
            // 4 MB files
            file_bits: 3.2e7,
            zipf_exponent: 0.6,
            noise_w: thermal_noise_watts(bandwidth_hz, DEFAULT_NOISE_FIGURE_DB),
        }
    }
}

/// Dotted keys understood by the config file, in canonical order.
pub const KEYS: &[&str] = &[
    "density.lambda_s",
    "density.lambda_m",
    "density.lambda_u",
    "spectrum.W",
    "pathloss.A_L",
    "pathloss.alpha_L",
    "pathloss.A_NL",
    "pathloss.alpha_NL",
    "blockage.beta",
    "bias.B_s",
    "bias.B_m",
    "power.P_s_tot",
    "power.P_m_tot",
    "power.P_s_fc",
    "power.P_m_fc",
    "power.rho_s",
    "power.rho_m",
    "cache.w_ca",
    "cache.F",
    "cache.C",
    "cache.file_bits",
    "cache.gamma_p",
    "noise.N0",
];

/// Accepted on input only; converted to `noise.N0`.
pub const NOISE_DBM_KEY: &str = "noise.N0_dBm";

impl NetworkConfig {
    /// Built-in default parameter set with the shipped noise convention.
    pub fn table2() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "density.lambda_s" => self.lambda_s,
            "density.lambda_m" => self.lambda_m,
            "density.lambda_u" => self.lambda_u,
            "spectrum.W" => self.bandwidth_hz,
            "pathloss.A_L" => self.a_los,
            "pathloss.alpha_L" => self.alpha_los,
            "pathloss.A_NL" => self.a_nlos,
            "pathloss.alpha_NL" => self.alpha_nlos,
            "blockage.beta" => self.beta,
            "bias.B_s" => self.bias_s,
            "bias.B_m" => self.bias_m,
            "power.P_s_tot" => self.p_s_tot,
            "power.P_m_tot" => self.p_m_tot,
            "power.P_s_fc" => self.p_s_fc,
            "power.P_m_fc" => self.p_m_fc,
            "power.rho_s" => self.rho_s,
            "power.rho_m" => self.rho_m,
            "cache.w_ca" => self.w_ca,
            "cache.F" => self.library_size as f64,
            "cache.C" => self.cache_size as f64,
            "cache.file_bits" => self.file_bits,
            "cache.gamma_p" => self.zipf_exponent,
            "noise.N0" => self.noise_w,
            _ => return None,
        })
    }

    /// Set one field by its dotted key. Does not validate cross-field
    /// invariants; call [`NetworkConfig::validate`] afterwards.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        if !value.is_finite() {
            return Err(ConfigError::invalid(key, "must be finite"));
        }
        let count = |v: f64| -> Result<u64, ConfigError> {
            if v < 0.0 || v.fract() != 0.0 {
                Err(ConfigError::invalid(key, "must be a non-negative integer"))
            } else {
                Ok(v as u64)
            }
        };
        match key {
            "density.lambda_s" => self.lambda_s = value,
            "density.lambda_m" => self.lambda_m = value,
            "density.lambda_u" => self.lambda_u = value,
            "spectrum.W" => self.bandwidth_hz = value,
            "pathloss.A_L" => self.a_los = value,
            "pathloss.alpha_L" => self.alpha_los = value,
            "pathloss.A_NL" => self.a_nlos = value,
            "pathloss.alpha_NL" => self.alpha_nlos = value,
            "blockage.beta" => self.beta = value,
            "bias.B_s" => self.bias_s = value,
            "bias.B_m" => self.bias_m = value,
            "power.P_s_tot" => self.p_s_tot = value,
            "power.P_m_tot" => self.p_m_tot = value,
            "power.P_s_fc" => self.p_s_fc = value,
            "power.P_m_fc" => self.p_m_fc = value,
            "power.rho_s" => self.rho_s = value,
            "power.rho_m" => self.rho_m = value,
            "cache.w_ca" => self.w_ca = value,
            "cache.F" => self.library_size = count(value)?,
            "cache.C" => self.cache_size = count(value)?,
            "cache.file_bits" => self.file_bits = value,
            "cache.gamma_p" => self.zipf_exponent = value,
            "noise.N0" => self.noise_w = value,
            NOISE_DBM_KEY => self.noise_w = dbm_to_watts(value),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Check every field invariant, naming the first offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let non_negative = [
            ("density.lambda_s", self.lambda_s),
            ("density.lambda_m", self.lambda_m),
            ("density.lambda_u", self.lambda_u),
            ("blockage.beta", self.beta),
            ("power.P_s_fc", self.p_s_fc),
            ("power.P_m_fc", self.p_m_fc),
            ("cache.w_ca", self.w_ca),
            ("cache.gamma_p", self.zipf_exponent),
            ("noise.N0", self.noise_w),
        ];
        for (key, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and non-negative"));
            }
        }
        let positive = [
            ("spectrum.W", self.bandwidth_hz),
            ("pathloss.A_L", self.a_los),
            ("pathloss.alpha_L", self.alpha_los),
            ("pathloss.A_NL", self.a_nlos),
            ("pathloss.alpha_NL", self.alpha_nlos),
            ("bias.B_s", self.bias_s),
            ("bias.B_m", self.bias_m),
            ("power.P_s_tot", self.p_s_tot),
            ("power.P_m_tot", self.p_m_tot),
            ("power.rho_s", self.rho_s),
            ("power.rho_m", self.rho_m),
            ("cache.file_bits", self.file_bits),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and positive"));
            }
        }
        if self.alpha_los > self.alpha_nlos {
            return Err(ConfigError::invalid(
                "pathloss.alpha_L",
                "LoS exponent must not exceed the NLoS exponent",
            ));
        }
        if self.a_los < self.a_nlos {
            return Err(ConfigError::invalid(
                "pathloss.A_L",
                "LoS intercept must not be below the NLoS intercept",
            ));
        }
        if self.library_size == 0 {
            return Err(ConfigError::invalid("cache.F", "library must hold at least one file"));
        }
        if self.cache_size > self.library_size {
            return Err(ConfigError::invalid("cache.C", "cache capacity exceeds library size"));
        }
        if self.p_s_tot < self.p_s_fc {
            return Err(ConfigError::invalid("power.P_s_tot", "below fixed circuit power"));
        }
        if self.p_m_tot < self.p_m_fc {
            return Err(ConfigError::invalid("power.P_m_tot", "below fixed circuit power"));
        }
        let sbs_budget = self.p_s_tot - self.p_s_fc - self.w_ca * self.cache_size as f64 * self.file_bits;
        if sbs_budget < 0.0 {
            return Err(ConfigError::invalid(
                "cache.C",
                format!(
                    "caching power {:.4} W exceeds the SBS budget {:.4} W",
                    self.w_ca * self.cache_size as f64 * self.file_bits,
                    self.p_s_tot - self.p_s_fc
                ),
            ));
        }
        Ok(())
    }

    /// Parse a config document on top of the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_toml_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overlay the keys present in `text` without validating.
    pub fn apply_toml_str(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        let mut leaves = Vec::new();
        flatten("", &toml::Value::Table(table), &mut leaves)?;
        for (key, value) in leaves {
            self.set(&key, value)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    /// Apply `IABNET_*` overrides from an environment snapshot.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut known: Vec<&str> = KEYS.to_vec();
        known.push(NOISE_DBM_KEY);
        for (name, value) in vars {
            let Some(rest) = name.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let Some(key) = known.iter().find(|k| env_name(k) == rest.to_ascii_uppercase()) else {
                return Err(ConfigError::UnknownKey(format!("{ENV_PREFIX}{rest}")));
            };
            let raw = value.as_ref().trim();
            let parsed: f64 = raw.parse().map_err(|_| ConfigError::NotANumber {
                key: key.to_string(),
                value: raw.to_string(),
            })?;
            self.set(key, parsed)?;
        }
        Ok(())
    }

    /// Canonical `key = value` rendering of every field.
    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for key in KEYS {
            let (sec, name) = key.split_once('.').expect("dotted key");
            if sec != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                section = sec;
            }
            let v = self.get(key).expect("known key");
            let _ = writeln!(out, "{name} = {}", format_toml_number(v));
        }
        out
    }

    /// Stable hash over every field; changes iff some field changes.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for key in KEYS {
            let v = self.get(key).expect("known key");
            hasher.update(key.as_bytes());
            hasher.update(b"=");
            hasher.update(v.to_bits().to_le_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn env_name(key: &str) -> String {
    key.replace('.', "__").to_ascii_uppercase()
}

fn format_toml_number(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, f64)>) -> Result<(), ConfigError> {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out)?;
            }
            Ok(())
        }
        toml::Value::Float(f) => {
            out.push((prefix.to_string(), *f));
            Ok(())
        }
        toml::Value::Integer(i) => {
            out.push((prefix.to_string(), *i as f64));
            Ok(())
        }
        other => Err(ConfigError::NotANumber {
            key: prefix.to_string(),
            value: other.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        NetworkConfig::table2().validate().unwrap();
    }

    #[test]
    fn round_trips_through_text() {
        let mut cfg = NetworkConfig::table2();
        cfg.cache_size = 37;
        cfg.beta = 0.031;
        let text = cfg.to_toml_string();
        let back = NetworkConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.fingerprint(), back.fingerprint());
    }

    #[test]
    fn dotted_keys_parse() {
        let cfg = NetworkConfig::from_toml_str("power.P_s_tot = 10.1\ncache.C = 50\n").unwrap();
        assert_eq!(cfg.p_s_tot, 10.1);
        assert_eq!(cfg.cache_size, 50);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = NetworkConfig::from_toml_str("power.P_x = 1").unwrap_err();
        assert_eq!(err.key(), Some("power.P_x"));
    }

    #[test]
    fn over_budget_cache_rejected() {
        let err = NetworkConfig::from_toml_str("cache.C = 500").unwrap_err();
        assert_eq!(err.key(), Some("cache.C"));
    }

    #[test]
    fn cache_larger_than_library_rejected() {
        let err = NetworkConfig::from_toml_str("cache.F = 10\ncache.C = 11").unwrap_err();
        assert_eq!(err.key(), Some("cache.C"));
    }

    #[test]
    fn noise_in_dbm_converts() {
        let cfg = NetworkConfig::from_toml_str("noise.N0_dBm = 5").unwrap();
        assert!((cfg.noise_w - 10f64.powf(0.5) * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn env_overrides_apply() {
        let mut cfg = NetworkConfig::table2();
        cfg.apply_env([
            ("IABNET_POWER__P_S_TOT", "11.5"),
            ("PATH", "/usr/bin"),
            ("iabnet_ignored", "x"),
        ])
        .unwrap();
        assert_eq!(cfg.p_s_tot, 11.5);
        let err = cfg.apply_env([("IABNET_POWER__NOPE", "1")]).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(_)));
        let err = cfg.apply_env([("IABNET_CACHE__C", "ten")]).unwrap_err();
        assert_eq!(err.key(), Some("cache.C"));
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let base = NetworkConfig::table2();
        let fp = base.fingerprint();
        for key in KEYS {
            let mut c = base.clone();
            let v = c.get(key).unwrap();
            let bumped = if key.starts_with("cache.F") || key.starts_with("cache.C") {
                v + 1.0
            } else {
                v * 1.5 + 1e-12
            };
            c.set(key, bumped).unwrap();
            assert_ne!(c.fingerprint(), fp, "{key}");
        }
    }

    #[test]
    fn default_noise_is_thermal_plus_figure() {
        let cfg = NetworkConfig::table2();
        let dbm = watts_to_dbm(cfg.noise_w);
        assert!((dbm - (-174.0 + 86.0206 + 5.0)).abs() < 1e-3, "{dbm}");
    }
}
