//! Scalar model primitives: blockage, path loss, popularity, caching and the
//! power budget.

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Distance below which every link is line-of-sight, meters.
pub const LOS_CRITICAL_DISTANCE: f64 = 18.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkState {
    Los,
    Nlos,
}

impl LinkState {
    pub const ALL: [LinkState; 2] = [LinkState::Los, LinkState::Nlos];

    pub fn label(self) -> &'static str {
        match self {
            LinkState::Los => "LoS",
            LinkState::Nlos => "NLoS",
        }
    }

    pub fn other(self) -> LinkState {
        match self {
            LinkState::Los => LinkState::Nlos,
            LinkState::Nlos => LinkState::Los,
        }
    }
}

impl std::fmt::Display for LinkState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("distance must be positive and finite, got {r}")))
    }
}

/// LoS probability `min(18/r, 1)(1 - e^{-beta r}) + e^{-beta r}`.
pub fn los_probability(r: f64, beta: f64) -> Result<f64> {
    check_distance(r)?;
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::domain(format!("blockage rate must be non-negative, got {beta}")));
    }
    Ok(los_probability_unchecked(r, beta))
}

pub fn nlos_probability(r: f64, beta: f64) -> Result<f64> {
    los_probability(r, beta).map(|p| 1.0 - p)
}

#[inline]
pub(crate) fn los_probability_unchecked(r: f64, beta: f64) -> f64 {
    if r <= LOS_CRITICAL_DISTANCE {
        return 1.0;
    }
    let e = (-beta * r).exp();
    LOS_CRITICAL_DISTANCE / r * (1.0 - e) + e
}

#[inline]
pub(crate) fn state_probability_unchecked(state: LinkState, r: f64, beta: f64) -> f64 {
    match state {
        LinkState::Los => los_probability_unchecked(r, beta),
        LinkState::Nlos => 1.0 - los_probability_unchecked(r, beta),
    }
}

/// `(intercept, exponent)` of the path-loss branch for `state`.
#[inline]
pub fn path_loss_params(cfg: &NetworkConfig, state: LinkState) -> (f64, f64) {
    match state {
        LinkState::Los => (cfg.a_los, cfg.alpha_los),
        LinkState::Nlos => (cfg.a_nlos, cfg.alpha_nlos),
    }
}

/// Path gain `A r^{-alpha}` of the given branch.
pub fn path_loss(r: f64, state: LinkState, cfg: &NetworkConfig) -> Result<f64> {
    check_distance(r)?;
    let (a, alpha) = path_loss_params(cfg, state);
    Ok(a * r.powf(-alpha))
}

fn zipf_weight_sum(n: u64, gamma_p: f64) -> f64 {
    // smallest terms first keeps the sum accurate for large libraries
    (1..=n).rev().map(|g| (g as f64).powf(-gamma_p)).sum()
}

/// Zipf request probability of the `f`-th most popular file.
pub fn zipf_pmf(f: u64, library: u64, gamma_p: f64) -> Result<f64> {
    if library == 0 || f == 0 || f > library {
        return Err(Error::domain(format!("file index {f} outside 1..={library}")));
    }
    Ok((f as f64).powf(-gamma_p) / zipf_weight_sum(library, gamma_p))
}

/// Hit ratio of a most-popular cache holding `cache` of `library` files.
pub fn cache_hit_ratio(cache: u64, library: u64, gamma_p: f64) -> Result<f64> {
    if library == 0 || cache > library {
        return Err(Error::domain(format!(
            "cache capacity {cache} outside 0..={library}"
        )));
    }
    if cache == 0 {
        return Ok(0.0);
    }
    if cache == library {
        return Ok(1.0);
    }
    let head: f64 = (1..=cache).rev().map(|f| (f as f64).powf(-gamma_p)).sum();
    let tail: f64 = (cache + 1..=library).rev().map(|f| (f as f64).powf(-gamma_p)).sum();
    Ok(head / (head + tail))
}

/// SBS transmit power for a cache of `cache` files, clamped at zero.
pub fn sbs_transmit_power_for(cfg: &NetworkConfig, cache: u64) -> f64 {
    let raw = (cfg.p_s_tot - cfg.p_s_fc - cfg.w_ca * cache as f64 * cfg.file_bits) / cfg.rho_s;
    raw.max(0.0)
}

pub fn sbs_transmit_power(cfg: &NetworkConfig) -> f64 {
    sbs_transmit_power_for(cfg, cfg.cache_size)
}

/// MBS transmit power; the MBS stores the whole library.
pub fn mbs_transmit_power(cfg: &NetworkConfig) -> f64 {
    let raw = (cfg.p_m_tot - cfg.p_m_fc - cfg.w_ca * cfg.library_size as f64 * cfg.file_bits) / cfg.rho_m;
    raw.max(0.0)
}

/// Largest cache (in files, capped at the library size) that leaves the SBS
/// strictly positive transmit power.
pub fn max_cache_capacity(cfg: &NetworkConfig) -> u64 {
    let headroom = cfg.p_s_tot - cfg.p_s_fc;
    if headroom <= 0.0 {
        return 0;
    }
    let per_file = cfg.w_ca * cfg.file_bits;
    if per_file <= 0.0 {
        return cfg.library_size;
    }
    let bound = headroom / per_file;
    // largest integer strictly below the exhaustion point
    let mut c = bound.floor();
    if c >= bound {
        c -= 1.0;
    }
    let c = c.max(0.0);
    if c >= cfg.library_size as f64 {
        cfg.library_size
    } else {
        c as u64
    }
}
