//! A validated configuration together with the quantities derived from it.

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::model::{cache_hit_ratio, mbs_transmit_power, sbs_transmit_power_for};
use crate::quadrature::QuadSpec;

/// Tolerances for the three integration levels of the analytic engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    /// Interferer-distance integrals inside Laplace transforms.
    pub laplace: QuadSpec,
    /// Serving-distance integrals (coverage, association mass).
    pub distance: QuadSpec,
    /// Spectral-efficiency integrals of the ASE.
    pub rate: QuadSpec,
}

impl Default for Precision {
    fn default() -> Self {
        Self {
            laplace: QuadSpec::new(1e-7, 1e-14),
            distance: QuadSpec::new(1e-6, 1e-12),
            rate: QuadSpec::new(1e-5, 1e-12),
        }
    }
}

impl Precision {
    /// Coarser budget for sweeps; relative tolerance `rel_tol` at the
    /// outermost level, tightened geometrically inwards.
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            laplace: QuadSpec::new(rel_tol * 0.01, 1e-14),
            distance: QuadSpec::new(rel_tol * 0.1, 1e-12),
            rate: QuadSpec::new(rel_tol, 1e-12),
        }
    }
}

/// Base-station tier that transmits on a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BsTier {
    Sbs,
    Mbs,
}

impl BsTier {
    pub const ALL: [BsTier; 2] = [BsTier::Sbs, BsTier::Mbs];

    pub fn label(self) -> &'static str {
        match self {
            BsTier::Sbs => "SBS",
            BsTier::Mbs => "MBS",
        }
    }
}

/// Evaluation context: configuration plus derived powers and hit ratio for
/// one cache capacity.
#[derive(Debug, Clone)]
pub struct Network {
    cfg: NetworkConfig,
    cache: u64,
    p_s: f64,
    p_m: f64,
    hit_ratio: f64,
    precision: Precision,
}

impl Network {
    /// Validates `cfg`, rejecting a cache that exceeds the SBS power budget.
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        Self::build(cfg.clone(), cfg.cache_size)
    }

    fn build(cfg: NetworkConfig, cache: u64) -> Result<Self> {
        let hit_ratio = cache_hit_ratio(cache, cfg.library_size, cfg.zipf_exponent)?;
        Ok(Self {
            p_s: sbs_transmit_power_for(&cfg, cache),
            p_m: mbs_transmit_power(&cfg),
            cache,
            hit_ratio,
            cfg,
            precision: Precision::default(),
        })
    }

    /// Same network with another cache capacity. Capacities past the power
    /// budget are allowed here and leave the SBS tier silent.
    pub fn with_cache(&self, cache: u64) -> Result<Self> {
        if cache > self.cfg.library_size {
            return Err(Error::domain(format!(
                "cache capacity {cache} exceeds library size {}",
                self.cfg.library_size
            )));
        }
        if cache == self.cache {
            return Ok(self.clone());
        }
        let mut cfg = self.cfg.clone();
        cfg.cache_size = cache;
        let mut net = Self::build(cfg, cache)?;
        net.precision = self.precision;
        Ok(net)
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn precision(&self) -> &Precision {
        &self.precision
    }

    pub fn cache(&self) -> u64 {
        self.cache
    }

    pub fn hit_ratio(&self) -> f64 {
        self.hit_ratio
    }

    pub fn sbs_power(&self) -> f64 {
        self.p_s
    }

    pub fn mbs_power(&self) -> f64 {
        self.p_m
    }

    pub fn transmit_power(&self, tier: BsTier) -> f64 {
        match tier {
            BsTier::Sbs => self.p_s,
            BsTier::Mbs => self.p_m,
        }
    }

    pub fn bias(&self, tier: BsTier) -> f64 {
        match tier {
            BsTier::Sbs => self.cfg.bias_s,
            BsTier::Mbs => self.cfg.bias_m,
        }
    }

    pub fn density(&self, tier: BsTier) -> f64 {
        match tier {
            BsTier::Sbs => self.cfg.lambda_s,
            BsTier::Mbs => self.cfg.lambda_m,
        }
    }

    /// Transmit power times association bias.
    pub fn biased_power(&self, tier: BsTier) -> f64 {
        self.transmit_power(tier) * self.bias(tier)
    }
}
