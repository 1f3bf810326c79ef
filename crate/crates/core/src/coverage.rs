//! SINR coverage, conditional on the serving distance and marginal over it.

use serde::{Deserialize, Serialize};

use crate::config::db_to_linear;
use crate::error::{Error, Result};
use crate::geometry::{Tier, TierLink};
use crate::model::{path_loss_params, LinkState};
use crate::network::Network;

/// Coverage of one tier at one threshold, split by serving link state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub tier: Tier,
    /// Linear SINR threshold.
    pub gamma: f64,
    pub los: f64,
    pub nlos: f64,
}

impl CoverageResult {
    pub fn total(&self) -> f64 {
        self.los + self.nlos
    }

    pub fn component(&self, state: LinkState) -> f64 {
        match state {
            LinkState::Los => self.los,
            LinkState::Nlos => self.nlos,
        }
    }
}

fn check_threshold(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && !gamma.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(format!("SINR threshold must be >= 0, got {gamma}")))
    }
}

impl Network {
    /// Received signal power (biased) of `link` at distance `r`.
    pub fn serving_power(&self, link: TierLink, r: f64) -> f64 {
        let (a, alpha) = path_loss_params(self.config(), link.state);
        self.biased_power(link.tier.transmitter()) * a * r.powf(-alpha)
    }

    /// `exp(-gamma N0 / S(r))`, the coverage with interference switched off.
    pub fn noise_only_coverage(&self, link: TierLink, gamma: f64, r: f64) -> f64 {
        if gamma == 0.0 {
            return 1.0;
        }
        let s = self.serving_power(link, r);
        if s == 0.0 {
            return 0.0;
        }
        (-gamma * self.config().noise_w / s).exp()
    }

    /// P[SINR > gamma] for a link of type `link` at serving distance `r`.
    pub fn conditional_coverage(&self, link: TierLink, gamma: f64, r: f64) -> Result<f64> {
        check_threshold(gamma)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("distance must be positive, got {r}")));
        }
        self.conditional_coverage_unchecked(link, gamma, r)
    }

    pub(crate) fn conditional_coverage_unchecked(&self, link: TierLink, gamma: f64, r: f64) -> Result<f64> {
        if gamma == 0.0 {
            return Ok(1.0);
        }
        if gamma.is_infinite() {
            return Ok(0.0);
        }
        let noise = self.noise_only_coverage(link, gamma, r);
        if noise == 0.0 {
            return Ok(0.0);
        }
        Ok(noise * self.laplace_at_threshold(link, gamma, r)?)
    }

    /// Marginal coverage of `link`: conditional coverage integrated against
    /// the association density.
    pub fn link_coverage(&self, link: TierLink, gamma: f64) -> Result<f64> {
        check_threshold(gamma)?;
        self.integrate_over_association(link, |r| self.conditional_coverage_unchecked(link, gamma, r))
    }

    /// Coverage of `tier` at linear threshold `gamma`.
    pub fn coverage(&self, tier: Tier, gamma: f64) -> Result<CoverageResult> {
        check_threshold(gamma)?;
        Ok(CoverageResult {
            tier,
            gamma,
            los: self.link_coverage(TierLink::new(tier, LinkState::Los), gamma)?,
            nlos: self.link_coverage(TierLink::new(tier, LinkState::Nlos), gamma)?,
        })
    }

    /// Coverage at a threshold given in dB.
    pub fn coverage_db(&self, tier: Tier, gamma_db: f64) -> Result<CoverageResult> {
        if gamma_db.is_nan() {
            return Err(Error::domain("SINR threshold is NaN"));
        }
        self.coverage(tier, db_to_linear(gamma_db))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkConfig;

    fn net() -> Network {
        Network::new(&NetworkConfig::table2()).unwrap()
    }

    #[test]
    fn zero_threshold_is_certain() {
        let n = net();
        for link in TierLink::ALL {
            assert_eq!(n.conditional_coverage(link, 0.0, 40.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let n = net();
        let link = TierLink::ALL[0];
        assert!(n.conditional_coverage(link, -1.0, 10.0).is_err());
        assert!(n.conditional_coverage(link, 1.0, 0.0).is_err());
        assert!(n.coverage(Tier::Sbs, f64::NAN).is_err());
    }

    #[test]
    fn huge_noise_kills_coverage() {
        let mut cfg = NetworkConfig::table2();
        cfg.noise_w = 1e6;
        let n = Network::new(&cfg).unwrap();
        for link in TierLink::ALL {
            assert_eq!(n.conditional_coverage(link, 1.0, 20.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn interference_free_is_noise_only_bitwise() {
        let mut cfg = NetworkConfig::table2();
        cfg.lambda_s = 0.0;
        cfg.lambda_m = 0.0;
        let n = Network::new(&cfg).unwrap();
        for link in TierLink::ALL {
            for &(g, r) in &[(0.3, 10.0), (10.0, 30.0), (100.0, 7.0)] {
                let c = n.conditional_coverage(link, g, r).unwrap();
                assert_eq!(c.to_bits(), n.noise_only_coverage(link, g, r).to_bits());
            }
        }
    }

    #[test]
    fn noise_only_formula() {
        let n = net();
        let cfg = n.config();
        let link = TierLink::new(Tier::Sbs, LinkState::Los);
        let s = n.sbs_power() * cfg.bias_s * cfg.a_los * 25f64.powf(-cfg.alpha_los);
        let expected = (-10.0 * cfg.noise_w / s).exp();
        assert!((n.noise_only_coverage(link, 10.0, 25.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn vanishes_at_large_distance() {
        let n = net();
        for link in TierLink::ALL {
            let c = n.conditional_coverage(link, 1.0, 5e3).unwrap();
            assert!(c < 1e-6, "{link}: {c}");
        }
    }

    #[test]
    fn zero_threshold_recovers_association_mass() {
        let n = net();
        for tier in [Tier::Sbs, Tier::Mbs, Tier::Backhaul] {
            let c = n.coverage(tier, 0.0).unwrap();
            for state in LinkState::ALL {
                let m = n.association_mass(TierLink::new(tier, state)).unwrap();
                assert!((c.component(state) - m).abs() < 1e-12, "{tier} {state}");
            }
        }
    }

    #[test]
    fn no_small_cells_no_sbs_coverage() {
        let mut cfg = NetworkConfig::table2();
        cfg.lambda_s = 0.0;
        let n = Network::new(&cfg).unwrap();
        assert_eq!(n.coverage(Tier::Sbs, 1.0).unwrap().total(), 0.0);
    }

    #[test]
    fn monotone_in_threshold() {
        let n = net();
        for tier in [Tier::Sbs, Tier::Mbs, Tier::Backhaul] {
            let mut prev: Option<CoverageResult> = None;
            for db in [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0] {
                let c = n.coverage_db(tier, db).unwrap();
                for state in LinkState::ALL {
                    let v = c.component(state);
                    assert!((0.0..=1.0).contains(&v));
                    if let Some(p) = prev {
                        assert!(v <= p.component(state) + 1e-12, "{tier} {state} {db}");
                    }
                }
                prev = Some(c);
            }
        }
    }
}
