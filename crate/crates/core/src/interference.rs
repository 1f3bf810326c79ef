//! Laplace transforms of the aggregate interference seen on a link.
//!
//! For a link served by tier `k` in state `s` at distance `r`, tested
//! against SINR threshold `gamma`, every interferer class `(j, t)` of the
//! link contributes
//!
//! ```text
//! 2 pi lambda_j int_{d_jt(r)}^inf P_t(u) u / (1 + S / (gamma I_jt(u))) du
//! ```
//!
//! to the exponent, with `S = P_k B_k A_s r^-alpha_s` the serving power,
//! `I_jt(u) = P_j B_j A_t u^-alpha_t` the interferer power and `d_jt(r)`
//! the association exclusion radius. The transform argument is
//! `s = gamma r^alpha_s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Tier, TierLink};
use crate::model::{path_loss_params, state_probability_unchecked, LinkState, LOS_CRITICAL_DISTANCE};
use crate::network::{BsTier, Network};
use crate::quadrature::{integrate, try_integrate_power_tail, QuadSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceQuery {
    pub serving: TierLink,
    /// `gamma * r^alpha` of the serving state.
    pub s_argument: f64,
    /// Serving distance, meters.
    pub r: f64,
}

impl LaplaceQuery {
    pub fn new(serving: TierLink, s_argument: f64, r: f64) -> Result<Self> {
        if !(s_argument >= 0.0 && s_argument.is_finite()) {
            return Err(Error::domain(format!("transform argument must be >= 0, got {s_argument}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("distance must be positive, got {r}")));
        }
        Ok(Self { serving, s_argument, r })
    }

    /// Query for SINR threshold `gamma` (linear) at distance `r`.
    pub fn at_threshold(serving: TierLink, gamma: f64, r: f64, net: &Network) -> Result<Self> {
        let (_, alpha) = path_loss_params(net.config(), serving.state);
        Self::new(serving, gamma * r.powf(alpha), r)
    }

    /// The SINR threshold this query corresponds to.
    pub fn threshold(&self, net: &Network) -> f64 {
        let (_, alpha) = path_loss_params(net.config(), self.serving.state);
        self.s_argument * self.r.powf(-alpha)
    }
}

/// `int_a^inf y / (1 + y^alpha) dy` for `alpha > 2`.
pub(crate) fn power_law_tail(a: f64, alpha: f64) -> f64 {
    if alpha <= 2.0 {
        return f64::INFINITY;
    }
    if a >= 2.0 {
        // y/(1+y^a) = sum_k (-1)^k y^{1 - alpha (k+1)}
        let mut sum = 0.0;
        let mut k = 0.0;
        loop {
            let p = alpha * (k + 1.0) - 2.0;
            let term = a.powf(-p) / p;
            let signed = if (k as u64).is_multiple_of(2) { term } else { -term };
            sum += signed;
            if term <= 1e-17 * sum.abs() || k > 200.0 {
                break;
            }
            k += 1.0;
        }
        return sum;
    }
    let total = (PI / alpha) / (2.0 * PI / alpha).sin();
    if a <= 0.0 {
        return total;
    }
    let head = integrate(|y| y / (1.0 + y.powf(alpha)), 0.0, a, &QuadSpec::new(1e-13, 1e-16))
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    total - head
}

impl Network {
    /// Laplace transform of the interference for `q`.
    pub fn laplace_interference(&self, q: &LaplaceQuery) -> Result<f64> {
        let gamma = q.threshold(self);
        self.laplace_at_threshold(q.serving, gamma, q.r)
    }

    /// Laplace transform evaluated at threshold `gamma` and distance `r`.
    pub(crate) fn laplace_at_threshold(&self, serving: TierLink, gamma: f64, r: f64) -> Result<f64> {
        let exponent = self.interference_exponent(serving, gamma, r, &[BsTier::Sbs, BsTier::Mbs])?;
        Ok((-exponent).exp())
    }

    /// `-ln` of the transform, restricted to interferers of `tiers`.
    pub(crate) fn interference_exponent(
        &self,
        serving: TierLink,
        gamma: f64,
        r: f64,
        tiers: &[BsTier],
    ) -> Result<f64> {
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let cfg = self.config();
        let (a_s, alpha_s) = path_loss_params(cfg, serving.state);
        let serving_power = self.biased_power(serving.tier.transmitter()) * a_s * r.powf(-alpha_s);
        let spec = self.precision().laplace;
        let mut exponent = 0.0;
        for &j in serving.tier.interferer_tiers() {
            if !tiers.contains(&j) {
                continue;
            }
            let lambda = self.density(j);
            if lambda == 0.0 {
                continue;
            }
            for t in LinkState::ALL {
                let (a_t, alpha_t) = path_loss_params(cfg, t);
                let interferer_power = self.biased_power(j) * a_t;
                if interferer_power == 0.0 {
                    continue;
                }
                if serving_power == 0.0 {
                    return Ok(f64::INFINITY);
                }
                let lower = self.exclusion_distance(serving, j, t, r);
                if !lower.is_finite() {
                    continue;
                }
                // 1 / (1 + S / (gamma I(u))) = 1 / (1 + u^alpha_t / c)
                let c = gamma * interferer_power / serving_power;
                let beta = cfg.beta;
                let integrand = |u: f64| -> Result<f64> {
                    let p = state_probability_unchecked(t, u, beta);
                    if p == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(p * u / (1.0 + u.powf(alpha_t) / c))
                };
                let value = try_integrate_power_tail(integrand, lower, &[LOS_CRITICAL_DISTANCE], &spec)?.value;
                exponent += 2.0 * PI * lambda * value;
            }
        }
        Ok(exponent)
    }

    /// LoS-only transform used in the interference-limited regime: every
    /// interferer is LoS, blockage is ignored, and the serving link is an
    /// SBS over LoS. `s_argument = gamma r^alpha_L`.
    pub fn laplace_interference_limited(&self, s_argument: f64, r: f64) -> Result<f64> {
        let q = LaplaceQuery::new(TierLink::new(Tier::Sbs, LinkState::Los), s_argument, r)?;
        let gamma = q.threshold(self);
        Ok((-self.interference_limited_exponent(gamma, r)).exp())
    }

    pub(crate) fn interference_limited_exponent(&self, gamma: f64, r: f64) -> f64 {
        if gamma == 0.0 {
            return 0.0;
        }
        let alpha = self.config().alpha_los;
        let serving = self.biased_power(BsTier::Sbs);
        if serving == 0.0 {
            return f64::INFINITY;
        }
        let mut exponent = 0.0;
        for j in BsTier::ALL {
            let lambda = self.density(j);
            let interferer = self.biased_power(j);
            if lambda == 0.0 || interferer == 0.0 {
                continue;
            }
            // int_d^inf u / (1 + u^alpha / c) du = c^{2/alpha} G(d c^{-1/alpha})
            let c = gamma * r.powf(alpha) * interferer / serving;
            let lower = (interferer / serving).powf(1.0 / alpha) * r;
            let scale = c.powf(1.0 / alpha);
            exponent += 2.0 * PI * lambda * scale * scale * power_law_tail(lower / scale, alpha);
        }
        exponent
    }
}
