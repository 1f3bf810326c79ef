//! Serving-distance densities and biased-association probabilities.
//!
//! The fourteen exclusion probabilities share one template. A link served by
//! tier `k` in state `s` at distance `r` excludes every tier-`j`, state-`t`
//! transmitter whose fading-free biased power would beat it, i.e. all such
//! transmitters closer than
//!
//! ```text
//! d(r) = (P_k B_k A_s / (P_j B_j A_t))^(-1/alpha_t) * r^(alpha_s / alpha_t)
//! ```
//!
//! and the probability of that void is `exp(-lambda_j pi d(r)^2)`. Fading
//! ratios are taken at their Rayleigh mean of one.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, QuadError, Result};
use crate::model::{path_loss_params, state_probability_unchecked, LinkState, LOS_CRITICAL_DISTANCE};
use crate::network::{BsTier, Network};
use crate::quadrature::try_integrate_gaussian_tail;

/// Receiving side of a link: a user served by an SBS or MBS, or an SBS
/// backhauled by an MBS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Sbs,
    Mbs,
    Backhaul,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Sbs, Tier::Mbs, Tier::Backhaul];

    /// Tier of the transmitting base station.
    pub fn transmitter(self) -> BsTier {
        match self {
            Tier::Sbs => BsTier::Sbs,
            Tier::Mbs | Tier::Backhaul => BsTier::Mbs,
        }
    }

    /// Tiers whose transmitters interfere on this link.
    pub fn interferer_tiers(self) -> &'static [BsTier] {
        match self {
            Tier::Sbs | Tier::Mbs => &[BsTier::Sbs, BsTier::Mbs],
            Tier::Backhaul => &[BsTier::Mbs],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Tier::Sbs => "sbs",
            Tier::Mbs => "mbs",
            Tier::Backhaul => "backhaul",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbs" | "s" => Ok(Tier::Sbs),
            "mbs" | "m" => Ok(Tier::Mbs),
            "backhaul" | "bh" => Ok(Tier::Backhaul),
            other => Err(Error::usage(format!("unknown tier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TierLink {
    pub tier: Tier,
    pub state: LinkState,
}

impl TierLink {
    pub const fn new(tier: Tier, state: LinkState) -> Self {
        Self { tier, state }
    }

    /// The six serving configurations.
    pub const ALL: [TierLink; 6] = [
        TierLink::new(Tier::Sbs, LinkState::Los),
        TierLink::new(Tier::Sbs, LinkState::Nlos),
        TierLink::new(Tier::Mbs, LinkState::Los),
        TierLink::new(Tier::Mbs, LinkState::Nlos),
        TierLink::new(Tier::Backhaul, LinkState::Los),
        TierLink::new(Tier::Backhaul, LinkState::Nlos),
    ];
}

impl fmt::Display for TierLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.tier, self.state)
    }
}

/// The fourteen association exclusion events. The name reads
/// `<serving state><interferer state>_<serving tier><interferer tier>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExclusionKind {
    LnSs,
    LlSm,
    LnSm,
    NlSs,
    NlSm,
    NnSm,
    LnMm,
    LlMs,
    LnMs,
    NlMm,
    NlMs,
    NnMs,
    LnBh,
    NlBh,
}

use LinkState::{Los, Nlos};

/// One row of the exclusion table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExclusionRule {
    pub kind: ExclusionKind,
    pub serving: TierLink,
    pub interferer: BsTier,
    pub interferer_state: LinkState,
}

const fn rule(kind: ExclusionKind, tier: Tier, state: LinkState, j: BsTier, t: LinkState) -> ExclusionRule {
    ExclusionRule {
        kind,
        serving: TierLink::new(tier, state),
        interferer: j,
        interferer_state: t,
    }
}

pub const EXCLUSION_TABLE: [ExclusionRule; 14] = [
    rule(ExclusionKind::LnSs, Tier::Sbs, Los, BsTier::Sbs, Nlos),
    rule(ExclusionKind::LlSm, Tier::Sbs, Los, BsTier::Mbs, Los),
    rule(ExclusionKind::LnSm, Tier::Sbs, Los, BsTier::Mbs, Nlos),
    rule(ExclusionKind::NlSs, Tier::Sbs, Nlos, BsTier::Sbs, Los),
    rule(ExclusionKind::NlSm, Tier::Sbs, Nlos, BsTier::Mbs, Los),
    rule(ExclusionKind::NnSm, Tier::Sbs, Nlos, BsTier::Mbs, Nlos),
    rule(ExclusionKind::LnMm, Tier::Mbs, Los, BsTier::Mbs, Nlos),
    rule(ExclusionKind::LlMs, Tier::Mbs, Los, BsTier::Sbs, Los),
    rule(ExclusionKind::LnMs, Tier::Mbs, Los, BsTier::Sbs, Nlos),
    rule(ExclusionKind::NlMm, Tier::Mbs, Nlos, BsTier::Mbs, Los),
    rule(ExclusionKind::NlMs, Tier::Mbs, Nlos, BsTier::Sbs, Los),
    rule(ExclusionKind::NnMs, Tier::Mbs, Nlos, BsTier::Sbs, Nlos),
    rule(ExclusionKind::LnBh, Tier::Backhaul, Los, BsTier::Mbs, Nlos),
    rule(ExclusionKind::NlBh, Tier::Backhaul, Nlos, BsTier::Mbs, Los),
];

impl ExclusionKind {
    pub const ALL: [ExclusionKind; 14] = [
        ExclusionKind::LnSs,
        ExclusionKind::LlSm,
        ExclusionKind::LnSm,
        ExclusionKind::NlSs,
        ExclusionKind::NlSm,
        ExclusionKind::NnSm,
        ExclusionKind::LnMm,
        ExclusionKind::LlMs,
        ExclusionKind::LnMs,
        ExclusionKind::NlMm,
        ExclusionKind::NlMs,
        ExclusionKind::NnMs,
        ExclusionKind::LnBh,
        ExclusionKind::NlBh,
    ];

    pub fn rule(self) -> &'static ExclusionRule {
        &EXCLUSION_TABLE[self as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            ExclusionKind::LnSs => "ln_ss",
            ExclusionKind::LlSm => "ll_sm",
            ExclusionKind::LnSm => "ln_sm",
            ExclusionKind::NlSs => "nl_ss",
            ExclusionKind::NlSm => "nl_sm",
            ExclusionKind::NnSm => "nn_sm",
            ExclusionKind::LnMm => "ln_mm",
            ExclusionKind::LlMs => "ll_ms",
            ExclusionKind::LnMs => "ln_ms",
            ExclusionKind::NlMm => "nl_mm",
            ExclusionKind::NlMs => "nl_ms",
            ExclusionKind::NnMs => "nn_ms",
            ExclusionKind::LnBh => "ln_bh",
            ExclusionKind::NlBh => "nl_bh",
        }
    }

    /// The exclusion events whose product forms the association density of
    /// `serving`.
    pub fn for_serving(serving: TierLink) -> impl Iterator<Item = ExclusionKind> {
        EXCLUSION_TABLE
            .iter()
            .filter(move |r| r.serving == serving)
            .map(|r| r.kind)
    }
}

impl FromStr for ExclusionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExclusionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown exclusion kind `{s}`")))
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("distance must be positive and finite, got {r}")))
    }
}

impl Network {
    /// Density of the distance to the nearest transmitter of `link.tier`,
    /// jointly with that link being in `link.state`.
    pub fn nearest_distance_pdf(&self, link: TierLink, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.nearest_distance_pdf_unchecked(link, r))
    }

    #[inline]
    pub(crate) fn nearest_distance_pdf_unchecked(&self, link: TierLink, r: f64) -> f64 {
        let lambda = self.density(link.tier.transmitter());
        if lambda == 0.0 {
            return 0.0;
        }
        state_probability_unchecked(link.state, r, self.config().beta)
            * (-PI * r * r * lambda).exp()
            * 2.0
            * PI
            * r
            * lambda
    }

    /// Radius inside which a transmitter of (`interferer`, `interferer_state`)
    /// would out-power a `serving` link at distance `r`. Infinite when the
    /// serving transmitter is silent, zero when the interferer is.
    pub fn exclusion_distance(
        &self,
        serving: TierLink,
        interferer: BsTier,
        interferer_state: LinkState,
        r: f64,
    ) -> f64 {
        let (a_s, alpha_s) = path_loss_params(self.config(), serving.state);
        let (a_t, alpha_t) = path_loss_params(self.config(), interferer_state);
        let serving_power = self.biased_power(serving.tier.transmitter()) * a_s;
        let interferer_power = self.biased_power(interferer) * a_t;
        if interferer_power == 0.0 {
            return 0.0;
        }
        if serving_power == 0.0 {
            return f64::INFINITY;
        }
        (serving_power / interferer_power).powf(-1.0 / alpha_t) * r.powf(alpha_s / alpha_t)
    }

    /// One of the fourteen association exclusion probabilities.
    pub fn exclusion_probability(&self, kind: ExclusionKind, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.exclusion_probability_unchecked(kind, r))
    }

    #[inline]
    pub(crate) fn exclusion_probability_unchecked(&self, kind: ExclusionKind, r: f64) -> f64 {
        let rule = kind.rule();
        let lambda = self.density(rule.interferer);
        if lambda == 0.0 {
            return 1.0;
        }
        let d = self.exclusion_distance(rule.serving, rule.interferer, rule.interferer_state, r);
        (-lambda * PI * d * d).exp()
    }

    /// Association density of `target`: the product of its exclusion
    /// probabilities and the nearest-distance density.
    pub fn association_density(&self, target: TierLink, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.association_density_unchecked(target, r))
    }

    #[inline]
    pub(crate) fn association_density_unchecked(&self, target: TierLink, r: f64) -> f64 {
        let base = self.nearest_distance_pdf_unchecked(target, r);
        if base == 0.0 {
            return 0.0;
        }
        ExclusionKind::for_serving(target).fold(base, |acc, k| {
            if acc == 0.0 {
                0.0
            } else {
                acc * self.exclusion_probability_unchecked(k, r)
            }
        })
    }

    /// Integrate `f(r) * F_target(r)` over serving distance, truncating the
    /// Gaussian tail of the serving tier.
    pub(crate) fn integrate_over_association<F>(&self, target: TierLink, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let lambda = self.density(target.tier.transmitter());
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let spec = self.precision().distance;
        let r = try_integrate_gaussian_tail(
            |r| {
                if r <= 0.0 {
                    return Ok(0.0);
                }
                let w = self.association_density_unchecked(target, r);
                if w == 0.0 {
                    Ok(0.0)
                } else {
                    Ok::<f64, Error>(w * f(r)?)
                }
            },
            lambda,
            &[LOS_CRITICAL_DISTANCE],
            &spec,
        )?;
        Ok(r.value)
    }

    /// `int F_target(r) dr`, the probability mass of associating through
    /// `target`.
    pub fn association_mass(&self, target: TierLink) -> Result<f64> {
        self.integrate_over_association(target, |_| Ok(1.0))
    }

    /// `int (f^L + f^NL) dr` for the nearest transmitter of `tier`.
    pub fn nearest_distance_mass(&self, tier: Tier) -> Result<f64> {
        let lambda = self.density(tier.transmitter());
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let spec = self.precision().distance;
        let r = try_integrate_gaussian_tail(
            |r| {
                Ok::<f64, QuadError>(
                    LinkState::ALL
                        .iter()
                        .map(|&s| self.nearest_distance_pdf_unchecked(TierLink::new(tier, s), r))
                        .sum(),
                )
            },
            lambda,
            &[LOS_CRITICAL_DISTANCE],
            &spec,
        )?;
        Ok(r.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkConfig;
    use crate::model::los_probability;
    use proptest::prelude::*;

    fn net() -> Network {
        Network::new(&NetworkConfig::table2()).unwrap()
    }

    #[test]
    fn table_has_fourteen_distinct_rows_in_order() {
        for (i, k) in ExclusionKind::ALL.iter().enumerate() {
            assert_eq!(EXCLUSION_TABLE[i].kind, *k);
            assert_eq!(k.name().parse::<ExclusionKind>().unwrap(), *k);
        }
        for link in TierLink::ALL {
            let n = ExclusionKind::for_serving(link).count();
            let expected = if link.tier == Tier::Backhaul { 1 } else { 3 };
            assert_eq!(n, expected, "{link}");
        }
        assert!("zz_top".parse::<ExclusionKind>().is_err());
    }

    #[test]
    fn pdf_pair_sums_to_nearest_neighbour() {
        let n = net();
        for &r in &[1.0, 17.0, 30.0, 120.0, 400.0] {
            let lambda = 1e-4;
            let total = n.nearest_distance_pdf(TierLink::new(Tier::Sbs, Los), r).unwrap()
                + n.nearest_distance_pdf(TierLink::new(Tier::Sbs, Nlos), r).unwrap();
            let expected = (-PI * r * r * lambda).exp() * 2.0 * PI * r * lambda;
            assert!((total - expected).abs() <= 1e-15 * expected.max(1e-300), "{r}");
        }
    }

    #[test]
    fn pdf_direct_formula() {
        let n = net();
        let r = 30.0;
        let expected = los_probability(30.0, 0.027).unwrap() * (-PI * 900.0 * 1e-4).exp() * 2.0 * PI * 30.0 * 1e-4;
        let v = n.nearest_distance_pdf(TierLink::new(Tier::Sbs, Los), r).unwrap();
        assert!((v - expected).abs() < 1e-18);
        assert!(n.nearest_distance_pdf(TierLink::new(Tier::Sbs, Los), 0.0).is_err());
    }

    #[test]
    fn pdf_pairs_integrate_to_one() {
        let n = net();
        for tier in Tier::ALL {
            let m = n.nearest_distance_mass(tier).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "{tier}: {m}");
        }
    }

    #[test]
    fn degenerate_single_state_path_loss() {
        let mut cfg = NetworkConfig::table2();
        cfg.a_nlos = cfg.a_los;
        cfg.alpha_nlos = cfg.alpha_los;
        let n = Network::new(&cfg).unwrap();
        for &r in &[5.0, 40.0, 90.0] {
            let p = n.exclusion_probability(ExclusionKind::LnSs, r).unwrap();
            let expected = (-1e-4 * PI * r * r).exp();
            assert!((p - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn equal_biased_powers() {
        let mut cfg = NetworkConfig::table2();
        let n0 = Network::new(&cfg).unwrap();
        // choose B_m so that P_m B_m == P_s B_s
        cfg.bias_m = n0.sbs_power() * cfg.bias_s / n0.mbs_power();
        let n = Network::new(&cfg).unwrap();
        for &r in &[5.0, 40.0, 300.0] {
            let p = n.exclusion_probability(ExclusionKind::LlSm, r).unwrap();
            let expected = (-1e-5 * PI * r * r).exp();
            assert!((p - expected).abs() < 1e-12, "{p} {expected}");
        }
    }

    #[test]
    fn ln_sm_direct_formula() {
        let n = net();
        let cfg = n.config();
        let ratio = n.sbs_power() * cfg.bias_s * cfg.a_los / (n.mbs_power() * cfg.bias_m * cfg.a_nlos);
        let d = ratio.powf(-1.0 / cfg.alpha_nlos) * 20f64.powf(cfg.alpha_los / cfg.alpha_nlos);
        let expected = (-cfg.lambda_m * PI * d * d).exp();
        let v = n.exclusion_probability(ExclusionKind::LnSm, 20.0).unwrap();
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn vanishing_mbs_tier_drops_its_factors() {
        let mut cfg = NetworkConfig::table2();
        cfg.lambda_m = 0.0;
        let n = Network::new(&cfg).unwrap();
        let link = TierLink::new(Tier::Sbs, Los);
        for &r in &[3.0, 25.0, 80.0] {
            let expected = n.exclusion_probability(ExclusionKind::LnSs, r).unwrap()
                * n.nearest_distance_pdf(link, r).unwrap();
            assert_eq!(n.association_density(link, r).unwrap(), expected);
        }
    }

    #[test]
    fn backhaul_density_direct_formula() {
        let n = net();
        let link = TierLink::new(Tier::Backhaul, Los);
        let expected = n.exclusion_probability(ExclusionKind::LnBh, 100.0).unwrap()
            * n.nearest_distance_pdf(link, 100.0).unwrap();
        assert_eq!(n.association_density(link, 100.0).unwrap(), expected);
        // backhaul uses the MBS density
        let lambda = 1e-5;
        let p = los_probability(100.0, 0.027).unwrap();
        let pdf = p * (-PI * 1e4 * lambda).exp() * 2.0 * PI * 100.0 * lambda;
        assert!((n.nearest_distance_pdf(link, 100.0).unwrap() - pdf).abs() < 1e-18);
    }

    #[test]
    fn silent_sbs_tier_never_serves() {
        let n = net().with_cache(1000).unwrap();
        assert_eq!(n.sbs_power(), 0.0);
        for &r in &[1.0, 30.0] {
            assert_eq!(n.association_density(TierLink::new(Tier::Sbs, Los), r).unwrap(), 0.0);
            // nothing excludes an MBS-served user
            assert_eq!(n.exclusion_probability(ExclusionKind::LlMs, r).unwrap(), 1.0);
        }
    }

    proptest! {
        #[test]
        fn exclusion_monotone_in_distance(k in 0usize..14, r in 0.5f64..500.0, dr in 0.01f64..50.0) {
            let n = net();
            let kind = ExclusionKind::ALL[k];
            let a = n.exclusion_probability(kind, r).unwrap();
            let b = n.exclusion_probability(kind, r + dr).unwrap();
            prop_assert!(b <= a);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn exclusion_invariant_under_common_power_scaling(k in 0usize..14, r in 0.5f64..500.0, scale in 0.01f64..100.0) {
            let base = NetworkConfig::table2();
            let mut scaled = base.clone();
            scaled.bias_s *= scale;
            scaled.bias_m *= scale;
            let a = Network::new(&base).unwrap();
            let b = Network::new(&scaled).unwrap();
            let kind = ExclusionKind::ALL[k];
            let pa = a.exclusion_probability(kind, r).unwrap();
            let pb = b.exclusion_probability(kind, r).unwrap();
            prop_assert!((pa - pb).abs() <= 1e-12 * pa.max(1e-300) + 1e-300);
        }

        #[test]
        fn association_density_non_negative(i in 0usize..6, r in 0.01f64..3000.0) {
            let n = net();
            let v = n.association_density(TierLink::ALL[i], r).unwrap();
            prop_assert!(v >= 0.0 && v.is_finite());
        }
    }

    #[test]
    fn association_density_has_gaussian_tail() {
        let n = net();
        for link in TierLink::ALL {
            let lambda = n.density(link.tier.transmitter());
            let r = 4.0 / (PI * lambda).sqrt();
            let v = n.association_density(link, r).unwrap();
            // exp(-16) * 2 pi r lambda bounds it
            assert!(v <= (-16.0f64).exp() * 2.0 * PI * r * lambda, "{link}");
        }
    }
}
