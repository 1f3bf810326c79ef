//! Average potential throughput (APT), spectral-efficiency distributions,
//! area spectral efficiency (ASE) and bandwidth-partition optimisation.
//!
//! A user served by an SBS over a cache miss sees the spectral efficiency
//! `min(eta log2(1 + SINR_access), (1 - eta) log2(1 + SINR_bh) / (1 - p_h))`,
//! normalised by the total bandwidth. MBS users see `eta log2(1 + SINR)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Tier, TierLink};
use crate::model::LinkState;
use crate::network::Network;
use crate::quadrature::try_integrate_semi_infinite;

/// Bandwidth split and cache capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionPoint {
    /// Access share of the bandwidth.
    pub eta: f64,
    /// Cached files per SBS.
    pub cache: u64,
}

impl PartitionPoint {
    pub fn new(eta: f64, cache: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain(format!("bandwidth partition must lie in [0, 1], got {eta}")));
        }
        Ok(Self { eta, cache })
    }
}

/// Values indexed by (access state, backhaul state).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StatePairs {
    pub ll: f64,
    pub ln: f64,
    pub nl: f64,
    pub nn: f64,
}

impl StatePairs {
    pub fn get(&self, access: LinkState, backhaul: LinkState) -> f64 {
        match (access, backhaul) {
            (LinkState::Los, LinkState::Los) => self.ll,
            (LinkState::Los, LinkState::Nlos) => self.ln,
            (LinkState::Nlos, LinkState::Los) => self.nl,
            (LinkState::Nlos, LinkState::Nlos) => self.nn,
        }
    }

    fn from_fn(mut f: impl FnMut(LinkState, LinkState) -> Result<f64>) -> Result<Self> {
        use LinkState::{Los, Nlos};
        Ok(Self { ll: f(Los, Los)?, ln: f(Los, Nlos)?, nl: f(Nlos, Los)?, nn: f(Nlos, Nlos)? })
    }

    pub fn sum(&self) -> f64 {
        self.ll + self.ln + self.nl + self.nn
    }
}

/// APT in bit/s per m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AptResult {
    pub total: f64,
    pub sbs: StatePairs,
    pub mbs_los: f64,
    pub mbs_nlos: f64,
}

impl AptResult {
    pub fn sbs_total(&self) -> f64 {
        self.sbs.sum()
    }

    pub fn mbs_total(&self) -> f64 {
        self.mbs_los + self.mbs_nlos
    }
}

/// ASE in bit/s/Hz per m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AseResult {
    pub total: f64,
    pub sbs: f64,
    pub mbs: f64,
}

impl AseResult {
    fn new(sbs: f64, mbs: f64) -> Self {
        Self { total: sbs + mbs, sbs, mbs }
    }
}

/// Quantity maximised by [`Network::optimal_partition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// APT at the given linear SINR threshold.
    Apt { gamma0: f64 },
    Ase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalPartition {
    /// Best point of the grid.
    pub grid_eta: f64,
    /// After golden-section refinement around `grid_eta`.
    pub eta: f64,
    pub value: f64,
}

pub const DEFAULT_ETA_STEP: f64 = 0.01;
const REFINE_TOL: f64 = 1e-3;

/// `2^(rho / eta) - 1`, infinite when the access share is zero.
pub fn access_threshold(rho: f64, eta: f64) -> f64 {
    if rho == 0.0 {
        0.0
    } else if eta == 0.0 {
        f64::INFINITY
    } else {
        (rho / eta * std::f64::consts::LN_2).exp_m1()
    }
}

/// `2^((1 - p_h) rho / (1 - eta)) - 1`; zero for a fully cached library.
pub fn backhaul_threshold(rho: f64, eta: f64, hit_ratio: f64) -> f64 {
    let load = (1.0 - hit_ratio) * rho;
    if load <= 0.0 {
        0.0
    } else if eta >= 1.0 {
        f64::INFINITY
    } else {
        (load / (1.0 - eta) * std::f64::consts::LN_2).exp_m1()
    }
}

/// Approximation used for the coverage terms inside the ASE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AseModel {
    General,
    NoiseLimited,
    InterferenceLimited,
}

impl Network {
    fn at_point(&self, p: PartitionPoint) -> Result<Network> {
        PartitionPoint::new(p.eta, p.cache)?;
        self.with_cache(p.cache)
    }

    /// APT at `p` for SINR threshold `gamma0` (linear).
    pub fn apt(&self, p: PartitionPoint, gamma0: f64) -> Result<AptResult> {
        Ok(self.apt_sweep(&[p.eta], p.cache, gamma0)?[0])
    }

    /// APT at several partitions sharing one cache capacity; coverage is
    /// evaluated once.
    pub fn apt_sweep(&self, etas: &[f64], cache: u64, gamma0: f64) -> Result<Vec<AptResult>> {
        if !(gamma0 >= 0.0 && gamma0.is_finite()) {
            return Err(Error::domain(format!("SINR threshold must be finite and >= 0, got {gamma0}")));
        }
        for &eta in etas {
            PartitionPoint::new(eta, cache)?;
        }
        let net = self.with_cache(cache)?;
        let s = net.coverage(Tier::Sbs, gamma0)?;
        let m = net.coverage(Tier::Mbs, gamma0)?;
        let bh = net.coverage(Tier::Backhaul, gamma0)?;
        let cfg = net.config();
        let unit = cfg.bandwidth_hz * (1.0 + gamma0).log2();
        let miss = 1.0 - net.hit_ratio();
        Ok(etas
            .iter()
            .map(|&eta| {
                let sbs = StatePairs::from_fn(|a, b| {
                    let access = cfg.lambda_s * eta * unit * s.component(a);
                    let backhaul = if miss <= 0.0 {
                        f64::INFINITY
                    } else {
                        cfg.lambda_m * (1.0 - eta) * unit * bh.component(b) / miss
                    };
                    Ok(access.min(backhaul))
                })
                .expect("infallible");
                let mbs_los = cfg.lambda_m * eta * unit * m.los;
                let mbs_nlos = cfg.lambda_m * eta * unit * m.nlos;
                AptResult { total: sbs.sum() + mbs_los + mbs_nlos, sbs, mbs_los, mbs_nlos }
            })
            .collect())
    }

    /// P[R > rho] for an SBS user at access distance `r_s` whose SBS sits at
    /// backhaul distance `r_bh`, per (access, backhaul) state.
    pub fn rate_ccdf_sbs(&self, rho: f64, r_s: f64, r_bh: f64, p: PartitionPoint) -> Result<StatePairs> {
        check_rate(rho)?;
        let net = self.at_point(p)?;
        let ta = access_threshold(rho, p.eta);
        let tb = backhaul_threshold(rho, p.eta, net.hit_ratio());
        StatePairs::from_fn(|a, b| {
            let access = net.conditional_coverage(TierLink::new(Tier::Sbs, a), ta, r_s)?;
            if access == 0.0 {
                return Ok(0.0);
            }
            Ok(access * net.conditional_coverage(TierLink::new(Tier::Backhaul, b), tb, r_bh)?)
        })
    }

    /// P[R > rho] for an MBS user at distance `r_m`, as (LoS, NLoS).
    pub fn rate_ccdf_mbs(&self, rho: f64, r_m: f64, p: PartitionPoint) -> Result<(f64, f64)> {
        check_rate(rho)?;
        let net = self.at_point(p)?;
        let t = access_threshold(rho, p.eta);
        Ok((
            net.conditional_coverage(TierLink::new(Tier::Mbs, LinkState::Los), t, r_m)?,
            net.conditional_coverage(TierLink::new(Tier::Mbs, LinkState::Nlos), t, r_m)?,
        ))
    }

    /// ASE at `p`.
    pub fn ase(&self, p: PartitionPoint) -> Result<AseResult> {
        self.at_point(p)?.ase_with(p.eta, AseModel::General)
    }

    /// ASE with every interference term dropped.
    pub fn ase_noise_limited(&self, p: PartitionPoint) -> Result<AseResult> {
        self.at_point(p)?.ase_with(p.eta, AseModel::NoiseLimited)
    }

    /// ASE keeping only LoS SBS access, with noise and NLoS interference
    /// dropped on the access link.
    pub fn ase_interference_limited(&self, p: PartitionPoint) -> Result<AseResult> {
        self.at_point(p)?.ase_with(p.eta, AseModel::InterferenceLimited)
    }

    fn tier_coverage(&self, tier: Tier, gamma: f64, regime: AseModel) -> Result<f64> {
        if gamma.is_infinite() {
            return Ok(0.0);
        }
        match (regime, tier) {
            (AseModel::NoiseLimited, _) => {
                let mut total = 0.0;
                for state in LinkState::ALL {
                    let link = TierLink::new(tier, state);
                    total += self.integrate_over_association(link, |r| Ok(self.noise_only_coverage(link, gamma, r)))?;
                }
                Ok(total)
            }
            (AseModel::InterferenceLimited, Tier::Sbs) => {
                let link = TierLink::new(Tier::Sbs, LinkState::Los);
                self.integrate_over_association(link, |r| Ok((-self.interference_limited_exponent(gamma, r)).exp()))
            }
            _ => Ok(self.coverage(tier, gamma)?.total()),
        }
    }

    // The rate ccdf factorises over the access and backhaul distances, so the
    // distance integrals collapse onto marginal coverage and only the
    // integral over rho remains.
    fn ase_with(&self, eta: f64, regime: AseModel) -> Result<AseResult> {
        let cfg = self.config();
        let spec = self.precision().rate;
        let hit = self.hit_ratio();
        let sbs = if eta == 0.0 || cfg.lambda_s == 0.0 || (eta == 1.0 && hit < 1.0) {
            0.0
        } else {
            try_integrate_semi_infinite(
                |rho| {
                    let access = self.tier_coverage(Tier::Sbs, access_threshold(rho, eta), regime)?;
                    if access == 0.0 {
                        return Ok::<f64, Error>(0.0);
                    }
                    if hit >= 1.0 {
                        return Ok(access);
                    }
                    let bh_regime = if regime == AseModel::NoiseLimited { regime } else { AseModel::General };
                    let tb = backhaul_threshold(rho, eta, hit);
                    Ok(access * self.tier_coverage(Tier::Backhaul, tb, bh_regime)?)
                },
                0.0,
                &spec,
            )?
            .value
        };
        let mbs = if eta == 0.0 || cfg.lambda_m == 0.0 {
            0.0
        } else {
            let mbs_regime = if regime == AseModel::NoiseLimited { regime } else { AseModel::General };
            try_integrate_semi_infinite(
                |rho| self.tier_coverage(Tier::Mbs, access_threshold(rho, eta), mbs_regime),
                0.0,
                &spec,
            )?
            .value
        };
        Ok(AseResult::new(cfg.lambda_u * sbs, cfg.lambda_u * mbs))
    }

    /// ASE by direct nested quadrature over backhaul distance, access
    /// distance and rate, without factorising. Slow; meant for checking
    /// [`Network::ase`].
    pub fn ase_nested(&self, p: PartitionPoint) -> Result<AseResult> {
        let net = self.at_point(p)?;
        let eta = p.eta;
        let cfg = net.config();
        let spec = net.precision().rate;
        let hit = net.hit_ratio();
        let mut sbs = 0.0;
        if eta > 0.0 && !(eta == 1.0 && hit < 1.0) {
            for a in LinkState::ALL {
                let access = TierLink::new(Tier::Sbs, a);
                let access_integral = |r_bh: Option<(TierLink, f64)>| {
                    net.integrate_over_association(access, |r_s| {
                        Ok(try_integrate_semi_infinite(
                            |rho| {
                                let pa = net.conditional_coverage_unchecked(access, access_threshold(rho, eta), r_s)?;
                                let Some((backhaul, r_bh)) = r_bh else {
                                    return Ok::<f64, Error>(pa);
                                };
                                if pa == 0.0 {
                                    return Ok(0.0);
                                }
                                let tb = backhaul_threshold(rho, eta, hit);
                                Ok(pa * net.conditional_coverage_unchecked(backhaul, tb, r_bh)?)
                            },
                            0.0,
                            &spec,
                        )?
                        .value)
                    })
                };
                if hit >= 1.0 {
                    sbs += access_integral(None)?;
                    continue;
                }
                for b in LinkState::ALL {
                    let backhaul = TierLink::new(Tier::Backhaul, b);
                    sbs += net.integrate_over_association(backhaul, |r_bh| access_integral(Some((backhaul, r_bh))))?;
                }
            }
        }
        let mut mbs = 0.0;
        if eta > 0.0 {
            for s in LinkState::ALL {
                let link = TierLink::new(Tier::Mbs, s);
                mbs += net.integrate_over_association(link, |r| {
                    Ok(try_integrate_semi_infinite(
                        |rho| net.conditional_coverage_unchecked(link, access_threshold(rho, eta), r),
                        0.0,
                        &spec,
                    )?
                    .value)
                })?;
            }
        }
        Ok(AseResult::new(cfg.lambda_u * sbs, cfg.lambda_u * mbs))
    }

    /// ASE at many partitions sharing one cache capacity. Coverage is
    /// tabulated once against the threshold, so each extra partition costs
    /// a single cheap integral.
    pub fn ase_sweep(&self, etas: &[f64], cache: u64, model: AseModel) -> Result<Vec<AseResult>> {
        for &eta in etas {
            PartitionPoint::new(eta, cache)?;
        }
        let net = self.with_cache(cache)?;
        let sweeper = AseSweeper::new(&net, model)?;
        etas.par_iter().map(|&eta| sweeper.at(eta)).collect()
    }

    /// Values of `objective` on the grid `0, step, 2 step, ..., 1`.
    pub fn partition_curve(&self, cache: u64, objective: Objective, step: f64) -> Result<Vec<(f64, f64)>> {
        let grid = eta_grid(step)?;
        let values: Vec<f64> = match objective {
            Objective::Apt { gamma0 } => self.apt_sweep(&grid, cache, gamma0)?.into_iter().map(|a| a.total).collect(),
            Objective::Ase => self.ase_sweep(&grid, cache, AseModel::General)?.into_iter().map(|a| a.total).collect(),
        };
        Ok(grid.into_iter().zip(values).collect())
    }

    /// Partition maximising `objective` for cache capacity `cache`: the best
    /// point of a grid with spacing `step`, then golden-section refinement
    /// inside the neighbouring grid cells. Ties go to the smaller share.
    pub fn optimal_partition(&self, cache: u64, objective: Objective, step: f64) -> Result<OptimalPartition> {
        let grid = eta_grid(step)?;
        let net = self.with_cache(cache)?;
        let (curve, (eta, value), best) = match objective {
            Objective::Apt { gamma0 } => {
                let curve = self.partition_curve(cache, objective, step)?;
                let best = argmax(&curve);
                let (lo, hi) = neighbours(&curve, best);
                let refined = golden_section(
                    |e| Ok(net.apt(PartitionPoint::new(e, cache)?, gamma0)?.total),
                    lo,
                    hi,
                    REFINE_TOL,
                )?;
                (curve, refined, best)
            }
            Objective::Ase => {
                let sweeper = AseSweeper::new(&net, AseModel::General)?;
                let curve = grid
                    .par_iter()
                    .map(|&eta| Ok((eta, sweeper.at(eta)?.total)))
                    .collect::<Result<Vec<_>>>()?;
                let best = argmax(&curve);
                let (lo, hi) = neighbours(&curve, best);
                let refined = golden_section(|e| Ok(sweeper.at(e)?.total), lo, hi, REFINE_TOL)?;
                (curve, refined, best)
            }
        };
        let (grid_eta, grid_value) = curve[best];
        Ok(if value > grid_value {
            OptimalPartition { grid_eta, eta, value }
        } else {
            OptimalPartition { grid_eta, eta: grid_eta, value: grid_value }
        })
    }

    /// Access share freed by caching: grid-optimal ASE partition at `cache`
    /// minus that without a cache.
    pub fn saved_spectrum(&self, cache: u64, step: f64) -> Result<f64> {
        let with = self.optimal_partition(cache, Objective::Ase, step)?.grid_eta;
        let without = self.optimal_partition(0, Objective::Ase, step)?.grid_eta;
        Ok(with - without)
    }
}

fn neighbours(curve: &[(f64, f64)], best: usize) -> (f64, f64) {
    let lo = if best == 0 { curve[0].0 } else { curve[best - 1].0 };
    let hi = curve.get(best + 1).map_or(curve[best].0, |c| c.0);
    (lo, hi)
}

// Tabulation range and spacing in ln(gamma). Outside the range coverage is
// evaluated directly.
const CURVE_LN_LO: f64 = -16.0;
const CURVE_LN_HI: f64 = 25.0;
const CURVE_STEP: f64 = 0.1;

/// Tier coverage sampled on a uniform ln(gamma) grid, read back through
/// Catmull-Rom interpolation.
struct CoverageCurve<'a> {
    net: &'a Network,
    tier: Tier,
    model: AseModel,
    values: Vec<f64>,
}

impl<'a> CoverageCurve<'a> {
    fn new(net: &'a Network, tier: Tier, model: AseModel) -> Result<Self> {
        let n = ((CURVE_LN_HI - CURVE_LN_LO) / CURVE_STEP).round() as usize + 1;
        let values = (0..n)
            .into_par_iter()
            .map(|i| net.tier_coverage(tier, (CURVE_LN_LO + i as f64 * CURVE_STEP).exp(), model))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { net, tier, model, values })
    }

    fn eval(&self, gamma: f64) -> Result<f64> {
        if gamma == 0.0 || gamma.is_infinite() {
            return self.net.tier_coverage(self.tier, gamma, self.model);
        }
        let x = (gamma.ln() - CURVE_LN_LO) / CURVE_STEP;
        let last = self.values.len() - 1;
        if !(x >= 0.0 && x <= last as f64) {
            return self.net.tier_coverage(self.tier, gamma, self.model);
        }
        let i = (x.floor() as usize).min(last - 1);
        let t = x - i as f64;
        let p1 = self.values[i];
        let p2 = self.values[i + 1];
        if i == 0 || i + 1 == last {
            return Ok(p1 + t * (p2 - p1));
        }
        let p0 = self.values[i - 1];
        let p3 = self.values[i + 2];
        let v = p1
            + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
        Ok(v.clamp(0.0, 1.0))
    }
}

/// ASE as a function of the access share for a fixed network.
struct AseSweeper<'a> {
    net: &'a Network,
    sbs: Option<CoverageCurve<'a>>,
    backhaul: Option<CoverageCurve<'a>>,
    // MBS part at eta = 1; it is exactly linear in eta
    mbs_unit: f64,
}

impl<'a> AseSweeper<'a> {
    fn new(net: &'a Network, model: AseModel) -> Result<Self> {
        let cfg = net.config();
        let sbs = if cfg.lambda_s > 0.0 { Some(CoverageCurve::new(net, Tier::Sbs, model)?) } else { None };
        let bh_model = if model == AseModel::NoiseLimited { model } else { AseModel::General };
        let backhaul = if sbs.is_some() && net.hit_ratio() < 1.0 {
            Some(CoverageCurve::new(net, Tier::Backhaul, bh_model)?)
        } else {
            None
        };
        let mbs_unit = net.ase_with(1.0, model)?.mbs;
        Ok(Self { net, sbs, backhaul, mbs_unit })
    }

    fn at(&self, eta: f64) -> Result<AseResult> {
        let hit = self.net.hit_ratio();
        let sbs = match &self.sbs {
            Some(curve) if eta > 0.0 && !(eta == 1.0 && hit < 1.0) => {
                try_integrate_semi_infinite(
                    |rho| {
                        let access = curve.eval(access_threshold(rho, eta))?;
                        match &self.backhaul {
                            Some(bh) if access > 0.0 => Ok(access * bh.eval(backhaul_threshold(rho, eta, hit))?),
                            _ => Ok::<f64, Error>(access),
                        }
                    },
                    0.0,
                    &self.net.precision().rate,
                )?
                .value
                    * self.net.config().lambda_u
            }
            _ => 0.0,
        };
        Ok(AseResult::new(sbs, eta * self.mbs_unit))
    }
}

fn check_rate(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("spectral efficiency must be finite and >= 0, got {rho}")))
    }
}

/// `0, step, ..., 1`, always ending at 1.
pub fn eta_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::usage(format!("partition step must lie in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::usage(format!("partition step {step} does not divide [0, 1]")));
    }
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

/// Index of the first maximum.
pub(crate) fn argmax(curve: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, &(_, v)) in curve.iter().enumerate() {
        if v > curve[best].1 {
            best = i;
        }
    }
    best
}

fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{db_to_linear, NetworkConfig};
    use crate::network::Precision;

    fn net() -> Network {
        Network::new(&NetworkConfig::table2()).unwrap().with_precision(Precision::with_rel_tol(1e-4))
    }

    #[test]
    fn partition_point_bounds() {
        assert!(PartitionPoint::new(-0.1, 0).is_err());
        assert!(PartitionPoint::new(1.1, 0).is_err());
        assert!(PartitionPoint::new(0.5, 10).is_ok());
    }

    #[test]
    fn thresholds() {
        assert_eq!(access_threshold(0.0, 0.0), 0.0);
        assert_eq!(access_threshold(1.0, 0.0), f64::INFINITY);
        assert!((access_threshold(1.0, 0.5) - 3.0).abs() < 1e-14);
        assert_eq!(backhaul_threshold(2.0, 0.3, 1.0), 0.0);
        assert_eq!(backhaul_threshold(2.0, 1.0, 0.5), f64::INFINITY);
        assert!((backhaul_threshold(2.0, 0.5, 0.5) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn apt_vanishes_without_access_bandwidth() {
        let n = net();
        let a = n.apt(PartitionPoint::new(0.0, 100).unwrap(), 10.0).unwrap();
        assert_eq!(a.total, 0.0);
    }

    #[test]
    fn apt_sbs_vanishes_without_backhaul_bandwidth() {
        let n = net();
        let a = n.apt(PartitionPoint::new(1.0, 100).unwrap(), 10.0).unwrap();
        assert_eq!(a.sbs_total(), 0.0);
        assert!(a.mbs_total() > 0.0);
    }

    #[test]
    fn apt_matches_hand_assembly() {
        let n = net();
        let g = db_to_linear(10.0);
        let eta = 0.4;
        let a = n.apt(PartitionPoint::new(eta, 100).unwrap(), g).unwrap();
        let cfg = n.config();
        let s = n.coverage(Tier::Sbs, g).unwrap();
        let bh = n.coverage(Tier::Backhaul, g).unwrap();
        let m = n.coverage(Tier::Mbs, g).unwrap();
        let unit = cfg.bandwidth_hz * (1.0 + g).log2();
        let miss = 1.0 - n.hit_ratio();
        let case = |pa: f64, pb: f64| (cfg.lambda_s * eta * unit * pa).min(cfg.lambda_m * (1.0 - eta) * unit * pb / miss);
        assert_eq!(a.sbs.ln, case(s.los, bh.nlos));
        assert_eq!(a.sbs.nl, case(s.nlos, bh.los));
        assert_eq!(a.sbs.ll, case(s.los, bh.los));
        assert_eq!(a.mbs_los, cfg.lambda_m * eta * unit * m.los);
        assert!((a.total - (a.sbs.sum() + a.mbs_los + a.mbs_nlos)).abs() <= 1e-12 * a.total);
    }

    #[test]
    fn full_cache_lifts_backhaul_constraint() {
        let mut cfg = NetworkConfig::table2();
        cfg.w_ca = 0.0;
        let n = Network::new(&cfg).unwrap();
        let a = n.apt(PartitionPoint::new(1.0, cfg.library_size).unwrap(), 1.0).unwrap();
        assert!(a.sbs_total() > 0.0);
    }

    #[test]
    fn rate_ccdf_edges() {
        let n = net();
        let p = PartitionPoint::new(0.5, 100).unwrap();
        let c = n.rate_ccdf_sbs(0.0, 20.0, 150.0, p).unwrap();
        assert_eq!(c, StatePairs { ll: 1.0, ln: 1.0, nl: 1.0, nn: 1.0 });
        assert_eq!(n.rate_ccdf_mbs(0.0, 80.0, p).unwrap(), (1.0, 1.0));
        assert!(n.rate_ccdf_sbs(-1.0, 20.0, 150.0, p).is_err());
    }

    #[test]
    fn rate_ccdf_full_cache_is_access_only() {
        let mut cfg = NetworkConfig::table2();
        cfg.w_ca = 0.0;
        let n = Network::new(&cfg).unwrap();
        let p = PartitionPoint::new(0.5, cfg.library_size).unwrap();
        let c = n.rate_ccdf_sbs(0.1, 15.0, 150.0, p).unwrap();
        let access = n.conditional_coverage(TierLink::new(Tier::Sbs, LinkState::Los), access_threshold(0.1, 0.5), 15.0).unwrap();
        assert_eq!(c.ll, access);
        assert_eq!(c.ln, access);
    }

    #[test]
    fn rate_ccdf_monotone() {
        let n = net();
        let p = PartitionPoint::new(0.6, 100).unwrap();
        let mut prev = (1.0, 1.0);
        for rho in [0.0, 0.01, 0.05, 0.1, 0.2] {
            let m = n.rate_ccdf_mbs(rho, 30.0, p).unwrap();
            assert!(m.0 <= prev.0 && m.1 <= prev.1);
            prev = m;
        }
        let wide = n.rate_ccdf_mbs(0.05, 30.0, PartitionPoint::new(0.9, 100).unwrap()).unwrap();
        let narrow = n.rate_ccdf_mbs(0.05, 30.0, PartitionPoint::new(0.3, 100).unwrap()).unwrap();
        assert!(wide.0 >= narrow.0);
    }

    #[test]
    fn ase_edges() {
        let n = net();
        assert_eq!(n.ase(PartitionPoint::new(0.0, 100).unwrap()).unwrap().total, 0.0);
        let one = n.ase(PartitionPoint::new(1.0, 100).unwrap()).unwrap();
        assert_eq!(one.sbs, 0.0);
        assert!(one.mbs > 0.0);
    }

    #[test]
    fn ase_scales_with_user_density() {
        let mut cfg = NetworkConfig::table2();
        let a = Network::new(&cfg).unwrap().ase(PartitionPoint::new(0.5, 100).unwrap()).unwrap();
        cfg.lambda_u *= 2.0;
        let b = Network::new(&cfg).unwrap().ase(PartitionPoint::new(0.5, 100).unwrap()).unwrap();
        assert!((b.total - 2.0 * a.total).abs() <= 1e-12 * b.total);
        cfg.lambda_u = 0.0;
        assert_eq!(Network::new(&cfg).unwrap().ase(PartitionPoint::new(0.5, 100).unwrap()).unwrap().total, 0.0);
    }

    #[test]
    fn noise_limited_is_an_upper_bound() {
        let n = net();
        for eta in [0.2, 0.5, 0.8] {
            let p = PartitionPoint::new(eta, 50).unwrap();
            let full = n.ase(p).unwrap();
            let noise = n.ase_noise_limited(p).unwrap();
            assert!(noise.sbs >= full.sbs && noise.mbs >= full.mbs, "{eta}: {noise:?} {full:?}");
        }
    }

    #[test]
    fn interference_limited_keeps_general_mbs_part() {
        let n = net();
        let p = PartitionPoint::new(0.5, 100).unwrap();
        assert_eq!(n.ase_interference_limited(p).unwrap().mbs, n.ase(p).unwrap().mbs);
    }

    #[test]
    fn nested_route_agrees_with_factorised_route() {
        let n = Network::new(&NetworkConfig::table2()).unwrap().with_precision(Precision::with_rel_tol(1e-3));
        let p = PartitionPoint::new(0.5, 100).unwrap();
        let a = n.ase(p).unwrap();
        let b = n.ase_nested(p).unwrap();
        assert!((a.sbs - b.sbs).abs() <= 5e-3 * a.sbs, "{a:?} {b:?}");
        assert!((a.mbs - b.mbs).abs() <= 5e-3 * a.mbs, "{a:?} {b:?}");
    }

    #[test]
    fn full_cache_makes_ase_ignore_backhaul() {
        let mut cfg = NetworkConfig::table2();
        cfg.w_ca = 0.0;
        let p = PartitionPoint::new(0.5, cfg.library_size).unwrap();
        let a = Network::new(&cfg).unwrap().ase(p).unwrap();
        // the backhaul factor is 1, so the SBS part is access coverage only
        let n = Network::new(&cfg).unwrap();
        let access_only = try_integrate_semi_infinite(
            |rho| n.tier_coverage(Tier::Sbs, access_threshold(rho, 0.5), AseModel::General),
            0.0,
            &n.precision().rate,
        )
        .unwrap()
        .value
            * cfg.lambda_u;
        assert!((a.sbs - access_only).abs() <= 1e-12 * a.sbs);
    }

    #[test]
    fn grid_and_argmax() {
        assert_eq!(eta_grid(0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(eta_grid(1.0).unwrap(), vec![0.0, 1.0]);
        assert!(eta_grid(0.0).is_err());
        assert!(eta_grid(0.3).is_err());
        assert_eq!(argmax(&[(0.0, 1.0), (0.5, 2.0), (1.0, 2.0)]), 1);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = golden_section(|x| Ok(-(x - 0.37) * (x - 0.37)), 0.0, 1.0, 1e-6).unwrap();
        assert!((x - 0.37).abs() < 1e-5);
        assert!(v <= 0.0);
    }

    #[test]
    fn tabulated_sweep_matches_direct_ase() {
        let n = Network::new(&NetworkConfig::table2()).unwrap().with_precision(Precision::with_rel_tol(1e-4));
        let etas = [0.0, 0.15, 0.5, 0.85, 1.0];
        for model in [AseModel::General, AseModel::NoiseLimited, AseModel::InterferenceLimited] {
            let sweep = n.ase_sweep(&etas, 100, model).unwrap();
            for (&eta, fast) in etas.iter().zip(&sweep) {
                let p = PartitionPoint::new(eta, 100).unwrap();
                let direct = match model {
                    AseModel::General => n.ase(p),
                    AseModel::NoiseLimited => n.ase_noise_limited(p),
                    AseModel::InterferenceLimited => n.ase_interference_limited(p),
                }
                .unwrap();
                for (a, b) in [(fast.sbs, direct.sbs), (fast.mbs, direct.mbs)] {
                    assert!((a - b).abs() <= 1e-3 * b.abs().max(1e-12), "{model:?} {eta}: {fast:?} {direct:?}");
                }
            }
        }
    }

    #[test]
    fn no_backhaul_dependence_gives_full_access() {
        // one tier, fully cached: the whole band should go to access
        let mut cfg = NetworkConfig::table2();
        cfg.lambda_m = 0.0;
        cfg.w_ca = 0.0;
        cfg.cache_size = cfg.library_size;
        let n = Network::new(&cfg).unwrap().with_precision(Precision::with_rel_tol(1e-3));
        let opt = n.optimal_partition(cfg.library_size, Objective::Ase, 0.1).unwrap();
        assert_eq!(opt.grid_eta, 1.0);
    }
}
