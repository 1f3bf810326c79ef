//! Drop-based Monte Carlo simulation of the two-tier network.
//!
//! Each drop places Poisson numbers of SBSs and MBSs uniformly in a disk
//! around a typical user at the origin, draws an independent LoS state and
//! Rayleigh fading gain for every link, and associates the user with the
//! transmitter of largest biased received power. The backhaul of the
//! serving SBS is simulated with an independent MBS realisation around a
//! typical SBS, which matches the statistics of a typical backhaul link.
//!
//! Drop `i` draws from stream `i` of a ChaCha generator keyed by the seed,
//! so results do not depend on scheduling.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Tier, TierLink};
use crate::interference::LaplaceQuery;
use crate::metrics::{AptResult, StatePairs};
use crate::model::{los_probability_unchecked, path_loss_params, LinkState};
use crate::network::{BsTier, Network};

/// Two-sided normal quantile for 95 % intervals.
const Z95: f64 = 1.959_963_984_540_054;

/// Radius multiple of the mean nearest-neighbour scale required of the window.
pub const WINDOW_GUARD: f64 = 5.0;

/// Default window when both tiers are empty.
pub const EMPTY_WINDOW_RADIUS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    /// Simulation disk radius, m.
    pub window_radius: f64,
    pub drops: usize,
    pub seed: u64,
    /// Linear SINR thresholds for the coverage estimators.
    pub thresholds: Vec<f64>,
    /// Access share used for rate estimators.
    pub eta: f64,
    /// Linear SINR threshold of the APT estimator.
    pub gamma0: f64,
}

impl SimSpec {
    /// Spec with the smallest admissible window for `net`.
    pub fn new(net: &Network, drops: usize, seed: u64) -> Self {
        Self {
            window_radius: min_window_radius(net),
            drops,
            seed,
            thresholds: Vec::new(),
            eta: 0.5,
            gamma0: 10.0,
        }
    }

    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_gamma0(mut self, gamma0: f64) -> Self {
        self.gamma0 = gamma0;
        self
    }

    pub fn with_window_radius(mut self, radius: f64) -> Self {
        self.window_radius = radius;
        self
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.drops == 0 {
            return Err(Error::usage("number of drops must be at least 1"));
        }
        let min = min_window_radius(net);
        if !(self.window_radius.is_finite() && self.window_radius >= min) {
            return Err(Error::usage(format!(
                "window radius {} m is below the edge-effect guard of {min:.1} m",
                self.window_radius
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::usage(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if self.thresholds.iter().chain([&self.gamma0]).any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::usage("SINR thresholds must be finite and >= 0"));
        }
        Ok(())
    }
}

/// `WINDOW_GUARD / sqrt(pi lambda)` for the sparser non-empty tier.
pub fn min_window_radius(net: &Network) -> f64 {
    let lambda = BsTier::ALL
        .iter()
        .map(|&t| net.density(t))
        .filter(|&l| l > 0.0)
        .fold(f64::INFINITY, f64::min);
    if lambda.is_finite() {
        WINDOW_GUARD / (PI * lambda).sqrt()
    } else {
        EMPTY_WINDOW_RADIUS
    }
}

/// Mean with a 95 % normal-approximation half-width.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = Moments::default();
        for x in xs {
            acc.push(x);
        }
        acc.estimate()
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        (value - self.mean).abs() <= self.half_width + slack
    }
}

/// Running sums accumulated in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate::default();
        }
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        Estimate { mean: self.mean, half_width: Z95 * (var / self.n as f64).sqrt(), samples: self.n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackhaulRecord {
    pub state: LinkState,
    pub distance: f64,
    pub sinr: f64,
    /// `(1 - eta) log2(1 + SINR)`.
    pub se: f64,
}

/// Typical-user record of one drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropOutcome {
    pub index: usize,
    /// `None` when the window holds no transmitter.
    pub serving: Option<TierLink>,
    pub distance: f64,
    pub sinr: f64,
    /// `eta log2(1 + SINR)`.
    pub access_se: f64,
    /// Backhaul link of the typical SBS, drawn in every drop and used in
    /// the delivered rate of SBS-served users. `None` without MBSs.
    pub backhaul: Option<BackhaulRecord>,
    pub cache_hit: bool,
    /// `min(access, backhaul / (1 - p_h))` for SBS users, the access
    /// efficiency for MBS users. The backhaul term is the load-averaged
    /// convention used by the analytic rate distribution, so it does not
    /// depend on `cache_hit`.
    pub delivered_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub tier: Tier,
    pub gamma: f64,
    pub los: Estimate,
    pub nlos: Estimate,
    pub total: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AseEstimate {
    pub sbs: Estimate,
    pub mbs: Estimate,
    pub total: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub drops: usize,
    pub seed: u64,
    pub window_radius: f64,
    /// Fraction of drops served through each (tier, state).
    pub association: Vec<(TierLink, Estimate)>,
    pub coverage: Vec<CoverageEstimate>,
    pub ase: AseEstimate,
    /// APT assembled from the empirical coverage at `gamma0`.
    pub apt: AptResult,
    pub cache_hits: Estimate,
}

impl SimReport {
    pub fn coverage_at(&self, tier: Tier, gamma: f64) -> Option<&CoverageEstimate> {
        self.coverage.iter().find(|c| c.tier == tier && c.gamma == gamma)
    }

    pub fn association_of(&self, link: TierLink) -> Option<Estimate> {
        self.association.iter().find(|(l, _)| *l == link).map(|(_, e)| *e)
    }
}

/// One transmitter as seen from the receiver at the origin.
#[derive(Debug, Clone, Copy)]
struct Node {
    tier: BsTier,
    state: LinkState,
    distance: f64,
    /// Biased received power including fading.
    power: f64,
}

fn drop_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

/// Distance of a point uniform in the disk of radius `radius`.
fn uniform_disk_distance<R: Rng>(rng: &mut R, radius: f64) -> f64 {
    // 1 - u keeps the distance strictly positive
    radius * (1.0 - rng.random::<f64>()).sqrt()
}

struct Sampler<'a> {
    net: &'a Network,
    radius: f64,
}

impl Sampler<'_> {
    fn tier_nodes<R: Rng>(&self, rng: &mut R, tier: BsTier, out: &mut Vec<Node>) {
        let lambda = self.net.density(tier);
        let count = poisson_count(rng, lambda * PI * self.radius * self.radius);
        let cfg = self.net.config();
        let tx = self.net.biased_power(tier);
        for _ in 0..count {
            let distance = uniform_disk_distance(rng, self.radius);
            let state = if rng.random::<f64>() < los_probability_unchecked(distance, cfg.beta) {
                LinkState::Los
            } else {
                LinkState::Nlos
            };
            let fading: f64 = Exp1.sample(rng);
            let (a, alpha) = path_loss_params(cfg, state);
            out.push(Node { tier, state, distance, power: tx * fading * a * distance.powf(-alpha) });
        }
    }

    /// Strongest node and the SINR it achieves against all others.
    fn associate(&self, nodes: &[Node]) -> Option<(Node, f64)> {
        let mut best: Option<usize> = None;
        let mut total = 0.0;
        for (i, n) in nodes.iter().enumerate() {
            total += n.power;
            if best.is_none_or(|b| n.power > nodes[b].power) {
                best = Some(i);
            }
        }
        let serving = nodes[best?];
        let interference = total - serving.power;
        let sinr = serving.power / (interference.max(0.0) + self.net.config().noise_w);
        Some((serving, sinr))
    }
}

fn se(share: f64, sinr: f64) -> f64 {
    share * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Simulate drop `index`.
pub fn simulate_drop(net: &Network, spec: &SimSpec, index: usize) -> DropOutcome {
    let mut rng = drop_rng(spec.seed, index as u64);
    let sampler = Sampler { net, radius: spec.window_radius };
    let mut nodes = Vec::new();
    sampler.tier_nodes(&mut rng, BsTier::Sbs, &mut nodes);
    sampler.tier_nodes(&mut rng, BsTier::Mbs, &mut nodes);
    let access = sampler.associate(&nodes);

    // always drawn so the stream layout does not depend on the association
    let mut mbs = Vec::new();
    sampler.tier_nodes(&mut rng, BsTier::Mbs, &mut mbs);
    let backhaul = sampler.associate(&mbs).map(|(b, s)| BackhaulRecord {
        state: b.state,
        distance: b.distance,
        sinr: s,
        se: se(1.0 - spec.eta, s),
    });
    let cache_hit = rng.random::<f64>() < net.hit_ratio();

    let Some((serving, sinr)) = access else {
        return DropOutcome {
            index,
            serving: None,
            distance: f64::NAN,
            sinr: 0.0,
            access_se: 0.0,
            backhaul,
            cache_hit,
            delivered_se: 0.0,
        };
    };
    let access_se = se(spec.eta, sinr);
    let (tier, delivered_se) = match serving.tier {
        BsTier::Mbs => (Tier::Mbs, access_se),
        BsTier::Sbs => {
            let miss = 1.0 - net.hit_ratio();
            let limit = if miss <= 0.0 {
                f64::INFINITY
            } else {
                backhaul.map_or(0.0, |r| r.se / miss)
            };
            (Tier::Sbs, access_se.min(limit))
        }
    };
    DropOutcome {
        index,
        serving: Some(TierLink::new(tier, serving.state)),
        distance: serving.distance,
        sinr,
        access_se,
        backhaul,
        cache_hit,
        delivered_se,
    }
}

/// Outcomes of all drops, in drop order.
pub fn drop_outcomes(net: &Network, spec: &SimSpec) -> Result<Vec<DropOutcome>> {
    spec.validate(net)?;
    Ok((0..spec.drops).into_par_iter().map(|i| simulate_drop(net, spec, i)).collect())
}

/// Simulate and summarise.
pub fn run_drops(net: &Network, spec: &SimSpec) -> Result<SimReport> {
    let outcomes = drop_outcomes(net, spec)?;
    Ok(summarise(net, spec, &outcomes))
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Fold drop outcomes into estimates. `outcomes` should be in drop order
/// for bitwise reproducibility.
pub fn summarise(net: &Network, spec: &SimSpec, outcomes: &[DropOutcome]) -> SimReport {
    let tiers = [Tier::Sbs, Tier::Mbs, Tier::Backhaul];
    let link_of = |o: &DropOutcome, tier: Tier| -> Option<(LinkState, f64)> {
        if tier == Tier::Backhaul {
            return o.backhaul.map(|b| (b.state, b.sinr));
        }
        let s = o.serving?;
        (s.tier == tier).then_some((s.state, o.sinr))
    };

    let mut association = Vec::new();
    for link in TierLink::ALL {
        let est = if link.tier == Tier::Backhaul {
            Estimate::from_samples(outcomes.iter().map(|o| indicator(o.backhaul.is_some_and(|b| b.state == link.state))))
        } else {
            Estimate::from_samples(outcomes.iter().map(|o| indicator(o.serving == Some(link))))
        };
        association.push((link, est));
    }

    let mut coverage = Vec::new();
    let mut thresholds = spec.thresholds.clone();
    if !thresholds.contains(&spec.gamma0) {
        thresholds.push(spec.gamma0);
    }
    for &gamma in &thresholds {
        for tier in tiers {
            let sample = |i: usize, state: Option<LinkState>| -> f64 {
                let rec = link_of(&outcomes[i], tier);
                indicator(rec.is_some_and(|(s, sinr)| state.is_none_or(|st| st == s) && sinr > gamma))
            };
            let n = outcomes.len();
            coverage.push(CoverageEstimate {
                tier,
                gamma,
                los: Estimate::from_samples((0..n).map(|i| sample(i, Some(LinkState::Los)))),
                nlos: Estimate::from_samples((0..n).map(|i| sample(i, Some(LinkState::Nlos)))),
                total: Estimate::from_samples((0..n).map(|i| sample(i, None))),
            });
        }
    }

    let lambda_u = net.config().lambda_u;
    let scaled = |f: &dyn Fn(&DropOutcome) -> f64| {
        let e = Estimate::from_samples(outcomes.iter().map(f));
        Estimate { mean: lambda_u * e.mean, half_width: lambda_u * e.half_width, samples: e.samples }
    };
    let is_tier = |o: &DropOutcome, t: Tier| o.serving.is_some_and(|s| s.tier == t);
    let ase = AseEstimate {
        sbs: scaled(&|o| if is_tier(o, Tier::Sbs) { o.delivered_se } else { 0.0 }),
        mbs: scaled(&|o| if is_tier(o, Tier::Mbs) { o.delivered_se } else { 0.0 }),
        total: scaled(&|o| o.delivered_se),
    };

    let at = |tier: Tier| coverage.iter().find(|c| c.tier == tier && c.gamma == spec.gamma0).copied();
    let apt = empirical_apt(net, spec, at(Tier::Sbs), at(Tier::Mbs), at(Tier::Backhaul));

    let cache_hits = Estimate::from_samples(outcomes.iter().map(|o| indicator(o.cache_hit)));
    coverage.retain(|c| spec.thresholds.contains(&c.gamma));
    SimReport {
        drops: outcomes.len(),
        seed: spec.seed,
        window_radius: spec.window_radius,
        association,
        coverage,
        ase,
        apt,
        cache_hits,
    }
}

fn empirical_apt(
    net: &Network,
    spec: &SimSpec,
    s: Option<CoverageEstimate>,
    m: Option<CoverageEstimate>,
    bh: Option<CoverageEstimate>,
) -> AptResult {
    let cfg = net.config();
    let (Some(s), Some(m), Some(bh)) = (s, m, bh) else {
        return AptResult { total: 0.0, sbs: StatePairs::default(), mbs_los: 0.0, mbs_nlos: 0.0 };
    };
    let unit = cfg.bandwidth_hz * (1.0 + spec.gamma0).log2();
    let miss = 1.0 - net.hit_ratio();
    let eta = spec.eta;
    let pick = |c: &CoverageEstimate, st: LinkState| match st {
        LinkState::Los => c.los.mean,
        LinkState::Nlos => c.nlos.mean,
    };
    let case = |a: LinkState, b: LinkState| {
        let access = cfg.lambda_s * eta * unit * pick(&s, a);
        let backhaul = if miss <= 0.0 { f64::INFINITY } else { cfg.lambda_m * (1.0 - eta) * unit * pick(&bh, b) / miss };
        access.min(backhaul)
    };
    use LinkState::{Los, Nlos};
    let sbs = StatePairs { ll: case(Los, Los), ln: case(Los, Nlos), nl: case(Nlos, Los), nn: case(Nlos, Nlos) };
    let mbs_los = cfg.lambda_m * eta * unit * m.los.mean;
    let mbs_nlos = cfg.lambda_m * eta * unit * m.nlos.mean;
    AptResult { total: sbs.sum() + mbs_los + mbs_nlos, sbs, mbs_los, mbs_nlos }
}

/// Interferers around a serving link pinned at distance `r`, thinned by the
/// same association exclusion radii as the analytic model. Returns the
/// aggregate biased interference power.
fn pinned_interference<R: Rng>(net: &Network, serving: TierLink, r: f64, radius: f64, rng: &mut R) -> f64 {
    let sampler = Sampler { net, radius };
    let mut nodes = Vec::new();
    for &tier in serving.tier.interferer_tiers() {
        sampler.tier_nodes(rng, tier, &mut nodes);
    }
    nodes
        .iter()
        .filter(|n| n.distance >= net.exclusion_distance(serving, n.tier, n.state, r))
        .map(|n| n.power)
        .sum()
}

fn check_pinned(net: &Network, spec: &SimSpec, r: f64) -> Result<()> {
    spec.validate(net)?;
    if !(r > 0.0 && r < spec.window_radius) {
        return Err(Error::usage(format!("pinned distance {r} must lie inside the window")));
    }
    Ok(())
}

/// Monte Carlo estimate of the interference transform for `q`: the mean of
/// `exp(-gamma I / S)` with `gamma` the threshold encoded by `q`.
pub fn empirical_laplace(net: &Network, q: &LaplaceQuery, spec: &SimSpec) -> Result<Estimate> {
    check_pinned(net, spec, q.r)?;
    let (a, _) = path_loss_params(net.config(), q.serving.state);
    let scale = net.biased_power(q.serving.tier.transmitter()) * a;
    if q.s_argument == 0.0 {
        return Ok(Estimate { mean: 1.0, half_width: 0.0, samples: spec.drops });
    }
    let samples: Vec<f64> = (0..spec.drops)
        .into_par_iter()
        .map(|i| {
            let mut rng = drop_rng(spec.seed, i as u64);
            let interference = pinned_interference(net, q.serving, q.r, spec.window_radius, &mut rng);
            if interference == 0.0 {
                1.0
            } else if scale == 0.0 {
                0.0
            } else {
                (-q.s_argument * interference / scale).exp()
            }
        })
        .collect();
    Ok(Estimate::from_samples(samples))
}

/// Monte Carlo conditional coverage at pinned serving distance `r`, one
/// estimate per threshold, counting fading-inclusive SINR exceedances.
pub fn pinned_coverage(net: &Network, serving: TierLink, r: f64, thresholds: &[f64], spec: &SimSpec) -> Result<Vec<Estimate>> {
    check_pinned(net, spec, r)?;
    let signal = net.serving_power(serving, r);
    let noise = net.config().noise_w;
    let sinrs: Vec<f64> = (0..spec.drops)
        .into_par_iter()
        .map(|i| {
            let mut rng = drop_rng(spec.seed, i as u64);
            let interference = pinned_interference(net, serving, r, spec.window_radius, &mut rng);
            let fading: f64 = Exp1.sample(&mut rng);
            fading * signal / (interference + noise)
        })
        .collect();
    Ok(thresholds
        .iter()
        .map(|&g| Estimate::from_samples(sinrs.iter().map(|&s| indicator(s > g))))
        .collect())
}

pub const TRACE_HEADER: &str = "drop,tier,state,distance_m,sinr,access_se,bh_state,bh_distance_m,bh_sinr,bh_se,cache_hit,delivered_se";

/// Per-drop CSV dump.
pub fn write_trace<W: Write>(outcomes: &[DropOutcome], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for o in outcomes {
        let (tier, state) = o.serving.map_or(("none", ""), |s| (s.tier.label(), s.state.label()));
        let (bs, bd, bsinr, bse) = o.backhaul.map_or(
            (String::new(), String::new(), String::new(), String::new()),
            |b| (b.state.label().to_string(), format!("{:.6e}", b.distance), format!("{:.6e}", b.sinr), format!("{:.6e}", b.se)),
        );
        writeln!(
            w,
            "{},{tier},{state},{:.6e},{:.6e},{:.6e},{bs},{bd},{bsinr},{bse},{},{:.6e}",
            o.index,
            o.distance,
            o.sinr,
            o.access_se,
            u8::from(o.cache_hit),
            o.delivered_se
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{db_to_linear, NetworkConfig};

    fn net() -> Network {
        Network::new(&NetworkConfig::table2()).unwrap()
    }

    #[test]
    fn window_guard() {
        let n = net();
        let r = min_window_radius(&n);
        assert!((r - 5.0 / (PI * 1e-5f64).sqrt()).abs() < 1e-9);
        let spec = SimSpec::new(&n, 10, 1);
        assert!(spec.validate(&n).is_ok());
        assert!(spec.clone().with_window_radius(r * 0.9).validate(&n).is_err());
        let mut zero = spec.clone();
        zero.drops = 0;
        assert!(zero.validate(&n).is_err());
    }

    #[test]
    fn empty_network_has_no_association() {
        let mut cfg = NetworkConfig::table2();
        cfg.lambda_s = 0.0;
        cfg.lambda_m = 0.0;
        let n = Network::new(&cfg).unwrap();
        let spec = SimSpec::new(&n, 50, 3).with_thresholds(vec![0.0, 1.0]);
        let rep = run_drops(&n, &spec).unwrap();
        for c in &rep.coverage {
            assert_eq!(c.total.mean, 0.0);
        }
        for (_, a) in &rep.association {
            assert_eq!(a.mean, 0.0);
        }
        assert_eq!(rep.ase.total.mean, 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let n = net();
        let spec = SimSpec::new(&n, 300, 42).with_thresholds(vec![1.0]);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_drops(&n, &spec).unwrap());
        let b = four.install(|| run_drops(&n, &spec).unwrap());
        assert_eq!(a, b);
        let c = run_drops(&n, &SimSpec { seed: 43, ..spec.clone() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn estimate_of_constant() {
        let e = Estimate::from_samples([2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.half_width, 0.0);
        assert_eq!(e.samples, 10);
        let e = Estimate::from_samples([0.0, 1.0]);
        assert!((e.half_width - Z95 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn interference_free_pinned_coverage_is_closed_form() {
        let mut cfg = NetworkConfig::table2();
        cfg.lambda_s = 0.0;
        cfg.lambda_m = 0.0;
        let n = Network::new(&cfg).unwrap();
        let spec = SimSpec::new(&n, 20_000, 9);
        let link = TierLink::new(Tier::Sbs, LinkState::Los);
        let gammas = [0.01, 0.1, 0.3];
        let est = pinned_coverage(&n, link, 10.0, &gammas, &spec).unwrap();
        for (e, &g) in est.iter().zip(&gammas) {
            let exact = n.noise_only_coverage(link, g, 10.0);
            assert!(e.contains(exact, 0.0), "{g}: {e:?} vs {exact}");
        }
    }

    #[test]
    fn laplace_edges() {
        let n = net();
        let spec = SimSpec::new(&n, 10, 1);
        let q = LaplaceQuery::new(TierLink::ALL[0], 0.0, 20.0).unwrap();
        assert_eq!(empirical_laplace(&n, &q, &spec).unwrap().mean, 1.0);
        let mut cfg = NetworkConfig::table2();
        cfg.lambda_s = 0.0;
        cfg.lambda_m = 0.0;
        let quiet = Network::new(&cfg).unwrap();
        let q = LaplaceQuery::at_threshold(TierLink::ALL[0], 10.0, 20.0, &quiet).unwrap();
        assert_eq!(empirical_laplace(&quiet, &q, &SimSpec::new(&quiet, 10, 1)).unwrap().mean, 1.0);
    }

    #[test]
    fn laplace_agrees_with_analytic_transform() {
        let n = net();
        let spec = SimSpec::new(&n, 4000, 5);
        let q = LaplaceQuery::at_threshold(TierLink::new(Tier::Sbs, LinkState::Los), db_to_linear(0.0), 30.0, &n).unwrap();
        let e = empirical_laplace(&n, &q, &spec).unwrap();
        let a = n.laplace_interference(&q).unwrap();
        assert!((e.mean - a).abs() <= (3.0 * e.half_width).max(0.01), "{e:?} vs {a}");
    }

    #[test]
    fn coverage_monotone_in_threshold() {
        let n = net();
        let spec = SimSpec::new(&n, 2000, 11).with_thresholds(vec![0.01, 0.1, 1.0, 10.0]);
        let rep = run_drops(&n, &spec).unwrap();
        for tier in [Tier::Sbs, Tier::Mbs, Tier::Backhaul] {
            let vals: Vec<f64> = spec.thresholds.iter().map(|&g| rep.coverage_at(tier, g).unwrap().total.mean).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0]), "{tier}: {vals:?}");
        }
    }

    #[test]
    fn half_width_shrinks_with_drops() {
        let n = net();
        let base = SimSpec::new(&n, 4000, 17).with_thresholds(vec![0.01]);
        let a = run_drops(&n, &base).unwrap();
        let b = run_drops(&n, &SimSpec { drops: 8000, ..base.clone() }).unwrap();
        let ha = a.coverage_at(Tier::Sbs, 0.01).unwrap().total.half_width;
        let hb = b.coverage_at(Tier::Sbs, 0.01).unwrap().total.half_width;
        let ratio = hb / ha;
        assert!((ratio - 1.0 / 2f64.sqrt()).abs() <= 0.15 / 2f64.sqrt(), "{ratio}");
    }

    #[test]
    fn trace_has_one_row_per_drop() {
        let n = net();
        let spec = SimSpec::new(&n, 25, 2);
        let outcomes = drop_outcomes(&n, &spec).unwrap();
        let mut buf = Vec::new();
        write_trace(&outcomes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with(TRACE_HEADER));
    }

    #[test]
    fn delivered_rate_respects_backhaul() {
        let n = net();
        let spec = SimSpec::new(&n, 500, 8).with_eta(0.3);
        let miss = 1.0 - n.hit_ratio();
        for o in drop_outcomes(&n, &spec).unwrap() {
            assert!(o.delivered_se <= o.access_se);
            if o.serving.is_some_and(|s| s.tier == Tier::Sbs) {
                let b = o.backhaul.unwrap();
                assert!(o.delivered_se <= b.se / miss + 1e-15);
            }
        }
    }
}
