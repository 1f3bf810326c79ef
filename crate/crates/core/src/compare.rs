//! Analytic results next to Monte-Carlo estimates at one operating point.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::db_to_linear;
use crate::error::{Error, Result};
use crate::geometry::{Tier, TierLink};
use crate::metrics::PartitionPoint;
use crate::model::LinkState;
use crate::montecarlo::{run_drops, Estimate, SimSpec};
use crate::network::Network;
use crate::output::{fmt_axis, fmt_prob, fmt_rate};

/// Default absolute tolerance on coverage gaps.
pub const DEFAULT_TOLERANCE: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSpec {
    pub gammas_db: Vec<f64>,
    pub eta: f64,
    pub cache: u64,
    pub drops: usize,
    pub seed: u64,
    /// Coverage gaps are flagged above `max(tolerance, 3 * half_width)`.
    pub tolerance: f64,
    /// Simulation window; the smallest admissible one when `None`.
    pub window_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    /// Checked against the tolerance.
    Coverage,
    /// Reported only: the analytic association masses rest on a product
    /// approximation that the simulator does not make.
    Association,
    /// Reported only, for the same reason.
    Ase,
}

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::Coverage => "coverage",
            Quantity::Association => "association",
            Quantity::Ase => "ase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub quantity: Quantity,
    pub tier: Tier,
    /// `None` for the sum over link states.
    pub state: Option<LinkState>,
    pub gamma_db: Option<f64>,
    pub analytic: f64,
    pub simulated: Estimate,
    /// Largest acceptable absolute gap; `None` when the row is not checked.
    pub allowed: Option<f64>,
}

impl CompareRow {
    pub fn gap(&self) -> f64 {
        (self.analytic - self.simulated.mean).abs()
    }

    pub fn flagged(&self) -> bool {
        self.allowed.is_some_and(|a| self.gap().is_nan() || self.gap() > a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub drops: usize,
    pub seed: u64,
    pub window_radius: f64,
}

pub const COMPARE_COLUMNS: &str =
    "quantity,tier,state,gamma_db,analytic,mc_mean,mc_half_width,abs_gap,allowed,flagged";

impl CompareReport {
    pub fn flagged(&self) -> bool {
        self.rows.iter().any(CompareRow::flagged)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARE_COLUMNS);
        out.push('\n');
        for r in &self.rows {
            let f = match r.quantity {
                Quantity::Ase => fmt_rate,
                _ => fmt_prob,
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.quantity.label(),
                r.tier,
                r.state.map_or("all", LinkState::label),
                r.gamma_db.map(fmt_axis).unwrap_or_default(),
                f(r.analytic),
                f(r.simulated.mean),
                f(r.simulated.half_width),
                f(r.gap()),
                r.allowed.map(f).unwrap_or_default(),
                u8::from(r.flagged())
            );
        }
        out
    }
}

impl Network {
    /// Run both engines at `spec` and line the results up.
    pub fn compare(&self, spec: &CompareSpec) -> Result<CompareReport> {
        if !(spec.tolerance >= 0.0 && spec.tolerance.is_finite()) {
            return Err(Error::usage(format!("tolerance must be finite and >= 0, got {}", spec.tolerance)));
        }
        if let Some(g) = spec.gammas_db.iter().find(|g| !g.is_finite()) {
            return Err(Error::usage(format!("threshold {g} dB is not finite")));
        }
        let point = PartitionPoint::new(spec.eta, spec.cache)?;
        let net = self.with_cache(spec.cache)?;
        let thresholds: Vec<f64> = spec.gammas_db.iter().map(|&g| db_to_linear(g)).collect();
        let mut sim = SimSpec::new(&net, spec.drops, spec.seed)
            .with_thresholds(thresholds.clone())
            .with_eta(spec.eta);
        if let Some(w) = spec.window_radius {
            sim = sim.with_window_radius(w);
        }
        let report = run_drops(&net, &sim)?;

        let mut rows = Vec::new();
        for link in TierLink::ALL {
            rows.push(CompareRow {
                quantity: Quantity::Association,
                tier: link.tier,
                state: Some(link.state),
                gamma_db: None,
                analytic: net.association_mass(link)?,
                simulated: report.association_of(link).expect("every link is estimated"),
                allowed: None,
            });
        }
        for (&g_db, &g) in spec.gammas_db.iter().zip(&thresholds) {
            for tier in Tier::ALL {
                let analytic = net.coverage(tier, g)?;
                let est = report.coverage_at(tier, g).expect("threshold was simulated");
                for (state, a, s) in [
                    (Some(LinkState::Los), analytic.los, est.los),
                    (Some(LinkState::Nlos), analytic.nlos, est.nlos),
                    (None, analytic.total(), est.total),
                ] {
                    rows.push(CompareRow {
                        quantity: Quantity::Coverage,
                        tier,
                        state,
                        gamma_db: Some(g_db),
                        analytic: a,
                        simulated: s,
                        allowed: Some(spec.tolerance.max(3.0 * s.half_width)),
                    });
                }
            }
        }
        let ase = net.ase(point)?;
        for (tier, a, s) in [(Tier::Sbs, ase.sbs, report.ase.sbs), (Tier::Mbs, ase.mbs, report.ase.mbs)] {
            rows.push(CompareRow {
                quantity: Quantity::Ase,
                tier,
                state: None,
                gamma_db: None,
                analytic: a,
                simulated: s,
                allowed: None,
            });
        }
        Ok(CompareReport { rows, drops: report.drops, seed: report.seed, window_radius: report.window_radius })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkConfig;
    use crate::network::Precision;

    fn spec(drops: usize) -> CompareSpec {
        CompareSpec {
            gammas_db: vec![0.0, 10.0],
            eta: 0.5,
            cache: 100,
            drops,
            seed: 7,
            tolerance: DEFAULT_TOLERANCE,
            window_radius: None,
        }
    }

    fn net() -> Network {
        Network::new(&NetworkConfig::table2()).unwrap().with_precision(Precision::with_rel_tol(1e-3))
    }

    #[test]
    fn zero_drops_is_a_usage_error() {
        assert!(matches!(net().compare(&spec(0)), Err(Error::Usage(_))));
    }

    #[test]
    fn report_layout() {
        let r = net().compare(&spec(200)).unwrap();
        assert_eq!(r.rows.len(), 6 + 2 * 9 + 2);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), r.rows.len() + 1);
        assert!(csv.lines().all(|l| l.split(',').count() == 10));
        assert!(r.rows.iter().filter(|r| r.quantity != Quantity::Coverage).all(|r| !r.flagged()));
    }

    #[test]
    fn flags_only_checked_rows_past_tolerance() {
        let row = |allowed| CompareRow {
            quantity: Quantity::Coverage,
            tier: Tier::Sbs,
            state: None,
            gamma_db: Some(0.0),
            analytic: 0.5,
            simulated: Estimate { mean: 0.4, half_width: 0.01, samples: 100 },
            allowed,
        };
        assert!(row(Some(0.05)).flagged());
        assert!(!row(Some(0.2)).flagged());
        assert!(!row(None).flagged());
    }

    #[test]
    fn same_seed_same_bytes() {
        let n = net();
        assert_eq!(n.compare(&spec(300)).unwrap().to_csv(), n.compare(&spec(300)).unwrap().to_csv());
    }
}
