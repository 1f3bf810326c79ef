//! Rectangular parameter sweeps over (eta, C, gamma).

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::db_to_linear;
use crate::coverage::CoverageResult;
use crate::error::{Error, Result};
use crate::geometry::Tier;
use crate::metrics::{argmax, AseModel, AseResult};
use crate::network::Network;
use crate::output::{fmt_axis, fmt_prob, fmt_rate};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub etas: Vec<f64>,
    pub caches: Vec<u64>,
    /// SINR thresholds in dB.
    pub gammas_db: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepObjective {
    /// APT, per threshold of the gamma axis.
    Apt,
    Ase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub eta: f64,
    pub cache: u64,
    pub gamma_db: f64,
    pub apt: f64,
    pub ase: f64,
    pub ase_noise: f64,
    pub ase_intf: f64,
    /// SBS, MBS and backhaul coverage at `gamma_db`.
    pub coverage: [CoverageResult; 3],
}

/// Best grid partition for one cache capacity (and threshold, for APT).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptimum {
    pub cache: u64,
    pub gamma_db: Option<f64>,
    pub eta: f64,
    pub value: f64,
    /// `eta` minus the optimum of the cache-less network on the same grid.
    pub delta_eta: f64,
}

/// Cells are ordered by cache, then eta, then gamma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axes: SweepAxes,
    pub cells: Vec<SweepCell>,
    pub fingerprint: String,
    pub version: String,
}

pub const SWEEP_COLUMNS: &str = "eta,cache,gamma_db,apt,ase,ase_noise,ase_intf,\
cov_sbs_los,cov_sbs_nlos,cov_mbs_los,cov_mbs_nlos,cov_bh_los,cov_bh_nlos,fingerprint,version";

pub const SUMMARY_COLUMNS: &str = "objective,cache,gamma_db,eta_opt,value,delta_eta";

struct CacheBlock {
    ase: [Vec<AseResult>; 3],
    // per gamma: coverage of the three tiers and the APT curve over eta
    per_gamma: Vec<([CoverageResult; 3], Vec<f64>)>,
}

impl SweepAxes {
    pub fn validate(&self, net: &Network) -> Result<()> {
        if let Some(e) = self.etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::usage(format!("eta {e} outside [0, 1]")));
        }
        if let Some(g) = self.gammas_db.iter().find(|g| !g.is_finite()) {
            return Err(Error::usage(format!("threshold {g} dB is not finite")));
        }
        let f = net.config().library_size;
        if let Some(c) = self.caches.iter().find(|&&c| c > f) {
            return Err(Error::usage(format!("cache capacity {c} exceeds library size {f}")));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.etas.len() * self.caches.len() * self.gammas_db.len()
    }
}

impl Network {
    /// Evaluate every cell of `axes`.
    pub fn sweep(&self, axes: &SweepAxes) -> Result<SweepTable> {
        axes.validate(self)?;
        let mut cells = Vec::with_capacity(axes.len());
        if axes.len() > 0 {
            let blocks = axes
                .caches
                .par_iter()
                .map(|&c| self.cache_block(c, axes))
                .collect::<Result<Vec<_>>>()?;
            for (&cache, block) in axes.caches.iter().zip(&blocks) {
                for (i, &eta) in axes.etas.iter().enumerate() {
                    for (&gamma_db, (coverage, apt)) in axes.gammas_db.iter().zip(&block.per_gamma) {
                        cells.push(SweepCell {
                            eta,
                            cache,
                            gamma_db,
                            apt: apt[i],
                            ase: block.ase[0][i].total,
                            ase_noise: block.ase[1][i].total,
                            ase_intf: block.ase[2][i].total,
                            coverage: *coverage,
                        });
                    }
                }
            }
        }
        Ok(SweepTable {
            axes: axes.clone(),
            cells,
            fingerprint: self.config().fingerprint(),
            version: TOOL_VERSION.to_string(),
        })
    }

    fn cache_block(&self, cache: u64, axes: &SweepAxes) -> Result<CacheBlock> {
        let net = self.with_cache(cache)?;
        let ase = [AseModel::General, AseModel::NoiseLimited, AseModel::InterferenceLimited]
            .map(|m| net.ase_sweep(&axes.etas, cache, m));
        let [a, b, c] = ase;
        let per_gamma = axes
            .gammas_db
            .par_iter()
            .map(|&g_db| {
                let g = db_to_linear(g_db);
                let cov = [
                    net.coverage(Tier::Sbs, g)?,
                    net.coverage(Tier::Mbs, g)?,
                    net.coverage(Tier::Backhaul, g)?,
                ];
                let apt = net.apt_sweep(&axes.etas, cache, g)?.into_iter().map(|r| r.total).collect();
                Ok((cov, apt))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CacheBlock { ase: [a?, b?, c?], per_gamma })
    }
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_COLUMNS);
        out.push('\n');
        for c in &self.cells {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_prob(c.eta),
                c.cache,
                fmt_axis(c.gamma_db),
                fmt_rate(c.apt),
                fmt_rate(c.ase),
                fmt_rate(c.ase_noise),
                fmt_rate(c.ase_intf)
            );
            for cov in &c.coverage {
                let _ = write!(out, ",{},{}", fmt_prob(cov.los), fmt_prob(cov.nlos));
            }
            let _ = writeln!(out, ",{},{}", self.fingerprint, self.version);
        }
        out
    }

    /// Grid optimum of `objective` for each cache capacity. `reference` is
    /// the optimum without a cache, one per threshold for APT; when `None`
    /// the table must contain `C = 0`.
    pub fn optima(&self, objective: SweepObjective, reference: Option<&[f64]>) -> Result<Vec<SweepOptimum>> {
        let ne = self.axes.etas.len();
        let ng = self.axes.gammas_db.len();
        if ne == 0 || ng == 0 {
            return Ok(Vec::new());
        }
        let at = |ci: usize, ei: usize, gi: usize| &self.cells[(ci * ne + ei) * ng + gi];
        let gammas: Vec<Option<usize>> = match objective {
            SweepObjective::Apt => (0..ng).map(Some).collect(),
            SweepObjective::Ase => vec![None],
        };
        let best = |ci: usize, gi: Option<usize>| {
            let curve: Vec<(f64, f64)> = (0..ne)
                .map(|ei| {
                    let cell = at(ci, ei, gi.unwrap_or(0));
                    let v = match objective {
                        SweepObjective::Apt => cell.apt,
                        SweepObjective::Ase => cell.ase,
                    };
                    (cell.eta, v)
                })
                .collect();
            curve[argmax(&curve)]
        };
        let zero = self.axes.caches.iter().position(|&c| c == 0);
        let mut out = Vec::new();
        for (ci, &cache) in self.axes.caches.iter().enumerate() {
            for (k, &gi) in gammas.iter().enumerate() {
                let (eta, value) = best(ci, gi);
                let base = match (reference, zero) {
                    (Some(r), _) => *r
                        .get(k)
                        .ok_or_else(|| Error::usage("missing cache-less reference optimum"))?,
                    (None, Some(z)) => best(z, gi).0,
                    (None, None) => return Err(Error::usage("sweep has no C = 0 reference")),
                };
                out.push(SweepOptimum {
                    cache,
                    gamma_db: gi.map(|g| self.axes.gammas_db[g]),
                    eta,
                    value,
                    delta_eta: eta - base,
                });
            }
        }
        Ok(out)
    }
}

/// CSV of [`SweepTable::optima`].
pub fn optima_csv(objective: SweepObjective, optima: &[SweepOptimum]) -> String {
    let name = match objective {
        SweepObjective::Apt => "apt",
        SweepObjective::Ase => "ase",
    };
    let mut out = String::from(SUMMARY_COLUMNS);
    out.push('\n');
    for o in optima {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{}",
            o.cache,
            o.gamma_db.map(fmt_axis).unwrap_or_default(),
            fmt_prob(o.eta),
            fmt_rate(o.value),
            fmt_prob(o.delta_eta)
        );
    }
    out
}
