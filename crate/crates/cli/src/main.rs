use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iabnet_core::compare::DEFAULT_TOLERANCE;
use iabnet_core::config::db_to_linear;
use iabnet_core::metrics::DEFAULT_ETA_STEP;
use iabnet_core::montecarlo::{drop_outcomes, summarise, write_trace};
use iabnet_core::output::{fmt_axis, fmt_prob, fmt_rate};
use iabnet_core::sweep::optima_csv;
use iabnet_core::{
    AseModel, CompareSpec, Error, Network, NetworkConfig, PartitionPoint, Precision, SimSpec, SweepAxes,
    SweepObjective, Tier,
};

const EXIT_TOLERANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "iabnet",
    version,
    about = "Coverage, throughput and spectral efficiency of cache-enabled mmWave HetNets with in-band backhaul",
    after_help = "Configuration: built-in defaults, overlaid by --config, then IABNET_* environment \
variables (dots become double underscores, e.g. IABNET_DENSITY__LAMBDA_S=1e-4), then --set.\n\
Exit codes: 0 ok, 1 comparison gap over tolerance, 2 usage or configuration error, \
3 numerical non-convergence.\n\
Probabilities are printed with 6 decimals, rates and densities in scientific notation with 6 \
significant digits."
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML config file with dotted keys, e.g. `power.P_s_tot = 9.1`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Outer relative tolerance of the analytic integrals.
    #[arg(long, default_value_t = 1e-4, global = true)]
    rel_tol: f64,
    /// Write CSV here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// SINR coverage per tier and serving link state.
    #[command(after_help = "CSV columns: tier,state,gamma_db,coverage")]
    Coverage {
        /// Thresholds in dB, comma separated; empty gives a header-only CSV.
        #[arg(long, default_value = "0,5,10")]
        gamma_db: String,
        /// Tiers among sbs, mbs, backhaul.
        #[arg(long, default_value = "sbs,mbs,backhaul")]
        tier: String,
    },
    /// Average potential throughput in bit/s/m^2.
    #[command(after_help = "CSV columns: eta,cache,gamma_db,apt,apt_sbs,apt_mbs")]
    Apt {
        #[arg(long, default_value = "0.5")]
        eta: String,
        /// Cache capacities in files; defaults to cache.C.
        #[arg(long)]
        cache: Option<String>,
        #[arg(long, default_value = "10")]
        gamma_db: String,
    },
    /// Area spectral efficiency in bit/s/Hz/m^2, with both approximations.
    #[command(after_help = "CSV columns: eta,cache,ase,ase_sbs,ase_mbs,ase_noise,ase_intf")]
    Ase {
        #[arg(long, default_value = "0.5")]
        eta: String,
        #[arg(long)]
        cache: Option<String>,
    },
    /// Grid over (eta, C, gamma) plus the best partition per cache capacity.
    #[command(after_help = concat!(
        "Table CSV columns: ", "eta,cache,gamma_db,apt,ase,ase_noise,ase_intf,cov_sbs_los,cov_sbs_nlos,",
        "cov_mbs_los,cov_mbs_nlos,cov_bh_los,cov_bh_nlos,fingerprint,version\n",
        "Summary CSV columns: objective,cache,gamma_db,eta_opt,value,delta_eta\n",
        "delta_eta is measured against the optimum without a cache on the same grid. ",
        "Without --summary the summary follows the table after one blank line."
    ))]
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        eta_min: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_max: f64,
        #[arg(long, default_value_t = DEFAULT_ETA_STEP)]
        eta_step: f64,
        #[arg(long, default_value = "0,100")]
        cache: String,
        #[arg(long, default_value = "10")]
        gamma_db: String,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Ase)]
        objective: ObjectiveArg,
        /// Write the per-cache optimum summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Monte-Carlo estimates with 95% half-widths.
    #[command(after_help = "CSV columns: quantity,tier,state,gamma_db,mean,half_width,samples\n\
Trace CSV columns: drop,tier,state,distance_m,sinr,access_se,bh_state,bh_distance_m,bh_sinr,bh_se,cache_hit,delivered_se")]
    Simulate {
        #[command(flatten)]
        mc: McArgs,
        /// Per-drop trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Analytic values next to Monte-Carlo estimates; exit 1 if a coverage
    /// gap exceeds max(tolerance, 3 half-widths).
    #[command(after_help = "CSV columns: quantity,tier,state,gamma_db,analytic,mc_mean,mc_half_width,abs_gap,allowed,flagged\n\
Association and ASE rows are informational and never flagged.")]
    Compare {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long, default_value = "0,5,10")]
    gamma_db: String,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long)]
    cache: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    drops: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Simulation disk radius in m; the smallest admissible one by default.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ObjectiveArg {
    Ase,
    Apt,
}

enum Failure {
    Engine(Error),
    Usage(String),
    Breach,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, Failure> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| usage(format!("cannot parse `{s}` as {what}"))))
        .collect()
}

fn parse_tier(s: &str) -> Result<Tier, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "sbs" => Ok(Tier::Sbs),
        "mbs" => Ok(Tier::Mbs),
        "backhaul" | "bh" => Ok(Tier::Backhaul),
        _ => Err(usage(format!("unknown tier `{s}` (expected sbs, mbs or backhaul)"))),
    }
}

fn load_config(g: &Global) -> Result<NetworkConfig, Failure> {
    let mut cfg = match &g.config {
        Some(path) => NetworkConfig::load(path).map_err(Error::from)?,
        None => NetworkConfig::table2(),
    };
    cfg.apply_env(std::env::vars()).map_err(Error::from)?;
    for kv in &g.overrides {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("{}: cannot parse `{}` as a number", key.trim(), value.trim())))?;
        cfg.set(key.trim(), value).map_err(Error::from)?;
    }
    Ok(cfg)
}

fn eta_range(min: f64, max: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(usage(format!("eta step must be > 0, got {step}")));
    }
    if !(0.0 <= min && min <= max && max <= 1.0) {
        return Err(usage(format!("eta range [{min}, {max}] must lie inside [0, 1]")));
    }
    let n = ((max - min) / step).round();
    if ((n * step) - (max - min)).abs() > 1e-9 {
        return Err(usage(format!("eta step {step} does not divide [{min}, {max}]")));
    }
    let n = n as usize;
    Ok((0..=n)
        .map(|i| if n == 0 { min } else { min + (max - min) * i as f64 / n as f64 })
        .collect())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => File::create(path)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if !(g.rel_tol > 0.0 && g.rel_tol < 1.0) {
        return Err(usage(format!("--rel-tol must lie in (0, 1), got {}", g.rel_tol)));
    }
    let cfg = load_config(g)?;
    let net = Network::new(&cfg)?.with_precision(Precision::with_rel_tol(g.rel_tol));
    let caches_or_default = |raw: &Option<String>| match raw {
        Some(r) => parse_list::<u64>(r, "a cache capacity"),
        None => Ok(vec![cfg.cache_size]),
    };

    match &cli.command {
        Command::Coverage { gamma_db, tier } => {
            let gammas: Vec<f64> = parse_list(gamma_db, "a threshold in dB")?;
            let tiers = tier
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_tier)
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = String::from("tier,state,gamma_db,coverage\n");
            for t in tiers {
                for &gdb in &gammas {
                    let c = net.coverage_db(t, gdb)?;
                    let _ = writeln!(out, "{t},LoS,{},{}", fmt_axis(gdb), fmt_prob(c.los));
                    let _ = writeln!(out, "{t},NLoS,{},{}", fmt_axis(gdb), fmt_prob(c.nlos));
                }
            }
            emit(&g.out, &out)
        }
        Command::Apt { eta, cache, gamma_db } => {
            let etas: Vec<f64> = parse_list(eta, "a partition")?;
            let gammas: Vec<f64> = parse_list(gamma_db, "a threshold in dB")?;
            let mut out = String::from("eta,cache,gamma_db,apt,apt_sbs,apt_mbs\n");
            for c in caches_or_default(cache)? {
                for &gdb in &gammas {
                    let rows = net.apt_sweep(&etas, c, db_to_linear(gdb))?;
                    for (&e, a) in etas.iter().zip(rows) {
                        let _ = writeln!(
                            out,
                            "{},{c},{},{},{},{}",
                            fmt_prob(e),
                            fmt_axis(gdb),
                            fmt_rate(a.total),
                            fmt_rate(a.sbs_total()),
                            fmt_rate(a.mbs_total())
                        );
                    }
                }
            }
            emit(&g.out, &out)
        }
        Command::Ase { eta, cache } => {
            let etas: Vec<f64> = parse_list(eta, "a partition")?;
            let mut out = String::from("eta,cache,ase,ase_sbs,ase_mbs,ase_noise,ase_intf\n");
            for c in caches_or_default(cache)? {
                let general = net.ase_sweep(&etas, c, AseModel::General)?;
                let noise = net.ase_sweep(&etas, c, AseModel::NoiseLimited)?;
                let intf = net.ase_sweep(&etas, c, AseModel::InterferenceLimited)?;
                for (i, &e) in etas.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{c},{},{},{},{},{}",
                        fmt_prob(e),
                        fmt_rate(general[i].total),
                        fmt_rate(general[i].sbs),
                        fmt_rate(general[i].mbs),
                        fmt_rate(noise[i].total),
                        fmt_rate(intf[i].total)
                    );
                }
            }
            emit(&g.out, &out)
        }
        Command::Sweep { eta_min, eta_max, eta_step, cache, gamma_db, objective, summary } => {
            let axes = SweepAxes {
                etas: eta_range(*eta_min, *eta_max, *eta_step)?,
                caches: parse_list(cache, "a cache capacity")?,
                gammas_db: parse_list(gamma_db, "a threshold in dB")?,
            };
            let objective = match objective {
                ObjectiveArg::Ase => SweepObjective::Ase,
                ObjectiveArg::Apt => SweepObjective::Apt,
            };
            let table = net.sweep(&axes)?;
            let optima = if table.cells.is_empty() {
                Vec::new()
            } else if axes.caches.contains(&0) {
                table.optima(objective, None)?
            } else {
                let base = net.sweep(&SweepAxes { caches: vec![0], ..axes.clone() })?;
                let reference: Vec<f64> = base.optima(objective, None)?.iter().map(|o| o.eta).collect();
                table.optima(objective, Some(&reference))?
            };
            let summary_text = optima_csv(objective, &optima);
            match summary {
                Some(path) => {
                    File::create(path)?.write_all(summary_text.as_bytes())?;
                    emit(&g.out, &table.to_csv())
                }
                None => emit(&g.out, &format!("{}\n{}", table.to_csv(), summary_text)),
            }
        }
        Command::Simulate { mc, trace } => {
            let cache = mc.cache.unwrap_or(cfg.cache_size);
            PartitionPoint::new(mc.eta, cache)?;
            let net = net.with_cache(cache)?;
            let gammas: Vec<f64> = parse_list(&mc.gamma_db, "a threshold in dB")?;
            let mut spec = SimSpec::new(&net, mc.drops, mc.seed)
                .with_thresholds(gammas.iter().map(|&g| db_to_linear(g)).collect())
                .with_eta(mc.eta);
            if let Some(w) = mc.window {
                spec = spec.with_window_radius(w);
            }
            let outcomes = drop_outcomes(&net, &spec)?;
            if let Some(path) = trace {
                write_trace(&outcomes, File::create(path)?)?;
            }
            let r = summarise(&net, &spec, &outcomes);
            let mut out = String::from("quantity,tier,state,gamma_db,mean,half_width,samples\n");
            for (link, e) in &r.association {
                let _ = writeln!(
                    out,
                    "association,{},{},,{},{},{}",
                    link.tier,
                    link.state,
                    fmt_prob(e.mean),
                    fmt_prob(e.half_width),
                    e.samples
                );
            }
            for (&gdb, &g) in gammas.iter().zip(&spec.thresholds) {
                for est in r.coverage.iter().filter(|c| c.gamma == g) {
                    for (state, e) in [("LoS", est.los), ("NLoS", est.nlos), ("all", est.total)] {
                        let _ = writeln!(
                            out,
                            "coverage,{},{state},{},{},{},{}",
                            est.tier,
                            fmt_axis(gdb),
                            fmt_prob(e.mean),
                            fmt_prob(e.half_width),
                            e.samples
                        );
                    }
                }
            }
            for (tier, e) in [("SBS", r.ase.sbs), ("MBS", r.ase.mbs), ("all", r.ase.total)] {
                let _ = writeln!(
                    out,
                    "ase,{tier},all,,{},{},{}",
                    fmt_rate(e.mean),
                    fmt_rate(e.half_width),
                    e.samples
                );
            }
            let h = r.cache_hits;
            let _ = writeln!(
                out,
                "cache_hit,SBS,all,,{},{},{}",
                fmt_prob(h.mean),
                fmt_prob(h.half_width),
                h.samples
            );
            emit(&g.out, &out)
        }
        Command::Compare { mc, tolerance } => {
            let spec = CompareSpec {
                gammas_db: parse_list(&mc.gamma_db, "a threshold in dB")?,
                eta: mc.eta,
                cache: mc.cache.unwrap_or(cfg.cache_size),
                drops: mc.drops,
                seed: mc.seed,
                tolerance: *tolerance,
                window_radius: mc.window,
            };
            let report = net.compare(&spec)?;
            let csv = report.to_csv();
            emit(&g.out, &csv)?;
            if report.flagged() {
                Err(Failure::Breach)
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.global.jobs {
        Some(0) => {
            eprintln!("iabnet: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("iabnet: cannot start worker threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Breach) => {
            eprintln!("iabnet: analytic and simulated coverage differ by more than the tolerance");
            ExitCode::from(EXIT_TOLERANCE)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("iabnet: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Engine(e)) => {
            eprintln!("iabnet: {e}");
            ExitCode::from(match e {
                Error::Numerical(_) => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            })
        }
    }
}
