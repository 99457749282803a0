use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use luroth_core::rational::{format_rational, parse_rational};
use luroth_core::stats::{digit_law_mc, hit_count_random, shrinking_target_experiment, RadiusRule, TargetRule};

use crate::output::{CliError, Report, Table, SCHEMA};

#[derive(Subcommand, Debug)]
pub enum StatsCommand {
    /// First-digit frequencies of uniform points against `1/(k(k-1))`.
    DigitLaw {
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long = "k-max", default_value_t = 20)]
        k_max: u64,
    },
    /// Hit counts `#{n <= N : L^n t ∈ I_n}` for Lebesgue-random `t`.
    Hits {
        /// `full`, `empty` or `harmonic`.
        #[arg(long, default_value = "harmonic")]
        rule: String,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        /// Number of seeds, starting from `--seed`.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Shrinking targets `|L^n x − L^n y| < r_n` for random `y`.
    Shrink {
        #[arg(long)]
        x: String,
        /// `harmonic`, `inverse-square` or `constant:p/q`.
        #[arg(long, default_value = "harmonic")]
        rule: String,
        #[arg(long, default_value_t = 200)]
        samples: u64,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
    },
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(subcommand)]
    command: StatsCommand,
}

fn digit_law(samples: u64, k_max: u64, seed: u64) -> Result<Report, CliError> {
    let t = digit_law_mc(samples, k_max, seed)?;
    let mut table = Table::new(&["k", "count", "observed", "expected", "stderr", "z", "flag"]);
    for c in &t.cells {
        let k = if c.k == 0 { format!(">{k_max}") } else { c.k.to_string() };
        let flag = serde_json::to_value(c.flag)?;
        table.push([
            k,
            c.count.to_string(),
            format!("{:.6}", c.observed),
            format!("{:.6}", c.expected),
            format!("{:.6}", c.stderr),
            format!("{:.3}", c.z),
            flag.as_str().unwrap_or_default().to_string(),
        ]);
    }
    let worst = t.cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
    let plain = format!("{samples} samples, k <= {k_max}: max |z| = {worst:.3}");
    let mut json = serde_json::to_value(&t)?;
    json["schema"] = json!(SCHEMA);
    Ok(Report::new(json, table, plain))
}

fn hits(rule: &str, horizon: u64, seeds: u64, seed: u64) -> Result<Report, CliError> {
    let rule: TargetRule = rule.parse()?;
    if seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let reports = (seed..seed + seeds)
        .into_par_iter()
        .map(|s| hit_count_random(s, &rule, horizon))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["seed", "horizon", "hits", "phi", "deviation", "in_band"]);
    for r in &reports {
        table.push([
            r.seed.unwrap_or_default().to_string(),
            r.horizon.to_string(),
            r.hits.to_string(),
            format!("{:.6}", r.phi_approx),
            format!("{:.4}", r.deviation),
            r.within_band().to_string(),
        ]);
    }
    let in_band = reports.iter().filter(|r| r.within_band()).count();
    let plain = format!("{in_band}/{seeds} seeds within the band at N = {horizon} (phi ≈ {:.4})", reports[0].phi_approx);
    let json = json!({ "schema": SCHEMA, "rule": rule, "reports": serde_json::to_value(&reports)? });
    Ok(Report::new(json, table, plain))
}

fn shrink(x: &str, rule: &str, samples: u64, horizon: u64, seed: u64) -> Result<Report, CliError> {
    let x = parse_rational(x)?;
    let rule: RadiusRule = rule.parse()?;
    let r = shrinking_target_experiment(&x, &rule, samples, horizon, seed)?;
    let mut table = Table::new(&["sample", "hits_n", "hits_2n"]);
    for (i, (a, b)) in r.counts.iter().zip(&r.counts_double).enumerate() {
        table.push([i.to_string(), a.to_string(), b.to_string()]);
    }
    let plain = format!(
        "x = {}, {samples} samples: median hits {} at N = {horizon}, {} at 2N",
        format_rational(&x),
        r.median,
        r.median_double
    );
    let mut json = serde_json::to_value(&r)?;
    json["schema"] = json!(SCHEMA);
    Ok(Report::new(json, table, plain))
}

pub fn run(args: StatsArgs, seed: u64) -> Result<Report, CliError> {
    match args.command {
        StatsCommand::DigitLaw { samples, k_max } => digit_law(samples, k_max, seed),
        StatsCommand::Hits { rule, horizon, seeds } => hits(&rule, horizon, seeds, seed),
        StatsCommand::Shrink { x, rule, samples, horizon } => shrink(&x, &rule, samples, horizon, seed),
    }
}
