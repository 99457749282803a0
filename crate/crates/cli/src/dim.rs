use clap::{Args, Subcommand, ValueEnum};
use serde_json::{json, Value};

use luroth_core::dimension::{
    asymptotic_threshold, box_count_estimate, build_asymptotic_tree, build_distal_tree, cantor_tree,
    choose_distal_parameters, distal_separation, log_scales, moran_solve, replay_certificate, sample_cantor_points,
    verify_lower_bound, verify_upper_bound, CantorTreeSpec, DimensionCertificate, DimensionError, SeparationSeq,
};
use luroth_core::rational::{format_rational, parse_exponent, rat, to_f64, ExactRational};
use luroth_core::StreamSpec;

use crate::output::{read_input, CliError, Report, Table, SCHEMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SetKind {
    /// The Cantor set `F_N` of points with all digits in `[2, N]`.
    #[value(name = "FN")]
    Fn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TreeKind {
    /// Distal companions of `--x-digits` with parameters `--E --m --n`.
    Distal,
    /// The `G_N^M` tree around `--x-digits` with `--M --N`.
    Asymptotic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Solve,
    Lower,
    Upper,
    Box,
}

#[derive(Subcommand, Debug)]
pub enum DimCommand {
    /// Re-verify a certificate written with `--format json`.
    Replay {
        /// Certificate file, or `-` for stdin.
        input: String,
    },
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
pub struct DimArgs {
    #[command(subcommand)]
    command: Option<DimCommand>,
    #[arg(long, value_enum, ignore_case = true, conflicts_with = "tree")]
    set: Option<SetKind>,
    #[arg(long, value_enum)]
    tree: Option<TreeKind>,
    /// Alphabet bound for `F_N`, or the start level of the `G_N^M` tree.
    #[arg(long = "N")]
    big_n: Option<u64>,
    #[arg(long = "E", default_value_t = 6)]
    big_e: u64,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long = "M")]
    big_m: Option<u64>,
    /// Base sequence of the distal or asymptotic tree (stream syntax).
    #[arg(long = "x-digits")]
    x_digits: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Exponent for `lower` / `upper` (`p/q` or a finite decimal).
    s: Option<String>,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Sample size for `box`.
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
}

fn exponent(args: &DimArgs) -> Result<ExactRational, CliError> {
    let s = args.s.as_deref().ok_or_else(|| CliError::Usage("this mode needs an exponent s".into()))?;
    Ok(parse_exponent(s)?)
}

fn stream_arg(args: &DimArgs) -> Result<StreamSpec, CliError> {
    let text = args.x_digits.as_deref().ok_or_else(|| CliError::Usage("--x-digits is required for trees".into()))?;
    Ok(text.parse()?)
}

fn alphabet(args: &DimArgs) -> Result<u64, CliError> {
    args.big_n.ok_or_else(|| CliError::Usage("--set FN needs --N".into()))
}

enum Target {
    Cantor(u64),
    Distal { a: StreamSpec, m: Option<u64>, n: Option<u64> },
    Asymptotic { a: StreamSpec, big_m: Option<u64>, big_n: u64 },
}

fn target(args: &DimArgs) -> Result<Target, CliError> {
    match (args.set, args.tree) {
        (Some(SetKind::Fn), _) => Ok(Target::Cantor(alphabet(args)?)),
        (None, Some(TreeKind::Distal)) => Ok(Target::Distal { a: stream_arg(args)?, m: args.m, n: args.n }),
        (None, Some(TreeKind::Asymptotic)) => {
            Ok(Target::Asymptotic { a: stream_arg(args)?, big_m: args.big_m, big_n: args.big_n.unwrap_or(1) })
        }
        (None, None) => Err(CliError::Usage("choose --set FN or --tree distal|asymptotic".into())),
    }
}

/// The tree to certify together with the separation sequence for lower bounds.
fn build(args: &DimArgs, t: &Target, s: &ExactRational) -> Result<(CantorTreeSpec, SeparationSeq), CliError> {
    match t {
        Target::Cantor(n) => {
            let spec = cantor_tree(*n)?;
            let sep = SeparationSeq::from_tree(&spec, args.depth)?;
            Ok((spec, sep))
        }
        Target::Distal { a, m, n } => {
            let (m, n) = match (m, n) {
                (Some(m), Some(n)) => (*m, *n),
                _ => {
                    let p = choose_distal_parameters(s, args.big_e)?;
                    (m.unwrap_or(p.m), n.unwrap_or(p.n))
                }
            };
            let spec = build_distal_tree(&a.to_stream(), args.big_e, m, n, args.depth)?;
            let sep = SeparationSeq::Constant(distal_separation(args.big_e, m, n)?);
            Ok((spec, sep))
        }
        Target::Asymptotic { a, big_m, big_n } => {
            let big_m = match big_m {
                Some(m) => *m,
                None => asymptotic_threshold(&(s - rat(1, 2)))?,
            };
            let spec = build_asymptotic_tree(&a.to_stream(), big_m, *big_n, args.depth)?;
            let sep = SeparationSeq::from_tree(&spec, args.depth)?;
            Ok((spec, sep))
        }
    }
}

fn certificate_report(cert: &DimensionCertificate) -> Result<Report, CliError> {
    let json = serde_json::to_value(cert)?;
    let table = Table::from_fields(&json);
    let kind = serde_json::to_value(cert.kind)?;
    let plain = format!(
        "{} bound certificate: s = {}, levels {}, parents checked {}, margin {} (≈ {:.6e}), decay ratio {}",
        kind.as_str().unwrap_or("?"),
        format_rational(&cert.s),
        cert.levels_checked,
        cert.nodes_covered,
        format_rational(&cert.margin),
        cert.margin_approx,
        format_rational(&cert.decay_ratio),
    );
    Ok(Report::new(json, table, plain))
}

fn violation_report(e: DimensionError) -> Result<Report, CliError> {
    match e {
        DimensionError::Violation { level, path, kind } => {
            let json = json!({
                "schema": SCHEMA,
                "status": "violation",
                "level": level,
                "path": path,
                "kind": serde_json::to_value(&kind)?,
            });
            let mut table = Table::new(&["status", "level", "path", "kind"]);
            table.push(["violation".to_string(), level.to_string(), format!("{path:?}"), json["kind"].to_string()]);
            let plain = format!("violation at level {level} below node {path:?}: {}", json["kind"]);
            Ok(Report::new(json, table, plain).violation())
        }
        other => Err(other.into()),
    }
}

fn solve(args: &DimArgs, t: &Target) -> Result<Report, CliError> {
    match t {
        Target::Cantor(n) => {
            let sol = moran_solve(*n)?;
            let mut json = serde_json::to_value(&sol)?;
            json["schema"] = json!(SCHEMA);
            json["N"] = json!(n);
            json["midpoint"] = json!(sol.midpoint());
            json["width"] = json!(sol.width());
            let plain = format!(
                "s*({n}) ∈ [{:.15}, {:.15}] width {:.3e} residual {:.3e}",
                to_f64(&sol.lo),
                to_f64(&sol.hi),
                sol.width(),
                sol.residual
            );
            Ok(Report::new(json.clone(), Table::from_fields(&json), plain))
        }
        Target::Distal { .. } => {
            let s = exponent(args)?;
            let p = choose_distal_parameters(&s, args.big_e)?;
            let json = json!({
                "schema": SCHEMA,
                "s": format_rational(&s),
                "E": args.big_e,
                "m": p.m,
                "n": p.n,
                "sum": serde_json::to_value(&p.sum)?,
            });
            let plain = format!("s = {}, E = {}: (m, n) = ({}, {})", format_rational(&s), args.big_e, p.m, p.n);
            Ok(Report::new(json.clone(), Table::from_fields(&json), plain))
        }
        Target::Asymptotic { .. } => {
            let s = exponent(args)?;
            let eps = &s - rat(1, 2);
            let big_m = asymptotic_threshold(&eps)?;
            let json = json!({ "schema": SCHEMA, "s": format_rational(&s), "M": big_m });
            let plain = format!("s = {}: M = {big_m}", format_rational(&s));
            Ok(Report::new(json.clone(), Table::from_fields(&json), plain))
        }
    }
}

fn box_count(args: &DimArgs, t: &Target, seed: u64) -> Result<Report, CliError> {
    let Target::Cantor(n) = t else {
        return Err(CliError::Usage("box counting is available for --set FN only".into()));
    };
    let s = moran_solve(*n)?.midpoint();
    let points = sample_cantor_points(*n, s, args.samples, 40, seed);
    let fit = box_count_estimate(&points, &log_scales(1e-2, 1e-5, 10))?;
    let mut table = Table::new(&["delta", "count"]);
    for (d, c) in fit.scales.iter().zip(&fit.counts) {
        table.push([format!("{d:e}"), c.to_string()]);
    }
    let mut json = serde_json::to_value(&fit)?;
    json["schema"] = json!(SCHEMA);
    json["moran_root"] = json!(s);
    let plain = format!(
        "box-count slope {:.4} (Moran root {s:.4}), residual {:.4}, {} points{}",
        fit.slope,
        fit.residual,
        fit.points,
        if fit.degenerate { ", degenerate fit" } else { "" }
    );
    Ok(Report::new(json, table, plain))
}

fn replay(input: &str) -> Result<Report, CliError> {
    let cert: DimensionCertificate = serde_json::from_str(&read_input(input)?)?;
    let result = replay_certificate(&cert);
    let ok = result.is_ok();
    let json: Value = json!({
        "schema": SCHEMA,
        "replay": if ok { "ok" } else { "mismatch" },
        "error": result.as_ref().err().map(|e| e.to_string()),
    });
    let plain = match &result {
        Ok(()) => "certificate replays".to_string(),
        Err(e) => format!("certificate does not replay: {e}"),
    };
    let report = Report::new(json.clone(), Table::from_fields(&json), plain);
    match result {
        Ok(()) => Ok(report),
        Err(DimensionError::Indecision(m)) => Err(CliError::Failure(m)),
        Err(_) => Ok(report.violation()),
    }
}

pub fn run(args: DimArgs, seed: u64) -> Result<Report, CliError> {
    if let Some(DimCommand::Replay { input }) = &args.command {
        return replay(input);
    }
    let mode = args.mode.ok_or_else(|| CliError::Usage("--mode is required".into()))?;
    if args.depth == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    let t = target(&args)?;
    match mode {
        Mode::Solve => solve(&args, &t),
        Mode::Box => box_count(&args, &t, seed),
        Mode::Lower | Mode::Upper => {
            let s = exponent(&args)?;
            let (spec, sep) = build(&args, &t, &s)?;
            let result = if mode == Mode::Lower {
                verify_lower_bound(&spec, &s, &sep, args.depth)
            } else {
                verify_upper_bound(&spec, &s, args.depth)
            };
            match result {
                Ok(cert) => certificate_report(&cert),
                Err(e) => violation_report(e),
            }
        }
    }
}
