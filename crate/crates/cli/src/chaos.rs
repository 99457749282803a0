use clap::{Args, Subcommand, ValueEnum};
use serde_json::json;

use luroth_core::chaos::{
    leo_certificate, periodic_point, scrambled_pair_check, sensitivity_witness, transitivity_witness, ChaosWitness,
    OpenInterval, Periodic, ReplayError, ScrambledPair, WitnessPayload,
};
use luroth_core::rational::{format_rational, parse_rational};
use luroth_core::{DigitWord, StreamSpec};

use crate::output::{digits, read_input, CliError, Report, Table, SCHEMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WitnessKind {
    Transitivity,
    Sensitivity,
    Leo,
    Periodic,
    ScrambledPair,
}

#[derive(Subcommand, Debug)]
pub enum ChaosCommand {
    /// Build a witness and print it.
    Witness {
        #[arg(long, value_enum)]
        kind: WitnessKind,
        /// Open interval `lo,hi` (transitivity).
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        v: Option<String>,
        /// Base point (sensitivity).
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        /// Comma-separated digit word (leo, periodic).
        #[arg(long)]
        word: Option<String>,
        /// Digit streams (scrambled-pair).
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long = "m-max", default_value_t = 6)]
        m_max: u64,
    },
    /// Re-verify a witness written with `--format json`.
    Replay {
        /// Witness file, or `-` for stdin.
        input: String,
    },
}

#[derive(Args, Debug)]
pub struct ChaosArgs {
    #[command(subcommand)]
    command: ChaosCommand,
}

fn required<'a>(value: &'a Option<String>, flag: &str, kind: &str) -> Result<&'a str, CliError> {
    value.as_deref().ok_or_else(|| CliError::Usage(format!("--kind {kind} needs --{flag}")))
}

fn interval(text: &str) -> Result<OpenInterval, CliError> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("interval {text:?} should read lo,hi")))?;
    Ok(OpenInterval::new(parse_rational(lo.trim())?, parse_rational(hi.trim())?)?)
}

fn word(text: &str) -> Result<DigitWord, CliError> {
    let ds = text
        .split(',')
        .map(|d| d.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("bad digit {d:?} in {text:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DigitWord::new(ds)?)
}

fn summary(w: &ChaosWitness) -> String {
    match &w.payload {
        WitnessPayload::Transitivity(t) => format!(
            "transitivity: z = {} in ({}, {}) has digits {} and L^{}(z) = {} in ({}, {})",
            format_rational(&t.z),
            format_rational(&t.u.lo),
            format_rational(&t.u.hi),
            digits(t.word.as_slice()),
            t.n,
            format_rational(&t.x),
            format_rational(&t.v.lo),
            format_rational(&t.v.hi),
        ),
        WitnessPayload::Sensitivity(s) => format!(
            "sensitivity: y = {} within {} of x = {}, distance {} at iterate {}",
            format_rational(&s.y),
            format_rational(&s.delta),
            format_rational(&s.x),
            format_rational(&s.distance),
            s.n
        ),
        WitnessPayload::Leo(l) => {
            format!("leo: L^{} maps the cell of {} onto (0, 1]", l.n, digits(l.word.as_slice()))
        }
        WitnessPayload::Periodic(p) => {
            format!("periodic: {} has period word {}", format_rational(&p.point), digits(p.word.as_slice()))
        }
        WitnessPayload::ScrambledPair(s) => format!(
            "scrambled pair from {} and {}: schedule checked for m <= {} ({})",
            s.a,
            s.b,
            s.report.m_max,
            if s.report.holds() { "holds" } else { "fails" }
        ),
    }
}

pub fn witness_report(w: &ChaosWitness) -> Result<Report, CliError> {
    let json = serde_json::to_value(w)?;
    let mut table = Table::from_fields(&json);
    if let WitnessPayload::ScrambledPair(s) = &w.payload {
        table = Table::new(&["m", "proximal_hi", "proximal_ok", "li_yorke_lo", "li_yorke_bound_hi", "li_yorke_ok"]);
        for r in &s.report.rows {
            table.push([
                r.m.to_string(),
                format_rational(&r.proximal.hi),
                r.proximal_ok.to_string(),
                format_rational(&r.li_yorke.lo),
                format_rational(&r.li_yorke_bound.hi),
                r.li_yorke_ok.to_string(),
            ]);
        }
    }
    let report = Report::new(json, table, summary(w));
    let failed = matches!(&w.payload, WitnessPayload::ScrambledPair(s) if !s.report.holds());
    Ok(if failed { report.violation() } else { report })
}

pub fn replay_witness(w: &ChaosWitness) -> Result<Report, CliError> {
    let result = w.replay();
    let json = json!({
        "schema": SCHEMA,
        "kind": w.kind(),
        "replay": if result.is_ok() { "ok" } else { "mismatch" },
        "error": result.as_ref().err().map(|e| e.to_string()),
    });
    let plain = match &result {
        Ok(()) => format!("{} witness replays", w.kind()),
        Err(e) => format!("{} {e}", w.kind()),
    };
    let report = Report::new(json.clone(), Table::from_fields(&json), plain);
    match result {
        Ok(()) => Ok(report),
        Err(ReplayError::Invalid(luroth_core::Error::Indecision(m))) => Err(CliError::Failure(m)),
        Err(_) => Ok(report.violation()),
    }
}

fn build(kind: WitnessKind, cmd: &ChaosCommand) -> Result<ChaosWitness, CliError> {
    let ChaosCommand::Witness { u, v, x, delta, word: w, a, b, m_max, .. } = cmd else {
        unreachable!("build is only called for witness")
    };
    let payload = match kind {
        WitnessKind::Transitivity => {
            let (u, v) = (interval(required(u, "u", "transitivity")?)?, interval(required(v, "v", "transitivity")?)?);
            WitnessPayload::Transitivity(transitivity_witness(&u, &v)?)
        }
        WitnessKind::Sensitivity => {
            let x = parse_rational(required(x, "x", "sensitivity")?)?;
            let delta = parse_rational(required(delta, "delta", "sensitivity")?)?;
            WitnessPayload::Sensitivity(sensitivity_witness(&x, &delta)?)
        }
        WitnessKind::Leo => WitnessPayload::Leo(leo_certificate(&word(required(w, "word", "leo")?)?)?),
        WitnessKind::Periodic => {
            let word = word(required(w, "word", "periodic")?)?;
            let point = periodic_point(&word)?;
            WitnessPayload::Periodic(Periodic { word, point })
        }
        WitnessKind::ScrambledPair => {
            let a: StreamSpec = required(a, "a", "scrambled-pair")?.parse()?;
            let b: StreamSpec = required(b, "b", "scrambled-pair")?.parse()?;
            let report = scrambled_pair_check(&a.to_stream(), &b.to_stream(), *m_max)?;
            WitnessPayload::ScrambledPair(ScrambledPair { a, b, report })
        }
    };
    Ok(ChaosWitness::new(payload))
}

pub fn run(args: ChaosArgs) -> Result<Report, CliError> {
    match &args.command {
        ChaosCommand::Witness { kind, .. } => witness_report(&build(*kind, &args.command)?),
        ChaosCommand::Replay { input } => {
            let witness: ChaosWitness = serde_json::from_str(&read_input(input)?)?;
            replay_witness(&witness)
        }
    }
}
