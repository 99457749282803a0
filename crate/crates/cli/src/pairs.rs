use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use luroth_core::chaos::{scrambled_pair_check, ChaosWitness, ScrambledPair, WitnessPayload};
use luroth_core::pairs::{
    asymptotic_criterion_bounded, distal_companion_family, pair_metrics, verify_distal_bound, AsymptoticVerdict,
    DistalCertificate, Point,
};
use luroth_core::rational::{format_rational, parse_rational, to_f64};
use luroth_core::{Bracket, StreamSpec};

use crate::chaos::{replay_witness, witness_report};
use crate::output::{read_input, CliError, Report, Table, SCHEMA};

#[derive(Subcommand, Debug)]
pub enum PairsCommand {
    /// Orbit-distance window of two points.
    Classify {
        /// Rational `p/q` or a digit stream.
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 50)]
        depth: u64,
        /// Digit bound of `x` enabling the eventual-agreement criterion.
        #[arg(long)]
        bound: Option<u64>,
    },
    /// A member of the distal family of `--x-digits` with its distance bound.
    ConstructDistal {
        #[arg(long = "x-digits")]
        x_digits: String,
        #[arg(long = "E", default_value_t = 6)]
        big_e: u64,
        #[arg(long)]
        m: u64,
        /// Free-digit alphabet `[2, n]` (default `E`).
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 20)]
        depth: u64,
        /// Index of the sampled member.
        #[arg(long, default_value_t = 0)]
        member: u64,
    },
    /// A scrambled pair built from two streams, checked for `m <= m_max`.
    ConstructScrambled {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "m-max", default_value_t = 6)]
        m_max: u64,
    },
    /// Re-verify a distal artifact or scrambled-pair witness.
    Replay {
        /// Artifact file, or `-` for stdin.
        input: String,
    },
}

#[derive(Args, Debug)]
pub struct PairsArgs {
    #[command(subcommand)]
    command: PairsCommand,
}

fn point(text: &str) -> Result<Point, CliError> {
    if text.contains('/') {
        Ok(Point::Exact(parse_rational(text)?))
    } else {
        Ok(Point::Digits(text.parse::<StreamSpec>()?.to_stream()))
    }
}

fn bracket_text(b: &Bracket) -> String {
    if b.lo == b.hi {
        format_rational(&b.lo)
    } else {
        format!("[{:.6e}, {:.6e}]", to_f64(&b.lo), to_f64(&b.hi))
    }
}

fn classify(x: &str, y: &str, depth: u64, bound: Option<u64>) -> Result<Report, CliError> {
    let (px, py) = (point(x)?, point(y)?);
    let verdict = pair_metrics(&px, &py, depth)?;
    let asymptotic = match bound {
        Some(b) => Some(asymptotic_criterion_bounded(&px.to_stream()?, b, &py.to_stream()?, depth)?),
        None => None,
    };
    let mut table = Table::new(&["n", "lo", "hi"]);
    for (n, d) in verdict.distances.iter().enumerate() {
        table.push([n.to_string(), format_rational(&d.lo), format_rational(&d.hi)]);
    }
    let mut plain = format!(
        "window 0..={depth}: min distance {}, max distance {}",
        bracket_text(&verdict.min_distance),
        bracket_text(&verdict.max_distance)
    );
    match &asymptotic {
        Some(AsymptoticVerdict::AgreesFrom { index, .. }) => {
            plain.push_str(&format!("\ndigits agree from index {index} (candidate asymptotic pair)"))
        }
        Some(AsymptoticVerdict::DisagreementPersists { .. }) => {
            plain.push_str(&format!("\ndigits still differ at index {depth}"))
        }
        None => {}
    }
    let json = json!({
        "schema": SCHEMA,
        "x": x,
        "y": y,
        "verdict": serde_json::to_value(&verdict)?,
        "asymptotic": serde_json::to_value(&asymptotic)?,
    });
    Ok(Report::new(json, table, plain))
}

/// Everything needed to rebuild the member and re-run its check.
#[derive(Debug, Serialize, Deserialize)]
struct DistalArtifact {
    schema: u32,
    kind: String,
    x: String,
    #[serde(rename = "E")]
    big_e: u64,
    m: u64,
    n: u64,
    seed: u64,
    member: u64,
    depth: u64,
    certificate: DistalCertificate,
}

fn distal_certificate(
    x: &str,
    big_e: u64,
    m: u64,
    n: u64,
    seed: u64,
    member: u64,
    depth: u64,
) -> Result<DistalCertificate, CliError> {
    let x = x.parse::<StreamSpec>()?.to_stream();
    let family = distal_companion_family(&x, big_e, m, n)?;
    let y = family.sample(seed, member);
    Ok(verify_distal_bound(&x, &y, big_e, m, depth)?)
}

fn distal_report(a: &DistalArtifact) -> Result<Report, CliError> {
    let c = &a.certificate;
    let json = serde_json::to_value(a)?;
    let mut table = Table::new(&["field", "value"]);
    table.push(["bound".to_string(), format_rational(&c.bound)]);
    table.push(["min_distance_lo".to_string(), format_rational(&c.min_distance.lo)]);
    table.push(["min_distance_hi".to_string(), format_rational(&c.min_distance.hi)]);
    table.push(["argmin".to_string(), c.argmin.to_string()]);
    table.push(["holds".to_string(), c.holds.to_string()]);
    let plain = format!(
        "distal member {} of {} (E = {}, m = {}, n = {}): min distance {} at iterate {} {} bound E^(-2m) = {}",
        a.member,
        a.x,
        a.big_e,
        a.m,
        a.n,
        bracket_text(&c.min_distance),
        c.argmin,
        if c.holds { ">=" } else { "below" },
        format_rational(&c.bound),
    );
    let report = Report::new(json, table, plain);
    Ok(if c.holds { report } else { report.violation() })
}

fn replay(input: &str) -> Result<Report, CliError> {
    let text = read_input(input)?;
    let value: Value = serde_json::from_str(&text)?;
    if value.get("kind").and_then(Value::as_str) == Some("distal") {
        let artifact: DistalArtifact = serde_json::from_value(value)?;
        if artifact.schema != SCHEMA {
            return Err(CliError::Usage(format!("unknown schema {}", artifact.schema)));
        }
        let a = &artifact;
        let fresh = distal_certificate(&a.x, a.big_e, a.m, a.n, a.seed, a.member, a.depth)?;
        let ok = fresh == artifact.certificate && fresh.holds;
        let json = json!({ "schema": SCHEMA, "replay": if ok { "ok" } else { "mismatch" }, "kind": "distal" });
        let plain = if ok {
            "distal artifact replays".to_string()
        } else if fresh != artifact.certificate {
            "distal artifact does not replay: recomputed certificate differs".to_string()
        } else {
            "distal artifact does not replay: the bound fails".to_string()
        };
        let report = Report::new(json.clone(), Table::from_fields(&json), plain);
        return Ok(if ok { report } else { report.violation() });
    }
    let witness: ChaosWitness = serde_json::from_value(value)?;
    replay_witness(&witness)
}

pub fn run(args: PairsArgs, seed: u64) -> Result<Report, CliError> {
    match args.command {
        PairsCommand::Classify { x, y, depth, bound } => classify(&x, &y, depth, bound),
        PairsCommand::ConstructDistal { x_digits, big_e, m, n, depth, member } => {
            let spec: StreamSpec = x_digits.parse()?;
            let n = n.unwrap_or(big_e);
            let x = spec.to_string();
            let certificate = distal_certificate(&x, big_e, m, n, seed, member, depth)?;
            let artifact = DistalArtifact { schema: SCHEMA, kind: "distal".into(), x, big_e, m, n, seed, member, depth, certificate };
            distal_report(&artifact)
        }
        PairsCommand::ConstructScrambled { a, b, m_max } => {
            let (a, b): (StreamSpec, StreamSpec) = (a.parse()?, b.parse()?);
            let report = scrambled_pair_check(&a.to_stream(), &b.to_stream(), m_max)?;
            let witness = ChaosWitness::new(WitnessPayload::ScrambledPair(ScrambledPair { a, b, report }));
            witness_report(&witness)
        }
        PairsCommand::Replay { input } => replay(&input),
    }
}
