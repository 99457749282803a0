use clap::{Args, ValueEnum};
use serde_json::json;

use luroth_core::expansion::{cf_expand, luroth_expand};
use luroth_core::rational::{format_rational, parse_rational};

use crate::output::{digits, CliError, Report, Table, SCHEMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Luroth,
    Gauss,
}

#[derive(Args, Debug)]
pub struct ExpandArgs {
    /// Rational `p/q`: in (0, 1] for the Lüroth map, [0, 1) for the Gauss map.
    x: String,
    #[arg(long, default_value_t = 10)]
    digits: usize,
    #[arg(long, value_enum, default_value_t = MapKind::Luroth)]
    map: MapKind,
}

pub fn run(args: ExpandArgs) -> Result<Report, CliError> {
    let x = parse_rational(&args.x)?;
    if args.digits == 0 {
        return Err(CliError::Usage("--digits must be at least 1".into()));
    }
    let mut table = Table::new(&["n", "digit", "orbit"]);
    match args.map {
        MapKind::Luroth => {
            let e = luroth_expand(&x, args.digits)?;
            for (i, (d, v)) in e.digits.iter().zip(&e.orbit).enumerate() {
                table.push([(i + 1).to_string(), d.to_string(), format_rational(v)]);
            }
            let tail = match &e.period {
                Some(p) => format!("(period: {})", digits(&p.period)),
                None => "(no period within the cycle cap)".to_string(),
            };
            let plain = format!("{} {tail}", digits(&e.digits));
            let json = json!({
                "schema": SCHEMA,
                "map": "luroth",
                "x": format_rational(&x),
                "digits": e.digits.as_slice(),
                "orbit": e.orbit.iter().map(format_rational).collect::<Vec<_>>(),
                "period": e.period.as_ref().map(|p| json!({
                    "preperiod": p.preperiod.as_slice(),
                    "period": p.period.as_slice(),
                })),
            });
            Ok(Report::new(json, table, plain))
        }
        MapKind::Gauss => {
            let e = cf_expand(&x, args.digits)?;
            for (i, (d, v)) in e.digits.iter().zip(&e.orbit).enumerate() {
                table.push([(i + 1).to_string(), d.to_string(), format_rational(v)]);
            }
            let tail = if e.terminated_at.is_some() { "(terminates)" } else { "(truncated)" };
            let plain = format!("{} {tail}", digits(&e.digits)).trim_start().to_string();
            let json = json!({
                "schema": SCHEMA,
                "map": "gauss",
                "x": format_rational(&x),
                "digits": e.digits,
                "orbit": e.orbit.iter().map(format_rational).collect::<Vec<_>>(),
                "terminated_at": e.terminated_at,
            });
            Ok(Report::new(json, table, plain))
        }
    }
}
