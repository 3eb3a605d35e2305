//! CSV and JSON output of experiment reports.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use super::ExperimentReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "model,n,delta,p,q,L,replicates,master_seed,plus_wins,minus_wins,halts,timeouts,avg_last_day,ci_low,ci_high";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
}

/// `%g` with six significant digits.
fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // exponent after rounding to six digits, as `%g` uses
    let sci = format!("{:.5e}", x);
    let (mantissa, e) = sci.split_once('e').expect("exponent");
    let e: i32 = e.parse().expect("integer exponent");
    if (-4..6).contains(&e) {
        let decimals = (5 - e).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        let sign = if e < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", e.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt_g(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

fn csv_row(r: &ExperimentReport) -> String {
    let mut line = String::new();
    write!(
        line,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.model,
        r.n,
        r.delta,
        fmt_g(r.p),
        fmt_g(r.q),
        opt_g(r.l),
        r.replicates,
        r.master_seed,
        r.plus_wins,
        r.minus_wins,
        r.halts,
        r.timeouts,
        opt_g(r.avg_last_day),
        fmt_g(r.ci_low),
        fmt_g(r.ci_high),
    )
    .expect("write to string");
    line
}

pub fn write_csv<W: Write>(reports: &[ExperimentReport], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(out, "{}", csv_row(r))?;
    }
    out.flush()
}

pub fn write_json<W: Write>(reports: &[ExperimentReport], mut out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, reports)?;
    writeln!(out)?;
    out.flush()
}

/// Reads back the output of [`write_json`].
pub fn parse_json(text: &str) -> Result<Vec<ExperimentReport>> {
    Ok(serde_json::from_str(text)?)
}

pub fn emit(reports: &[ExperimentReport], format: OutputFormat, dest: &Destination) -> Result<()> {
    let write = |out: &mut dyn Write| match format {
        OutputFormat::Csv => write_csv(reports, out),
        OutputFormat::Json => write_json(reports, out),
    };
    match dest {
        Destination::Stdout => {
            let stdout = io::stdout();
            write(&mut stdout.lock()).map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })
        }
        Destination::File(path) => {
            let io_err = |source| Error::Io {
                path: path.clone(),
                source,
            };
            let file = File::create(path).map_err(io_err)?;
            write(&mut BufWriter::new(file)).map_err(io_err)
        }
    }
}
