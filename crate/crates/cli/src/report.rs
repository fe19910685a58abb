//! CSV form of convergence reports.
//!
//! The first twelve columns are fixed:
//! `nu,players,mu_bar,delta_bar,d_bar,agg_dist_sq,profile_dist_sq,bound_no_u,bound_with_u,residual,sweeps,seconds`.
//! They are followed by `bound_with_u_proof`, `bound_with_u_trunc` and
//! `converged`, and by `beckmann_agg_dist_sq` when any row carries it.
//! Floats are written with 12 significant digits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use wardrop_approx::analysis::{ConvergenceReport, ConvergenceRow};

use crate::CliError;

pub const BASE_HEADER: [&str; 12] = [
    "nu",
    "players",
    "mu_bar",
    "delta_bar",
    "d_bar",
    "agg_dist_sq",
    "profile_dist_sq",
    "bound_no_u",
    "bound_with_u",
    "residual",
    "sweeps",
    "seconds",
];

const EXTRA_HEADER: [&str; 3] = ["bound_with_u_proof", "bound_with_u_trunc", "converged"];
const BECKMANN_COLUMN: &str = "beckmann_agg_dist_sq";

/// `x` with 12 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

/// `x` after a trip through [`format_float`].
pub fn round_float(x: f64) -> f64 {
    format_float(x).parse().expect("formatted floats parse")
}

fn header(report: &ConvergenceReport) -> Vec<&'static str> {
    let mut h: Vec<&str> = BASE_HEADER.iter().chain(&EXTRA_HEADER).copied().collect();
    if report.rows.iter().any(|r| r.beckmann_agg_dist_sq.is_some()) {
        h.push(BECKMANN_COLUMN);
    }
    h
}

fn record(row: &ConvergenceRow, with_beckmann: bool) -> Vec<String> {
    let f = format_float;
    let mut out = vec![
        row.nu.to_string(),
        row.players.to_string(),
        f(row.mu_bar),
        f(row.delta_bar),
        f(row.d_bar),
        f(row.agg_dist_sq),
        f(row.profile_dist_sq),
        f(row.bound_no_u),
        f(row.bound_with_u),
        f(row.residual),
        row.sweeps.to_string(),
        f(row.seconds),
        f(row.bound_with_u_proof),
        f(row.bound_with_u_trunc),
        row.converged.to_string(),
    ];
    if with_beckmann {
        out.push(row.beckmann_agg_dist_sq.map(f).unwrap_or_default());
    }
    out
}

/// Writes the report as CSV, rows ordered by `ν`.
pub fn write_csv<W: Write>(report: &ConvergenceReport, out: W) -> Result<(), csv::Error> {
    let h = header(report);
    let with_beckmann = h.len() > BASE_HEADER.len() + EXTRA_HEADER.len();
    let mut rows: Vec<&ConvergenceRow> = report.rows.iter().collect();
    rows.sort_by_key(|r| r.nu);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&h)?;
    for row in rows {
        w.write_record(record(row, with_beckmann))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(report: &ConvergenceReport, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(report, file).map_err(|e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing column {0}")]
    MissingColumn(&'static str),
    #[error("row {row}, column {column}: cannot parse {value:?}")]
    Value {
        row: usize,
        column: &'static str,
        value: String,
    },
}

/// Reads a report written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<ConvergenceReport, ParseError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let index = |name: &'static str| headers.iter().position(|h| h == name);
    let mut columns = Vec::new();
    for name in BASE_HEADER.iter().chain(&EXTRA_HEADER) {
        columns.push((*name, index(name).ok_or(ParseError::MissingColumn(name))?));
    }
    let beckmann = index(BECKMANN_COLUMN);
    let mut report = ConvergenceReport::default();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| -> (&'static str, &str) { (columns[c].0, rec.get(columns[c].1).unwrap_or("")) };
        fn parse<T: std::str::FromStr>(row: usize, (column, value): (&'static str, &str)) -> Result<T, ParseError> {
            value.parse().map_err(|_| ParseError::Value {
                row,
                column,
                value: value.to_string(),
            })
        }
        let beckmann_agg_dist_sq = match beckmann.and_then(|i| rec.get(i)) {
            Some("") | None => None,
            Some(v) => Some(parse(k, (BECKMANN_COLUMN, v))?),
        };
        report.rows.push(ConvergenceRow {
            nu: parse(k, get(0))?,
            players: parse(k, get(1))?,
            mu_bar: parse(k, get(2))?,
            delta_bar: parse(k, get(3))?,
            d_bar: parse(k, get(4))?,
            agg_dist_sq: parse(k, get(5))?,
            profile_dist_sq: parse(k, get(6))?,
            bound_no_u: parse(k, get(7))?,
            bound_with_u: parse(k, get(8))?,
            residual: parse(k, get(9))?,
            sweeps: parse(k, get(10))?,
            seconds: parse(k, get(11))?,
            bound_with_u_proof: parse(k, get(12))?,
            bound_with_u_trunc: parse(k, get(13))?,
            converged: parse(k, get(14))?,
            beckmann_agg_dist_sq,
        });
    }
    Ok(report)
}
