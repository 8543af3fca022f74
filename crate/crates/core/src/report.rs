//! CSV and JSON output.
//!
//! Run and sweep CSVs share one header:
//! `axis_value, protocol, tau_ul, tau_dl, tau_sum, delivered_ul, delivered_dl,
//! frac_coupled, frac_<mode>... , lambda1..lambda4, drift_ul, drift_dl,
//! frames, seed`. Mode columns follow [`Mode::ALL`]; columns that do not apply
//! to a row's protocol are empty. The benchmark's `μ_ul, μ_dl` go in
//! `lambda1, lambda2`. Drift is `departure - arrival` per frame.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::Mode;
use crate::search::SearchResult;
use crate::sim::SimReport;
use crate::sweep::SweepReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    Csv,
    #[default]
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" | "json-like" => Ok(Format::Json),
            _ => Err(Error::Invalid(format!("unknown output format `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Report {
    Search(SearchResult),
    Run(Box<SimReport>),
    Sweep(SweepReport),
}

pub fn sim_header() -> Vec<String> {
    let mut h: Vec<String> = ["axis_value", "protocol", "tau_ul", "tau_dl", "tau_sum", "delivered_ul", "delivered_dl", "frac_coupled"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(Mode::ALL.iter().map(|m| format!("frac_{m}")));
    h.extend(["lambda1", "lambda2", "lambda3", "lambda4", "drift_ul", "drift_dl", "frames", "seed"].map(String::from));
    h
}

fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn sim_record(axis_value: Option<f64>, r: &SimReport) -> Vec<String> {
    let mut rec = vec![
        opt(axis_value),
        r.protocol.to_string(),
        num(r.tau_ul),
        num(r.tau_dl),
        num(r.tau_sum),
        num(r.delivered_ul),
        num(r.delivered_dl),
        opt(r.frac_coupled),
    ];
    rec.extend(Mode::ALL.iter().map(|&m| {
        if m.protocol() == r.protocol {
            num(r.mode_fraction(m))
        } else {
            String::new()
        }
    }));
    rec.extend(r.lambda_columns().map(opt));
    rec.push(num(r.departure_ul - r.arrival_ul));
    rec.push(num(r.departure_dl - r.arrival_dl));
    rec.push(r.frames.to_string());
    rec.push(r.seed.to_string());
    rec
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn write_csv<W: Write>(report: &Report, out: W, path: &Path) -> Result<()> {
    let e = csv_err(path);
    let mut w = csv::Writer::from_writer(out);
    match report {
        Report::Run(r) => {
            w.write_record(sim_header()).map_err(&e)?;
            w.write_record(sim_record(None, r)).map_err(&e)?;
        }
        Report::Sweep(s) => {
            w.write_record(sim_header()).map_err(&e)?;
            for row in &s.rows {
                w.write_record(sim_record(Some(row.axis_value), &row.report)).map_err(&e)?;
            }
        }
        Report::Search(s) => {
            w.write_record(["iteration", "lambda_ul", "lambda_dl", "drift_ul", "drift_dl"]).map_err(&e)?;
            for (i, (l, d)) in s.lambda_trace.iter().zip(&s.drift_trace).enumerate() {
                w.write_record([i.to_string(), num(l[0]), num(l[1]), num(d[0]), num(d[1])]).map_err(&e)?;
            }
        }
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes `report` to `path`, or to stdout when `path` is `None`.
pub fn write_report(report: &Report, path: Option<&Path>, format: Format) -> Result<()> {
    let shown = path.unwrap_or(Path::new("<stdout>"));
    let out: Box<dyn Write> = match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|source| Error::Io { path: p.to_path_buf(), source })?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(report, out, shown),
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)
                .map_err(|source| Error::Json { path: shown.to_path_buf(), source })?;
            writeln!(out)
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io { path: shown.to_path_buf(), source })
        }
    }
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}
