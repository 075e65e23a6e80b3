use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::bench::run::AggregateReport;
use crate::error::{OpeError, Result};
use crate::estimators::csv_err;
use crate::metrics::{MetricValue, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = OpeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(OpeError::UnknownFormat(other.to_string())),
        }
    }
}

pub const CSV_COLUMNS: [&str; 5] = ["estimator", "metric", "k", "seed", "value"];

fn outcome_cell(o: &Outcome) -> String {
    o.value().map(|v| v.to_string()).unwrap_or_else(|| "NA".to_string())
}

/// Tidy CSV: one row per estimator × metric × k × seed. The SharpeRatio
/// decomposition appears as `SharpeNumerator` and `SharpeDenominator` rows.
/// Failed seeds contribute no rows.
pub fn write_tidy_csv<W: Write>(agg: &AggregateReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for seed in &agg.seeds {
        let Some(report) = &seed.metrics else { continue };
        let seed_id = seed.seed.to_string();
        for (label, m) in &report.estimators {
            let mut row = |metric: &str, k: Option<usize>, value: String| {
                let k = k.map(|k| k.to_string()).unwrap_or_default();
                w.write_record([label.as_str(), metric, &k, &seed_id, &value])
            };
            for s in &m.sharpe {
                row("SharpeRatio", Some(s.k), s.value.to_string()).map_err(csv_err)?;
                row(
                    "SharpeNumerator",
                    Some(s.k),
                    MetricValue::Finite(s.numerator).to_string(),
                )
                .map_err(csv_err)?;
                row(
                    "SharpeDenominator",
                    Some(s.k),
                    MetricValue::Finite(s.denominator).to_string(),
                )
                .map_err(csv_err)?;
            }
            row("nMSE", None, outcome_cell(&m.n_mse)).map_err(csv_err)?;
            row("RankCorr", None, outcome_cell(&m.rank_corr)).map_err(csv_err)?;
            for (k, o) in &m.n_regret {
                row("nRegret", Some(*k), outcome_cell(o)).map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_report<W: Write>(agg: &AggregateReport, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, agg)?;
            out.write_all(b"\n")?;
            out.flush()?;
            Ok(())
        }
        ReportFormat::Csv => write_tidy_csv(agg, out),
    }
}

/// Writes `agg` to `path` as `json` or `csv`.
pub fn emit_report(agg: &AggregateReport, format: &str, path: impl AsRef<Path>) -> Result<()> {
    let format = ReportFormat::from_str(format)?;
    write_report(agg, format, BufWriter::new(File::create(path)?))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<AggregateReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
