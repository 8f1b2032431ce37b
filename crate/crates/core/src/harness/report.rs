//! CSV rendering of reports.

use std::io::Write;

use super::run::SuccessReport;
use crate::Result;

pub const CSV_COLUMNS: [&str; 18] = [
    "experiment",
    "n",
    "d",
    "m",
    "trials",
    "successes",
    "p_hat",
    "ci_low",
    "ci_high",
    "baseline",
    "ratio",
    "eta",
    "mean_weight",
    "max_weight",
    "aborts",
    "straddles",
    "lambda",
    "seed",
];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub(crate) fn csv_fields(r: &SuccessReport) -> Vec<String> {
    vec![
        r.experiment.clone(),
        r.n.to_string(),
        r.d.to_string(),
        r.m.to_string(),
        r.trials.to_string(),
        r.successes.to_string(),
        r.p_hat.to_string(),
        r.ci_low.to_string(),
        r.ci_high.to_string(),
        r.baseline.to_string(),
        r.ratio.to_string(),
        r.eta.to_string(),
        opt(r.mean_weight),
        opt(r.max_weight),
        r.aborts.to_string(),
        r.straddles.to_string(),
        r.lambda.to_string(),
        r.seed.to_string(),
    ]
}

/// Header plus one row per report.
pub fn write_csv<W: Write>(reports: &[SuccessReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in reports {
        w.write_record(csv_fields(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Format(e.to_string())
}
