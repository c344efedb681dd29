//! Trace and aggregate CSV files.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::theory::TraceRecord;

pub const TRACE_HEADER: [&str; 8] = [
    "epoch",
    "F",
    "rel_gap",
    "G_norm_sq",
    "mean_alpha",
    "sparsity",
    "weighted_epoch",
    "wall_ms",
];

pub const AGGREGATE_HEADER: [&str; 14] = [
    "run",
    "epoch",
    "seeds",
    "F_mean",
    "F_median",
    "rel_gap_mean",
    "rel_gap_median",
    "G_norm_sq_mean",
    "G_norm_sq_median",
    "G_ratio_min_mean",
    "G_ratio_min_median",
    "mean_alpha_mean",
    "weighted_epoch_mean",
    "wall_ms_mean",
];

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Writes one run's trace. A missing relative gap is left empty.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in trace {
        w.write_record([
            r.epoch.to_string(),
            num(r.objective),
            opt(r.rel_gap),
            num(r.g_norm_sq),
            num(r.mean_alpha),
            num(r.sparsity),
            num(r.weighted_epoch),
            num(r.wall_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-epoch statistics of one run spec across its seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub run: String,
    pub epoch: usize,
    pub seeds: usize,
    pub f_mean: f64,
    pub f_median: f64,
    pub rel_gap_mean: Option<f64>,
    pub rel_gap_median: Option<f64>,
    pub g_mean: f64,
    pub g_median: f64,
    /// `min_{j <= k} ||G_j||^2 / ||G_0||^2`
    pub g_ratio_min_mean: f64,
    pub g_ratio_min_median: f64,
    pub mean_alpha_mean: f64,
    pub weighted_epoch_mean: f64,
    pub wall_ms_mean: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Running minimum of `||G_k||^2 / ||G_0||^2` (all zeros when `G_0 = 0`).
pub fn min_g_ratio(trace: &[TraceRecord]) -> Vec<f64> {
    let g0 = trace.first().map_or(0.0, |r| r.g_norm_sq);
    let mut best = f64::INFINITY;
    trace
        .iter()
        .map(|r| {
            let ratio = if g0 > 0.0 { r.g_norm_sq / g0 } else { 0.0 };
            best = best.min(ratio);
            best
        })
        .collect()
}

/// Aggregates the traces of one run spec over the epochs every seed reached.
pub fn aggregate(run: &str, traces: &[Vec<TraceRecord>]) -> Vec<AggregateRow> {
    let len = traces.iter().map(Vec::len).min().unwrap_or(0);
    let ratios: Vec<Vec<f64>> = traces.iter().map(|t| min_g_ratio(t)).collect();
    (0..len)
        .map(|k| {
            let col = |f: &dyn Fn(&TraceRecord) -> f64| {
                traces.iter().map(|t| f(&t[k])).collect::<Vec<_>>()
            };
            let f = col(&|r| r.objective);
            let g = col(&|r| r.g_norm_sq);
            let gaps: Option<Vec<f64>> = traces.iter().map(|t| t[k].rel_gap).collect();
            let gr: Vec<f64> = ratios.iter().map(|r| r[k]).collect();
            AggregateRow {
                run: run.to_string(),
                epoch: traces[0][k].epoch,
                seeds: traces.len(),
                f_mean: mean(&f),
                f_median: median(&f),
                rel_gap_mean: gaps.as_deref().map(mean),
                rel_gap_median: gaps.as_deref().map(median),
                g_mean: mean(&g),
                g_median: median(&g),
                g_ratio_min_mean: mean(&gr),
                g_ratio_min_median: median(&gr),
                mean_alpha_mean: mean(&col(&|r| r.mean_alpha)),
                weighted_epoch_mean: mean(&col(&|r| r.weighted_epoch)),
                wall_ms_mean: mean(&col(&|r| r.wall_ms)),
            }
        })
        .collect()
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.run.clone(),
            r.epoch.to_string(),
            r.seeds.to_string(),
            num(r.f_mean),
            num(r.f_median),
            opt(r.rel_gap_mean),
            opt(r.rel_gap_median),
            num(r.g_mean),
            num(r.g_median),
            num(r.g_ratio_min_mean),
            num(r.g_ratio_min_median),
            num(r.mean_alpha_mean),
            num(r.weighted_epoch_mean),
            num(r.wall_ms_mean),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate_csv<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(AGGREGATE_HEADER.iter().copied()) {
        return Err(Error::Config(
            "not an aggregate CSV (unexpected header)".into(),
        ));
    }
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let f = |i: usize| -> Result<f64> {
            field(i).parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {}", AGGREGATE_HEADER[i]),
            })
        };
        let o = |i: usize| -> Result<Option<f64>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let u = |i: usize| -> Result<usize> {
            field(i).parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {}", AGGREGATE_HEADER[i]),
            })
        };
        rows.push(AggregateRow {
            run: field(0).to_string(),
            epoch: u(1)?,
            seeds: u(2)?,
            f_mean: f(3)?,
            f_median: f(4)?,
            rel_gap_mean: o(5)?,
            rel_gap_median: o(6)?,
            g_mean: f(7)?,
            g_median: f(8)?,
            g_ratio_min_mean: f(9)?,
            g_ratio_min_median: f(10)?,
            mean_alpha_mean: f(11)?,
            weighted_epoch_mean: f(12)?,
            wall_ms_mean: f(13)?,
        });
    }
    Ok(rows)
}
