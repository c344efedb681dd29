//! Epochs-to-target comparison across aggregate files.

use std::fmt::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::output::{read_aggregate_csv, AggregateRow};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    /// First epoch whose median measure is at or below the target.
    pub epochs: Option<usize>,
    /// Mean weighted epochs at that point.
    pub weighted: Option<f64>,
    /// Ratios against the first method, when both reached the target.
    pub epoch_ratio: Option<f64>,
    pub weighted_ratio: Option<f64>,
}

/// Median relative gap, or the min-so-far stationarity ratio when no gap was recorded.
fn measure(rows: &[&AggregateRow]) -> Vec<f64> {
    if rows.iter().all(|r| r.rel_gap_median.is_some()) {
        rows.iter()
            .map(|r| r.rel_gap_median.unwrap_or(f64::NAN))
            .collect()
    } else {
        rows.iter().map(|r| r.g_ratio_min_median).collect()
    }
}

/// One row per `(label, run)` method, in input order.
pub fn compare(sets: &[(String, Vec<AggregateRow>)], target: f64) -> Result<Vec<ReportRow>> {
    let mut methods: Vec<(String, Vec<&AggregateRow>)> = Vec::new();
    for (label, rows) in sets {
        let mut runs: Vec<&str> = Vec::new();
        for r in rows {
            if !runs.contains(&r.run.as_str()) {
                runs.push(&r.run);
            }
        }
        for run in runs {
            let name = if label.is_empty() {
                run.to_string()
            } else {
                format!("{label}:{run}")
            };
            methods.push((name, rows.iter().filter(|r| r.run == run).collect()));
        }
    }
    if methods.len() < 2 {
        return Err(Error::Config(
            "report needs at least two methods to compare".into(),
        ));
    }
    let mut out: Vec<ReportRow> = Vec::new();
    for (name, rows) in methods {
        let m = measure(&rows);
        let hit = m.iter().position(|v| *v <= target);
        let epochs = hit.map(|k| rows[k].epoch);
        let weighted = hit.map(|k| rows[k].weighted_epoch_mean);
        let (epoch_ratio, weighted_ratio) = match out.first() {
            None => (epochs.map(|_| 1.0), weighted.map(|_| 1.0)),
            Some(first) => (
                ratio(epochs.map(|e| e as f64), first.epochs.map(|e| e as f64)),
                ratio(weighted, first.weighted),
            ),
        };
        out.push(ReportRow {
            method: name,
            epochs,
            weighted,
            epoch_ratio,
            weighted_ratio,
        });
    }
    Ok(out)
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        (Some(0.0), Some(_)) => Some(1.0),
        _ => None,
    }
}

pub fn format_report(rows: &[ReportRow], target: f64) -> String {
    let width = rows
        .iter()
        .map(|r| r.method.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut s = String::new();
    let _ = writeln!(s, "target {target:e}");
    let _ = writeln!(
        s,
        "{:<width$}  {:>10}  {:>12}  {:>12}  {:>14}",
        "method", "epochs", "weighted", "epoch_ratio", "weighted_ratio"
    );
    let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    for r in rows {
        match r.epochs {
            Some(e) => {
                let _ = writeln!(
                    s,
                    "{:<width$}  {:>10}  {:>12}  {:>12}  {:>14}",
                    r.method,
                    e,
                    f(r.weighted),
                    f(r.epoch_ratio),
                    f(r.weighted_ratio)
                );
            }
            None => {
                let _ = writeln!(s, "{:<width$}  not reached", r.method);
            }
        }
    }
    s
}

/// Reads aggregate CSVs and formats the comparison. Methods are labelled by file stem when
/// more than one file is given.
pub fn compare_report(paths: &[impl AsRef<Path>], target: f64) -> Result<String> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Config("target must be positive".into()));
    }
    let mut sets = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let rows = read_aggregate_csv(std::fs::File::open(p)?)?;
        let label = if paths.len() > 1 {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        } else {
            String::new()
        };
        sets.push((label, rows));
    }
    if paths.len() > 1 {
        let mut seen = std::collections::HashSet::new();
        for (label, _) in sets.iter_mut() {
            let base = label.clone();
            let mut k = 1;
            while !seen.insert(label.clone()) {
                k += 1;
                *label = format!("{base}#{k}");
            }
        }
    }
    Ok(format_report(&compare(&sets, target)?, target))
}
