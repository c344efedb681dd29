//! Batch experiment driver: config files in, trace CSVs, aggregates and SVG plots out.

mod config;
mod output;
mod plot;
mod report;

pub use config::{
    load_config, parse_config, ExperimentConfig, FStar, ProblemSource, ProblemSpec, RunSpec, XAxis,
    DATA_DIR_VAR,
};
pub use output::{
    aggregate, median, min_g_ratio, read_aggregate_csv, write_aggregate_csv, write_trace_csv,
    AggregateRow, AGGREGATE_HEADER, TRACE_HEADER,
};
pub use plot::{render_svg, Series};
pub use report::{compare, compare_report, format_report, ReportRow};

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use rayon::prelude::*;

use crate::data::{generate, parse_libsvm, Dataset};
use crate::error::{Error, Result};
use crate::problems::{CompositeProblem, SeparableRegularizer};
use crate::solvers::{run, Algorithm, MetricPolicy, RunConfig};
use crate::theory::{fill_rel_gap, TraceRecord};

/// Inner budget of the reference run used for `fstar = auto`.
pub const REFERENCE_INNER: usize = 20;
/// The reference run gets this many times the longest configured run.
pub const REFERENCE_EPOCH_FACTOR: usize = 10;
/// The reference run stops once `||G||^2` reaches this level.
pub const REFERENCE_G_TOL: f64 = 1e-20;

pub fn build_dataset(spec: &ProblemSpec) -> Result<Dataset<f64>> {
    match &spec.source {
        ProblemSource::Libsvm { path, cols } => {
            let file = File::open(path).map_err(|e| {
                Error::Config(format!("cannot open dataset {}: {e}", path.display()))
            })?;
            parse_libsvm::<f64, _>(BufReader::new(file), *cols)?.with_block_size(spec.block_size)
        }
        ProblemSource::Synthetic(s) => Ok(generate(s)?.0),
    }
}

pub fn build_problem(spec: &ProblemSpec) -> Result<CompositeProblem<f64>> {
    let dataset = build_dataset(spec)?;
    let blocks = dataset.partition().num_blocks();
    let reg = SeparableRegularizer::uniform(spec.regularizer, spec.lambda, blocks)?;
    CompositeProblem::new(dataset, spec.loss, spec.c, reg)
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    /// Overrides the config's output directory.
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed_offset: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub trace_files: Vec<PathBuf>,
    pub aggregate: PathBuf,
    pub plot: Option<PathBuf>,
    pub f_star: Option<f64>,
}

fn solver_config(spec: &RunSpec, seed: u64, wall_time: bool) -> RunConfig<f64> {
    let mut c = RunConfig::new(spec.algorithm, spec.epochs, seed);
    c.metric = spec.metric;
    c.sampler = spec.sampler;
    c.inner_budget = spec.inner_budget;
    c.wall_time = wall_time;
    c
}

fn reference_value(problem: &CompositeProblem<f64>, epochs: usize) -> Result<f64> {
    let mut c = RunConfig::new(Algorithm::VmBcd, epochs, 0);
    c.metric = MetricPolicy::HessianBlock;
    c.inner_budget = REFERENCE_INNER;
    c.stop_g_norm_sq = Some(REFERENCE_G_TOL);
    c.wall_time = false;
    let out = run(problem, &c)?;
    let best = out
        .trace
        .iter()
        .map(|r| r.objective)
        .fold(f64::INFINITY, f64::min);
    log::info!("reference run: {} epochs, F* = {best}", out.trace.len() - 1);
    Ok(best)
}

/// Runs every `(run spec, seed)` pair and writes the output files.
pub fn run_experiment(
    config: &ExperimentConfig,
    options: &ExperimentOptions,
) -> Result<ExperimentSummary> {
    let problem = build_problem(&config.problem)?;
    let out_dir = options.out.clone().unwrap_or_else(|| config.output.clone());
    std::fs::create_dir_all(&out_dir)?;

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(k) = options.threads {
            b = b.num_threads(k);
        }
        b.build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
    };

    let mut traces: Vec<Vec<Vec<TraceRecord>>> = Vec::new();
    for spec in &config.runs {
        let seeds: Vec<u64> = spec
            .seeds
            .clone()
            .map(|s| s + options.seed_offset)
            .collect();
        log::info!(
            "run {}: {} seeds x {} epochs",
            spec.name,
            seeds.len(),
            spec.epochs
        );
        let results: Vec<Result<Vec<TraceRecord>>> = pool.install(|| {
            seeds
                .par_iter()
                .map(|&seed| {
                    run(&problem, &solver_config(spec, seed, config.wall_time)).map(|o| o.trace)
                })
                .collect()
        });
        traces.push(results.into_iter().collect::<Result<_>>()?);
    }

    let f_star = match config.f_star {
        FStar::Value(v) => Some(v),
        FStar::None => None,
        FStar::Auto if !problem.is_convex() => None,
        FStar::Auto => {
            let longest = config.runs.iter().map(|r| r.epochs).max().unwrap_or(1);
            let reference =
                pool.install(|| reference_value(&problem, REFERENCE_EPOCH_FACTOR * longest))?;
            let observed = traces
                .iter()
                .flatten()
                .flatten()
                .map(|r| r.objective)
                .fold(f64::INFINITY, f64::min);
            Some(reference.min(observed))
        }
    };
    if let Some(f) = f_star {
        for t in traces.iter_mut().flatten() {
            fill_rel_gap(t, f);
        }
    }

    let mut trace_files = Vec::new();
    let mut rows = Vec::new();
    for (spec, per_seed) in config.runs.iter().zip(&traces) {
        for (seed, t) in spec.seeds.clone().zip(per_seed) {
            let path = out_dir.join(format!(
                "{}_seed{}.csv",
                spec.name,
                seed + options.seed_offset
            ));
            write_trace_csv(t, BufWriter::new(File::create(&path)?))?;
            trace_files.push(path);
        }
        rows.extend(aggregate(&spec.name, per_seed));
    }
    let aggregate_path = out_dir.join("aggregate.csv");
    write_aggregate_csv(&rows, BufWriter::new(File::create(&aggregate_path)?))?;

    let plot = if config.plot {
        let path = out_dir.join("convergence.svg");
        std::fs::write(&path, plot_for(config, &rows, f_star.is_some()))?;
        Some(path)
    } else {
        None
    };
    Ok(ExperimentSummary {
        trace_files,
        aggregate: aggregate_path,
        plot,
        f_star,
    })
}

fn plot_for(config: &ExperimentConfig, rows: &[AggregateRow], have_gap: bool) -> String {
    let x_label = match config.x_axis {
        XAxis::Epochs => "epochs",
        XAxis::WeightedEpochs => "weighted epochs",
        XAxis::Time => "time (ms)",
    };
    let y_label = if have_gap {
        "median relative gap"
    } else {
        "median min ||G_k||^2 / ||G_0||^2"
    };
    let series: Vec<Series> = config
        .runs
        .iter()
        .map(|spec| Series {
            name: spec.name.clone(),
            points: rows
                .iter()
                .filter(|r| r.run == spec.name)
                .map(|r| {
                    let x = match config.x_axis {
                        XAxis::Epochs => r.epoch as f64,
                        XAxis::WeightedEpochs => r.weighted_epoch_mean,
                        XAxis::Time => r.wall_ms_mean,
                    };
                    let y = if have_gap {
                        r.rel_gap_median.unwrap_or(f64::NAN)
                    } else {
                        r.g_ratio_min_median
                    };
                    (x, y)
                })
                .collect(),
        })
        .collect();
    render_svg(&series, x_label, y_label)
}
