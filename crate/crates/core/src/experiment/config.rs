//! Flat `key = value` experiment files with repeated `[run]` sections.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{two_level_profile, BlockPartition, LabelKind, SynthSpec};
use crate::error::{Error, Result};
use crate::problems::{LossKind, RegKind};
use crate::sampling::SamplerKind;
use crate::solvers::{Algorithm, MetricPolicy};

/// Environment variable that overrides the root directory for relative dataset paths.
pub const DATA_DIR_VAR: &str = "VMBCD_DATA_DIR";

#[derive(Debug, Clone)]
pub enum ProblemSource {
    Libsvm { path: PathBuf, cols: Option<usize> },
    Synthetic(SynthSpec<f64>),
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub source: ProblemSource,
    pub loss: LossKind,
    pub c: f64,
    pub regularizer: RegKind,
    pub lambda: f64,
    pub block_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Epochs,
    WeightedEpochs,
    Time,
}

impl FromStr for XAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epochs" => Ok(XAxis::Epochs),
            "weighted-epochs" | "weighted_epochs" => Ok(XAxis::WeightedEpochs),
            "time" => Ok(XAxis::Time),
            _ => Err(Error::Config(format!("unknown x_axis '{s}'"))),
        }
    }
}

/// How the optimal value used for relative gaps is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FStar {
    /// Long reference run of the variable-metric method, combined with every observed value.
    Auto,
    Value(f64),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub name: String,
    pub algorithm: Algorithm,
    pub metric: MetricPolicy,
    pub sampler: SamplerKind,
    pub inner_budget: usize,
    pub seeds: Range<u64>,
    pub epochs: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub runs: Vec<RunSpec>,
    pub output: PathBuf,
    pub plot: bool,
    pub x_axis: XAxis,
    pub f_star: FStar,
    pub wall_time: bool,
}

/// Reads a config file; relative dataset paths resolve against `VMBCD_DATA_DIR` when it is set
/// and against the config file's directory otherwise.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let data_dir = std::env::var_os(DATA_DIR_VAR).map(PathBuf::from);
    parse_config(&text, base, data_dir.as_deref())
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

pub fn parse_config(
    text: &str,
    base_dir: &Path,
    data_dir: Option<&Path>,
) -> Result<ExperimentConfig> {
    let mut problem = Vec::new();
    let mut runs: Vec<(usize, Vec<Entry>)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content == "[run]" {
            runs.push((line, Vec::new()));
            continue;
        }
        if content.starts_with('[') {
            return Err(Error::Parse {
                line,
                message: format!("unknown section {content}"),
            });
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                message: format!("expected key = value, got '{content}'"),
            });
        };
        let entry = Entry {
            line,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        };
        match runs.last_mut() {
            Some((_, entries)) => entries.push(entry),
            None => problem.push(entry),
        }
    }
    let mut cfg = parse_problem(&problem, base_dir, data_dir)?;
    if runs.is_empty() {
        return Err(Error::Config("config declares no [run] section".into()));
    }
    for (line, entries) in &runs {
        let run = parse_run(*line, entries, cfg.runs.len())?;
        if cfg.runs.iter().any(|r| r.name == run.name) {
            return Err(Error::Parse {
                line: *line,
                message: format!("duplicate run name '{}'", run.name),
            });
        }
        if run.algorithm == Algorithm::Fista && !cfg.problem.loss.is_convex() {
            return Err(Error::Parse {
                line: *line,
                message: "fista needs a convex loss".into(),
            });
        }
        cfg.runs.push(run);
    }
    Ok(cfg)
}

fn value<T: FromStr>(e: &Entry) -> Result<T> {
    e.value.parse().map_err(|_| Error::Parse {
        line: e.line,
        message: format!("bad value '{}' for {}", e.value, e.key),
    })
}

fn parsed<T: FromStr<Err = Error>>(e: &Entry) -> Result<T> {
    e.value.parse().map_err(|err: Error| Error::Parse {
        line: e.line,
        message: err.to_string(),
    })
}

fn boolean(e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Parse {
            line: e.line,
            message: format!("expected a boolean for {}", e.key),
        }),
    }
}

/// `a..b` (exclusive), `a-b` (inclusive) or a single index.
fn index_range(e: &Entry) -> Result<Range<u64>> {
    let bad = || Error::Parse {
        line: e.line,
        message: format!("bad range '{}'", e.value),
    };
    let v = e.value.as_str();
    let r = if let Some((a, b)) = v.split_once("..") {
        a.trim().parse().map_err(|_| bad())?..b.trim().parse().map_err(|_| bad())?
    } else if let Some((a, b)) = v.split_once('-') {
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        a.trim().parse().map_err(|_| bad())?..b + 1
    } else {
        let a: u64 = v.parse().map_err(|_| bad())?;
        a..a + 1
    };
    if r.is_empty() {
        return Err(bad());
    }
    Ok(r)
}

fn index_list(e: &Entry) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in e.value.split(',') {
        let sub = Entry {
            line: e.line,
            key: e.key.clone(),
            value: part.trim().to_string(),
        };
        out.extend(index_range(&sub)?.map(|k| k as usize));
    }
    Ok(out)
}

fn positive(e: &Entry) -> Result<f64> {
    let v: f64 = value(e)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Parse {
            line: e.line,
            message: format!("{} must be positive", e.key),
        });
    }
    Ok(v)
}

#[derive(Default)]
struct SynthKeys {
    seed: u64,
    rows: Option<usize>,
    cols: Option<usize>,
    heavy: Option<usize>,
    ratio: Option<f64>,
    correlation: Option<f64>,
    density: Option<f64>,
    support: Option<f64>,
    support_blocks: Option<Vec<usize>>,
    noise: Option<f64>,
    labels: Option<LabelKind>,
    bias: bool,
}

fn parse_problem(
    entries: &[Entry],
    base_dir: &Path,
    data_dir: Option<&Path>,
) -> Result<ExperimentConfig> {
    let mut dataset: Option<&Entry> = None;
    let mut dataset_cols = None;
    let mut loss = None;
    let mut c = 1.0;
    let mut regularizer = RegKind::L1;
    let mut lambda = None;
    let mut block_size = 1;
    let mut output = PathBuf::from("out");
    let mut plot = true;
    let mut x_axis = XAxis::Epochs;
    let mut f_star = FStar::Auto;
    let mut wall_time = true;
    let mut synth = SynthKeys::default();

    for e in entries {
        match e.key.as_str() {
            "dataset" => dataset = Some(e),
            "dataset_cols" => dataset_cols = Some(value(e)?),
            "loss" => loss = Some(parsed::<LossKind>(e)?),
            "C" | "c" => c = positive(e)?,
            "regularizer" => regularizer = parsed(e)?,
            "lambda" => {
                let v: f64 = value(e)?;
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Parse {
                        line: e.line,
                        message: "lambda must be non-negative".into(),
                    });
                }
                lambda = Some(v);
            }
            "block_size" => block_size = value(e)?,
            "output" => output = PathBuf::from(&e.value),
            "plot" => plot = boolean(e)?,
            "x_axis" => x_axis = parsed(e)?,
            "fstar" => {
                f_star = match e.value.as_str() {
                    "auto" => FStar::Auto,
                    "none" => FStar::None,
                    _ => FStar::Value(value(e)?),
                }
            }
            "wall_time" => wall_time = boolean(e)?,
            "synth.seed" => synth.seed = value(e)?,
            "synth.rows" => synth.rows = Some(value(e)?),
            "synth.cols" => synth.cols = Some(value(e)?),
            "synth.heavy" => synth.heavy = Some(value(e)?),
            "synth.ratio" => synth.ratio = Some(value(e)?),
            "synth.correlation" => synth.correlation = Some(value(e)?),
            "synth.density" => synth.density = Some(value(e)?),
            "synth.support" => synth.support = Some(value(e)?),
            "synth.support_blocks" => synth.support_blocks = Some(index_list(e)?),
            "synth.noise" => synth.noise = Some(value(e)?),
            "synth.labels" => {
                synth.labels = Some(match e.value.as_str() {
                    "regression" => LabelKind::Regression,
                    "binary" => LabelKind::Binary,
                    _ => {
                        return Err(Error::Parse {
                            line: e.line,
                            message: "labels must be regression or binary".into(),
                        })
                    }
                })
            }
            "synth.bias" => synth.bias = boolean(e)?,
            _ => {
                return Err(Error::Parse {
                    line: e.line,
                    message: format!("unknown key '{}'", e.key),
                })
            }
        }
    }

    let Some(dataset) = dataset else {
        return Err(Error::Config(
            "missing 'dataset' (a LIBSVM path or 'synthetic')".into(),
        ));
    };
    let loss = loss.ok_or_else(|| Error::Config("missing 'loss'".into()))?;
    let lambda = lambda.ok_or_else(|| Error::Config("missing 'lambda'".into()))?;
    if block_size == 0 {
        return Err(Error::Config("block_size must be positive".into()));
    }
    let source = if dataset.value == "synthetic" {
        ProblemSource::Synthetic(synth_spec(synth, block_size)?)
    } else {
        let rel = PathBuf::from(&dataset.value);
        let path = if rel.is_absolute() {
            rel
        } else {
            data_dir.unwrap_or(base_dir).join(rel)
        };
        if !path.is_file() {
            return Err(Error::Config(format!(
                "dataset {} does not exist",
                path.display()
            )));
        }
        ProblemSource::Libsvm {
            path,
            cols: dataset_cols,
        }
    };
    Ok(ExperimentConfig {
        problem: ProblemSpec {
            source,
            loss,
            c,
            regularizer,
            lambda,
            block_size,
        },
        runs: Vec::new(),
        output,
        plot,
        x_axis,
        f_star,
        wall_time,
    })
}

fn synth_spec(keys: SynthKeys, block_size: usize) -> Result<SynthSpec<f64>> {
    let rows = keys
        .rows
        .ok_or_else(|| Error::Config("synthetic dataset needs synth.rows".into()))?;
    let cols = keys
        .cols
        .ok_or_else(|| Error::Config("synthetic dataset needs synth.cols".into()))?;
    let n_blocks = BlockPartition::uniform(cols, block_size)?.num_blocks();
    let scales = match (keys.heavy, keys.ratio) {
        (Some(h), Some(r)) => two_level_profile(n_blocks, h, r)?,
        (None, None) => vec![1.0; n_blocks],
        _ => {
            return Err(Error::Config(
                "synth.heavy and synth.ratio go together".into(),
            ))
        }
    };
    let mut spec = SynthSpec::new(keys.seed, rows, cols, block_size, scales);
    if let Some(v) = keys.correlation {
        spec.correlation = v;
    }
    if let Some(v) = keys.density {
        spec.density = v;
    }
    if let Some(v) = keys.support {
        spec.support = v;
    }
    spec.support_blocks = keys.support_blocks;
    if let Some(v) = keys.noise {
        spec.noise = v;
    }
    if let Some(v) = keys.labels {
        spec.labels = v;
    }
    spec.bias = keys.bias;
    Ok(spec)
}

fn parse_run(line: usize, entries: &[Entry], index: usize) -> Result<RunSpec> {
    let mut name = None;
    let mut algorithm = None;
    let mut metric = MetricPolicy::HessianBlock;
    let mut sampler = SamplerKind::Uniform;
    let mut inner_budget = 10;
    let mut seeds = 0..1;
    let mut epochs = None;
    for e in entries {
        match e.key.as_str() {
            "name" => name = Some(e.value.clone()),
            "algorithm" => algorithm = Some(parsed::<Algorithm>(e)?),
            "metric" => metric = parsed(e)?,
            "sampler" => sampler = parsed(e)?,
            "inner" => inner_budget = value(e)?,
            "seeds" => seeds = index_range(e)?,
            "epochs" => {
                let v: usize = value(e)?;
                if v == 0 {
                    return Err(Error::Parse {
                        line: e.line,
                        message: "epochs must be at least 1".into(),
                    });
                }
                epochs = Some(v);
            }
            _ => {
                return Err(Error::Parse {
                    line: e.line,
                    message: format!("unknown run key '{}'", e.key),
                })
            }
        }
    }
    let algorithm = algorithm.ok_or(Error::Parse {
        line,
        message: "run needs an algorithm".into(),
    })?;
    let epochs = epochs.ok_or(Error::Parse {
        line,
        message: "run needs epochs".into(),
    })?;
    if algorithm == Algorithm::VmBcd && inner_budget == 0 {
        return Err(Error::Parse {
            line,
            message: "inner budget must be at least 1".into(),
        });
    }
    let name = name.unwrap_or_else(|| format!("run{index}"));
    if name.is_empty()
        || !name
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch))
    {
        return Err(Error::Parse {
            line,
            message: format!("run name '{name}' must be [A-Za-z0-9._-]+"),
        });
    }
    Ok(RunSpec {
        name,
        algorithm,
        metric,
        sampler,
        inner_budget,
        seeds,
        epochs,
    })
}
