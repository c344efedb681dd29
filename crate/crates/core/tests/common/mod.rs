#![allow(dead_code, clippy::too_many_arguments)]

use vmbcd::data::{generate, BlockPartition, BlockedSparseMatrix, Dataset, LabelKind};
use vmbcd::problems::{CompositeProblem, LossKind, RegKind, SeparableRegularizer};
use vmbcd::SynthSpec;

pub fn synth_problem(
    seed: u64,
    rows: usize,
    cols: usize,
    block: usize,
    loss: LossKind,
    reg: RegKind,
    lambda: f64,
) -> CompositeProblem<f64> {
    let mut spec = SynthSpec::homogeneous(seed, rows, cols, block).unwrap();
    spec.correlation = 0.3;
    spec.density = 0.8;
    if loss == LossKind::SquaredHinge {
        spec.labels = LabelKind::Binary;
    }
    let (ds, _) = generate(&spec).unwrap();
    let blocks = ds.partition().num_blocks();
    CompositeProblem::new(
        ds,
        loss,
        1.0,
        SeparableRegularizer::uniform(reg, lambda, blocks).unwrap(),
    )
    .unwrap()
}

/// Dense row-major data with a uniform block partition.
pub fn dense_problem(
    rows: usize,
    cols: usize,
    data: &[f64],
    labels: Vec<f64>,
    block: usize,
    loss: LossKind,
    reg: RegKind,
    lambda: f64,
) -> CompositeProblem<f64> {
    let a = BlockedSparseMatrix::from_dense(
        rows,
        cols,
        data,
        BlockPartition::uniform(cols, block).unwrap(),
    )
    .unwrap();
    let ds = Dataset::new(a, labels).unwrap();
    let blocks = ds.partition().num_blocks();
    CompositeProblem::new(
        ds,
        loss,
        1.0,
        SeparableRegularizer::uniform(reg, lambda, blocks).unwrap(),
    )
    .unwrap()
}

/// Dense copy of the design, row-major.
pub fn dense_of(p: &CompositeProblem<f64>) -> (usize, usize, Vec<f64>) {
    let m = p.matrix();
    (m.rows(), m.cols(), m.to_dense())
}

pub fn matvec(rows: usize, cols: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|i| (0..cols).map(|j| a[i * cols + j] * x[j]).sum())
        .collect()
}
