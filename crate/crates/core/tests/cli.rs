use std::path::Path;
use std::process::Command;

use tempfile::TempDir;
use vmbcd::experiment::{
    compare_report, load_config, parse_config, read_aggregate_csv, run_experiment,
    ExperimentOptions, ProblemSource, AGGREGATE_HEADER, TRACE_HEADER,
};
use vmbcd::Error;

const SMALL: &str = "\
dataset = synthetic
synth.seed = 3
synth.rows = 60
synth.cols = 24
synth.correlation = 0.3
loss = squared
regularizer = l1
lambda = 0.1
block_size = 3
wall_time = false

[run]
name = vm
algorithm = vm-bcd
inner = 5
seeds = 0..10
epochs = 15

[run]
name = unit
algorithm = rcd-unit
sampler = lipschitz
seeds = 0..10
epochs = 15
";

fn parse_err(text: &str) -> Error {
    parse_config(text, Path::new("."), None).unwrap_err()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn config_errors_name_the_line() {
    let bad_epochs = SMALL.replacen("epochs = 15", "epochs = 0", 1);
    assert!(matches!(
        parse_err(&bad_epochs),
        Error::Parse { line: 17, .. }
    ));
    let unknown = SMALL.replacen("lambda = 0.1", "lamda = 0.1", 1);
    match parse_err(&unknown) {
        Error::Parse { line, message } => assert_eq!((line, message.contains("lamda")), (8, true)),
        e => panic!("{e}"),
    }
    let dup = SMALL.replacen("name = unit", "name = vm", 1);
    assert!(matches!(parse_err(&dup), Error::Parse { .. }));
    let no_runs = SMALL.split("[run]").next().unwrap().to_string();
    assert!(parse_err(&no_runs).to_string().contains("[run]"));
    let fista_bw = SMALL
        .replacen("loss = squared", "loss = biweight", 1)
        .replacen("vm-bcd", "fista", 1);
    assert!(parse_err(&fista_bw).to_string().contains("convex"));
}

#[test]
fn dataset_paths_resolve_against_data_dir() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    std::fs::write(
        data.join("tiny.svm"),
        "1 1:1 2:0.5\n-1 2:-1 3:2\n0.5 1:0.25 3:1\n",
    )
    .unwrap();
    let text = SMALL.replacen("dataset = synthetic", "dataset = tiny.svm", 1);
    let missing = parse_config(&text, dir.path(), None).unwrap_err();
    assert!(missing.to_string().contains("does not exist"), "{missing}");
    let cfg = parse_config(&text, dir.path(), Some(&data)).unwrap();
    assert!(
        matches!(&cfg.problem.source, ProblemSource::Libsvm { path, .. } if path == &data.join("tiny.svm"))
    );
    let cfg = parse_config(&text, &data, None).unwrap();
    assert!(matches!(cfg.problem.source, ProblemSource::Libsvm { .. }));
    // load_config resolves against the config file's directory
    std::fs::write(data.join("exp.cfg"), &text).unwrap();
    assert!(load_config(&data.join("exp.cfg")).is_ok());
}

#[test]
fn experiment_writes_traces_aggregate_and_plot() {
    let dir = TempDir::new().unwrap();
    let cfg = parse_config(SMALL, Path::new("."), None).unwrap();
    let opts = ExperimentOptions {
        out: Some(dir.path().to_path_buf()),
        threads: Some(2),
        seed_offset: 0,
    };
    let summary = run_experiment(&cfg, &opts).unwrap();
    assert_eq!(summary.trace_files.len(), 20);
    for name in ["vm", "unit"] {
        for seed in 0..10 {
            assert!(dir.path().join(format!("{name}_seed{seed}.csv")).is_file());
        }
    }
    let svg = std::fs::read_to_string(summary.plot.unwrap()).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    let f_star = summary.f_star.unwrap();

    let mut per_epoch_f: Vec<Vec<f64>> = vec![Vec::new(); 16];
    for path in summary
        .trace_files
        .iter()
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("vm_"))
    {
        let (header, rows) = read_csv(path);
        assert_eq!(header, TRACE_HEADER);
        assert_eq!(rows.len(), 16);
        let epochs: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
        assert!(epochs.windows(2).all(|w| w[1] > w[0]));
        for r in &rows {
            let v: Vec<f64> = r.iter().map(|s| s.parse().unwrap()).collect();
            assert!(v.iter().all(|x| x.is_finite()));
            assert!(v[2] >= 0.0 && (v[2] - (v[1] - f_star) / f_star.abs()).abs() <= 1e-12);
            per_epoch_f[v[0] as usize].push(v[1]);
        }
    }

    let (header, _) = read_csv(&summary.aggregate);
    assert_eq!(header, AGGREGATE_HEADER);
    let rows = read_aggregate_csv(std::fs::File::open(&summary.aggregate).unwrap()).unwrap();
    let vm: Vec<_> = rows.iter().filter(|r| r.run == "vm").collect();
    assert_eq!(vm.len(), 16);
    for r in vm {
        let f = &per_epoch_f[r.epoch];
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        assert_eq!(r.seeds, 10);
        assert!((r.f_mean - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
    }
}

#[test]
fn report_compares_aggregates() {
    let dir = TempDir::new().unwrap();
    let cfg = parse_config(SMALL, Path::new("."), None).unwrap();
    let opts = ExperimentOptions {
        out: Some(dir.path().to_path_buf()),
        threads: Some(1),
        seed_offset: 0,
    };
    let summary = run_experiment(&cfg, &opts).unwrap();
    let copy = dir.path().join("again.csv");
    std::fs::copy(&summary.aggregate, &copy).unwrap();

    let text = compare_report(&[summary.aggregate.clone(), copy.clone()], 1e-2).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let vm_first = lines
        .iter()
        .find(|l| l.starts_with("aggregate:vm"))
        .unwrap();
    let vm_second = lines.iter().find(|l| l.starts_with("again:vm")).unwrap();
    assert!(!vm_first.contains("not reached"));
    assert_eq!(vm_second.split_whitespace().nth(3), Some("1.000"));
    let text = compare_report(&[summary.aggregate.clone(), copy], 1e-300).unwrap();
    assert_eq!(text.matches("not reached").count(), 4);
    assert!(compare_report(std::slice::from_ref(&summary.aggregate), 0.0).is_err());
}

#[test]
fn binary_runs_and_reports() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    std::fs::write(&cfg_path, SMALL.replace("seeds = 0..10", "seeds = 0..2")).unwrap();
    let out = dir.path().join("out");
    let bin = env!("CARGO_BIN_EXE_vmbcd");
    let status = Command::new(bin)
        .args([
            "run",
            cfg_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            "1",
        ])
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(String::from_utf8_lossy(&status.stdout).contains("wrote 4 trace files"));
    let report = Command::new(bin)
        .args([
            "report",
            out.join("aggregate.csv").to_str().unwrap(),
            "--target",
            "1e-2",
        ])
        .output()
        .unwrap();
    assert!(report.status.success());
    assert!(String::from_utf8_lossy(&report.stdout).contains("epoch_ratio"));

    std::fs::write(&cfg_path, SMALL.replacen("epochs = 15", "epochs = 0", 1)).unwrap();
    let failed = Command::new(bin)
        .args(["run", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).starts_with("error: line 17"));
}
