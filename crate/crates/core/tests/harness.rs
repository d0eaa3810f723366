mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::{random_graph, rng};
use ns4gc::diffmath::DenseMatrix;
use ns4gc::encoder::{init_params, EncoderConfig};
use ns4gc::graph::Graph;
use ns4gc::harness::{
    convert_tsv, load_bundle, load_checkpoint, run_experiment, save_checkpoint, write_bundle,
    ExperimentConfig, HarnessError,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ns4gc"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn corrupt_check(err: HarnessError) -> &'static str {
    match err {
        HarnessError::CorruptBundle { check, .. } => check,
        other => panic!("expected CorruptBundle, got {other}"),
    }
}

#[test]
fn tiny_bundle_loads() {
    let dir = tempfile::tempdir().unwrap();
    let g = Graph::new(DenseMatrix::identity(2), &[(0, 1)], Some(vec![0, 1])).unwrap();
    write_bundle(dir.path(), &g).unwrap();
    let back = load_bundle(dir.path()).unwrap();
    assert_eq!(back.adjacency().num_directed_edges(), 2);
    assert_eq!(back.features(), g.features());
    assert_eq!(back.labels(), Some(&[0, 1][..]));
}

#[test]
fn corrupt_bundles_name_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let g = Graph::new(DenseMatrix::identity(3), &[(0, 1), (1, 2)], Some(vec![0, 1, 1])).unwrap();
    write_bundle(dir.path(), &g).unwrap();

    let features = dir.path().join("features.bin");
    let bytes = fs::read(&features).unwrap();
    fs::write(&features, &bytes[..bytes.len() - 4]).unwrap();
    assert_eq!(corrupt_check(load_bundle(dir.path()).unwrap_err()), "features size");
    fs::write(&features, &bytes).unwrap();

    let edges = dir.path().join("edges.bin");
    let original = fs::read(&edges).unwrap();
    let mut looped = original.clone();
    looped[..8].copy_from_slice(&[1, 0, 0, 0, 1, 0, 0, 0]);
    fs::write(&edges, &looped).unwrap();
    assert_eq!(corrupt_check(load_bundle(dir.path()).unwrap_err()), "self-loop");

    let mut dup = original.clone();
    dup[8..].copy_from_slice(&original[..8]);
    fs::write(&edges, &dup).unwrap();
    assert_eq!(corrupt_check(load_bundle(dir.path()).unwrap_err()), "duplicate edge");

    let mut far = original.clone();
    far[4..8].copy_from_slice(&9u32.to_le_bytes());
    fs::write(&edges, &far).unwrap();
    assert_eq!(corrupt_check(load_bundle(dir.path()).unwrap_err()), "edge endpoint");
}

#[test]
fn convert_dedups_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(&p.join("e.tsv"), "0\t1\n1\t0\n0\t1\n2\t2\n1\t2\n");
    write(&p.join("f.tsv"), "0.5\t1\n-2\t0.25\n3\t0.1\n");
    write(&p.join("l.tsv"), "0\n1\n1\n");
    let out = p.join("bundle");
    let meta = convert_tsv(&p.join("e.tsv"), &p.join("f.tsv"), Some(&p.join("l.tsv")), &out).unwrap();
    assert_eq!(meta.edge_count_undirected, 2);
    assert_eq!(meta.num_classes, 2);
    let g = load_bundle(&out).unwrap();
    assert_eq!(g.adjacency().undirected_edges(), vec![(0, 1), (1, 2)]);
    let expected: Vec<f64> = [0.5f32, 1.0, -2.0, 0.25, 3.0, 0.1].iter().map(|&v| v as f64).collect();
    assert_eq!(g.features().data(), &expected[..]);
}

#[test]
fn convert_reports_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(&p.join("e.tsv"), "0\t1\n");
    write(&p.join("f.tsv"), "1\n2\n");
    write(&p.join("l.tsv"), "0\nx\n");
    let err = convert_tsv(&p.join("e.tsv"), &p.join("f.tsv"), Some(&p.join("l.tsv")), &p.join("b"))
        .unwrap_err();
    assert!(matches!(err, HarnessError::Parse { line: 2, .. }), "{err}");
}

#[test]
fn random_graph_round_trip() {
    let mut r = rng(4);
    let g = random_graph(&mut r, 30, 60, 7, 3);
    let g = Graph::new(
        g.features().map(|v| v as f32 as f64),
        &g.adjacency().undirected_edges(),
        g.labels().map(<[usize]>::to_vec),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path(), &g).unwrap();
    let back = load_bundle(dir.path()).unwrap();
    assert_eq!(back.adjacency(), g.adjacency());
    assert_eq!(back.features(), g.features());
    assert_eq!(back.labels(), g.labels());
}

#[test]
fn checkpoint_round_trip() {
    let cfg = EncoderConfig::new(vec![5, 2]).unwrap();
    let mut params = init_params(&cfg, 3, &mut rng(2)).unwrap();
    for w in &mut params.weights {
        *w = w.map(|v| v as f32 as f64);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&path, &params).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), params);
    fs::write(&path, b"garbage").unwrap();
    assert!(matches!(load_checkpoint(&path), Err(HarnessError::Checkpoint(_))));
}

#[test]
fn untrained_experiment_reports_finite_metrics() {
    let mut r = rng(6);
    let g = random_graph(&mut r, 40, 80, 6, 3);
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text("runs = 1\nepochs = 0\nhidden = 8-4").unwrap();
    let report = run_experiment(&g, &cfg).unwrap();
    assert_eq!(report.runs.len(), 1);
    let m = report.mean;
    assert!([m.acc, m.nmi, m.ari, m.f1].iter().all(|v| v.is_finite()));
    assert!(report.text_table().contains("mean±std"));
}

#[test]
fn experiment_requires_labels() {
    let g = Graph::new(DenseMatrix::identity(4), &[(0, 1), (2, 3)], None).unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text("runs = 1\nepochs = 0").unwrap();
    assert!(run_experiment(&g, &cfg).is_err());
}

#[test]
fn cli_gradcurve_peak() {
    let out = bin().args(["gradcurve", "--s", "0.5", "--tau", "0.1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .find(|r| r[0] == 0.5)
        .unwrap();
    assert!((row[1] - 2.5).abs() < 1e-12);
}

#[test]
fn cli_usage_errors_name_the_flag() {
    let out = bin().args(["gradcurve", "--s", "0.5"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--tau"));

    let out = bin().args(["gradcurve", "--s", "abc", "--tau", "0.1"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--s"));

    let dir = tempfile::tempdir().unwrap();
    let g = Graph::new(DenseMatrix::identity(3), &[(0, 1)], Some(vec![0, 1, 1])).unwrap();
    write_bundle(dir.path(), &g).unwrap();
    let out = bin()
        .args(["experiment", "--bundle"])
        .arg(dir.path())
        .args(["--lr", "fast"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--lr"));
}

#[test]
fn cli_train_eval_homophily() {
    let mut r = rng(8);
    let g = random_graph(&mut r, 30, 50, 5, 2);
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("b");
    write_bundle(&bundle, &g).unwrap();
    let ckpt = dir.path().join("m.ckpt");
    let status = bin()
        .args(["train", "--bundle"])
        .arg(&bundle)
        .arg("--out")
        .arg(&ckpt)
        .args(["--epochs", "3", "--hidden", "8-4"])
        .status()
        .unwrap();
    assert!(status.success());
    let tsv = fs::read_to_string(ckpt.with_extension("tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 4);

    let out = bin().args(["eval", "--bundle"]).arg(&bundle).arg("--checkpoint").arg(&ckpt).output().unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["acc", "nmi", "ari", "f1", "seed"] {
        assert!(json.get(key).is_some(), "{key}");
    }

    let out = bin().args(["nsm-compare", "--bundle"]).arg(&bundle).arg("--checkpoint").arg(&ckpt).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 7);

    let out = bin().args(["homophily", "--bundle"]).arg(&bundle).output().unwrap();
    let h: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    let expected = ns4gc::graph::node_homophily(&g).unwrap();
    assert!((h - expected).abs() < 1e-6);
}
