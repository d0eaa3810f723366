mod common;

use std::sync::Arc;

use common::{naive_matmul, random_edges, random_graph, random_matrix, rng};
use ns4gc::diffmath::{grad_check, DenseMatrix, MathError, Tape, Var};
use ns4gc::encoder::{forward, init_params, EncoderConfig};
use ns4gc::graph::{normalize_adjacency, Adjacency};
use ns4gc::objective::{loss_sparsity, total_loss, LossConfig, PairSets};
use ns4gc::rng::{keyed_rng, Purpose};
use ns4gc::sparse::CsrMatrix;
use rand::Rng;

const TRIALS: usize = 50;
const H: f64 = 1e-6;
const TOL: f64 = 1e-6;

/// Reduces any matrix output to a scalar through a fixed random projection:
/// `mean_diag(out · Cᵀ)`.
fn project(tape: &mut Tape, out: Var, c: &DenseMatrix) -> Result<Var, MathError> {
    let cv = tape.constant(c.clone());
    let p = tape.matmul_t(out, cv)?;
    tape.mean_diag(p)
}

fn check_op(
    name: &str,
    leaves: &[DenseMatrix],
    out_shape: (usize, usize),
    r: &mut impl Rng,
    op: impl Fn(&mut Tape, &[Var]) -> Result<Var, MathError>,
) {
    let c = random_matrix(r, out_shape.0, out_shape.1);
    let report = grad_check(
        |tape, vars| {
            let out = op(tape, vars)?;
            project(tape, out, &c)
        },
        leaves,
        H,
    )
    .unwrap();
    assert!(report.max_rel_error < TOL, "{name}: {report:?}");
}

fn dims(r: &mut impl Rng) -> (usize, usize, usize) {
    (r.random_range(1..=16), r.random_range(1..=16), r.random_range(1..=16))
}

#[test]
fn every_op_matches_finite_differences() {
    let mut r = rng(11);
    for _ in 0..TRIALS {
        let (m, k, n) = dims(&mut r);
        let a = random_matrix(&mut r, m, k);
        let b = random_matrix(&mut r, k, n);
        let bt = random_matrix(&mut r, n, k);
        let a2 = random_matrix(&mut r, m, k);

        check_op("matmul", &[a.clone(), b.clone()], (m, n), &mut r, |t, v| t.matmul(v[0], v[1]));
        check_op("matmul_t", &[a.clone(), bt.clone()], (m, n), &mut r, |t, v| {
            t.matmul_t(v[0], v[1])
        });
        check_op("relu", &[a.clone()], (m, k), &mut r, |t, v| Ok(t.relu(v[0])));
        check_op("sigmoid", &[a.clone()], (m, k), &mut r, |t, v| Ok(t.sigmoid(v[0])));
        check_op("row_l2_normalize", &[a.clone()], (m, k), &mut r, |t, v| {
            Ok(t.row_l2_normalize(v[0]))
        });
        check_op("add", &[a.clone(), a2.clone()], (m, k), &mut r, |t, v| t.add(v[0], v[1]));
        let c: f64 = r.random_range(-2.0..2.0);
        check_op("scale", &[a.clone()], (m, k), &mut r, |t, v| Ok(t.scale(v[0], c)));
        check_op("offset", &[a.clone()], (m, k), &mut r, |t, v| Ok(t.offset(v[0], c)));
        check_op("mean", &[a.clone()], (1, 1), &mut r, |t, v| t.mean(v[0]));

        let sq = random_matrix(&mut r, m, m);
        check_op("mean_diag", &[sq], (1, 1), &mut r, |t, v| t.mean_diag(v[0]));

        let sparse = Arc::new(CsrMatrix::from_dense(
            &random_matrix(&mut r, n, m).map(|x| if x.abs() < 0.5 { 0.0 } else { x }),
        ));
        check_op("spmm", &[a.clone()], (n, k), &mut r, |t, v| t.spmm(&sparse, v[0]));

        let count = r.random_range(1..=20);
        let pairs: Arc<[(usize, usize)]> = (0..count)
            .map(|_| (r.random_range(0..m), r.random_range(0..k)))
            .collect();
        check_op("gather_pairs", &[a.clone()], (count, 1), &mut r, |t, v| {
            t.gather_pairs(v[0], &pairs)
        });
        let rows_b = r.random_range(1..=16);
        let other = random_matrix(&mut r, rows_b, k);
        let dot_pairs: Arc<[(usize, usize)]> = (0..count)
            .map(|_| (r.random_range(0..m), r.random_range(0..rows_b)))
            .collect();
        check_op("pair_dots", &[a.clone(), other], (count, 1), &mut r, |t, v| {
            t.pair_dots(v[0], v[1], &dot_pairs)
        });
    }
}

#[test]
fn shared_input_accumulates_gradient() {
    let mut r = rng(3);
    let a = random_matrix(&mut r, 5, 4);
    check_op("a·aᵀ", &[a], (5, 5), &mut r, |t, v| t.matmul_t(v[0], v[0]));
}

#[test]
fn matmul_variants_match_schoolbook() {
    let mut r = rng(5);
    for _ in 0..TRIALS {
        let (m, k, n) = dims(&mut r);
        let a = random_matrix(&mut r, m, k);
        let b = random_matrix(&mut r, k, n);
        let expected = naive_matmul(&a, &b);
        assert!(a.matmul(&b).unwrap().max_abs_diff(&expected) < 1e-12);
        assert!(a.matmul_t(&b.transpose()).unwrap().max_abs_diff(&expected) < 1e-12);
        assert!(a.transpose().t_matmul(&b).unwrap().max_abs_diff(&expected) < 1e-12);
        let s = CsrMatrix::from_dense(&a);
        assert!(s.mul_dense(&b).max_abs_diff(&expected) < 1e-12);
        let at = CsrMatrix::from_dense(&a.transpose());
        assert!(at.transpose_mul_dense(&b).max_abs_diff(&expected) < 1e-12);
    }
}

#[test]
fn matmul_shape_mismatch() {
    let a = DenseMatrix::zeros(2, 3);
    assert!(matches!(a.matmul(&a), Err(MathError::ShapeMismatch { .. })));
}

#[test]
fn encoder_and_total_loss_gradient() {
    let mut r = rng(21);
    for trial in 0..5 {
        let g = random_graph(&mut r, 10, 14, 4, 3);
        let adj = normalize_adjacency(g.adjacency());
        let cfg = EncoderConfig::new(vec![6, 3]).unwrap();
        let params = init_params(&cfg, 4, &mut keyed_rng(trial, 0, 0, Purpose::Init)).unwrap();
        let pairs = PairSets::new(g.adjacency());
        let loss_cfg = LossConfig { s: 0.5, block_rows: 3, ..LossConfig::default() };
        let x = g.features().clone();
        let report = grad_check(
            |tape, w| {
                let z1 = forward(tape, w, &adj, &x)?;
                let z2 = forward(tape, w, &adj, &x.scaled(0.5))?;
                Ok::<_, ns4gc::objective::LossError>(total_loss(tape, z1, z2, &pairs, &loss_cfg)?.0)
            },
            &params.weights,
            1e-5,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }
}

/// Sparsity penalty composed from primitive tape ops over the dense n×n
/// similarity matrix.
fn dense_sparsity(
    tape: &mut Tape,
    z1: Var,
    z2: Var,
    adj: &Adjacency,
    s: f64,
    tau: f64,
) -> Result<Var, MathError> {
    let n = adj.num_nodes();
    let pairs: Arc<[(usize, usize)]> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && !adj.has_edge(i, j))
        .collect();
    let sim = tape.matmul_t(z1, z2)?;
    let shifted = tape.offset(sim, -s);
    let scaled = tape.scale(shifted, 1.0 / tau);
    let w = tape.sigmoid(scaled);
    let picked = tape.gather_pairs(w, &pairs)?;
    tape.mean(picked)
}

#[test]
fn blockwise_sparsity_matches_dense_composition() {
    let mut r = rng(8);
    let n = 50;
    let (adj, _) = Adjacency::from_undirected(n, &random_edges(&mut r, n, 120)).unwrap();
    let z1 = random_matrix(&mut r, n, 6).map(|v| v * 0.4);
    let z2 = random_matrix(&mut r, n, 6).map(|v| v * 0.4);

    let mut dense = Tape::new();
    let (d1, d2) = (dense.leaf(z1.clone()), dense.leaf(z2.clone()));
    let dl = dense_sparsity(&mut dense, d1, d2, &adj, 0.3, 0.1).unwrap();
    let dg = dense.backward(dl).unwrap();

    for block_rows in [1, 7, 64, n] {
        let cfg = LossConfig { s: 0.3, tau: 0.1, block_rows, ..LossConfig::default() };
        let mut tape = Tape::new();
        let (v1, v2) = (tape.leaf(z1.clone()), tape.leaf(z2.clone()));
        let l = loss_sparsity(&mut tape, v1, v2, &adj, &cfg).unwrap();
        let g = tape.backward(l).unwrap();
        let diff = (tape.value(l).data()[0] - dense.value(dl).data()[0]).abs();
        assert!(diff < 1e-10, "block {block_rows}: {diff}");
        assert!(g.wrt(v1).unwrap().max_abs_diff(dg.wrt(d1).unwrap()) < 1e-10);
        assert!(g.wrt(v2).unwrap().max_abs_diff(dg.wrt(d2).unwrap()) < 1e-10);
    }
}

#[test]
fn sparsity_with_shared_input() {
    let mut r = rng(9);
    let n = 12;
    let (adj, _) = Adjacency::from_undirected(n, &random_edges(&mut r, n, 15)).unwrap();
    let z = random_matrix(&mut r, n, 3);
    let cfg = LossConfig { s: 0.2, tau: 0.5, block_rows: 5, ..LossConfig::default() };
    let report = grad_check(
        |tape, v| {
            let zn = tape.row_l2_normalize(v[0]);
            loss_sparsity(tape, zn, zn, &adj, &cfg)
        },
        &[z],
        1e-6,
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}

#[test]
fn encoder_sparse_input_path_gradient() {
    let mut r = rng(22);
    let n = 9;
    // mostly-zero features push the first layer onto the CSR product
    let x = random_matrix(&mut r, n, 12).map(|v| if v.abs() > 0.8 { v } else { 0.0 });
    let (adj, _) = Adjacency::from_undirected(n, &random_edges(&mut r, n, 12)).unwrap();
    let norm = normalize_adjacency(&adj);
    let params = init_params(&EncoderConfig::new(vec![5, 3]).unwrap(), 12, &mut rng(1)).unwrap();
    let c = random_matrix(&mut r, n, 3);
    let report = grad_check(
        |tape, w| {
            let z = forward(tape, w, &norm, &x)?;
            project(tape, z, &c)
        },
        &params.weights,
        1e-6,
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}
