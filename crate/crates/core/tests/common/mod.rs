#![allow(dead_code)]

use ns4gc::diffmath::DenseMatrix;
use ns4gc::graph::Graph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

/// `m` distinct undirected edges on `n` nodes, no self-loops.
pub fn random_edges(rng: &mut impl Rng, n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    all.shuffle(rng);
    all.truncate(m);
    all
}

pub fn random_graph(rng: &mut impl Rng, n: usize, m: usize, p: usize, k: usize) -> Graph {
    let x = random_matrix(rng, n, p);
    let edges = random_edges(rng, n, m);
    let labels = (0..n).map(|_| rng.random_range(0..k)).collect();
    Graph::new(x, &edges, Some(labels)).unwrap()
}

/// Schoolbook product, the reference for every optimized matmul.
pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for t in 0..a.cols() {
                acc += a[(i, t)] * b[(t, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best matched fraction over every injective relabeling of predictions.
pub fn brute_acc(truth: &[usize], pred: &[usize], k: usize) -> f64 {
    permutations(k)
        .iter()
        .map(|perm| {
            truth.iter().zip(pred).filter(|(t, p)| perm[**p] == **t).count() as f64
                / truth.len() as f64
        })
        .fold(0.0, f64::max)
}

pub fn brute_nmi(u: &[usize], v: &[usize]) -> f64 {
    let n = u.len() as f64;
    let p = |f: &dyn Fn(usize) -> bool| (0..u.len()).filter(|&i| f(i)).count() as f64 / n;
    let (mut hu, mut hv, mut mi) = (0.0, 0.0, 0.0);
    for a in 0..8 {
        let pa = p(&|i| u[i] == a);
        if pa > 0.0 {
            hu -= pa * pa.ln();
        }
        let pb = p(&|i| v[i] == a);
        if pb > 0.0 {
            hv -= pb * pb.ln();
        }
        for b in 0..8 {
            let pab = p(&|i| u[i] == a && v[i] == b);
            if pab > 0.0 {
                let pb = p(&|i| v[i] == b);
                mi += pab * (pab / (pa * pb)).ln();
            }
        }
    }
    if hu == 0.0 && hv == 0.0 {
        return 1.0;
    }
    mi / ((hu + hv) / 2.0)
}

/// Adjusted Rand index straight from its pair-agreement definition.
pub fn brute_ari(u: &[usize], v: &[usize]) -> f64 {
    let n = u.len();
    let (mut both, mut in_u, mut in_v, mut pairs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1.0;
            let su = u[i] == u[j];
            let sv = v[i] == v[j];
            in_u += su as u8 as f64;
            in_v += sv as u8 as f64;
            both += (su && sv) as u8 as f64;
        }
    }
    let expected = in_u * in_v / pairs;
    let max = (in_u + in_v) / 2.0;
    if max == expected {
        1.0
    } else {
        (both - expected) / (max - expected)
    }
}

/// Three isotropic blobs with σ = 0.05 around unit-separated centers.
pub fn blobs(seed: u64, per_blob: usize) -> (DenseMatrix, Vec<usize>) {
    let centers = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.75f64.sqrt()]];
    let mut r = rng(seed);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            for &mu in center {
                // Box-Muller
                let (u1, u2): (f64, f64) = (r.random::<f64>().max(1e-300), r.random());
                data.push(mu + 0.05 * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos());
            }
            labels.push(c);
        }
    }
    (DenseMatrix::from_vec(3 * per_blob, 2, data).unwrap(), labels)
}

