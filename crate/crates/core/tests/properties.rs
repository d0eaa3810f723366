mod common;

use std::sync::Arc;

use common::{random_graph, random_matrix, rng};
use ns4gc::clustering::{ari, clustering_accuracy, nmi};
use ns4gc::diffmath::{DenseMatrix, Tape};
use ns4gc::encoder::{embed, init_params, EncoderConfig};
use ns4gc::graph::{node_homophily, Graph};
use ns4gc::rng::{keyed_rng, Purpose};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn permuted(g: &Graph, perm: &[usize]) -> Graph {
    // node i of the original becomes node perm[i]
    let n = g.num_nodes();
    let mut inverse = vec![0; n];
    for (i, &p) in perm.iter().enumerate() {
        inverse[p] = i;
    }
    let x = g.features().select_rows(&inverse);
    let edges: Vec<(usize, usize)> = g
        .adjacency()
        .undirected_edges()
        .into_iter()
        .map(|(u, v)| (perm[u], perm[v]))
        .collect();
    let labels = g.labels().map(|l| inverse.iter().map(|&i| l[i]).collect());
    Graph::new(x, &edges, labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encoder_is_permutation_equivariant(seed in any::<u64>(), n in 2usize..=10) {
        let mut r = rng(seed);
        let m = (n * (n - 1) / 2).min(2 * n);
        let g = random_graph(&mut r, n, m, 4, 3);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let cfg = EncoderConfig::new(vec![5, 3]).unwrap();
        let params = init_params(&cfg, 4, &mut keyed_rng(seed, 0, 0, Purpose::Init)).unwrap();
        let z = embed(&params, &g).unwrap();
        let zp = embed(&params, &permuted(&g, &perm)).unwrap();
        for i in 0..n {
            for (a, b) in z.row(i).iter().zip(zp.row(perm[i])) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn encoder_rows_are_unit_or_zero(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 9, 12, 3, 2);
        let cfg = EncoderConfig::new(vec![4, 2]).unwrap();
        let params = init_params(&cfg, 3, &mut keyed_rng(seed, 1, 0, Purpose::Init)).unwrap();
        let z = embed(&params, &g).unwrap();
        for i in 0..z.rows() {
            let norm: f64 = z.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12 || norm == 0.0, "row {i} norm {norm}");
        }
    }

    #[test]
    fn homophily_invariant_under_relabeling(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 12, 18, 2, 3);
        let mut perm: Vec<usize> = (0..12).collect();
        perm.shuffle(&mut r);
        let mut class_map = vec![0usize, 1, 2];
        class_map.shuffle(&mut r);
        let moved = permuted(&g, &perm);
        let relabeled: Vec<usize> = moved.labels().unwrap().iter().map(|&l| class_map[l]).collect();
        let h2 = Graph::new(
            moved.features().clone(),
            &moved.adjacency().undirected_edges(),
            Some(relabeled),
        )
        .unwrap();
        let (a, b) = (node_homophily(&g), node_homophily(&h2));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn gather_gives_zero_gradient_elsewhere(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, 6, 5);
        let pairs: Arc<[(usize, usize)]> = Arc::from(vec![(0, 1), (3, 4), (0, 1)]);
        let mut tape = Tape::new();
        let v = tape.leaf(x);
        let g = tape.gather_pairs(v, &pairs).unwrap();
        let loss = tape.mean(g).unwrap();
        let grads = tape.backward(loss).unwrap();
        let d = grads.wrt(v).unwrap();
        for i in 0..6 {
            for j in 0..5 {
                let expected = match (i, j) {
                    (0, 1) => 2.0 / 3.0,
                    (3, 4) => 1.0 / 3.0,
                    _ => 0.0,
                };
                prop_assert!((d[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn metrics_are_relabel_invariant_and_symmetric(
        truth in proptest::collection::vec(0usize..4, 2..30),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let pred: Vec<usize> = truth.iter().map(|_| rand::Rng::random_range(&mut r, 0..4)).collect();
        let mut map = vec![7usize, 3, 11, 0];
        map.shuffle(&mut r);
        let renamed: Vec<usize> = pred.iter().map(|&p| map[p]).collect();
        prop_assert!((clustering_accuracy(&truth, &pred).unwrap()
            - clustering_accuracy(&truth, &renamed).unwrap()).abs() < 1e-15);
        prop_assert!((nmi(&truth, &pred).unwrap() - nmi(&pred, &truth).unwrap()).abs() < 1e-12);
        prop_assert!((ari(&truth, &truth).unwrap() - 1.0).abs() < 1e-15);
        let m = ns4gc::clustering::evaluate(&truth, &pred).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.acc));
        prop_assert!((0.0..=1.0).contains(&m.nmi));
        prop_assert!((0.0..=1.0).contains(&m.f1));
        prop_assert!((-1.0..=1.0).contains(&m.ari));
    }
}

#[test]
fn zero_features_give_zero_rows() {
    let g = Graph::new(DenseMatrix::zeros(3, 2), &[(0, 1), (1, 2)], None).unwrap();
    let params = init_params(&EncoderConfig::new(vec![2]).unwrap(), 2, &mut rng(1)).unwrap();
    assert_eq!(embed(&params, &g).unwrap(), DenseMatrix::zeros(3, 2));
}
