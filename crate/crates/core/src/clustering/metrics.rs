use super::hungarian::max_weight_assignment;
use super::ClusterError;

/// Clustering quality of one prediction against ground truth.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricBundle {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
}

/// Contingency counts with rows = true classes and columns = predicted
/// clusters, both relabeled densely in sorted order.
struct Contingency {
    counts: Vec<Vec<f64>>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    n: f64,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut uniq = labels.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let ids = labels
        .iter()
        .map(|l| uniq.binary_search(l).expect("present"))
        .collect();
    (ids, uniq.len())
}

impl Contingency {
    fn new(truth: &[usize], pred: &[usize]) -> Result<Self, ClusterError> {
        if truth.len() != pred.len() {
            return Err(ClusterError::LengthMismatch {
                left: truth.len(),
                right: pred.len(),
            });
        }
        let (t, kt) = dense_ids(truth);
        let (p, kp) = dense_ids(pred);
        let mut counts = vec![vec![0.0; kp]; kt];
        for (&a, &b) in t.iter().zip(&p) {
            counts[a][b] += 1.0;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..kp).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            n: truth.len() as f64,
        })
    }

    /// For each true class, the predicted cluster mapped onto it, if any.
    fn hungarian_mapping(&self) -> Vec<Option<usize>> {
        let kt = self.row_sums.len();
        let kp = self.col_sums.len();
        let size = kt.max(kp);
        // square matrix indexed [cluster][class]; padding rows/cols weigh 0
        let mut w = vec![vec![0.0; size]; size];
        for (class, row) in self.counts.iter().enumerate() {
            for (cluster, &c) in row.iter().enumerate() {
                w[cluster][class] = c;
            }
        }
        let assignment = max_weight_assignment(&w);
        let mut cluster_of_class = vec![None; kt];
        for (cluster, &class) in assignment.iter().enumerate() {
            if cluster < kp && class < kt {
                cluster_of_class[class] = Some(cluster);
            }
        }
        cluster_of_class
    }
}

fn entropy(sums: &[f64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.ln()
        })
        .sum()
}

/// Fraction of nodes matched under the best one-to-one cluster-to-class
/// mapping.
pub fn clustering_accuracy(truth: &[usize], pred: &[usize]) -> Result<f64, ClusterError> {
    let c = Contingency::new(truth, pred)?;
    if truth.is_empty() {
        return Ok(1.0);
    }
    let matched: f64 = c
        .hungarian_mapping()
        .iter()
        .enumerate()
        .filter_map(|(class, m)| m.map(|cluster| c.counts[class][cluster]))
        .sum();
    Ok(matched / c.n)
}

/// Mutual information normalized by the arithmetic mean of both entropies.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64, ClusterError> {
    let c = Contingency::new(truth, pred)?;
    let hu = entropy(&c.row_sums, c.n);
    let hv = entropy(&c.col_sums, c.n);
    if hu == 0.0 && hv == 0.0 {
        // both partitions are a single block, hence identical
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in c.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0.0 {
                mi += nij / c.n * (c.n * nij / (c.row_sums[i] * c.col_sums[j])).ln();
            }
        }
    }
    Ok((mi / ((hu + hv) / 2.0)).clamp(0.0, 1.0))
}

/// Adjusted Rand index by pair counting, evaluated in exact integer
/// arithmetic up to the final division. Returns 1.0 when the index is
/// undefined (both partitions trivial in the same way).
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64, ClusterError> {
    let c = Contingency::new(truth, pred)?;
    let choose2 = |x: f64| {
        let x = x as i128;
        x * (x - 1) / 2
    };
    let pairs = choose2(c.n);
    let index: i128 = c.counts.iter().flatten().map(|&x| choose2(x)).sum();
    let a: i128 = c.row_sums.iter().map(|&x| choose2(x)).sum();
    let b: i128 = c.col_sums.iter().map(|&x| choose2(x)).sum();
    // (index - a·b/pairs) / ((a + b)/2 - a·b/pairs), scaled by 2·pairs
    let num = 2 * (index * pairs - a * b);
    let den = (a + b) * pairs - 2 * a * b;
    if pairs == 0 || den == 0 {
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

/// Macro-averaged F1 over true classes after the Hungarian mapping. A class
/// left without a cluster scores 0.
pub fn macro_f1_mapped(truth: &[usize], pred: &[usize]) -> Result<f64, ClusterError> {
    let c = Contingency::new(truth, pred)?;
    let kt = c.row_sums.len();
    if kt == 0 {
        return Ok(1.0);
    }
    let total: f64 = c
        .hungarian_mapping()
        .iter()
        .enumerate()
        .map(|(class, m)| match m {
            Some(cluster) => {
                let tp = c.counts[class][*cluster];
                let denom = c.row_sums[class] + c.col_sums[*cluster];
                if denom > 0.0 {
                    2.0 * tp / denom
                } else {
                    0.0
                }
            }
            None => 0.0,
        })
        .sum();
    Ok(total / kt as f64)
}

pub fn evaluate(truth: &[usize], pred: &[usize]) -> Result<MetricBundle, ClusterError> {
    Ok(MetricBundle {
        acc: clustering_accuracy(truth, pred)?,
        nmi: nmi(truth, pred)?,
        ari: ari(truth, pred)?,
        f1: macro_f1_mapped(truth, pred)?,
    })
}
