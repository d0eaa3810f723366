use rand::Rng;

use super::ClusterError;
use crate::diffmath::DenseMatrix;
use crate::rng::{keyed_rng, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    /// Lloyd iterations stop once the summed squared centroid shift is at
    /// most this.
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            n_init: 10,
            max_iter: 300,
            tol: 1e-4,
            seed,
        }
    }

    fn validate(&self) -> Result<(), ClusterError> {
        if self.k == 0 || self.n_init == 0 {
            return Err(ClusterError::InvalidConfig(
                "k and n_init must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: DenseMatrix,
    /// Sum of squared distances from each point to its centroid.
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lower
/// index.
fn nearest(point: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp<R: Rng>(z: &DenseMatrix, k: usize, rng: &mut R) -> DenseMatrix {
    let n = z.rows();
    let mut centroids = DenseMatrix::zeros(k, z.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(z.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), z.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(z.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(z.row(i), z.row(pick)));
        }
    }
    centroids
}

/// One k-means++ seeded Lloyd run. Also returns the inertia measured after
/// every assignment step, which never increases.
pub fn kmeans_single<R: Rng>(
    z: &DenseMatrix,
    k: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut R,
) -> Result<(ClusteringResult, Vec<f64>), ClusterError> {
    let n = z.rows();
    if k == 0 {
        return Err(ClusterError::InvalidConfig("k must be at least 1".into()));
    }
    if n < k {
        return Err(ClusterError::TooFewPoints { points: n, k });
    }
    let d = z.cols();
    let mut centroids = kmeans_pp(z, k, rng);
    let mut assignments = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut trace = Vec::new();

    let assign = |centroids: &DenseMatrix, assignments: &mut [usize], dists: &mut [f64]| {
        let mut inertia = 0.0;
        for i in 0..n {
            let (c, dist) = nearest(z.row(i), centroids);
            assignments[i] = c;
            dists[i] = dist;
            inertia += dist;
        }
        inertia
    };

    for _ in 0..max_iter {
        trace.push(assign(&centroids, &mut assignments, &mut dists));

        let mut sums = DenseMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            counts[c] += 1;
            for (s, &x) in sums.row_mut(c).iter_mut().zip(z.row(i)) {
                *s += x;
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                sums.row_mut(c).iter_mut().for_each(|v| *v *= inv);
            } else {
                // empty cluster: move it onto the point worst served so far
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None::<usize>, |best, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("n >= k");
                taken[far] = true;
                dists[far] = 0.0;
                sums.row_mut(c).copy_from_slice(z.row(far));
            }
        }
        let shift: f64 = (0..k).map(|c| sq_dist(sums.row(c), centroids.row(c))).sum();
        centroids = sums;
        if shift <= tol {
            break;
        }
    }
    let inertia = assign(&centroids, &mut assignments, &mut dists);
    trace.push(inertia);
    Ok((
        ClusteringResult {
            assignments,
            centroids,
            inertia,
        },
        trace,
    ))
}

/// Best of `n_init` restarts by inertia; the earliest restart wins ties.
pub fn kmeans(z: &DenseMatrix, cfg: &KMeansConfig) -> Result<ClusteringResult, ClusterError> {
    cfg.validate()?;
    let mut best: Option<ClusteringResult> = None;
    for restart in 0..cfg.n_init {
        let mut rng = keyed_rng(cfg.seed, restart as u64, 0, Purpose::KMeans);
        let (result, _) = kmeans_single(z, cfg.k, cfg.max_iter, cfg.tol, &mut rng)?;
        if best.as_ref().is_none_or(|b| result.inertia < b.inertia) {
            best = Some(result);
        }
    }
    Ok(best.expect("n_init >= 1"))
}
