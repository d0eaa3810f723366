//! The training objective: self-alignment, node-neighbor alignment and the
//! sigmoid sparsity penalty over disconnected pairs of the cross-view cosine
//! matrix `S = Z¹ Z²ᵀ`.
//!
//! All three terms are means. The sparsity term is evaluated in row blocks of
//! `S`, so peak memory is `O(n · block_rows)` rather than `O(n²)`.

use std::sync::Arc;

use crate::diffmath::{gemm_into, sigmoid, DenseMatrix, MathError, Tape, Var};
use crate::graph::Adjacency;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("invalid loss config: {0}")]
    InvalidConfig(String),
    #[error("graph has no edges for the neighbor alignment term")]
    EmptyEdgeSet,
    #[error("graph has no disconnected node pairs for the sparsity term")]
    NoDisconnectedPairs,
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossConfig {
    /// Split cosine similarity in `[0, 1]`.
    pub s: f64,
    /// Sigmoid temperature, `> 0`.
    pub tau: f64,
    /// Weight of the neighbor alignment term.
    pub lambda: f64,
    /// Weight of the sparsity term.
    pub gamma: f64,
    pub block_rows: usize,
    /// Includes the self-alignment term. Turning it off is only meaningful
    /// for ablations.
    pub self_alignment: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            s: 0.6,
            tau: 0.1,
            lambda: 1.0,
            gamma: 1.0,
            block_rows: 2048,
            self_alignment: true,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.tau > 0.0) {
            return Err(LossError::InvalidConfig(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.s) {
            return Err(LossError::InvalidConfig(format!("s must be in [0, 1], got {}", self.s)));
        }
        if !(self.lambda >= 0.0 && self.gamma >= 0.0) {
            return Err(LossError::InvalidConfig("lambda and gamma must be >= 0".into()));
        }
        if self.block_rows == 0 {
            return Err(LossError::InvalidConfig("block_rows must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossBreakdown {
    pub l_ali: f64,
    pub l_nei: f64,
    pub l_spa: f64,
    pub total: f64,
}

/// Pair sets of the original graph, built once before training.
#[derive(Clone, Debug)]
pub struct PairSets {
    adjacency: Arc<Adjacency>,
    edges: Arc<[(usize, usize)]>,
}

impl PairSets {
    pub fn new(adjacency: &Adjacency) -> Self {
        Self {
            edges: adjacency.directed_edges().into(),
            adjacency: Arc::new(adjacency.clone()),
        }
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    /// Directed entries `(i, j)` with `A_ij = 1`.
    pub fn edges(&self) -> &Arc<[(usize, usize)]> {
        &self.edges
    }

    /// `n² - n - |directed edges|`.
    pub fn disconnected_count(&self) -> usize {
        disconnected_count(&self.adjacency)
    }
}

fn disconnected_count(adj: &Adjacency) -> usize {
    let n = adj.num_nodes();
    n * n - n - adj.num_directed_edges()
}

fn check_same_shape(tape: &Tape, z1: Var, z2: Var) -> Result<(), LossError> {
    let (a, b) = (tape.shape(z1), tape.shape(z2));
    if a != b {
        return Err(MathError::ShapeMismatch {
            op: "loss",
            left: a,
            right: b,
        }
        .into());
    }
    Ok(())
}

/// `-mean_i ⟨z1_i, z2_i⟩`.
pub fn loss_self_alignment(tape: &mut Tape, z1: Var, z2: Var) -> Result<Var, LossError> {
    check_same_shape(tape, z1, z2)?;
    let n = tape.shape(z1).0;
    let diag: Arc<[(usize, usize)]> = (0..n).map(|i| (i, i)).collect();
    let dots = tape.pair_dots(z1, z2, &diag)?;
    let m = tape.mean(dots)?;
    Ok(tape.scale(m, -1.0))
}

/// `-mean_{(i,j) ∈ edges} ⟨z1_i, z2_j⟩` over directed entries.
pub fn loss_neighbor_alignment(
    tape: &mut Tape,
    z1: Var,
    z2: Var,
    edges: &Arc<[(usize, usize)]>,
) -> Result<Var, LossError> {
    check_same_shape(tape, z1, z2)?;
    if edges.is_empty() {
        return Err(LossError::EmptyEdgeSet);
    }
    let dots = tape.pair_dots(z1, z2, edges)?;
    let m = tape.mean(dots)?;
    Ok(tape.scale(m, -1.0))
}

/// Mean of `sigmoid((S_ij - s) / tau)` over pairs with `i != j` and
/// `A_ij = 0`, plus its gradients with respect to `z1` and `z2` when
/// requested.
fn sparsity_blockwise(
    z1: &DenseMatrix,
    z2: &DenseMatrix,
    adj: &Adjacency,
    cfg: &LossConfig,
    want_grad: bool,
) -> Result<(f64, Option<(DenseMatrix, DenseMatrix)>), LossError> {
    let n = z1.rows();
    if adj.num_nodes() != n || z2.rows() != n {
        return Err(MathError::ShapeMismatch {
            op: "loss_sparsity",
            left: z1.shape(),
            right: (adj.num_nodes(), z2.rows()),
        }
        .into());
    }
    let count = disconnected_count(adj);
    if count == 0 {
        return Err(LossError::NoDisconnectedPairs);
    }
    let inv_tau = 1.0 / cfg.tau;
    let grad_scale = inv_tau / count as f64;
    let block = cfg.block_rows.min(n).max(1);

    let mut grads = want_grad.then(|| {
        (
            DenseMatrix::zeros(n, z1.cols()),
            DenseMatrix::zeros(n, z2.cols()),
        )
    });
    let mut sum = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + block).min(n);
        let rows = end - start;
        let zb = z1.rows_range(start, end);
        let mut sb = DenseMatrix::zeros(rows, n);
        gemm_into(&mut sb, 0.0, &zb, false, z2, true);

        for r in 0..rows {
            let i = start + r;
            let mut nbrs = adj.neighbors(i).iter().peekable();
            for (j, v) in sb.row_mut(r).iter_mut().enumerate() {
                let excluded = j == i || nbrs.next_if_eq(&&j).is_some();
                if excluded {
                    *v = 0.0;
                    continue;
                }
                let y = sigmoid((*v - cfg.s) * inv_tau);
                sum += y;
                *v = y * (1.0 - y) * grad_scale;
            }
        }

        if let Some((d1, d2)) = grads.as_mut() {
            let mut d1b = DenseMatrix::zeros(rows, z2.cols());
            gemm_into(&mut d1b, 0.0, &sb, false, z2, false);
            for r in 0..rows {
                d1.row_mut(start + r).copy_from_slice(d1b.row(r));
            }
            gemm_into(d2, 1.0, &sb, true, &zb, false);
        }
        start = end;
    }
    Ok((sum / count as f64, grads))
}

/// Sparsity penalty as a tape node.
pub fn loss_sparsity(
    tape: &mut Tape,
    z1: Var,
    z2: Var,
    adjacency: &Adjacency,
    cfg: &LossConfig,
) -> Result<Var, LossError> {
    cfg.validate()?;
    check_same_shape(tape, z1, z2)?;
    let want_grad = tape.requires_grad(z1) || tape.requires_grad(z2);
    let (value, grads) =
        sparsity_blockwise(tape.value(z1), tape.value(z2), adjacency, cfg, want_grad)?;
    let partials = match grads {
        Some((d1, d2)) if z1 == z2 => {
            let mut d = d1;
            d.add_scaled(&d2, 1.0);
            vec![(z1, d)]
        }
        Some((d1, d2)) => vec![(z1, d1), (z2, d2)],
        None => Vec::new(),
    };
    Ok(tape.custom_scalar(value, partials)?)
}

/// Value of the sparsity penalty without recording anything.
pub fn sparsity_value(
    z1: &DenseMatrix,
    z2: &DenseMatrix,
    adjacency: &Adjacency,
    cfg: &LossConfig,
) -> Result<f64, LossError> {
    cfg.validate()?;
    Ok(sparsity_blockwise(z1, z2, adjacency, cfg, false)?.0)
}

/// Builds `l_ali + λ·l_nei + γ·l_spa` on the tape. Terms with zero weight are
/// still evaluated for the breakdown but contribute no gradient.
pub fn total_loss(
    tape: &mut Tape,
    z1: Var,
    z2: Var,
    pairs: &PairSets,
    cfg: &LossConfig,
) -> Result<(Var, LossBreakdown), LossError> {
    cfg.validate()?;
    let ali = loss_self_alignment(tape, z1, z2)?;
    let nei = loss_neighbor_alignment(tape, z1, z2, pairs.edges())?;
    let l_ali = tape.value(ali).data()[0];
    let l_nei = tape.value(nei).data()[0];

    let mut terms = Vec::new();
    if cfg.self_alignment {
        terms.push(ali);
    }
    if cfg.lambda != 0.0 {
        terms.push(tape.scale(nei, cfg.lambda));
    }
    let l_spa = if cfg.gamma != 0.0 {
        let spa = loss_sparsity(tape, z1, z2, pairs.adjacency(), cfg)?;
        terms.push(tape.scale(spa, cfg.gamma));
        tape.value(spa).data()[0]
    } else {
        sparsity_value(tape.value(z1), tape.value(z2), pairs.adjacency(), cfg)?
    };

    let mut total = match terms.first() {
        Some(&t) => t,
        None => tape.constant(DenseMatrix::scalar(0.0)),
    };
    for &t in terms.iter().skip(1) {
        total = tape.add(total, t)?;
    }
    let breakdown = LossBreakdown {
        l_ali,
        l_nei,
        l_spa,
        total: tape.value(total).data()[0],
    };
    Ok((total, breakdown))
}

/// `|∂ sigmoid((S - s)/τ) / ∂S| = (1/τ) / (e^u + 2 + e^{-u})` with
/// `u = (S - s)/τ`, the per-pair weight of the summed penalty.
pub fn sparsity_gradient_magnitude(s: f64, tau: f64, similarity: f64) -> f64 {
    let u = (similarity - s) / tau;
    (1.0 / tau) / (u.exp() + 2.0 + (-u).exp())
}

/// `(S, magnitude)` rows over `grid`.
pub fn sparsity_gradient_curve(s: f64, tau: f64, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter()
        .map(|&x| (x, sparsity_gradient_magnitude(s, tau, x)))
        .collect()
}

/// `points` evenly spaced values covering `[-1, 1]`.
pub fn similarity_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
            .collect(),
    }
}
