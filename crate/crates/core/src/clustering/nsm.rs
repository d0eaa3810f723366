//! Scores how well `Z Zᵀ` reproduces the ideal same-class indicator matrix.

use super::ClusterError;
use crate::diffmath::{gemm_into, sigmoid, DenseMatrix, NORM_EPSILON};

/// Split values scanned by [`nsm_compare`] by default.
pub const SPLIT_GRID: [f64; 5] = [0.6, 0.7, 0.8, 0.9, 0.95];

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NsmRow {
    pub s: f64,
    /// Mean |σ((S − s)/τ) − N| over all n² entries.
    pub mae: f64,
    /// Fraction of entries where `S ≥ s` agrees with N.
    pub acc: f64,
}

fn normalized(z: &DenseMatrix) -> DenseMatrix {
    let mut out = z.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let inv = 1.0 / norm.max(NORM_EPSILON);
        row.iter_mut().for_each(|v| *v *= inv);
    }
    out
}

/// Soft MAE and binary accuracy for every split in `splits`, in one blockwise
/// pass over `S = Z Zᵀ`. Memory is O(n · block_rows).
pub fn nsm_compare(
    z: &DenseMatrix,
    labels: &[usize],
    splits: &[f64],
    tau: f64,
    block_rows: usize,
) -> Result<Vec<NsmRow>, ClusterError> {
    let n = z.rows();
    if labels.len() != n {
        return Err(ClusterError::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    if !(tau > 0.0) {
        return Err(ClusterError::InvalidConfig(format!("tau must be positive, got {tau}")));
    }
    let zn = normalized(z);
    let block = block_rows.clamp(1, n.max(1));
    let mut abs_err = vec![0.0; splits.len()];
    let mut correct = vec![0u64; splits.len()];
    let mut start = 0;
    while start < n {
        let end = (start + block).min(n);
        let zb = zn.rows_range(start, end);
        let mut sb = DenseMatrix::zeros(end - start, n);
        gemm_into(&mut sb, 0.0, &zb, false, &zn, true);
        for r in 0..end - start {
            let li = labels[start + r];
            let mut row_err = vec![0.0; splits.len()];
            for (j, &sij) in sb.row(r).iter().enumerate() {
                let same = labels[j] == li;
                for (k, &s) in splits.iter().enumerate() {
                    let w = sigmoid((sij - s) / tau);
                    row_err[k] += if same { 1.0 - w } else { w };
                    if (sij >= s) == same {
                        correct[k] += 1;
                    }
                }
            }
            for (acc, e) in abs_err.iter_mut().zip(row_err) {
                *acc += e;
            }
        }
        start = end;
    }
    let total = (n * n).max(1) as f64;
    Ok(splits
        .iter()
        .enumerate()
        .map(|(k, &s)| NsmRow {
            s,
            mae: abs_err[k] / total,
            acc: correct[k] as f64 / total,
        })
        .collect())
}

pub fn nsm_compare_soft(
    z: &DenseMatrix,
    labels: &[usize],
    s: f64,
    tau: f64,
    block_rows: usize,
) -> Result<f64, ClusterError> {
    Ok(nsm_compare(z, labels, &[s], tau, block_rows)?[0].mae)
}

pub fn nsm_compare_binary(
    z: &DenseMatrix,
    labels: &[usize],
    s: f64,
    block_rows: usize,
) -> Result<f64, ClusterError> {
    Ok(nsm_compare(z, labels, &[s], 1.0, block_rows)?[0].acc)
}

/// Rows with the lowest MAE and the highest accuracy; earlier rows win ties.
pub fn best_split(rows: &[NsmRow]) -> Option<(NsmRow, NsmRow)> {
    let first = *rows.first()?;
    let mut best_mae = first;
    let mut best_acc = first;
    for r in &rows[1..] {
        if r.mae < best_mae.mae {
            best_mae = *r;
        }
        if r.acc > best_acc.acc {
            best_acc = *r;
        }
    }
    Some((best_mae, best_acc))
}

/// Mean cosine over ordered pairs `i ≠ j`; close to 1 when representations
/// have collapsed onto one direction.
pub fn mean_pairwise_cosine(z: &DenseMatrix) -> f64 {
    let n = z.rows();
    if n < 2 {
        return 1.0;
    }
    let zn = normalized(z);
    let mut total = vec![0.0; zn.cols()];
    let mut self_sum = 0.0;
    for i in 0..n {
        let row = zn.row(i);
        self_sum += row.iter().map(|v| v * v).sum::<f64>();
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
    }
    let sq: f64 = total.iter().map(|v| v * v).sum();
    (sq - self_sum) / (n * (n - 1)) as f64
}
