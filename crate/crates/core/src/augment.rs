//! Stochastic graph views: per-view edge dropping and feature masking.

use rand::Rng;

use crate::diffmath::DenseMatrix;
use crate::graph::{Adjacency, Graph};
use crate::rng::{keyed_rng, Purpose};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{name} = {value} is not a probability")]
pub struct InvalidProbability {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AugmentConfig {
    /// Edge drop probability of view 1.
    pub p_d1: f64,
    /// Edge drop probability of view 2.
    pub p_d2: f64,
    /// Feature-dimension mask probability of view 1.
    pub p_m1: f64,
    /// Feature-dimension mask probability of view 2.
    pub p_m2: f64,
    pub seed: u64,
}

impl AugmentConfig {
    pub fn identity(seed: u64) -> Self {
        Self {
            p_d1: 0.0,
            p_d2: 0.0,
            p_m1: 0.0,
            p_m2: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidProbability> {
        for (name, value) in [
            ("p_d1", self.p_d1),
            ("p_d2", self.p_d2),
            ("p_m1", self.p_m1),
            ("p_m2", self.p_m2),
        ] {
            check_probability(name, value)?;
        }
        Ok(())
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), InvalidProbability> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(InvalidProbability { name, value })
    }
}

/// A corrupted copy of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedView {
    pub adjacency: Adjacency,
    pub features: DenseMatrix,
    /// `false` for feature dimensions zeroed in this view.
    pub kept_dims: Vec<bool>,
}

/// Zeroes whole feature columns, each independently with probability `p_m`.
pub fn mask_features<R: Rng>(
    x: &DenseMatrix,
    p_m: f64,
    rng: &mut R,
) -> Result<(DenseMatrix, Vec<bool>), InvalidProbability> {
    check_probability("p_m", p_m)?;
    let kept: Vec<bool> = (0..x.cols()).map(|_| rng.random_bool(1.0 - p_m)).collect();
    let mut out = x.clone();
    if kept.iter().all(|&k| k) {
        return Ok((out, kept));
    }
    for i in 0..out.rows() {
        for (v, &k) in out.row_mut(i).iter_mut().zip(&kept) {
            if !k {
                *v = 0.0;
            }
        }
    }
    Ok((out, kept))
}

/// Keeps each undirected edge with probability `1 - p_d`, dropping both
/// directions together.
pub fn drop_edges<R: Rng>(
    a: &Adjacency,
    p_d: f64,
    rng: &mut R,
) -> Result<Adjacency, InvalidProbability> {
    check_probability("p_d", p_d)?;
    Ok(a.retain_undirected(|_, _| rng.random_bool(1.0 - p_d)))
}

fn sample_view(g: &Graph, p_d: f64, p_m: f64, seed: u64, epoch: u64, view: u64) -> AugmentedView {
    let mut edge_rng = keyed_rng(seed, epoch, view, Purpose::EdgeDrop);
    let mut mask_rng = keyed_rng(seed, epoch, view, Purpose::FeatureMask);
    let adjacency = drop_edges(g.adjacency(), p_d, &mut edge_rng).expect("validated");
    let (features, kept_dims) = mask_features(g.features(), p_m, &mut mask_rng).expect("validated");
    AugmentedView {
        adjacency,
        features,
        kept_dims,
    }
}

/// Draws the two views for `epoch`. The result depends only on
/// `(cfg, epoch)`, and each view has its own random streams.
pub fn sample_views(
    g: &Graph,
    cfg: &AugmentConfig,
    epoch: u64,
) -> Result<(AugmentedView, AugmentedView), InvalidProbability> {
    cfg.validate()?;
    Ok((
        sample_view(g, cfg.p_d1, cfg.p_m1, cfg.seed, epoch, 0),
        sample_view(g, cfg.p_d2, cfg.p_m2, cfg.seed, epoch, 1),
    ))
}
