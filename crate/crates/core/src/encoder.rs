//! Shared GCN encoder producing unit-norm node representations.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::diffmath::{DenseMatrix, MathError, Tape, Var};
use crate::graph::{normalize_adjacency, Graph, NormalizedAdjacency};
use crate::sparse::CsrMatrix;

/// Inputs sparser than this go through the sparse first-layer product.
const SPARSE_INPUT_DENSITY: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncoderError {
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Output widths of the stacked layers, e.g. `[256, 64]`. ReLU follows every
/// layer except the last.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EncoderConfig {
    pub layer_dims: Vec<usize>,
}

impl EncoderConfig {
    pub fn new(layer_dims: Vec<usize>) -> Result<Self, EncoderError> {
        let cfg = Self { layer_dims };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.layer_dims.is_empty() {
            return Err(EncoderError::InvalidConfig("at least one layer required".into()));
        }
        if self.layer_dims.contains(&0) {
            return Err(EncoderError::InvalidConfig("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap_or(&0)
    }
}

/// Parses the `256-64` notation.
impl FromStr for EncoderConfig {
    type Err = EncoderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dims = s
            .split('-')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| EncoderError::InvalidConfig(format!("bad layer width {p:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dims)
    }
}

impl fmt::Display for EncoderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layer_dims.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// Per-layer weight matrices, `in_dim × out_dim`. No biases.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub weights: Vec<DenseMatrix>,
}

impl EncoderParams {
    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, |w| w.rows())
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().map_or(0, |w| w.cols())
    }

    /// Checks that shapes chain from `num_features` and entries are finite.
    pub fn validate(&self, num_features: usize) -> Result<(), EncoderError> {
        let mut width = num_features;
        for (l, w) in self.weights.iter().enumerate() {
            if w.rows() != width {
                return Err(EncoderError::InvalidConfig(format!(
                    "layer {l} expects {} inputs, previous width is {width}",
                    w.rows()
                )));
            }
            if !w.is_finite() {
                return Err(EncoderError::InvalidConfig(format!("layer {l} has non-finite weights")));
            }
            width = w.cols();
        }
        if self.weights.is_empty() {
            return Err(EncoderError::InvalidConfig("no layers".into()));
        }
        Ok(())
    }

    /// Records every weight matrix as a differentiable leaf.
    pub fn register(&self, tape: &mut Tape) -> Vec<Var> {
        self.weights.iter().map(|w| tape.leaf(w.clone())).collect()
    }
}

/// Glorot-uniform initialization: entries uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn init_params<R: Rng>(
    cfg: &EncoderConfig,
    num_features: usize,
    rng: &mut R,
) -> Result<EncoderParams, EncoderError> {
    cfg.validate()?;
    let mut fan_in = num_features;
    let mut weights = Vec::with_capacity(cfg.layer_dims.len());
    for &fan_out in &cfg.layer_dims {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * bound)
            .collect();
        weights.push(DenseMatrix::from_vec(fan_in, fan_out, data)?);
        fan_in = fan_out;
    }
    Ok(EncoderParams { weights })
}

/// Runs the encoder on `(adj, x)` and returns the row-normalized output.
///
/// Each layer computes `Â · (Z · Θ)`; ReLU is applied between layers.
pub fn forward(
    tape: &mut Tape,
    weights: &[Var],
    adj: &NormalizedAdjacency,
    x: &DenseMatrix,
) -> Result<Var, MathError> {
    let (first, rest) = weights.split_first().ok_or(MathError::ShapeMismatch {
        op: "encoder",
        left: x.shape(),
        right: (0, 0),
    })?;
    let nonzeros = x.data().iter().filter(|v| **v != 0.0).count();
    let mut h = if (nonzeros as f64) < SPARSE_INPUT_DENSITY * x.len() as f64 {
        let xs = Arc::new(CsrMatrix::from_dense(x));
        tape.spmm(&xs, *first)?
    } else {
        let xc = tape.constant(x.clone());
        tape.matmul(xc, *first)?
    };
    h = tape.spmm(adj.matrix(), h)?;
    for w in rest {
        h = tape.relu(h);
        let hw = tape.matmul(h, *w)?;
        h = tape.spmm(adj.matrix(), hw)?;
    }
    Ok(tape.row_l2_normalize(h))
}

/// Unit-norm representations of the unaugmented graph.
pub fn embed(params: &EncoderParams, g: &Graph) -> Result<DenseMatrix, EncoderError> {
    params.validate(g.num_features())?;
    let adj = normalize_adjacency(g.adjacency());
    let mut tape = Tape::new();
    let weights: Vec<Var> = params.weights.iter().map(|w| tape.constant(w.clone())).collect();
    let z = forward(&mut tape, &weights, &adj, g.features())?;
    Ok(tape.value(z).clone())
}
