use std::collections::HashMap;
use std::sync::Arc;

use super::{DenseMatrix, MathError};
use crate::sparse::CsrMatrix;

/// Rows whose L2 norm falls below this normalize to the zero row.
pub const NORM_EPSILON: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op {
    Leaf,
    Constant,
    Spmm { a: Arc<CsrMatrix>, b: Var },
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    RowL2Normalize { x: Var, inv_norms: Vec<f64> },
    Add(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    GatherPairs { s: Var, pairs: Arc<[(usize, usize)]> },
    PairDots { a: Var, b: Var, pairs: Arc<[(usize, usize)]> },
    Mean(Var),
    MeanDiag(Var),
    /// Scalar output whose partials (for a unit upstream gradient) were
    /// computed alongside the forward value.
    Custom { partials: Vec<(Var, DenseMatrix)> },
}

struct Node {
    value: DenseMatrix,
    op: Op,
    requires_grad: bool,
}

/// Records matrix operations in evaluation order so that gradients can be
/// propagated back to the leaves.
///
/// Nodes are appended only, so every node's inputs precede it and reverse
/// insertion order is a valid reverse topological order.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every leaf of a tape.
#[derive(Debug, Default)]
pub struct Gradients {
    by_leaf: HashMap<Var, DenseMatrix>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&DenseMatrix> {
        self.by_leaf.get(&v)
    }

    pub fn take(&mut self, v: Var) -> Option<DenseMatrix> {
        self.by_leaf.remove(&v)
    }
}

fn mismatch(op: &'static str, left: (usize, usize), right: (usize, usize)) -> MathError {
    MathError::ShapeMismatch { op, left, right }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &DenseMatrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Whether gradients will flow into `v` during backward.
    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: DenseMatrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, inputs: &[Var]) -> bool {
        inputs.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Differentiable input.
    pub fn leaf(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    /// `a · b` for a constant sparse `a`.
    pub fn spmm(&mut self, a: &Arc<CsrMatrix>, b: Var) -> Result<Var, MathError> {
        let bv = self.value(b);
        if a.cols() != bv.rows() {
            return Err(mismatch("spmm", (a.rows(), a.cols()), bv.shape()));
        }
        let value = a.mul_dense(bv);
        let rg = self.any_grad(&[b]);
        Ok(self.push(value, Op::Spmm { a: Arc::clone(a), b }, rg))
    }

    /// `a · b`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, MathError> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, MathError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.cols() {
            return Err(mismatch("matmul_t", av.shape(), bv.shape()));
        }
        let value = av.matmul_t(bv)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::MatMulT(a, b), rg))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|v| v.max(0.0));
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Relu(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Sigmoid(a), rg)
    }

    /// Scales every row to unit L2 norm; rows with norm below
    /// [`NORM_EPSILON`] become zero rows with zero gradient.
    pub fn row_l2_normalize(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut value = x.clone();
        let mut inv_norms = Vec::with_capacity(x.rows());
        for i in 0..x.rows() {
            let norm = x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            let inv = if norm < NORM_EPSILON { 0.0 } else { 1.0 / norm };
            value.row_mut(i).iter_mut().for_each(|v| *v *= inv);
            inv_norms.push(inv);
        }
        let rg = self.any_grad(&[a]);
        self.push(value, Op::RowL2Normalize { x: a, inv_norms }, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, MathError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch("add", av.shape(), bv.shape()));
        }
        let mut value = av.clone();
        value.add_scaled(bv, 1.0);
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).scaled(c);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Scale(a, c), rg)
    }

    /// Adds the constant `c` to every entry.
    pub fn offset(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|v| v + c);
        let rg = self.any_grad(&[a]);
        self.push(value, Op::Offset(a), rg)
    }

    /// Column vector of `s[i, j]` for each listed pair.
    pub fn gather_pairs(
        &mut self,
        s: Var,
        pairs: &Arc<[(usize, usize)]>,
    ) -> Result<Var, MathError> {
        let sv = self.value(s);
        let (rows, cols) = sv.shape();
        let mut out = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs.iter() {
            if i >= rows || j >= cols {
                return Err(MathError::IndexOutOfRange {
                    index: (i, j),
                    shape: (rows, cols),
                });
            }
            out.push(sv[(i, j)]);
        }
        let rg = self.any_grad(&[s]);
        Ok(self.push(
            DenseMatrix::column(&out),
            Op::GatherPairs {
                s,
                pairs: Arc::clone(pairs),
            },
            rg,
        ))
    }

    /// Column vector of `⟨a_i, b_j⟩` for each listed pair; equal to
    /// `gather_pairs(matmul_t(a, b), pairs)` without forming the product.
    pub fn pair_dots(
        &mut self,
        a: Var,
        b: Var,
        pairs: &Arc<[(usize, usize)]>,
    ) -> Result<Var, MathError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.cols() {
            return Err(mismatch("pair_dots", av.shape(), bv.shape()));
        }
        let mut out = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs.iter() {
            if i >= av.rows() || j >= bv.rows() {
                return Err(MathError::IndexOutOfRange {
                    index: (i, j),
                    shape: (av.rows(), bv.rows()),
                });
            }
            out.push(dot(av.row(i), bv.row(j)));
        }
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(
            DenseMatrix::column(&out),
            Op::PairDots {
                a,
                b,
                pairs: Arc::clone(pairs),
            },
            rg,
        ))
    }

    /// Mean of all entries, as a 1×1 matrix.
    pub fn mean(&mut self, a: Var) -> Result<Var, MathError> {
        let av = self.value(a);
        if av.is_empty() {
            return Err(mismatch("mean", av.shape(), (1, 1)));
        }
        let value = DenseMatrix::scalar(av.sum() / av.len() as f64);
        let rg = self.any_grad(&[a]);
        Ok(self.push(value, Op::Mean(a), rg))
    }

    /// Mean of the diagonal of a square matrix.
    pub fn mean_diag(&mut self, s: Var) -> Result<Var, MathError> {
        let sv = self.value(s);
        let (r, c) = sv.shape();
        if r != c || r == 0 {
            return Err(mismatch("mean_diag", (r, c), (c, r)));
        }
        let value = DenseMatrix::scalar((0..r).map(|i| sv[(i, i)]).sum::<f64>() / r as f64);
        let rg = self.any_grad(&[s]);
        Ok(self.push(value, Op::MeanDiag(s), rg))
    }

    /// Records a scalar computed outside the tape. `partials` holds the
    /// gradient of `value` with respect to each input; inputs that do not
    /// require gradients may be omitted.
    pub fn custom_scalar(
        &mut self,
        value: f64,
        partials: Vec<(Var, DenseMatrix)>,
    ) -> Result<Var, MathError> {
        for (v, p) in &partials {
            if p.shape() != self.shape(*v) {
                return Err(mismatch("custom_scalar", self.shape(*v), p.shape()));
            }
        }
        let inputs: Vec<Var> = partials.iter().map(|(v, _)| *v).collect();
        let rg = self.any_grad(&inputs);
        Ok(self.push(DenseMatrix::scalar(value), Op::Custom { partials }, rg))
    }

    /// Reverse-mode sweep from a scalar `loss`. Every leaf recorded before
    /// `loss` receives a gradient, zero if it does not influence `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, MathError> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(MathError::NonScalarLoss { shape });
        }
        let mut grads: Vec<Option<DenseMatrix>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(DenseMatrix::scalar(1.0));
        let mut out = Gradients::default();

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                let g = grads[idx]
                    .take()
                    .unwrap_or_else(|| DenseMatrix::zeros(node.value.rows(), node.value.cols()));
                out.by_leaf.insert(Var(idx), g);
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            if !node.requires_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads);
        }
        Ok(out)
    }

    fn propagate(&self, node: &Node, g: &DenseMatrix, grads: &mut [Option<DenseMatrix>]) {
        let wants = |v: Var| self.nodes[v.0].requires_grad;
        let mut send = |v: Var, contribution: DenseMatrix| {
            let slot = &mut grads[v.0];
            match slot {
                Some(acc) => acc.add_scaled(&contribution, 1.0),
                None => *slot = Some(contribution),
            }
        };
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::Spmm { a, b } => send(*b, a.transpose_mul_dense(g)),
            Op::MatMul(a, b) => {
                if wants(*a) {
                    send(*a, g.matmul_t(self.value(*b)).expect("shapes checked"));
                }
                if wants(*b) {
                    send(*b, self.value(*a).t_matmul(g).expect("shapes checked"));
                }
            }
            Op::MatMulT(a, b) => {
                if wants(*a) {
                    send(*a, g.matmul(self.value(*b)).expect("shapes checked"));
                }
                if wants(*b) {
                    send(*b, g.t_matmul(self.value(*a)).expect("shapes checked"));
                }
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let mut d = g.clone();
                for (dv, &xv) in d.data_mut().iter_mut().zip(x.data()) {
                    if xv <= 0.0 {
                        *dv = 0.0;
                    }
                }
                send(*a, d);
            }
            Op::Sigmoid(a) => {
                let mut d = g.clone();
                for (dv, &y) in d.data_mut().iter_mut().zip(node.value.data()) {
                    *dv *= y * (1.0 - y);
                }
                send(*a, d);
            }
            Op::RowL2Normalize { x, inv_norms } => {
                let y = &node.value;
                let mut d = DenseMatrix::zeros(y.rows(), y.cols());
                for (i, &inv) in inv_norms.iter().enumerate() {
                    if inv == 0.0 {
                        continue;
                    }
                    let (yi, gi) = (y.row(i), g.row(i));
                    let proj = dot(yi, gi);
                    for ((dv, &yv), &gv) in d.row_mut(i).iter_mut().zip(yi).zip(gi) {
                        *dv = inv * (gv - yv * proj);
                    }
                }
                send(*x, d);
            }
            Op::Add(a, b) => {
                if wants(*a) {
                    send(*a, g.clone());
                }
                if wants(*b) {
                    send(*b, g.clone());
                }
            }
            Op::Scale(a, c) => send(*a, g.scaled(*c)),
            Op::Offset(a) => send(*a, g.clone()),
            Op::GatherPairs { s, pairs } => {
                let (r, c) = self.shape(*s);
                let mut d = DenseMatrix::zeros(r, c);
                for (p, &(i, j)) in pairs.iter().enumerate() {
                    d[(i, j)] += g.data()[p];
                }
                send(*s, d);
            }
            Op::PairDots { a, b, pairs } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if wants(*a) {
                    let mut d = DenseMatrix::zeros(av.rows(), av.cols());
                    for (p, &(i, j)) in pairs.iter().enumerate() {
                        let gp = g.data()[p];
                        for (dv, &bvj) in d.row_mut(i).iter_mut().zip(bv.row(j)) {
                            *dv += gp * bvj;
                        }
                    }
                    send(*a, d);
                }
                if wants(*b) {
                    let mut d = DenseMatrix::zeros(bv.rows(), bv.cols());
                    for (p, &(i, j)) in pairs.iter().enumerate() {
                        let gp = g.data()[p];
                        for (dv, &avi) in d.row_mut(j).iter_mut().zip(av.row(i)) {
                            *dv += gp * avi;
                        }
                    }
                    send(*b, d);
                }
            }
            Op::Mean(a) => {
                let (r, c) = self.shape(*a);
                let gs = g.data()[0] / (r * c) as f64;
                send(*a, DenseMatrix::filled(r, c, gs));
            }
            Op::MeanDiag(s) => {
                let (n, _) = self.shape(*s);
                let mut d = DenseMatrix::zeros(n, n);
                let gs = g.data()[0] / n as f64;
                for i in 0..n {
                    d[(i, i)] = gs;
                }
                send(*s, d);
            }
            Op::Custom { partials } => {
                let gs = g.data()[0];
                for (v, p) in partials {
                    if wants(*v) {
                        send(*v, p.scaled(gs));
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
