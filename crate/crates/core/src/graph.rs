//! Attributed graphs, GCN adjacency normalization and label statistics.

use std::sync::Arc;

use crate::diffmath::DenseMatrix;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no labels")]
    MissingLabels,
    #[error("every node is isolated")]
    AllIsolated,
    #[error("invalid graph: {0}")]
    Invalid(String),
}

/// Symmetric 0/1 adjacency pattern without self-loops, stored as CSR.
///
/// Each undirected edge appears as two directed entries; neighbor lists are
/// sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl Adjacency {
    /// Builds the pattern from undirected pairs. Self-loops and duplicates
    /// (in either orientation) are discarded; the number of dropped
    /// self-loops is returned alongside.
    pub fn from_undirected(
        num_nodes: usize,
        edges: &[(usize, usize)],
    ) -> Result<(Self, usize), GraphError> {
        let mut self_loops = 0;
        let mut directed = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(GraphError::Invalid(format!(
                    "edge ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            if u == v {
                self_loops += 1;
                continue;
            }
            directed.push((u, v));
            directed.push((v, u));
        }
        directed.sort_unstable();
        directed.dedup();
        Ok((Self::from_sorted_directed(num_nodes, &directed), self_loops))
    }

    /// `directed` must be sorted, deduplicated, loop-free and symmetric.
    pub(crate) fn from_sorted_directed(num_nodes: usize, directed: &[(usize, usize)]) -> Self {
        let mut indptr = vec![0usize; num_nodes + 1];
        for &(u, _) in directed {
            indptr[u + 1] += 1;
        }
        for i in 0..num_nodes {
            indptr[i + 1] += indptr[i];
        }
        let indices = directed.iter().map(|&(_, v)| v).collect();
        Self { indptr, indices }
    }

    pub fn num_nodes(&self) -> usize {
        self.indptr.len() - 1
    }

    /// Number of stored directed entries (twice the undirected edge count).
    pub fn num_directed_edges(&self) -> usize {
        self.indices.len()
    }

    pub fn num_undirected_edges(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// All directed entries `(i, j)` in row-major order.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_nodes())
            .flat_map(|i| self.neighbors(i).iter().map(move |&j| (i, j)))
            .collect()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_nodes())
            .flat_map(|i| {
                self.neighbors(i)
                    .iter()
                    .filter(move |&&j| i < j)
                    .map(move |&j| (i, j))
            })
            .collect()
    }

    /// Keeps the undirected edges for which `keep(u, v)` (with `u < v`)
    /// returns true; both directions go together. `keep` is called once per
    /// undirected edge in row-major order.
    pub fn retain_undirected(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let mut directed = Vec::with_capacity(self.indices.len());
        for (u, v) in self.undirected_edges() {
            if keep(u, v) {
                directed.push((u, v));
                directed.push((v, u));
            }
        }
        directed.sort_unstable();
        Self::from_sorted_directed(self.num_nodes(), &directed)
    }
}

/// Immutable attributed graph.
#[derive(Clone, Debug)]
pub struct Graph {
    features: DenseMatrix,
    adjacency: Adjacency,
    labels: Option<Vec<usize>>,
    num_classes: Option<usize>,
}

impl Graph {
    /// Validates and assembles a graph from an undirected edge list.
    /// Duplicate edges are merged and self-loops dropped with a warning.
    pub fn new(
        features: DenseMatrix,
        edges: &[(usize, usize)],
        labels: Option<Vec<usize>>,
    ) -> Result<Self, GraphError> {
        let (adjacency, self_loops) = Adjacency::from_undirected(features.rows(), edges)?;
        if self_loops > 0 {
            log::warn!("dropped {self_loops} self-loop(s) from input edges");
        }
        Self::from_parts(features, adjacency, labels)
    }

    pub fn from_parts(
        features: DenseMatrix,
        adjacency: Adjacency,
        labels: Option<Vec<usize>>,
    ) -> Result<Self, GraphError> {
        let n = features.rows();
        if adjacency.num_nodes() != n {
            return Err(GraphError::Invalid(format!(
                "adjacency has {} nodes, features have {n} rows",
                adjacency.num_nodes()
            )));
        }
        if !features.is_finite() {
            return Err(GraphError::Invalid("non-finite feature value".into()));
        }
        let num_classes = match &labels {
            Some(l) if l.len() != n => {
                return Err(GraphError::Invalid(format!(
                    "{} labels for {n} nodes",
                    l.len()
                )))
            }
            Some(l) => Some(l.iter().max().map_or(0, |&m| m + 1)),
            None => None,
        };
        Ok(Self {
            features,
            adjacency,
            labels,
            num_classes,
        })
    }

    /// Overrides the class count inferred from the labels, e.g. when a
    /// declared class has no members.
    pub fn with_num_classes(mut self, k: usize) -> Result<Self, GraphError> {
        let Some(labels) = &self.labels else {
            return Err(GraphError::MissingLabels);
        };
        if labels.iter().any(|&l| l >= k) {
            return Err(GraphError::Invalid(format!("label out of range for {k} classes")));
        }
        self.num_classes = Some(k);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.num_classes
    }

    pub fn require_labels(&self) -> Result<&[usize], GraphError> {
        self.labels().ok_or(GraphError::MissingLabels)
    }
}

/// `D̂^{-1/2} (A + I) D̂^{-1/2}` where `D̂` counts the inserted self-loop.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency {
    matrix: Arc<CsrMatrix>,
}

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &Arc<CsrMatrix> {
        &self.matrix
    }
}

pub fn normalize_adjacency(adjacency: &Adjacency) -> NormalizedAdjacency {
    let n = adjacency.num_nodes();
    let deg: Vec<f64> = (0..n).map(|i| (adjacency.degree(i) + 1) as f64).collect();
    let weight = |i: usize, j: usize| 1.0 / (deg[i] * deg[j]).sqrt();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(adjacency.num_directed_edges() + n);
    let mut values = Vec::with_capacity(adjacency.num_directed_edges() + n);
    indptr.push(0);
    for i in 0..n {
        let mut diag_done = false;
        for &j in adjacency.neighbors(i) {
            if !diag_done && j > i {
                indices.push(i);
                values.push(1.0 / deg[i]);
                diag_done = true;
            }
            indices.push(j);
            values.push(weight(i, j));
        }
        if !diag_done {
            indices.push(i);
            values.push(1.0 / deg[i]);
        }
        indptr.push(indices.len());
    }
    NormalizedAdjacency {
        matrix: Arc::new(CsrMatrix::from_raw(n, n, indptr, indices, values)),
    }
}

/// Mean over non-isolated nodes of the fraction of neighbors sharing the
/// node's label.
pub fn node_homophily(g: &Graph) -> Result<f64, GraphError> {
    let labels = g.require_labels()?;
    let adj = g.adjacency();
    let mut total = 0.0;
    let mut counted = 0usize;
    for (i, &li) in labels.iter().enumerate() {
        let nbrs = adj.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let same = nbrs.iter().filter(|&&j| labels[j] == li).count();
        total += same as f64 / nbrs.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(GraphError::AllIsolated);
    }
    Ok(total / counted as f64)
}

/// Row blocks of the ideal node similarity matrix (`1` where labels agree).
pub struct IdealSimilarityBlocks<'a> {
    labels: &'a [usize],
    block_rows: usize,
    next: usize,
}

impl Iterator for IdealSimilarityBlocks<'_> {
    /// First row index of the block and the block itself.
    type Item = (usize, DenseMatrix);

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.labels.len();
        if self.next >= n {
            return None;
        }
        let start = self.next;
        let end = (start + self.block_rows).min(n);
        let mut block = DenseMatrix::zeros(end - start, n);
        for i in start..end {
            let li = self.labels[i];
            for (j, v) in block.row_mut(i - start).iter_mut().enumerate() {
                if self.labels[j] == li {
                    *v = 1.0;
                }
            }
        }
        self.next = end;
        Some((start, block))
    }
}

pub fn ideal_similarity_matrix(
    g: &Graph,
    block_rows: usize,
) -> Result<IdealSimilarityBlocks<'_>, GraphError> {
    Ok(IdealSimilarityBlocks {
        labels: g.require_labels()?,
        block_rows: block_rows.max(1),
        next: 0,
    })
}
