//! On-disk graph bundle: `meta.json`, `features.bin` (f32 LE, row-major),
//! `edges.bin` (u32 LE pairs, `src < dst`, each undirected edge once) and an
//! optional `labels.bin` (u32 LE).

use std::fs;
use std::path::Path;

use super::HarnessError;
use crate::diffmath::DenseMatrix;
use crate::graph::{Adjacency, Graph};

pub const FEATURE_DTYPE: &str = "f32";

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BundleMeta {
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
    pub edge_count_undirected: usize,
    pub feature_dtype: String,
}

fn read(path: &Path) -> Result<Vec<u8>, HarnessError> {
    fs::read(path).map_err(|e| HarnessError::io(path, e))
}

fn u32s(bytes: &[u8]) -> impl Iterator<Item = u32> + '_ {
    bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
}

fn expect_size(check: &'static str, actual: usize, expected: usize) -> Result<(), HarnessError> {
    if actual != expected {
        return Err(HarnessError::corrupt(
            check,
            format!("expected {expected} bytes, found {actual}"),
        ));
    }
    Ok(())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<Graph, HarnessError> {
    let dir = path.as_ref();
    let meta_bytes = read(&dir.join("meta.json"))?;
    let meta: BundleMeta = serde_json::from_slice(&meta_bytes)
        .map_err(|e| HarnessError::corrupt("meta", e.to_string()))?;
    if meta.feature_dtype != FEATURE_DTYPE {
        return Err(HarnessError::corrupt(
            "feature dtype",
            format!("unsupported {:?}", meta.feature_dtype),
        ));
    }
    let n = meta.num_nodes;

    let raw = read(&dir.join("features.bin"))?;
    expect_size("features size", raw.len(), n * meta.num_features * 4)?;
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let features = DenseMatrix::from_vec(n, meta.num_features, values)
        .map_err(|e| HarnessError::corrupt("features size", e.to_string()))?;

    let raw = read(&dir.join("edges.bin"))?;
    expect_size("edges size", raw.len(), meta.edge_count_undirected * 8)?;
    let ids: Vec<usize> = u32s(&raw).map(|v| v as usize).collect();
    let mut edges: Vec<(usize, usize)> = ids.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    for &(u, v) in &edges {
        if u >= n || v >= n {
            return Err(HarnessError::corrupt(
                "edge endpoint",
                format!("({u}, {v}) with {n} nodes"),
            ));
        }
        if u == v {
            return Err(HarnessError::corrupt("self-loop", format!("({u}, {v})")));
        }
        if u > v {
            return Err(HarnessError::corrupt("edge order", format!("({u}, {v}) has src > dst")));
        }
    }
    edges.sort_unstable();
    if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
        return Err(HarnessError::corrupt("duplicate edge", format!("{:?}", w[0])));
    }

    let labels_path = dir.join("labels.bin");
    let labels = if labels_path.exists() {
        let raw = read(&labels_path)?;
        expect_size("labels size", raw.len(), n * 4)?;
        let labels: Vec<usize> = u32s(&raw).map(|v| v as usize).collect();
        if let Some(&bad) = labels.iter().find(|&&l| l >= meta.num_classes) {
            return Err(HarnessError::corrupt(
                "label range",
                format!("label {bad} with {} classes", meta.num_classes),
            ));
        }
        Some(labels)
    } else {
        None
    };

    let (adjacency, _) = Adjacency::from_undirected(n, &edges)?;
    let graph = Graph::from_parts(features, adjacency, labels)?;
    Ok(if graph.labels().is_some() {
        graph.with_num_classes(meta.num_classes)?
    } else {
        graph
    })
}

/// Writes `graph` as a bundle; features are stored as f32.
pub fn write_bundle(path: impl AsRef<Path>, graph: &Graph) -> Result<BundleMeta, HarnessError> {
    let features: Vec<f32> = graph.features().data().iter().map(|&v| v as f32).collect();
    let edges: Vec<(usize, usize)> = graph.adjacency().undirected_edges();
    write_raw(
        path.as_ref(),
        graph.num_nodes(),
        graph.num_features(),
        &features,
        &edges,
        graph.labels(),
        graph.num_classes().unwrap_or(0),
    )
}

pub(crate) fn write_raw(
    dir: &Path,
    num_nodes: usize,
    num_features: usize,
    features: &[f32],
    edges: &[(usize, usize)],
    labels: Option<&[usize]>,
    num_classes: usize,
) -> Result<BundleMeta, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let meta = BundleMeta {
        num_nodes,
        num_features,
        num_classes,
        edge_count_undirected: edges.len(),
        feature_dtype: FEATURE_DTYPE.to_string(),
    };
    let write = |name: &str, bytes: Vec<u8>| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| HarnessError::io(p, e))
    };
    write("meta.json", serde_json::to_vec_pretty(&meta)?)?;
    write(
        "features.bin",
        features.iter().flat_map(|v| v.to_le_bytes()).collect(),
    )?;
    write(
        "edges.bin",
        edges
            .iter()
            .flat_map(|&(u, v)| [u as u32, v as u32])
            .flat_map(u32::to_le_bytes)
            .collect(),
    )?;
    let labels_path = dir.join("labels.bin");
    match labels {
        Some(l) => write(
            "labels.bin",
            l.iter().flat_map(|&v| (v as u32).to_le_bytes()).collect(),
        )?,
        None if labels_path.exists() => {
            fs::remove_file(&labels_path).map_err(|e| HarnessError::io(&labels_path, e))?
        }
        None => {}
    }
    Ok(meta)
}
