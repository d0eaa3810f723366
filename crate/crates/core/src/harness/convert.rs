use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::bundle::{write_raw, BundleMeta};
use super::HarnessError;

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_field<T: FromStr>(path: &Path, line: usize, token: &str, what: &str) -> Result<T, HarnessError> {
    token.parse().map_err(|_| HarnessError::Parse {
        file: path.to_path_buf(),
        line,
        message: format!("bad {what} {token:?}"),
    })
}

/// Builds a bundle from text files: `edges` holds `src<TAB>dst` lines,
/// `features` one whitespace-separated row per node, `labels` one integer per
/// line. Edges are canonicalized to `src < dst`, deduplicated and stripped of
/// self-loops. Blank lines are ignored.
pub fn convert_tsv(
    edges: &Path,
    features: &Path,
    labels: Option<&Path>,
    out: &Path,
) -> Result<BundleMeta, HarnessError> {
    let mut values = Vec::new();
    let mut num_features = None;
    let feature_lines = read_lines(features)?;
    for (line, text) in &feature_lines {
        let row = text
            .split_whitespace()
            .map(|t| parse_field::<f32>(features, *line, t, "feature value"))
            .collect::<Result<Vec<_>, _>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Parse {
                file: features.to_path_buf(),
                line: *line,
                message: "non-finite feature value".into(),
            });
        }
        match num_features {
            None => num_features = Some(row.len()),
            Some(p) if p != row.len() => {
                return Err(HarnessError::Parse {
                    file: features.to_path_buf(),
                    line: *line,
                    message: format!("expected {p} columns, found {}", row.len()),
                })
            }
            Some(_) => {}
        }
        values.extend(row);
    }
    let n = feature_lines.len();
    let num_features = num_features.unwrap_or(0);

    let mut edge_set = BTreeSet::new();
    let mut self_loops = 0usize;
    for (line, text) in read_lines(edges)? {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(HarnessError::Parse {
                file: edges.to_path_buf(),
                line,
                message: format!("expected 2 columns, found {}", tokens.len()),
            });
        }
        let u: usize = parse_field(edges, line, tokens[0], "node id")?;
        let v: usize = parse_field(edges, line, tokens[1], "node id")?;
        if u >= n || v >= n {
            return Err(HarnessError::Parse {
                file: edges.to_path_buf(),
                line,
                message: format!("node id out of range for {n} nodes"),
            });
        }
        if u == v {
            self_loops += 1;
            continue;
        }
        edge_set.insert((u.min(v), u.max(v)));
    }
    if self_loops > 0 {
        log::warn!("dropped {self_loops} self-loop line(s) from {}", edges.display());
    }
    let edge_list: Vec<(usize, usize)> = edge_set.into_iter().collect();

    let label_values = match labels {
        Some(path) => {
            let lines = read_lines(path)?;
            let parsed = lines
                .iter()
                .map(|(line, t)| parse_field::<u32>(path, *line, t, "label").map(|v| v as usize))
                .collect::<Result<Vec<_>, _>>()?;
            if parsed.len() != n {
                return Err(HarnessError::Parse {
                    file: path.to_path_buf(),
                    line: lines.last().map_or(0, |l| l.0),
                    message: format!("{} labels for {n} nodes", parsed.len()),
                });
            }
            Some(parsed)
        }
        None => None,
    };
    let num_classes = label_values
        .as_ref()
        .and_then(|l| l.iter().max())
        .map_or(0, |&m| m + 1);
    write_raw(
        out,
        n,
        num_features,
        &values,
        &edge_list,
        label_values.as_deref(),
        num_classes,
    )
}
