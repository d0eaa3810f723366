use std::fmt::Write as _;

use super::{ExperimentConfig, HarnessError};
use crate::clustering::{evaluate, kmeans, mean_pairwise_cosine, MetricBundle};
use crate::diffmath::DenseMatrix;
use crate::encoder::{embed, EncoderParams};
use crate::graph::Graph;
use crate::optimizer::train;

pub const REPORT_FORMAT_VERSION: &str = "ns4gc-report/1";

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
}

/// Conventions behind the reported numbers.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReportMetadata {
    pub acc: String,
    pub nmi: String,
    pub f1: String,
    pub std: String,
}

impl Default for ReportMetadata {
    fn default() -> Self {
        Self {
            acc: "hungarian optimal cluster-to-class mapping".into(),
            nmi: "arithmetic-mean normalization".into(),
            f1: "macro average over classes after the hungarian mapping".into(),
            std: "population (divide by runs)".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentReport {
    pub format_version: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub mean: MetricBundle,
    pub std: MetricBundle,
    pub metadata: ReportMetadata,
}

fn summarize(runs: &[RunRecord]) -> (MetricBundle, MetricBundle) {
    let n = runs.len().max(1) as f64;
    let stats = |f: fn(&RunRecord) -> f64| {
        let mean = runs.iter().map(f).sum::<f64>() / n;
        let var = runs.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (acc, nmi, ari, f1) = (
        stats(|r| r.acc),
        stats(|r| r.nmi),
        stats(|r| r.ari),
        stats(|r| r.f1),
    );
    (
        MetricBundle { acc: acc.0, nmi: nmi.0, ari: ari.0, f1: f1.0 },
        MetricBundle { acc: acc.1, nmi: nmi.1, ari: ari.1, f1: f1.1 },
    )
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned per-run table with metrics in percent.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>4} {:>8} {:>7} {:>7} {:>7} {:>7}", "run", "seed", "ACC", "NMI", "ARI", "F1");
        for (i, r) in self.runs.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>4} {:>8} {:>7.2} {:>7.2} {:>7.2} {:>7.2}",
                i,
                r.seed,
                100.0 * r.acc,
                100.0 * r.nmi,
                100.0 * r.ari,
                100.0 * r.f1
            );
        }
        let (m, s) = (&self.mean, &self.std);
        let cell = |a: f64, b: f64| format!("{:.2}±{:.2}", 100.0 * a, 100.0 * b);
        let _ = writeln!(
            out,
            "{:>13} {} {} {} {}",
            "mean±std",
            cell(m.acc, s.acc),
            cell(m.nmi, s.nmi),
            cell(m.ari, s.ari),
            cell(m.f1, s.f1)
        );
        out
    }
}

/// Embeds the unaugmented graph with `params`, clusters it into the class
/// count and scores the result. Returns the embeddings too.
pub fn evaluate_params(
    params: &EncoderParams,
    graph: &Graph,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(MetricBundle, DenseMatrix), HarnessError> {
    let labels = graph.require_labels()?;
    let k = graph.num_classes().unwrap_or(0);
    let z = embed(params, graph)?;
    let clusters = kmeans(&z, &cfg.kmeans(k, seed))?;
    Ok((evaluate(labels, &clusters.assignments)?, z))
}

fn run_one(
    graph: &Graph,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(MetricBundle, DenseMatrix), HarnessError> {
    let outcome = train(
        graph,
        &cfg.encoder()?,
        &cfg.augment(),
        &cfg.loss(),
        &cfg.adam(),
        seed,
    )?;
    evaluate_params(&outcome.params, graph, cfg, seed)
}

/// Like [`run_experiment`], additionally handing each run's index and
/// embeddings of the unaugmented graph to `inspect`.
pub fn run_experiment_with(
    graph: &Graph,
    cfg: &ExperimentConfig,
    mut inspect: impl FnMut(usize, &DenseMatrix),
) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    graph.require_labels()?;
    let mut runs = Vec::with_capacity(cfg.runs);
    for r in 0..cfg.runs {
        let seed = cfg.seed.wrapping_add(r as u64);
        let (m, z) = run_one(graph, cfg, seed).map_err(|e| HarnessError::Run {
            run: r,
            source: Box::new(e),
        })?;
        log::info!(
            "run {r} (seed {seed}): acc {:.4} nmi {:.4} ari {:.4} f1 {:.4}",
            m.acc,
            m.nmi,
            m.ari,
            m.f1
        );
        inspect(r, &z);
        runs.push(RunRecord {
            seed,
            acc: m.acc,
            nmi: m.nmi,
            ari: m.ari,
            f1: m.f1,
        });
    }
    let (mean, std) = summarize(&runs);
    Ok(ExperimentReport {
        format_version: REPORT_FORMAT_VERSION.into(),
        config: cfg.clone(),
        runs,
        mean,
        std,
        metadata: ReportMetadata::default(),
    })
}

/// Trains and evaluates `cfg.runs` times with seeds `cfg.seed + r`, in order.
/// The first failing run aborts the experiment.
pub fn run_experiment(graph: &Graph, cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    run_experiment_with(graph, cfg, |_, _| {})
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AblationRow {
    pub self_alignment: bool,
    pub neighbor_alignment: bool,
    pub sparsity: bool,
    /// Mean over runs of the mean pairwise cosine of the embeddings.
    pub mean_cosine: f64,
    pub report: ExperimentReport,
}

impl AblationRow {
    pub fn label(&self) -> String {
        let terms: Vec<&str> = [
            (self.self_alignment, "ali"),
            (self.neighbor_alignment, "nei"),
            (self.sparsity, "spa"),
        ]
        .iter()
        .filter(|t| t.0)
        .map(|t| t.1)
        .collect();
        terms.join("+")
    }
}

/// Runs the four loss-term combinations ali+nei, ali+spa, nei+spa and the
/// full objective. A disabled weighted term gets weight 0; an enabled one
/// keeps the weight from `cfg`.
pub fn ablate(graph: &Graph, cfg: &ExperimentConfig) -> Result<Vec<AblationRow>, HarnessError> {
    let combos = [
        (true, true, false),
        (true, false, true),
        (false, true, true),
        (true, true, true),
    ];
    combos
        .iter()
        .map(|&(ali, nei, spa)| {
            let variant = ExperimentConfig {
                self_alignment: ali,
                lambda: if nei { cfg.lambda } else { 0.0 },
                gamma: if spa { cfg.gamma } else { 0.0 },
                ..cfg.clone()
            };
            let mut cosines = Vec::new();
            let report =
                run_experiment_with(graph, &variant, |_, z| cosines.push(mean_pairwise_cosine(z)))?;
            Ok(AblationRow {
                self_alignment: ali,
                neighbor_alignment: nei,
                sparsity: spa,
                mean_cosine: cosines.iter().sum::<f64>() / cosines.len().max(1) as f64,
                report,
            })
        })
        .collect()
}
