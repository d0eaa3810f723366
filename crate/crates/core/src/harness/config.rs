use std::fmt::Write as _;
use std::path::Path;

use super::HarnessError;
use crate::augment::AugmentConfig;
use crate::clustering::KMeansConfig;
use crate::encoder::EncoderConfig;
use crate::objective::LossConfig;
use crate::optimizer::AdamConfig;

/// Every knob of a training-plus-evaluation experiment, flat so that it maps
/// one-to-one onto `key = value` lines and `--set key=value` overrides.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p_d1: f64,
    pub p_d2: f64,
    pub p_m1: f64,
    pub p_m2: f64,
    pub s: f64,
    pub tau: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub self_alignment: bool,
    /// Layer widths such as `"256-64"`.
    pub hidden: String,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub block_rows: usize,
    pub kmeans_n_init: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let loss = LossConfig::default();
        let adam = AdamConfig::default();
        let km = KMeansConfig::new(1, 0);
        Self {
            p_d1: 0.3,
            p_d2: 0.3,
            p_m1: 0.2,
            p_m2: 0.2,
            s: loss.s,
            tau: loss.tau,
            lambda: loss.lambda,
            gamma: loss.gamma,
            self_alignment: loss.self_alignment,
            hidden: "256-64".into(),
            epochs: adam.epochs,
            lr: adam.lr,
            weight_decay: adam.weight_decay,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            block_rows: loss.block_rows,
            kmeans_n_init: km.n_init,
            kmeans_max_iter: km.max_iter,
            kmeans_tol: km.tol,
            runs: 20,
            seed: 0,
        }
    }
}

/// Per-dataset settings: `(name, [p_d1, p_d2, p_m1, p_m2], s, tau, hidden,
/// epochs, lr, weight_decay)`.
pub const PRESETS: [(&str, [f64; 4], f64, f64, &str, usize, f64, f64); 8] = [
    ("cora", [0.3, 0.3, 0.2, 0.2], 0.6, 0.1, "256-64", 200, 1e-3, 1e-5),
    ("citeseer", [0.6, 0.8, 0.0, 0.4], 0.5, 0.1, "256", 50, 1e-3, 1e-5),
    ("pubmed", [0.2, 0.6, 0.1, 0.0], 0.6, 0.1, "256-256", 200, 1e-3, 1e-5),
    ("corafull", [0.2, 0.4, 0.0, 0.2], 0.6, 0.1, "256-64", 200, 1e-3, 1e-5),
    ("wikics", [0.0, 0.6, 0.1, 0.0], 0.5, 0.1, "256-256", 500, 1e-3, 1e-5),
    ("photo", [0.8, 0.8, 0.0, 0.0], 0.6, 0.1, "256-128", 200, 1e-3, 1e-5),
    ("computer", [0.6, 0.8, 0.0, 0.1], 0.6, 0.1, "256-128", 400, 1e-2, 1e-6),
    ("coauthorcs", [0.1, 0.3, 0.0, 0.7], 0.4, 0.08, "256-64", 200, 1e-3, 1e-5),
];

impl ExperimentConfig {
    pub fn preset(name: &str) -> Option<Self> {
        let key = name.to_ascii_lowercase();
        let &(_, p, s, tau, hidden, epochs, lr, weight_decay) =
            PRESETS.iter().find(|row| row.0 == key)?;
        Some(Self {
            p_d1: p[0],
            p_d2: p[1],
            p_m1: p[2],
            p_m2: p[3],
            s,
            tau,
            hidden: hidden.into(),
            epochs,
            lr,
            weight_decay,
            ..Self::default()
        })
    }

    /// Applies one `key = value` assignment. Values use TOML syntax; a bare
    /// word that is not valid TOML is taken as a string (`hidden = 256-64`).
    pub fn set(&mut self, assignment: &str) -> Result<(), HarnessError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("expected key=value, got {assignment:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let parsed: toml::Table = toml::from_str(&format!("{key} = {value}"))
            .or_else(|_| toml::from_str(&format!("{key} = {:?}", value)))
            .map_err(|e| HarnessError::Config(format!("{key}: {e}")))?;
        let mut table = toml::Table::try_from(&*self)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        table.extend(parsed);
        *self = table
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("{key}: {}", e.message())))?;
        Ok(())
    }

    /// Parses flat `key = value` text on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), HarnessError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set(line)
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path, base: Self) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = base;
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Flat `key = value` text that [`apply_text`](Self::apply_text) reads back.
    pub fn to_text(&self) -> String {
        let table = toml::Table::try_from(self).expect("config serializes");
        let mut out = String::new();
        for (k, v) in &table {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |e: String| Err(HarnessError::Config(e));
        self.augment().validate().or_else(|e| bad(e.to_string()))?;
        self.encoder()?;
        self.loss().validate().or_else(|e| bad(e.to_string()))?;
        self.adam().validate().or_else(bad)?;
        if self.kmeans_n_init == 0 {
            return bad("kmeans_n_init must be >= 1".into());
        }
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        Ok(())
    }

    pub fn augment(&self) -> AugmentConfig {
        AugmentConfig {
            p_d1: self.p_d1,
            p_d2: self.p_d2,
            p_m1: self.p_m1,
            p_m2: self.p_m2,
            seed: self.seed,
        }
    }

    pub fn encoder(&self) -> Result<EncoderConfig, HarnessError> {
        self.hidden
            .parse()
            .map_err(|e: crate::encoder::EncoderError| HarnessError::Config(format!("hidden: {e}")))
    }

    pub fn loss(&self) -> LossConfig {
        LossConfig {
            s: self.s,
            tau: self.tau,
            lambda: self.lambda,
            gamma: self.gamma,
            block_rows: self.block_rows,
            self_alignment: self.self_alignment,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            epochs: self.epochs,
        }
    }

    pub fn kmeans(&self, k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            n_init: self.kmeans_n_init,
            max_iter: self.kmeans_max_iter,
            tol: self.kmeans_tol,
            seed,
        }
    }
}
