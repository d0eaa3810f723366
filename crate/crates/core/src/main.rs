use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ns4gc::clustering::{best_split, nsm_compare, SPLIT_GRID};
use ns4gc::graph::node_homophily;
use ns4gc::harness::{
    ablate, convert_tsv, evaluate_params, load_bundle, load_checkpoint, run_experiment,
    save_checkpoint, ExperimentConfig, HarnessError,
};
use ns4gc::objective::{similarity_grid, sparsity_gradient_curve};
use ns4gc::optimizer::train;

#[derive(Parser)]
#[command(name = "ns4gc", version, about = "Contrastive graph clustering with a sparse node similarity matrix")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an encoder and write its checkpoint plus a per-epoch loss TSV.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        bundle: PathBuf,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
        /// Loss history output path (defaults to the checkpoint path with a .tsv extension).
        #[arg(long)]
        loss_tsv: Option<PathBuf>,
    },
    /// Cluster the embeddings of a trained encoder and print the metrics as JSON.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train and evaluate over several seeds and report mean and std.
    Experiment {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        bundle: PathBuf,
        /// JSON report path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the node homophily ratio of a labeled bundle.
    Homophily {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Compare the learned similarity matrix with the ideal same-class matrix.
    NsmCompare {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated split values.
        #[arg(long, value_delimiter = ',', default_values_t = SPLIT_GRID.to_vec())]
        splits: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, default_value_t = 1024)]
        block_rows: usize,
    },
    /// Print the per-pair sparsity gradient magnitude over cosine similarity as TSV.
    Gradcurve {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        tau: f64,
        /// Number of evenly spaced similarities in [-1, 1].
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Convert TSV edge/feature/label files into a graph bundle.
    Convert {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the four loss-term combinations and report each.
    Ablate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        bundle: PathBuf,
        /// JSON output path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Configuration sources, applied in order: preset, config file, flags, --set.
#[derive(Args)]
struct ConfigArgs {
    /// Dataset preset (cora, citeseer, pubmed, corafull, wikics, photo, computer, coauthorcs).
    #[arg(long)]
    preset: Option<String>,
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long = "p_d1")]
    p_d1: Option<String>,
    #[arg(long = "p_d2")]
    p_d2: Option<String>,
    #[arg(long = "p_m1")]
    p_m1: Option<String>,
    #[arg(long = "p_m2")]
    p_m2: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long = "weight_decay")]
    weight_decay: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.preset {
            Some(name) => ExperimentConfig::preset(name)
                .ok_or_else(|| HarnessError::Config(format!("--preset: unknown preset {name:?}")))?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.config {
            cfg = ExperimentConfig::load(path, cfg)?;
        }
        let flags = [
            ("p_d1", &self.p_d1),
            ("p_d2", &self.p_d2),
            ("p_m1", &self.p_m1),
            ("p_m2", &self.p_m2),
            ("s", &self.s),
            ("tau", &self.tau),
            ("lambda", &self.lambda),
            ("gamma", &self.gamma),
            ("hidden", &self.hidden),
            ("epochs", &self.epochs),
            ("lr", &self.lr),
            ("weight_decay", &self.weight_decay),
            ("runs", &self.runs),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(&format!("{key} = {v}"))
                    .map_err(|e| HarnessError::Config(format!("--{key}: {e}")))?;
            }
        }
        for assignment in &self.set {
            cfg.set(assignment)
                .map_err(|e| HarnessError::Config(format!("--set: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Train {
            config,
            bundle,
            out,
            loss_tsv,
        } => {
            let cfg = config.resolve()?;
            let graph = load_bundle(&bundle)?;
            let outcome = train(
                &graph,
                &cfg.encoder()?,
                &cfg.augment(),
                &cfg.loss(),
                &cfg.adam(),
                cfg.seed,
            )?;
            save_checkpoint(&out, &outcome.params)?;
            let mut tsv = String::from("epoch\ttotal\tl_ali\tl_nei\tl_spa\n");
            for (epoch, b) in outcome.history.iter().enumerate() {
                let _ = writeln!(tsv, "{epoch}\t{}\t{}\t{}\t{}", b.total, b.l_ali, b.l_nei, b.l_spa);
            }
            let tsv_path = loss_tsv.unwrap_or_else(|| out.with_extension("tsv"));
            write_or_print(Some(&tsv_path), &tsv)?;
            eprintln!("wrote {} and {}", out.display(), tsv_path.display());
        }
        Command::Eval {
            config,
            bundle,
            checkpoint,
        } => {
            let cfg = config.resolve()?;
            let graph = load_bundle(&bundle)?;
            let params = load_checkpoint(&checkpoint)?;
            let (m, _) = evaluate_params(&params, &graph, &cfg, cfg.seed)?;
            let json = serde_json::json!({
                "acc": m.acc, "nmi": m.nmi, "ari": m.ari, "f1": m.f1, "seed": cfg.seed,
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
        }
        Command::Experiment {
            config,
            bundle,
            out,
        } => {
            let cfg = config.resolve()?;
            let graph = load_bundle(&bundle)?;
            let report = run_experiment(&graph, &cfg)?;
            eprint!("{}", report.text_table());
            write_or_print(out.as_deref(), &(report.to_json() + "\n"))?;
        }
        Command::Homophily { bundle } => {
            let graph = load_bundle(&bundle)?;
            println!("{:.6}", node_homophily(&graph)?);
        }
        Command::NsmCompare {
            bundle,
            checkpoint,
            splits,
            tau,
            block_rows,
        } => {
            let graph = load_bundle(&bundle)?;
            let labels = graph.require_labels()?;
            let params = load_checkpoint(&checkpoint)?;
            let z = ns4gc::encoder::embed(&params, &graph)?;
            let rows = nsm_compare(&z, labels, &splits, tau, block_rows)?;
            println!("s\tmae\tacc");
            for r in &rows {
                println!("{}\t{:.6}\t{:.6}", r.s, r.mae, r.acc);
            }
            if let Some((m, a)) = best_split(&rows) {
                println!("# best mae {:.6} at s = {}; best acc {:.6} at s = {}", m.mae, m.s, a.acc, a.s);
            }
        }
        Command::Gradcurve { s, tau, points } => {
            if !(tau > 0.0) {
                return Err(HarnessError::Config(format!("--tau must be > 0, got {tau}")));
            }
            if points < 2 {
                return Err(HarnessError::Config(format!("--points must be >= 2, got {points}")));
            }
            let mut grid = similarity_grid(points);
            if !grid.contains(&s) && (-1.0..=1.0).contains(&s) {
                grid.push(s);
                grid.sort_by(f64::total_cmp);
            }
            println!("similarity\tgradient");
            for (x, g) in sparsity_gradient_curve(s, tau, &grid) {
                println!("{x}\t{g}");
            }
        }
        Command::Convert {
            edges,
            features,
            labels,
            out,
        } => {
            let meta = convert_tsv(&edges, &features, labels.as_deref(), &out)?;
            println!("{}", serde_json::to_string_pretty(&meta)?);
        }
        Command::Ablate {
            config,
            bundle,
            out,
        } => {
            let cfg = config.resolve()?;
            let graph = load_bundle(&bundle)?;
            let rows = ablate(&graph, &cfg)?;
            eprintln!("{:<12} {:>13} {:>13} {:>11}", "terms", "ACC", "NMI", "mean cos");
            for r in &rows {
                let (m, s) = (&r.report.mean, &r.report.std);
                eprintln!(
                    "{:<12} {:>13} {:>13} {:>11.4}",
                    r.label(),
                    format!("{:.2}±{:.2}", 100.0 * m.acc, 100.0 * s.acc),
                    format!("{:.2}±{:.2}", 100.0 * m.nmi, 100.0 * s.nmi),
                    r.mean_cosine
                );
            }
            write_or_print(out.as_deref(), &(serde_json::to_string_pretty(&rows)? + "\n"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = if matches!(e, HarnessError::Config(_)) { 2 } else { 1 };
            ExitCode::from(code)
        }
    }
}
