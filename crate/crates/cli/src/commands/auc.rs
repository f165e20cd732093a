use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use usable_info::auc::edge_auc;
use usable_info::CompareMode;

use crate::config::{usage, Layered, RunRecord};
use crate::io::{read_matrix, read_tree};

#[derive(Args, Debug)]
pub struct AucArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Square edge-score matrix CSV; entry (i, j) scores the edge i -> j.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Square 0/1 adjacency CSV, or a tree record (`.json`).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// For tree truths: `undirected` marks both directions of each edge.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct AucConfig {
    scores: PathBuf,
    truth: PathBuf,
    #[serde(default)]
    mode: CompareMode,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct AucResults {
    auc: f64,
    nodes: usize,
    positives: usize,
    negatives: usize,
}

pub fn run(args: AucArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = Layered::load(args.config.as_deref())?;
    config.set("scores", args.scores);
    config.set("truth", args.truth);
    config.set("mode", args.mode);
    config.set("output", args.output);
    let cfg: AucConfig = config.parse()?;

    let scores = read_matrix(&cfg.scores)?;
    let truth = if cfg.truth.extension().is_some_and(|e| e == "json") {
        let tree = read_tree(&cfg.truth)?;
        let m = tree.node_count();
        let mut adj = vec![vec![false; m]; m];
        for (p, c) in tree.edges() {
            adj[p][c] = true;
            if cfg.mode == CompareMode::Undirected {
                adj[c][p] = true;
            }
        }
        adj
    } else {
        let raw = read_matrix(&cfg.truth)?;
        if raw.iter().flatten().any(|&v| v != 0.0 && v != 1.0) {
            return Err(usable_info::Error::Parse {
                line: 1,
                message: format!("{} must hold 0/1 entries", cfg.truth.display()),
            }
            .into());
        }
        raw.into_iter().map(|r| r.into_iter().map(|v| v == 1.0).collect()).collect()
    };
    if truth.len() != scores.len() {
        return Err(usage(format!(
            "score matrix is {0}x{0} but truth is {1}x{1}",
            scores.len(),
            truth.len()
        )));
    }
    let auc = edge_auc(&scores, &truth)?;
    let m = scores.len();
    let positives = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|&(i, j)| i != j && truth[i][j]).count();
    let results = AucResults {
        auc,
        nodes: m,
        positives,
        negatives: m * (m - 1) - positives,
    };
    RunRecord::new("auc", config.into_value(), Vec::new(), started, results).emit(cfg.output.as_deref())
}
