//! Clap argument structs. Every value-bearing field is optional so the
//! same structs deserialize from --config TOML files; flags given on the
//! command line override file values, which override built-in defaults.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectArgs {
    /// Named target state (bell, w, ghz, dicke, cluster, cring, c23, basis0).
    #[arg(long)]
    pub target: Option<String>,
    /// Qubit count (optional for targets with a single defined size).
    #[arg(long)]
    pub n: Option<usize>,
    /// JSON amplitude file for a custom pure target.
    #[arg(long)]
    pub target_file: Option<PathBuf>,
    /// Number of measurement settings to select.
    #[arg(short, long)]
    pub k: Option<usize>,
    /// greedy (coverage, default) or top-abs (expectation magnitude).
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDataArgs {
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub target_file: Option<PathBuf>,
    /// Settings in the measurement plan (feature prefixes cover smaller k).
    #[arg(short, long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub strategy: Option<String>,
    /// outcome-probs (default) or pauli-expectations.
    #[arg(long)]
    pub mode: Option<String>,
    /// Identity cap for pauli-expectations features (default 4).
    #[arg(long)]
    pub max_identities: Option<usize>,
    /// Poisson shots per setting; 0 means exact probabilities.
    #[arg(long)]
    pub shots: Option<u64>,
    /// l66, l122 (default) or l234.
    #[arg(long)]
    pub binning: Option<String>,
    /// pure or mixed (default).
    #[arg(long)]
    pub kind: Option<String>,
    /// m1 purity-controller distribution A..I or const<value> (default H).
    #[arg(long)]
    pub m1_dist: Option<String>,
    #[arg(long)]
    pub per_label_train: Option<usize>,
    #[arg(long)]
    pub per_label_val: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset file stem (defaults to the target id).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainArgs {
    /// Directory holding <name>.manifest.json / <name>.csv.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub data_name: Option<String>,
    /// Train a single model on the first k settings (default: all).
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Train models for k_min..=k_max and write a registry directory.
    #[arg(long)]
    pub registry: bool,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Calibration deltas for registry mode, e.g. "0.05,0.01".
    #[arg(long)]
    pub deltas: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Hidden layer sizes, e.g. "128,64".
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub train_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub data_name: Option<String>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated confidence deltas (default "0.05,0.01").
    #[arg(long)]
    pub deltas: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Default)]
pub struct PredictArgs {
    /// Registry directory written by `train --registry`.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Settings to use (default: the registry's largest k).
    #[arg(short, long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Measure this pure state (JSON amplitude file)...
    #[arg(long)]
    pub state_file: Option<PathBuf>,
    /// ...or generate a state at this fidelity to the registry's target.
    #[arg(long)]
    pub true_f: Option<f64>,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub m1_dist: Option<String>,
    #[arg(long)]
    pub gen_seed: Option<u64>,
    /// Shot budget per setting (default: the registry's training budget).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Measurement-noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct CertifyArgs {
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Fidelity threshold to certify against (default 0.96).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Precision at which a straddling interval is rejected (default 0.01).
    #[arg(long)]
    pub epsilon_target: Option<f64>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub state_file: Option<PathBuf>,
    #[arg(long)]
    pub true_f: Option<f64>,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub m1_dist: Option<String>,
    #[arg(long)]
    pub gen_seed: Option<u64>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the decision and per-round transcript.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkArgs {
    /// acc_vs_k | eps_vs_F | noise_sweep | label_sweep | scaling |
    /// uniformity | purity
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub seeds: Option<u32>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub binning: Option<String>,
    #[arg(long)]
    pub per_label_train: Option<usize>,
    #[arg(long)]
    pub per_label_val: Option<usize>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct BaselineArgs {
    /// dfe or qst.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Desk-mode cap on the DFE sample count.
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub target: Option<String>,
    /// Run a capped desk estimate against a state at this fidelity.
    #[arg(long)]
    pub true_f: Option<f64>,
    #[arg(long)]
    pub seeds: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}
