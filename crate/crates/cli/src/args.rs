use crate::suites::Suite;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "pmbench",
    version,
    about = "Preconditioned momentum benchmark and verification harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one method and write its CSV trace.
    Run(RunArgs),
    /// Run several methods on one objective; long-format CSV plus a summary.
    Compare(RunArgs),
    /// Evaluate a step-size grid and report the best step.
    Tune(RunArgs),
    /// Run the built-in theory checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Key/value file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// gd | heavy-ball | nesterov | phb | pn (comma-separated for compare).
    #[arg(long)]
    pub method: Option<String>,
    /// LibSVM file with +1/-1 labels.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Separate LibSVM test file; disables the random split.
    #[arg(long = "test-dataset")]
    pub test_dataset: Option<String>,
    /// quad:d=..,kappa=..[,rotate=0|1][,seed=..] or logistic:n=..,d=..[,seed=..]
    #[arg(long)]
    pub synthetic: Option<String>,
    /// number | theory | grid | grid:a,b,...
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub beta1: Option<String>,
    /// number | 1-k | 1-K
    #[arg(long)]
    pub beta2: Option<String>,
    /// identity | adagrad | adam | oasis
    #[arg(long)]
    pub precond: Option<String>,
    /// Starting scaling: identity | first | a positive constant.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long = "floor-e")]
    pub floor_e: Option<String>,
    /// Nesterov extrapolation weight; derived from the constants when absent.
    #[arg(long)]
    pub xi: Option<String>,
    #[arg(long)]
    pub iters: Option<String>,
    /// Stop once the squared gradient norm is at most this.
    #[arg(long)]
    pub tol: Option<String>,
    /// Training fraction of the dataset (1 keeps every row).
    #[arg(long = "train-frac")]
    pub train_frac: Option<String>,
    /// L2 regularization of the logistic objective.
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long = "record-every")]
    pub record_every: Option<String>,
    /// Tuning criterion: loss | iters
    #[arg(long)]
    pub select: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scale each feature column by its training max-abs.
    #[arg(long)]
    pub normalize: bool,
}

impl RunArgs {
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let pairs: [(&'static str, &Option<String>); 18] = [
            ("method", &self.method),
            ("dataset", &self.dataset),
            ("test-dataset", &self.test_dataset),
            ("synthetic", &self.synthetic),
            ("gamma", &self.gamma),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("precond", &self.precond),
            ("init", &self.init),
            ("floor-e", &self.floor_e),
            ("xi", &self.xi),
            ("iters", &self.iters),
            ("tol", &self.tol),
            ("train-frac", &self.train_frac),
            ("lambda", &self.lambda),
            ("record-every", &self.record_every),
            ("select", &self.select),
            ("seed", &self.seed),
        ];
        for (k, value) in pairs {
            if let Some(value) = value {
                v.push((k, value.clone()));
            }
        }
        if let Some(out) = &self.out {
            v.push(("out", out.display().to_string()));
        }
        if self.normalize {
            v.push(("normalize", "true".into()));
        }
        v
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// props | lemmas | envelopes | oracles | all
    #[arg(default_value = "all")]
    pub suite: Suite,
    /// Run the envelope suite with parameters and bounds built from L/2;
    /// the suite is expected to fail.
    #[arg(long = "halve-l")]
    pub halve_l: bool,
    /// Write check,label,passed,worst_margin,scale,tolerance,items CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
