//! Run configuration assembled from a key/value file and command-line flags.
//!
//! File format: one `key = value` per line, `#` starts a comment. Keys are
//! the long flag names without dashes (`floor-e`, `train-frac`, ...).
//! Flags override file entries.

use crate::error::CliError;
use precond_momentum::optimizers::{default_grid, Method, Selection};
use precond_momentum::preconditioners::{Beta2Schedule, InitialScaling, PrecondRule, DEFAULT_FLOOR_E};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const KEYS: &[&str] = &[
    "method",
    "dataset",
    "test-dataset",
    "synthetic",
    "gamma",
    "beta1",
    "beta2",
    "precond",
    "init",
    "floor-e",
    "xi",
    "iters",
    "tol",
    "train-frac",
    "lambda",
    "record-every",
    "select",
    "seed",
    "out",
    "normalize",
];

pub const DEFAULT_COMPARE_METHODS: [Method; 4] = [Method::HeavyBall, Method::Phb, Method::Nesterov, Method::Pn];

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Dataset {
        path: PathBuf,
        test_path: Option<PathBuf>,
        /// `None` keeps every row for training.
        train_frac: Option<f64>,
        normalize: bool,
    },
    Quadratic {
        d: usize,
        kappa: f64,
        rotate: bool,
        seed: Option<u64>,
    },
    Logistic {
        n: usize,
        d: usize,
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaSpec {
    Fixed(f64),
    Theory,
    Grid(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta2Spec {
    Fixed(f64),
    /// `1 − 1/k`
    InverseK,
    /// `1 − 1/K` with `K` the iteration budget.
    InverseHorizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub methods: Vec<Method>,
    pub problem: ProblemSpec,
    pub gamma: GammaSpec,
    pub beta1: f64,
    pub beta2: Beta2Spec,
    pub precond: String,
    pub init: InitialScaling,
    pub floor_e: f64,
    pub xi: Option<f64>,
    pub iters: usize,
    pub tol: f64,
    pub lambda: f64,
    pub record_every: usize,
    pub select: Selection,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl CliConfig {
    pub fn method(&self) -> Method {
        self.methods[0]
    }

    pub fn rule(&self) -> PrecondRule {
        let beta2 = match self.beta2 {
            Beta2Spec::Fixed(b) => Beta2Schedule::Fixed(b),
            Beta2Spec::InverseK => Beta2Schedule::InverseK,
            Beta2Spec::InverseHorizon => Beta2Schedule::InverseHorizon(self.iters),
        };
        match self.precond.as_str() {
            "identity" => PrecondRule::identity(),
            "adagrad" => PrecondRule::adagrad(),
            "oasis" => PrecondRule::oasis(beta2),
            _ => PrecondRule::adam(beta2),
        }
    }
}

/// Parses `key = value` lines.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("--{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!(
            "--{key}: expected true or false, got '{value}'"
        ))),
    }
}

/// `quad:d=10,kappa=100[,rotate=0][,seed=3]` or `logistic:n=200,d=10[,seed=3]`.
pub fn parse_synthetic(spec: &str) -> Result<ProblemSpec, CliError> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut fields = BTreeMap::new();
    for part in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--synthetic: expected name=value, got '{part}'")))?;
        fields.insert(k.trim(), v.trim());
    }
    let get = |name: &str| fields.get(name).copied();
    let required =
        |name: &str| get(name).ok_or_else(|| CliError::Usage(format!("--synthetic {kind}: missing '{name}'")));
    let seed = get("seed").map(|s| parse_num("synthetic", s)).transpose()?;
    let allowed: &[&str] = match kind {
        "quad" => &["d", "kappa", "rotate", "seed"],
        "logistic" => &["n", "d", "seed"],
        _ => {
            return Err(CliError::Usage(format!(
                "--synthetic: unknown kind '{kind}' (quad or logistic)"
            )))
        }
    };
    if let Some(k) = fields.keys().find(|k| !allowed.contains(k)) {
        return Err(CliError::Usage(format!("--synthetic {kind}: unknown field '{k}'")));
    }
    match kind {
        "quad" => Ok(ProblemSpec::Quadratic {
            d: parse_num("synthetic", required("d")?)?,
            kappa: parse_num("synthetic", required("kappa")?)?,
            rotate: get("rotate")
                .map(|r| parse_bool("synthetic", r))
                .transpose()?
                .unwrap_or(true),
            seed,
        }),
        _ => Ok(ProblemSpec::Logistic {
            n: parse_num("synthetic", required("n")?)?,
            d: parse_num("synthetic", required("d")?)?,
            seed,
        }),
    }
}

/// `theory`, `grid` (powers of two from 2^−20 to 1), `grid:a,b,c`, or a number.
pub fn parse_gamma(value: &str) -> Result<GammaSpec, CliError> {
    match value {
        "theory" => Ok(GammaSpec::Theory),
        "grid" => Ok(GammaSpec::Grid(default_grid())),
        _ => {
            if let Some(list) = value.strip_prefix("grid:") {
                let grid = list
                    .split(',')
                    .map(|g| parse_num("gamma", g.trim()))
                    .collect::<Result<Vec<f64>, _>>()?;
                if grid.is_empty() || grid.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
                    return Err(CliError::Usage(format!(
                        "--gamma: grid entries must be > 0, got '{list}'"
                    )));
                }
                Ok(GammaSpec::Grid(grid))
            } else {
                Ok(GammaSpec::Fixed(parse_num("gamma", value)?))
            }
        }
    }
}

fn parse_beta2(value: &str) -> Result<Beta2Spec, CliError> {
    match value {
        "1-k" => Ok(Beta2Spec::InverseK),
        "1-K" => Ok(Beta2Spec::InverseHorizon),
        _ => Ok(Beta2Spec::Fixed(parse_num("beta2", value)?)),
    }
}

fn parse_init(value: &str) -> Result<InitialScaling, CliError> {
    match value {
        "identity" => Ok(InitialScaling::Identity),
        "first" => Ok(InitialScaling::FirstInformation),
        _ => Ok(InitialScaling::Constant(parse_num("init", value)?)),
    }
}

/// Builds the configuration. `compare` allows several comma-separated
/// methods and defaults to the four momentum methods.
pub fn build_config(map: &BTreeMap<String, String>, compare: bool) -> Result<CliConfig, CliError> {
    let get = |k: &str| map.get(k).map(String::as_str);
    let methods = match get("method") {
        Some(list) => list
            .split(',')
            .map(|m| m.trim().parse::<Method>().map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?,
        None if compare => DEFAULT_COMPARE_METHODS.to_vec(),
        None => vec![Method::Phb],
    };
    if methods.is_empty() || (!compare && methods.len() > 1) {
        return Err(CliError::Usage("exactly one --method is accepted here".into()));
    }
    let normalize = get("normalize")
        .map(|v| parse_bool("normalize", v))
        .transpose()?
        .unwrap_or(false);
    let problem = match (get("dataset"), get("synthetic")) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --dataset or --synthetic, not both".into())),
        (Some(path), None) => {
            let test_path = get("test-dataset").map(PathBuf::from);
            let train_frac = match get("train-frac") {
                Some(v) => parse_num::<f64>("train-frac", v)?,
                None if test_path.is_some() => 1.0,
                None => 0.8,
            };
            if !(train_frac > 0.0 && train_frac <= 1.0) {
                return Err(CliError::Usage(format!(
                    "--train-frac must lie in (0, 1], got {train_frac}"
                )));
            }
            if test_path.is_some() && train_frac < 1.0 {
                return Err(CliError::Usage(
                    "--train-frac cannot be combined with --test-dataset".into(),
                ));
            }
            ProblemSpec::Dataset {
                path: PathBuf::from(path),
                test_path,
                train_frac: (train_frac < 1.0).then_some(train_frac),
                normalize,
            }
        }
        (None, Some(spec)) => parse_synthetic(spec)?,
        (None, None) => return Err(CliError::Usage("one of --dataset or --synthetic is required".into())),
    };
    let precond = get("precond").unwrap_or("adam").to_string();
    if !["identity", "adagrad", "adam", "oasis"].contains(&precond.as_str()) {
        return Err(CliError::Usage(format!(
            "--precond: expected identity, adagrad, adam or oasis, got '{precond}'"
        )));
    }
    let select = match get("select").unwrap_or("loss") {
        "loss" => Selection::LowestFinalLoss,
        "iters" => Selection::FewestIterations,
        other => {
            return Err(CliError::Usage(format!(
                "--select: expected loss or iters, got '{other}'"
            )))
        }
    };
    Ok(CliConfig {
        methods,
        problem,
        gamma: get("gamma")
            .map(parse_gamma)
            .transpose()?
            .unwrap_or(GammaSpec::Fixed(1e-2)),
        beta1: get("beta1").map(|v| parse_num("beta1", v)).transpose()?.unwrap_or(0.9),
        beta2: get("beta2")
            .map(parse_beta2)
            .transpose()?
            .unwrap_or(Beta2Spec::Fixed(0.999)),
        precond,
        init: get("init")
            .map(parse_init)
            .transpose()?
            .unwrap_or(InitialScaling::FirstInformation),
        floor_e: get("floor-e")
            .map(|v| parse_num("floor-e", v))
            .transpose()?
            .unwrap_or(DEFAULT_FLOOR_E),
        xi: get("xi").map(|v| parse_num("xi", v)).transpose()?,
        iters: get("iters").map(|v| parse_num("iters", v)).transpose()?.unwrap_or(1000),
        tol: get("tol").map(|v| parse_num("tol", v)).transpose()?.unwrap_or(0.0),
        lambda: get("lambda")
            .map(|v| parse_num("lambda", v))
            .transpose()?
            .unwrap_or(1e-3),
        record_every: get("record-every")
            .map(|v| parse_num("record-every", v))
            .transpose()?
            .unwrap_or(1),
        select,
        seed: get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0),
        out: get("out").map(PathBuf::from),
    })
}
