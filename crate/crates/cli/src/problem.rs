use crate::config::ProblemSpec;
use crate::error::CliError;
use precond_momentum::dataio::{load_libsvm, split, Dataset};
use precond_momentum::objectives::{
    solve_reference, LogisticL2, Objective, ObjectiveProblem, Quadratic, ReferenceCache, ReferenceSolution,
};
use precond_momentum::rng::RngStream;

/// Stream indices under the master seed. Compare and tune members use
/// their position in the member list.
pub const SPLIT_STREAM: u64 = 1 << 32;
pub const PROBLEM_STREAM: u64 = (1 << 32) + 1;

/// A seed for stream `index` derived from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    RngStream::derived(master, index).next_u64()
}

pub struct Problem {
    pub train: ObjectiveProblem,
    /// Unregularized loss on the held-out rows.
    pub test: Option<LogisticL2>,
}

impl Problem {
    pub fn test_objective(&self) -> Option<&dyn Objective> {
        self.test.as_ref().map(|t| t as &dyn Objective)
    }
}

fn load(path: &std::path::Path, min_dim: usize) -> Result<Dataset, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("cannot read dataset {}", path.display())));
    }
    Ok(load_libsvm(path, min_dim)?)
}

pub fn build_problem(spec: &ProblemSpec, lambda: f64, seed: u64) -> Result<Problem, CliError> {
    let synthetic_seed = |s: Option<u64>| s.unwrap_or_else(|| derive_seed(seed, PROBLEM_STREAM));
    match spec {
        ProblemSpec::Quadratic {
            d,
            kappa,
            rotate,
            seed: s,
        } => Ok(Problem {
            train: Quadratic::synthetic(*d, *kappa, *rotate, synthetic_seed(*s))?.into(),
            test: None,
        }),
        ProblemSpec::Logistic { n, d, seed: s } => Ok(Problem {
            train: LogisticL2::synthetic(*n, *d, lambda, synthetic_seed(*s))?.into(),
            test: None,
        }),
        ProblemSpec::Dataset {
            path,
            test_path,
            train_frac,
            normalize,
        } => {
            let full = load(path, 0)?;
            let (mut train, mut test) = match (test_path, train_frac) {
                (Some(tp), _) => {
                    let test = load(tp, full.d())?;
                    let d = test.d();
                    (full.with_dim(d), Some(test))
                }
                (None, Some(frac)) => {
                    let (a, b) = split(&full, *frac, derive_seed(seed, SPLIT_STREAM))?;
                    (a, Some(b))
                }
                (None, None) => (full, None),
            };
            if *normalize {
                let scale = train.column_max_abs();
                train = train.scaled_columns(&scale)?;
                test = test.map(|t| t.scaled_columns(&scale)).transpose()?;
            }
            Ok(Problem {
                train: train.to_logistic(lambda)?.into(),
                test: test.filter(|t| t.n() > 0).map(|t| t.to_logistic(0.0)).transpose()?,
            })
        }
    }
}

/// Reference solution, through the on-disk cache when one is configured.
pub fn reference_for(obj: &dyn Objective) -> Result<ReferenceSolution, CliError> {
    Ok(match ReferenceCache::from_env() {
        Some(cache) => cache.solve(obj)?,
        None => solve_reference(obj)?,
    })
}
