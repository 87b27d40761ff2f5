use crate::config::{CliConfig, GammaSpec};
use crate::error::{CliError, Status};
use crate::problem::{build_problem, derive_seed, reference_for, Problem};
use precond_momentum::objectives::Objective;
use precond_momentum::optimizers::{
    run_with_test, tune, Method, PrecondConfig, RunConfig, RunReport, StepSize, StopRule, TuneReport,
};
use precond_momentum::Error;
use std::fmt::Write;

/// What a command produced: a CSV body for `--out` (or stdout) and a
/// human-readable report.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub status: Status,
    pub csv: String,
    pub report: String,
}

pub const RUN_HEADER: &str = "iter,f,grad_sq_norm,elapsed_ms,dhat_min,dhat_max";
pub const COMPARE_HEADER: &str = "method,iter,f,grad_sq_norm";
pub const SUMMARY_HEADER: &str = "method,gamma,status,iters_to_tol,iterations,final_f,final_grad_sq_norm,final_subopt";
pub const TUNE_HEADER: &str = "gamma,status,final_f,iterations";

/// Shortest round-trip scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:e}")
    }
}

pub fn run_config(cfg: &CliConfig, method: Method, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(method);
    c.precond = PrecondConfig {
        rule: cfg.rule(),
        initial: cfg.init,
        floor_e: cfg.floor_e,
    };
    c.step = match &cfg.gamma {
        GammaSpec::Fixed(g) => StepSize::Fixed(*g),
        GammaSpec::Theory => StepSize::Theory,
        GammaSpec::Grid(g) => StepSize::Fixed(g[0]),
    };
    c.beta1 = cfg.beta1;
    c.xi = cfg.xi;
    c.iterations = cfg.iters;
    c.stop = StopRule::GradSqNorm(cfg.tol);
    c.record_every = cfg.record_every;
    c.seed = seed;
    c
}

/// Runs one method, tuning the step size first when a grid was given.
fn tuned_run(
    cfg: &CliConfig,
    method: Method,
    seed: u64,
    problem: &Problem,
) -> Result<(RunReport, Option<TuneReport>), Error> {
    let mut c = run_config(cfg, method, seed);
    let tuned = match &cfg.gamma {
        GammaSpec::Grid(grid) => {
            let t = tune(&c, &problem.train, grid, cfg.select)?;
            c.step = StepSize::Fixed(t.best_gamma);
            Some(t)
        }
        _ => None,
    };
    Ok((run_with_test(&c, &problem.train, problem.test_objective())?, tuned))
}

pub fn cmd_run(cfg: &CliConfig) -> Result<Output, CliError> {
    let problem = build_problem(&cfg.problem, cfg.lambda, cfg.seed)?;
    let method = cfg.method();
    let (report, tuned) = tuned_run(cfg, method, derive_seed(cfg.seed, 0), &problem)?;
    let with_test = problem.test.is_some();
    let mut csv = String::from(RUN_HEADER);
    csv.push_str(if with_test { ",test_loss\n" } else { "\n" });
    for r in &report.records {
        write!(
            csv,
            "{},{},{},{:.3},{},{}",
            r.k,
            num(r.f),
            num(r.grad_sq_norm),
            r.elapsed_ms,
            num(r.dhat_min),
            num(r.dhat_max)
        )
        .unwrap();
        if with_test {
            write!(csv, ",{}", r.test_loss.map_or_else(String::new, num)).unwrap();
        }
        csv.push('\n');
    }
    let mut text = format!(
        "method={method} gamma={} iterations={} status={}",
        num(report.params.gamma),
        report.iterations,
        status_name(&report)
    );
    if let Some(t) = tuned {
        write!(text, " tuned_over={}", t.entries.len()).unwrap();
    }
    text.push('\n');
    Ok(Output {
        status: if report.diverged {
            Status::Divergence
        } else {
            Status::Success
        },
        csv,
        report: text,
    })
}

fn status_name(r: &RunReport) -> &'static str {
    if r.diverged {
        "diverged"
    } else if r.converged {
        "converged"
    } else {
        "not-converged"
    }
}

/// Runs every configured method on the one shared objective, concurrently,
/// each with its own derived seed.
pub fn cmd_compare(cfg: &CliConfig) -> Result<Output, CliError> {
    let problem = build_problem(&cfg.problem, cfg.lambda, cfg.seed)?;
    let results: Vec<Result<(RunReport, Option<TuneReport>), Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .methods
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let problem = &problem;
                scope.spawn(move || tuned_run(cfg, m, derive_seed(cfg.seed, i as u64), problem))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("member run panicked"))
            .collect()
    });
    let reference = reference_for(&problem.train).ok();

    let mut csv = format!("{COMPARE_HEADER}\n");
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut any_completed = false;
    for (method, result) in cfg.methods.iter().zip(results) {
        match result {
            Ok((report, _)) => {
                any_completed |= !report.diverged;
                for r in &report.records {
                    writeln!(csv, "{method},{},{},{}", r.k, num(r.f), num(r.grad_sq_norm)).unwrap();
                }
                let last = report.records.last();
                let subopt = match (&reference, report.diverged) {
                    (Some(rf), false) => problem.train.suboptimality(&report.final_x, rf).ok().map(num),
                    _ => None,
                };
                writeln!(
                    summary,
                    "{method},{},{},{},{},{},{},{}",
                    num(report.params.gamma),
                    status_name(&report),
                    report
                        .iterations_to(cfg.tol)
                        .map_or_else(|| "-".into(), |k| k.to_string()),
                    report.iterations,
                    last.map_or_else(|| "-".into(), |r| num(r.f)),
                    last.map_or_else(|| "-".into(), |r| num(r.grad_sq_norm)),
                    subopt.unwrap_or_else(|| "-".into()),
                )
                .unwrap();
            }
            Err(Error::TuningFailure) => {
                writeln!(summary, "{method},-,diverged,-,-,-,-,-").unwrap();
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Output {
        status: if any_completed {
            Status::Success
        } else {
            Status::Divergence
        },
        csv,
        report: summary,
    })
}

pub fn cmd_tune(cfg: &CliConfig) -> Result<Output, CliError> {
    let grid = match &cfg.gamma {
        GammaSpec::Grid(g) => g.clone(),
        GammaSpec::Fixed(g) => vec![*g],
        GammaSpec::Theory => return Err(CliError::Usage("tune needs --gamma grid or grid:a,b,...".into())),
    };
    let problem = build_problem(&cfg.problem, cfg.lambda, cfg.seed)?;
    let c = run_config(cfg, cfg.method(), derive_seed(cfg.seed, 0));
    let t = tune(&c, &problem.train, &grid, cfg.select)?;
    let mut csv = format!("{TUNE_HEADER}\n");
    for e in &t.entries {
        writeln!(
            csv,
            "{},{},{},{}",
            num(e.gamma),
            e.status.name(),
            num(e.final_f),
            e.iterations
        )
        .unwrap();
    }
    Ok(Output {
        status: Status::Success,
        csv,
        report: format!("best gamma = {}\n", num(t.best_gamma)),
    })
}
