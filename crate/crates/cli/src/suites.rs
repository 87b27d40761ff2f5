//! Built-in verification suites on synthetic problems.

use precond_momentum::numerics::DenseVector;
use precond_momentum::objectives::{
    solve_reference, LogisticL2, Objective, ObjectiveConstants, Quadratic, ReferenceSolution,
};
use precond_momentum::optimizers::{pn_theory_params, run, Method, StepSize};
use precond_momentum::preconditioners::{Chaining, Variant};
use precond_momentum::rng::RngStream;
use precond_momentum::verify::{
    check_hb_descent, check_pn_lyapunov, check_prop1, check_prop3, check_rate_envelope, finite_diff_check,
    gaussian_samples, hessian_vec_check, record_phb, record_pn, theory_setup, CheckReport, Target, Theorem,
};
use precond_momentum::{Error, Result};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Props,
    Lemmas,
    Envelopes,
    Oracles,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "props" => Ok(Suite::Props),
            "lemmas" => Ok(Suite::Lemmas),
            "envelopes" => Ok(Suite::Envelopes),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite '{s}' (props, lemmas, envelopes, oracles, all)")),
        }
    }
}

/// One named check. A violated precondition counts as a failure.
#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub label: String,
    pub outcome: std::result::Result<CheckReport, Error>,
}

impl SuiteEntry {
    fn new(label: impl Into<String>, outcome: Result<CheckReport>) -> Self {
        Self {
            label: label.into(),
            outcome,
        }
    }

    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(r) if r.passed)
    }

    pub fn line(&self) -> String {
        match &self.outcome {
            Ok(r) => format!("{} [{}]", r, self.label),
            Err(e) => format!("FAIL {}: {e}", self.label),
        }
    }
}

pub const SMOOTHING: [Variant; 3] = [Variant::Identity, Variant::QuadraticSmoothing, Variant::LinearSmoothing];

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Identity => "identity",
        Variant::AdaGrad => "adagrad",
        Variant::QuadraticSmoothing => "adam",
        Variant::LinearSmoothing => "oasis",
    }
}

/// A rotated quadratic with spectrum in `[1, κ]` and a Gaussian start.
pub fn quadratic_case(d: usize, kappa: f64, seed: u64) -> Result<(Quadratic, ReferenceSolution, DenseVector)> {
    let obj = Quadratic::synthetic(d, kappa, true, seed)?;
    let reference = solve_reference(&obj)?;
    let x0 = reference.x_star.add(&RngStream::new(seed ^ 0x5eed).gaussian_vector(d));
    Ok((obj, reference, x0))
}

pub fn logistic_toys() -> Result<Vec<LogisticL2>> {
    [(200, 10, 1e-2, 11), (400, 5, 1e-3, 12), (100, 20, 1e-1, 13)]
        .into_iter()
        .map(|(n, d, lambda, seed)| LogisticL2::synthetic(n, d, lambda, seed))
        .collect()
}

/// Gradient domination on `f = ½Lx²` (tight) and on logistic toys with
/// 1000 Gaussian probes each.
pub fn gradient_domination() -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    let tight = Quadratic::diagonal(vec![3.0], DenseVector::zeros(1))?;
    let reference = solve_reference(&tight)?;
    let samples: Vec<_> = (0..=20)
        .map(|i| DenseVector::from_vec_unchecked(vec![-5.0 + 0.5 * i as f64]))
        .collect();
    out.push(SuiteEntry::new(
        "f = 1.5 x^2",
        check_prop1(&tight, &reference, &samples),
    ));
    for (i, obj) in logistic_toys()?.iter().enumerate() {
        let reference = solve_reference(obj)?;
        let samples = gaussian_samples(&reference.x_star, &[0.1, 1.0, 10.0], 1000, 100 + i as u64);
        out.push(SuiteEntry::new(
            format!("logistic toy {i}"),
            check_prop1(obj, &reference, &samples),
        ));
    }
    Ok(out)
}

/// Consecutive-ratio bound along Adam- and OASIS-rule trajectories on
/// 5-d quadratics, 100 probes per pair, `C` at observed bounds.
pub fn consecutive_ratio() -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    for (kappa, seed) in [(10.0, 21), (100.0, 22)] {
        let (obj, reference, x0) = quadratic_case(5, kappa, seed)?;
        for variant in [Variant::QuadraticSmoothing, Variant::LinearSmoothing] {
            for target in [Target::HeavyBall { beta1: 0.9 }, Target::Nesterov] {
                let s = theory_setup(&obj, &x0, &reference, variant, target)?;
                let trace = match s.pn {
                    Some(p) => record_pn(&obj, x0.clone(), &s.trace_spec(200), p)?,
                    None => record_phb(&obj, x0.clone(), &s.trace_spec(200), s.gamma, s.beta1)?,
                };
                let label = format!(
                    "{} rule, kappa {kappa}, {} steps",
                    variant_name(variant),
                    if s.pn.is_some() { "pn" } else { "phb" }
                );
                out.push(SuiteEntry::new(label, check_prop3(&trace, 100, seed, None)));
            }
        }
    }
    Ok(out)
}

/// The consecutive-ratio check under each fixed wiring of the smoothing
/// rules, for reporting which one holds. Not part of the pass/fail count.
pub fn chaining_comparison() -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    for (kappa, seed) in [(10.0, 21), (100.0, 22)] {
        let (obj, reference, x0) = quadratic_case(5, kappa, seed)?;
        for variant in [Variant::QuadraticSmoothing, Variant::LinearSmoothing] {
            let s = theory_setup(&obj, &x0, &reference, variant, Target::HeavyBall { beta1: 0.9 })?;
            // the second floor is high enough to bind, so the wirings differ
            for (floor, (name, chaining)) in [s.floor_e, s.bounds.1 / 2.0]
                .into_iter()
                .flat_map(|f| [("unclamped", Chaining::Unclamped), ("clamped", Chaining::Clamped)].map(|c| (f, c)))
            {
                let mut spec = s.trace_spec(200);
                spec.rule = spec.rule.with_chaining(chaining);
                spec.floor_e = floor;
                let outcome = record_phb(&obj, x0.clone(), &spec, s.gamma, s.beta1)
                    .and_then(|trace| check_prop3(&trace, 100, seed, None));
                let label = format!(
                    "{} rule, kappa {kappa}, floor {floor:.3e}, {name} chaining",
                    variant_name(variant)
                );
                out.push(SuiteEntry::new(label, outcome));
            }
        }
    }
    Ok(out)
}

/// Heavy-ball descent inequality with the theoretical step, 200 iterations,
/// `κ ∈ {10, 10³}`.
pub fn heavy_ball_descent() -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    for (kappa, seed) in [(10.0, 31), (1e3, 32)] {
        let (obj, reference, x0) = quadratic_case(10, kappa, seed)?;
        for variant in SMOOTHING {
            for beta1 in [0.0, 0.5, 0.9] {
                let s = theory_setup(&obj, &x0, &reference, variant, Target::HeavyBall { beta1 })?;
                let outcome = record_phb(&obj, x0.clone(), &s.trace_spec(200), s.gamma, s.beta1)
                    .and_then(|t| check_hb_descent(&t, &obj, &reference, (t.observed_min, t.observed_max)));
                let label = format!("{} rule, kappa {kappa}, beta1 {beta1}", variant_name(variant));
                out.push(SuiteEntry::new(label, outcome));
            }
        }
    }
    Ok(out)
}

/// Nesterov Lyapunov contraction with theoretical parameters, 300 iterations.
pub fn nesterov_lyapunov() -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    for (kappa, seed) in [(100.0, 41), (1e3, 42)] {
        let (obj, reference, x0) = quadratic_case(10, kappa, seed)?;
        for variant in SMOOTHING {
            let s = theory_setup(&obj, &x0, &reference, variant, Target::Nesterov)?;
            let outcome = record_pn(&obj, x0.clone(), &s.trace_spec(300), s.pn.expect("nesterov setup"))
                .and_then(|t| check_pn_lyapunov(&t, &obj, &reference, s.bounds));
            out.push(SuiteEntry::new(
                format!("{} rule, kappa {kappa}", variant_name(variant)),
                outcome,
            ));
        }
    }
    Ok(out)
}

/// Nesterov distance envelope over `K ≤ 2000`. With `halve_l`, both the
/// run's parameters and the envelope use `L/2`; this is expected to fail.
pub fn nesterov_envelope(halve_l: bool) -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    for (kappa, seed) in [(1e3, 51), (1e4, 52)] {
        let (obj, reference, x0) = quadratic_case(10, kappa, seed)?;
        let c = obj.constants()?;
        for variant in SMOOTHING {
            let s = theory_setup(&obj, &x0, &reference, variant, Target::Nesterov)?;
            let mut cfg = s.run_config(Method::Pn, 2000, x0.clone(), reference.clone());
            let constants = if halve_l {
                let wrong = ObjectiveConstants::new(c.l / 2.0, c.mu)?;
                let p = pn_theory_params(wrong.l, wrong.mu, s.bounds.0, s.bounds.1)?;
                cfg.step = StepSize::Fixed(p.gamma);
                cfg.xi = Some(p.xi);
                wrong
            } else {
                c
            };
            let label = format!(
                "{} rule, kappa {kappa}{}",
                variant_name(variant),
                if halve_l { ", L halved" } else { "" }
            );
            match run(&cfg, &obj) {
                Ok(mut report) => {
                    // the halved run uses the theoretical formulas, only with the wrong L
                    report.params.theory |= halve_l;
                    for theorem in [Theorem::NesterovDistance, Theorem::NesterovDistanceEuclidean] {
                        let outcome = check_rate_envelope(&report, theorem, constants, s.bounds);
                        out.push(SuiteEntry::new(label.clone(), outcome));
                    }
                }
                Err(e) => out.push(SuiteEntry::new(label, Err(e))),
            }
        }
    }
    Ok(out)
}

/// Heavy-ball weighted-average envelope on a `κ = 100` quadratic.
pub fn heavy_ball_envelope() -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    let (obj, reference, x0) = quadratic_case(10, 100.0, 61)?;
    let c = obj.constants()?;
    for variant in SMOOTHING {
        for beta1 in [0.0, 0.5, 0.9] {
            let s = theory_setup(&obj, &x0, &reference, variant, Target::HeavyBall { beta1 })?;
            let mut cfg = s.run_config(Method::Phb, 2000, x0.clone(), reference.clone());
            cfg.averaging = true;
            let outcome =
                run(&cfg, &obj).and_then(|report| check_rate_envelope(&report, Theorem::HeavyBallAverage, c, s.bounds));
            out.push(SuiteEntry::new(
                format!("{} rule, beta1 {beta1}", variant_name(variant)),
                outcome,
            ));
        }
    }
    Ok(out)
}

/// Finite differences on quadratics and logistic toys at 50 random points
/// each: gradient with `h = 1e−6`, Hessian-vector products with `h = 1e−5`.
pub fn derivative_oracles() -> Result<Vec<SuiteEntry>> {
    let mut objectives: Vec<(String, Box<dyn Objective>)> = Vec::new();
    for (d, kappa, seed) in [(5, 10.0, 71), (20, 1e3, 72)] {
        objectives.push((
            format!("quadratic d={d}"),
            Box::new(Quadratic::synthetic(d, kappa, true, seed)?),
        ));
    }
    for (i, obj) in logistic_toys()?.into_iter().enumerate() {
        objectives.push((format!("logistic toy {i}"), Box::new(obj)));
    }
    let mut out = Vec::new();
    for (j, (name, obj)) in objectives.iter().enumerate() {
        let mut rng = RngStream::new(80 + j as u64);
        let mut grad = Vec::new();
        let mut hv = Vec::new();
        for _ in 0..50 {
            let x = rng.gaussian_vector(obj.dim());
            let v = rng.gaussian_vector(obj.dim());
            grad.push(finite_diff_check(obj.as_ref(), &x, 1e-6, 1e-5)?);
            hv.push(hessian_vec_check(obj.as_ref(), &x, &v, 1e-5, 1e-4)?);
        }
        out.push(SuiteEntry::new(format!("{name}, gradient"), Ok(merge(grad))));
        out.push(SuiteEntry::new(format!("{name}, Hessian-vector"), Ok(merge(hv))));
    }
    Ok(out)
}

/// Concatenates reports of one check kind.
fn merge(reports: Vec<CheckReport>) -> CheckReport {
    let first = reports.first().expect("at least one report").clone();
    let all_passed = reports.iter().all(|r| r.passed);
    let margins = reports.into_iter().flat_map(|r| r.margins).collect();
    let mut merged = CheckReport::new(first.name, margins, first.scale, first.tolerance);
    merged.passed &= all_passed;
    merged
}

pub fn run_suite(suite: Suite, halve_l: bool) -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Props | Suite::All) {
        out.extend(gradient_domination()?);
        out.extend(consecutive_ratio()?);
    }
    if matches!(suite, Suite::Lemmas | Suite::All) {
        out.extend(heavy_ball_descent()?);
        out.extend(nesterov_lyapunov()?);
    }
    if matches!(suite, Suite::Envelopes | Suite::All) {
        out.extend(nesterov_envelope(halve_l)?);
        out.extend(heavy_ball_envelope()?);
    }
    if matches!(suite, Suite::Oracles | Suite::All) {
        out.extend(derivative_oracles()?);
    }
    Ok(out)
}
