use super::trace::{TraceKind, VerifyTrace};
use crate::error::{Error, Result};
use crate::numerics::{DenseVector, DiagMatrix};
use crate::objectives::{Objective, ObjectiveConstants, ReferenceSolution};
use crate::optimizers::RunReport;
use crate::preconditioners::{theory_C, Variant};
use crate::rng::RngStream;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MarginScale {
    /// `bound − observed`
    Absolute,
    /// `(bound − observed) / |bound|`, falling back to absolute when the bound is 0.
    Relative,
}

/// Per-item margins of an inequality; non-negative means it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub margins: Vec<f64>,
    pub worst: f64,
    pub tolerance: f64,
    pub scale: MarginScale,
    pub passed: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, margins: Vec<f64>, scale: MarginScale, tolerance: f64) -> Self {
        let worst = margins.iter().fold(
            f64::INFINITY,
            |w, &m| if m.is_nan() { f64::NEG_INFINITY } else { w.min(m) },
        );
        Self {
            name: name.into(),
            passed: worst >= -tolerance,
            margins,
            worst,
            tolerance,
            scale,
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = match self.scale {
            MarginScale::Absolute => "abs",
            MarginScale::Relative => "rel",
        };
        write!(
            f,
            "{} {}: worst margin {:.3e} ({scale}, tol {:.0e}, {} items)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.margins.len()
        )
    }
}

fn relative_margin(bound: f64, observed: f64) -> f64 {
    let diff = bound - observed;
    if bound != 0.0 {
        diff / bound.abs()
    } else {
        diff
    }
}

fn precondition(ok: bool, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(message()))
    }
}

fn check_within_bounds(trace: &VerifyTrace, e: f64, big_gamma: f64) -> Result<()> {
    precondition(
        trace.observed_min >= e * (1.0 - 1e-12) && trace.observed_max <= big_gamma * (1.0 + 1e-12),
        || {
            format!(
                "scaling range [{}, {}] leaves [e, Gamma] = [{e}, {big_gamma}]",
                trace.observed_min, trace.observed_max
            )
        },
    )
}

/// Every β₂ used by the trace's updates is at least `threshold`.
fn check_beta2(trace: &VerifyTrace, threshold: f64) -> Result<()> {
    for j in 1..trace.dhat.len() {
        let b = trace.rule.beta2.value(j)?;
        precondition(b >= threshold, || {
            format!("beta2 = {b} at update {j} is below {threshold}")
        })?;
    }
    Ok(())
}

fn full_snapshots(trace: &VerifyTrace) -> Result<Vec<&DiagMatrix>> {
    trace.dhat.iter().map(|s| s.full()).collect()
}

/// Gaussian points around `center`, cycling through `radii`.
pub fn gaussian_samples(center: &DenseVector, radii: &[f64], count: usize, seed: u64) -> Vec<DenseVector> {
    let mut rng = RngStream::new(seed);
    (0..count)
        .map(|i| center.lincomb(1.0, &rng.gaussian_vector(center.len()), radii[i % radii.len()]))
        .collect()
}

/// `‖∇f(x)‖² ≤ 2L(f(x) − f*)`, absolute tolerance 1e−9.
pub fn check_prop1(obj: &dyn Objective, reference: &ReferenceSolution, samples: &[DenseVector]) -> Result<CheckReport> {
    let l = obj.constants()?.l;
    let margins = samples
        .iter()
        .map(|x| Ok(2.0 * l * obj.suboptimality(x, reference)? - obj.grad(x)?.norm_sq()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::new(
        "gradient domination",
        margins,
        MarginScale::Absolute,
        1e-9,
    ))
}

/// `‖x‖²_{D̂_{k+1}} ≤ (1 + (1−β₂)C)‖x‖²_{D̂_k}` for every consecutive pair
/// and `probes` Gaussian vectors. `C` is taken at `bounds`, or at the
/// trace's observed range when `None`.
pub fn check_prop3(trace: &VerifyTrace, probes: usize, seed: u64, bounds: Option<(f64, f64)>) -> Result<CheckReport> {
    let (e, big_gamma) = bounds.unwrap_or((trace.observed_min, trace.observed_max));
    let c = theory_C(trace.rule.variant, e, big_gamma)
        .ok_or_else(|| Error::NotApplicable("the AdaGrad rule has no consecutive-ratio bound".into()))?;
    let snaps = full_snapshots(trace)?;
    let d = snaps.first().map_or(0, |s| s.len());
    let probe_vectors = gaussian_samples(&DenseVector::zeros(d), &[1.0], probes, seed);
    let mut margins = Vec::with_capacity(probes * snaps.len().saturating_sub(1));
    for j in 0..snaps.len().saturating_sub(1) {
        let beta2 = match trace.rule.variant {
            Variant::Identity => 1.0,
            _ => trace.rule.beta2.value(j + 1)?,
        };
        let factor = 1.0 + (1.0 - beta2) * c;
        for x in &probe_vectors {
            margins.push(relative_margin(factor * snaps[j].norm_sq(x), snaps[j + 1].norm_sq(x)));
        }
    }
    Ok(CheckReport::new(
        "consecutive scaling ratio",
        margins,
        MarginScale::Relative,
        1e-12,
    ))
}

/// Per-step margin of the heavy-ball descent inequality along the virtual
/// sequence `x̃_k`:
/// `(1−μF/4Γ)‖x̃_k−x*‖²_{D̂_{k−1}} − ‖x̃_{k+1}−x*‖²_{D̂_k} + (3LF/e)‖x_k−x̃_k‖²_{D̂_k} − (F/2)(f(x_k)−f*)`.
pub fn check_hb_descent(
    trace: &VerifyTrace,
    obj: &dyn Objective,
    reference: &ReferenceSolution,
    bounds: (f64, f64),
) -> Result<CheckReport> {
    let TraceKind::Phb { gamma, beta1 } = trace.kind else {
        return Err(Error::NotApplicable("descent check needs a heavy-ball trace".into()));
    };
    let (e, big_gamma) = bounds;
    let ObjectiveConstants { l, mu } = obj.constants()?;
    let big_f = gamma / (1.0 - beta1);
    precondition(big_f <= e / (4.0 * l) * (1.0 + 1e-12), || {
        format!("F = {big_f} exceeds e/(4L) = {}", e / (4.0 * l))
    })?;
    check_within_bounds(trace, e, big_gamma)?;
    match trace.rule.variant {
        Variant::Identity => {}
        Variant::AdaGrad => return Err(Error::NotApplicable("AdaGrad rule".into())),
        v => {
            let c = theory_C(v, e, big_gamma).expect("smoothing rules have C");
            check_beta2(trace, 1.0 - mu * big_f / (4.0 * big_gamma * c))?;
        }
    }
    let snaps = full_snapshots(trace)?;
    let xt = trace.virtual_sequence()?;
    let contraction = 1.0 - mu * big_f / (4.0 * big_gamma);
    let mut margins = Vec::with_capacity(trace.len());
    for k in 0..trace.len().saturating_sub(1) {
        let a = contraction * snaps[k].norm_sq(&xt[k].sub(&reference.x_star));
        let b = snaps[k + 1].norm_sq(&xt[k + 1].sub(&reference.x_star));
        let c = 3.0 * l * big_f / e * snaps[k + 1].norm_sq(&trace.x[k].sub(&xt[k]));
        let s = 0.5 * big_f * obj.suboptimality(&trace.x[k], reference)?;
        margins.push(a - b + c - s);
    }
    Ok(CheckReport::new(
        "heavy-ball descent",
        margins,
        MarginScale::Absolute,
        1e-9,
    ))
}

/// `Ψ_k = ‖x^k − x*‖²_{D̂_{k−1}} + 2γξ²(f(x_f^k) − f*)` along a Nesterov trace.
pub fn lyapunov_values(trace: &VerifyTrace, obj: &dyn Objective, reference: &ReferenceSolution) -> Result<Vec<f64>> {
    let TraceKind::Pn(p) = trace.kind else {
        return Err(Error::NotApplicable("Lyapunov values need a Nesterov trace".into()));
    };
    let snaps = full_snapshots(trace)?;
    (0..trace.len())
        .map(|k| {
            Ok(snaps[k].norm_sq(&trace.x[k].sub(&reference.x_star))
                + 2.0 * p.gamma * p.xi * p.xi * obj.suboptimality(&trace.x_f[k], reference)?)
        })
        .collect()
}

/// `Ψ_{k+1} ≤ (1 − 1/ξ)Ψ_k` with a fixed identity scaling, or
/// `Ψ_{k+1} ≤ (1 − 1/(2ξ))Ψ_k` with an updating one.
///
/// Margins are relative, so traces should stop before `Ψ` reaches
/// rounding level (about `ε²‖x*‖²`), where the ratio is noise.
pub fn check_pn_lyapunov(
    trace: &VerifyTrace,
    obj: &dyn Objective,
    reference: &ReferenceSolution,
    bounds: (f64, f64),
) -> Result<CheckReport> {
    let TraceKind::Pn(p) = trace.kind else {
        return Err(Error::NotApplicable("Lyapunov check needs a Nesterov trace".into()));
    };
    let (e, big_gamma) = bounds;
    let ObjectiveConstants { l, mu } = obj.constants()?;
    precondition(p.xi >= 1.0, || format!("xi = {} < 1", p.xi))?;
    precondition(p.xi * p.xi * p.gamma * mu / big_gamma >= 1.0 - 1e-12, || {
        format!("xi^2 gamma mu / Gamma = {} < 1", p.xi * p.xi * p.gamma * mu / big_gamma)
    })?;
    precondition(p.gamma <= e / l * (1.0 + 1e-12), || {
        format!("gamma = {} exceeds e/L = {}", p.gamma, e / l)
    })?;
    precondition((p.theta - p.xi / (1.0 + p.xi)).abs() <= 1e-12, || {
        format!("theta = {} differs from xi/(1+xi)", p.theta)
    })?;
    check_within_bounds(trace, e, big_gamma)?;
    let factor = match trace.rule.variant {
        Variant::Identity => 1.0 - 1.0 / p.xi,
        Variant::AdaGrad => return Err(Error::NotApplicable("AdaGrad rule".into())),
        v => {
            let c = theory_C(v, e, big_gamma).expect("smoothing rules have C");
            check_beta2(trace, 1.0 - (mu * e / (l * big_gamma)).sqrt() / (2.0 * c))?;
            1.0 - 1.0 / (2.0 * p.xi)
        }
    };
    let psi = lyapunov_values(trace, obj, reference)?;
    let margins = psi.windows(2).map(|w| relative_margin(factor * w[0], w[1])).collect();
    Ok(CheckReport::new(
        "Nesterov Lyapunov contraction",
        margins,
        MarginScale::Relative,
        1e-9,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// Heavy-ball, weighted-average output: `4 exp(−(1−β₁)μeK/(48LΓ)) L ‖x₀−x*‖²_{D̂_{−1}}`.
    HeavyBallAverage,
    /// Nesterov, distance: `exp(−K√(μe/(4LΓ))) [‖x₀−x*‖²_{D̂_{−1}} + (2Γ/μ)(f(x₀)−f*)]`.
    NesterovDistance,
    /// The same bound in the Euclidean norm, from `e‖z‖² ≤ ‖z‖²_{D̂} ≤ Γ‖z‖²`:
    /// `exp(−K√(μe/(4LΓ))) [Γ‖x₀−x*‖² + (2Γ/μ)(f(x₀)−f*)] / e`.
    NesterovDistanceEuclidean,
}

/// Checks every recorded iteration of a theory-parameter run against the
/// convergence envelope evaluated with the supplied constants and bounds.
pub fn check_rate_envelope(
    report: &RunReport,
    theorem: Theorem,
    constants: ObjectiveConstants,
    bounds: (f64, f64),
) -> Result<CheckReport> {
    if !report.params.theory {
        return Err(Error::NotApplicable("run did not use theoretical parameters".into()));
    }
    let first = report
        .records
        .first()
        .ok_or_else(|| Error::NotApplicable("empty run".into()))?;
    let (Some(d0), Some(s0)) = (first.dist_sq, first.suboptimality) else {
        return Err(Error::NotApplicable(
            "run was recorded without a reference solution".into(),
        ));
    };
    let ObjectiveConstants { l, mu } = constants;
    let (e, big_gamma) = bounds;
    let mut margins = Vec::with_capacity(report.records.len());
    match theorem {
        Theorem::NesterovDistance => {
            if !report.method.is_nesterov() {
                return Err(Error::NotApplicable("distance envelope is for Nesterov runs".into()));
            }
            let rate = (mu * e / (4.0 * l * big_gamma)).sqrt();
            let start = d0 + 2.0 * big_gamma / mu * s0;
            for r in &report.records {
                let bound = (-(r.k as f64) * rate).exp() * start;
                margins.push(relative_margin(bound, r.dist_sq.unwrap_or(f64::NAN)));
            }
            Ok(CheckReport::new(
                "Nesterov distance envelope",
                margins,
                MarginScale::Relative,
                1e-6,
            ))
        }
        Theorem::NesterovDistanceEuclidean => {
            if !report.method.is_nesterov() {
                return Err(Error::NotApplicable("distance envelope is for Nesterov runs".into()));
            }
            let Some(x0_sq) = first.euclidean_dist_sq else {
                return Err(Error::NotApplicable(
                    "run was recorded without a reference solution".into(),
                ));
            };
            // e‖z‖² ≤ ‖z‖²_D̂ ≤ Γ‖z‖² on both ends of the distance bound
            let rate = (mu * e / (4.0 * l * big_gamma)).sqrt();
            let start = (big_gamma * x0_sq + 2.0 * big_gamma / mu * s0) / e;
            for r in &report.records {
                let bound = (-(r.k as f64) * rate).exp() * start;
                margins.push(relative_margin(bound, r.euclidean_dist_sq.unwrap_or(f64::NAN)));
            }
            Ok(CheckReport::new(
                "Nesterov distance envelope (Euclidean)",
                margins,
                MarginScale::Relative,
                1e-6,
            ))
        }
        Theorem::HeavyBallAverage => {
            if report.method.is_nesterov() {
                return Err(Error::NotApplicable("average envelope is for heavy-ball runs".into()));
            }
            let beta1 = report.params.beta1;
            for r in report.records.iter().filter(|r| r.k >= 1) {
                let bound = 4.0 * (-(1.0 - beta1) * mu * e * r.k as f64 / (48.0 * l * big_gamma)).exp() * l * d0;
                let observed = r
                    .averaged_suboptimality
                    .ok_or_else(|| Error::NotApplicable("run was recorded without weighted averaging".into()))?;
                margins.push(relative_margin(bound, observed));
            }
            Ok(CheckReport::new(
                "heavy-ball average envelope",
                margins,
                MarginScale::Relative,
                1e-6,
            ))
        }
    }
}

fn fd_errors(fd: &DenseVector, exact: &DenseVector, tol: f64) -> (Vec<f64>, MarginScale, f64) {
    let scale = exact.max_abs();
    if scale < 1e-8 {
        let m = fd.iter().zip(exact.iter()).map(|(a, b)| -(a - b).abs()).collect();
        (m, MarginScale::Absolute, 1e-8)
    } else {
        let m = fd
            .iter()
            .zip(exact.iter())
            .map(|(a, b)| -(a - b).abs() / scale)
            .collect();
        (m, MarginScale::Relative, tol)
    }
}

/// Central differences against the analytic gradient. Error per coordinate
/// is `|fd_i − g_i| / ‖g‖_∞`, or absolute (tolerance 1e−8) when `‖g‖_∞ < 1e−8`.
pub fn finite_diff_check(obj: &dyn Objective, x: &DenseVector, h: f64, tol: f64) -> Result<CheckReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("step must be > 0, got {h}")));
    }
    let g = obj.grad(x)?;
    let mut fd = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let e = DenseVector::basis(x.len(), i);
        fd.push((obj.eval(&x.lincomb(1.0, &e, h))? - obj.eval(&x.lincomb(1.0, &e, -h))?) / (2.0 * h));
    }
    let (margins, scale, tol) = fd_errors(&DenseVector::from_vec_unchecked(fd), &g, tol);
    Ok(CheckReport::new("finite-difference gradient", margins, scale, tol))
}

/// `(∇f(x+hv) − ∇f(x−hv)) / (2h)` against the analytic Hessian-vector product.
pub fn hessian_vec_check(
    obj: &dyn Objective,
    x: &DenseVector,
    v: &DenseVector,
    h: f64,
    tol: f64,
) -> Result<CheckReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("step must be > 0, got {h}")));
    }
    let hv = obj.hessian_vec(x, v)?;
    let fd = obj
        .grad(&x.lincomb(1.0, v, h))?
        .sub(&obj.grad(&x.lincomb(1.0, v, -h))?)
        .scaled(1.0 / (2.0 * h));
    let (margins, scale, tol) = fd_errors(&fd, &hv, tol);
    Ok(CheckReport::new(
        "finite-difference Hessian-vector",
        margins,
        scale,
        tol,
    ))
}
