use super::run::{run_with_test, RunConfig, StepSize};
use crate::error::{Error, Result};
use crate::objectives::Objective;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TuneStatus {
    Converged,
    NotConverged,
    Diverged,
}

impl TuneStatus {
    pub fn name(&self) -> &'static str {
        match self {
            TuneStatus::Converged => "converged",
            TuneStatus::NotConverged => "not-converged",
            TuneStatus::Diverged => "diverged",
        }
    }
}

/// How the winning step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    /// Lowest final objective value.
    LowestFinalLoss,
    /// Fewest iterations to the stopping rule among converged runs, then
    /// lowest final objective value.
    FewestIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneEntry {
    pub gamma: f64,
    pub final_f: f64,
    pub iterations: usize,
    pub status: TuneStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    /// Sorted by increasing step size.
    pub entries: Vec<TuneEntry>,
    pub best_gamma: f64,
}

impl TuneReport {
    pub fn best(&self) -> &TuneEntry {
        self.entries
            .iter()
            .find(|e| e.gamma == self.best_gamma)
            .expect("best entry present")
    }
}

/// `{2^−20, …, 2^0}`
pub fn default_grid() -> Vec<f64> {
    (-20..=0).map(|p| 2f64.powi(p)).collect()
}

/// Runs every step size in `grid` for the configured budget and picks the
/// best. Ties go to the smaller step size.
///
/// With `FewestIterations`, a run is cut off at the smallest iteration
/// count reached so far by a converged run, since it can no longer win;
/// such a run is reported as not converged.
pub fn tune(config: &RunConfig, obj: &dyn Objective, grid: &[f64], selection: Selection) -> Result<TuneReport> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("step-size grid is empty".into()));
    }
    let mut gammas = grid.to_vec();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let mut entries = Vec::with_capacity(gammas.len());
    let mut cap = config.iterations;
    // largest steps first, so that the iteration cap tightens early
    for &gamma in gammas.iter().rev() {
        let mut c = config.clone();
        c.step = StepSize::Fixed(gamma);
        c.iterations = cap;
        let report = run_with_test(&c, obj, None)?;
        let status = if report.diverged {
            TuneStatus::Diverged
        } else if report.converged {
            TuneStatus::Converged
        } else {
            TuneStatus::NotConverged
        };
        if selection == Selection::FewestIterations && status == TuneStatus::Converged {
            cap = cap.min(report.iterations);
        }
        entries.push(TuneEntry {
            gamma,
            final_f: report.final_f().unwrap_or(f64::INFINITY),
            iterations: report.iterations,
            status,
        });
    }
    entries.reverse();
    let usable = entries.iter().filter(|e| e.status != TuneStatus::Diverged);
    let best = match selection {
        Selection::LowestFinalLoss => usable.fold(None::<&TuneEntry>, |best, e| match best {
            Some(b) if b.final_f <= e.final_f => Some(b),
            _ => Some(e),
        }),
        Selection::FewestIterations => {
            let key = |e: &TuneEntry| (e.status != TuneStatus::Converged, e.iterations);
            usable.fold(None::<&TuneEntry>, |best, e| match best {
                Some(b) if key(b) < key(e) || (key(b) == key(e) && b.final_f <= e.final_f) => Some(b),
                _ => Some(e),
            })
        }
    }
    .ok_or(Error::TuningFailure)?;
    let best_gamma = best.gamma;
    Ok(TuneReport { entries, best_gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseVector;
    use crate::objectives::Quadratic;
    use crate::optimizers::{Method, StopRule};

    fn gd_config() -> RunConfig {
        let mut c = RunConfig::new(Method::Gd);
        c.x0 = Some(DenseVector::new(vec![1.0]).unwrap());
        c.iterations = 100;
        c.stop = StopRule::GradSqNorm(1e-12);
        c
    }

    #[test]
    fn unit_curvature_selects_unit_step() {
        let obj = Quadratic::identity(1);
        let r = tune(&gd_config(), &obj, &[0.5, 1.0, 2.0], Selection::LowestFinalLoss).unwrap();
        assert_eq!(r.best_gamma, 1.0);
        assert_eq!(r.best().status, TuneStatus::Converged);
    }

    #[test]
    fn stability_boundary_is_not_convergent() {
        let obj = Quadratic::identity(1);
        let r = tune(&gd_config(), &obj, &[2.0], Selection::LowestFinalLoss).unwrap();
        assert_eq!(r.entries[0].status, TuneStatus::NotConverged);
        assert_eq!(r.entries[0].final_f, 0.5);
    }

    #[test]
    fn all_diverged_is_failure() {
        let obj = Quadratic::identity(1);
        let mut c = gd_config();
        c.iterations = 2000;
        assert_eq!(
            tune(&c, &obj, &[1e160, 1e170], Selection::LowestFinalLoss),
            Err(Error::TuningFailure)
        );
    }

    #[test]
    fn ties_go_to_smaller_step() {
        // both steps land exactly on zero loss
        let obj = Quadratic::identity(1);
        let mut c = gd_config();
        c.stop = StopRule::GradSqNorm(0.0);
        c.iterations = 3;
        c.x0 = Some(DenseVector::new(vec![0.0]).unwrap());
        let r = tune(&c, &obj, &[1.0, 0.25], Selection::LowestFinalLoss).unwrap();
        assert_eq!(r.best_gamma, 0.25);
    }

    #[test]
    fn fewest_iterations_selection() {
        let obj = Quadratic::identity(1);
        let r = tune(&gd_config(), &obj, &default_grid(), Selection::FewestIterations).unwrap();
        assert_eq!(r.best_gamma, 1.0);
        assert_eq!(r.entries.len(), 21);
    }

    #[test]
    fn capped_search_matches_exhaustive_selection() {
        let obj = Quadratic::synthetic(6, 40.0, true, 3).unwrap();
        let mut c = RunConfig::new(Method::Phb);
        c.x0 = Some(DenseVector::filled(6, 1.0));
        c.iterations = 3000;
        c.stop = StopRule::GradSqNorm(1e-8);
        let grid = default_grid();
        let r = tune(&c, &obj, &grid, Selection::FewestIterations).unwrap();
        let mut best: Option<(usize, f64, f64)> = None;
        for &g in &grid {
            let mut cg = c.clone();
            cg.step = StepSize::Fixed(g);
            let rep = run_with_test(&cg, &obj, None).unwrap();
            if rep.converged
                && best
                    .is_none_or(|(k, f, _)| rep.iterations < k || (rep.iterations == k && rep.final_f().unwrap() < f))
            {
                best = Some((rep.iterations, rep.final_f().unwrap(), g));
            }
        }
        let (k, _, g) = best.unwrap();
        assert_eq!(r.best_gamma, g);
        assert_eq!(r.best().iterations, k);
    }
}
