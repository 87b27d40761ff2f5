//! Numerical checks of the inequalities behind the convergence guarantees,
//! evaluated along recorded trajectories.

mod checks;
mod setups;
mod trace;

pub use checks::{
    check_hb_descent, check_pn_lyapunov, check_prop1, check_prop3, check_rate_envelope, finite_diff_check,
    gaussian_samples, hessian_vec_check, lyapunov_values, CheckReport, MarginScale, Theorem,
};
pub use setups::{theory_setup, Target, TheorySetup};
pub use trace::{record_phb, record_pn, Snapshot, TraceKind, TraceSpec, VerifyTrace, FULL_SNAPSHOT_MAX_DIM};
