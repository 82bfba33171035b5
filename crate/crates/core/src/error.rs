//! Error type shared by the numeric modules.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error<F: Real> {
    #[error("underdamped oscillator required: zeta = {zeta} is outside [0, 1)")]
    NotUnderdamped { zeta: F },

    #[error("undamped resonant forcing (zeta = 0, omega_f = omega_n) has no bounded steady state")]
    ResonantForcing,

    #[error("config field `{field}` invalid: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("no local minimum of the boundary clearance in the search bracket")]
    NoLocalMinimum,

    #[error("state does not penetrate the boundary (H_min = {h_min} > 0), no correction applies")]
    NonPenetrating { h_min: F },

    #[error("discontinuity-map Jacobian is singular exactly at grazing (H_min = 0)")]
    SingularAtGrazing,

    #[error("degenerate grazing: normal acceleration {a_star} is not strictly positive")]
    DegenerateGrazing { a_star: F },

    #[error("chatter detected: {count} impacts within one forcing period (budget {budget})")]
    ChatterDetected { count: usize, budget: usize },

    #[error("fixed-point search did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: F },

    #[error("fixed-point iterates straddle the impacting/non-impacting border (last iterate ({last_u}, {last_v}))")]
    BorderStraddle { last_u: F, last_v: F },

    #[error("finite-difference probe crosses the impacting/non-impacting border even after {retries} step reductions")]
    StepTooLarge { retries: u32 },

    #[error("exponent fit needs >= {min_records} impacting records over >= {min_decades} decades; got {records} records over {decades:.2} decades")]
    InsufficientDecades {
        records: usize,
        decades: f64,
        min_records: usize,
        min_decades: f64,
    },

    #[error("no non-impacting reference records to anchor the exponent fit")]
    MissingReference,

    #[error("sweep failed for {failed} of {total} deltas")]
    SweepMostlyFailed { failed: usize, total: usize },
}
