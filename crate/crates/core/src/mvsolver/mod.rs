//! Mean-variance risk sharing, `rho_i(X) = E[X] + delta_i Var(X)`.
//!
//! Without caps the optimum is the proportional quota share with slopes
//! `delta_i^{-1} / sum_j delta_j^{-1}`. With caps `L_i <= X_i <= U_i` it is
//! truncated affine, `X_i = clip_i(c_i + eta(S) / delta_i)`, where the shadow
//! price `eta(s)` clears each state and `c_i = E[X_i]`.

mod capped;
mod fixed_point;
mod projection;
mod regime;
mod saturation;
mod scenario;

pub use capped::{solve_capped_mv, MVProblem, MvCaps, MvSolution, DAMPING, FIXED_POINT_TOL, MAX_ITERATIONS};
pub use fixed_point::{fixed_point_residual, two_agent_fixed_point, FixedPointInterval};
pub use projection::{statewise_projection, Projection};
pub use regime::{regime_report, Regime, RegimeReport};
pub use saturation::saturation_curve;
pub use scenario::{
    var_scenario, AffineRule, ComonotonicParams, CrossingWitness, ScenarioFeasibility, ScenarioValues, VarScenario,
    VarScenarioReport,
};

use crate::error::{Error, Result};

/// Proportional slopes `delta_i^{-1} / sum_j delta_j^{-1}`.
pub fn unconstrained_shares(delta: &[f64]) -> Result<Vec<f64>> {
    if delta.is_empty() {
        return Err(Error::Domain("at least one agent is required".into()));
    }
    if let Some(d) = delta.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::Domain(format!("risk aversion {d} must be positive and finite")));
    }
    let total: f64 = delta.iter().map(|d| 1.0 / d).sum();
    Ok(delta.iter().map(|d| (1.0 / d) / total).collect())
}
