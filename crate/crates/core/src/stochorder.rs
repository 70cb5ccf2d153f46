//! Convex order on discrete laws and the mean-preserving contractions that
//! generate it.
//!
//! `Y <=cx X` is checked through stop-loss transforms `t -> E[(X - t)^+]`.
//! For discrete laws the transform is piecewise linear with kinks only at
//! support points, so comparing the two curves on the union of both
//! supports (plus equal means) is exact. The comparison goes through
//! [`Distribution`], so the two variables may live on different spaces.

use crate::error::{Error, Result};
use crate::probspace::{Distribution, RandomVariable};

/// Default tolerance for convex-order checks.
pub const CX_TOL: f64 = 1e-9;

pub fn stop_loss(x: &RandomVariable, t: f64) -> f64 {
    x.expect(|v| (v - t).max(0.0))
}

fn stop_loss_dist(d: &Distribution, t: f64) -> f64 {
    d.points().iter().map(|(v, p)| p * (v - t).max(0.0)).sum()
}

/// Stop-loss transform sampled at the support points of a law.
#[derive(Debug, Clone, PartialEq)]
pub struct StopLossCurve {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl StopLossCurve {
    pub fn of(x: &RandomVariable) -> Self {
        let d = x.distribution();
        let breakpoints = d.support();
        let values = breakpoints.iter().map(|&t| stop_loss_dist(&d, t)).collect();
        Self { breakpoints, values }
    }

    /// Slopes between consecutive breakpoints; each lies in `[-1, 0]`.
    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .collect()
    }
}

pub fn convex_order_leq_dist(y: &Distribution, x: &Distribution, tol: f64) -> bool {
    if (y.mean() - x.mean()).abs() > tol {
        return false;
    }
    let mut grid: Vec<f64> = y.support();
    grid.extend(x.support());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.iter()
        .all(|&t| stop_loss_dist(y, t) <= stop_loss_dist(x, t) + tol)
}

/// `Y <=cx X`: equal means and dominated stop-loss transform.
pub fn convex_order_leq(y: &RandomVariable, x: &RandomVariable, tol: f64) -> bool {
    convex_order_leq_dist(&y.distribution(), &x.distribution(), tol)
}

/// Moves `x(from)` down by `a` and `x(to)` up by `b`, where
/// `p(from) * a = p(to) * b` keeps the mean and the move may at most close
/// the gap between the two values.
pub fn pigou_dalton_transfer(
    x: &RandomVariable,
    from: usize,
    to: usize,
    a: f64,
    b: f64,
) -> Result<RandomVariable> {
    let n = x.space().len();
    if from >= n || to >= n {
        return Err(Error::Contract(format!("atom index out of range ({from}, {to})")));
    }
    if a < 0.0 || b < 0.0 {
        return Err(Error::Contract("transfer amounts must be nonnegative".into()));
    }
    if a == 0.0 && b == 0.0 {
        return Ok(x.clone());
    }
    if from == to {
        return Err(Error::Contract("transfer needs two distinct atoms".into()));
    }
    let (pf, pt) = (x.space().prob(from), x.space().prob(to));
    if (pf * a - pt * b).abs() > 1e-12 {
        return Err(Error::Contract(format!(
            "weights do not balance: {pf}*{a} != {pt}*{b}"
        )));
    }
    let gap = x.value(from) - x.value(to);
    if gap <= 0.0 {
        return Err(Error::Contract(format!(
            "transfer must run from the larger value down (gap {gap})"
        )));
    }
    let limit = gap * pt / (pf + pt);
    if a > limit + 1e-12 {
        return Err(Error::Contract(format!(
            "transfer of {a} overshoots the meeting point {limit}"
        )));
    }
    let mut values = x.values().to_vec();
    values[from] -= a;
    values[to] += b;
    x.with_values(values)
}

/// `E[x | given]` as a variable on the same space: `x` averaged over each
/// level set of `given`.
pub fn conditional_expectation(x: &RandomVariable, given: &RandomVariable) -> Result<RandomVariable> {
    if !crate::probspace::same_space(x.space(), given.space()) {
        return Err(Error::SpaceMismatch("conditioning variable on another space".into()));
    }
    let levels = crate::allocation::level_sets(given);
    let mut out = vec![0.0; x.space().len()];
    for level in &levels {
        let first = x.value(level.atoms[0]);
        let avg = if level.atoms.iter().all(|&w| x.value(w) == first) {
            first
        } else {
            let mass: f64 = level.atoms.iter().map(|&w| x.space().prob(w)).sum();
            level
                .atoms
                .iter()
                .map(|&w| x.space().prob(w) * x.value(w))
                .sum::<f64>()
                / mass
        };
        for &w in &level.atoms {
            out[w] = avg;
        }
    }
    x.with_values(out)
}
