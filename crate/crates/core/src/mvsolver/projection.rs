//! Statewise shadow price: for fixed intercepts `c`, the clearing multiplier
//! `eta(s)` solves `H(eta) = sum_i clip_i(c_i + eta / delta_i) = s`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Result of one statewise projection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    pub eta: f64,
    pub shares: Vec<f64>,
}

pub(crate) fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// `{x : f(x) = y}` for a continuous nondecreasing piecewise-linear `f`
/// given by its values at sorted kinks and its slopes beyond them. Returns
/// `[inf {f >= y}, sup {f <= y}]`, with infinite ends where `f` is flat at
/// `y` out to infinity, or `None` when `y` is outside the range of `f`.
pub(crate) fn level_interval(
    kinks: &[f64],
    values: &[f64],
    left_slope: f64,
    right_slope: f64,
    y: f64,
) -> Option<(f64, f64)> {
    let n = kinks.len();
    debug_assert!(n > 0 && n == values.len());
    let (k0, v0) = (kinks[0], values[0]);
    let (kl, vl) = (kinks[n - 1], values[n - 1]);

    let lo = if v0 >= y {
        if left_slope > 0.0 {
            k0 - (v0 - y) / left_slope
        } else if v0 == y {
            f64::NEG_INFINITY
        } else {
            return None;
        }
    } else if let Some(j) = (1..n).find(|&j| values[j] >= y) {
        let (a, b) = (kinks[j - 1], kinks[j]);
        a + (y - values[j - 1]) * (b - a) / (values[j] - values[j - 1])
    } else if right_slope > 0.0 {
        kl + (y - vl) / right_slope
    } else {
        return None;
    };

    let hi = if vl <= y {
        if right_slope > 0.0 {
            kl + (y - vl) / right_slope
        } else if vl == y {
            f64::INFINITY
        } else {
            return None;
        }
    } else if let Some(j) = (0..n - 1).rev().find(|&j| values[j] <= y) {
        let (a, b) = (kinks[j], kinks[j + 1]);
        a + (y - values[j]) * (b - a) / (values[j + 1] - values[j])
    } else if left_slope > 0.0 {
        k0 - (v0 - y) / left_slope
    } else {
        return None;
    };
    Some((lo, hi.max(lo)))
}

pub(crate) fn validate_boxes(delta: &[f64], lower: &[f64], upper: &[f64]) -> Result<()> {
    let n = delta.len();
    if n == 0 {
        return Err(Error::Domain("at least one agent is required".into()));
    }
    if lower.len() != n || upper.len() != n {
        return Err(Error::Domain(format!(
            "{n} agents but {} lower and {} upper caps",
            lower.len(),
            upper.len()
        )));
    }
    if let Some(d) = delta.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::Domain(format!("risk aversion {d} must be positive and finite")));
    }
    for i in 0..n {
        if lower[i].is_nan() || upper[i].is_nan() || !(lower[i] < upper[i]) {
            return Err(Error::Domain(format!(
                "agent {i}: caps need L < U, got [{}, {}]",
                lower[i], upper[i]
            )));
        }
        if lower[i] == f64::INFINITY || upper[i] == f64::NEG_INFINITY {
            return Err(Error::Domain(format!("agent {i}: caps exclude every finite share")));
        }
    }
    Ok(())
}

/// The aggregate function `H` together with its kinks.
pub(crate) struct Water<'a> {
    pub c: &'a [f64],
    pub delta: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl Water<'_> {
    pub fn share(&self, i: usize, eta: f64) -> f64 {
        clip(self.c[i] + eta / self.delta[i], self.lower[i], self.upper[i])
    }

    pub fn h(&self, eta: f64) -> f64 {
        (0..self.c.len()).map(|i| self.share(i, eta)).sum()
    }

    /// Multiplier values where some clip switches on or off, sorted.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = Vec::with_capacity(2 * self.c.len());
        for i in 0..self.c.len() {
            for b in [self.lower[i], self.upper[i]] {
                if b.is_finite() {
                    k.push(self.delta[i] * (b - self.c[i]));
                }
            }
        }
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    pub fn left_slope(&self) -> f64 {
        (0..self.c.len())
            .filter(|&i| self.lower[i] == f64::NEG_INFINITY)
            .map(|i| 1.0 / self.delta[i])
            .sum()
    }

    pub fn right_slope(&self) -> f64 {
        (0..self.c.len())
            .filter(|&i| self.upper[i] == f64::INFINITY)
            .map(|i| 1.0 / self.delta[i])
            .sum()
    }

    pub fn total_lower(&self) -> f64 {
        self.lower.iter().sum()
    }

    pub fn total_upper(&self) -> f64 {
        self.upper.iter().sum()
    }
}

/// Splits `s` among agents as `x_i = clip_i(c_i + eta / delta_i)` with
/// `sum_i x_i = s`. `eta` comes from exact inversion of the piecewise-linear
/// `H` over its kinks; when `H` is flat at level `s` the midpoint of the
/// multiplier interval is used (the shares do not depend on the choice).
pub fn statewise_projection(c: &[f64], delta: &[f64], lower: &[f64], upper: &[f64], s: f64) -> Result<Projection> {
    validate_boxes(delta, lower, upper)?;
    if c.len() != delta.len() {
        return Err(Error::Domain("one intercept per agent expected".into()));
    }
    if !s.is_finite() || c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("aggregate level and intercepts must be finite".into()));
    }
    let w = Water { c, delta, lower, upper };
    let (lo_total, hi_total) = (w.total_lower(), w.total_upper());
    let tol = 1e-12 * s.abs().max(1.0);
    if s < lo_total - tol || s > hi_total + tol {
        return Err(Error::Infeasible(format!(
            "aggregate level {s} outside the cap range [{lo_total}, {hi_total}]"
        )));
    }
    let target = s.max(lo_total).min(hi_total);

    let mut kinks = w.kinks();
    if kinks.is_empty() {
        kinks.push(0.0);
    }
    let mut values: Vec<f64> = kinks.iter().map(|&k| w.h(k)).collect();
    let (left_slope, right_slope) = (w.left_slope(), w.right_slope());
    // with no unbounded agent on a side, every share sits at its cap at the
    // extreme kink; pin those values so round-off cannot lose a boundary level
    if left_slope == 0.0 {
        values[0] = lo_total;
    }
    if right_slope == 0.0 {
        *values.last_mut().unwrap() = hi_total;
    }
    let (lo, hi) = level_interval(&kinks, &values, left_slope, right_slope, target)
        .ok_or_else(|| Error::Infeasible(format!("no multiplier clears aggregate level {s}")))?;
    let eta = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    };

    let mut shares: Vec<f64> = (0..c.len()).map(|i| w.share(i, eta)).collect();
    // absorb float round-off on an interior agent so the split clears exactly
    let residual = target - shares.iter().sum::<f64>();
    if residual != 0.0 {
        if let Some(i) = (0..c.len()).find(|&i| lower[i] < shares[i] && shares[i] < upper[i]) {
            shares[i] += residual;
        }
    }
    Ok(Projection { eta, shares })
}
