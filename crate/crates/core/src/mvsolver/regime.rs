//! Regime structure of the truncated-affine rule `s -> clip(c + eta(s)/delta)`.

use num_rational::Ratio;
use serde::Serialize;

use super::projection::{statewise_projection, Water};
use crate::error::Result;
use crate::numeric::{exact_ratio, ratio_string};

/// One stretch of aggregate levels on which the active set is constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    #[serde(with = "crate::real")]
    pub from: f64,
    #[serde(with = "crate::real")]
    pub to: f64,
    /// Agents strictly inside their caps.
    pub active: Vec<usize>,
    /// `d x_i / d s` on the regime.
    pub slopes: Vec<f64>,
    /// The same slopes as exact fractions, when every `delta_i` is rational.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slopes_exact: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub delta: Vec<f64>,
    #[serde(with = "crate::real::vec")]
    pub lower: Vec<f64>,
    #[serde(with = "crate::real::vec")]
    pub upper: Vec<f64>,
    pub intercepts: Vec<f64>,
    /// Aggregate levels where the active set changes, increasing.
    pub breakpoints: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoints_exact: Option<Vec<String>>,
    pub regimes: Vec<Regime>,
    /// Fixed-point residual `max_i |E[X_i] - c_i|` (zero for fixed intercepts).
    pub residual: f64,
    /// Largest aggregate level the caps can absorb, when finite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal: Option<f64>,
}

impl RegimeReport {
    /// Shares at aggregate level `s`.
    pub fn shares_at(&self, s: f64) -> Result<Vec<f64>> {
        Ok(statewise_projection(&self.intercepts, &self.delta, &self.lower, &self.upper, s)?.shares)
    }
}

fn exact_all(xs: &[f64]) -> Option<Vec<Ratio<i128>>> {
    xs.iter().map(|&x| exact_ratio(x)).collect()
}

/// Slopes `delta_i^{-1} / sum_{j in A} delta_j^{-1}` on active set `A`.
pub(crate) fn regime_slopes(delta: &[f64], active: &[usize]) -> (Vec<f64>, Option<Vec<String>>) {
    let total: f64 = active.iter().map(|&j| 1.0 / delta[j]).sum();
    let slopes = (0..delta.len())
        .map(|i| if active.contains(&i) { (1.0 / delta[i]) / total } else { 0.0 })
        .collect();
    let exact = exact_all(delta).filter(|_| !active.is_empty()).map(|d| {
        let total: Ratio<i128> = active.iter().map(|&j| d[j].recip()).sum();
        (0..d.len())
            .map(|i| {
                if active.contains(&i) {
                    ratio_string(&(d[i].recip() / total))
                } else {
                    "0".to_string()
                }
            })
            .collect()
    });
    (slopes, exact)
}

/// Regimes of the rule with intercepts `c`, read off the kinks of `H`.
pub fn regime_report(c: &[f64], delta: &[f64], lower: &[f64], upper: &[f64], residual: f64) -> RegimeReport {
    let w = Water { c, delta, lower, upper };
    let kinks = w.kinks();
    let n = c.len();
    // multiplier segments (-inf, k0], [k0, k1], ..., [k_last, inf)
    let mut ends = vec![f64::NEG_INFINITY];
    ends.extend(&kinks);
    ends.push(f64::INFINITY);
    let h_at = |eta: f64| {
        if eta == f64::NEG_INFINITY {
            if w.left_slope() > 0.0 { f64::NEG_INFINITY } else { w.total_lower() }
        } else if eta == f64::INFINITY {
            if w.right_slope() > 0.0 { f64::INFINITY } else { w.total_upper() }
        } else {
            w.h(eta)
        }
    };
    let mut regimes: Vec<Regime> = Vec::new();
    for seg in ends.windows(2) {
        let (e0, e1) = (seg[0], seg[1]);
        let (s0, s1) = (h_at(e0), h_at(e1));
        if !(s1 > s0) {
            continue;
        }
        let mid = match (e0.is_finite(), e1.is_finite()) {
            (true, true) => 0.5 * (e0 + e1),
            (false, true) => e1 - 1.0,
            (true, false) => e0 + 1.0,
            (false, false) => 0.0,
        };
        let active: Vec<usize> = (0..n)
            .filter(|&i| {
                let x = c[i] + mid / delta[i];
                lower[i] < x && x < upper[i]
            })
            .collect();
        let (slopes, slopes_exact) = regime_slopes(delta, &active);
        regimes.push(Regime { from: s0, to: s1, active, slopes, slopes_exact });
    }
    let breakpoints: Vec<f64> = regimes.iter().skip(1).map(|r| r.from).collect();
    let total_upper = w.total_upper();
    RegimeReport {
        delta: delta.to_vec(),
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        intercepts: c.to_vec(),
        breakpoints,
        breakpoints_exact: None,
        regimes,
        residual,
        terminal: total_upper.is_finite().then_some(total_upper),
    }
}
