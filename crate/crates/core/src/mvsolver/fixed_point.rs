//! Two-agent intercept condition: with agent 1 boxed in `[0, C]` and slope
//! `a`, the optimal rule is `min(C, max(0, a S + beta))` where `beta` solves
//! `beta = E[clip(a S + beta)] - a E[S]`.

use serde::Serialize;

use super::projection::{clip, level_interval};
use crate::error::{Error, Result};
use crate::probspace::Distribution;

/// `E[clip(a S + beta, 0, C)] - a E[S] - beta`; continuous, nonincreasing
/// in `beta`, with slope `-1` outside the kinks.
pub fn fixed_point_residual(a: f64, cap: f64, s: &Distribution, beta: f64) -> f64 {
    s.points().iter().map(|(v, p)| p * clip(a * v + beta, 0.0, cap)).sum::<f64>() - a * s.mean() - beta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointInterval {
    pub lo: f64,
    pub hi: f64,
    pub residual_lo: f64,
    pub residual_hi: f64,
}

/// The closed interval of solutions `beta`. The residual is piecewise linear
/// with kinks at `-a s_k` and `C - a s_k`, so its zero set is read off exactly.
pub fn two_agent_fixed_point(a: f64, cap: f64, s: &Distribution) -> Result<FixedPointInterval> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("slope {a} outside (0,1)")));
    }
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::Domain(format!("cap {cap} must be positive and finite")));
    }
    if s.points().is_empty() {
        return Err(Error::Domain("empty aggregate distribution".into()));
    }
    let mut kinks: Vec<f64> = s
        .points()
        .iter()
        .flat_map(|(v, _)| [-a * v, cap - a * v])
        .collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    // work with the nondecreasing negative residual; on the flat stretch the
    // residual is zero up to rounding, so snap values at that noise level
    let scale = cap + kinks.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let noise = 64.0 * f64::EPSILON * scale;
    let values: Vec<f64> = kinks
        .iter()
        .map(|&b| -fixed_point_residual(a, cap, s, b))
        .map(|v| if v.abs() <= noise { 0.0 } else { v })
        .collect();
    let (lo, hi) = level_interval(&kinks, &values, 1.0, 1.0, 0.0)
        .ok_or_else(|| Error::Domain("residual has no zero (unreachable for valid input)".into()))?;
    Ok(FixedPointInterval {
        lo,
        hi,
        residual_lo: fixed_point_residual(a, cap, s, lo),
        residual_hi: fixed_point_residual(a, cap, s, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(f64, f64)]) -> Distribution {
        Distribution::from_weighted(pairs.iter().copied())
    }

    #[test]
    fn cap_never_binds() {
        let s = dist(&[(1.0, 0.5), (3.0, 0.5)]);
        // every beta keeping 0 <= S/2 + beta <= 10 solves the condition
        let r = two_agent_fixed_point(0.5, 10.0, &s).unwrap();
        assert_eq!((r.lo, r.hi), (-0.5, 8.5));
    }

    #[test]
    fn two_point_aggregate() {
        let s = dist(&[(0.0, 0.5), (10.0, 0.5)]);
        let r = two_agent_fixed_point(0.5, 3.0, &s).unwrap();
        assert!((r.lo + 1.0).abs() < 1e-12 && (r.hi + 1.0).abs() < 1e-12, "{r:?}");
        assert!(r.residual_lo.abs() <= 1e-10);
        // cross-check on a fine scan: the only sign change is at -1
        let mut prev = fixed_point_residual(0.5, 3.0, &s, -5.0);
        for k in 1..=10_000 {
            let b = -5.0 + k as f64 * 1e-3;
            let cur = fixed_point_residual(0.5, 3.0, &s, b);
            assert!(cur <= prev + 1e-12);
            if prev > 0.0 && cur < 0.0 {
                assert!((b + 1.0).abs() < 2e-3);
            }
            prev = cur;
        }
    }

    #[test]
    fn degenerate_aggregate_gives_interval() {
        let s = dist(&[(2.0, 1.0)]);
        let r = two_agent_fixed_point(0.25, 3.0, &s).unwrap();
        assert!((r.lo + 0.5).abs() < 1e-12);
        assert!((r.hi - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = dist(&[(2.0, 1.0)]);
        assert!(two_agent_fixed_point(1.0, 3.0, &s).is_err());
        assert!(two_agent_fixed_point(0.5, 0.0, &s).is_err());
    }
}
