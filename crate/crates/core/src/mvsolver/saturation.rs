//! Zero-intercept clipped quota share: `x_i(s) = min(U_i, eta(s) / delta_i)`.
//! As `s` grows, agents saturate at their caps one by one and the remaining
//! agents' slopes renormalize over the unsaturated set.

use num_rational::Ratio;

use super::projection::validate_boxes;
use super::regime::{regime_report, RegimeReport};
use crate::error::{Error, Result};
use crate::numeric::{exact_ratio, ratio_string};

/// Saturation curve for risk aversions `delta` and upper caps `upper`
/// (`+inf` for an uncapped agent). Breakpoints are also reported as exact
/// fractions when all inputs are rationals with small denominators.
pub fn saturation_curve(delta: &[f64], upper: &[f64]) -> Result<RegimeReport> {
    let n = delta.len();
    let lower = vec![f64::NEG_INFINITY; n];
    validate_boxes(delta, &lower, upper)?;
    if upper.iter().any(|&u| u <= 0.0) {
        return Err(Error::Domain("caps must be positive for a zero-intercept curve".into()));
    }
    let c = vec![0.0; n];
    let mut report = regime_report(&c, delta, &lower, upper, 0.0);

    let exact_delta: Option<Vec<Ratio<i128>>> = delta.iter().map(|&d| exact_ratio(d)).collect();
    let exact_upper: Option<Vec<Option<Ratio<i128>>>> = upper
        .iter()
        .map(|&u| if u.is_finite() { exact_ratio(u).map(Some) } else { Some(None) })
        .collect();
    if let (Some(d), Some(u)) = (exact_delta, exact_upper) {
        // saturation multipliers delta_i U_i, then s = sum_j min(U_j, eta / delta_j)
        let mut etas: Vec<Ratio<i128>> = (0..n).filter_map(|i| u[i].map(|ui| d[i] * ui)).collect();
        etas.sort();
        etas.dedup();
        let mut levels: Vec<Ratio<i128>> = etas
            .iter()
            .map(|eta| {
                (0..n)
                    .map(|j| {
                        let free = eta / d[j];
                        match u[j] {
                            Some(uj) if uj < free => uj,
                            _ => free,
                        }
                    })
                    .sum()
            })
            .collect();
        levels.dedup();
        // the last level coincides with the terminal total when every agent is capped
        if u.iter().all(|x| x.is_some()) {
            levels.pop();
        }
        if levels.len() == report.breakpoints.len() {
            report.breakpoints = levels.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
            for (k, r) in report.regimes.iter_mut().enumerate() {
                if k > 0 {
                    r.from = report.breakpoints[k - 1];
                }
                if k < report.breakpoints.len() {
                    r.to = report.breakpoints[k];
                }
            }
            report.breakpoints_exact = Some(levels.iter().map(ratio_string).collect());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn four_agent_curve() {
        let r = saturation_curve(&[2.0, 3.0, 5.0, 6.0], &[5.0, 8.0, 3.0, INF]).unwrap();
        assert_eq!(r.breakpoints, vec![12.0, 15.5, 20.0]);
        assert_eq!(
            r.breakpoints_exact.as_deref(),
            Some(&["12".to_string(), "31/2".to_string(), "20".to_string()][..])
        );
        assert_eq!(
            r.regimes[0].slopes_exact.as_deref().unwrap(),
            &["5/12", "5/18", "1/6", "5/36"]
        );
        assert_eq!(r.regimes[3].slopes, vec![0.0, 0.0, 0.0, 1.0]);
        assert!((r.shares_at(15.5).unwrap()[1] - 5.0).abs() < 1e-12);
        assert!((r.shares_at(25.5).unwrap()[3] - 9.5).abs() < 1e-12);
        assert!((r.shares_at(20.0).unwrap()[3] - 4.0).abs() < 1e-12);
        assert!((r.shares_at(12.0).unwrap()[0] - 5.0).abs() < 1e-12);
        for reg in &r.regimes {
            assert!((reg.slopes.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_uncapped_agent_is_identity() {
        let r = saturation_curve(&[4.0], &[INF]).unwrap();
        assert!(r.breakpoints.is_empty());
        assert_eq!(r.regimes.len(), 1);
        assert_eq!(r.regimes[0].slopes, vec![1.0]);
        assert_eq!(r.shares_at(7.5).unwrap(), vec![7.5]);
    }

    #[test]
    fn two_agents_one_cap() {
        let r = saturation_curve(&[1.0, 1.0], &[1.0, INF]).unwrap();
        assert_eq!(r.breakpoints, vec![2.0]);
        assert_eq!(r.regimes[0].slopes, vec![0.5, 0.5]);
        assert_eq!(r.regimes[1].slopes, vec![0.0, 1.0]);
    }

    #[test]
    fn all_capped_terminates() {
        let r = saturation_curve(&[1.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.terminal, Some(3.0));
        assert_eq!(r.breakpoints, vec![2.0]);
        assert_eq!(r.breakpoints_exact.as_deref(), Some(&["2".to_string()][..]));
        assert!(r.shares_at(3.5).is_err());
    }
}
