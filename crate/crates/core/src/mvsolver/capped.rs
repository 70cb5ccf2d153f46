//! Capped mean-variance sharing on a finite space.
//!
//! The optimum is `X_i = clip_i(c_i + eta(S) / delta_i)` with `c_i = E[X_i]`.
//! For fixed `c` each state is a water-filling problem; the intercepts are
//! found by the damped iteration `c <- (1 - theta) c + theta E[X(c)]`. Any
//! fixed point satisfies the pointwise KKT conditions of the convex problem,
//! so it is optimal; uniqueness of `c` is not claimed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::projection::{clip, statewise_projection, validate_boxes};
use super::regime::{regime_report, RegimeReport};
use super::unconstrained_shares;
use crate::allocation::{level_sets, Allocation};
use crate::error::{Error, Result};
use crate::probspace::{GammaAggregate, RandomVariable};

pub const DAMPING: f64 = 0.5;
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;

/// Levels beyond which the per-level projections run in parallel.
const PARALLEL_LEVELS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvCaps {
    #[serde(with = "crate::real::vec")]
    pub delta: Vec<f64>,
    #[serde(with = "crate::real::vec")]
    pub lower: Vec<f64>,
    #[serde(with = "crate::real::vec")]
    pub upper: Vec<f64>,
}

/// Mean-variance sharing problem: `rho_i(X) = E[X] + delta_i Var(X)` with
/// caps `lower_i <= X_i <= upper_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MVProblem {
    pub caps: MvCaps,
    pub aggregate: RandomVariable,
}

impl MVProblem {
    pub fn new(delta: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>, aggregate: RandomVariable) -> Result<Self> {
        let p = Self { caps: MvCaps { delta, lower, upper }, aggregate };
        p.validate()?;
        Ok(p)
    }

    pub fn uncapped(delta: Vec<f64>, aggregate: RandomVariable) -> Result<Self> {
        let n = delta.len();
        Self::new(delta, vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n], aggregate)
    }

    /// The Gamma(2,1) aggregate discretized at `atoms` midpoint quantiles.
    pub fn gamma(delta: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>, atoms: usize) -> Result<Self> {
        let (_, s) = GammaAggregate.discretize(atoms)?;
        Self::new(delta, lower, upper, s)
    }

    pub fn n_agents(&self) -> usize {
        self.caps.delta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let MvCaps { delta, lower, upper } = &self.caps;
        validate_boxes(delta, lower, upper)?;
        let (lo, hi) = (lower.iter().sum::<f64>(), upper.iter().sum::<f64>());
        let (smin, smax) = (self.aggregate.min(), self.aggregate.max());
        let tol = 1e-12 * smin.abs().max(smax.abs()).max(1.0);
        if lo > smin + tol || smax > hi + tol {
            return Err(Error::Infeasible(format!(
                "aggregate range [{smin}, {smax}] not covered by the cap range [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// `sum_i E[X_i] + delta_i Var(X_i)`.
    pub fn objective(&self, a: &Allocation) -> f64 {
        a.shares()
            .iter()
            .zip(&self.caps.delta)
            .map(|(x, d)| {
                let (m, v) = x.moments();
                m + d * v
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct MvSolution {
    pub allocation: Allocation,
    pub regime: RegimeReport,
    pub objective: f64,
    pub iterations: usize,
}

pub fn solve_capped_mv(problem: &MVProblem) -> Result<MvSolution> {
    problem.validate()?;
    let MvCaps { delta, lower, upper } = &problem.caps;
    let n = delta.len();
    let s = &problem.aggregate;
    let levels = level_sets(s);
    let mean_s = s.mean();
    let slopes = unconstrained_shares(delta)?;
    let mut c: Vec<f64> = (0..n).map(|i| clip(slopes[i] * mean_s, lower[i], upper[i])).collect();

    let shares_at = |c: &[f64]| -> Result<Vec<Vec<f64>>> {
        let project = |l: &crate::allocation::Level| statewise_projection(c, delta, lower, upper, l.value).map(|p| p.shares);
        if levels.len() >= PARALLEL_LEVELS {
            levels.par_iter().map(project).collect()
        } else {
            levels.iter().map(project).collect()
        }
    };
    let means = |x: &[Vec<f64>]| -> Vec<f64> {
        (0..n)
            .map(|i| levels.iter().zip(x).map(|(l, xs)| l.prob * xs[i]).sum())
            .collect()
    };

    let mut iterations = 0;
    let (per_level, residual) = loop {
        let x = shares_at(&c)?;
        let m = means(&x);
        let residual = m.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual < FIXED_POINT_TOL {
            break (x, residual);
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NonConvergence { iterations, residual, last_iterate: c });
        }
        for (ci, mi) in c.iter_mut().zip(&m) {
            *ci = (1.0 - DAMPING) * *ci + DAMPING * mi;
        }
        iterations += 1;
    };

    let mut values = vec![vec![0.0; s.space().len()]; n];
    for (l, xs) in levels.iter().zip(&per_level) {
        for &w in &l.atoms {
            for i in 0..n {
                values[i][w] = xs[i];
            }
        }
    }
    let shares = values
        .into_iter()
        .map(|v| RandomVariable::new(s.space().clone(), v))
        .collect::<Result<Vec<_>>>()?;
    let allocation = Allocation::new(shares, s.clone())?;
    let objective = problem.objective(&allocation);
    let regime = regime_report(&c, delta, lower, upper, residual);
    Ok(MvSolution { allocation, regime, objective, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{check_clearing, is_comonotonic};
    use crate::mvsolver::two_agent_fixed_point;
    use crate::probspace::FiniteSpace;

    const INF: f64 = f64::INFINITY;

    fn agg(values: &[f64]) -> RandomVariable {
        RandomVariable::new(FiniteSpace::uniform(values.len()).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn uncapped_is_proportional() {
        let s = agg(&[0.0, 1.0, 5.0, 2.0]);
        let sol = solve_capped_mv(&MVProblem::uncapped(vec![1.0, 3.0], s.clone()).unwrap()).unwrap();
        let x1 = sol.allocation.share(0);
        for w in 0..4 {
            // slope 3/4, mean share 3/4 E[S]
            assert!((x1.value(w) - 0.75 * s.value(w)).abs() < 1e-9);
        }
    }

    #[test]
    fn capped_two_atom_example() {
        let s = agg(&[0.0, 2.0]);
        let p = MVProblem::new(vec![1.0, 1.0], vec![-INF, -INF], vec![0.5, INF], s).unwrap();
        let sol = solve_capped_mv(&p).unwrap();
        let x1 = sol.allocation.share(0);
        assert!((x1.value(0) + 0.5).abs() < 1e-8, "{:?}", x1.values());
        assert!((x1.value(1) - 0.5).abs() < 1e-12);
        assert!((sol.objective - 1.5).abs() < 1e-8);
        assert!(check_clearing(&sol.allocation).clears);
        assert!(is_comonotonic(&sol.allocation, 1e-9));
    }

    #[test]
    fn two_agent_cap_matches_fixed_point() {
        // delta = (1, 3): agent 1 slope a = 3/4, boxed in [0, 2]
        let s = agg(&[0.0, 1.0, 2.0, 4.0, 7.0]);
        let p = MVProblem::new(vec![1.0, 3.0], vec![0.0, -INF], vec![2.0, INF], s.clone()).unwrap();
        let sol = solve_capped_mv(&p).unwrap();
        let fp = two_agent_fixed_point(0.75, 2.0, &s.distribution()).unwrap();
        let beta = 0.5 * (fp.lo + fp.hi);
        for w in 0..5 {
            let expect = (0.75 * s.value(w) + beta).clamp(0.0, 2.0);
            assert!((sol.allocation.share(0).value(w) - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn infeasible_caps_are_reported() {
        let s = agg(&[0.0, 5.0]);
        let e = MVProblem::new(vec![1.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0], s).unwrap_err();
        assert!(matches!(e, Error::Infeasible(_)));
    }
}
