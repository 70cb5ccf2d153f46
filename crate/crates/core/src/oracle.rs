//! Brute-force ground truth on small spaces.
//!
//! [`grid_minimize`] enumerates the first `n-1` shares over a grid (the last
//! share is implied by clearing) and keeps the feasible point of least total
//! risk; [`comonotone_minimize`] does the same restricted to comonotonic
//! points. Grid values are `lo + (hi - lo) k / n`, so grids built from
//! quarters and eighths hit those values exactly. Ties are broken by the
//! lexicographically first grid index regardless of thread scheduling.
//!
//! [`mv_reference`] is an independent check on the mean-variance solver:
//! accelerated projected gradient on all shares at once, with a bisection
//! projection per atom.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{is_comonotonic, Allocation};
use crate::constraints::{is_feasible, Constraint};
use crate::error::{Error, Result};
use crate::mvsolver::MVProblem;
use crate::probspace::RandomVariable;
use crate::riskmeasures::RiskMeasureSpec;

/// Grids larger than this are refused.
pub const MAX_GRID_POINTS: u64 = 100_000_000;
const TIE_TOL: f64 = 1e-12;
const COMONOTONE_TOL: f64 = 1e-9;

/// Equally spaced values from `lo` to `hi` with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    #[serde(with = "crate::real")]
    pub lo: f64,
    #[serde(with = "crate::real")]
    pub hi: f64,
    #[serde(with = "crate::real")]
    pub step: f64,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let a = Self { lo, hi, step };
        a.intervals()?;
        Ok(a)
    }

    /// Number of steps; the axis has one more point than this.
    pub fn intervals(&self) -> Result<u64> {
        if !(self.step > 0.0) || !self.lo.is_finite() || !self.hi.is_finite() || self.hi < self.lo {
            return Err(Error::Domain(format!("bad grid axis {self:?}")));
        }
        let n = ((self.hi - self.lo) / self.step).round();
        if (n * self.step - (self.hi - self.lo)).abs() > 1e-9 * self.step.max(self.hi - self.lo) {
            return Err(Error::Domain(format!("step {} does not divide [{}, {}]", self.step, self.lo, self.hi)));
        }
        Ok(n as u64)
    }

    fn value(&self, k: u64, n: u64) -> f64 {
        if n == 0 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / n as f64
        }
    }
}

/// The points an oracle enumerates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// One axis per free agent and atom; `axes[i][w]`.
    Lattice { axes: Vec<Vec<Axis>> },
    /// Free shares `base + t * direction` for `t` on one axis.
    Family {
        #[serde(with = "crate::real::matrix")]
        base: Vec<Vec<f64>>,
        #[serde(with = "crate::real::matrix")]
        direction: Vec<Vec<f64>>,
        param: Axis,
    },
}

impl GridSpec {
    /// The same axis for every free agent and atom.
    pub fn uniform(free_agents: usize, atoms: usize, axis: Axis) -> Self {
        GridSpec::Lattice { axes: vec![vec![axis; atoms]; free_agents] }
    }

    fn free_agents(&self) -> usize {
        match self {
            GridSpec::Lattice { axes } => axes.len(),
            GridSpec::Family { base, .. } => base.len(),
        }
    }

    fn check_shape(&self, n_agents: usize, n_atoms: usize) -> Result<()> {
        let rows: Vec<usize> = match self {
            GridSpec::Lattice { axes } => axes.iter().map(Vec::len).collect(),
            GridSpec::Family { base, direction, .. } => {
                if base.len() != direction.len() {
                    return Err(Error::Domain("family base and direction differ in shape".into()));
                }
                for (b, d) in base.iter().zip(direction) {
                    if b.len() != d.len() {
                        return Err(Error::Domain("family base and direction differ in shape".into()));
                    }
                }
                base.iter().map(Vec::len).collect()
            }
        };
        if rows.len() + 1 != n_agents {
            return Err(Error::Domain(format!(
                "grid spans {} free agents, expected {}",
                rows.len(),
                n_agents.saturating_sub(1)
            )));
        }
        if rows.iter().any(|&r| r != n_atoms) {
            return Err(Error::Domain(format!("grid rows must have one entry per atom ({n_atoms})")));
        }
        Ok(())
    }

    /// Total number of grid points.
    pub fn size(&self) -> Result<u64> {
        let total = match self {
            GridSpec::Lattice { axes } => axes.iter().flatten().try_fold(1u64, |acc, a| {
                acc.checked_mul(a.intervals()? + 1)
                    .ok_or_else(|| Error::Domain("grid size overflows".into()))
            })?,
            GridSpec::Family { param, .. } => param.intervals()? + 1,
        };
        if total > MAX_GRID_POINTS {
            return Err(Error::Domain(format!("grid of {total} points exceeds {MAX_GRID_POINTS}")));
        }
        Ok(total)
    }

    /// Free-share values at grid index `k`, first axis most significant.
    pub fn point(&self, mut k: u64) -> Vec<Vec<f64>> {
        match self {
            GridSpec::Lattice { axes } => {
                let mut out: Vec<Vec<f64>> = axes.iter().map(|r| vec![0.0; r.len()]).collect();
                for (i, row) in axes.iter().enumerate().rev() {
                    for (w, a) in row.iter().enumerate().rev() {
                        let n = a.intervals().unwrap_or(0);
                        out[i][w] = a.value(k % (n + 1), n);
                        k /= n + 1;
                    }
                }
                out
            }
            GridSpec::Family { base, direction, param } => {
                let t = self.param_value(k).unwrap_or(param.lo);
                base.iter()
                    .zip(direction)
                    .map(|(b, d)| b.iter().zip(d).map(|(x, y)| x + t * y).collect())
                    .collect()
            }
        }
    }

    /// The family parameter at grid index `k`.
    pub fn param_value(&self, k: u64) -> Option<f64> {
        match self {
            GridSpec::Family { param, .. } => param.intervals().ok().map(|n| param.value(k, n)),
            GridSpec::Lattice { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub allocation: Allocation,
    pub value: f64,
    pub index: u64,
    /// Family parameter of the minimizer, for one-parameter grids.
    pub param: Option<f64>,
    pub grid_size: u64,
    pub feasible_points: u64,
}

struct Search<'a> {
    s: &'a RandomVariable,
    objectives: &'a [RiskMeasureSpec],
    constraints: &'a [Constraint],
    grid: &'a GridSpec,
    tol: f64,
    comonotone: bool,
}

impl Search<'_> {
    fn allocation(&self, k: u64) -> Result<Allocation> {
        let free = self
            .grid
            .point(k)
            .into_iter()
            .map(|v| RandomVariable::new(self.s.space().clone(), v))
            .collect::<Result<Vec<_>>>()?;
        Allocation::with_implied_last(free, self.s.clone())
    }

    fn eval(&self, k: u64) -> Option<f64> {
        let a = self.allocation(k).ok()?;
        if !is_feasible(&a, self.constraints, self.tol).ok()? {
            return None;
        }
        if self.comonotone && !is_comonotonic(&a, COMONOTONE_TOL) {
            return None;
        }
        a.total_risk(self.objectives).ok()
    }

    fn run(&self) -> Result<OracleResult> {
        let n_agents = self.grid.free_agents() + 1;
        if self.objectives.len() != n_agents {
            return Err(Error::Domain(format!(
                "{} objectives for {n_agents} agents",
                self.objectives.len()
            )));
        }
        for m in self.objectives {
            m.validate()?;
        }
        for c in self.constraints {
            c.validate(n_agents, self.s.space().len())?;
        }
        self.grid.check_shape(n_agents, self.s.space().len())?;
        let size = self.grid.size()?;

        // min is exactly associative, so this reduction is schedule independent
        let (best, feasible_points) = (0..size)
            .into_par_iter()
            .filter_map(|k| self.eval(k))
            .map(|v| (v, 1u64))
            .reduce(|| (f64::INFINITY, 0), |a, b| (a.0.min(b.0), a.1 + b.1));
        if feasible_points == 0 {
            return Err(Error::Infeasible(format!(
                "none of the {size} grid points is feasible{}",
                if self.comonotone { " and comonotonic" } else { "" }
            )));
        }
        let cutoff = best + TIE_TOL * best.abs().max(1.0);
        let index = (0..size)
            .into_par_iter()
            .find_first(|&k| self.eval(k).is_some_and(|v| v <= cutoff))
            .expect("the minimum is attained on the grid");
        let allocation = self.allocation(index)?;
        let value = allocation.total_risk(self.objectives)?;
        Ok(OracleResult {
            allocation,
            value,
            index,
            param: self.grid.param_value(index),
            grid_size: size,
            feasible_points,
        })
    }
}

/// Least total risk over feasible grid points.
pub fn grid_minimize(
    s: &RandomVariable,
    objectives: &[RiskMeasureSpec],
    constraints: &[Constraint],
    grid: &GridSpec,
    tol: f64,
) -> Result<OracleResult> {
    Search { s, objectives, constraints, grid, tol, comonotone: false }.run()
}

/// Least total risk over feasible comonotonic grid points.
pub fn comonotone_minimize(
    s: &RandomVariable,
    objectives: &[RiskMeasureSpec],
    constraints: &[Constraint],
    grid: &GridSpec,
    tol: f64,
) -> Result<OracleResult> {
    Search { s, objectives, constraints, grid, tol, comonotone: true }.run()
}

/// Euclidean projection of `y` onto `{x : sum x = s, lower <= x <= upper}`,
/// with the shift found by bisection.
fn project_sum_box(y: &[f64], lower: &[f64], upper: &[f64], s: f64) -> Vec<f64> {
    let at = |t: f64| -> f64 { y.iter().enumerate().map(|(i, v)| (v + t).clamp(lower[i], upper[i])).sum() };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while at(lo) > s {
        lo *= 2.0;
    }
    while at(hi) < s {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if at(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let mut x: Vec<f64> = y.iter().enumerate().map(|(i, v)| (v + t).clamp(lower[i], upper[i])).collect();
    let r = s - x.iter().sum::<f64>();
    if let Some(i) = (0..x.len()).find(|&i| lower[i] < x[i] && x[i] < upper[i]) {
        x[i] += r;
    }
    x
}

#[derive(Debug, Clone)]
pub struct MvReference {
    pub allocation: Allocation,
    pub objective: f64,
    pub iterations: usize,
}

/// Mean-variance optimum by accelerated projected gradient with adaptive
/// restart, in the probability-weighted metric where the gradient of
/// `delta_i Var(X_i)` is `2 delta_i (X_i - E[X_i])`.
pub fn mv_reference(problem: &MVProblem, max_iterations: usize) -> Result<MvReference> {
    problem.validate()?;
    let caps = &problem.caps;
    let s = &problem.aggregate;
    let (n, m) = (caps.delta.len(), s.space().len());
    let probs = s.space().probs();
    let step = 1.0 / (2.0 * caps.delta.iter().cloned().fold(0.0, f64::max));
    let total: f64 = caps.delta.iter().map(|d| 1.0 / d).sum();

    let project = |x: &mut [Vec<f64>]| {
        for w in 0..m {
            let col: Vec<f64> = (0..n).map(|i| x[i][w]).collect();
            let p = project_sum_box(&col, &caps.lower, &caps.upper, s.value(w));
            for i in 0..n {
                x[i][w] = p[i];
            }
        }
    };
    let mean = |row: &[f64]| row.iter().zip(&probs).map(|(v, p)| v * p).sum::<f64>();
    let f = |x: &[Vec<f64>]| -> f64 {
        x.iter()
            .zip(&caps.delta)
            .map(|(row, d)| {
                let mu = mean(row);
                d * row.iter().zip(&probs).map(|(v, p)| p * (v - mu) * (v - mu)).sum::<f64>()
            })
            .sum()
    };

    let mut x: Vec<Vec<f64>> = caps
        .delta
        .iter()
        .map(|d| s.values().iter().map(|v| v / d / total).collect())
        .collect();
    project(&mut x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = f(&x);
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut next: Vec<Vec<f64>> = y
            .iter()
            .zip(&caps.delta)
            .map(|(row, d)| {
                let mu = mean(row);
                row.iter().map(|v| v - step * 2.0 * d * (v - mu)).collect()
            })
            .collect();
        project(&mut next);
        let fn_ = f(&next);
        let moved = next
            .iter()
            .flatten()
            .zip(x.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if fn_ > fx {
            if t == 1.0 || moved < 1e-14 {
                // a plain projected step from x only rises through round-off
                break;
            }
            // restart the momentum from the last accepted iterate
            y = x.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u + beta * (u - v)).collect())
            .collect();
        x = next;
        fx = fn_;
        t = t_next;
        if moved < 1e-14 {
            break;
        }
    }
    let shares = x
        .into_iter()
        .map(|row| RandomVariable::new(s.space().clone(), row))
        .collect::<Result<Vec<_>>>()?;
    let allocation = Allocation::new(shares, s.clone())?;
    let objective = problem.objective(&allocation);
    Ok(MvReference { allocation, objective, iterations })
}
