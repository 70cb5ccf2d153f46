//! Clearing allocations, comonotonicity, and the constructive comonotonic
//! improvement.
//!
//! The improvement runs in two phases. First every share is replaced by its
//! conditional mean given the aggregate, which collapses the problem onto the
//! support of `S`. Then, while some agent's share decreases between two
//! aggregate levels `s < s'`, a balanced two-agent transfer across those
//! levels removes the inversion: the offending agent gives up mass on `s`
//! and takes it on `s'`, and the agent with the largest opposite gap does the
//! reverse. Both moves keep each share's values inside its own range on the
//! two levels, so every step is a mean-preserving contraction per agent, and
//! the weighted sum of variances strictly decreases.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::probspace::{integer_weights, same_space, FiniteSpace, RandomVariable, VALUE_MERGE_TOL};
use crate::riskmeasures::RiskMeasureSpec;
use crate::stochorder::{self, CX_TOL};

/// Tolerance on the pathwise clearing residual.
pub const CLEARING_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_TRANSFERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    space: Arc<FiniteSpace>,
    shares: Vec<RandomVariable>,
    aggregate: RandomVariable,
}

impl Allocation {
    /// Checks shapes only; clearing is reported by [`check_clearing`].
    pub fn new(shares: Vec<RandomVariable>, aggregate: RandomVariable) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::Contract("an allocation needs at least one agent".into()));
        }
        let space = aggregate.space().clone();
        if let Some(i) = shares.iter().position(|x| !same_space(x.space(), &space)) {
            return Err(Error::SpaceMismatch(format!("share {i} lives on another space")));
        }
        Ok(Self { space, shares, aggregate })
    }

    /// Allocation of the sum of the given shares.
    pub fn from_shares(shares: Vec<RandomVariable>) -> Result<Self> {
        let first = shares
            .first()
            .ok_or_else(|| Error::Contract("an allocation needs at least one agent".into()))?;
        let mut total = first.clone();
        for x in &shares[1..] {
            total = total.checked_add(x)?;
        }
        Self::new(shares, total)
    }

    /// The first `n-1` shares are given; the last one is `S` minus their sum.
    pub fn with_implied_last(free: Vec<RandomVariable>, aggregate: RandomVariable) -> Result<Self> {
        let mut last = aggregate.clone();
        for x in &free {
            last = last.checked_sub(x)?;
        }
        let mut shares = free;
        shares.push(last);
        Self::new(shares, aggregate)
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn n_agents(&self) -> usize {
        self.shares.len()
    }

    pub fn shares(&self) -> &[RandomVariable] {
        &self.shares
    }

    pub fn share(&self, agent: usize) -> &RandomVariable {
        &self.shares[agent]
    }

    pub fn aggregate(&self) -> &RandomVariable {
        &self.aggregate
    }

    /// Sum of the agents' risk measures.
    pub fn total_risk(&self, measures: &[RiskMeasureSpec]) -> Result<f64> {
        if measures.len() != self.n_agents() {
            return Err(Error::Contract(format!(
                "{} measures for {} agents",
                measures.len(),
                self.n_agents()
            )));
        }
        measures
            .iter()
            .zip(&self.shares)
            .map(|(m, x)| m.evaluate(x))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClearingReport {
    pub clears: bool,
    pub residual: f64,
}

pub fn check_clearing(a: &Allocation) -> ClearingReport {
    let residual = (0..a.space.len())
        .map(|w| {
            let total: f64 = a.shares.iter().map(|x| x.value(w)).sum();
            (total - a.aggregate.value(w)).abs()
        })
        .fold(0.0, f64::max);
    ClearingReport {
        clears: residual <= CLEARING_TOL,
        residual,
    }
}

/// One level set `{S = value}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub value: f64,
    pub prob: f64,
    pub atoms: Vec<usize>,
}

/// Level sets of `s`, in increasing order of value.
pub fn level_sets(s: &RandomVariable) -> Vec<Level> {
    let mut order: Vec<usize> = (0..s.space().len()).collect();
    order.sort_by(|&a, &b| s.value(a).total_cmp(&s.value(b)).then(a.cmp(&b)));
    let mut levels: Vec<Level> = Vec::new();
    for w in order {
        let v = s.value(w);
        let p = s.space().prob(w);
        match levels.last_mut() {
            Some(l) if (v - l.value).abs() <= VALUE_MERGE_TOL => {
                l.prob += p;
                l.atoms.push(w);
            }
            _ => levels.push(Level {
                value: v,
                prob: p,
                atoms: vec![w],
            }),
        }
    }
    levels
}

/// Why an allocation fails to be comonotonic, if it does.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ComonotonicityFailure {
    /// The share takes different values on one level set of the aggregate.
    SplitLevel { agent: usize, level: f64, spread: f64 },
    /// The share decreases from one aggregate level to the next.
    Decreasing { agent: usize, from_level: f64, to_level: f64, drop: f64 },
}

pub fn comonotonicity_failure(a: &Allocation, tol: f64) -> Option<ComonotonicityFailure> {
    let levels = level_sets(&a.aggregate);
    for (i, x) in a.shares.iter().enumerate() {
        let mut prev_max: Option<(f64, f64)> = None;
        for l in &levels {
            let lo = l.atoms.iter().map(|&w| x.value(w)).fold(f64::INFINITY, f64::min);
            let hi = l.atoms.iter().map(|&w| x.value(w)).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > tol {
                return Some(ComonotonicityFailure::SplitLevel {
                    agent: i,
                    level: l.value,
                    spread: hi - lo,
                });
            }
            if let Some((pv, pmax)) = prev_max {
                if lo < pmax - tol {
                    return Some(ComonotonicityFailure::Decreasing {
                        agent: i,
                        from_level: pv,
                        to_level: l.value,
                        drop: pmax - lo,
                    });
                }
            }
            prev_max = Some((l.value, hi));
        }
    }
    None
}

/// Every share is a nondecreasing function of the aggregate, within `tol`.
pub fn is_comonotonic(a: &Allocation, tol: f64) -> bool {
    comonotonicity_failure(a, tol).is_none()
}

fn require_clearing(a: &Allocation) -> Result<()> {
    let r = check_clearing(a);
    if !r.clears {
        return Err(Error::Contract(format!(
            "allocation does not clear the aggregate (residual {:e})",
            r.residual
        )));
    }
    Ok(())
}

/// Replaces each share by its conditional mean given the aggregate.
pub fn condition_on_aggregate(a: &Allocation) -> Result<Allocation> {
    require_clearing(a)?;
    let shares = a
        .shares
        .iter()
        .map(|x| stochorder::conditional_expectation(x, &a.aggregate))
        .collect::<Result<Vec<_>>>()?;
    Allocation::new(shares, a.aggregate.clone())
}

#[derive(Debug, Clone, Serialize)]
pub struct ImprovementCertificate {
    /// `improved_i <=cx original_i`, per agent.
    pub convex_order: Vec<bool>,
    pub comonotonic: bool,
    /// `rho_i(improved_i) - rho_i(original_i)` for each supplied measure.
    pub objective_deltas: Vec<f64>,
    pub transfers: usize,
    pub clearing_residual: f64,
    /// Sum of share variances before and after.
    pub potential_before: f64,
    pub potential_after: f64,
}

impl ImprovementCertificate {
    pub fn all_verdicts_hold(&self) -> bool {
        self.comonotonic && self.convex_order.iter().all(|&v| v)
    }
}

#[derive(Debug, Clone)]
pub struct ImprovementOptions {
    pub max_transfers: usize,
    /// Measures (one per agent) whose changes the certificate records.
    pub measures: Vec<RiskMeasureSpec>,
}

impl Default for ImprovementOptions {
    fn default() -> Self {
        Self {
            max_transfers: DEFAULT_MAX_TRANSFERS,
            measures: Vec::new(),
        }
    }
}

pub fn comonotonic_improvement(a: &Allocation) -> Result<(Allocation, ImprovementCertificate)> {
    comonotonic_improvement_with(a, &ImprovementOptions::default())
}

pub fn comonotonic_improvement_with(
    a: &Allocation,
    opts: &ImprovementOptions,
) -> Result<(Allocation, ImprovementCertificate)> {
    require_clearing(a)?;
    if !opts.measures.is_empty() && opts.measures.len() != a.n_agents() {
        return Err(Error::Contract("one measure per agent expected".into()));
    }
    let conditioned = condition_on_aggregate(a)?;
    let levels = level_sets(&a.aggregate);
    let n = a.n_agents();

    // per-agent values on each aggregate level
    let mut x: Vec<Vec<f64>> = conditioned
        .shares
        .iter()
        .map(|share| levels.iter().map(|l| share.value(l.atoms[0])).collect())
        .collect();
    // exact integer weights when the level masses are rational, else raw masses
    let weights: Vec<f64> = match integer_weights(&levels.iter().map(|l| l.prob).collect::<Vec<_>>()) {
        Ok(counts) => counts.into_iter().map(|k| k as f64).collect(),
        Err(_) => levels.iter().map(|l| l.prob).collect(),
    };

    let scale = x
        .iter()
        .flatten()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let mut transfers = 0usize;

    while let Some((lo, hi, i)) = find_inversion(&x, tol) {
        if transfers >= opts.max_transfers {
            return Err(Error::NonTermination {
                transfers,
                worst_violation: x[i][lo] - x[i][hi],
            });
        }
        let j = partner(&x, lo, hi, i);
        let gap_i = x[i][lo] - x[i][hi];
        let gap_j = x[j][hi] - x[j][lo];
        if gap_j <= 0.0 {
            return Err(Error::Contract(format!(
                "no partner absorbs the inversion of agent {i} (aggregate levels do not increase?)"
            )));
        }
        let (w_lo, w_hi) = (weights[lo], weights[hi]);
        let mut delta = gap_i.min(gap_j);
        let (mut down, mut up);
        loop {
            // the larger move sits on the lighter level; w_lo * down = w_hi * up
            if w_lo >= w_hi {
                up = delta;
                down = delta * w_hi / w_lo;
            } else {
                down = delta;
                up = delta * w_lo / w_hi;
            }
            let change = w_lo * down * (2.0 * (down + up) - 2.0 * (gap_i + gap_j));
            if change < 0.0 {
                break;
            }
            // equal weights and equal gaps would swap both agents: meet halfway
            delta *= 0.5;
            if delta <= tol {
                return Err(Error::Contract("transfer cannot reduce the variance potential".into()));
            }
        }
        x[i][lo] -= down;
        x[i][hi] += up;
        x[j][lo] += down;
        x[j][hi] -= up;
        transfers += 1;
    }

    let mut shares = Vec::with_capacity(n);
    for xi in &x {
        let mut values = vec![0.0; a.space.len()];
        for (k, l) in levels.iter().enumerate() {
            for &w in &l.atoms {
                values[w] = xi[k];
            }
        }
        shares.push(RandomVariable::new(a.space.clone(), values)?);
    }
    let improved = Allocation::new(shares, a.aggregate.clone())?;

    let convex_order = improved
        .shares
        .iter()
        .zip(&a.shares)
        .map(|(y, x)| stochorder::convex_order_leq(y, x, CX_TOL))
        .collect();
    let objective_deltas = opts
        .measures
        .iter()
        .enumerate()
        .map(|(i, m)| Ok(m.evaluate(&improved.shares[i])? - m.evaluate(&a.shares[i])?))
        .collect::<Result<Vec<_>>>()?;
    let potential = |al: &Allocation| al.shares.iter().map(|s| s.variance()).sum::<f64>();
    let certificate = ImprovementCertificate {
        convex_order,
        comonotonic: is_comonotonic(&improved, CX_TOL),
        objective_deltas,
        transfers,
        clearing_residual: check_clearing(&improved).residual,
        potential_before: potential(a),
        potential_after: potential(&improved),
    };
    Ok((improved, certificate))
}

/// First `(lower level, higher level, agent)` whose share decreases, scanning
/// level pairs in lexicographic order and agents by index.
fn find_inversion(x: &[Vec<f64>], tol: f64) -> Option<(usize, usize, usize)> {
    let k = x.first().map_or(0, |r| r.len());
    for lo in 0..k {
        for hi in lo + 1..k {
            for (i, xi) in x.iter().enumerate() {
                if xi[lo] - xi[hi] > tol {
                    return Some((lo, hi, i));
                }
            }
        }
    }
    None
}

/// Agent with the largest increase from `lo` to `hi`; ties go to the lowest
/// index.
fn partner(x: &[Vec<f64>], lo: usize, hi: usize, skip: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_gap = f64::NEG_INFINITY;
    for (j, xj) in x.iter().enumerate() {
        if j == skip {
            continue;
        }
        let g = xj[hi] - xj[lo];
        if g > best_gap {
            best_gap = g;
            best = j;
        }
    }
    best
}
