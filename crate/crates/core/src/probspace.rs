//! Finite atomic probability spaces and random variables on them.
//!
//! Every finite computation in the crate runs on a [`FiniteSpace`]: an ordered
//! list of labelled atoms with strictly positive probabilities. A
//! [`RandomVariable`] assigns one real value per atom. Quantiles follow the
//! lower convention `inf{x : P(X <= x) >= u}` everywhere.
//!
//! [`GammaAggregate`] is the one continuous law supported: the Gamma(2,1)
//! aggregate of two independent unit exponentials, with a closed-form CDF and
//! a deterministic midpoint-quantile discretization.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Tolerance on the total probability mass of a space.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Values closer than this are treated as one support point.
pub const VALUE_MERGE_TOL: f64 = 1e-12;
/// Largest common denominator accepted by [`equal_weight_refinement`].
pub const REFINEMENT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub label: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    atoms: Vec<Atom>,
}

impl FiniteSpace {
    pub fn new(atoms: Vec<Atom>) -> Result<Arc<Self>> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        let mut total = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if !(a.prob > 0.0 && a.prob <= 1.0) || !a.prob.is_finite() {
                return Err(Error::InvalidSpace(format!(
                    "atom {i} ({}) has probability {} outside (0,1]",
                    a.label, a.prob
                )));
            }
            if atoms[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::InvalidSpace(format!("duplicate label {:?}", a.label)));
            }
            total += a.prob;
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidSpace(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Arc::new(Self { atoms }))
    }

    /// Space with atoms labelled `w0, w1, ...`.
    pub fn from_probs(probs: &[f64]) -> Result<Arc<Self>> {
        Self::new(
            probs
                .iter()
                .enumerate()
                .map(|(i, &p)| Atom {
                    label: format!("w{i}"),
                    prob: p,
                })
                .collect(),
        )
    }

    pub fn uniform(n: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        Self::from_probs(&vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn prob(&self, atom: usize) -> f64 {
        self.atoms[atom].prob
    }

    pub fn probs(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.prob).collect()
    }

    pub fn label(&self, atom: usize) -> &str {
        &self.atoms[atom].label
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.label == label)
    }
}

/// True when two space handles denote the same atoms.
pub fn same_space(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A real value per atom of a [`FiniteSpace`].
#[derive(Clone, PartialEq)]
pub struct RandomVariable {
    space: Arc<FiniteSpace>,
    values: Vec<f64>,
}

impl fmt::Debug for RandomVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("RandomVariable").field(&self.values).finish()
    }
}

impl RandomVariable {
    pub fn new(space: Arc<FiniteSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidVariable(format!(
                "{} values for a space of {} atoms",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVariable(format!("value at atom {i} is not finite")));
        }
        Ok(Self { space, values })
    }

    pub fn constant(space: Arc<FiniteSpace>, c: f64) -> Result<Self> {
        let n = space.len();
        Self::new(space, vec![c; n])
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, atom: usize) -> f64 {
        self.values[atom]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same space, values transformed atom by atom.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.space.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.space.clone(), values)
    }

    pub fn mean(&self) -> f64 {
        self.space
            .atoms()
            .iter()
            .zip(&self.values)
            .map(|(a, v)| a.prob * v)
            .sum()
    }

    /// Probability-weighted `(mean, variance)`; variance is clamped at zero.
    pub fn moments(&self) -> (f64, f64) {
        let mean = self.mean();
        let var: f64 = self
            .space
            .atoms()
            .iter()
            .zip(&self.values)
            .map(|(a, v)| a.prob * (v - mean) * (v - mean))
            .sum();
        (mean, var.max(0.0))
    }

    pub fn variance(&self) -> f64 {
        self.moments().1
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.space
            .atoms()
            .iter()
            .zip(&self.values)
            .map(|(a, &v)| a.prob * f(v))
            .sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The law of the variable: merged support points with their masses.
    pub fn distribution(&self) -> Distribution {
        Distribution::from_weighted(self.values.iter().cloned().zip(self.space.probs()))
    }

    /// Lower `u`-quantile.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.distribution().quantile(u)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !same_space(&self.space, &other.space) {
            return Err(Error::SpaceMismatch("operands live on different spaces".into()));
        }
        Self::new(
            self.space.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }
}

/// Discrete law: strictly increasing support points with positive masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    points: Vec<(f64, f64)>,
}

impl Distribution {
    pub fn from_weighted(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().filter(|(_, p)| *p > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match points.last_mut() {
                Some(last) if (v - last.0).abs() <= VALUE_MERGE_TOL => last.1 += p,
                _ => points.push((v, p)),
            }
        }
        Self { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn support(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().map(|(v, p)| v * p).sum()
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0,1)")));
        }
        let mut cum = 0.0;
        for &(v, p) in &self.points {
            cum += p;
            if cum >= u - PROB_SUM_TOL {
                return Ok(v);
            }
        }
        Ok(self.points.last().map(|p| p.0).unwrap_or(0.0))
    }
}

/// Free-function form of [`RandomVariable::quantile`].
pub fn quantile(x: &RandomVariable, u: f64) -> Result<f64> {
    x.quantile(u)
}

/// Free-function form of [`RandomVariable::moments`].
pub fn moments(x: &RandomVariable) -> (f64, f64) {
    x.moments()
}

pub fn distribution_of(x: &RandomVariable) -> Distribution {
    x.distribution()
}

/// Gamma law with shape 2 and rate 1: the sum of two independent unit
/// exponentials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GammaAggregate;

impl GammaAggregate {
    pub const SHAPE: f64 = 2.0;
    pub const RATE: f64 = 1.0;
    pub const QUANTILE_TOL: f64 = 1e-10;

    pub fn cdf(&self, q: f64) -> f64 {
        if q <= 0.0 {
            0.0
        } else if q == f64::INFINITY {
            1.0
        } else {
            1.0 - (1.0 + q) * (-q).exp()
        }
    }

    pub fn pdf(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            s * (-s).exp()
        }
    }

    pub fn mean(&self) -> f64 {
        2.0
    }

    pub fn variance(&self) -> f64 {
        2.0
    }

    /// Solves `cdf(q) = u` by bisection on a doubling bracket.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0,1)")));
        }
        let mut hi = 1.0;
        while self.cdf(hi) < u {
            hi *= 2.0;
        }
        // bisect to well below the stated tolerance so cdf round-trips tightly
        numeric::bisect(|q| self.cdf(q) - u, 0.0, hi, 1e-14)
            .ok_or_else(|| Error::Domain(format!("no gamma quantile bracket for {u}")))
    }

    /// `n` equal-probability atoms placed at the midpoint quantiles
    /// `(k - 1/2)/n`, returned with the aggregate as a random variable.
    pub fn discretize(&self, n: usize) -> Result<(Arc<FiniteSpace>, RandomVariable)> {
        if n < 2 {
            return Err(Error::Domain("discretization needs at least 2 atoms".into()));
        }
        let space = FiniteSpace::uniform(n)?;
        let values = (1..=n)
            .map(|k| self.quantile((k as f64 - 0.5) / n as f64))
            .collect::<Result<Vec<_>>>()?;
        let s = RandomVariable::new(space.clone(), values)?;
        Ok((space, s))
    }
}

pub fn gamma_quantile(g: &GammaAggregate, u: f64) -> Result<f64> {
    g.quantile(u)
}

pub fn discretize_gamma(g: &GammaAggregate, n: usize) -> Result<(Arc<FiniteSpace>, RandomVariable)> {
    g.discretize(n)
}

/// An equal-weight refinement: `counts[i]` copies of old atom `i`, each with
/// probability `1/total`.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub space: Arc<FiniteSpace>,
    /// new atom -> old atom
    pub map: Vec<usize>,
    pub counts: Vec<u64>,
}

impl Refinement {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Pushes a variable on the original space onto the refined space.
    pub fn push(&self, x: &RandomVariable) -> Result<RandomVariable> {
        if x.space().len() != self.counts.len() {
            return Err(Error::SpaceMismatch("variable is not on the refined space's parent".into()));
        }
        RandomVariable::new(
            self.space.clone(),
            self.map.iter().map(|&i| x.value(i)).collect(),
        )
    }
}

/// Integer multiplicities `k_i` with `p_i = k_i / N` for the least common
/// denominator `N <= 10^6`, or a refinement error.
pub fn integer_weights(probs: &[f64]) -> Result<Vec<u64>> {
    let mut fracs = Vec::with_capacity(probs.len());
    let mut lcm: u64 = 1;
    for &p in probs {
        let (n, d) = numeric::rationalize(p, REFINEMENT_CAP, 1e-14).ok_or_else(|| {
            Error::Refinement(format!("probability {p} has no denominator within {REFINEMENT_CAP}"))
        })?;
        lcm = lcm.lcm(&d);
        if lcm > REFINEMENT_CAP {
            return Err(Error::Refinement(format!(
                "common denominator exceeds {REFINEMENT_CAP}"
            )));
        }
        fracs.push((n, d));
    }
    let counts: Vec<u64> = fracs.iter().map(|&(n, d)| n * (lcm / d)).collect();
    if counts.iter().sum::<u64>() != lcm {
        return Err(Error::Refinement("rationalized probabilities do not sum to one".into()));
    }
    Ok(counts)
}

pub fn equal_weight_refinement(space: &FiniteSpace) -> Result<Refinement> {
    let counts = integer_weights(&space.probs())?;
    let total: u64 = counts.iter().sum();
    let mut atoms = Vec::with_capacity(total as usize);
    let mut map = Vec::with_capacity(total as usize);
    for (i, &k) in counts.iter().enumerate() {
        for j in 0..k {
            atoms.push(Atom {
                label: format!("{}#{j}", space.label(i)),
                prob: 1.0 / total as f64,
            });
            map.push(i);
        }
    }
    Ok(Refinement {
        space: FiniteSpace::new(atoms)?,
        map,
        counts,
    })
}
