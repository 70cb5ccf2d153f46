//! Constraint descriptors, feasibility checks, solidity classification, and a
//! seeded search for counterexamples to solidity.
//!
//! Classification is syntactic: a constraint list is certified `Solid` only
//! when every member belongs to a family whose feasible sets are closed under
//! componentwise mean-preserving contractions (pathwise bounds, expectation
//! constraints, Orlicz-type bounds, ceilings on convex-order consistent
//! measures). `NotSolid` means "not certified"; [`falsify_solidity`] supplies
//! concrete witnesses where it can find them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{self, check_clearing, Allocation};
use crate::error::{Error, Result};
use crate::probspace::RandomVariable;
use crate::riskmeasures::{expected_convex_loss, CxConsistency, Ladder, RiskMeasureSpec};
use crate::stochorder::{convex_order_leq, CX_TOL};

/// Default feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "le")]
    Le,
    #[serde(rename = "eq")]
    Eq,
    #[serde(rename = "ge")]
    Ge,
}

/// Continuous piecewise-linear function of the aggregate, given by breakpoints
/// and extended flat beyond the first and last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    #[serde(with = "crate::real::vec")]
    pub s: Vec<f64>,
    #[serde(with = "crate::real::vec")]
    pub value: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(s: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        let f = Self { s, value };
        f.validate()?;
        Ok(f)
    }

    pub fn constant(c: f64) -> Self {
        Self { s: vec![0.0], value: vec![c] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s.is_empty() || self.s.len() != self.value.len() {
            return Err(Error::Domain(
                "piecewise-linear function needs matching, nonempty breakpoint lists".into(),
            ));
        }
        if self.s.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        if self.s.iter().chain(&self.value).any(|v| !v.is_finite()) {
            return Err(Error::Domain("piecewise-linear values must be finite".into()));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            return self.value[0];
        }
        if s >= self.s[n - 1] {
            return self.value[n - 1];
        }
        let k = self.s.partition_point(|&t| t <= s);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        let (v0, v1) = (self.value[k - 1], self.value[k]);
        v0 + (v1 - v0) * (s - s0) / (s1 - s0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `lower <= X <= upper` on every atom.
    PathwiseBounds {
        #[serde(with = "crate::real", default = "neg_inf")]
        lower: f64,
        #[serde(with = "crate::real", default = "pos_inf")]
        upper: f64,
    },
    /// `E[X] (<=|=|>=) c`.
    Expectation {
        relation: Relation,
        #[serde(with = "crate::real")]
        c: f64,
    },
    /// `E[phi(X)] <= c` for a convex ladder `phi`.
    OrliczBound {
        ladder: Ladder,
        #[serde(with = "crate::real")]
        c: f64,
    },
    RiskCeiling {
        measure: RiskMeasureSpec,
        #[serde(with = "crate::real")]
        c: f64,
    },
    RiskFloor {
        measure: RiskMeasureSpec,
        #[serde(with = "crate::real")]
        c: f64,
    },
    /// Deductible on the agent's own loss: below `d` the loss is kept in
    /// full (`X = endowment`), at or above `d` at least `d` is kept.
    IdiosyncraticRetention {
        #[serde(with = "crate::real::vec")]
        endowment: Vec<f64>,
        #[serde(with = "crate::real")]
        d: f64,
    },
    /// `lower(S) <= X <= upper(S)`; a missing side is unbounded.
    AggregateEnvelope {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<PiecewiseLinear>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<PiecewiseLinear>,
    },
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

/// A constraint on one agent's share, or on every share when `agent` is
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<usize>,
    #[serde(flatten)]
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn agent(agent: usize, kind: ConstraintKind) -> Self {
        Self { agent: Some(agent), kind }
    }

    pub fn all(kind: ConstraintKind) -> Self {
        Self { agent: None, kind }
    }

    pub fn bounds(agent: Option<usize>, lower: f64, upper: f64) -> Self {
        Self { agent, kind: ConstraintKind::PathwiseBounds { lower, upper } }
    }

    pub fn validate(&self, n_agents: usize, n_atoms: usize) -> Result<()> {
        if let Some(i) = self.agent {
            if i >= n_agents {
                return Err(Error::Domain(format!("constraint refers to agent {i} of {n_agents}")));
            }
        }
        match &self.kind {
            ConstraintKind::PathwiseBounds { lower, upper } => {
                if lower.is_nan() || upper.is_nan() || lower > upper {
                    return Err(Error::Domain(format!("bounds need lower <= upper, got [{lower}, {upper}]")));
                }
            }
            ConstraintKind::Expectation { c, .. } | ConstraintKind::OrliczBound { c, .. } => {
                if !c.is_finite() {
                    return Err(Error::Domain("constraint level must be finite".into()));
                }
                if let ConstraintKind::OrliczBound { ladder, .. } = &self.kind {
                    ladder.validate()?;
                }
            }
            ConstraintKind::RiskCeiling { measure, c } | ConstraintKind::RiskFloor { measure, c } => {
                measure.validate()?;
                if c.is_nan() {
                    return Err(Error::Domain("risk bound must be a number".into()));
                }
            }
            ConstraintKind::IdiosyncraticRetention { endowment, d } => {
                if endowment.len() != n_atoms {
                    return Err(Error::Domain(format!(
                        "retention endowment has {} values for {n_atoms} atoms",
                        endowment.len()
                    )));
                }
                if !d.is_finite() {
                    return Err(Error::Domain("deductible must be finite".into()));
                }
            }
            ConstraintKind::AggregateEnvelope { lower, upper } => {
                for f in lower.iter().chain(upper) {
                    f.validate()?;
                }
            }
        }
        Ok(())
    }

    fn agents(&self, n: usize) -> Vec<usize> {
        match self.agent {
            Some(i) => vec![i],
            None => (0..n).collect(),
        }
    }
}

/// One violated constraint on one agent, with its magnitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: usize,
    pub agent: usize,
    /// The atom where a pathwise constraint fails worst, if pathwise.
    pub atom: Option<usize>,
    pub magnitude: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Worst pathwise excess `(atom, amount)` of `excess(w, x(w))` over atoms.
fn worst_atom(x: &RandomVariable, excess: impl Fn(usize, f64) -> f64) -> Option<(usize, f64)> {
    (0..x.space().len())
        .map(|w| (w, excess(w, x.value(w))))
        .filter(|&(_, e)| e > 0.0)
        .fold(None, |best: Option<(usize, f64)>, (w, e)| match best {
            Some((_, b)) if b >= e => best,
            _ => Some((w, e)),
        })
}

fn violation_of(
    kind: &ConstraintKind,
    x: &RandomVariable,
    s: &RandomVariable,
    tol: f64,
) -> Result<Option<(Option<usize>, f64, String)>> {
    let out = match kind {
        ConstraintKind::PathwiseBounds { lower, upper } => {
            worst_atom(x, |_, v| (lower - v).max(v - upper)).filter(|&(_, e)| e > tol).map(|(w, e)| {
                (Some(w), e, format!("share {} outside [{lower}, {upper}]", x.value(w)))
            })
        }
        ConstraintKind::Expectation { relation, c } => {
            let m = x.mean();
            let e = match relation {
                Relation::Le => m - c,
                Relation::Eq => (m - c).abs(),
                Relation::Ge => c - m,
            };
            (e > tol).then(|| (None, e, format!("mean {m} violates {relation:?} {c}")))
        }
        ConstraintKind::OrliczBound { ladder, c } => {
            let v = expected_convex_loss(x, ladder);
            (v - c > tol).then(|| (None, v - c, format!("E[phi(X)] = {v} exceeds {c}")))
        }
        ConstraintKind::RiskCeiling { measure, c } => {
            let v = measure.evaluate(x)?;
            (v - c > tol).then(|| (None, v - c, format!("{} = {v} exceeds {c}", measure.name())))
        }
        ConstraintKind::RiskFloor { measure, c } => {
            let v = measure.evaluate(x)?;
            (c - v > tol).then(|| (None, c - v, format!("{} = {v} below {c}", measure.name())))
        }
        ConstraintKind::IdiosyncraticRetention { endowment, d } => {
            if endowment.len() != x.space().len() {
                return Err(Error::SpaceMismatch("retention endowment on another space".into()));
            }
            worst_atom(x, |w, v| {
                let z = endowment[w];
                if z < *d {
                    (v - z).abs()
                } else {
                    d - v
                }
            })
            .filter(|&(_, e)| e > tol)
            .map(|(w, e)| {
                (Some(w), e, format!("retention broken: share {} on endowment {}", x.value(w), endowment[w]))
            })
        }
        ConstraintKind::AggregateEnvelope { lower, upper } => worst_atom(x, |w, v| {
            let sv = s.value(w);
            let below = lower.as_ref().map_or(f64::NEG_INFINITY, |f| f.eval(sv) - v);
            let above = upper.as_ref().map_or(f64::NEG_INFINITY, |f| v - f.eval(sv));
            below.max(above)
        })
        .filter(|&(_, e)| e > tol)
        .map(|(w, e)| (Some(w), e, format!("share {} outside the envelope at S = {}", x.value(w), s.value(w)))),
    };
    Ok(out)
}

/// Evaluates every constraint on every agent it applies to.
pub fn check_feasible(a: &Allocation, constraints: &[Constraint], tol: f64) -> Result<FeasibilityReport> {
    let mut violations = Vec::new();
    for (k, c) in constraints.iter().enumerate() {
        c.validate(a.n_agents(), a.space().len())?;
        for i in c.agents(a.n_agents()) {
            if let Some((atom, magnitude, detail)) = violation_of(&c.kind, a.share(i), a.aggregate(), tol)? {
                violations.push(Violation { constraint: k, agent: i, atom, magnitude, detail });
            }
        }
    }
    Ok(FeasibilityReport { feasible: violations.is_empty(), violations })
}

/// Short-circuiting feasibility test for search loops.
pub fn is_feasible(a: &Allocation, constraints: &[Constraint], tol: f64) -> Result<bool> {
    for c in constraints {
        for i in c.agents(a.n_agents()) {
            if violation_of(&c.kind, a.share(i), a.aggregate(), tol)?.is_some() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolidityStatus {
    NotSolid,
    Unknown,
    Solid,
}

impl SolidityStatus {
    /// Status of an intersection of constraint sets.
    pub fn meet(self, other: Self) -> Self {
        self.min(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolidityVerdict {
    pub status: SolidityStatus,
    pub reason: String,
}

/// Status of a single constraint, with the reason behind it.
pub fn classify_one(c: &Constraint, support: Option<&[f64]>) -> (SolidityStatus, String) {
    use SolidityStatus::*;
    match &c.kind {
        ConstraintKind::PathwiseBounds { .. } => (Solid, "deterministic pathwise bounds".into()),
        ConstraintKind::Expectation { .. } => (Solid, "linear expectation constraint".into()),
        ConstraintKind::OrliczBound { .. } => (Solid, "Orlicz-type bound with a convex loss".into()),
        ConstraintKind::RiskCeiling { measure, .. } => match measure.cx_consistency() {
            CxConsistency::Consistent => (Solid, format!("ceiling on convex-order consistent {}", measure.name())),
            CxConsistency::NotConsistent => (
                NotSolid,
                format!("ceiling on {}, which is not convex-order consistent", measure.name()),
            ),
        },
        ConstraintKind::RiskFloor { measure, .. } => (
            NotSolid,
            format!("floor on {}: contractions can push the share below it", measure.name()),
        ),
        ConstraintKind::IdiosyncraticRetention { .. } => (
            NotSolid,
            "retention couples the share to a state variable outside sigma(S)".into(),
        ),
        ConstraintKind::AggregateEnvelope { upper, .. } => {
            if let (Some(u), Some(support)) = (upper, support) {
                let mut pts = support.to_vec();
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                for w in pts.windows(2) {
                    let slope = (u.eval(w[1]) - u.eval(w[0])) / (w[1] - w[0]);
                    if slope > 1.0 + 1e-12 {
                        return (
                            NotSolid,
                            format!(
                                "upper envelope rises with slope {slope} > 1 between S = {} and S = {}",
                                w[0], w[1]
                            ),
                        );
                    }
                }
            }
            (Unknown, "aggregate envelope: no solidity argument available".into())
        }
    }
}

/// Meet of the per-constraint statuses. `support` is the support of the
/// aggregate, used by the envelope slope test.
pub fn classify_solidity(constraints: &[Constraint], support: Option<&[f64]>) -> SolidityVerdict {
    let mut status = SolidityStatus::Solid;
    let mut reasons = Vec::new();
    for (k, c) in constraints.iter().enumerate() {
        let (st, why) = classify_one(c, support);
        if st < SolidityStatus::Solid {
            reasons.push(format!("constraint {k}: {why}"));
        }
        status = status.meet(st);
    }
    let reason = if reasons.is_empty() {
        if constraints.is_empty() {
            "no constraints".into()
        } else {
            "every constraint belongs to a solid family".into()
        }
    } else {
        reasons.join("; ")
    };
    SolidityVerdict { status, reason }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    ComonotonicImprovement,
    Conditioning,
    PigouDalton,
}

/// The three defining checks of a counterexample, each computed afresh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessChecks {
    pub x_feasible: bool,
    pub y_clears: bool,
    pub convex_order: Vec<bool>,
    pub y_infeasible: bool,
}

impl WitnessChecks {
    pub fn all_pass(&self) -> bool {
        self.x_feasible && self.y_clears && self.y_infeasible && self.convex_order.iter().all(|&b| b)
    }
}

/// A feasible `x` and a componentwise convex-order reduction `y` of it that
/// clears the same aggregate but is infeasible.
#[derive(Debug, Clone)]
pub struct Witness {
    pub x: Allocation,
    pub y: Allocation,
    pub source: WitnessSource,
    pub checks: WitnessChecks,
    pub violations: Vec<Violation>,
}

pub fn verify_witness(x: &Allocation, y: &Allocation, constraints: &[Constraint], tol: f64) -> Result<WitnessChecks> {
    let y_report = check_feasible(y, constraints, tol)?;
    Ok(WitnessChecks {
        x_feasible: check_feasible(x, constraints, tol)?.feasible,
        y_clears: check_clearing(y).clears
            && x.aggregate().values().iter().zip(y.aggregate().values()).all(|(a, b)| (a - b).abs() <= 1e-12),
        convex_order: x
            .shares()
            .iter()
            .zip(y.shares())
            .map(|(xi, yi)| convex_order_leq(yi, xi, CX_TOL))
            .collect(),
        y_infeasible: !y_report.feasible,
    })
}

fn accept(x: &Allocation, y: Allocation, source: WitnessSource, constraints: &[Constraint], tol: f64) -> Result<Option<Witness>> {
    let checks = verify_witness(x, &y, constraints, tol)?;
    if !checks.all_pass() {
        return Ok(None);
    }
    let violations = check_feasible(&y, constraints, tol)?.violations;
    Ok(Some(Witness { x: x.clone(), y, source, checks, violations }))
}

/// Paired random transfer: agent `i` contracts from atom `u` toward atom `v`
/// while agent `j`, whose values are ordered the other way on that pair,
/// contracts from `v` toward `u`. Clearing holds because the two moves cancel
/// atomwise. Returns `None` when the drawn pair admits no such move.
fn paired_transfer(y: &Allocation, rng: &mut ChaCha8Rng) -> Option<Allocation> {
    let n = y.n_agents();
    let m = y.space().len();
    if n < 2 || m < 2 {
        return None;
    }
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let u = rng.gen_range(0..m);
    let mut v = rng.gen_range(0..m - 1);
    if v >= u {
        v += 1;
    }
    let (xi, xj) = (y.share(i), y.share(j));
    let gi = xi.value(u) - xi.value(v);
    let gj = xj.value(v) - xj.value(u);
    if gi <= 0.0 || gj <= 0.0 {
        return None;
    }
    let (pu, pv) = (y.space().prob(u), y.space().prob(v));
    // a on atom u, b = a * pu / pv on atom v; each agent may at most close its gap
    let cap = (gi * pv / (pu + pv)).min(gj * pv / (pu + pv));
    let a = cap * rng.gen_range(0.05..=1.0);
    let b = a * pu / pv;
    let mut vi = xi.values().to_vec();
    let mut vj = xj.values().to_vec();
    vi[u] -= a;
    vi[v] += b;
    vj[u] += a;
    vj[v] -= b;
    let mut shares = y.shares().to_vec();
    shares[i] = xi.with_values(vi).ok()?;
    shares[j] = xj.with_values(vj).ok()?;
    Allocation::new(shares, y.aggregate().clone()).ok()
}

/// Looks for a counterexample to solidity starting from the feasible
/// allocation `x`. Tries the comonotonic improvement, then conditioning on
/// the aggregate, then up to `budget` seeded random paired Pigou–Dalton
/// transfers (in chains of eight from `x`). `Ok(None)` means none was found
/// within the budget, which is not a proof of solidity.
pub fn falsify_solidity(
    constraints: &[Constraint],
    x: &Allocation,
    budget: usize,
    seed: u64,
    tol: f64,
) -> Result<Option<Witness>> {
    let report = check_feasible(x, constraints, tol)?;
    if !report.feasible {
        return Err(Error::Contract(format!(
            "the starting allocation must be feasible ({} violations)",
            report.violations.len()
        )));
    }
    if !check_clearing(x).clears {
        return Err(Error::Contract("the starting allocation does not clear".into()));
    }
    let (improved, _) = allocation::comonotonic_improvement(x)?;
    if let Some(w) = accept(x, improved, WitnessSource::ComonotonicImprovement, constraints, tol)? {
        return Ok(Some(w));
    }
    let conditioned = allocation::condition_on_aggregate(x)?;
    if let Some(w) = accept(x, conditioned, WitnessSource::Conditioning, constraints, tol)? {
        return Ok(Some(w));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = x.clone();
    for step in 0..budget {
        if step % 8 == 0 {
            current = x.clone();
        }
        let Some(next) = paired_transfer(&current, &mut rng) else {
            continue;
        };
        if !is_feasible(&next, constraints, tol)? {
            if let Some(w) = accept(x, next, WitnessSource::PigouDalton, constraints, tol)? {
                return Ok(Some(w));
            }
            continue;
        }
        current = next;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::FiniteSpace;

    fn rv(space: &std::sync::Arc<FiniteSpace>, v: &[f64]) -> RandomVariable {
        RandomVariable::new(space.clone(), v.to_vec()).unwrap()
    }

    /// Two independent Bernoulli(1/2) losses, atoms 00, 01, 10, 11.
    fn bernoulli_pair() -> (Allocation, Vec<Constraint>) {
        let space = FiniteSpace::uniform(4).unwrap();
        let z1 = [0.0, 0.0, 1.0, 1.0];
        let z2 = [0.0, 1.0, 0.0, 1.0];
        let a = Allocation::from_shares(vec![rv(&space, &z1), rv(&space, &z2)]).unwrap();
        let cs = vec![
            Constraint::agent(0, ConstraintKind::IdiosyncraticRetention { endowment: z1.to_vec(), d: 1.0 }),
            Constraint::agent(1, ConstraintKind::IdiosyncraticRetention { endowment: z2.to_vec(), d: 1.0 }),
        ];
        (a, cs)
    }

    fn var_ceiling_space() -> (Allocation, Vec<Constraint>) {
        let space = FiniteSpace::from_probs(&[0.9925, 0.0025, 0.0025, 0.0025]).unwrap();
        let z = [0.0, 1.0, 1.0, 2.0];
        let a = Allocation::from_shares(vec![rv(&space, &z), rv(&space, &z)]).unwrap();
        let cs = vec![
            Constraint::bounds(None, 0.0, f64::INFINITY),
            Constraint::all(ConstraintKind::RiskCeiling { measure: RiskMeasureSpec::Var { alpha: 0.995 }, c: 1.0 }),
        ];
        (a, cs)
    }

    fn step_up_envelope() -> Constraint {
        Constraint::agent(
            0,
            ConstraintKind::AggregateEnvelope {
                lower: Some(PiecewiseLinear::constant(0.25)),
                upper: Some(PiecewiseLinear::new(vec![2.0, 3.0], vec![0.25, 1.75]).unwrap()),
            },
        )
    }

    #[test]
    fn var_ceiling_autarky_is_feasible() {
        let (a, cs) = var_ceiling_space();
        assert!(check_feasible(&a, &cs, FEASIBILITY_TOL).unwrap().feasible);
    }

    #[test]
    fn half_aggregate_breaks_retention() {
        let (a, cs) = bernoulli_pair();
        let half = a.aggregate().map(|s| s / 2.0).unwrap();
        let y = Allocation::new(vec![half.clone(), half], a.aggregate().clone()).unwrap();
        let rep = check_feasible(&y, &cs, FEASIBILITY_TOL).unwrap();
        assert!(!rep.feasible);
        // agent 1 must keep 0 on atom (0,1)
        assert!(rep.violations.iter().any(|v| v.agent == 0 && v.atom == Some(1) && v.magnitude == 0.5));
    }

    #[test]
    fn rearranged_step_up_breaks_retention() {
        let space = FiniteSpace::uniform(3).unwrap();
        let x1 = rv(&space, &[0.25, 0.75, 1.25]);
        let s = rv(&space, &[1.0, 2.0, 3.0]);
        let a = Allocation::with_implied_last(vec![x1], s).unwrap();
        let rep = check_feasible(&a, &[step_up_envelope()], FEASIBILITY_TOL).unwrap();
        assert!(!rep.feasible);
        assert_eq!(rep.violations[0].atom, Some(1));
    }

    #[test]
    fn classification_examples() {
        use SolidityStatus::*;
        let caps = vec![Constraint::bounds(None, 0.0, 5.0)];
        assert_eq!(classify_solidity(&caps, None).status, Solid);
        let (_, var_cs) = var_ceiling_space();
        assert_eq!(classify_solidity(&var_cs, None).status, NotSolid);
        let env = classify_solidity(&[step_up_envelope()], Some(&[1.0, 2.0, 3.0]));
        assert_eq!(env.status, NotSolid);
        assert!(env.reason.contains("1.5"));
        assert_eq!(classify_solidity(&[step_up_envelope()], None).status, Unknown);
        let (_, ret) = bernoulli_pair();
        assert_eq!(classify_solidity(&ret, None).status, NotSolid);
        let es_cap = Constraint::all(ConstraintKind::RiskCeiling { measure: RiskMeasureSpec::Es { alpha: 0.9 }, c: 2.0 });
        let floor = Constraint::all(ConstraintKind::Expectation { relation: Relation::Ge, c: 0.1 });
        assert_eq!(classify_solidity(&[es_cap.clone(), floor], None).status, Solid);
        let es_floor = Constraint::all(ConstraintKind::RiskFloor { measure: RiskMeasureSpec::Es { alpha: 0.9 }, c: 2.0 });
        assert_eq!(classify_solidity(&[es_cap, es_floor], None).status, NotSolid);
    }

    #[test]
    fn meet_is_intersection_closure() {
        use SolidityStatus::*;
        assert_eq!(Solid.meet(Solid), Solid);
        assert_eq!(Solid.meet(Unknown), Unknown);
        assert_eq!(Unknown.meet(NotSolid), NotSolid);
        assert_eq!(Solid.meet(NotSolid), NotSolid);
    }

    #[test]
    fn falsifier_finds_conditional_mean_witness() {
        let (a, cs) = bernoulli_pair();
        let w = falsify_solidity(&cs, &a, 100, 7, FEASIBILITY_TOL).unwrap().expect("witness");
        assert!(w.checks.all_pass());
        for y in w.y.shares() {
            assert_eq!(y.values(), &[0.0, 0.5, 0.5, 1.0]);
        }
    }

    #[test]
    fn falsifier_comes_up_empty_on_caps() {
        let space = FiniteSpace::uniform(5).unwrap();
        let a = Allocation::from_shares(vec![
            rv(&space, &[0.0, 2.0, 1.0, 3.0, 0.5]),
            rv(&space, &[1.0, 0.0, 2.5, 1.0, 3.0]),
            rv(&space, &[3.0, 1.0, 0.0, 0.0, 2.0]),
        ])
        .unwrap();
        let cs = vec![Constraint::bounds(None, 0.0, 3.0)];
        assert!(falsify_solidity(&cs, &a, 10_000, 11, FEASIBILITY_TOL).unwrap().is_none());
    }

    #[test]
    fn falsifier_rejects_infeasible_start() {
        let (a, _) = bernoulli_pair();
        let cs = vec![Constraint::bounds(None, 0.5, 1.0)];
        assert!(falsify_solidity(&cs, &a, 10, 0, FEASIBILITY_TOL).is_err());
    }

    #[test]
    fn serde_shape() {
        let c: Constraint = serde_json::from_str(r#"{"agent":1,"kind":"pathwise_bounds","lower":0}"#).unwrap();
        assert_eq!(c, Constraint::bounds(Some(1), 0.0, f64::INFINITY));
        let c: Constraint = serde_json::from_str(
            r#"{"kind":"risk_ceiling","measure":{"kind":"var","alpha":0.995},"c":1}"#,
        )
        .unwrap();
        assert_eq!(c.agent, None);
        let back: Constraint = serde_json::from_str(&serde_json::to_string(&step_up_envelope()).unwrap()).unwrap();
        assert_eq!(back, step_up_envelope());
    }

    #[test]
    fn envelope_interpolates_and_extends_flat() {
        let f = PiecewiseLinear::new(vec![1.0, 3.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.eval(9.0), 2.0);
        assert!(PiecewiseLinear::new(vec![1.0, 1.0], vec![0.0, 2.0]).is_err());
    }
}
