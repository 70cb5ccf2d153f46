//! The small canonical instances used by `reproduce`, the examples, and the
//! tests.

use crate::allocation::Allocation;
use crate::constraints::{Constraint, ConstraintKind, PiecewiseLinear};
use crate::oracle::{Axis, GridSpec};
use crate::probspace::{FiniteSpace, RandomVariable};
use crate::riskmeasures::RiskMeasureSpec;

fn rv(space: &std::sync::Arc<FiniteSpace>, v: &[f64]) -> RandomVariable {
    RandomVariable::new(space.clone(), v.to_vec()).expect("fixture values are valid")
}

/// Two independent fair coin losses on atoms `(0,0), (0,1), (1,0), (1,1)`,
/// each agent retaining its own loss below the deductible 1.
#[derive(Debug, Clone)]
pub struct RetentionPair {
    pub autarky: Allocation,
    pub constraints: Vec<Constraint>,
}

pub fn retention_pair() -> RetentionPair {
    let space = FiniteSpace::new(
        ["(0,0)", "(0,1)", "(1,0)", "(1,1)"]
            .iter()
            .map(|l| crate::probspace::Atom { label: l.to_string(), prob: 0.25 })
            .collect(),
    )
    .expect("uniform space");
    let z1 = [0.0, 0.0, 1.0, 1.0];
    let z2 = [0.0, 1.0, 0.0, 1.0];
    let autarky = Allocation::from_shares(vec![rv(&space, &z1), rv(&space, &z2)]).expect("clears");
    let constraints = vec![
        Constraint::agent(0, ConstraintKind::IdiosyncraticRetention { endowment: z1.to_vec(), d: 1.0 }),
        Constraint::agent(1, ConstraintKind::IdiosyncraticRetention { endowment: z2.to_vec(), d: 1.0 }),
    ];
    RetentionPair { autarky, constraints }
}

/// Three equally likely states `S = 1, 2, 3`, expected-shortfall agents, and
/// a step-up cap on agent 1 that jumps by 3/2 between the top two states.
#[derive(Debug, Clone)]
pub struct StepUp {
    pub aggregate: RandomVariable,
    pub measures: Vec<RiskMeasureSpec>,
    pub constraints: Vec<Constraint>,
    /// Agent 1's share `(1/4, 1/4, a)` for `a` in `[1/4, 7/4]`.
    pub grid: GridSpec,
}

pub fn step_up(step: f64) -> StepUp {
    let space = FiniteSpace::new(
        ["S=1", "S=2", "S=3"]
            .iter()
            .map(|l| crate::probspace::Atom { label: l.to_string(), prob: 1.0 / 3.0 })
            .collect(),
    )
    .expect("uniform space");
    let aggregate = rv(&space, &[1.0, 2.0, 3.0]);
    let envelope = Constraint::agent(
        0,
        ConstraintKind::AggregateEnvelope {
            lower: Some(PiecewiseLinear::constant(0.25)),
            upper: Some(PiecewiseLinear::new(vec![2.0, 3.0], vec![0.25, 1.75]).expect("increasing knots")),
        },
    );
    StepUp {
        aggregate,
        measures: vec![RiskMeasureSpec::Es { alpha: 0.2 }, RiskMeasureSpec::Es { alpha: 1.0 / 3.0 }],
        constraints: vec![envelope],
        grid: GridSpec::Family {
            base: vec![vec![0.25, 0.25, 0.0]],
            direction: vec![vec![0.0, 0.0, 1.0]],
            param: Axis::new(0.25, 1.75, step).expect("step divides [1/4, 7/4]"),
        },
    }
}

impl StepUp {
    /// The allocation with agent 1 holding `(1/4, 1/4, a)`.
    pub fn allocation(&self, a: f64) -> Allocation {
        let x1 = rv(self.aggregate.space(), &[0.25, 0.25, a]);
        Allocation::with_implied_last(vec![x1], self.aggregate.clone()).expect("clears")
    }
}

/// A rare two-layer loss shared under nonnegativity and a 99.5% VaR
/// ceiling of 1; atoms `A0, A1a, A1b, A2`.
#[derive(Debug, Clone)]
pub struct VarCeiling {
    pub autarky: Allocation,
    pub measures: Vec<RiskMeasureSpec>,
    pub constraints: Vec<Constraint>,
    /// Agent 1's share on every atom over `[0, 4]` in steps of 1/8.
    pub grid: GridSpec,
}

pub fn var_ceiling() -> VarCeiling {
    let space = FiniteSpace::new(
        [("A0", 0.9925), ("A1a", 0.0025), ("A1b", 0.0025), ("A2", 0.0025)]
            .iter()
            .map(|(l, p)| crate::probspace::Atom { label: l.to_string(), prob: *p })
            .collect(),
    )
    .expect("probabilities sum to one");
    let z = [0.0, 1.0, 1.0, 2.0];
    VarCeiling {
        autarky: Allocation::from_shares(vec![rv(&space, &z), rv(&space, &z)]).expect("clears"),
        measures: vec![RiskMeasureSpec::Es { alpha: 0.99 }, RiskMeasureSpec::Es { alpha: 0.9925 }],
        constraints: vec![
            Constraint::bounds(None, 0.0, f64::INFINITY),
            Constraint::all(ConstraintKind::RiskCeiling { measure: RiskMeasureSpec::Var { alpha: 0.995 }, c: 1.0 }),
        ],
        grid: GridSpec::uniform(1, 4, Axis::new(0.0, 4.0, 0.125).expect("eighths")),
    }
}

/// Risk aversions and upper caps of the four-agent saturation curve.
pub const SATURATION_DELTA: [f64; 4] = [2.0, 3.0, 5.0, 6.0];
pub const SATURATION_CAPS: [f64; 4] = [5.0, 8.0, 3.0, f64::INFINITY];
