//! Syntactic solidity classification and the seeded falsifier.
//!
//! Retention of one's own loss below a deductible ties shares to state
//! variables the aggregate does not see; the falsifier exhibits a feasible
//! allocation whose conditional-mean contraction breaks the constraint.
//! Plain caps are solid, and the falsifier comes back empty.

use coshare::allocation::Allocation;
use coshare::constraints::{classify_solidity, falsify_solidity, Constraint, SolidityStatus, FEASIBILITY_TOL};
use coshare::fixtures::retention_pair;
use coshare::probspace::{FiniteSpace, RandomVariable};

pub struct Summary {
    pub retention: SolidityStatus,
    pub witness_checks_pass: bool,
    pub caps: SolidityStatus,
    pub caps_witness: bool,
}

pub fn run_example() -> coshare::Result<Summary> {
    let f = retention_pair();
    let verdict = classify_solidity(&f.constraints, None);
    println!("retention: {:?} ({})", verdict.status, verdict.reason);
    let w = falsify_solidity(&f.constraints, &f.autarky, 1_000, 42, FEASIBILITY_TOL)?
        .expect("retention is falsifiable");
    println!("witness via {:?}:", w.source);
    for (i, (x, y)) in w.x.shares().iter().zip(w.y.shares()).enumerate() {
        println!("  agent {}: X = {:?}  ->  Y = {:?}", i + 1, x.values(), y.values());
    }
    for v in &w.violations {
        println!("  violated: {}", v.detail);
    }

    let space = FiniteSpace::from_probs(&[0.2, 0.3, 0.5])?;
    let share = |v: &[f64]| RandomVariable::new(space.clone(), v.to_vec());
    let x = Allocation::from_shares(vec![share(&[0.0, 2.0, 1.0])?, share(&[1.0, 0.0, 2.5])?])?;
    let caps = vec![Constraint::bounds(None, 0.0, 3.0)];
    let caps_verdict = classify_solidity(&caps, None);
    let none = falsify_solidity(&caps, &x, 5_000, 42, FEASIBILITY_TOL)?;
    println!("caps: {:?}; falsifier found a witness: {}", caps_verdict.status, none.is_some());

    Ok(Summary {
        retention: verdict.status,
        witness_checks_pass: w.checks.all_pass(),
        caps: caps_verdict.status,
        caps_witness: none.is_some(),
    })
}

#[allow(dead_code)]
fn main() -> coshare::Result<()> {
    run_example().map(|_| ())
}
