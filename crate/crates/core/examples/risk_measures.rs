//! Finite spaces, quantiles, VaR / ES, and the convex order.
//!
//! Shows why a VaR ceiling is fragile: a mean-preserving spread can lower
//! VaR while raising ES.

use coshare::probspace::{FiniteSpace, RandomVariable};
use coshare::riskmeasures::{es, var, CxConsistency, RiskMeasureSpec};
use coshare::stochorder::{convex_order_leq, pigou_dalton_transfer, StopLossCurve, CX_TOL};

pub struct Summary {
    pub var_before: f64,
    pub var_after: f64,
    pub es_before: f64,
    pub es_after: f64,
    pub contraction_is_cx_smaller: bool,
}

pub fn run_example() -> coshare::Result<Summary> {
    let space = FiniteSpace::from_probs(&[0.9925, 0.0025, 0.0025, 0.0025])?;
    let x = RandomVariable::new(space, vec![0.0, 2.0, 2.0, 4.0])?;
    println!("E[X] = {}, Var[X] = {}", x.mean(), x.variance());
    for u in [0.99, 0.995, 0.9975] {
        println!("  VaR_{u}(X) = {}   ES_{u}(X) = {}", var(&x, u)?, es(&x, u)?);
    }

    // Y spreads the middle layer of X; a Pigou-Dalton transfer undoes it
    let y = x.with_values(vec![0.0, 1.0, 3.0, 4.0])?;
    let back = pigou_dalton_transfer(&y, 2, 1, 1.0, 1.0)?;
    let contraction_is_cx_smaller = convex_order_leq(&x, &y, CX_TOL) && back.values() == x.values();
    println!("X <=cx Y: {contraction_is_cx_smaller}");

    let curve = StopLossCurve::of(&y);
    println!("stop-loss knots of Y: {:?}", curve.breakpoints);

    for m in [RiskMeasureSpec::Var { alpha: 0.995 }, RiskMeasureSpec::Es { alpha: 0.995 }] {
        let tag = match m.cx_consistency() {
            CxConsistency::Consistent => "consistent",
            CxConsistency::NotConsistent => "not consistent",
        };
        println!("{} is {tag} with the convex order", m.name());
    }
    Ok(Summary {
        var_before: var(&x, 0.995)?,
        var_after: var(&y, 0.995)?,
        es_before: es(&x, 0.995)?,
        es_after: es(&y, 0.995)?,
        contraction_is_cx_smaller,
    })
}

#[allow(dead_code)]
fn main() -> coshare::Result<()> {
    let s = run_example()?;
    println!(
        "spread: VaR {} -> {}, ES {} -> {}",
        s.var_before, s.var_after, s.es_before, s.es_after
    );
    Ok(())
}
