//! Two mean-variance agents sharing a Gamma(2,1) loss when each share must
//! keep its own 95% VaR at or below 3.
//!
//! Compares the unconstrained optimum, the constrained optimum (which jumps
//! at the aggregate VaR and is not comonotonic), the best comonotonic rule,
//! and autarky.

use coshare::mvsolver::{var_scenario, VarScenario, VarScenarioReport};

pub fn run_example() -> coshare::Result<VarScenarioReport> {
    let rep = var_scenario(&VarScenario::default())?;
    let v = rep.values;
    println!("aggregate VaR q = {:.6}", rep.q);
    println!("unconstrained  {:.6}", v.unconstrained);
    println!("constrained    {:.6}   (m* = {:.4}, a = {:.4}, r = {:.4})", v.constrained, rep.m_star, rep.a, rep.r);
    println!("comonotonic    {:.6}", v.comonotonic);
    println!("autarky        {:.6}", v.autarky);
    println!("ordering holds: {}", rep.ordering_holds);
    let w = rep.witness;
    println!(
        "not comonotonic: between s = {:.3} and {:.3}, X_1 goes {:.3} -> {:.3} while X_2 goes {:.3} -> {:.3}",
        w.s1, w.s2, w.x1.0, w.x1.1, w.x2.0, w.x2.1
    );
    Ok(rep)
}

#[allow(dead_code)]
fn main() -> coshare::Result<()> {
    run_example().map(|_| ())
}
