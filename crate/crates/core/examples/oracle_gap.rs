//! Brute-force oracles: the constrained infimum versus its comonotonic
//! restriction under a VaR ceiling, on a 33^4-point grid.

use coshare::allocation::comonotonicity_failure;
use coshare::constraints::FEASIBILITY_TOL;
use coshare::fixtures::var_ceiling;
use coshare::oracle::{comonotone_minimize, grid_minimize};
use coshare::report::exact_string;

pub struct Summary {
    pub unconstrained: f64,
    pub constrained: f64,
    pub comonotonic: f64,
}

pub fn run_example() -> coshare::Result<Summary> {
    let f = var_ceiling();
    let s = f.autarky.aggregate();
    let free = grid_minimize(s, &f.measures, &[], &f.grid, FEASIBILITY_TOL)?;
    let best = grid_minimize(s, &f.measures, &f.constraints, &f.grid, FEASIBILITY_TOL)?;
    let como = comonotone_minimize(s, &f.measures, &f.constraints, &f.grid, FEASIBILITY_TOL)?;
    let show = |x: f64| exact_string(x).unwrap_or_else(|| x.to_string());
    println!("grid of {} points", best.grid_size);
    println!("unconstrained {}  X_1 = {:?}", show(free.value), free.allocation.share(0).values());
    println!("constrained   {}  X_1 = {:?}", show(best.value), best.allocation.share(0).values());
    println!("comonotonic   {}  X_1 = {:?}", show(como.value), como.allocation.share(0).values());
    println!("why the constrained optimum is not comonotonic: {:?}", comonotonicity_failure(&best.allocation, 1e-9));
    Ok(Summary { unconstrained: free.value, constrained: best.value, comonotonic: como.value })
}

#[allow(dead_code)]
fn main() -> coshare::Result<()> {
    run_example().map(|_| ())
}
