//! Constructive comonotonic improvement with its certificate.
//!
//! Starts from the constrained optimum of a step-up cap problem, where
//! agent 1 carries `(1/4, 1/4, 7/4)` on `S = 1, 2, 3`, and rearranges it into
//! a comonotonic allocation that is componentwise smaller in convex order.

use coshare::allocation::{comonotonic_improvement_with, is_comonotonic, ImprovementOptions};
use coshare::constraints::{check_feasible, FEASIBILITY_TOL};
use coshare::fixtures::step_up;

pub struct Summary {
    pub improved_x1: Vec<f64>,
    pub verdicts_hold: bool,
    pub feasible_after: bool,
}

pub fn run_example() -> coshare::Result<Summary> {
    let f = step_up(0.25);
    let x = f.allocation(1.75);
    println!("start:    X_1 = {:?}, comonotonic = {}", x.share(0).values(), is_comonotonic(&x, 1e-9));

    let opts = ImprovementOptions { measures: f.measures.clone(), ..Default::default() };
    let (y, cert) = comonotonic_improvement_with(&x, &opts)?;
    println!("improved: X_1 = {:?}, X_2 = {:?}", y.share(0).values(), y.share(1).values());
    println!(
        "transfers {}, variance potential {} -> {}, risk changes {:?}",
        cert.transfers, cert.potential_before, cert.potential_after, cert.objective_deltas
    );
    let feasible_after = check_feasible(&y, &f.constraints, FEASIBILITY_TOL)?.feasible;
    // the step-up cap is not solid, so the improvement may leave the feasible set
    println!("still within the step-up cap: {feasible_after}");
    Ok(Summary {
        improved_x1: y.share(0).values().to_vec(),
        verdicts_hold: cert.all_verdicts_hold(),
        feasible_after,
    })
}

#[allow(dead_code)]
fn main() -> coshare::Result<()> {
    run_example().map(|_| ())
}
