//! Capped mean-variance sharing: the statewise water-filling projection, the
//! saturation curve, the damped intercept iteration, and the two-agent
//! intercept condition.

use coshare::mvsolver::{
    saturation_curve, solve_capped_mv, statewise_projection, two_agent_fixed_point, MVProblem,
};
use coshare::oracle::mv_reference;
use coshare::probspace::{FiniteSpace, RandomVariable};

const INF: f64 = f64::INFINITY;

pub struct Summary {
    pub breakpoints: Vec<String>,
    pub solver_objective: f64,
    pub reference_objective: f64,
    pub beta_interval: (f64, f64),
}

pub fn run_example() -> coshare::Result<Summary> {
    let delta = [2.0, 3.0, 5.0, 6.0];
    let caps = [5.0, 8.0, 3.0, INF];

    // one state: who absorbs an aggregate loss of 18?
    let p = statewise_projection(&[0.0; 4], &delta, &[-INF; 4], &caps, 18.0)?;
    println!("s = 18: eta = {}, shares = {:?}", p.eta, p.shares);

    let curve = saturation_curve(&delta, &caps)?;
    let breakpoints = curve.breakpoints_exact.clone().unwrap_or_default();
    println!("saturation breakpoints: {breakpoints:?}");
    for g in &curve.regimes {
        println!("  [{}, {}): slopes {:?}", g.from, g.to, g.slopes_exact.as_deref().unwrap_or_default());
    }

    // intercepts from the damped fixed point, checked against an independent solver
    let space = FiniteSpace::from_probs(&[0.1, 0.2, 0.4, 0.2, 0.1])?;
    let s = RandomVariable::new(space, vec![4.0, 10.0, 14.0, 18.0, 26.0])?;
    let problem = MVProblem::new(delta.to_vec(), vec![-INF; 4], caps.to_vec(), s.clone())?;
    let sol = solve_capped_mv(&problem)?;
    let reference = mv_reference(&problem, 200_000)?;
    println!(
        "objective {} after {} iterations (reference {})",
        sol.objective, sol.iterations, reference.objective
    );
    for (i, x) in sol.allocation.shares().iter().enumerate() {
        println!("  X_{} = {:?}", i + 1, x.values());
    }

    let fp = two_agent_fixed_point(0.75, 6.0, &s.distribution())?;
    println!("two-agent intercepts solving the condition: [{}, {}]", fp.lo, fp.hi);

    Ok(Summary {
        breakpoints,
        solver_objective: sol.objective,
        reference_objective: reference.objective,
        beta_interval: (fp.lo, fp.hi),
    })
}

#[allow(dead_code)]
fn main() -> coshare::Result<()> {
    run_example().map(|_| ())
}
