//! Randomized property checks shared by the integration tests. Every check
//! runs a fixed number of cases from a fixed seed, so failures reproduce.

#![allow(dead_code)]

use std::sync::Arc;

use coshare::allocation::{check_clearing, comonotonic_improvement, is_comonotonic, Allocation};
use coshare::constraints::{check_feasible, is_feasible, Constraint, ConstraintKind, Relation, FEASIBILITY_TOL};
use coshare::mvsolver::{fixed_point_residual, solve_capped_mv, statewise_projection, two_agent_fixed_point, MVProblem};
use coshare::oracle::{comonotone_minimize, grid_minimize, mv_reference, Axis, GridSpec};
use coshare::probspace::{Distribution, FiniteSpace, RandomVariable};
use coshare::riskmeasures::{es, var, Ladder, RiskMeasureSpec};
use coshare::stochorder::{conditional_expectation, convex_order_leq, pigou_dalton_transfer, CX_TOL};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 256;

pub fn runner(seed: u8) -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

/// Runs `test` on `CASES` draws of `strategy`, returning a readable failure.
pub fn check<S: Strategy>(
    seed: u8,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<u32, String>
where
    S::Value: std::fmt::Debug,
{
    runner(seed).run(&strategy, test).map(|_| CASES).map_err(|e| e.to_string())
}

fn space_from_weights(w: &[u32]) -> Arc<FiniteSpace> {
    let total: u32 = w.iter().sum();
    FiniteSpace::from_probs(&w.iter().map(|&k| k as f64 / total as f64).collect::<Vec<_>>()).unwrap()
}

/// Space weights, then for each of `n` agents a value row; values are
/// quarters in `[-3, 3]`.
fn weights_and_rows(atoms: std::ops::RangeInclusive<usize>, agents: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (Vec<u32>, Vec<Vec<f64>>)> {
    (atoms, agents).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(1u32..6, m),
            prop::collection::vec(prop::collection::vec((-12i32..=12).prop_map(|k| k as f64 / 4.0), m), n),
        )
    })
}

/// A random variable on a random space, values in quarters.
fn random_variable() -> impl Strategy<Value = (Vec<u32>, Vec<f64>)> {
    weights_and_rows(1..=7, 1..=1).prop_map(|(w, mut rows)| (w, rows.pop().unwrap()))
}

// (a) -------------------------------------------------------------------

pub fn improvement_postconditions() -> Result<u32, String> {
    check(1, weights_and_rows(2..=6, 2..=3), |(w, rows)| {
        let space = space_from_weights(&w);
        let shares: Vec<RandomVariable> = rows.iter().map(|r| RandomVariable::new(space.clone(), r.clone()).unwrap()).collect();
        // coarse aggregates so that level sets with several atoms occur
        let s = RandomVariable::new(space.clone(), shares[0].values().iter().map(|v| v.abs().floor()).collect()).unwrap();
        let free = shares[..shares.len() - 1].to_vec();
        let a = Allocation::with_implied_last(free, s).unwrap();
        let (b, cert) = comonotonic_improvement(&a).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(check_clearing(&b).clears, "clearing residual {}", check_clearing(&b).residual);
        prop_assert!(is_comonotonic(&b, 1e-9));
        for (y, x) in b.shares().iter().zip(a.shares()) {
            prop_assert!(convex_order_leq(y, x, CX_TOL));
        }
        prop_assert!(cert.all_verdicts_hold());
        let (c, again) = comonotonic_improvement(&b).unwrap();
        prop_assert_eq!(again.transfers, 0);
        for (u, v) in c.shares().iter().zip(b.shares()) {
            for (p, q) in u.values().iter().zip(v.values()) {
                prop_assert!((p - q).abs() <= 1e-9, "not idempotent: {p} vs {q}");
            }
        }
        Ok(())
    })
}

// (b) -------------------------------------------------------------------

fn consistent_measures() -> impl Strategy<Value = RiskMeasureSpec> {
    prop_oneof![
        (0.01f64..0.99).prop_map(|alpha| RiskMeasureSpec::Es { alpha }),
        (0.05f64..4.0).prop_map(|delta| RiskMeasureSpec::MeanVariance { delta }),
        (0.0f64..1.0, 0.0f64..2.0, -2.0f64..2.0, 0.0f64..3.0).prop_map(|(a, extra, r, b)| {
            RiskMeasureSpec::ExpectedConvexLoss { ladder: Ladder::new(a, a + extra, r, b).unwrap() }
        }),
    ]
}

pub fn consistent_monotonicity() -> Result<u32, String> {
    let strategy = (
        random_variable(),
        consistent_measures(),
        prop::collection::vec((0usize..7, 0usize..7, 0.0f64..1.0), 0..4),
        prop::collection::vec(0usize..3, 7),
        any::<bool>(),
    );
    check(2, strategy, |((w, xv), measure, moves, blocks, condition)| {
        let space = space_from_weights(&w);
        let x = RandomVariable::new(space.clone(), xv).unwrap();
        let m = space.len();
        let y = if condition {
            // average over a random partition
            let g = RandomVariable::new(space.clone(), blocks[..m].iter().map(|&b| b as f64).collect()).unwrap();
            conditional_expectation(&x, &g).unwrap()
        } else {
            let mut y = x.clone();
            for (i, j, frac) in moves {
                let (i, j) = (i % m, j % m);
                if i == j || y.value(i) <= y.value(j) {
                    continue;
                }
                let (pi, pj) = (space.prob(i), space.prob(j));
                let a = frac * (y.value(i) - y.value(j)) * pj / (pi + pj);
                y = pigou_dalton_transfer(&y, i, j, a, a * pi / pj).unwrap();
            }
            y
        };
        prop_assert!(convex_order_leq(&y, &x, CX_TOL));
        let (ry, rx) = (measure.evaluate(&y).unwrap(), measure.evaluate(&x).unwrap());
        prop_assert!(ry <= rx + 1e-9, "{}: {ry} > {rx}", measure.name());
        Ok(())
    })
}

// (c) -------------------------------------------------------------------

pub fn es_dominates_var() -> Result<u32, String> {
    check(3, (random_variable(), 0.001f64..0.999), |((w, xv), alpha)| {
        let x = RandomVariable::new(space_from_weights(&w), xv).unwrap();
        let (e, v) = (es(&x, alpha).unwrap(), var(&x, alpha).unwrap());
        prop_assert!(e >= v - 1e-12, "ES {e} < VaR {v} at {alpha}");
        Ok(())
    })
}

// (d) -------------------------------------------------------------------

fn boxes(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.1f64..5.0, n),
        prop::collection::vec(-3.0f64..3.0, n),
        prop::collection::vec(prop_oneof![Just(f64::NEG_INFINITY), -4.0f64..0.0], n),
        prop::collection::vec(prop_oneof![Just(f64::INFINITY), 0.0f64..4.0], n),
    )
}

pub fn projection_kkt() -> Result<u32, String> {
    let strategy = (1usize..=5).prop_flat_map(|n| (boxes(n), 0.0f64..1.0, -20.0f64..20.0));
    check(4, strategy, |((delta, c, lower, upper), t, free)| {
        let (lo, hi) = (lower.iter().sum::<f64>(), upper.iter().sum::<f64>());
        let s = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo + t * (hi - lo),
            (true, false) => lo + free.abs() * t,
            (false, true) => hi - free.abs() * t,
            (false, false) => free,
        };
        let p = statewise_projection(&c, &delta, &lower, &upper, s).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let total: f64 = p.shares.iter().sum();
        prop_assert!((total - s).abs() <= 1e-9 * s.abs().max(1.0), "sum {total} != {s}");
        let tol = 1e-9;
        for i in 0..delta.len() {
            let x = p.shares[i];
            prop_assert!(x >= lower[i] - tol && x <= upper[i] + tol);
            if !p.eta.is_finite() {
                continue;
            }
            let free_x = c[i] + p.eta / delta[i];
            if x > lower[i] + tol && x < upper[i] - tol {
                prop_assert!((x - free_x).abs() <= 1e-8 * free_x.abs().max(1.0), "interior share off the line");
            } else if (x - lower[i]).abs() <= tol {
                prop_assert!(free_x <= lower[i] + 1e-8 * free_x.abs().max(1.0), "lower bound active without push");
            } else {
                prop_assert!(free_x >= upper[i] - 1e-8 * free_x.abs().max(1.0), "upper bound active without push");
            }
        }
        Ok(())
    })
}

// (e) -------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MvCase {
    pub weights: Vec<u32>,
    pub s: Vec<f64>,
    pub delta: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn mv_cases() -> impl Strategy<Value = MvCase> {
    (2usize..=4, 2usize..=3)
        .prop_flat_map(|(m, n)| {
            (
                prop::collection::vec(1u32..5, m),
                prop::collection::vec((0i32..=10).prop_map(|k| k as f64 / 2.0), m),
                prop::collection::vec(0.5f64..3.0, n),
                prop::collection::vec(prop_oneof![Just(f64::NEG_INFINITY), Just(-1.0), Just(0.0)], n),
                prop::collection::vec(prop_oneof![Just(f64::INFINITY), Just(1.0), Just(2.0), Just(3.0)], n),
            )
        })
        .prop_map(|(weights, s, delta, mut lower, mut upper)| {
            // keep the cap region wide enough for every state
            let n = delta.len();
            let smax = s.iter().cloned().fold(0.0, f64::max);
            if upper.iter().sum::<f64>() < smax {
                upper[n - 1] = f64::INFINITY;
            }
            if lower.iter().sum::<f64>() > 0.0 {
                lower[0] = f64::NEG_INFINITY;
            }
            MvCase { weights, s, delta, lower, upper }
        })
}

pub fn mv_matches_reference() -> Result<u32, String> {
    check(5, mv_cases(), |case| {
        let space = space_from_weights(&case.weights);
        let s = RandomVariable::new(space, case.s.clone()).unwrap();
        let p = MVProblem::new(case.delta.clone(), case.lower.clone(), case.upper.clone(), s.clone()).unwrap();
        let sol = solve_capped_mv(&p).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let reference = mv_reference(&p, 400_000).unwrap();
        prop_assert!(
            (sol.objective - reference.objective).abs() <= 1e-6,
            "solver {} vs reference {}",
            sol.objective,
            reference.objective
        );
        prop_assert!(is_comonotonic(&sol.allocation, 1e-7));
        prop_assert!(check_clearing(&sol.allocation).clears);
        let caps: Vec<Constraint> = (0..case.delta.len())
            .map(|i| Constraint::bounds(Some(i), case.lower[i], case.upper[i]))
            .collect();
        prop_assert!(is_feasible(&sol.allocation, &caps, 1e-9).unwrap());
        // no point of a coarse grid beats the solver
        if case.delta.len() == 2 && case.s.len() <= 3 {
            let objectives: Vec<RiskMeasureSpec> = case.delta.iter().map(|&delta| RiskMeasureSpec::MeanVariance { delta }).collect();
            let grid = GridSpec::uniform(1, case.s.len(), Axis::new(-3.0, 6.0, 0.5).unwrap());
            if let Ok(g) = grid_minimize(&s, &objectives, &caps, &grid, 1e-9) {
                prop_assert!(g.value >= sol.objective - 1e-9, "grid {} below solver {}", g.value, sol.objective);
            }
        }
        Ok(())
    })
}

// (f) -------------------------------------------------------------------

pub const GRID_STEP: f64 = 0.25;

fn solid_constraint() -> impl Strategy<Value = Constraint> {
    let agent = prop_oneof![Just(None), (0usize..2).prop_map(Some)];
    let kind = prop_oneof![
        ((-4i32..=0), (4i32..=12)).prop_map(|(l, u)| ConstraintKind::PathwiseBounds { lower: l as f64 / 4.0, upper: u as f64 / 4.0 }),
        (0.0f64..3.0).prop_map(|c| ConstraintKind::Expectation { relation: Relation::Le, c }),
        (-1.0f64..0.5).prop_map(|c| ConstraintKind::Expectation { relation: Relation::Ge, c }),
        (0.1f64..0.9, 1.0f64..3.5).prop_map(|(alpha, c)| ConstraintKind::RiskCeiling { measure: RiskMeasureSpec::Es { alpha }, c }),
        (0.2f64..1.0, 0.0f64..2.0, 0.5f64..2.0).prop_map(|(a, r, c)| ConstraintKind::OrliczBound {
            ladder: Ladder::new(a, a + 0.5, r, 1.0).unwrap(),
            c,
        }),
    ];
    (agent, kind).prop_map(|(agent, kind)| Constraint { agent, kind })
}

#[derive(Debug, Clone)]
pub struct SolidCase {
    pub s: Vec<f64>,
    pub alphas: (f64, f64),
    pub constraints: Vec<Constraint>,
}

fn solid_cases() -> impl Strategy<Value = SolidCase> {
    (
        prop::collection::btree_set(0i32..=12, 3).prop_map(|set| set.into_iter().map(|k| k as f64 / 4.0).collect::<Vec<_>>()),
        (0.0f64..0.9, 0.0f64..0.9),
        prop::collection::vec(solid_constraint(), 1..=3),
    )
        .prop_map(|(s, alphas, constraints)| SolidCase { s, alphas, constraints })
}

/// On solid constraint sets the comonotone grid minimum matches the grid
/// minimum up to grid resolution, and improving the grid minimizer stays
/// feasible without raising the total.
pub fn central_equality() -> Result<u32, String> {
    check(6, solid_cases(), |case| {
        let space = FiniteSpace::uniform(3).unwrap();
        let s = RandomVariable::new(space, case.s.clone()).unwrap();
        let objectives = vec![RiskMeasureSpec::Es { alpha: case.alphas.0 }, RiskMeasureSpec::Es { alpha: case.alphas.1 }];
        let grid = GridSpec::uniform(1, 3, Axis::new(-1.0, 4.0, GRID_STEP).unwrap());
        let best = match grid_minimize(&s, &objectives, &case.constraints, &grid, FEASIBILITY_TOL) {
            Ok(b) => b,
            Err(coshare::Error::Infeasible(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        // solidity: the improvement of the minimizer stays feasible and is no worse
        let (y, _) = comonotonic_improvement(&best.allocation).unwrap();
        prop_assert!(check_feasible(&y, &case.constraints, 1e-9).unwrap().feasible, "improvement left a solid set");
        prop_assert!(y.total_risk(&objectives).unwrap() <= best.value + 1e-9);
        let como = comonotone_minimize(&s, &objectives, &case.constraints, &grid, FEASIBILITY_TOL)
            .map_err(|e| TestCaseError::fail(format!("no comonotonic grid point: {e}")))?;
        prop_assert!(como.value >= best.value - 1e-12);
        // ES is 1-Lipschitz in the sup norm; moving X_1 onto the grid moves X_2 as much
        prop_assert!(como.value - best.value <= 2.0 * GRID_STEP, "gap {} exceeds grid resolution", como.value - best.value);
        Ok(())
    })
}

// two-agent intercept condition -------------------------------------------

pub fn fixed_point_interval() -> Result<u32, String> {
    let strategy = (
        0.05f64..0.95,
        0.5f64..5.0,
        prop::collection::vec((0.0f64..10.0, 1u32..5), 1..=6),
    );
    check(8, strategy, |(a, cap, pts)| {
        let total: u32 = pts.iter().map(|p| p.1).sum();
        let dist = Distribution::from_weighted(pts.iter().map(|&(v, k)| (v, k as f64 / total as f64)));
        let fp = two_agent_fixed_point(a, cap, &dist).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(fp.lo <= fp.hi);
        for k in 0..=10 {
            let b = fp.lo + (fp.hi - fp.lo) * k as f64 / 10.0;
            let r = fixed_point_residual(a, cap, &dist, b);
            prop_assert!(r.abs() <= 1e-10, "residual {r} at beta {b} inside [{}, {}]", fp.lo, fp.hi);
        }
        // outside the interval the residual keeps a strict sign
        let scale = 1.0 + fp.lo.abs().max(fp.hi.abs());
        for k in 0..200 {
            let eps = scale * 1e-6 * (1.1f64).powi(k);
            let left = fixed_point_residual(a, cap, &dist, fp.lo - eps);
            let right = fixed_point_residual(a, cap, &dist, fp.hi + eps);
            prop_assert!(left > 0.0, "residual {left} at lo - {eps}");
            prop_assert!(right < 0.0, "residual {right} at hi + {eps}");
        }
        Ok(())
    })
}
