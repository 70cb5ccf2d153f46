//! Canonical pipelines with pinned expected numbers.
//!
//! Each case runs end to end, records its checks in the report (status
//! `mismatch` when any fails), and emits the tables needed to plot it.
//! `reproduce` itself only errors on engineering failures; callers
//! decide what a mismatch means (the binary exits with code 3).

use serde_json::Value;

use crate::allocation::{comonotonic_improvement_with, comonotonicity_failure, is_comonotonic, ComonotonicityFailure, ImprovementOptions};
use crate::constraints::{check_feasible, classify_solidity, falsify_solidity, SolidityStatus};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::mvsolver::{saturation_curve, var_scenario, VarScenario};
use crate::oracle::{comonotone_minimize, grid_minimize};
use crate::problem::{regime_table, RunOptions, DEFAULT_BUDGET};
use crate::report::{num, Check, Report, Table};

pub const CASES: [&str; 5] = ["ex-3.1", "ex-4.2", "ex-4.3", "fig-6.3", "sec-6.4"];

pub fn reproduce(case: &str, opts: RunOptions) -> Result<Report> {
    let mut r = match case {
        "ex-3.1" => retention(opts)?,
        "ex-4.2" => step_up(opts)?,
        "ex-4.3" => var_ceiling(opts)?,
        "fig-6.3" => saturation()?,
        "sec-6.4" => scenario()?,
        other => {
            return Err(Error::Domain(format!("unknown case {other:?}; known: {}", CASES.join(", "))));
        }
    };
    r.task = format!("reproduce {case}");
    Ok(r)
}

fn retention(opts: RunOptions) -> Result<Report> {
    let f = fixtures::retention_pair();
    let mut r = Report::new("");
    let verdict = classify_solidity(&f.constraints, None);
    r.diagnostic("status", verdict.status);
    r.check(Check::holds("retention classified not solid", verdict.status == SolidityStatus::NotSolid));
    r.check(Check::holds(
        "autarky feasible",
        check_feasible(&f.autarky, &f.constraints, opts.tol())?.feasible,
    ));
    let seed = opts.seed.unwrap_or(0);
    let w = falsify_solidity(&f.constraints, &f.autarky, DEFAULT_BUDGET, seed, opts.tol())?;
    r.check(Check::holds("witness found", w.is_some()));
    if let Some(w) = w {
        let half = f.autarky.aggregate().map(|s| s / 2.0)?;
        let is_half = w.y.shares().iter().all(|y| y.values() == half.values());
        r.check(Check::holds("witness is (S/2, S/2)", is_half));
        r.check(Check::holds("witness: x feasible", w.checks.x_feasible));
        r.check(Check::holds("witness: y clears", w.checks.y_clears));
        r.check(Check::holds("witness: y <=cx x componentwise", w.checks.convex_order.iter().all(|&b| b)));
        r.check(Check::holds("witness: y infeasible", w.checks.y_infeasible));
        r.diagnostic("witness_source", w.source);
        r.diagnostic("violations", &w.violations);
        r.table(Table::allocation("autarky", &w.x));
        r.table(Table::allocation("conditional-mean", &w.y));
    }
    Ok(r)
}

fn step_up(opts: RunOptions) -> Result<Report> {
    let f = fixtures::step_up(0.01);
    let s = &f.aggregate;
    let mut r = Report::new("");
    let best = grid_minimize(s, &f.measures, &f.constraints, &f.grid, opts.tol())?;
    let como = comonotone_minimize(s, &f.measures, &f.constraints, &f.grid, opts.tol())?;
    r.value("constrained", best.value);
    r.value("comonotonic", como.value);
    r.value("gap", como.value - best.value);
    r.value("constrained_a", best.param.unwrap_or(f64::NAN));
    r.value("comonotonic_a", como.param.unwrap_or(f64::NAN));
    r.check(Check::exact("constrained minimum", "19/8", best.value));
    r.check(Check::exact("constrained argmin a", "7/4", best.param.unwrap_or(f64::NAN)));
    r.check(Check::exact("comonotonic minimum", "29/12", como.value));
    r.check(Check::exact("comonotonic argmin a", "5/4", como.param.unwrap_or(f64::NAN)));
    r.check(Check::exact("gap", "1/24", como.value - best.value));
    let support = s.distribution().support();
    r.check(Check::holds(
        "envelope classified not solid",
        classify_solidity(&f.constraints, Some(&support)).status == SolidityStatus::NotSolid,
    ));

    let opts_imp = ImprovementOptions { measures: f.measures.clone(), ..Default::default() };
    let (improved, cert) = comonotonic_improvement_with(&best.allocation, &opts_imp)?;
    let x1 = improved.share(0).values();
    r.check(Check::holds("improved X_1 = (1/4, 3/4, 5/4)", x1 == [0.25, 0.75, 1.25]));
    r.check(Check::holds("certificate verdicts", cert.all_verdicts_hold()));
    r.check(Check::holds(
        "improvement leaves the feasible set",
        !check_feasible(&improved, &f.constraints, opts.tol())?.feasible,
    ));
    r.diagnostic("certificate", &cert);
    r.table(Table::allocation("constrained", &best.allocation));
    r.table(Table::allocation("comonotonic", &como.allocation));
    r.table(Table::allocation("improved", &improved));

    let mut curve = Table::new("family", &["a", "total", "feasible", "comonotonic"]);
    for k in 0..=6 {
        let a = 0.25 + 0.25 * k as f64;
        let alloc = f.allocation(a);
        curve.push(vec![
            num(a),
            num(alloc.total_risk(&f.measures)?),
            Value::Bool(check_feasible(&alloc, &f.constraints, opts.tol())?.feasible),
            Value::Bool(is_comonotonic(&alloc, 1e-9)),
        ]);
    }
    r.table(curve);
    Ok(r)
}

fn var_ceiling(opts: RunOptions) -> Result<Report> {
    let f = fixtures::var_ceiling();
    let s = f.autarky.aggregate();
    let mut r = Report::new("");
    let free = grid_minimize(s, &f.measures, &[], &f.grid, opts.tol())?;
    let best = grid_minimize(s, &f.measures, &f.constraints, &f.grid, opts.tol())?;
    let como = comonotone_minimize(s, &f.measures, &f.constraints, &f.grid, opts.tol())?;
    r.value("unconstrained", free.value);
    r.value("constrained", best.value);
    r.value("comonotonic", como.value);
    r.check(Check::exact("unconstrained minimum", "2", free.value));
    r.check(Check::exact("constrained minimum", "25/12", best.value));
    r.check(Check::exact("comonotonic minimum", "9/4", como.value));
    r.check(Check::holds(
        "unconstrained argmin (S, 0)",
        free.allocation.share(0).values() == s.values(),
    ));
    r.check(Check::holds(
        "constrained X_1 = (0, 1, 2, 4)",
        best.allocation.share(0).values() == [0.0, 1.0, 2.0, 4.0],
    ));
    r.check(Check::holds(
        "comonotonic X_1 = (0, 1, 1, 3)",
        como.allocation.share(0).values() == [0.0, 1.0, 1.0, 3.0],
    ));
    let failure = comonotonicity_failure(&best.allocation, 1e-9);
    r.check(Check::holds(
        "constrained optimum splits the level S = 2",
        matches!(failure, Some(ComonotonicityFailure::SplitLevel { level, .. }) if level == 2.0),
    ));
    r.check(Check::holds(
        "autarky comonotonic and feasible",
        is_comonotonic(&f.autarky, 1e-9) && check_feasible(&f.autarky, &f.constraints, opts.tol())?.feasible,
    ));
    r.diagnostic("constrained_failure", failure);
    r.diagnostic("grid_size", best.grid_size);
    r.table(Table::allocation("unconstrained", &free.allocation));
    r.table(Table::allocation("constrained", &best.allocation));
    r.table(Table::allocation("comonotonic", &como.allocation));
    Ok(r)
}

fn saturation() -> Result<Report> {
    let reg = saturation_curve(&fixtures::SATURATION_DELTA, &fixtures::SATURATION_CAPS)?;
    let mut r = Report::new("");
    let exact = reg.breakpoints_exact.clone().unwrap_or_default();
    r.check(Check::holds("breakpoints (12, 31/2, 20)", exact == ["12", "31/2", "20"]));
    for (s, agent, x) in [(12.0, 0, 5.0), (15.5, 1, 5.0), (20.0, 3, 4.0), (25.5, 3, 9.5)] {
        let got = reg.shares_at(s)?[agent];
        r.check(Check::close(format!("x_{}({s})", agent + 1), x, got, 1e-12));
    }
    let slopes = reg.regimes.first().and_then(|g| g.slopes_exact.clone()).unwrap_or_default();
    r.check(Check::holds("first-regime slopes (5/12, 5/18, 1/6, 5/36)", slopes == ["5/12", "5/18", "1/6", "5/36"]));
    r.diagnostic("breakpoints_exact", &exact);
    r.table(regime_table(&reg));
    let mut curve = Table::new("curve", &["s", "x_1", "x_2", "x_3", "x_4"]);
    for k in 0..=60 {
        let s = 0.5 * k as f64;
        let mut row = vec![num(s)];
        row.extend(reg.shares_at(s)?.into_iter().map(num));
        curve.push(row);
    }
    r.table(curve);
    Ok(r)
}

fn scenario() -> Result<Report> {
    let rep = var_scenario(&VarScenario::default())?;
    let v = rep.values;
    let mut r = Report::new("");
    r.value("q", rep.q);
    r.value("unconstrained", v.unconstrained);
    r.value("constrained", v.constrained);
    r.value("comonotonic", v.comonotonic);
    r.value("autarky", v.autarky);
    r.value("m_star", rep.m_star);
    r.value("a", rep.a);
    r.value("r", rep.r);
    r.check(Check::close("q", 4.7439, rep.q, 1e-3));
    r.check(Check::close("unconstrained", 2.0198, v.unconstrained, 1e-4));
    r.check(Check::close("unconstrained closed form 2 + 202/10201", 2.0 + 202.0 / 10201.0, v.unconstrained, 1e-9));
    r.check(Check::close("autarky", 3.01, v.autarky, 1e-12));
    r.check(Check::close("constrained", 2.0517, v.constrained, 5e-3));
    r.check(Check::close("m*", 0.6337, rep.m_star, 5e-3));
    r.check(Check::close("a", 0.64, rep.a, 5e-3));
    r.check(Check::close("r", 3.67, rep.r, 5e-3));
    r.check(Check::close("comonotonic", 2.0972, v.comonotonic, 1e-2));
    r.check(Check::holds("ordering unconstrained < constrained < comonotonic < autarky", rep.ordering_holds));
    r.check(Check::holds(
        "all three rules feasible",
        rep.feasible.constrained && rep.feasible.comonotonic && rep.feasible.autarky,
    ));
    r.diagnostic("quadrature_gap", rep.quadrature_gap);
    r.diagnostic("comonotonic_params", rep.comonotonic_params);
    r.diagnostic("crossing_witness", rep.witness);
    r.diagnostic("jumps", (rep.jump_x1, rep.jump_x2));
    let mut curve = Table::new("curve", &["s", "constrained_x1", "constrained_x2", "comonotonic_x1", "comonotonic_x2"]);
    for k in 0..=240 {
        let s = 0.05 * k as f64;
        let (c1, c2) = rep.constrained_shares(s);
        let (m1, m2) = rep.comonotonic_shares(s);
        curve.push(vec![num(s), num(c1), num(c2), num(m1), num(m2)]);
    }
    r.table(curve);
    Ok(r)
}
