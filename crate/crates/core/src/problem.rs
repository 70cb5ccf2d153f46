//! JSON problem files: schema, validation, and dispatch to the solvers.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "space": { "atoms": [ { "label": "low", "prob": "1/3" }, ... ] },
//!   "aggregate": [1, 2, 3],
//!   "agents": [ { "measure": { "kind": "es", "alpha": "1/5" } }, ... ],
//!   "constraints": [ { "agent": 0, "kind": "pathwise_bounds", "lower": 0 } ],
//!   "task": { "kind": "oracle", "grid": { ... } }
//! }
//! ```
//!
//! Reals may be JSON numbers, decimal strings, `"p/q"` fractions, or
//! `"inf"` / `"-inf"`. Either `aggregate` or `endowments` (one row per agent)
//! must be given; with endowments the aggregate is their sum.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::allocation::{
    check_clearing, comonotonic_improvement_with, comonotonicity_failure, is_comonotonic, Allocation,
    ImprovementOptions,
};
use crate::constraints::{
    check_feasible, classify_solidity, falsify_solidity, Constraint, ConstraintKind, FEASIBILITY_TOL,
};
use crate::error::{Error, Result};
use crate::mvsolver::{solve_capped_mv, MVProblem};
use crate::oracle::{comonotone_minimize, grid_minimize, mv_reference, GridSpec, OracleResult};
use crate::probspace::{Atom, FiniteSpace, GammaAggregate, RandomVariable};
use crate::report::{exact_string, num, Report, Table, SCHEMA_VERSION};
use crate::riskmeasures::RiskMeasureSpec;

/// Default number of random transfers tried by the solidity falsifier.
pub const DEFAULT_BUDGET: usize = 10_000;
/// Mean-variance instances up to this many atoms are cross-checked against
/// the projected-gradient reference.
const REFERENCE_ATOMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(with = "crate::real")]
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Atoms(Vec<AtomSpec>),
    /// The Gamma(2,1) aggregate at `atoms` equally likely midpoint quantiles;
    /// the file then gives neither `aggregate` nor `endowments`.
    Gamma { atoms: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<RiskMeasureSpec>,
    /// Risk aversion for `solve-mv`; defaults to the measure's own `delta`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::real::option")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Grid,
    Comonotone,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Capped mean-variance sharing; caps come from `pathwise_bounds`.
    SolveMv {},
    /// Comonotonic improvement of `allocation` (default: the endowments).
    Improve {
        #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_matrix")]
        allocation: Option<Vec<Vec<f64>>>,
    },
    Oracle {
        grid: GridSpec,
        #[serde(default)]
        mode: OracleMode,
    },
    /// Classification plus a falsifier run from `allocation` (default: the
    /// endowments) when one is available and feasible.
    CheckSolidity {
        #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_matrix")]
        allocation: Option<Vec<Vec<f64>>>,
        #[serde(default = "default_budget")]
        budget: usize,
        #[serde(default)]
        seed: u64,
    },
    Reproduce { case: String },
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::SolveMv {} => "solve-mv",
            Task::Improve { .. } => "improve",
            Task::Oracle { .. } => "oracle",
            Task::CheckSolidity { .. } => "check-solidity",
            Task::Reproduce { .. } => "reproduce",
        }
    }
}

mod opt_matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct M(#[serde(with = "crate::real::matrix")] Vec<Vec<f64>>);

    pub fn serialize<S: Serializer>(v: &Option<Vec<Vec<f64>>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|m| M(m.clone())).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Vec<f64>>>, D::Error> {
        Ok(Option::<M>::deserialize(d)?.map(|m| m.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::real::option_vec")]
    pub aggregate: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_matrix")]
    pub endowments: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<AgentSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<Constraint>,
    pub task: Task,
}

/// Command-line overrides.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Seed for the solidity falsifier.
    pub seed: Option<u64>,
    /// Feasibility tolerance.
    pub tol: Option<f64>,
}

impl RunOptions {
    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(FEASIBILITY_TOL)
    }
}

/// The space, aggregate and endowments a file describes.
#[derive(Debug, Clone)]
pub struct Instance {
    pub aggregate: RandomVariable,
    pub endowments: Option<Allocation>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Schema(vec![e.to_string()]))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    fn n_atoms(&self) -> Option<usize> {
        match &self.space {
            Some(SpaceSpec::Atoms(a)) => Some(a.len()),
            Some(SpaceSpec::Gamma { atoms }) => Some(*atoms),
            None => None,
        }
    }

    /// Checks everything that can be checked without solving, and reports
    /// every failure at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if let Task::Reproduce { case } = &self.task {
            if !crate::reproduce::CASES.contains(&case.as_str()) {
                errs.push(format!("unknown case {case:?}; known: {}", crate::reproduce::CASES.join(", ")));
            }
            return finish(errs);
        }
        match &self.space {
            None => errs.push("space is required".into()),
            Some(SpaceSpec::Gamma { atoms }) => {
                if *atoms < 2 {
                    errs.push("gamma space needs at least 2 atoms".into());
                }
                if self.aggregate.is_some() || self.endowments.is_some() {
                    errs.push("a gamma space fixes the aggregate; drop aggregate/endowments".into());
                }
            }
            Some(SpaceSpec::Atoms(atoms)) => {
                let space = FiniteSpace::new(
                    atoms
                        .iter()
                        .enumerate()
                        .map(|(i, a)| Atom { label: a.label.clone().unwrap_or_else(|| format!("w{i}")), prob: a.prob })
                        .collect(),
                );
                if let Err(e) = space {
                    errs.push(format!("space: {e}"));
                }
                match (&self.aggregate, &self.endowments) {
                    (None, None) => errs.push("one of aggregate or endowments is required".into()),
                    (Some(_), Some(_)) => errs.push("give aggregate or endowments, not both".into()),
                    (Some(s), None) => check_row(&mut errs, "aggregate", s, atoms.len()),
                    (None, Some(rows)) => {
                        if rows.is_empty() {
                            errs.push("endowments need at least one agent".into());
                        }
                        for (i, r) in rows.iter().enumerate() {
                            check_row(&mut errs, &format!("endowments[{i}]"), r, atoms.len());
                        }
                        if !self.agents.is_empty() && rows.len() != self.agents.len() {
                            errs.push(format!("{} endowment rows for {} agents", rows.len(), self.agents.len()));
                        }
                    }
                }
            }
        }
        if self.agents.is_empty() {
            errs.push("at least one agent is required".into());
        }
        for (i, a) in self.agents.iter().enumerate() {
            if let Some(m) = &a.measure {
                if let Err(e) = m.validate() {
                    errs.push(format!("agents[{i}].measure: {e}"));
                }
            }
            if let Some(d) = a.delta {
                if !(d > 0.0 && d.is_finite()) {
                    errs.push(format!("agents[{i}].delta must be positive and finite"));
                }
            }
        }
        let n = self.agents.len();
        let m = self.n_atoms().unwrap_or(0);
        for (k, c) in self.constraints.iter().enumerate() {
            if let Err(e) = c.validate(n, m) {
                errs.push(format!("constraints[{k}]: {e}"));
            }
        }
        match &self.task {
            Task::SolveMv {} => {
                for (i, a) in self.agents.iter().enumerate() {
                    if agent_delta(a).is_none() {
                        errs.push(format!("agents[{i}] needs delta or a mean_variance measure for solve-mv"));
                    }
                }
                for (k, c) in self.constraints.iter().enumerate() {
                    if !matches!(c.kind, ConstraintKind::PathwiseBounds { .. }) {
                        errs.push(format!("constraints[{k}]: solve-mv accepts only pathwise_bounds"));
                    }
                }
            }
            Task::Improve { allocation } | Task::CheckSolidity { allocation, .. } => {
                if let Some(rows) = allocation {
                    if rows.len() != n {
                        errs.push(format!("task.allocation has {} rows for {n} agents", rows.len()));
                    }
                    for (i, r) in rows.iter().enumerate() {
                        check_row(&mut errs, &format!("task.allocation[{i}]"), r, m);
                    }
                } else if self.endowments.is_none() && matches!(self.task, Task::Improve { .. }) {
                    errs.push("improve needs task.allocation or endowments".into());
                }
            }
            Task::Oracle { grid, .. } => {
                for (i, a) in self.agents.iter().enumerate() {
                    if a.measure.is_none() {
                        errs.push(format!("agents[{i}] needs a measure for the oracle"));
                    }
                }
                if let Err(e) = grid.size() {
                    errs.push(format!("task.grid: {e}"));
                }
            }
            Task::Reproduce { .. } => {}
        }
        finish(errs)
    }

    /// Builds the space and random variables; assumes [`validate`](Self::validate) passed.
    pub fn instance(&self) -> Result<Instance> {
        match self.space.as_ref() {
            Some(SpaceSpec::Gamma { atoms }) => {
                let (_, s) = GammaAggregate.discretize(*atoms)?;
                Ok(Instance { aggregate: s, endowments: None })
            }
            Some(SpaceSpec::Atoms(atoms)) => {
                let space = FiniteSpace::new(
                    atoms
                        .iter()
                        .enumerate()
                        .map(|(i, a)| Atom { label: a.label.clone().unwrap_or_else(|| format!("w{i}")), prob: a.prob })
                        .collect(),
                )?;
                if let Some(rows) = &self.endowments {
                    let shares = rows
                        .iter()
                        .map(|r| RandomVariable::new(space.clone(), r.clone()))
                        .collect::<Result<Vec<_>>>()?;
                    let a = Allocation::from_shares(shares)?;
                    Ok(Instance { aggregate: a.aggregate().clone(), endowments: Some(a) })
                } else {
                    let s = self.aggregate.clone().ok_or_else(|| Error::Schema(vec!["aggregate missing".into()]))?;
                    Ok(Instance { aggregate: RandomVariable::new(space, s)?, endowments: None })
                }
            }
            None => Err(Error::Schema(vec!["space is required".into()])),
        }
    }

    fn measures(&self) -> Option<Vec<RiskMeasureSpec>> {
        self.agents.iter().map(|a| a.measure).collect()
    }

    fn allocation_from(&self, s: &RandomVariable, rows: &[Vec<f64>]) -> Result<Allocation> {
        let shares = rows
            .iter()
            .map(|r| RandomVariable::new(s.space().clone(), r.clone()))
            .collect::<Result<Vec<_>>>()?;
        Allocation::new(shares, s.clone())
    }
}

fn finish(errs: Vec<String>) -> Result<()> {
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Schema(errs))
    }
}

fn check_row(errs: &mut Vec<String>, what: &str, row: &[f64], n_atoms: usize) {
    if row.len() != n_atoms {
        errs.push(format!("{what} has {} values for {n_atoms} atoms", row.len()));
    }
    if row.iter().any(|v| !v.is_finite()) {
        errs.push(format!("{what} must be finite"));
    }
}

fn agent_delta(a: &AgentSpec) -> Option<f64> {
    a.delta.or(match a.measure {
        Some(RiskMeasureSpec::MeanVariance { delta }) => Some(delta),
        _ => None,
    })
}

/// Loads, validates and runs a problem file.
pub fn run_problem(path: &Path, opts: RunOptions) -> Result<Report> {
    run(&ProblemFile::load(path)?, opts)
}

pub fn run(file: &ProblemFile, opts: RunOptions) -> Result<Report> {
    file.validate()?;
    match &file.task {
        Task::Reproduce { case } => crate::reproduce::reproduce(case, opts),
        Task::SolveMv {} => solve_mv(file),
        Task::Improve { allocation } => improve(file, allocation.as_deref(), opts),
        Task::Oracle { grid, mode } => oracle(file, grid, *mode, opts),
        Task::CheckSolidity { allocation, budget, seed } => {
            check_solidity(file, allocation.as_deref(), *budget, opts.seed.unwrap_or(*seed), opts)
        }
    }
}

fn solve_mv(file: &ProblemFile) -> Result<Report> {
    let inst = file.instance()?;
    let n = file.agents.len();
    let delta: Vec<f64> = file.agents.iter().filter_map(agent_delta).collect();
    let (mut lower, mut upper) = (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]);
    for c in &file.constraints {
        if let ConstraintKind::PathwiseBounds { lower: l, upper: u } = c.kind {
            let agents: Vec<usize> = c.agent.map_or_else(|| (0..n).collect(), |i| vec![i]);
            for i in agents {
                lower[i] = lower[i].max(l);
                upper[i] = upper[i].min(u);
            }
        }
    }
    let problem = MVProblem::new(delta, lower, upper, inst.aggregate)?;
    let sol = solve_capped_mv(&problem)?;
    let mut r = Report::new("solve-mv");
    r.value("objective", sol.objective);
    for (i, c) in sol.regime.intercepts.iter().enumerate() {
        r.value(&format!("intercept_{}", i + 1), *c);
    }
    r.verdict("clears", check_clearing(&sol.allocation).clears);
    r.verdict("comonotonic", is_comonotonic(&sol.allocation, 1e-9));
    r.verdict("feasible", check_feasible(&sol.allocation, &file.constraints, FEASIBILITY_TOL)?.feasible);
    r.diagnostic("iterations", sol.iterations);
    r.diagnostic("fixed_point_residual", sol.regime.residual);
    if problem.aggregate.space().len() <= REFERENCE_ATOMS {
        let reference = mv_reference(&problem, 200_000)?;
        r.diagnostic("reference_gap", sol.objective - reference.objective);
    }
    if let Some(b) = &sol.regime.breakpoints_exact {
        r.diagnostic("breakpoints_exact", b);
    }
    r.table(Table::allocation("allocation", &sol.allocation));
    r.table(regime_table(&sol.regime));
    Ok(r)
}

pub(crate) fn regime_table(reg: &crate::mvsolver::RegimeReport) -> Table {
    let n = reg.delta.len();
    let mut cols = vec!["from".to_string(), "to".to_string(), "active".to_string()];
    cols.extend((1..=n).map(|i| format!("slope_{i}")));
    let mut t = Table { name: "regimes".into(), columns: cols, rows: Vec::new() };
    for g in &reg.regimes {
        let mut row = vec![
            num(g.from),
            num(g.to),
            Value::from(g.active.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")),
        ];
        match &g.slopes_exact {
            Some(ex) => row.extend(ex.iter().map(|s| Value::from(s.as_str()))),
            None => row.extend(g.slopes.iter().map(|&s| num(s))),
        }
        t.push(row);
    }
    t
}

fn improve(file: &ProblemFile, rows: Option<&[Vec<f64>]>, opts: RunOptions) -> Result<Report> {
    let inst = file.instance()?;
    let a = match rows {
        Some(rows) => file.allocation_from(&inst.aggregate, rows)?,
        None => inst.endowments.clone().ok_or_else(|| Error::Schema(vec!["no allocation to improve".into()]))?,
    };
    let measures = file.measures().unwrap_or_default();
    let (b, cert) = comonotonic_improvement_with(&a, &ImprovementOptions { measures: measures.clone(), ..Default::default() })?;
    let mut r = Report::new("improve");
    if !measures.is_empty() {
        r.value("total_risk_before", a.total_risk(&measures)?);
        r.value("total_risk_after", b.total_risk(&measures)?);
    }
    for (i, x) in b.shares().iter().enumerate() {
        let exact: Option<Vec<String>> = x.values().iter().map(|&v| exact_string(v)).collect();
        if let Some(e) = exact {
            r.exact.insert(format!("improved_X_{}", i + 1), format!("({})", e.join(", ")));
        }
    }
    r.verdict("comonotonic", cert.comonotonic);
    r.verdict("convex_order", cert.convex_order.iter().all(|&v| v));
    r.verdict("clears", check_clearing(&b).clears);
    if !file.constraints.is_empty() {
        r.verdict("feasible_before", check_feasible(&a, &file.constraints, opts.tol())?.feasible);
        r.verdict("feasible_after", check_feasible(&b, &file.constraints, opts.tol())?.feasible);
    }
    r.diagnostic("certificate", &cert);
    r.table(Table::allocation("original", &a));
    r.table(Table::allocation("improved", &b));
    Ok(r)
}

fn oracle_values(r: &mut Report, key: &str, o: &OracleResult) {
    r.value(key, o.value);
    r.diagnostic(&format!("{key}_grid_size"), o.grid_size);
    r.diagnostic(&format!("{key}_feasible_points"), o.feasible_points);
    if let Some(t) = o.param {
        r.value(&format!("{key}_param"), t);
    }
    r.table(Table::allocation(key, &o.allocation));
}

fn oracle(file: &ProblemFile, grid: &GridSpec, mode: OracleMode, opts: RunOptions) -> Result<Report> {
    let inst = file.instance()?;
    let measures = file.measures().ok_or_else(|| Error::Schema(vec!["every agent needs a measure".into()]))?;
    let s = &inst.aggregate;
    let mut r = Report::new("oracle");
    let best = match mode {
        OracleMode::Comonotone => None,
        _ => Some(grid_minimize(s, &measures, &file.constraints, grid, opts.tol())?),
    };
    let como = match mode {
        OracleMode::Grid => None,
        _ => Some(comonotone_minimize(s, &measures, &file.constraints, grid, opts.tol())?),
    };
    if let Some(b) = &best {
        oracle_values(&mut r, "constrained", b);
        r.verdict("constrained_minimizer_comonotonic", is_comonotonic(&b.allocation, 1e-9));
        if let Some(f) = comonotonicity_failure(&b.allocation, 1e-9) {
            r.diagnostic("constrained_minimizer_failure", f);
        }
    }
    if let Some(c) = &como {
        oracle_values(&mut r, "comonotonic", c);
    }
    if let (Some(b), Some(c)) = (&best, &como) {
        r.value("gap", c.value - b.value);
    }
    Ok(r)
}

fn check_solidity(
    file: &ProblemFile,
    rows: Option<&[Vec<f64>]>,
    budget: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<Report> {
    let inst = file.instance()?;
    let support = inst.aggregate.distribution().support();
    let verdict = classify_solidity(&file.constraints, Some(&support));
    let mut r = Report::new("check-solidity");
    r.diagnostic("status", verdict.status);
    r.diagnostic("reason", &verdict.reason);
    let start = match rows {
        Some(rows) => Some(file.allocation_from(&inst.aggregate, rows)?),
        None => inst.endowments.clone(),
    };
    let Some(x) = start else {
        r.diagnostic("falsifier", "skipped: no starting allocation");
        return Ok(r);
    };
    if !check_feasible(&x, &file.constraints, opts.tol())?.feasible {
        r.diagnostic("falsifier", "skipped: starting allocation is infeasible");
        return Ok(r);
    }
    r.diagnostic("seed", seed);
    r.diagnostic("budget", budget);
    match falsify_solidity(&file.constraints, &x, budget, seed, opts.tol())? {
        Some(w) => {
            r.verdict("witness_found", true);
            r.verdict("witness_checks_pass", w.checks.all_pass());
            r.diagnostic("witness_source", w.source);
            r.diagnostic("witness_checks", &w.checks);
            r.diagnostic("violations", &w.violations);
            r.table(Table::allocation("witness_x", &w.x));
            r.table(Table::allocation("witness_y", &w.y));
        }
        None => r.verdict("witness_found", false),
    }
    Ok(r)
}
