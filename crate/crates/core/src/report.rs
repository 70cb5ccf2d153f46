//! Machine-readable results of a task, and their JSON / CSV / text renderings.
//!
//! Every float is rounded to 12 significant digits on the way out and maps
//! are ordered, so the same report always renders to the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::numeric::{exact_ratio, ratio_string, round12};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(Error::Domain(format!("unknown format {other:?} (json, csv, text)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// One row per atom: `atom, prob, S, X_1, ..., X_n`.
    pub fn allocation(name: impl Into<String>, a: &Allocation) -> Self {
        let mut columns = vec!["atom".to_string(), "prob".to_string(), "S".to_string()];
        columns.extend((1..=a.n_agents()).map(|i| format!("X_{i}")));
        let space = a.space();
        let rows = (0..space.len())
            .map(|w| {
                let mut row = vec![Value::from(space.label(w)), num(space.prob(w)), num(a.aggregate().value(w))];
                row.extend(a.shares().iter().map(|x| num(x.value(w))));
                row
            })
            .collect();
        Self { name: name.into(), columns, rows }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// A numeric assertion and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: Value,
    pub computed: Value,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn close(name: impl Into<String>, expected: f64, computed: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            expected: num(expected),
            computed: num(computed),
            tol,
            pass: (expected - computed).abs() <= tol,
        }
    }

    /// Exact equality of a value with a fraction such as `"25/12"`.
    pub fn exact(name: impl Into<String>, expected: &str, computed: f64) -> Self {
        let got = exact_string(computed);
        Self {
            name: name.into(),
            expected: Value::from(expected),
            pass: got.as_deref() == Some(expected),
            computed: Value::from(got.unwrap_or_else(|| format!("{computed}"))),
            tol: 0.0,
        }
    }

    pub fn holds(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            expected: Value::Bool(true),
            computed: Value::Bool(pass),
            tol: 0.0,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub task: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, Value>,
    /// Values that are exact fractions, as `p/q` strings.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exact: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub verdicts: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
}

/// A float as JSON, with the extended reals as `"inf"` / `"-inf"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
    } else if x.is_nan() {
        Value::Null
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

/// Largest denominator shown as an exact fraction; beyond it a float is far
/// more likely to match some fraction by accident.
pub const REPORT_MAX_DENOMINATOR: i128 = 1000;

/// `p/q` for values that are fractions with small denominators.
pub fn exact_string(x: f64) -> Option<String> {
    exact_ratio(x)
        .filter(|r| *r.denom() <= REPORT_MAX_DENOMINATOR)
        .map(|r| ratio_string(&r))
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(round12(n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(xs) => Value::Array(xs.into_iter().map(round_value).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_value(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

impl Report {
    pub fn new(task: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            task: task.into(),
            status: "ok".into(),
            values: BTreeMap::new(),
            exact: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }

    /// Records a value, and its fraction form when it has one.
    pub fn value(&mut self, key: &str, x: f64) {
        self.values.insert(key.into(), num(x));
        if let Some(e) = exact_string(x) {
            self.exact.insert(key.into(), e);
        }
    }

    pub fn verdict(&mut self, key: &str, v: bool) {
        self.verdicts.insert(key.into(), v);
    }

    pub fn diagnostic(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or(Value::Null);
        self.diagnostics.insert(key.into(), v);
    }

    pub fn check(&mut self, c: Check) {
        if !c.pass {
            self.status = "mismatch".into();
        }
        self.checks.push(c);
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Expected-versus-computed lines for the failing checks.
    pub fn mismatch_diff(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("  {}: expected {}, computed {} (tol {:e})", c.name, c.expected, c.computed, c.tol))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn to_json(&self) -> Result<String> {
        let v = round_value(serde_json::to_value(self)?);
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        Ok(s)
    }

    /// Tables as CSV; several tables are separated by `# name` lines, and the
    /// scalar values follow as a `key,value` table.
    pub fn to_csv(&self) -> String {
        let mut tables: Vec<Table> = self.tables.clone();
        if !self.values.is_empty() {
            let mut t = Table::new("values", &["key", "value"]);
            for (k, v) in &self.values {
                t.push(vec![Value::from(k.as_str()), v.clone()]);
            }
            tables.push(t);
        }
        let headed = tables.len() > 1;
        let mut out = String::new();
        for (k, t) in tables.iter().enumerate() {
            if headed {
                if k > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "# {}", t.name);
            }
            out.push_str(&table_csv(t));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "task: {}    status: {}", self.task, self.status);
        let width = self
            .values
            .keys()
            .chain(self.verdicts.keys())
            .chain(self.diagnostics.keys())
            .map(String::len)
            .max()
            .unwrap_or(0);
        if !self.values.is_empty() {
            out.push_str("\nvalues\n");
            for (k, v) in &self.values {
                let exact = self.exact.get(k).map(|e| format!("  (= {e})")).unwrap_or_default();
                let _ = writeln!(out, "  {k:<width$}  {}{exact}", cell_text(&round_value(v.clone())));
            }
        }
        if !self.verdicts.is_empty() {
            out.push_str("\nverdicts\n");
            for (k, v) in &self.verdicts {
                let _ = writeln!(out, "  {k:<width$}  {v}");
            }
        }
        if !self.diagnostics.is_empty() {
            out.push_str("\ndiagnostics\n");
            for (k, v) in &self.diagnostics {
                let _ = writeln!(out, "  {k:<width$}  {}", cell_text(&round_value(v.clone())));
            }
        }
        if !self.checks.is_empty() {
            out.push_str("\nchecks\n");
            for c in &self.checks {
                let _ = writeln!(
                    out,
                    "  [{}] {}: expected {}, computed {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    cell_text(&round_value(c.expected.clone())),
                    cell_text(&round_value(c.computed.clone()))
                );
            }
        }
        for t in &self.tables {
            let _ = write!(out, "\n{}\n{}", t.name, table_text(t));
        }
        out
    }

    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Json => self.to_json()?,
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        })
    }

    /// Writes every table to `dir/<prefix>-<table>.csv` and the full report to
    /// `dir/<prefix>.json`; returns the paths written.
    pub fn write_artifacts(&self, dir: &Path, prefix: &str) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{prefix}-{}.csv", t.name));
            std::fs::File::create(&path)?.write_all(table_csv(t).as_bytes())?;
            written.push(path);
        }
        let path = dir.join(format!("{prefix}.json"));
        std::fs::File::create(&path)?.write_all(self.to_json()?.as_bytes())?;
        written.push(path);
        Ok(written)
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_field(v: &Value) -> String {
    let s = cell_text(&round_value(v.clone()));
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn table_csv(t: &Table) -> String {
    let mut out = t.columns.join(",");
    out.push('\n');
    for row in &t.rows {
        out.push_str(&row.iter().map(csv_field).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn table_text(t: &Table) -> String {
    let cells: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| r.iter().map(|v| cell_text(&round_value(v.clone()))).collect())
        .collect();
    let widths: Vec<usize> = (0..t.columns.len())
        .map(|j| cells.iter().map(|r| r[j].len()).chain([t.columns[j].len()]).max().unwrap_or(0))
        .collect();
    let line = |items: Vec<&str>| -> String {
        let mut s: String = items
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.insert_str(0, "  ");
        s.push('\n');
        s
    };
    let mut out = line(t.columns.iter().map(String::as_str).collect());
    for r in &cells {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::{FiniteSpace, RandomVariable};

    fn sample() -> Report {
        let sp = FiniteSpace::uniform(2).unwrap();
        let s = RandomVariable::new(sp.clone(), vec![0.0, 2.0]).unwrap();
        let x = RandomVariable::new(sp, vec![0.1 + 0.2, 1.0]).unwrap();
        let a = Allocation::with_implied_last(vec![x], s).unwrap();
        let mut r = Report::new("demo");
        r.value("objective", 25.0 / 12.0);
        r.verdict("comonotonic", true);
        r.diagnostic("iterations", 3);
        r.check(Check::exact("objective", "25/12", 25.0 / 12.0));
        r.table(Table::allocation("allocation", &a));
        r
    }

    #[test]
    fn csv_header_and_rounding() {
        let r = sample();
        let csv = r.to_csv();
        assert!(csv.starts_with("# allocation\natom,prob,S,X_1,X_2\n"), "{csv}");
        // 0.1 + 0.2 is emitted with 12 significant digits
        assert!(csv.contains(",0.3,"), "{csv}");
        assert!(csv.contains("# values\nkey,value\nobjective,2.08333333333\n"), "{csv}");
    }

    #[test]
    fn json_is_stable_and_exact() {
        let r = sample();
        let a = r.to_json().unwrap();
        assert_eq!(a, r.clone().to_json().unwrap());
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["exact"]["objective"], "25/12");
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["status"], "ok");
    }

    #[test]
    fn failing_check_marks_mismatch() {
        let mut r = Report::new("demo");
        r.check(Check::close("q", 4.7439, 4.0, 1e-3));
        assert_eq!(r.status, "mismatch");
        assert!(r.mismatch_diff().contains("q: expected 4.7439"));
    }

    #[test]
    fn text_lists_checks_and_tables() {
        let t = sample().to_text();
        assert!(t.contains("[PASS] objective"));
        assert!(t.contains("(= 25/12)"));
        assert!(t.contains("X_1"));
    }

    #[test]
    fn infinities_render_as_strings() {
        assert_eq!(num(f64::INFINITY), Value::from("inf"));
        assert_eq!(num(f64::NEG_INFINITY), Value::from("-inf"));
    }
}
