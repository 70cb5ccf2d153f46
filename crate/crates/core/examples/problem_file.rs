//! Problem files and reports: build a task in code, round-trip it through
//! JSON, run it, and render the report in all three formats.

use coshare::problem::{run, ProblemFile, RunOptions};
use coshare::report::{Format, Report};

const TASK: &str = r#"{
  "schema_version": 1,
  "space": { "atoms": [ { "label": "S=1", "prob": "1/3" },
                        { "label": "S=2", "prob": "1/3" },
                        { "label": "S=3", "prob": "1/3" } ] },
  "aggregate": [1, 2, 3],
  "agents": [ { "measure": { "kind": "es", "alpha": "1/5" } },
              { "measure": { "kind": "es", "alpha": "1/3" } } ],
  "constraints": [ { "agent": 0, "kind": "aggregate_envelope",
                     "lower": { "s": [1], "value": ["1/4"] },
                     "upper": { "s": [2, 3], "value": ["1/4", "7/4"] } } ],
  "task": { "kind": "oracle",
            "grid": { "kind": "family", "base": [["1/4", "1/4", 0]], "direction": [[0, 0, 1]],
                      "param": { "lo": "1/4", "hi": "7/4", "step": "1/4" } } }
}"#;

pub fn run_example() -> coshare::Result<Report> {
    let file = ProblemFile::parse(TASK)?;
    let again = ProblemFile::parse(&file.to_json()?)?;
    assert_eq!(file, again, "problem files round-trip through JSON");

    let report = run(&file, RunOptions::default())?;
    for format in [Format::Text, Format::Csv] {
        println!("{}", report.render(format)?);
    }
    println!("{}", report.render(Format::Json)?);
    Ok(report)
}

#[allow(dead_code)]
fn main() -> coshare::Result<()> {
    run_example().map(|_| ())
}
