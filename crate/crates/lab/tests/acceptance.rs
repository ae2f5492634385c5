//! One line per acceptance criterion, with the tolerances written out here
//! rather than taken from the suite defaults. Runtime limits and the
//! repeated full run are checked on top of the suite's own verdicts.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use groupoid_lab::run;
use groupoid_lab::suite::{run_suite, su2_config, CriterionResult, Manifest, SU2_AMPLITUDES};

const MANIFEST: &str = r#"{"criteria": [
  {"id": "quadratic_contraction", "tolerances": {"slope": 2.0, "slope_width": 0.3, "defect": 1e-9, "max_steps": 6, "max_initial_defect": 0.05}},
  {"id": "abelian_one_step", "tolerances": {"defect": 1e-10}},
  {"id": "telescoping", "tolerances": {"error": 1e-10}},
  {"id": "stability", "tolerances": {"factor": 5.0}},
  {"id": "linearization", "tolerances": {"hausdorff": 1e-5, "points": 1000}},
  {"id": "gkr", "tolerances": {"defect": 1e-9}},
  {"id": "mineur_arnold", "tolerances": {"oscillator": 1e-6, "quartic": 1e-5}},
  {"id": "momentum_image", "tolerances": {"hausdorff": 0.02, "resolution": 0.02}},
  {"id": "frequency_set", "tolerances": {"resolution": 0.05, "min_offset": 1e-3}},
  {"id": "affine_convexity"},
  {"id": "determinism"}
]}"#;

const SCENARIO_LIMIT: Duration = Duration::from_secs(120);
const FREQUENCY_LIMIT: Duration = Duration::from_secs(300);

fn main() -> ExitCode {
    let manifest: Manifest = serde_json::from_str(MANIFEST).expect("manifest parses");

    let mut scenario_times = Vec::new();
    for a in SU2_AMPLITUDES {
        let start = Instant::now();
        run::average(&su2_config(a)).expect("averaging scenario runs");
        scenario_times.push((a, start.elapsed()));
    }

    let mut results: Vec<(CriterionResult, Duration)> = Vec::new();
    let mut last = Instant::now();
    let first = run_suite(&manifest, |r| {
        results.push((r.clone(), last.elapsed()));
        last = Instant::now();
    })
    .expect("suite runs");
    let second = run_suite(&manifest, |_| {}).expect("suite runs again");
    let repeat_identical = first.report_json(1) == second.report_json(1)
        && first
            .tables
            .iter()
            .zip(&second.tables)
            .all(|(a, b)| a.to_csv() == b.to_csv());

    let mut all = true;
    for (i, (r, elapsed)) in results.iter().enumerate() {
        let mut passed = r.passed;
        let mut notes = vec![r.summary()];
        match r.id.as_str() {
            "quadratic_contraction" => {
                let slowest = scenario_times
                    .iter()
                    .map(|(_, t)| *t)
                    .max()
                    .unwrap_or_default();
                passed &= slowest <= SCENARIO_LIMIT;
                notes.push(format!(
                    "slowest scenario {:.2}s (limit {}s)",
                    slowest.as_secs_f64(),
                    SCENARIO_LIMIT.as_secs()
                ));
            }
            "frequency_set" => {
                passed &= *elapsed <= FREQUENCY_LIMIT;
                notes.push(format!(
                    "{:.2}s (limit {}s)",
                    elapsed.as_secs_f64(),
                    FREQUENCY_LIMIT.as_secs()
                ));
            }
            "determinism" => {
                passed &= repeat_identical;
                notes.push(format!(
                    "full suite repeated identically: {repeat_identical}"
                ));
            }
            _ => notes.push(format!("{:.2}s", elapsed.as_secs_f64())),
        }
        all &= passed;
        println!(
            "{} {:>2} {}: {}",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            r.id,
            notes.join("; ")
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
