use epl_core::runner::{self, RunOptions};

fn report(name: &str, workers: Option<usize>) -> String {
    let spec = runner::builtin(name).unwrap();
    let opts = RunOptions { workers, normalize_timings: true, seed: None };
    runner::render_json(&runner::run_scenario(&spec, &opts).unwrap())
}

#[test]
fn reports_are_byte_identical_across_runs_and_worker_counts() {
    for name in ["halfspace_corner", "neg_norm_rank_one", "km_aqc", "sip_demo", "parabola_pair"] {
        let one = report(name, Some(1));
        assert_eq!(one, report(name, Some(1)), "{name}: second run differs");
        assert_eq!(one, report(name, Some(4)), "{name}: worker count changes the report");
        assert!(one.contains("\"elapsed_ms\": null") && one.contains("\"timings_normalized\": true"));
    }
}

#[test]
fn every_check_appears_once_in_order() {
    let spec = runner::builtin("sip_demo").unwrap();
    let rep = runner::run_scenario(&spec, &RunOptions::default()).unwrap();
    assert_eq!(rep.checks.len(), spec.checks.len());
    for (i, (c, e)) in rep.checks.iter().zip(&spec.checks).enumerate() {
        assert_eq!(c.index, i + 1);
        assert_eq!(&c.input, e);
    }
    assert!(rep.checks.iter().all(|c| c.elapsed_ms.is_some()));
}

#[test]
fn seed_override_is_recorded() {
    let spec = runner::builtin("halfspace_corner").unwrap();
    let rep = runner::run_scenario(&spec, &RunOptions { seed: Some(42), ..RunOptions::default() }).unwrap();
    assert_eq!(rep.provenance.seed, 42);
    assert_eq!(rep.exit_code(), 0);
}
