//! Study-harness properties: replicate streams keyed by index (so b does
//! not shift earlier draws), both arms consuming identical draws, rerun
//! reproducibility, and table shape for both scenario families.

use proxyforest_core::simulate::{
    generate, run_study, table_csv, Scenario, ScenarioSpec, StudyForestConfig,
};

fn small_fc() -> StudyForestConfig {
    StudyForestConfig {
        n_trees: 20,
        min_node_size_regression: 5,
        min_node_size_classification: 1,
        mtry: None,
    }
}

fn small_spec(scenario: Scenario, seed: u64) -> ScenarioSpec {
    ScenarioSpec { scenario, n: 40, b: 2, noise_sd: 1.0, seed }
}

#[test]
fn replicate_draws_do_not_depend_on_b() {
    let mut a = small_spec(Scenario::Linear, 9);
    a.b = 3;
    let mut b = small_spec(Scenario::Linear, 9);
    b.b = 10;
    let (ta, _) = generate(&a, 2).unwrap();
    let (tb, _) = generate(&b, 2).unwrap();
    assert_eq!(ta.x1, tb.x1);
    assert_eq!(ta.x3, tb.x3);
    assert!(generate(&a, 3).is_err(), "replicate index past b");
}

#[test]
fn train_and_test_are_distinct_draws() {
    let (train, test) = generate(&small_spec(Scenario::Linear, 1), 0).unwrap();
    assert_ne!(train.x1, test.x1);
    let (train2, _) = generate(&small_spec(Scenario::Linear, 1), 1).unwrap();
    assert_ne!(train.x1, train2.x1, "replicates draw fresh data");
}

#[test]
fn proxied_variable_is_the_stated_mixture() {
    let (train, _) = generate(&small_spec(Scenario::Linear, 2), 0).unwrap();
    for i in 0..train.x1.len() {
        let lo = 0.4 * train.x1[i] + 0.4 * train.x2[i];
        assert!(train.x3[i] >= lo && train.x3[i] <= lo + 0.2, "row {i}");
    }
}

#[test]
fn linear_study_reports_both_arms() {
    let result = run_study(&small_spec(Scenario::Linear, 3), &small_fc()).unwrap();
    let reg = result.regression.as_ref().expect("regression study");
    for rep in [&reg.naive, &reg.hier] {
        assert!(rep.mse.is_finite() && rep.mse > 0.0);
        assert!(rep.bias.is_finite());
        let coverage = rep.pi_coverage.expect("interval coverage");
        assert!((0.0..=1.0).contains(&coverage));
    }
    assert_eq!(reg.plot.len(), 40);
    assert!(reg.plot.windows(2).all(|w| w[0].x1 <= w[1].x1), "plot sorted by x1");
    assert_eq!(reg.protected_plot.len(), 40);

    let table = table_csv(&result);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "scenario,arm,bias,sd_paper,sd_conventional,mse,pi_coverage_90");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("linear,with_proxy,"));
    assert!(lines[2].starts_with("linear,without_proxy,"));
}

#[test]
fn classification_study_reports_percent_confusion() {
    let result = run_study(&small_spec(Scenario::Classification, 4), &small_fc()).unwrap();
    let cls = result.classification.as_ref().expect("classification study");
    assert!((0.0..=1.0).contains(&cls.naive_accuracy));
    assert!((0.0..=1.0).contains(&cls.hier_accuracy));
    for mat in [&cls.naive, &cls.hier] {
        let k = mat.levels.len();
        assert_eq!(k, 2);
        for actual in 0..k {
            let col: f64 = (0..k).map(|p| mat.percent[p][actual]).sum();
            assert!((col - 100.0).abs() <= 1e-6, "actual {actual} sums to {col}");
        }
    }
    let table = table_csv(&result);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("scenario,arm,accuracy,pred_"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn rerun_is_byte_identical() {
    let spec = small_spec(Scenario::Linear, 5);
    let a = table_csv(&run_study(&spec, &small_fc()).unwrap());
    let b = table_csv(&run_study(&spec, &small_fc()).unwrap());
    assert_eq!(a, b);
    assert!(!a.is_empty());
}
