//! Checks the evaluation rollup against independent recounts: hand-built
//! images with exactly known normalized errors, brute-force CED counting,
//! and a separately coded trapezoid for the AUC.

use acr_core::metrics::{evaluate, NormalizationSpec, CED_SAMPLES, FAILURE_THRESHOLD};
use acr_core::shape::ShapeSample;

/// Build an image set whose normalized errors are exactly `errors`:
/// the normalization landmarks are unit-distance apart and one of four
/// points carries the whole offset, so ME = error and factor = 1.
fn controlled_set(errors: &[f64]) -> (Vec<ShapeSample>, Vec<ShapeSample>, NormalizationSpec) {
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    for &e in errors {
        gts.push(ShapeSample::new(vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap());
        preds.push(
            ShapeSample::new(vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0 + 4.0 * e, 1.0]).unwrap(),
        );
    }
    (gts, preds, NormalizationSpec::InterOcular { left: 0, right: 1 })
}

const ERRORS: &[f64] = &[
    0.0, 0.003, 0.0031, 0.01, 0.02, 0.05, 0.075, 0.099, 0.1, 0.11, 0.2, 0.35,
];

#[test]
fn nme_is_the_mean_of_per_image_errors() {
    let (gts, preds, norm) = controlled_set(ERRORS);
    let summary = evaluate(&gts, &preds, &norm).unwrap();
    let want = ERRORS.iter().sum::<f64>() / ERRORS.len() as f64;
    assert!((summary.nme - want).abs() < 1e-15, "{} vs {want}", summary.nme);
}

#[test]
fn failure_rate_matches_a_strict_recount() {
    let (gts, preds, norm) = controlled_set(ERRORS);
    let summary = evaluate(&gts, &preds, &norm).unwrap();
    let want =
        ERRORS.iter().filter(|e| **e > FAILURE_THRESHOLD).count() as f64 / ERRORS.len() as f64;
    assert_eq!(summary.fr, want);
    // 0.1 exactly is not a failure and does count toward CED(0.1).
    let ced_end = summary.ced.last().unwrap().1;
    assert_eq!(summary.fr + ced_end, 1.0);
}

#[test]
fn ced_matches_brute_force_counting_at_every_threshold() {
    let (gts, preds, norm) = controlled_set(ERRORS);
    let summary = evaluate(&gts, &preds, &norm).unwrap();
    assert_eq!(summary.ced.len(), CED_SAMPLES);
    for (i, (t, frac)) in summary.ced.iter().enumerate() {
        let want_t = FAILURE_THRESHOLD * i as f64 / (CED_SAMPLES - 1) as f64;
        assert_eq!(*t, want_t, "threshold {i}");
        let want = ERRORS.iter().filter(|e| **e <= *t).count() as f64 / ERRORS.len() as f64;
        assert_eq!(*frac, want, "fraction at threshold {t}");
    }
}

#[test]
fn auc_matches_independent_trapezoid() {
    let (gts, preds, norm) = controlled_set(ERRORS);
    let summary = evaluate(&gts, &preds, &norm).unwrap();
    let xs: Vec<f64> = summary.ced.iter().map(|(t, _)| *t).collect();
    let ys: Vec<f64> = summary.ced.iter().map(|(_, f)| *f).collect();
    let oracle = acr_oracles::trapezoid(&xs, &ys) / FAILURE_THRESHOLD;
    assert!((summary.auc - oracle).abs() < 1e-12, "{} vs {oracle}", summary.auc);
}

#[test]
fn auc_converges_to_the_exact_step_integral() {
    // The exact integral of the empirical CDF is computable in closed form;
    // the 1000-point trapezoid must sit within one grid cell of it.
    let (gts, preds, norm) = controlled_set(ERRORS);
    let summary = evaluate(&gts, &preds, &norm).unwrap();
    let m = ERRORS.len() as f64;
    let mut exact = 0.0;
    for &e in ERRORS {
        // Each image contributes measure of [e, 0.1] where it counts as hit.
        if e <= FAILURE_THRESHOLD {
            exact += (FAILURE_THRESHOLD - e) / m;
        }
    }
    exact /= FAILURE_THRESHOLD;
    let cell = FAILURE_THRESHOLD / (CED_SAMPLES - 1) as f64;
    assert!(
        (summary.auc - exact).abs() <= cell / FAILURE_THRESHOLD,
        "auc {} vs exact {exact}",
        summary.auc
    );
}

#[test]
fn single_image_sets_are_all_or_nothing() {
    let (gts, preds, norm) = controlled_set(&[0.05]);
    let summary = evaluate(&gts, &preds, &norm).unwrap();
    assert_eq!(summary.fr, 0.0);
    assert!(summary.ced.iter().all(|(_, f)| *f == 0.0 || *f == 1.0));

    let (gts, preds, norm) = controlled_set(&[0.3]);
    let summary = evaluate(&gts, &preds, &norm).unwrap();
    assert_eq!(summary.fr, 1.0);
    assert_eq!(summary.auc, 0.0);
}

#[test]
fn evaluation_is_invariant_to_image_order() {
    let (gts, preds, norm) = controlled_set(ERRORS);
    let forward = evaluate(&gts, &preds, &norm).unwrap();
    let mut rgts = gts.clone();
    let mut rpreds = preds.clone();
    rgts.reverse();
    rpreds.reverse();
    let backward = evaluate(&rgts, &rpreds, &norm).unwrap();
    assert!((forward.nme - backward.nme).abs() < 1e-15);
    assert_eq!(forward.fr, backward.fr);
    assert_eq!(forward.ced, backward.ced);
}
