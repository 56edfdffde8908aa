use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use filmtag::designer::{objective, optimize, optimize_observed, DesignSpace, DesignTarget};
use filmtag::files::paper_stack;
use filmtag::materials::MaterialDispersion;
use filmtag::tmm::{Channel, Layer, StackSpec, WavelengthGrid};

fn constant(n: f64) -> Arc<MaterialDispersion> {
    Arc::new(MaterialDispersion::constant(format!("n={n}"), n, 0.0).unwrap())
}

fn film_reflectance(n1: f64, ns: f64, d: f64, lambda: f64) -> f64 {
    let r01 = (1.0 - n1) / (1.0 + n1);
    let r12 = (n1 - ns) / (n1 + ns);
    let phase = Complex64::from_polar(1.0, 4.0 * std::f64::consts::PI * n1 * d / lambda);
    ((r01 + r12 * phase) / (1.0 + r01 * r12 * phase)).norm_sqr()
}

fn scan_optimum(n1: f64, ns: f64, lambda: f64, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) / 0.1).round() as usize;
    (0..=steps)
        .map(|i| lo + 0.1 * i as f64)
        .map(|d| (d, film_reflectance(n1, ns, d, lambda)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

fn film_space(n1: f64, ns: f64, start: f64, lo: f64, hi: f64) -> DesignSpace {
    let stack = StackSpec::new(constant(1.0), vec![Layer::new(constant(n1), start).unwrap()], constant(ns));
    DesignSpace::new(stack, vec![(lo, hi)], vec![false]).unwrap()
}

fn paper_peaks() -> [DesignTarget; 2] {
    [DesignTarget::peak_at(405.0, Channel::T), DesignTarget::peak_at(748.0, Channel::T)]
}

#[test]
fn recipe_beats_single_layer_perturbations() {
    let stack = paper_stack();
    let base = objective(&stack, &paper_peaks()).unwrap();
    for i in 0..stack.layers.len() {
        let mut t = stack.thicknesses();
        t[i] += 40.0;
        let perturbed = objective(&stack.with_thicknesses(&t).unwrap(), &paper_peaks()).unwrap();
        assert!(base < perturbed, "layer {i}: recipe {base} vs +40 nm {perturbed}");
    }
}

#[test]
fn paper_space_search_is_monotone_and_bounded() {
    let space = DesignSpace::new(paper_stack(), vec![(10.0, 250.0); 4], vec![false; 4]).unwrap();
    let mut last_best = f64::INFINITY;
    let mut count = 0;
    let result = optimize_observed(&space, &paper_peaks(), 3_000, 11, &WavelengthGrid::visible(), |e| {
        assert!(space.contains(e.thicknesses), "{:?}", e.thicknesses);
        assert!(e.best_so_far <= last_best);
        assert!(e.best_so_far <= e.objective);
        last_best = e.best_so_far;
        count += 1;
    })
    .unwrap();
    assert_eq!(count, result.evaluations);
    assert!(result.evaluations <= 3_000);
    assert_eq!(result.objective, last_best);
    let again = objective(&paper_stack().with_thicknesses(&result.thicknesses_nm).unwrap(), &paper_peaks()).unwrap();
    assert!((again - result.objective).abs() <= 1e-12);
    assert!(result.objective <= objective(&paper_stack(), &paper_peaks()).unwrap());
}

#[test]
fn colour_separation_target() {
    let stack = paper_stack();
    let met = objective(&stack, &[DesignTarget::mode_color_separation(0.05)]).unwrap();
    assert_eq!(met, 0.0);
    let unmet = objective(&stack, &[DesignTarget::mode_color_separation(0.5).weighted(2.0)]).unwrap();
    assert!(unmet > 0.0 && unmet < 2.0 * 0.25);
}

#[test]
fn budget_exhaustion_is_flagged() {
    let space = film_space(1.38, 1.5, 60.0, 50.0, 200.0);
    let r = optimize(&space, &[DesignTarget::value_at(550.0, Channel::R, 0.0)], 25, 1).unwrap();
    assert_eq!(r.evaluations, 25);
    assert!(!r.converged);
}

#[test]
fn result_json_layout() {
    let space = film_space(1.38, 1.5, 100.0, 50.0, 200.0);
    let r = optimize(&space, &[DesignTarget::value_at(550.0, Channel::R, 0.0)], 2_000, 42).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 4);
    for k in ["thicknesses_nm", "objective", "evaluations", "converged"] {
        assert!(keys.contains(&k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_film_matches_exhaustive_scan(
        n1 in 1.3f64..1.5,
        lambda in 450.0f64..650.0,
        start_frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let (lo, hi) = (50.0, 200.0);
        let space = film_space(n1, 1.52, lo + start_frac * (hi - lo), lo, hi);
        let r = optimize(&space, &[DesignTarget::value_at(lambda, Channel::R, 0.0)], 5_000, seed).unwrap();
        let scan = scan_optimum(n1, 1.52, lambda, lo, hi);
        prop_assert!((r.thicknesses_nm[0] - scan).abs() <= 0.2, "{} vs {}", r.thicknesses_nm[0], scan);
    }
}
