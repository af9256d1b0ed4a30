use globalness_core::candidates::{kl_mc, tv_mc, Uniform1D};
use globalness_core::io::{parse_explanations, write_explanations};
use globalness_core::ot::{solve, wasserstein_exact, SolverMethod};
use globalness_core::synth::{apply_transform, jagged_boundary, TransformSpec};
use globalness_core::{
    center, distance, wg, wg_raw, Baseline, DistanceSpec, ExplanationKind, ExplanationSet, Metric,
    SolverConfig, SpaceConfig,
};
use proptest::prelude::*;
use serde_json::Map;

fn kind_strategy() -> impl Strategy<Value = ExplanationKind> {
    (0..3usize, 1..6usize).prop_map(|(k, s)| match k {
        0 => ExplanationKind::Attribution(s),
        1 => ExplanationKind::Selection(s),
        _ => ExplanationKind::Ranking(s),
    })
}

/// A valid set of `n` rows for `kind`.
fn set_strategy(kind: ExplanationKind, n: std::ops::Range<usize>) -> BoxedStrategy<ExplanationSet> {
    let s = kind.dim();
    let row: BoxedStrategy<Vec<f64>> = match kind {
        ExplanationKind::Attribution(_) => prop::collection::vec(-10.0..10.0f64, s).boxed(),
        ExplanationKind::Selection(_) => {
            prop::collection::vec(prop::bool::ANY.prop_map(|b| f64::from(u8::from(b))), s).boxed()
        }
        ExplanationKind::Ranking(_) => Just((0..s).map(|i| i as f64).collect::<Vec<_>>())
            .prop_shuffle()
            .boxed(),
    };
    prop::collection::vec(row, n)
        .prop_map(move |rows| ExplanationSet::from_rows(kind, &rows).unwrap())
        .boxed()
}

fn any_set() -> impl Strategy<Value = ExplanationSet> {
    kind_strategy().prop_flat_map(|k| set_strategy(k, 1..12))
}

fn three_rows() -> impl Strategy<Value = (ExplanationSet, DistanceSpec)> {
    kind_strategy().prop_flat_map(|k| {
        (set_strategy(k, 3..4), Just(DistanceSpec::for_kind(k)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ground_metrics_are_metrics((set, spec) in three_rows()) {
        let (a, b, c) = (set.row(0), set.row(1), set.row(2));
        let ab = distance(a, b, &spec).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(distance(a, a, &spec).unwrap(), 0.0);
        prop_assert_eq!(ab, distance(b, a, &spec).unwrap());
        let ac = distance(a, c, &spec).unwrap();
        let cb = distance(c, b, &spec).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
    }

    #[test]
    fn centering_is_idempotent_and_translation_free(
        set in set_strategy(ExplanationKind::Attribution(3), 1..20),
        v in prop::collection::vec(-100.0..100.0f64, 3),
    ) {
        let c = center(&set);
        prop_assert_eq!(center(&c), c.clone());
        // rounding in the shifted mean grows with the shift itself
        let tol = 1e-12 * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let shifted = center(&apply_transform(&set, &TransformSpec::Translate { by: v }).unwrap());
        for (x, y) in shifted.data().iter().zip(c.data()) {
            prop_assert!((x - y).abs() <= tol, "{} vs {}", x, y);
        }
    }

    #[test]
    fn file_round_trip_is_lossless(set in any_set()) {
        let text = write_explanations(&set, &Map::new());
        let back = parse_explanations(&text).unwrap();
        prop_assert_eq!(back.set, set);
    }

    #[test]
    fn exact_transport_is_a_metric_on_small_measures(
        (a, b, c) in kind_strategy().prop_flat_map(|k| {
            (set_strategy(k, 5..6), set_strategy(k, 5..6), set_strategy(k, 5..6))
        })
    ) {
        let spec = DistanceSpec::with_p(a.kind().default_metric(), 1.0).unwrap();
        let d = |x: &ExplanationSet, y: &ExplanationSet| wasserstein_exact(x, y, &spec).unwrap().distance;
        prop_assert!(d(&a, &a).abs() < 1e-12);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-9);
        prop_assert!(d(&a, &b) <= d(&a, &c) + d(&c, &b) + 1e-9);
    }

    #[test]
    fn entropic_cost_never_beats_the_optimum(
        (a, b) in kind_strategy().prop_flat_map(|k| (set_strategy(k, 6..7), set_strategy(k, 6..7))),
        lambda in 0.5..50.0f64,
    ) {
        let spec = DistanceSpec::for_kind(a.kind());
        let exact = wasserstein_exact(&a, &b, &spec).unwrap().distance;
        let m = SolverMethod::Sinkhorn { lambda, max_iter: 5000, tol: 1e-10 };
        let sk = solve(&a, &b, &spec, &m, 0).unwrap();
        // an unconverged plan is not feasible, so the bound need not hold
        if sk.converged {
            prop_assert!(sk.distance >= exact - 1e-6 * (1.0 + exact), "{} < {}", sk.distance, exact);
        }
    }

    #[test]
    fn raw_globalness_is_non_negative(set in any_set(), seed in any::<u64>()) {
        let kind = set.kind();
        let space = match kind {
            ExplanationKind::Attribution(s) => SpaceConfig::attribution(s, 5.0).unwrap(),
            _ => SpaceConfig::new(kind, DistanceSpec::for_kind(kind), None).unwrap(),
        };
        let solver = SolverConfig::default_for(kind);
        prop_assert!(wg_raw(&set, &space, &solver, seed).unwrap().distance >= 0.0);
        // tiny baseline samples can coincide with the point mass; that is an error, not a score
        if let Ok(r) = wg(&set, &space, &solver, seed) {
            prop_assert!(r.dirac_normalizer > 0.0);
            prop_assert_eq!(r.normalized_wg, r.raw_wg / r.dirac_normalizer);
        }
    }

    #[test]
    fn baseline_samples_are_seeded_and_in_range(s in 1..5usize, k in 0.1..10.0f64, seed in any::<u64>()) {
        for b in [
            Baseline::UniformBall { radius: k, dim: s },
            Baseline::UniformHypercube { dim: s },
            Baseline::UniformPermutations { dim: s },
        ] {
            let x = b.sample(64, seed).unwrap();
            prop_assert_eq!(&x, &b.sample(64, seed).unwrap());
            if let Baseline::UniformBall { radius, .. } = b {
                prop_assert!(x.rows().all(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius * (1.0 + 1e-12)));
            }
        }
    }

    #[test]
    fn isometries_preserve_pairwise_distances(
        set in set_strategy(ExplanationKind::Attribution(3), 2..10),
        angle in -3.2..3.2f64,
        axis in 0..3usize,
        factor in 0.1..5.0f64,
    ) {
        let spec = DistanceSpec::new(Metric::Euclidean);
        let pair = |x: &ExplanationSet| distance(x.row(0), x.row(1), &spec).unwrap();
        for t in [
            TransformSpec::Rotate { angle, i: 0, j: 2 },
            TransformSpec::Reflect { axis },
        ] {
            prop_assert!((pair(&apply_transform(&set, &t).unwrap()) - pair(&set)).abs() < 1e-9);
        }
        let scaled = apply_transform(&set, &TransformSpec::Scale { factor }).unwrap();
        prop_assert!((pair(&scaled) - factor * pair(&set)).abs() < 1e-9);
    }

    #[test]
    fn label_flooding_terminates_and_keeps_clean_labels(n in 2..40usize, scale in 0.0..3.0f64, seed in any::<u64>()) {
        let task = jagged_boundary(2 * n, scale, seed).unwrap();
        prop_assert_eq!(task.len(), 2 * n);
        if scale == 0.0 {
            prop_assert_eq!(&task.labels, &task.clean_labels);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn divergence_estimates_stay_in_range(lo in -40.0..20.0f64, width in 0.5..20.0f64, seed in any::<u64>()) {
        let u = Uniform1D { lo: -30.0, hi: 30.0 };
        let nu = Uniform1D { lo, hi: lo + width };
        let tv = tv_mc(&nu, &u, 20_000, seed);
        prop_assert!((0.0..=1.0).contains(&tv.value));
        if let Some(kl) = kl_mc(&nu, &u, 20_000, seed).value() {
            // t ln t ≥ t − 1, so only Monte Carlo noise can push it below zero
            prop_assert!(kl >= -0.05, "{kl}");
        }
    }
}
