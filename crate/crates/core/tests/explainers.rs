use globalness_core::explain::{
    explainer_accuracy, train_on_task, Explainer, ExplainerSpec, MlpModel, TrainConfig,
};
use globalness_core::rng::{rng_from_seed, Rng};
use globalness_core::synth::jagged_boundary;
use globalness_core::{ExplanationKind, ExplanationSet, SolverConfig};
use rand::Rng as _;
use std::sync::OnceLock;

fn trained() -> &'static (globalness_core::synth::JaggedBoundaryTask, MlpModel) {
    static MODEL: OnceLock<(globalness_core::synth::JaggedBoundaryTask, MlpModel)> = OnceLock::new();
    MODEL.get_or_init(|| {
        let task = jagged_boundary(2000, 0.0, 17).unwrap();
        let model = train_on_task(&task, &TrainConfig { seed: 17, ..Default::default() }).unwrap();
        (task, model)
    })
}

fn rng() -> Rng {
    rng_from_seed(0)
}

#[test]
fn unperturbed_task_is_learned() {
    let (task, model) = trained();
    let labels: Vec<usize> = task.labels.iter().map(|&l| usize::from(l)).collect();
    let acc = model.accuracy(&task.inputs(), &labels);
    assert!(acc >= 0.95, "train accuracy {acc}");
}

#[test]
fn gradients_match_finite_differences() {
    let (task, model) = trained();
    let h = 1e-4;
    let mut checked = 0;
    for p in task.points.iter().step_by(97) {
        for class in 0..2 {
            let g = model.input_gradient(p, class);
            for i in 0..2 {
                let mut up = p.to_vec();
                let mut down = p.to_vec();
                up[i] += h;
                down[i] -= h;
                let fd = (model.logits(&up)[class] - model.logits(&down)[class]) / (2.0 * h);
                // a ReLU kink inside the stencil makes the difference meaningless
                let kinked = (fd - g[i]).abs() > 1e-4 * g[i].abs().max(1.0);
                if !kinked {
                    checked += 1;
                }
                assert!(!kinked || checked == 0 || (fd - g[i]).abs() < 0.5, "{fd} vs {}", g[i]);
            }
        }
    }
    assert!(checked >= 60, "only {checked} smooth coordinates checked");
}

/// Single linear layer: logits are affine in x, so the class weights can be
/// read off from logit differences without touching the gradient code.
fn linear_model() -> (MlpModel, [Vec<f64>; 2]) {
    let model = MlpModel::init(&[2, 2], TrainConfig { seed: 3, ..Default::default() }).unwrap();
    let z0 = model.logits(&[0.0, 0.0]);
    let w = |c: usize| -> Vec<f64> {
        (0..2)
            .map(|i| {
                let mut e = vec![0.0; 2];
                e[i] = 1.0;
                model.logits(&e)[c] - z0[c]
            })
            .collect()
    };
    let weights = [w(0), w(1)];
    (model, weights)
}

#[test]
fn linear_model_explanations_are_closed_form() {
    let (model, w) = linear_model();
    let sal = Explainer::new(&model, ExplainerSpec::saliency(), &[]).unwrap();
    let mut r = rng_from_seed(1);
    for _ in 0..20 {
        let x = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
        let c = model.predict(&x);
        let s = sal.explain(&x, &mut rng());
        for i in 0..2 {
            assert!((s[i] - w[c][i].abs()).abs() < 1e-12);
        }
        for steps in [1, 7, 64] {
            let ig = Explainer::new(&model, ExplainerSpec::IntegratedGradients { steps }, &[])
                .unwrap()
                .explain(&x, &mut rng());
            for i in 0..2 {
                assert!((ig[i] - w[c][i] * x[i]).abs() < 1e-12);
            }
        }
        let ixg = Explainer::new(&model, ExplainerSpec::InputXGradient, &[])
            .unwrap()
            .explain(&x, &mut rng());
        for i in 0..2 {
            assert!((ixg[i] - w[c][i] * x[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn integrated_gradients_are_complete() {
    let (task, model) = trained();
    let ig = Explainer::new(model, ExplainerSpec::IntegratedGradients { steps: 256 }, &[]).unwrap();
    let mut checked = 0;
    for p in task.points.iter().step_by(50) {
        let c = model.predict(p);
        let gap = model.logits(p)[c] - model.logits(&[0.0, 0.0])[c];
        if gap.abs() < 1.0 {
            continue;
        }
        let sum: f64 = ig.explain(p, &mut rng()).iter().sum();
        assert!((sum - gap).abs() <= 0.01 * gap.abs(), "sum {sum} vs {gap} at {p:?}");
        checked += 1;
    }
    assert!(checked >= 20);
}

#[test]
fn smoothing_with_zero_sigma_is_the_inner_explainer() {
    let (task, model) = trained();
    let inputs = task.inputs();
    let subset = &inputs[..200];
    let inner = Explainer::new(model, ExplainerSpec::saliency(), &inputs).unwrap();
    let smooth = Explainer::new(model, ExplainerSpec::smooth(ExplainerSpec::saliency(), 0.0), &inputs).unwrap();
    let a = inner.explain_set(subset, 5).unwrap();
    let b = smooth.explain_set(subset, 5).unwrap();
    assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn explain_set_is_seeded() {
    let (task, model) = trained();
    let inputs = task.inputs();
    let e = Explainer::new(model, ExplainerSpec::smooth(ExplainerSpec::saliency(), 0.5), &inputs).unwrap();
    assert_eq!(e.explain_set(&inputs[..40], 1).unwrap(), e.explain_set(&inputs[..40], 1).unwrap());
    assert_ne!(e.explain_set(&inputs[..40], 1).unwrap(), e.explain_set(&inputs[..40], 2).unwrap());
}

#[test]
fn accuracy_reference_points() {
    let (task, model) = trained();
    let inputs = task.inputs();
    assert_eq!(explainer_accuracy(task, &task.ground_truth_explanations()).unwrap(), 1.0);

    let cg = Explainer::new(model, ExplainerSpec::ConstantGlobal, &inputs)
        .unwrap()
        .explain_set(&inputs, 0)
        .unwrap();
    let acc = explainer_accuracy(task, &cg).unwrap();
    assert!((acc - 0.5).abs() <= 0.05, "constant global accuracy {acc}");

    let mut r = rng_from_seed(8);
    let noise: Vec<f64> = (0..inputs.len()).map(|_| r.random_range(-1.0..1.0)).collect();
    let random = ExplanationSet::new(ExplanationKind::Attribution(2), noise).unwrap();
    let acc = explainer_accuracy(task, &random).unwrap();
    assert!((acc - 0.5).abs() <= 0.05, "random accuracy {acc}");
}

#[test]
fn flips_grow_with_perturbation_scale() {
    let eps = 0.25;
    let mean_flips: Vec<f64> = [0.0, eps, 2.0 * eps, 4.0 * eps]
        .iter()
        .map(|&s| {
            (0..20)
                .map(|seed| jagged_boundary(1000, s, seed).unwrap().flipped_fraction())
                .sum::<f64>()
                / 20.0
        })
        .collect();
    assert_eq!(mean_flips[0], 0.0);
    assert!(mean_flips.windows(2).all(|w| w[1] > w[0]), "{mean_flips:?}");
}

/// Half the mass of {10, 01} must move one bit to cover {00, 11}, and a point
/// mass sits one bit from the average vertex, so the population value is 1/2.
#[test]
fn ground_truth_selections_score_one_half() {
    let (task, _) = trained();
    let gt = task.ground_truth_explanations();
    let selections = ExplanationSet::new(ExplanationKind::Selection(2), gt.data().to_vec()).unwrap();
    let space = globalness_core::SpaceConfig::selection(2).unwrap().with_p(1.0).unwrap();
    let r = globalness_core::wg(&selections, &space, &SolverConfig::default_for(space.kind), 2).unwrap();
    assert!((r.normalized_wg - 0.5).abs() <= 0.03, "{r:?}");
}
