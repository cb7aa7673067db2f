mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lddim_autodiff::Tensor;
use lddim_fvm::{ForwardState, ScalarField2D};
use lddim_prior::noise_like;

use lddim_inversion::{
    data_misfit, evaluate, latent_regularizer, observe_head, uniform_layout, HeadObservation,
    InversionConfig, ObservationSet, PriorMode,
};

use common::{bc, tiny_vae_prior};

fn tiny_cfg(mode: PriorMode) -> InversionConfig {
    InversionConfig {
        prior_mode: mode,
        ddim_steps: 5,
        ..InversionConfig::default()
    }
}

#[test]
fn data_misfit_identities_and_oracle() {
    let h = ScalarField2D::new(4, 3, 1.0, 1.0, (0..12).map(|v| v as f64).collect()).unwrap();
    let exact = observe_head(&h, &[(0, 0), (3, 2), (1, 1)]).unwrap();
    assert_eq!(data_misfit(&h, &exact).unwrap(), 0.0);

    let one = ObservationSet::new(
        4,
        3,
        vec![HeadObservation {
            i: 2,
            j: 1,
            value: h.at(2, 1) + 0.1,
        }],
    )
    .unwrap();
    assert!((data_misfit(&h, &one).unwrap() - 0.01).abs() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noisy: Vec<HeadObservation> = (0..3)
        .flat_map(|j| (0..4).map(move |i| (i, j)))
        .zip(noise_like(&[12], &mut rng).data().to_vec())
        .map(|((i, j), value)| HeadObservation { i, j, value })
        .collect();
    // brute-force oracle
    let mut oracle = 0.0;
    for o in &noisy {
        let d = o.value - h.at(o.i, o.j);
        oracle += d * d;
    }
    let set = ObservationSet::new(4, 3, noisy).unwrap();
    assert!((data_misfit(&h, &set).unwrap() - oracle).abs() < 1e-14);
}

#[test]
fn observation_sets_are_validated() {
    assert!(ObservationSet::new(
        4,
        4,
        vec![HeadObservation { i: 4, j: 0, value: 1.0 }]
    )
    .is_err());
    assert!(ObservationSet::new(
        4,
        4,
        vec![
            HeadObservation { i: 1, j: 1, value: 1.0 },
            HeadObservation { i: 1, j: 1, value: 2.0 },
        ]
    )
    .is_err());
    assert!(ObservationSet::new(
        4,
        4,
        vec![HeadObservation { i: 0, j: 0, value: f64::NAN }]
    )
    .is_err());
}

#[test]
fn uniform_layouts_are_interior_and_distinct() {
    for m in [3usize, 5, 12, 16] {
        let cells = uniform_layout(m, 32, 32).unwrap();
        assert_eq!(cells.len(), m * m);
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in &cells {
            assert!(i < 32 && j < 32);
            assert!(seen.insert((i, j)));
        }
    }
    assert!(uniform_layout(0, 8, 8).is_err());
    assert!(uniform_layout(9, 8, 8).is_err());
}

#[test]
fn regularizer_identities() {
    let z = Tensor::zeros(&[1, 2, 4, 4]);
    assert_eq!(latent_regularizer(&z), 0.0);
    let ones = Tensor::new(vec![1, 2, 4, 4], vec![1.0; 32]).unwrap();
    assert_eq!(latent_regularizer(&ones), 16.0); // d/2 with d = 32
}

#[test]
fn objective_matches_manual_composition() {
    let prior = tiny_vae_prior();
    let cfg = tiny_cfg(PriorMode::VaeOnly);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z = noise_like(&[1, 2, 4, 4], &mut rng);

    // manual: decode, soft clamp, denormalize, solve, observe
    let x = prior.vae.as_ref().unwrap().decode_tensor(&z).unwrap();
    let mut clamped = x.clone();
    for v in clamped.data_mut() {
        *v = lddim_inversion::SOFT_CLAMP * (*v / lddim_inversion::SOFT_CLAMP).tanh();
    }
    let k_manual = prior.norm.to_field(&clamped, 1.0, 1.0).unwrap();
    let h_manual = ForwardState::solve(&k_manual, &bc()).unwrap().head;
    let layout = uniform_layout(3, 8, 8).unwrap();
    let obs = {
        // observe a shifted head so the misfit is non-trivial
        let shifted = h_manual.map(|v| v + 0.05);
        observe_head(&shifted, &layout).unwrap()
    };
    let manual_misfit = data_misfit(&h_manual, &obs).unwrap();

    let eval = evaluate(&z, &obs, &cfg, &prior, &bc()).unwrap();
    assert!(
        (eval.misfit - manual_misfit).abs() < 1e-10 * manual_misfit.max(1.0),
        "{} vs {}",
        eval.misfit,
        manual_misfit
    );
    assert!(
        (eval.total - (eval.misfit + cfg.beta * eval.regularizer)).abs() < 1e-14
    );
    for (a, b) in eval.k_hat.values().iter().zip(k_manual.values()) {
        assert!((a - b).abs() < 1e-12 * b.abs().max(1e-12));
    }
}

#[test]
fn perfect_fit_with_zero_beta_gives_zero_objective_and_gradient() {
    let prior = tiny_vae_prior();
    let mut cfg = tiny_cfg(PriorMode::VaeOnly);
    cfg.beta = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let z = noise_like(&[1, 2, 4, 4], &mut rng);

    // observations taken from the model's own prediction: zero misfit
    let probe = evaluate(&z, &ObservationSet::new(8, 8, vec![]).unwrap(), &cfg, &prior, &bc())
        .unwrap();
    let layout = uniform_layout(3, 8, 8).unwrap();
    let obs = observe_head(&probe.h_hat, &layout).unwrap();

    let eval = evaluate(&z, &obs, &cfg, &prior, &bc()).unwrap();
    assert_eq!(eval.misfit, 0.0);
    assert_eq!(eval.total, 0.0);
    assert!(eval.grad.data().iter().all(|&g| g == 0.0));
}

#[test]
fn zero_latent_objective_is_pure_misfit() {
    let prior = tiny_vae_prior();
    let cfg = tiny_cfg(PriorMode::VaeOnly);
    let z = Tensor::zeros(&[1, 2, 4, 4]);
    let layout = uniform_layout(3, 8, 8).unwrap();
    let truth = ScalarField2D::constant(8, 8, 1.0, 1.0, 0.5);
    let h = ForwardState::solve(&truth, &bc()).unwrap().head;
    let obs = observe_head(&h, &layout).unwrap();
    let eval = evaluate(&z, &obs, &cfg, &prior, &bc()).unwrap();
    assert_eq!(eval.regularizer, 0.0);
    assert_eq!(eval.total, eval.misfit);
}

#[test]
fn beta_linearity_of_the_gradient() {
    let prior = tiny_vae_prior();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let z = noise_like(&[1, 2, 4, 4], &mut rng);
    let truth = ScalarField2D::constant(8, 8, 1.0, 1.0, 0.3);
    let h = ForwardState::solve(&truth, &bc()).unwrap().head;
    let obs = observe_head(&h, &uniform_layout(3, 8, 8).unwrap()).unwrap();

    let mut cfg0 = tiny_cfg(PriorMode::VaeOnly);
    cfg0.beta = 0.0;
    let mut cfg2 = cfg0.clone();
    cfg2.beta = 2.0;
    let g0 = evaluate(&z, &obs, &cfg0, &prior, &bc()).unwrap().grad;
    let g2 = evaluate(&z, &obs, &cfg2, &prior, &bc()).unwrap().grad;
    for ((a, b), zi) in g2.data().iter().zip(g0.data()).zip(z.data()) {
        let expect = 2.0 * zi;
        assert!(
            (a - b - expect).abs() < 1e-12 * expect.abs().max(1.0),
            "{a} - {b} vs {expect}"
        );
    }
}
