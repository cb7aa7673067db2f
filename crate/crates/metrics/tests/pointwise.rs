use lddim_fvm::ScalarField2D;
use lddim_metrics::{
    mean_corrected_relative, relative_l2, ssim, MetricsBundle, SSIM_K1, SSIM_K2, SSIM_WINDOW,
};
use lddim_synth::{gaussian_field, GrfParams};

fn random_field(nx: usize, ny: usize, seed: u64) -> ScalarField2D {
    gaussian_field(&GrfParams::new(0.2, nx, ny, seed).unwrap()).unwrap()
}

#[test]
fn relative_l2_identities() {
    let truth = random_field(16, 16, 1);
    assert_eq!(relative_l2(&truth, &truth).unwrap(), 0.0);
    let double = truth.map(|v| 2.0 * v);
    assert!((relative_l2(&double, &truth).unwrap() - 1.0).abs() < 1e-14);

    let zero = truth.map(|_| 0.0);
    assert!(relative_l2(&truth, &zero).is_err());
    let other = random_field(8, 8, 2);
    assert!(relative_l2(&truth, &other).is_err());
}

#[test]
fn relative_l2_matches_elementwise_oracle() {
    let pred = random_field(12, 12, 3);
    let truth = random_field(12, 12, 4);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..12 {
        for i in 0..12 {
            let d = pred.at(i, j) - truth.at(i, j);
            num += d * d;
            den += truth.at(i, j) * truth.at(i, j);
        }
    }
    let oracle = (num / den).sqrt();
    let got = relative_l2(&pred, &truth).unwrap();
    assert!((got - oracle).abs() < 1e-14, "{got} vs {oracle}");
}

#[test]
fn mean_corrected_identities() {
    let truth = random_field(16, 16, 5);
    assert_eq!(mean_corrected_relative(&truth, &truth).unwrap(), 0.0);

    let mean = truth.values().iter().sum::<f64>() / truth.len() as f64;
    let flat = truth.map(|_| mean);
    let got = mean_corrected_relative(&flat, &truth).unwrap();
    assert!((got - 1.0).abs() < 1e-13, "{got}");

    let constant = truth.map(|_| 3.0);
    assert!(mean_corrected_relative(&truth, &constant).is_err());
}

#[test]
fn ssim_self_similarity_is_exactly_one() {
    let p = random_field(20, 20, 6);
    assert_eq!(ssim(&p, &p, SSIM_WINDOW, 1.0).unwrap(), 1.0);
}

#[test]
fn ssim_constant_offset_matches_closed_form() {
    // sigma terms vanish, so only the luminance factor remains
    let l = 2.0;
    let a = 0.7;
    let p = ScalarField2D::constant(10, 10, 1.0, 1.0, a);
    let q = ScalarField2D::constant(10, 10, 1.0, 1.0, a + l);
    let c1 = (SSIM_K1 * l).powi(2);
    let expected = (2.0 * a * (a + l) + c1) / (a * a + (a + l) * (a + l) + c1);
    let got = ssim(&p, &q, SSIM_WINDOW, l).unwrap();
    assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
}

#[test]
fn ssim_matches_per_window_brute_force() {
    let p = random_field(11, 9, 7);
    let q = random_field(11, 9, 8);
    let l = 1.0;
    let (c1, c2) = ((SSIM_K1 * l).powi(2), (SSIM_K2 * l).powi(2));
    let w = 7usize;
    let half = (w / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut total = 0.0;
    for cj in 0..9isize {
        for ci in 0..11isize {
            // two-pass mean / variance over the replicate-padded window
            let mut window_p = Vec::new();
            let mut window_q = Vec::new();
            for dj in -half..=half {
                for di in -half..=half {
                    window_p.push(p.at(clamp(ci + di, 11), clamp(cj + dj, 9)));
                    window_q.push(q.at(clamp(ci + di, 11), clamp(cj + dj, 9)));
                }
            }
            let n = window_p.len() as f64;
            let mp = window_p.iter().sum::<f64>() / n;
            let mq = window_q.iter().sum::<f64>() / n;
            let vp = window_p.iter().map(|v| (v - mp) * (v - mp)).sum::<f64>() / n;
            let vq = window_q.iter().map(|v| (v - mq) * (v - mq)).sum::<f64>() / n;
            let cov = window_p
                .iter()
                .zip(&window_q)
                .map(|(a, b)| (a - mp) * (b - mq))
                .sum::<f64>()
                / n;
            total += (2.0 * mp * mq + c1) * (2.0 * cov + c2)
                / ((mp * mp + mq * mq + c1) * (vp + vq + c2));
        }
    }
    let oracle = total / 99.0;
    let got = ssim(&p, &q, w, l).unwrap();
    assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
}

#[test]
fn ssim_is_symmetric_and_bounded() {
    let p = random_field(16, 16, 9);
    let q = random_field(16, 16, 10);
    let a = ssim(&p, &q, SSIM_WINDOW, 1.0).unwrap();
    let b = ssim(&q, &p, SSIM_WINDOW, 1.0).unwrap();
    assert!((a - b).abs() < 1e-15);
    assert!((-1.0..=1.0).contains(&a));
}

#[test]
fn ssim_rejects_bad_parameters() {
    let p = random_field(5, 5, 11);
    assert!(ssim(&p, &p, 7, 1.0).is_err()); // window larger than field
    assert!(ssim(&p, &p, 4, 1.0).is_err()); // even window
    assert!(ssim(&p, &p, 3, 0.0).is_err()); // empty dynamic range
    assert!(ssim(&p, &p, 3, 1.0).is_ok());
}

#[test]
fn bundle_invariants_hold() {
    let k_truth = random_field(16, 16, 12);
    let k_hat = random_field(16, 16, 13);
    let h_truth = random_field(16, 16, 14);
    let h_hat = random_field(16, 16, 15);
    let b = MetricsBundle::compute(&k_hat, &k_truth, &h_hat, &h_truth, false).unwrap();
    assert!(b.eps_k >= 0.0 && b.eps_h >= 0.0 && b.eps_k_tilde >= 0.0);
    assert!((-1.0..=1.0).contains(&b.ssim));
    assert!(!b.evaluated_in_log);
}
