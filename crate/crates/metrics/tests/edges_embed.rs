use lddim_fvm::ScalarField2D;
use lddim_metrics::{embed, sobel_edges, EMBED_DIM};

fn field(nx: usize, ny: usize, f: impl Fn(usize, usize) -> f64) -> ScalarField2D {
    let mut v = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            v.push(f(i, j));
        }
    }
    ScalarField2D::new(nx, ny, 1.0, 1.0, v).unwrap()
}

#[test]
fn constant_field_has_zero_edges() {
    let f = ScalarField2D::constant(9, 9, 1.0, 1.0, 4.2);
    let e = sobel_edges(&f).unwrap();
    assert!(e.values().iter().all(|&v| v == 0.0));
}

#[test]
fn vertical_step_edge_peaks_on_the_edge_columns() {
    // step between columns 3 and 4; replicate padding keeps rows uniform
    let f = field(8, 8, |i, _| if i < 4 { 0.0 } else { 1.0 });
    let e = sobel_edges(&f).unwrap();
    for j in 0..8 {
        assert_eq!(e.at(3, j), 1.0);
        assert_eq!(e.at(4, j), 1.0);
        for i in [0, 1, 2, 5, 6, 7] {
            assert_eq!(e.at(i, j), 0.0, "unexpected response at ({i},{j})");
        }
    }
}

#[test]
fn interior_spike_matches_hand_convolution() {
    // unit spike at (2,2); response is the flipped kernel magnitude:
    // corners sqrt(2), 4-neighbours 2, centre 0; normalized by 2
    let f = field(5, 5, |i, j| if (i, j) == (2, 2) { 1.0 } else { 0.0 });
    let e = sobel_edges(&f).unwrap();
    let corner = std::f64::consts::SQRT_2 / 2.0;
    for j in 0..5 {
        for i in 0..5 {
            let (di, dj) = (i as isize - 2, j as isize - 2);
            let expected = match (di.abs(), dj.abs()) {
                (1, 1) => corner,
                (1, 0) | (0, 1) => 1.0,
                _ => 0.0,
            };
            assert!(
                (e.at(i, j) - expected).abs() < 1e-15,
                "({i},{j}): {} vs {expected}",
                e.at(i, j)
            );
        }
    }
}

#[test]
fn sobel_rejects_tiny_fields() {
    let f = ScalarField2D::constant(2, 5, 1.0, 1.0, 0.0);
    assert!(sobel_edges(&f).is_err());
}

#[test]
fn embedding_is_deterministic_with_fixed_seed() {
    let f = field(16, 16, |i, j| ((i * 7 + j * 3) % 5) as f64);
    let a = embed(&f, 42).unwrap();
    let b = embed(&f, 42).unwrap();
    assert_eq!(a.features, b.features);
    assert_eq!(a.features.len(), EMBED_DIM);
    assert_eq!(a.extractor_seed, 42);

    let c = embed(&f, 43).unwrap();
    assert_ne!(a.features, c.features);
}

#[test]
fn embedding_distinguishes_shifted_edges() {
    let left = field(16, 16, |i, _| if i < 4 { 0.0 } else { 1.0 });
    let right = field(16, 16, |i, _| if i < 12 { 0.0 } else { 1.0 });
    let a = embed(&left, 0).unwrap();
    let b = embed(&right, 0).unwrap();
    let diff: f64 = a
        .features
        .iter()
        .zip(&b.features)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    assert!(diff > 1e-6, "embedding is translation degenerate ({diff})");
}
