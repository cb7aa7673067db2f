use proptest::prelude::*;

use lddim_fvm::ScalarField2D;

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.ldf2");
    let values = vec![
        0.0,
        -1.5,
        3.25e-300,
        1.0 / 3.0,
        f64::MIN_POSITIVE,
        9.9e200,
    ];
    let f = ScalarField2D::new(3, 2, 0.5, 2.0, values).unwrap();
    f.write_ldf2(&path).unwrap();
    let g = ScalarField2D::read_ldf2(&path).unwrap();
    assert_eq!(f, g);
    for (a, b) in f.values().iter().zip(g.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn bad_magic_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ldf2");
    std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
    assert!(ScalarField2D::read_ldf2(&path).is_err());
}

#[test]
fn truncated_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.ldf2");
    let f = ScalarField2D::constant(4, 4, 1.0, 1.0, 2.0);
    f.write_ldf2(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
    assert!(ScalarField2D::read_ldf2(&path).is_err());
}

#[test]
fn shape_mismatch_is_rejected() {
    assert!(ScalarField2D::new(3, 3, 1.0, 1.0, vec![0.0; 8]).is_err());
    assert!(ScalarField2D::new(0, 3, 1.0, 1.0, vec![]).is_err());
    assert!(ScalarField2D::new(2, 2, -1.0, 1.0, vec![0.0; 4]).is_err());
    assert!(ScalarField2D::new(2, 2, 1.0, 1.0, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
}

proptest! {
    #[test]
    fn round_trip_random_fields(
        nx in 1usize..12,
        ny in 1usize..12,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..nx * ny)
            .map(|_| rng.gen::<f64>() * 2e3 - 1e3)
            .collect();
        let f = ScalarField2D::new(nx, ny, 0.25, 4.0, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ldf2");
        f.write_ldf2(&path).unwrap();
        let g = ScalarField2D::read_ldf2(&path).unwrap();
        prop_assert_eq!(f, g);
    }
}
