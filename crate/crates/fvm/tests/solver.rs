use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lddim_fvm::{
    assemble_system, harmonic_face_conductivity, solve_head, BoundaryConditions, Factorization,
    ScalarField2D,
};

fn random_logk_field(nx: usize, ny: usize, seed: u64, spread: f64) -> ScalarField2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..nx * ny)
        .map(|_| (spread * (rng.gen::<f64>() * 2.0 - 1.0)).exp())
        .collect();
    ScalarField2D::new(nx, ny, 1.0, 1.0, values).unwrap()
}

#[test]
fn harmonic_mean_matches_formula() {
    let kh = harmonic_face_conductivity(2.0, 6.0).unwrap();
    assert!((kh - 3.0).abs() < 1e-15);
    assert!((harmonic_face_conductivity(5.0, 5.0).unwrap() - 5.0).abs() < 1e-15);
    assert!(harmonic_face_conductivity(0.0, 1.0).is_err());
    assert!(harmonic_face_conductivity(1.0, -2.0).is_err());
}

#[test]
fn hand_assembled_2x2_system() {
    // K = [1 2; 3 4] on a unit-spacing grid, bc (1, 0).
    let k = ScalarField2D::new(2, 2, 1.0, 1.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let bc = BoundaryConditions::default();
    let sys = assemble_system(&k, &bc).unwrap();
    assert_eq!(sys.n, 4);

    let t01 = 2.0 * 1.0 * 2.0 / 3.0; // east face of cell 0
    let t02 = 2.0 * 1.0 * 3.0 / 4.0; // north face of cell 0
    let t13 = 2.0 * 2.0 * 4.0 / 6.0;
    let t23 = 2.0 * 3.0 * 4.0 / 7.0;
    let g0 = 2.0 * 1.0; // left ghost of cell 0
    let g1 = 2.0 * 2.0; // right ghost of cell 1
    let g2 = 2.0 * 3.0;
    let g3 = 2.0 * 4.0;

    assert!((sys.entry(0, 0) + (t01 + t02 + g0)).abs() < 1e-14);
    assert!((sys.entry(0, 1) - t01).abs() < 1e-14);
    assert!((sys.entry(0, 2) - t02).abs() < 1e-14);
    assert_eq!(sys.entry(0, 3), 0.0);
    assert!((sys.entry(1, 1) + (t01 + t13 + g1)).abs() < 1e-14);
    assert!((sys.entry(2, 2) + (t02 + t23 + g2)).abs() < 1e-14);
    assert!((sys.entry(3, 3) + (t13 + t23 + g3)).abs() < 1e-14);
    assert!((sys.entry(3, 2) - t23).abs() < 1e-14);

    assert!((sys.rhs[0] + g0 * 1.0).abs() < 1e-14);
    assert!((sys.rhs[1] + g1 * 0.0).abs() < 1e-14);
    assert!((sys.rhs[2] + g2 * 1.0).abs() < 1e-14);
    assert!((sys.rhs[3] + g3 * 0.0).abs() < 1e-14);
}

#[test]
fn homogeneous_interior_stencil() {
    let k = ScalarField2D::constant(5, 5, 1.0, 1.0, 1.0);
    let sys = assemble_system(&k, &BoundaryConditions::default()).unwrap();
    let p = 2 * 5 + 2; // center cell
    assert!((sys.entry(p, p) + 4.0).abs() < 1e-14);
    for q in [p - 5, p - 1, p + 1, p + 5] {
        assert!((sys.entry(p, q) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn matrix_is_symmetric() {
    let k = random_logk_field(9, 7, 11, 2.0);
    let sys = assemble_system(&k, &BoundaryConditions::default()).unwrap();
    for i in 0..sys.n {
        for idx in sys.row_ptr[i]..sys.row_ptr[i + 1] {
            let j = sys.col_idx[idx];
            assert!(
                (sys.vals[idx] - sys.entry(j, i)).abs() < 1e-14,
                "asymmetry at ({i},{j})"
            );
        }
    }
}

#[test]
fn row_sums_account_for_ghost_faces() {
    let nx = 6;
    let k = random_logk_field(nx, 5, 3, 1.5);
    let sys = assemble_system(&k, &BoundaryConditions::default()).unwrap();
    for j in 0..5 {
        for i in 0..nx {
            let p = j * nx + i;
            let sum: f64 = (sys.row_ptr[p]..sys.row_ptr[p + 1])
                .map(|idx| sys.vals[idx])
                .sum();
            let mut ghost = 0.0;
            if i == 0 {
                ghost += 2.0 * k.at(i, j);
            }
            if i == nx - 1 {
                ghost += 2.0 * k.at(i, j);
            }
            assert!(
                (sum + ghost).abs() < 1e-12,
                "row {p}: sum {sum} ghost {ghost}"
            );
        }
    }
}

#[test]
fn constant_conductivity_gives_linear_head() {
    // 100x100 grid over a 100x100 domain, unit head drop: the discrete
    // solution equals the linear profile at cell centers exactly.
    let k = ScalarField2D::constant(100, 100, 1.0, 1.0, 3.7);
    let sys = assemble_system(&k, &BoundaryConditions::default()).unwrap();
    let start = std::time::Instant::now();
    let h = solve_head(&sys).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    for j in 0..100 {
        for i in 0..100 {
            let x_c = -50.0 + (i as f64 + 0.5); // domain [-50, 50]
            let expect = (50.0 - x_c) / 100.0;
            assert!(
                (h.at(i, j) - expect).abs() < 1e-10,
                "cell ({i},{j}): {} vs {expect}",
                h.at(i, j)
            );
        }
    }
}

#[test]
fn two_slab_series_resistance() {
    // Left half k1, right half k2: head is piecewise linear with slopes
    // set by flux continuity, and TPFA with harmonic faces is exact at
    // cell centers for piecewise-constant conductivity in 1-D.
    let (nx, ny) = (40, 8);
    let (k1, k2) = (1.0, 10.0);
    let mut vals = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            vals[j * nx + i] = if i < nx / 2 { k1 } else { k2 };
        }
    }
    let k = ScalarField2D::new(nx, ny, 1.0, 1.0, vals).unwrap();
    let sys = assemble_system(&k, &BoundaryConditions::default()).unwrap();
    let h = solve_head(&sys).unwrap();

    let l = nx as f64;
    let q = 1.0 / (l / 2.0 / k1 + l / 2.0 / k2); // unit head drop
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 + 0.5) * 1.0;
            let expect = if i < nx / 2 {
                1.0 - q * x / k1
            } else {
                1.0 - q * (l / 2.0) / k1 - q * (x - l / 2.0) / k2
            };
            assert!(
                (h.at(i, j) - expect).abs() < 1e-8,
                "cell ({i},{j}): {} vs {expect}",
                h.at(i, j)
            );
        }
    }
}

#[test]
fn equal_dirichlet_values_give_constant_head() {
    let k = random_logk_field(12, 9, 7, 2.0);
    let bc = BoundaryConditions::new(0.4, 0.4);
    let h = solve_head(&assemble_system(&k, &bc).unwrap()).unwrap();
    for &v in h.values() {
        assert!((v - 0.4).abs() < 1e-11);
    }
}

#[test]
fn discrete_maximum_principle() {
    let k = random_logk_field(20, 20, 42, 3.0);
    let h = solve_head(&assemble_system(&k, &BoundaryConditions::default()).unwrap()).unwrap();
    for &v in h.values() {
        assert!(v > -1e-12 && v < 1.0 + 1e-12, "head {v} escapes [0, 1]");
    }
}

#[test]
fn solve_is_bitwise_deterministic() {
    let k = random_logk_field(16, 16, 5, 2.5);
    let bc = BoundaryConditions::default();
    let h1 = solve_head(&assemble_system(&k, &bc).unwrap()).unwrap();
    let h2 = solve_head(&assemble_system(&k, &bc).unwrap()).unwrap();
    assert_eq!(h1.values(), h2.values());
}

#[test]
fn iterative_solver_matches_direct() {
    let k = random_logk_field(16, 16, 9, 2.0);
    let sys = assemble_system(&k, &BoundaryConditions::default()).unwrap();
    let direct = Factorization::build(&sys).unwrap();
    let h_direct = direct.solve(&sys, &sys.rhs).unwrap();

    let inv_diag: Vec<f64> = (0..sys.n).map(|i| -1.0 / sys.entry(i, i)).collect();
    let iter = Factorization::Iterative { inv_diag };
    let h_iter = iter.solve(&sys, &sys.rhs).unwrap();
    for (a, b) in h_direct.iter().zip(&h_iter) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn mirror_in_x_flips_head() {
    let (nx, ny) = (11, 6);
    let k = random_logk_field(nx, ny, 77, 2.0);
    let bc = BoundaryConditions::default();
    let h = solve_head(&assemble_system(&k, &bc).unwrap()).unwrap();

    let mut mirrored = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            mirrored[j * nx + i] = k.at(nx - 1 - i, j);
        }
    }
    let km = ScalarField2D::new(nx, ny, 1.0, 1.0, mirrored).unwrap();
    let hm = solve_head(&assemble_system(&km, &bc).unwrap()).unwrap();
    for j in 0..ny {
        for i in 0..nx {
            assert!((hm.at(i, j) - (1.0 - h.at(nx - 1 - i, j))).abs() < 1e-11);
        }
    }
}

#[test]
fn mirror_in_y_preserves_head() {
    let (nx, ny) = (7, 10);
    let k = random_logk_field(nx, ny, 13, 2.0);
    let bc = BoundaryConditions::default();
    let h = solve_head(&assemble_system(&k, &bc).unwrap()).unwrap();

    let mut mirrored = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            mirrored[j * nx + i] = k.at(i, ny - 1 - j);
        }
    }
    let km = ScalarField2D::new(nx, ny, 1.0, 1.0, mirrored).unwrap();
    let hm = solve_head(&assemble_system(&km, &bc).unwrap()).unwrap();
    for j in 0..ny {
        for i in 0..nx {
            assert!((hm.at(i, j) - h.at(i, ny - 1 - j)).abs() < 1e-11);
        }
    }
}

#[test]
fn refinement_converges_to_smooth_profile() {
    // Manufactured 1-D solution: -(K(x) h')' = 0 with smooth K(x),
    // so K h' is constant and h(x) = 1 - q * int_{-50}^{x} dt/K(t).
    let kfun = |x: f64| 2.0 + (std::f64::consts::PI * x / 50.0).sin();
    let resistance = |a: f64, b: f64| {
        // Simpson on a fine fixed mesh
        let m = 4000;
        let hstep = (b - a) / m as f64;
        let mut acc = 1.0 / kfun(a) + 1.0 / kfun(b);
        for s in 1..m {
            let w = if s % 2 == 1 { 4.0 } else { 2.0 };
            acc += w / kfun(a + s as f64 * hstep);
        }
        acc * hstep / 3.0
    };
    let total = resistance(-50.0, 50.0);

    let mut errs = Vec::new();
    for &nx in &[25usize, 50, 100] {
        let dx = 100.0 / nx as f64;
        let ny = 4;
        let vals: Vec<f64> = (0..nx * ny)
            .map(|p| kfun(-50.0 + ((p % nx) as f64 + 0.5) * dx))
            .collect();
        let k = ScalarField2D::new(nx, ny, dx, 1.0, vals).unwrap();
        let h = solve_head(&assemble_system(&k, &BoundaryConditions::default()).unwrap()).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..nx {
            let x = -50.0 + (i as f64 + 0.5) * dx;
            let exact = 1.0 - resistance(-50.0, x) / total;
            err = err.max((h.at(i, 0) - exact).abs());
        }
        errs.push(err);
    }
    let rate1 = (errs[0] / errs[1]).log2();
    let rate2 = (errs[1] / errs[2]).log2();
    assert!(
        rate1 > 0.9 && rate2 > 0.9,
        "convergence rates {rate1}, {rate2} from errors {errs:?}"
    );
}

#[test]
fn degenerate_grid_is_rejected() {
    let k = ScalarField2D::constant(1, 4, 1.0, 1.0, 1.0);
    assert!(assemble_system(&k, &BoundaryConditions::default()).is_err());
}

#[test]
fn nonpositive_conductivity_is_rejected() {
    let k = ScalarField2D::new(3, 3, 1.0, 1.0, vec![1.0; 9]).map(|mut f| {
        f.set(1, 1, 0.0);
        f
    });
    assert!(assemble_system(&k.unwrap(), &BoundaryConditions::default()).is_err());
}
