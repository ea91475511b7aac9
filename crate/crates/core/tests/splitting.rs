use num_complex::Complex64;
use proptest::prelude::*;
use wkb_lab::phase_amplitude::reconstruct;
use wkb_lab::schrodinger::{
    hamiltonian, mass, resolved_dt, resolved_points, simulate, strang_step, EpsProblem, Nonlinearity,
    Observers, Propagator, DEFAULT_DT0,
};
use wkb_lab::spectral::{norm, resample, Field, Grid, NormKind};

fn wkb_datum(grid: &Grid, eps: f64) -> Field {
    let a = Field::real_from_fn(grid, |x| 1.0 + 0.3 * x[0].cos() + 0.05 * (2.0 * x[0]).cos());
    let phi = Field::real_from_fn(grid, |x| 0.4 * x[0].sin());
    reconstruct(&a, &phi, eps).unwrap()
}

fn final_state(u0: Field, eps: f64, nl: Nonlinearity, dt: f64, t: f64) -> Field {
    let p = EpsProblem::new(u0, eps, nl, dt, t).unwrap();
    simulate(&p, &Observers::default()).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn one_step_conserves_mass(
        coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6),
        eps in 0.05..1.0f64,
        quintic in any::<bool>(),
        dim in 1usize..=2,
    ) {
        let grid = Grid::unit_torus(dim, 32).unwrap();
        let u0 = Field::from_fn(&grid, |x| {
            coeffs.iter().enumerate().map(|(k, &(re, im))| {
                let y = if dim == 2 { x[1] } else { 0.0 };
                Complex64::new(re, im) * Complex64::from_polar(1.0, k as f64 * x[0] - y)
            }).sum::<Complex64>() + 1.0
        });
        let nl = if quintic { Nonlinearity::CubicQuintic { lambda: 0.5 } } else { Nonlinearity::Cubic };
        let p = EpsProblem::new(u0.clone(), eps, nl, 1e-3, 1.0).unwrap();
        let u1 = strang_step(&u0, &p, 0.0).unwrap();
        let (m0, m1) = (mass(&u0), mass(&u1));
        prop_assert!((m1 - m0).abs() <= 1e-13 * m0);
    }
}

#[test]
fn reversibility() {
    let grid = Grid::unit_torus(1, 128).unwrap();
    let eps = 0.125;
    let u0 = wkb_datum(&grid, eps);
    let p = EpsProblem::new(u0.clone(), eps, Nonlinearity::Cubic, 1e-3, 1.0).unwrap();
    let mut v = u0.values().to_vec();
    Propagator::new(&p, 1e-3).advance_values(&mut v, 300);
    Propagator::new(&p, -1e-3).advance_values(&mut v, 300);
    let back = Field::complex(&grid, v).unwrap();
    assert!(back.sub(&u0).unwrap().max_abs() < 1e-10);
}

#[test]
fn second_order_in_time() {
    let grid = Grid::unit_torus(1, 128).unwrap();
    let eps = 0.25;
    let t = 0.5;
    let u0 = wkb_datum(&grid, eps);
    let reference = final_state(u0.clone(), eps, Nonlinearity::Cubic, 0.01 / 64.0, t);
    let err = |dt: f64| {
        let u = final_state(u0.clone(), eps, Nonlinearity::Cubic, dt, t);
        norm(&u.sub(&reference).unwrap(), NormKind::L2)
    };
    for dt in [0.02, 0.01] {
        let ratio = err(dt) / err(dt / 2.0);
        assert!((3.0..=5.0).contains(&ratio), "dt {dt}: ratio {ratio}");
    }
}

#[test]
fn grid_refinement_beyond_resolution_bound() {
    let eps = 0.25;
    let bound = resolved_points(0.4, eps, 2.0 * std::f64::consts::PI, 8);
    let n = 4 * bound;
    let coarse = Grid::unit_torus(1, n).unwrap();
    let fine = Grid::unit_torus(1, 2 * n).unwrap();
    let dt = resolved_dt(eps, 1.0, DEFAULT_DT0);
    let uc = final_state(wkb_datum(&coarse, eps), eps, Nonlinearity::Cubic, dt, 0.5);
    let uf = final_state(wkb_datum(&fine, eps), eps, Nonlinearity::Cubic, dt, 0.5);
    let gap = resample(&uc, &fine).unwrap().sub(&uf).unwrap().max_abs();
    assert!(gap <= 1e-8, "N = {n}: gap {gap}");
}

#[test]
fn hamiltonian_drift_at_resolved_step() {
    let grid = Grid::unit_torus(1, 256).unwrap();
    for (eps, nl) in [
        (0.25, Nonlinearity::Cubic),
        (0.125, Nonlinearity::Cubic),
        (0.25, Nonlinearity::CubicQuintic { lambda: -0.5 }),
    ] {
        let u0 = wkb_datum(&grid, eps);
        let p = EpsProblem::new(u0, eps, nl, resolved_dt(eps, 1.0, DEFAULT_DT0), 1.0).unwrap();
        let (_, rec) = simulate(&p, &Observers::conserved(50)).unwrap();
        let h0 = rec.hamiltonian[0];
        let drift = rec.hamiltonian.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max) / h0.abs();
        assert!(drift <= 1e-6, "eps {eps}: drift {drift}");
        let h_end = hamiltonian(&simulate(&p, &Observers::default()).unwrap().0, &p);
        assert!((h_end - h0).abs() <= 1e-6 * h0.abs());
    }
}

#[test]
fn two_dimensional_plane_wave() {
    let grid = Grid::unit_torus(2, 16).unwrap();
    let eps = 0.5;
    let c = 0.7;
    let (k1, k2) = (1.0, -2.0);
    let u0 = Field::from_fn(&grid, |x| c * Complex64::from_polar(1.0, k1 * x[0] + k2 * x[1]));
    let t = 0.3;
    let u = final_state(u0, eps, Nonlinearity::Cubic, 1e-2, t);
    // ω = ε|k|²/2 + (c² - 1)/ε
    let omega = eps * (k1 * k1 + k2 * k2) / 2.0 + (c * c - 1.0) / eps;
    let expect = Field::from_fn(&grid, |x| c * Complex64::from_polar(1.0, k1 * x[0] + k2 * x[1] - omega * t));
    assert!(u.sub(&expect).unwrap().max_abs() < 1e-10);
}
