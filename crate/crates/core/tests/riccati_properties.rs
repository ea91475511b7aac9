use nalgebra::DMatrix;
use proptest::prelude::*;
use wkb_lab::eikonal::{
    boundary_modulus, flow_jacobian_det, solve_riccati, QuadraticPotentialSpec, RiccatiExample,
};

fn symmetric(dim: usize, entries: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |i, j| entries[i * dim + j]);
    (&m + m.transpose()) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetry_is_preserved(
        dim in 1usize..=4,
        m in prop::collection::vec(-1.0..1.0f64, 16),
        q in prop::collection::vec(-0.5..0.5f64, 16),
    ) {
        let spec = QuadraticPotentialSpec::constant(symmetric(dim, &m)).unwrap();
        let traj = solve_riccati(&spec, &symmetric(dim, &q), 0.5, 1e-2).unwrap();
        for sample in traj.q_samples() {
            let asym = (sample - sample.transpose()).amax();
            prop_assert!(asym <= 1e-10);
        }
    }

    #[test]
    fn time_dependent_symmetry(dim in 1usize..=3, m in prop::collection::vec(-1.0..1.0f64, 9)) {
        let base = symmetric(dim, &m);
        let spec = QuadraticPotentialSpec::time_dependent(dim, move |t| &base * t.cos());
        let traj = solve_riccati(&spec, &DMatrix::zeros(dim, dim), 0.5, 1e-2).unwrap();
        for sample in traj.q_samples() {
            prop_assert!((sample - sample.transpose()).amax() <= 1e-10);
        }
    }
}

#[test]
fn fourth_order_convergence() {
    for ex in [
        RiccatiExample::Harmonic { omega: 1.0 },
        RiccatiExample::Repulsive { omega: 1.0 },
        RiccatiExample::Focusing,
        RiccatiExample::Defocusing,
    ] {
        let t_end = 0.8;
        let err = |dt: f64| {
            let traj = ex.solve(1, Some(t_end), dt).unwrap();
            let q = traj.q_samples().last().unwrap()[(0, 0)];
            (q - ex.q_exact(t_end)).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((12.0..=20.0).contains(&ratio), "{}: ratio {ratio}", ex.name());
    }
}

#[test]
fn jacobian_matches_modulus() {
    for dim in [1, 2, 3] {
        for ex in [
            RiccatiExample::Harmonic { omega: 1.3 },
            RiccatiExample::Repulsive { omega: 0.7 },
            RiccatiExample::Focusing,
            RiccatiExample::Defocusing,
        ] {
            let traj = ex.solve(dim, None, 1e-3).unwrap();
            for &t in traj.times().iter().step_by(97) {
                let det = flow_jacobian_det(&traj, t).unwrap();
                let m = boundary_modulus(&traj, t).unwrap();
                assert!(det > 0.0);
                assert!((det * m * m - 1.0).abs() < 1e-8, "{} dim {dim} t {t}", ex.name());
            }
        }
    }
}
