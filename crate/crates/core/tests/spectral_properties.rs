use num_complex::Complex64;
use proptest::prelude::*;
use wkb_lab::spectral::{gradient, laplacian, norm, resample, Field, Grid, NormKind};

fn coefficient_sum_l2(f: &Field) -> f64 {
    let volume = f.grid().volume();
    (volume * f.fourier_coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
}

/// Random trigonometric polynomial `Σ c_k e^{ik·x}` with |k_i| ≤ kmax.
fn trig_poly(grid: &Grid, modes: &[(i64, i64, f64, f64)]) -> Field {
    Field::from_fn(grid, |x| {
        modes
            .iter()
            .map(|&(k1, k2, re, im)| {
                let phase = k1 as f64 * x[0] + if grid.dim() == 2 { k2 as f64 * x[1] } else { 0.0 };
                Complex64::new(re, im) * Complex64::from_polar(1.0, phase)
            })
            .sum()
    })
}

fn modes(kmax: i64) -> impl Strategy<Value = Vec<(i64, i64, f64, f64)>> {
    prop::collection::vec((-kmax..=kmax, -kmax..=kmax, -1.0..1.0f64, -1.0..1.0f64), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(dim in 1usize..=2, log_n in 3u32..=6, samples in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4096)) {
        let n = 1usize << log_n;
        let grid = Grid::unit_torus(dim, n).unwrap();
        let values: Vec<Complex64> = samples.iter().take(grid.len()).map(|&(a, b)| Complex64::new(a, b)).collect();
        let f = Field::complex(&grid, values).unwrap();
        let direct = norm(&f, NormKind::L2);
        prop_assert!((direct - coefficient_sum_l2(&f)).abs() <= 1e-10 * direct.max(1.0));
    }

    #[test]
    fn derivatives_exact_below_half_nyquist(dim in 1usize..=2, m in modes(8)) {
        let grid = Grid::unit_torus(dim, 32).unwrap();
        let f = trig_poly(&grid, &m);
        let grad = gradient(&f);
        let lap = laplacian(&f);
        for axis in 0..dim {
            let expect = Field::from_fn(&grid, |x| {
                m.iter().map(|&(k1, k2, re, im)| {
                    let k = [k1 as f64, k2 as f64];
                    let phase = k1 as f64 * x[0] + if dim == 2 { k2 as f64 * x[1] } else { 0.0 };
                    Complex64::new(0.0, k[axis]) * Complex64::new(re, im) * Complex64::from_polar(1.0, phase)
                }).sum()
            });
            let scale = expect.max_abs().max(1.0);
            prop_assert!(grad[axis].sub(&expect).unwrap().max_abs() <= 1e-10 * scale);
        }
        let expect = Field::from_fn(&grid, |x| {
            m.iter().map(|&(k1, k2, re, im)| {
                let k2d = if dim == 2 { k2 as f64 } else { 0.0 };
                let phase = k1 as f64 * x[0] + if dim == 2 { k2d * x[1] } else { 0.0 };
                -((k1 * k1) as f64 + k2d * k2d) * Complex64::new(re, im) * Complex64::from_polar(1.0, phase)
            }).sum()
        });
        prop_assert!(lap.sub(&expect).unwrap().max_abs() <= 1e-10 * expect.max_abs().max(1.0));
    }

    #[test]
    fn constants_annihilated(dim in 1usize..=2, re in -5.0..5.0f64, im in -5.0..5.0f64) {
        let grid = Grid::unit_torus(dim, 16).unwrap();
        let f = Field::constant(&grid, Complex64::new(re, im));
        prop_assert!(laplacian(&f).max_abs() <= 1e-13);
        for g in gradient(&f) {
            prop_assert!(g.max_abs() <= 1e-13);
        }
    }

    #[test]
    fn resampling_preserves_band_limited_fields(dim in 1usize..=2, m in modes(7)) {
        let coarse = Grid::unit_torus(dim, 16).unwrap();
        let fine = Grid::unit_torus(dim, 64).unwrap();
        let f = trig_poly(&coarse, &m);
        let g = resample(&f, &fine).unwrap();
        let expect = trig_poly(&fine, &m);
        prop_assert!(g.sub(&expect).unwrap().max_abs() <= 1e-12 * expect.max_abs().max(1.0));
    }
}
