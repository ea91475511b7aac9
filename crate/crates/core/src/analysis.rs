//! Error measurement, convergence-slope fits, the spectral wave solver and
//! the instability experiment.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase_amplitude::reconstruct;
use crate::schrodinger::{resolved_dt, simulate, EpsProblem, Nonlinearity, Observers, DEFAULT_DT0};
use crate::spectral::{norm, Field, FieldKind, NormKind};

/// Exact mode-wise solution of `(∂ₜ² - Δ)θ = s` with time-independent `s`.
pub fn wave_solve(theta0: &Field, theta_dot0: &Field, source: &Field, t: f64) -> Result<Field> {
    theta0.check_same_grid(theta_dot0)?;
    theta0.check_same_grid(source)?;
    let theta0 = theta0.to_real()?;
    let grid = theta0.grid().clone();
    if t == 0.0 {
        return Ok(theta0);
    }
    let c0 = theta0.fourier_coefficients();
    let c1 = theta_dot0.to_real()?.fourier_coefficients();
    let cs = source.to_real()?.fourier_coefficients();
    let coeffs = (0..grid.len())
        .map(|j| {
            let k2 = grid.k_squared(j);
            if k2 == 0.0 {
                c0[j] + c1[j] * t + cs[j] * (0.5 * t * t)
            } else {
                let k = k2.sqrt();
                let (s, c) = (k * t).sin_cos();
                c0[j] * c + c1[j] * (s / k) + cs[j] * ((1.0 - c) / k2)
            }
        })
        .collect();
    Ok(Field::from_coefficients(&grid, coeffs, FieldKind::Real))
}

/// `norm(u - u_ref, kind)` for each requested kind.
pub fn error_norms(u: &Field, u_ref: &Field, kinds: &[NormKind]) -> Result<Vec<f64>> {
    let diff = u.sub(u_ref)?;
    Ok(kinds.iter().map(|k| norm(&diff, *k)).collect())
}

/// Least-squares line through `(ln ε, ln err)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

pub fn fit_slope(epsilons: &[f64], errors: &[f64]) -> Result<SlopeFit> {
    if epsilons.len() != errors.len() {
        return Err(Error::DegenerateFit(format!(
            "{} abscissae but {} errors",
            epsilons.len(),
            errors.len()
        )));
    }
    if epsilons.len() < 3 {
        return Err(Error::DegenerateFit("at least three points are required".into()));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::DegenerateFit(format!("abscissa {e} is not positive")));
    }
    if errors.contains(&0.0) {
        return Err(Error::DegenerateFit("an error is exactly zero".into()));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::DegenerateFit(format!("error {e} is not positive")));
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
    })
}

/// Errors over an ε sweep with a slope fit per norm.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    pub norms: Vec<NormKind>,
    /// `errors[i][j]` is the error at `epsilons[i]` in `norms[j]`.
    pub errors: Vec<Vec<f64>>,
    pub fits: Vec<SlopeFit>,
}

impl ConvergenceReport {
    pub fn new(epsilons: Vec<f64>, norms: Vec<NormKind>, errors: Vec<Vec<f64>>) -> Result<Self> {
        if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidProblem("epsilons must be strictly decreasing".into()));
        }
        if errors.len() != epsilons.len() || errors.iter().any(|row| row.len() != norms.len()) {
            return Err(Error::InvalidProblem("error table does not match epsilons and norms".into()));
        }
        let fits = (0..norms.len())
            .map(|j| {
                let column: Vec<f64> = errors.iter().map(|row| row[j]).collect();
                fit_slope(&epsilons, &column)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            epsilons,
            norms,
            errors,
            fits,
        })
    }

    /// Fit of the first norm.
    pub fn slope(&self) -> SlopeFit {
        self.fits[0]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.errors.iter().map(|row| row[j]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon");
        for k in &self.norms {
            let _ = write!(out, ",{}", k.label());
        }
        out.push('\n');
        for (eps, row) in self.epsilons.iter().zip(&self.errors) {
            let _ = write!(out, "{eps:.17e}");
            for e in row {
                let _ = write!(out, ",{e:.17e}");
            }
            out.push('\n');
        }
        out.push_str("slope");
        for f in &self.fits {
            let _ = write!(out, ",{:.17e}", f.slope);
        }
        out.push('\n');
        out.push_str("residual");
        for f in &self.fits {
            let _ = write!(out, ",{:.17e}", f.residual);
        }
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstabilityRecord {
    pub epsilon: f64,
    /// Perturbation size `δ = ε^α`.
    pub delta: f64,
    /// Observation time `ε/δ`.
    pub t_eps: f64,
    /// `δ·‖a1‖∞`.
    pub initial_distance: f64,
    /// `‖u - v‖∞` at `t_eps`.
    pub distance: f64,
    pub ratio: f64,
    /// `‖v - u·exp(-2itδ Re(ā0 a1)/ε)‖∞` at `t_eps`.
    pub predicted_residual: f64,
}

#[derive(Debug, Clone)]
pub struct InstabilityStudy {
    pub alpha: f64,
    /// `sup |Re(ā0 a1)|`; zero means the phase-shift mechanism is absent.
    pub coupling: f64,
    pub records: Vec<InstabilityRecord>,
}

impl InstabilityStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epsilon,delta,t_eps,initial_distance,distance,ratio,predicted_residual\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.epsilon, r.delta, r.t_eps, r.initial_distance, r.distance, r.ratio, r.predicted_residual
            );
        }
        out
    }
}

/// Compares solutions from `a0·e^{iφ0/ε}` and `(a0 + ε^α a1)·e^{iφ0/ε}` at
/// `t = ε^{1-α}` for each ε, in parallel.
pub fn instability_experiment(
    a0: &Field,
    a1: &Field,
    phi0: &Field,
    nl: Nonlinearity,
    alpha: f64,
    epsilons: &[f64],
    dt_user: f64,
) -> Result<InstabilityStudy> {
    a0.check_same_grid(a1)?;
    a0.check_same_grid(phi0)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProblem(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let coupling = a0
        .values()
        .iter()
        .zip(a1.values())
        .map(|(a, b)| (a.conj() * b).re.abs())
        .fold(0.0, f64::max);
    let a1_sup = a1.max_abs();

    let records = epsilons
        .par_iter()
        .map(|&eps| -> Result<InstabilityRecord> {
            let delta = eps.powf(alpha);
            let t_eps = eps / delta;
            let dt = resolved_dt(eps, dt_user, DEFAULT_DT0);
            let perturbed = a0.add(&a1.scale(delta))?;
            let run = |amp: &Field| -> Result<Field> {
                let u0 = reconstruct(amp, phi0, eps)?;
                let p = EpsProblem::new(u0, eps, nl, dt, t_eps)?;
                Ok(simulate(&p, &Observers::default())?.0)
            };
            let u = run(a0)?;
            let v = run(&perturbed)?;
            let distance = v.sub(&u)?.max_abs();
            let predicted = u
                .values()
                .iter()
                .zip(a0.values().iter().zip(a1.values()))
                .map(|(u, (a, b))| {
                    u * Complex64::from_polar(1.0, -2.0 * t_eps * delta * (a.conj() * b).re / eps)
                })
                .collect();
            let predicted = Field::complex(u.grid(), predicted)?;
            let predicted_residual = v.sub(&predicted)?.max_abs();
            let initial_distance = delta * a1_sup;
            Ok(InstabilityRecord {
                epsilon: eps,
                delta,
                t_eps,
                initial_distance,
                distance,
                ratio: distance / initial_distance,
                predicted_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InstabilityStudy {
        alpha,
        coupling,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gradient, Grid};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sup_diff(a: &Field, b: &Field) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn single_mode_wave() {
        let grid = Grid::unit_torus(1, 32).unwrap();
        let theta0 = Field::real_from_fn(&grid, |x| x[0].cos());
        let zero = Field::zeros(&grid);
        let t = 0.7;
        let theta = wave_solve(&theta0, &zero, &zero, t).unwrap();
        let expect = Field::real_from_fn(&grid, |x| x[0].cos() * t.cos());
        assert!(sup_diff(&theta, &expect) < 1e-14);
        assert!(theta.is_real());
        let same = wave_solve(&theta0, &zero, &zero, 0.0).unwrap();
        assert_eq!(sup_diff(&same, &theta0), 0.0);
    }

    #[test]
    fn constant_source_response() {
        let grid = Grid::unit_torus(1, 32).unwrap();
        let zero = Field::zeros(&grid);
        let source = Field::real_from_fn(&grid, |x| 0.5 + (3.0 * x[0]).sin());
        let t = 1.3;
        let theta = wave_solve(&zero, &zero, &source, t).unwrap();
        let expect = Field::real_from_fn(&grid, |x| {
            0.5 * 0.5 * t * t + (3.0 * x[0]).sin() * (1.0 - (3.0 * t).cos()) / 9.0
        });
        assert!(sup_diff(&theta, &expect) < 1e-14);
    }

    #[test]
    fn wave_energy_is_conserved() {
        let grid = Grid::unit_torus(1, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let coeffs: Vec<(f64, f64)> = (0..10).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let theta0 = Field::real_from_fn(&grid, |x| {
            coeffs.iter().enumerate().map(|(k, (c, _))| c * (k as f64 * x[0]).cos()).sum()
        });
        let theta1 = Field::real_from_fn(&grid, |x| {
            coeffs.iter().enumerate().map(|(k, (_, s))| s * (k as f64 * x[0]).sin()).sum()
        });
        let zero = Field::zeros(&grid);
        let energy = |t: f64| {
            let h = 1e-4;
            let th = wave_solve(&theta0, &theta1, &zero, t).unwrap();
            // time derivative from the closed form, by symmetric difference of the exact solution
            let tp = wave_solve(&theta0, &theta1, &zero, t + h).unwrap();
            let tm = wave_solve(&theta0, &theta1, &zero, t - h).unwrap();
            let dt = tp.sub(&tm).unwrap().scale(0.5 / h);
            let g = &gradient(&th)[0];
            norm(&dt, NormKind::L2).powi(2) + norm(g, NormKind::L2).powi(2)
        };
        let e0 = energy(0.0);
        for t in [0.5, 1.7, 4.0] {
            assert_abs_diff_eq!(energy(t), e0, epsilon = 1e-6 * e0);
        }
    }

    #[test]
    fn wave_energy_modewise_exact() {
        // |θ̂'|² + |k|²|θ̂|² is constant for each mode
        let grid = Grid::unit_torus(1, 32).unwrap();
        let theta0 = Field::real_from_fn(&grid, |x| (2.0 * x[0]).cos() + 0.3 * x[0].sin());
        let theta1 = Field::real_from_fn(&grid, |x| 0.5 * (2.0 * x[0]).sin() - x[0].cos());
        let zero = Field::zeros(&grid);
        let mode_energy = |t: f64| -> f64 {
            let c = wave_solve(&theta0, &theta1, &zero, t).unwrap().fourier_coefficients();
            // analytic time derivative: θ̂' = -|k| θ̂₀ sin + θ̂̇₀ cos
            let c0 = theta0.fourier_coefficients();
            let c1 = theta1.fourier_coefficients();
            (0..grid.len())
                .map(|j| {
                    let k2 = grid.k_squared(j);
                    let k = k2.sqrt();
                    let d = -c0[j] * (k * (k * t).sin()) + c1[j] * (k * t).cos();
                    d.norm_sqr() + k2 * c[j].norm_sqr()
                })
                .sum()
        };
        let e0 = mode_energy(0.0);
        for t in [0.3, 2.0, 9.0] {
            assert_abs_diff_eq!(mode_energy(t), e0, epsilon = 1e-10 * e0.max(1.0));
        }
    }

    #[test]
    fn norms_of_differences() {
        let grid = Grid::unit_torus(1, 32).unwrap();
        let u = Field::from_fn(&grid, |x| Complex64::new(x[0].sin(), 0.3));
        let kinds = [NormKind::L2, NormKind::Linf, NormKind::Hs(1.0)];
        assert!(error_norms(&u, &u, &kinds).unwrap().iter().all(|e| *e == 0.0));
        let c = Complex64::new(0.3, -0.4);
        let shifted = u.map(|v| v + c);
        let e = error_norms(&shifted, &u, &[NormKind::Linf, NormKind::L2]).unwrap();
        assert_abs_diff_eq!(e[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 0.5 * (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-13);
        let other = Grid::unit_torus(1, 64).unwrap();
        assert!(matches!(
            error_norms(&u, &Field::zeros(&other), &kinds),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn triangle_inequality() {
        let grid = Grid::unit_torus(1, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut random = || {
                Field::complex(
                    &grid,
                    (0..grid.len())
                        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect(),
                )
                .unwrap()
            };
            let (a, b, c) = (random(), random(), random());
            for k in [NormKind::L2, NormKind::Linf, NormKind::Hs(1.5)] {
                let ac = error_norms(&a, &c, &[k]).unwrap()[0];
                let ab = error_norms(&a, &b, &[k]).unwrap()[0];
                let bc = error_norms(&b, &c, &[k]).unwrap()[0];
                assert!(ac <= ab + bc + 1e-12);
            }
        }
    }

    #[test]
    fn slopes_of_power_laws() {
        let eps: Vec<f64> = (3..=7).map(|j| 2f64.powi(-j)).collect();
        let linear = fit_slope(&eps, &eps).unwrap();
        assert!((linear.slope - 1.0).abs() < 1e-12);
        assert!(linear.residual < 1e-12);
        let sq: Vec<f64> = eps.iter().map(|e| e * e).collect();
        assert!((fit_slope(&eps, &sq).unwrap().slope - 2.0).abs() < 1e-12);
        let mixed: Vec<f64> = eps.iter().map(|e| 3.0 * e + 0.01 * e * e).collect();
        let s = fit_slope(&eps, &mixed).unwrap().slope;
        assert!((0.98..=1.02).contains(&s));
    }

    #[test]
    fn degenerate_fits() {
        let eps = [0.5, 0.25, 0.125];
        assert!(matches!(fit_slope(&eps, &[1.0, 0.0, 1.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_slope(&eps[..2], &[1.0, 0.5]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_slope(&[0.1, 0.1, 0.1], &[1.0, 2.0, 3.0]), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn report_csv_layout() {
        let eps = vec![0.5, 0.25, 0.125];
        let errors = eps.iter().map(|e| vec![*e, e * e]).collect();
        let report = ConvergenceReport::new(eps.clone(), vec![NormKind::Linf, NormKind::L2], errors).unwrap();
        assert!((report.slope().slope - 1.0).abs() < 1e-12);
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epsilon,Linf,L2");
        assert_eq!(lines.len(), 6);
        assert!(lines[4].starts_with("slope,"));
        assert!(lines[5].starts_with("residual,"));
        assert!(ConvergenceReport::new(vec![0.25, 0.5, 0.125], vec![NormKind::L2], vec![vec![1.0]; 3]).is_err());
    }

    #[test]
    fn instability_rejects_bad_alpha() {
        let grid = Grid::unit_torus(1, 16).unwrap();
        let one = Field::real_constant(&grid, 1.0);
        let zero = Field::zeros(&grid);
        for alpha in [0.0, 1.0, -0.5] {
            assert!(instability_experiment(&one, &one, &zero, Nonlinearity::Cubic, alpha, &[0.1], 1e-3).is_err());
        }
    }

    #[test]
    fn instability_constant_data_matches_phase_prediction() {
        // Constant data: u and v are exact plane waves, so the predicted
        // factor differs only by the quadratic term in δ.
        let grid = Grid::unit_torus(1, 16).unwrap();
        let one = Field::real_constant(&grid, 1.0);
        let a1 = Field::real_constant(&grid, 0.5);
        let zero = Field::zeros(&grid);
        let study = instability_experiment(&one, &a1, &zero, Nonlinearity::Cubic, 0.5, &[0.04, 0.01], 1e-3).unwrap();
        assert_eq!(study.records.len(), 2);
        assert_abs_diff_eq!(study.coupling, 0.5);
        for r in &study.records {
            let d = r.delta;
            // exact: v = (1+δ/2)·exp(-i t ((1+δ/2)² - 1)/ε), u ≡ 1
            let expect = ((1.0 + 0.5 * d) * Complex64::from_polar(1.0, -r.t_eps * ((1.0 + 0.5 * d).powi(2) - 1.0) / r.epsilon)
                - 1.0)
                .norm();
            assert_abs_diff_eq!(r.distance, expect, epsilon = 1e-9);
            assert!(r.predicted_residual < r.distance);
        }
    }
}
