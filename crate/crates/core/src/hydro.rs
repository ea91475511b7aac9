//! Quadratic observables, the modulated energy and hydrodynamic-limit tracking.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase_amplitude::GrenierTrajectory;
use crate::schrodinger::{simulate, EpsProblem, Observers};
use crate::spectral::{gradient, norm, Field, NormKind};

#[derive(Debug, Clone)]
pub struct HydroObservables {
    /// `|u|²`.
    pub density: Field,
    /// `ε·Im(ū ∂ⱼu)` per axis.
    pub momentum: Vec<Field>,
}

pub fn observables(u: &Field, epsilon: f64) -> HydroObservables {
    let density = u.abs_squared();
    let momentum = gradient(u)
        .iter()
        .map(|g| {
            let values = u
                .values()
                .iter()
                .zip(g.values())
                .map(|(u, g)| epsilon * (u.conj() * g).im)
                .collect();
            Field::real(u.grid(), values).expect("sample count preserved")
        })
        .collect();
    HydroObservables { density, momentum }
}

/// `ε⁻² ∫ |ε∇u − iu∇φ|² + (|u|² − ρ)²`.
pub fn modulated_energy(u: &Field, rho: &Field, phi: &Field, epsilon: f64) -> Result<f64> {
    u.check_same_grid(rho)?;
    u.check_same_grid(phi)?;
    let grad_u = gradient(u);
    let grad_phi = gradient(phi);
    let mut total = 0.0;
    for j in 0..u.grid().len() {
        let uv = u.values()[j];
        for (gu, gp) in grad_u.iter().zip(&grad_phi) {
            total += (gu.values()[j] * epsilon - Complex64::i() * uv * gp.values()[j].re).norm_sqr();
        }
        total += (uv.norm_sqr() - rho.values()[j].re).powi(2);
    }
    Ok(total * u.grid().cell_volume() / (epsilon * epsilon))
}

#[derive(Debug, Clone, Default)]
pub struct ModulatedEnergyRecord {
    pub times: Vec<f64>,
    pub e_eps: Vec<f64>,
    /// `‖|u|² − ρ‖_{L²}`.
    pub density_err_l2: Vec<f64>,
    /// `‖ε Im(ū∇u) − ρ∇φ‖_{L¹}`.
    pub momentum_err_l1: Vec<f64>,
}

impl ModulatedEnergyRecord {
    pub fn max_density_err(&self) -> f64 {
        self.density_err_l2.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_momentum_err(&self) -> f64 {
        self.momentum_err_l1.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E_eps,density_err_L2,momentum_err_L1\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                self.times[i], self.e_eps[i], self.density_err_l2[i], self.momentum_err_l1[i]
            );
        }
        out
    }
}

/// Runs the splitting solver and compares it with a stored limit solution at
/// every `stride`-th sample of that solution (and its final one).
pub fn track_hydro_limit(
    p: &EpsProblem,
    euler: &GrenierTrajectory,
    stride: usize,
) -> Result<ModulatedEnergyRecord> {
    if euler.grid() != &p.grid {
        return Err(Error::GridMismatch("limit trajectory is not on the problem grid".into()));
    }
    let stride = stride.max(1);
    let last = euler.states.len() - 1;
    let mut indices: Vec<usize> = (0..=last)
        .step_by(stride)
        .filter(|i| euler.states[*i].t <= p.t_final * (1.0 + 1e-12))
        .collect();
    if euler.states[last].t <= p.t_final * (1.0 + 1e-12) && indices.last() != Some(&last) {
        indices.push(last);
    }
    let times: Vec<f64> = indices.iter().map(|i| euler.states[*i].t).collect();
    let mut run = p.clone();
    run.t_final = *times.last().unwrap_or(&0.0);
    let (_, sim) = simulate(&run, &Observers::snapshots(&times))?;

    let eps = p.epsilon;
    let mut record = ModulatedEnergyRecord::default();
    for (&i, (t, u)) in indices.iter().zip(&sim.snapshots) {
        let state = &euler.states[i];
        let rho = state.a.abs_squared();
        let obs = observables(u, eps);
        let grad_phi = gradient(&state.phi);
        let density_err = norm(&obs.density.sub(&rho)?, NormKind::L2);
        let mut momentum_err = 0.0;
        for j in 0..u.grid().len() {
            let r = rho.values()[j].re;
            let sq: f64 = obs
                .momentum
                .iter()
                .zip(&grad_phi)
                .map(|(m, g)| (m.values()[j].re - r * g.values()[j].re).powi(2))
                .sum();
            momentum_err += sq.sqrt();
        }
        record.times.push(*t);
        record.e_eps.push(modulated_energy(u, &rho, &state.phi, eps)?);
        record.density_err_l2.push(density_err);
        record.momentum_err_l1.push(momentum_err * u.grid().cell_volume());
    }
    Ok(record)
}

/// Smallest `C ≥ 0` with `E(t) ≤ 2(E(0)+1)·e^{Ct}` on the record.
pub fn fit_gronwall_rate(record: &ModulatedEnergyRecord) -> Result<f64> {
    let (Some(&e0), true) = (record.e_eps.first(), record.times.len() > 1) else {
        return Err(Error::DegenerateFit("need at least two energy samples".into()));
    };
    let base = 2.0 * (e0 + 1.0);
    Ok(record
        .times
        .iter()
        .zip(&record.e_eps)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, e)| (e / base).ln() / t)
        .fold(0.0, f64::max))
}

pub fn satisfies_gronwall(record: &ModulatedEnergyRecord, rate: f64) -> bool {
    let Some(&e0) = record.e_eps.first() else {
        return true;
    };
    let base = 2.0 * (e0 + 1.0);
    record
        .times
        .iter()
        .zip(&record.e_eps)
        .all(|(t, e)| *e <= base * (rate * t).exp() * (1.0 + 1e-12))
}
