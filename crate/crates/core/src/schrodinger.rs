//! Direct solver for the semiclassical nonlinear Schrödinger equation
//!
//! ```text
//! iε∂ₜu + ε²/2 Δu = V u + f(|u|²) u
//! ```
//!
//! on the torus, by Strang splitting: half a kinetic step in Fourier space,
//! a full pointwise phase rotation for `V + f(|u|²)` (exact, since that
//! substep leaves `|u|` unchanged), and another half kinetic step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, Field, Grid};

/// Default `dt₀` in the step rule `dt = min(dt_user, ε·dt₀)`.
pub const DEFAULT_DT0: f64 = 5e-3;

/// The local nonlinearity `f` in `f(|u|²)u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `f(ρ) = ρ - 1`.
    Cubic,
    /// `f(ρ) = ρ² + λρ`.
    CubicQuintic { lambda: f64 },
}

impl Nonlinearity {
    pub fn f(&self, rho: f64) -> f64 {
        match *self {
            Nonlinearity::Cubic => rho - 1.0,
            Nonlinearity::CubicQuintic { lambda } => rho * rho + lambda * rho,
        }
    }

    pub fn df(&self, rho: f64) -> f64 {
        match *self {
            Nonlinearity::Cubic => 1.0,
            Nonlinearity::CubicQuintic { lambda } => 2.0 * rho + lambda,
        }
    }

    /// Potential-energy density `F(ρ)`; `½(ρ-1)²` for the cubic case.
    pub fn energy_density(&self, rho: f64) -> f64 {
        match *self {
            Nonlinearity::Cubic => 0.5 * (rho - 1.0) * (rho - 1.0),
            Nonlinearity::CubicQuintic { lambda } => rho * rho * rho / 3.0 + 0.5 * lambda * rho * rho,
        }
    }
}

/// One ε-dependent initial value problem.
#[derive(Debug, Clone)]
pub struct EpsProblem {
    pub grid: Grid,
    pub epsilon: f64,
    pub nonlinearity: Nonlinearity,
    /// Time-independent real potential; `None` means `V = 0`.
    pub potential: Option<Field>,
    pub u0: Field,
    pub dt: f64,
    pub t_final: f64,
    /// Apply the 2/3 filter after each nonlinear substep.
    pub dealias: bool,
}

impl EpsProblem {
    pub fn new(
        u0: Field,
        epsilon: f64,
        nonlinearity: Nonlinearity,
        dt: f64,
        t_final: f64,
    ) -> Result<Self> {
        let p = Self {
            grid: u0.grid().clone(),
            epsilon,
            nonlinearity,
            potential: None,
            u0,
            dt,
            t_final,
            dealias: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_potential(mut self, v: Field) -> Result<Self> {
        self.potential = Some(v);
        self.validate()?;
        Ok(self)
    }

    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidProblem(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidProblem(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            )));
        }
        if *self.u0.grid() != self.grid {
            return Err(Error::GridMismatch("initial datum is not on the problem grid".into()));
        }
        if !self.u0.is_finite() {
            return Err(Error::InvalidProblem("initial datum is not finite".into()));
        }
        if let Some(v) = &self.potential {
            if *v.grid() != self.grid {
                return Err(Error::GridMismatch("potential is not on the problem grid".into()));
            }
            if !v.is_real() {
                return Err(Error::InvalidProblem("potential must be a real field".into()));
            }
        }
        Ok(())
    }
}

/// Smallest power-of-two resolution whose largest wavenumber exceeds
/// `4·max|∇Φ|/ε`, never below `min_points`.
pub fn resolved_points(max_phase_gradient: f64, epsilon: f64, period: f64, min_points: usize) -> usize {
    let needed = 4.0 * max_phase_gradient / epsilon;
    let k0 = 2.0 * std::f64::consts::PI / period;
    let mut n = min_points.max(8).next_power_of_two();
    while k0 * (n / 2) as f64 <= needed {
        n *= 2;
    }
    n
}

/// Step size rule `min(dt_user, ε·dt₀)`.
pub fn resolved_dt(epsilon: f64, dt_user: f64, dt0: f64) -> f64 {
    dt_user.min(epsilon * dt0)
}

/// Precomputed Strang propagator for a fixed step.
pub struct Propagator<'a> {
    problem: &'a EpsProblem,
    dt: f64,
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
}

impl<'a> Propagator<'a> {
    /// Propagator for step `dt`; negative `dt` steps backwards in time.
    pub fn new(problem: &'a EpsProblem, dt: f64) -> Self {
        let grid = &problem.grid;
        let eps = problem.epsilon;
        let kinetic = |fraction: f64| {
            (0..grid.len())
                .map(|j| Complex64::from_polar(1.0, -eps * grid.k_squared(j) * dt * fraction))
                .collect()
        };
        Self {
            problem,
            dt,
            half_kinetic: kinetic(0.25),
            full_kinetic: kinetic(0.5),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic(&self, values: &mut Vec<Complex64>, multiplier: &[Complex64]) {
        let grid = &self.problem.grid;
        let mut coeffs = grid.forward(values);
        for (c, m) in coeffs.iter_mut().zip(multiplier) {
            *c *= m;
        }
        *values = grid.inverse(coeffs);
    }

    fn dealias_values(&self, values: &mut Vec<Complex64>) {
        if self.problem.dealias {
            let f = Field::complex(&self.problem.grid, std::mem::take(values))
                .expect("sample count preserved");
            *values = spectral::dealias(&f).into_values();
        }
    }

    fn nonlinear_full(&self, values: &mut [Complex64]) {
        let p = self.problem;
        let scale = self.dt / p.epsilon;
        match &p.potential {
            Some(v) => {
                for (u, vv) in values.iter_mut().zip(v.values()) {
                    let w = vv.re + p.nonlinearity.f(u.norm_sqr());
                    *u *= Complex64::from_polar(1.0, -w * scale);
                }
            }
            None => {
                for u in values.iter_mut() {
                    let w = p.nonlinearity.f(u.norm_sqr());
                    *u *= Complex64::from_polar(1.0, -w * scale);
                }
            }
        }
    }

    /// Advances raw samples by one step.
    pub fn step_values(&self, values: &mut Vec<Complex64>) {
        self.advance_values(values, 1);
    }

    /// Advances raw samples by `steps` steps, fusing the adjacent kinetic
    /// half steps of consecutive steps into one transform pair.
    pub fn advance_values(&self, values: &mut Vec<Complex64>, steps: usize) {
        if steps == 0 {
            return;
        }
        self.kinetic(values, &self.half_kinetic);
        for i in 0..steps {
            self.nonlinear_full(values);
            self.dealias_values(values);
            let last = i + 1 == steps;
            self.kinetic(values, if last { &self.half_kinetic } else { &self.full_kinetic });
        }
    }

    /// One step starting at time `t`; `t` is only used for error reporting.
    pub fn step(&self, u: &Field, t: f64) -> Result<Field> {
        let mut values = u.values().to_vec();
        self.step_values(&mut values);
        let out = Field::complex(u.grid(), values)?;
        if !out.is_finite() {
            return Err(Error::NonfiniteField { time: t + self.dt });
        }
        Ok(out)
    }
}

/// One Strang step of size `p.dt` from time `t`.
pub fn strang_step(u: &Field, p: &EpsProblem, t: f64) -> Result<Field> {
    if u.grid() != &p.grid {
        return Err(Error::GridMismatch("field is not on the problem grid".into()));
    }
    Propagator::new(p, p.dt).step(u, t)
}

/// `∫|u|²`.
pub fn mass(u: &Field) -> f64 {
    u.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * u.grid().cell_volume()
}

/// `½‖ε∇u‖² + ∫V|u|² + ∫F(|u|²)`.
pub fn hamiltonian(u: &Field, p: &EpsProblem) -> f64 {
    let grid = u.grid();
    let eps = p.epsilon;
    let coeffs = u.fourier_coefficients();
    // Kinetic term through Parseval: ‖∇u‖² = L^d Σ |k|² |ĉ|².
    let kinetic: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| grid.k_squared(j) * c.norm_sqr())
        .sum::<f64>()
        * grid.volume();
    let mut local = 0.0;
    for (j, v) in u.values().iter().enumerate() {
        let rho = v.norm_sqr();
        let pot = p.potential.as_ref().map_or(0.0, |w| w.values()[j].re);
        local += pot * rho + p.nonlinearity.energy_density(rho);
    }
    0.5 * eps * eps * kinetic + local * grid.cell_volume()
}

/// What to record during [`simulate`].
#[derive(Debug, Clone, Default)]
pub struct Observers {
    /// Record mass/Hamiltonian every `cadence` steps (0 disables).
    pub cadence: usize,
    pub mass: bool,
    pub hamiltonian: bool,
    /// Snapshot times; the step schedule lands on them exactly.
    pub snapshot_times: Vec<f64>,
}

impl Observers {
    pub fn snapshots(times: &[f64]) -> Self {
        Self {
            snapshot_times: times.to_vec(),
            ..Default::default()
        }
    }

    pub fn conserved(cadence: usize) -> Self {
        Self {
            cadence,
            mass: true,
            hamiltonian: true,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulationRecord {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    pub snapshots: Vec<(f64, Field)>,
    pub steps: usize,
}

/// Runs the splitting scheme from 0 to `p.t_final`.
///
/// The interval is cut at every snapshot time; each piece is covered by the
/// fewest equal steps not exceeding `p.dt`.
pub fn simulate(p: &EpsProblem, observers: &Observers) -> Result<(Field, SimulationRecord)> {
    p.validate()?;
    let mut stops: Vec<f64> = observers
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t >= 0.0 && t <= p.t_final)
        .collect();
    stops.push(p.t_final);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut record = SimulationRecord::default();
    let mut u = p.u0.clone();
    let mut t = 0.0;
    let observe = |record: &mut SimulationRecord, t: f64, u: &Field| {
        if observers.mass || observers.hamiltonian {
            record.times.push(t);
            if observers.mass {
                record.mass.push(mass(u));
            }
            if observers.hamiltonian {
                record.hamiltonian.push(hamiltonian(u, p));
            }
        }
    };
    if observers.cadence > 0 {
        observe(&mut record, 0.0, &u);
    }
    let wants_snapshot = |s: f64| observers.snapshot_times.contains(&s);

    for stop in stops {
        let span = stop - t;
        if span > 0.0 {
            let n = (span / p.dt - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let prop = Propagator::new(p, h);
            let mut values = u.into_values();
            let mut done = 0;
            while done < n {
                let chunk = if observers.cadence > 0 {
                    let until_check = observers.cadence - record.steps % observers.cadence;
                    until_check.min(n - done)
                } else {
                    n - done
                };
                prop.advance_values(&mut values, chunk);
                done += chunk;
                record.steps += chunk;
                let now = t + done as f64 * h;
                if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::NonfiniteField { time: now });
                }
                if observers.cadence > 0 && record.steps % observers.cadence == 0 {
                    let snap = Field::complex(&p.grid, values.clone())?;
                    observe(&mut record, now, &snap);
                }
            }
            u = Field::complex(&p.grid, values)?;
            t = stop;
        }
        if wants_snapshot(stop) {
            record.snapshots.push((stop, u.clone()));
        }
    }
    Ok((u, record))
}
