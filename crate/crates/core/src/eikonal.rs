//! Quadratic eikonal phases.
//!
//! For a quadratic potential `V(t,x) = xᵀM(t)x` and initial phase `xᵀQ₀x`
//! the Hamilton–Jacobi equation `∂ₜφ + ½|∇φ|² + V = 0` keeps the phase
//! quadratic, `φ(t,x) = xᵀQ(t)x`, with `Q` solving the matrix Riccati ODE
//!
//! ```text
//! Q̇ + 2Q² + M(t) = 0,   Q(0) = Q₀.
//! ```
//!
//! Everything here lives on ℝⁿ and is independent of the PDE grid.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Entries of `Q` beyond this magnitude mark a caustic.
pub const CAUSTIC_THRESHOLD: f64 = 1e6;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum PotentialMatrix {
    Constant(DMatrix<f64>),
    TimeDependent(MatrixFn),
}

/// The quadratic part `M(t)` of the potential.
#[derive(Clone)]
pub struct QuadraticPotentialSpec {
    dim: usize,
    matrix: PotentialMatrix,
}

impl fmt::Debug for QuadraticPotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.matrix {
            PotentialMatrix::Constant(m) => f
                .debug_struct("QuadraticPotentialSpec")
                .field("dim", &self.dim)
                .field("M", m)
                .finish(),
            PotentialMatrix::TimeDependent(_) => f
                .debug_struct("QuadraticPotentialSpec")
                .field("dim", &self.dim)
                .field("M", &"<fn>")
                .finish(),
        }
    }
}

impl QuadraticPotentialSpec {
    /// Constant symmetric `M`.
    pub fn constant(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let asym = asymmetry(&m);
        if asym > SYMMETRY_TOLERANCE * (1.0 + m.amax()) {
            return Err(Error::NonsymmetricPotential { t: 0.0, asymmetry: asym });
        }
        Ok(Self {
            dim: m.nrows(),
            matrix: PotentialMatrix::Constant(m),
        })
    }

    /// Time-dependent `M(t)`; symmetry is checked at every evaluation.
    pub fn time_dependent(
        dim: usize,
        m: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            matrix: PotentialMatrix::TimeDependent(Arc::new(m)),
        }
    }

    /// Isotropic harmonic well `ω²|x|²/2`.
    pub fn harmonic(dim: usize, omega: f64) -> Self {
        Self::isotropic(dim, 0.5 * omega * omega)
    }

    /// Isotropic repulsive potential `-ω²|x|²/2`.
    pub fn repulsive(dim: usize, omega: f64) -> Self {
        Self::isotropic(dim, -0.5 * omega * omega)
    }

    pub fn free(dim: usize) -> Self {
        Self::isotropic(dim, 0.0)
    }

    fn isotropic(dim: usize, c: f64) -> Self {
        Self {
            dim,
            matrix: PotentialMatrix::Constant(DMatrix::identity(dim, dim) * c),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix_at(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.matrix {
            PotentialMatrix::Constant(m) => Ok(m.clone()),
            PotentialMatrix::TimeDependent(f) => {
                let m = f(t);
                if m.nrows() != self.dim || m.ncols() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: m.nrows(),
                    });
                }
                let asym = asymmetry(&m);
                if asym > SYMMETRY_TOLERANCE * (1.0 + m.amax()) {
                    return Err(Error::NonsymmetricPotential { t, asymmetry: asym });
                }
                Ok(m)
            }
        }
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Sampled solution of the Riccati equation with its validity horizon.
#[derive(Debug, Clone)]
pub struct RiccatiTrajectory {
    q0: DMatrix<f64>,
    times: Vec<f64>,
    q: Vec<DMatrix<f64>>,
    q_dot: Vec<DMatrix<f64>>,
    trace_integral: Vec<f64>,
    horizon: f64,
    caustic_time: Option<f64>,
}

impl RiccatiTrajectory {
    pub fn q0(&self) -> &DMatrix<f64> {
        &self.q0
    }

    pub fn dim(&self) -> usize {
        self.q0.nrows()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn q_samples(&self) -> &[DMatrix<f64>] {
        &self.q
    }

    /// Cumulative `∫₀ᵗ Tr Q` at each sample.
    pub fn trace_integral(&self) -> &[f64] {
        &self.trace_integral
    }

    /// Largest time at which the trajectory is valid.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn caustic_detected(&self) -> bool {
        self.caustic_time.is_some()
    }

    pub fn caustic_time(&self) -> Option<f64> {
        self.caustic_time
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-14)) {
            return Err(Error::BeyondHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Sample interval containing `t` and the normalised position in it.
    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.times.len() - 1;
        if last == 0 {
            return (0, 0.0);
        }
        let i = match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => i.min(last - 1),
            Err(i) => i.saturating_sub(1).min(last - 1),
        };
        let h = self.times[i + 1] - self.times[i];
        let s = ((t - self.times[i]) / h).clamp(0.0, 1.0);
        (i, s)
    }

    /// `Q(t)` by cubic Hermite interpolation between samples.
    pub fn q_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.check_time(t)?;
        let (i, s) = self.locate(t);
        if self.times.len() == 1 {
            return Ok(self.q[0].clone());
        }
        let h = self.times[i + 1] - self.times[i];
        let [h00, h10, h01, h11] = hermite_basis(s);
        let q = &self.q[i] * h00
            + &self.q_dot[i] * (h10 * h)
            + &self.q[i + 1] * h01
            + &self.q_dot[i + 1] * (h11 * h);
        Ok(symmetrize(q))
    }

    /// `∫₀ᵗ Tr Q(τ) dτ`, interpolated with the same Hermite scheme.
    pub fn trace_integral_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.times.len() == 1 {
            return Ok(0.0);
        }
        let (i, s) = self.locate(t);
        let h = self.times[i + 1] - self.times[i];
        let [h00, h10, h01, h11] = hermite_basis(s);
        Ok(h00 * self.trace_integral[i]
            + h10 * h * self.q[i].trace()
            + h01 * self.trace_integral[i + 1]
            + h11 * h * self.q[i + 1].trace())
    }
}

fn hermite_basis(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    ]
}

fn riccati_rhs(spec: &QuadraticPotentialSpec, t: f64, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = spec.matrix_at(t)?;
    Ok(symmetrize(-(q * q) * 2.0 - m))
}

/// Integrates `Q̇ = -2Q² - M(t)` with classical RK4, stopping at a caustic.
pub fn solve_riccati(
    spec: &QuadraticPotentialSpec,
    q0: &DMatrix<f64>,
    t_max: f64,
    dt: f64,
) -> Result<RiccatiTrajectory> {
    if !(dt > 0.0 && t_max > 0.0) || !dt.is_finite() || !t_max.is_finite() {
        return Err(Error::NonpositiveStep { dt, t_max });
    }
    if q0.nrows() != spec.dim() || q0.ncols() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: q0.nrows(),
        });
    }
    let asym = asymmetry(q0);
    if asym > SYMMETRY_TOLERANCE * (1.0 + q0.amax()) {
        return Err(Error::NonsymmetricQ0 { asymmetry: asym });
    }

    let q_init = symmetrize(q0.clone());
    let mut times = vec![0.0];
    let mut q_dot = vec![riccati_rhs(spec, 0.0, &q_init)?];
    let mut q = vec![q_init];
    let mut trace_integral = vec![0.0];
    let mut caustic_time = None;

    let steps = (t_max / dt - 1e-9).ceil().max(1.0) as usize;
    for n in 0..steps {
        let t = n as f64 * dt;
        let h = if n + 1 == steps { t_max - t } else { dt };
        let y = q.last().unwrap();
        let s = *trace_integral.last().unwrap();

        let k1 = q_dot.last().unwrap().clone();
        let y2 = symmetrize(y + &k1 * (0.5 * h));
        let k2 = riccati_rhs(spec, t + 0.5 * h, &y2)?;
        let y3 = symmetrize(y + &k2 * (0.5 * h));
        let k3 = riccati_rhs(spec, t + 0.5 * h, &y3)?;
        let y4 = symmetrize(y + &k3 * h);
        let k4 = riccati_rhs(spec, t + h, &y4)?;

        let next = symmetrize(y + (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (h / 6.0));
        let next_s = s + h / 6.0
            * (y.trace() + 2.0 * y2.trace() + 2.0 * y3.trace() + y4.trace());
        let t_next = t + h;

        let blown = next.iter().any(|v| !v.is_finite() || v.abs() > CAUSTIC_THRESHOLD);
        if blown {
            caustic_time = Some(t_next);
            break;
        }
        let rate = riccati_rhs(spec, t_next, &next)?;
        times.push(t_next);
        q.push(next);
        q_dot.push(rate);
        trace_integral.push(next_s);
    }

    let horizon = *times.last().unwrap();
    Ok(RiccatiTrajectory {
        q0: q0.clone(),
        times,
        q,
        q_dot,
        trace_integral,
        horizon,
        caustic_time,
    })
}

/// `φ_eik(t,x) = xᵀQ(t)x`.
pub fn eikonal_phase(traj: &RiccatiTrajectory, t: f64, x: &[f64]) -> Result<f64> {
    if x.len() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            got: x.len(),
        });
    }
    let q = traj.q_at(t)?;
    let v = DVector::from_column_slice(x);
    Ok(v.dot(&(&q * &v)))
}

/// Jacobian `∂x/∂y` of the characteristic flow `ẋ = ∇φ_eik = 2Q(t)x`.
///
/// The flow is linear in `y`, so the Jacobian is the fundamental matrix of
/// `J̇ = 2Q(t)J`, integrated with RK4 on the trajectory's sample intervals
/// using dense output at the stage times.
pub fn flow_matrix(traj: &RiccatiTrajectory, t: f64) -> Result<DMatrix<f64>> {
    traj.check_time(t)?;
    let dim = traj.dim();
    let mut j = DMatrix::<f64>::identity(dim, dim);
    let mut tau = 0.0;
    for w in traj.times.windows(2) {
        if tau >= t {
            break;
        }
        let end = w[1].min(t);
        let h = end - tau;
        if h <= 0.0 {
            continue;
        }
        let q_a = traj.q_at(tau)?;
        let q_m = traj.q_at(tau + 0.5 * h)?;
        let q_b = traj.q_at(end)?;
        let k1 = &q_a * &j * 2.0;
        let k2 = &q_m * (&j + &k1 * (0.5 * h)) * 2.0;
        let k3 = &q_m * (&j + &k2 * (0.5 * h)) * 2.0;
        let k4 = &q_b * (&j + &k3 * h) * 2.0;
        j += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        tau = end;
    }
    Ok(j)
}

/// Position at time `t` of the characteristic starting at `y`.
pub fn characteristic_flow(traj: &RiccatiTrajectory, y: &[f64], t: f64) -> Result<Vec<f64>> {
    if y.len() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            got: y.len(),
        });
    }
    let j = flow_matrix(traj, t)?;
    let x = j * DVector::from_column_slice(y);
    Ok(x.iter().copied().collect())
}

/// `det(∂x/∂y)` of the characteristic flow.
pub fn flow_jacobian_det(traj: &RiccatiTrajectory, t: f64) -> Result<f64> {
    Ok(flow_matrix(traj, t)?.determinant())
}

/// Limiting modulus at infinity, `exp(-∫₀ᵗ Tr Q)`.
pub fn boundary_modulus(traj: &RiccatiTrajectory, t: f64) -> Result<f64> {
    Ok((-traj.trace_integral_at(t)?).exp())
}

/// Closed-form isotropic cases: `Q(t) = q(t)·I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiccatiExample {
    /// `V = ω²|x|²/2`, `Q₀ = 0`.
    Harmonic { omega: f64 },
    /// `V = -ω²|x|²/2`, `Q₀ = 0`.
    Repulsive { omega: f64 },
    /// `V = 0`, `Q₀ = -I/2`.
    Focusing,
    /// `V = 0`, `Q₀ = I/2`.
    Defocusing,
    /// `V = 0`, `Q₀ = 0`.
    Free,
}

impl RiccatiExample {
    pub fn name(&self) -> &'static str {
        match self {
            RiccatiExample::Harmonic { .. } => "harmonic",
            RiccatiExample::Repulsive { .. } => "repulsive",
            RiccatiExample::Focusing => "focusing",
            RiccatiExample::Defocusing => "defocusing",
            RiccatiExample::Free => "free",
        }
    }

    pub fn from_name(name: &str, omega: f64) -> Option<Self> {
        match name {
            "harmonic" => Some(RiccatiExample::Harmonic { omega }),
            "repulsive" => Some(RiccatiExample::Repulsive { omega }),
            "focusing" => Some(RiccatiExample::Focusing),
            "defocusing" => Some(RiccatiExample::Defocusing),
            "free" => Some(RiccatiExample::Free),
            _ => None,
        }
    }

    pub fn potential(&self, dim: usize) -> QuadraticPotentialSpec {
        match *self {
            RiccatiExample::Harmonic { omega } => QuadraticPotentialSpec::harmonic(dim, omega),
            RiccatiExample::Repulsive { omega } => QuadraticPotentialSpec::repulsive(dim, omega),
            _ => QuadraticPotentialSpec::free(dim),
        }
    }

    pub fn q0(&self, dim: usize) -> DMatrix<f64> {
        let c = match self {
            RiccatiExample::Focusing => -0.5,
            RiccatiExample::Defocusing => 0.5,
            _ => 0.0,
        };
        DMatrix::identity(dim, dim) * c
    }

    /// Blow-up time of the exact solution, if any.
    pub fn analytic_horizon(&self) -> Option<f64> {
        match *self {
            RiccatiExample::Harmonic { omega } => Some(std::f64::consts::FRAC_PI_2 / omega),
            RiccatiExample::Focusing => Some(1.0),
            _ => None,
        }
    }

    /// Scalar `q(t)` with `Q(t) = q(t)·I`.
    pub fn q_exact(&self, t: f64) -> f64 {
        match *self {
            RiccatiExample::Harmonic { omega } => -0.5 * omega * (omega * t).tan(),
            RiccatiExample::Repulsive { omega } => 0.5 * omega * (omega * t).tanh(),
            RiccatiExample::Focusing => 1.0 / (2.0 * (t - 1.0)),
            RiccatiExample::Defocusing => 1.0 / (2.0 * (t + 1.0)),
            RiccatiExample::Free => 0.0,
        }
    }

    /// `exp(-∫₀ᵗ Tr Q)` in dimension `dim`.
    pub fn boundary_modulus_exact(&self, t: f64, dim: usize) -> f64 {
        let p = -(dim as f64) / 2.0;
        match *self {
            RiccatiExample::Harmonic { omega } => (omega * t).cos().powf(p),
            RiccatiExample::Repulsive { omega } => (omega * t).cosh().powf(p),
            RiccatiExample::Focusing => (1.0 - t).powf(p),
            RiccatiExample::Defocusing => (1.0 + t).powf(p),
            RiccatiExample::Free => 1.0,
        }
    }

    /// Solves the example up to `t_max` (or 0.9 of the analytic horizon).
    pub fn solve(&self, dim: usize, t_max: Option<f64>, dt: f64) -> Result<RiccatiTrajectory> {
        let t_max = t_max.unwrap_or_else(|| self.analytic_horizon().map_or(2.0, |h| 0.9 * h));
        solve_riccati(&self.potential(dim), &self.q0(dim), t_max, dt)
    }
}
