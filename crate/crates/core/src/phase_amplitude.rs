//! Phase–amplitude (WKB) hierarchy on the torus.
//!
//! The wave function is sought as `u = a·exp(iΦ/ε)` with a complex amplitude
//! `a` and a real phase `Φ` solving
//!
//! ```text
//! ∂ₜΦ + ½|∇Φ|² + f(|a|²) + V = 0
//! ∂ₜa + ∇Φ·∇a + ½ a ΔΦ      = i(ε/2) Δa
//! ```
//!
//! At `ε = 0` this is the limit (compressible Euler) system. The first
//! corrector `(φ⁽¹⁾, a⁽¹⁾)` solves its linearisation around the limit
//! solution with source `(i/2)Δa`, and together they give the approximation
//! `a·exp(iφ⁽¹⁾)·exp(iφ/ε)`.
//!
//! The system is hyperbolic only while `f'(|a|²) > 0`; the solver refuses
//! data (and stops runs) that enter the elliptic region.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schrodinger::Nonlinearity;
use crate::spectral::{self, Field, FieldKind, Grid};

pub const DEFAULT_DELTA_MIN: f64 = 1e-3;

/// Runs stop once `‖∇Φ‖∞` or `‖a‖∞` exceeds this multiple of its initial scale.
pub const DEFAULT_GROWTH_LIMIT: f64 = 10.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
pub struct PhaseAmplitudeState {
    pub t: f64,
    pub a: Field,
    pub phi: Field,
}

#[derive(Debug, Clone)]
pub struct GrenierOptions {
    /// `ε ≥ 0`; zero selects the limit system.
    pub epsilon: f64,
    pub t_final: f64,
    pub dt: f64,
    pub delta_min: f64,
    pub potential: Option<Field>,
    pub dealias: bool,
    pub growth_limit: f64,
}

impl GrenierOptions {
    pub fn new(epsilon: f64, t_final: f64, dt: f64) -> Self {
        Self {
            epsilon,
            t_final,
            dt,
            delta_min: DEFAULT_DELTA_MIN,
            potential: None,
            dealias: false,
            growth_limit: DEFAULT_GROWTH_LIMIT,
        }
    }

    /// Limit system. Dealiased by default: without dispersion the
    /// quadratic transport terms pump energy into the top modes and the
    /// mass drifts at the 1e-6 level on moderate grids.
    pub fn limit(t_final: f64, dt: f64) -> Self {
        Self {
            dealias: true,
            ..Self::new(0.0, t_final, dt)
        }
    }
}

/// Minimum over the grid of `f'(|a|²)`.
pub fn hyperbolicity_margin(a: &Field, nl: Nonlinearity) -> f64 {
    a.values()
        .iter()
        .map(|v| nl.df(v.norm_sqr()))
        .fold(f64::INFINITY, f64::min)
}

/// `a·exp(i·phase/ε)`.
pub fn reconstruct(a: &Field, phase: &Field, epsilon: f64) -> Result<Field> {
    a.zip_map(phase, |a, p| a * Complex64::from_polar(1.0, p.re / epsilon))
}

/// `base + Σ cᵢ·fᵢ`, keeping the kind of `base`.
fn combine(base: &Field, terms: &[(f64, &Field)]) -> Field {
    let mut values = base.values().to_vec();
    for (c, f) in terms {
        for (v, w) in values.iter_mut().zip(f.values()) {
            *v += w * *c;
        }
    }
    Field::new(base.grid(), values, FieldKind::Complex)
        .map(|f| if base.is_real() { f.real_part() } else { f })
        .expect("sample count preserved")
}

fn sup_gradient(grad: &[Field]) -> f64 {
    let n = grad[0].values().len();
    (0..n)
        .map(|j| grad.iter().map(|g| g.values()[j].norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn finish(values: Vec<Complex64>, grid: &Grid, kind: FieldKind, dealias: bool) -> Field {
    let f = Field::new(grid, values, FieldKind::Complex).expect("sample count preserved");
    let f = if dealias { spectral::dealias(&f) } else { f };
    match kind {
        FieldKind::Real => f.real_part(),
        FieldKind::Complex => f,
    }
}

struct GrenierRhs<'a> {
    nl: Nonlinearity,
    epsilon: f64,
    potential: Option<&'a Field>,
    dealias: bool,
}

impl GrenierRhs<'_> {
    fn eval(&self, phi: &Field, a: &Field) -> (Field, Field) {
        let grid = phi.grid();
        let (g_phi, l_phi) = spectral::gradient_and_laplacian(phi);
        let (g_a, l_a) = spectral::gradient_and_laplacian(a);
        let n = grid.len();
        let mut d_phi = Vec::with_capacity(n);
        let mut d_a = Vec::with_capacity(n);
        for j in 0..n {
            let av = a.values()[j];
            let mut kinetic = 0.0;
            let mut transport = Complex64::new(0.0, 0.0);
            for (gp, ga) in g_phi.iter().zip(&g_a) {
                let v = gp.values()[j].re;
                kinetic += v * v;
                transport += ga.values()[j] * v;
            }
            let pot = self.potential.map_or(0.0, |p| p.values()[j].re);
            d_phi.push(Complex64::new(
                -0.5 * kinetic - self.nl.f(av.norm_sqr()) - pot,
                0.0,
            ));
            d_a.push(
                -transport - 0.5 * av * l_phi.values()[j].re
                    + I * (0.5 * self.epsilon) * l_a.values()[j],
            );
        }
        (
            finish(d_phi, grid, FieldKind::Real, self.dealias),
            finish(d_a, grid, FieldKind::Complex, self.dealias),
        )
    }
}

/// Time-sampled solution of the phase–amplitude system, one sample per step.
#[derive(Debug, Clone)]
pub struct GrenierTrajectory {
    pub nonlinearity: Nonlinearity,
    pub epsilon: f64,
    pub dt: f64,
    pub states: Vec<PhaseAmplitudeState>,
    /// `(∂ₜΦ, ∂ₜa)` at each sample, used for dense output.
    pub rates: Vec<(Field, Field)>,
    /// Minimum of `f'(|a|²)` over the run.
    pub margin: f64,
}

impl GrenierTrajectory {
    pub fn grid(&self) -> &Grid {
        self.states[0].a.grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn final_state(&self) -> &PhaseAmplitudeState {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        find_time(self.states.iter().map(|s| s.t), t)
    }

    /// Density `|a|²` at sample `i`.
    pub fn density(&self, i: usize) -> Field {
        self.states[i].a.abs_squared()
    }

    /// `u = a·exp(iΦ/ε)` at sample `i`.
    pub fn reconstruct(&self, i: usize, epsilon: f64) -> Result<Field> {
        reconstruct(&self.states[i].a, &self.states[i].phi, epsilon)
    }
}

fn find_time(times: impl Iterator<Item = f64>, t: f64) -> Result<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    times
        .enumerate()
        .find(|(_, s)| (s - t).abs() <= tol)
        .map(|(i, _)| i)
        .ok_or(Error::TimeNotSampled { t })
}

/// Integrates the phase–amplitude system by spectral method of lines and RK4.
pub fn solve_grenier(
    a0: &Field,
    phi0: &Field,
    nl: Nonlinearity,
    opts: &GrenierOptions,
) -> Result<GrenierTrajectory> {
    a0.check_same_grid(phi0)?;
    let phi0 = phi0.to_real()?;
    let a0 = a0.to_complex();
    if !(opts.epsilon >= 0.0) {
        return Err(Error::InvalidProblem(format!(
            "epsilon must be non-negative, got {}",
            opts.epsilon
        )));
    }
    if !(opts.dt > 0.0 && opts.t_final >= 0.0) {
        return Err(Error::NonpositiveStep {
            dt: opts.dt,
            t_max: opts.t_final,
        });
    }
    if let Some(v) = &opts.potential {
        a0.check_same_grid(v)?;
        if !v.is_real() {
            return Err(Error::InvalidProblem("potential must be a real field".into()));
        }
    }
    if !a0.is_finite() || !phi0.is_finite() {
        return Err(Error::NonfiniteField { time: 0.0 });
    }

    let margin0 = hyperbolicity_margin(&a0, nl);
    if margin0 < opts.delta_min {
        return Err(Error::EllipticRegion {
            time: 0.0,
            margin: margin0,
            threshold: opts.delta_min,
        });
    }
    let abort_margin = 0.5 * opts.delta_min;

    let rhs = GrenierRhs {
        nl,
        epsilon: opts.epsilon,
        potential: opts.potential.as_ref(),
        dealias: opts.dealias,
    };
    let velocity_limit = opts.growth_limit * sup_gradient(&spectral::gradient(&phi0)).max(1.0);
    let amplitude_limit = opts.growth_limit * a0.max_abs().max(1.0);

    let steps = if opts.t_final > 0.0 {
        (opts.t_final / opts.dt - 1e-9).ceil().max(1.0) as usize
    } else {
        0
    };
    let h = if steps > 0 { opts.t_final / steps as f64 } else { opts.dt };

    let mut phi = phi0;
    let mut a = a0;
    let mut margin = margin0;
    let mut states = Vec::with_capacity(steps + 1);
    let mut rates = Vec::with_capacity(steps + 1);
    let mut k1 = rhs.eval(&phi, &a);
    states.push(PhaseAmplitudeState {
        t: 0.0,
        a: a.clone(),
        phi: phi.clone(),
    });

    for n in 0..steps {
        let t_next = (n + 1) as f64 * h;
        let (k1p, k1a) = &k1;
        let (k2p, k2a) = rhs.eval(
            &combine(&phi, &[(0.5 * h, k1p)]),
            &combine(&a, &[(0.5 * h, k1a)]),
        );
        let (k3p, k3a) = rhs.eval(
            &combine(&phi, &[(0.5 * h, &k2p)]),
            &combine(&a, &[(0.5 * h, &k2a)]),
        );
        let (k4p, k4a) = rhs.eval(&combine(&phi, &[(h, &k3p)]), &combine(&a, &[(h, &k3a)]));
        let w = h / 6.0;
        let phi_next = combine(&phi, &[(w, k1p), (2.0 * w, &k2p), (2.0 * w, &k3p), (w, &k4p)]);
        let a_next = combine(&a, &[(w, k1a), (2.0 * w, &k2a), (2.0 * w, &k3a), (w, &k4a)]);

        if !phi_next.is_finite() || !a_next.is_finite() {
            return Err(Error::NonfiniteField { time: t_next });
        }
        let m = hyperbolicity_margin(&a_next, nl);
        if m < abort_margin {
            return Err(Error::EllipticRegion {
                time: t_next,
                margin: m,
                threshold: abort_margin,
            });
        }
        margin = margin.min(m);
        let v_sup = sup_gradient(&spectral::gradient(&phi_next));
        if v_sup > velocity_limit {
            return Err(Error::SmoothnessLost {
                time: t_next,
                quantity: "sup |grad phase|",
                value: v_sup,
                limit: velocity_limit,
            });
        }
        let a_sup = a_next.max_abs();
        if a_sup > amplitude_limit {
            return Err(Error::SmoothnessLost {
                time: t_next,
                quantity: "sup |a|",
                value: a_sup,
                limit: amplitude_limit,
            });
        }

        rates.push(std::mem::replace(&mut k1, rhs.eval(&phi_next, &a_next)));
        phi = phi_next;
        a = a_next;
        states.push(PhaseAmplitudeState {
            t: t_next,
            a: a.clone(),
            phi: phi.clone(),
        });
    }
    rates.push(k1);

    Ok(GrenierTrajectory {
        nonlinearity: nl,
        epsilon: opts.epsilon,
        dt: h,
        states,
        rates,
        margin,
    })
}

/// Spatial derivatives of the leading-order solution at one instant.
struct LeadingGeometry {
    a: Field,
    grad_phi: Vec<Field>,
    lap_phi: Field,
    grad_a: Vec<Field>,
    lap_a: Field,
    df: Vec<f64>,
}

impl LeadingGeometry {
    fn new(phi: &Field, a: &Field, nl: Nonlinearity) -> Self {
        let (grad_phi, lap_phi) = spectral::gradient_and_laplacian(phi);
        let (grad_a, lap_a) = spectral::gradient_and_laplacian(a);
        let df = a.values().iter().map(|v| nl.df(v.norm_sqr())).collect();
        Self {
            a: a.clone(),
            grad_phi,
            lap_phi,
            grad_a,
            lap_a,
            df,
        }
    }

    /// Corrector right-hand side
    ///
    /// ```text
    /// ∂ₜφ¹ = -∇φ·∇φ¹ - f'(|a|²)·2Re(ā a¹)
    /// ∂ₜa¹ = -∇φ·∇a¹ - ∇φ¹·∇a - ½a¹Δφ - ½aΔφ¹ + (i/2)Δa
    /// ```
    fn corrector_rhs(&self, phi1: &Field, a1: &Field) -> (Field, Field) {
        let grid = phi1.grid();
        let (g_phi1, l_phi1) = spectral::gradient_and_laplacian(phi1);
        let g_a1 = spectral::gradient(a1);
        let n = grid.len();
        let mut d_phi1 = Vec::with_capacity(n);
        let mut d_a1 = Vec::with_capacity(n);
        for j in 0..n {
            let a = self.a.values()[j];
            let b = a1.values()[j];
            let mut adv_phi1 = 0.0;
            let mut adv_a1 = Complex64::new(0.0, 0.0);
            let mut cross = Complex64::new(0.0, 0.0);
            for axis in 0..grid.dim() {
                let v = self.grad_phi[axis].values()[j].re;
                adv_phi1 += v * g_phi1[axis].values()[j].re;
                adv_a1 += g_a1[axis].values()[j] * v;
                cross += self.grad_a[axis].values()[j] * g_phi1[axis].values()[j].re;
            }
            d_phi1.push(Complex64::new(
                -adv_phi1 - self.df[j] * 2.0 * (a.conj() * b).re,
                0.0,
            ));
            d_a1.push(
                -adv_a1 - cross - 0.5 * b * self.lap_phi.values()[j].re
                    - 0.5 * a * l_phi1.values()[j].re
                    + 0.5 * I * self.lap_a.values()[j],
            );
        }
        (
            finish(d_phi1, grid, FieldKind::Real, false),
            finish(d_a1, grid, FieldKind::Complex, false),
        )
    }
}

/// First-order corrector `(φ⁽¹⁾, a⁽¹⁾)` sampled on the leading trajectory's times.
#[derive(Debug, Clone)]
pub struct CorrectorTrajectory {
    pub times: Vec<f64>,
    pub phi1: Vec<Field>,
    pub a1: Vec<Field>,
}

/// Integrates the corrector system along a stored leading-order trajectory.
///
/// Leading-order values at RK4 half steps come from cubic Hermite
/// interpolation with the stored time derivatives.
pub fn solve_corrector(leading: &GrenierTrajectory, a1: &Field) -> Result<CorrectorTrajectory> {
    let grid = leading.grid().clone();
    if a1.grid() != &grid {
        return Err(Error::GridMismatch("corrector datum is not on the leading grid".into()));
    }
    if leading.rates.len() != leading.states.len() {
        return Err(Error::InvalidProblem("leading trajectory lacks time derivatives".into()));
    }
    let nl = leading.nonlinearity;
    let mut phi1 = Field::zeros(&grid);
    let mut b = a1.to_complex();
    let mut times = vec![0.0];
    let mut phi1s = vec![phi1.clone()];
    let mut a1s = vec![b.clone()];

    let geom_at = |i: usize| LeadingGeometry::new(&leading.states[i].phi, &leading.states[i].a, nl);
    let mut start = geom_at(0);
    for i in 0..leading.states.len() - 1 {
        let s0 = &leading.states[i];
        let s1 = &leading.states[i + 1];
        let h = s1.t - s0.t;
        let (dp0, da0) = &leading.rates[i];
        let (dp1, da1) = &leading.rates[i + 1];
        // Hermite midpoint: (y₀+y₁)/2 + h/8·(y₀' - y₁')
        let phi_mid = combine(&s0.phi, &[(-0.5, &s0.phi), (0.5, &s1.phi), (h / 8.0, dp0), (-h / 8.0, dp1)]);
        let a_mid = combine(&s0.a, &[(-0.5, &s0.a), (0.5, &s1.a), (h / 8.0, da0), (-h / 8.0, da1)]);
        let mid = LeadingGeometry::new(&phi_mid, &a_mid, nl);
        let end = geom_at(i + 1);

        let (k1p, k1a) = start.corrector_rhs(&phi1, &b);
        let (k2p, k2a) = mid.corrector_rhs(
            &combine(&phi1, &[(0.5 * h, &k1p)]),
            &combine(&b, &[(0.5 * h, &k1a)]),
        );
        let (k3p, k3a) = mid.corrector_rhs(
            &combine(&phi1, &[(0.5 * h, &k2p)]),
            &combine(&b, &[(0.5 * h, &k2a)]),
        );
        let (k4p, k4a) = end.corrector_rhs(&combine(&phi1, &[(h, &k3p)]), &combine(&b, &[(h, &k3a)]));
        let w = h / 6.0;
        phi1 = combine(&phi1, &[(w, &k1p), (2.0 * w, &k2p), (2.0 * w, &k3p), (w, &k4p)]);
        b = combine(&b, &[(w, &k1a), (2.0 * w, &k2a), (2.0 * w, &k3a), (w, &k4a)]);
        if !phi1.is_finite() || !b.is_finite() {
            return Err(Error::NonfiniteField { time: s1.t });
        }
        times.push(s1.t);
        phi1s.push(phi1.clone());
        a1s.push(b.clone());
        start = end;
    }
    Ok(CorrectorTrajectory {
        times,
        phi1: phi1s,
        a1: a1s,
    })
}

/// Leading order plus first corrector, sampled in time.
#[derive(Debug, Clone)]
pub struct WkbBundle {
    pub nonlinearity: Nonlinearity,
    pub times: Vec<f64>,
    pub a: Vec<Field>,
    pub phi: Vec<Field>,
    pub a1: Vec<Field>,
    pub phi1: Vec<Field>,
    pub hyperbolicity_margin: f64,
}

impl WkbBundle {
    pub fn from_parts(leading: &GrenierTrajectory, corrector: CorrectorTrajectory) -> Result<Self> {
        if corrector.times.len() != leading.states.len() {
            return Err(Error::InvalidProblem(
                "corrector and leading trajectories have different lengths".into(),
            ));
        }
        Ok(Self {
            nonlinearity: leading.nonlinearity,
            times: corrector.times,
            a: leading.states.iter().map(|s| s.a.clone()).collect(),
            phi: leading.states.iter().map(|s| s.phi.clone()).collect(),
            a1: corrector.a1,
            phi1: corrector.phi1,
            hyperbolicity_margin: leading.margin,
        })
    }

    /// Solves the limit system from `(a0, φ0)` and the corrector from `a1`.
    pub fn compute(
        a0: &Field,
        phi0: &Field,
        a1: &Field,
        nl: Nonlinearity,
        opts: &GrenierOptions,
    ) -> Result<Self> {
        let mut limit_opts = opts.clone();
        limit_opts.epsilon = 0.0;
        let leading = solve_grenier(a0, phi0, nl, &limit_opts)?;
        let corrector = solve_corrector(&leading, a1)?;
        Self::from_parts(&leading, corrector)
    }

    pub fn grid(&self) -> &Grid {
        self.a[0].grid()
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        find_time(self.times.iter().copied(), t)
    }
}

/// `a·exp(iφ⁽¹⁾)·exp(iφ/ε)` at a sampled time.
pub fn wkb_approx(bundle: &WkbBundle, t: f64, epsilon: f64) -> Result<Field> {
    let i = bundle.index_of(t)?;
    let a = &bundle.a[i];
    let phase = bundle.phi[i].values();
    let phi1 = bundle.phi1[i].values();
    let values = a
        .values()
        .iter()
        .zip(phase.iter().zip(phi1))
        .map(|(a, (p, p1))| a * Complex64::from_polar(1.0, p1.re + p.re / epsilon))
        .collect();
    Field::complex(a.grid(), values)
}

/// `a·exp(iφ/ε)` at a sampled time, i.e. without the corrector phase.
pub fn leading_approx(bundle: &WkbBundle, t: f64, epsilon: f64) -> Result<Field> {
    let i = bundle.index_of(t)?;
    reconstruct(&bundle.a[i], &bundle.phi[i], epsilon)
}
