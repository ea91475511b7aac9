//! Periodic collocation grids and Fourier spectral calculus.
//!
//! A [`Grid`] is the uniform tensor grid on the torus `[0, L)^dim` with
//! `dim ∈ {1, 2}`. Samples are stored row-major with axis 0 as the slow
//! index. Fourier coefficients are normalised so that
//!
//! ```text
//! f(x) = Σ_k ĉ(k) exp(i k·x),      k ∈ (2π/L)·{-N/2, …, N/2-1}^dim
//! ```
//!
//! which makes `ĉ` independent of the resolution for band-limited fields.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Imaginary parts of real-kind fields must stay below this (relative to `max(1, ‖f‖∞)`).
pub const REAL_TOLERANCE: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid in one or two dimensions.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    period: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.period == other.period
    }
}

impl Grid {
    pub fn new(dim: usize, points_per_dim: usize, period: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points_per_dim < 8 || !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be a power of two >= 8, got {points_per_dim}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(points_per_dim),
            inverse: planner.plan_fft_inverse(points_per_dim),
        };
        Ok(Self {
            dim,
            n: points_per_dim,
            period,
            plans: Arc::new(plans),
        })
    }

    /// The `[0, 2π)^dim` grid.
    pub fn unit_torus(dim: usize, points_per_dim: usize) -> Result<Self> {
        Self::new(dim, points_per_dim, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Quadrature weight `Δx^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Measure of the torus, `L^dim`.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Signed mode number of an axis index, in `{-N/2, …, N/2-1}`.
    pub fn mode(&self, index: usize) -> i64 {
        let n = self.n as i64;
        let i = index as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber of an axis index.
    pub fn wavenumber(&self, index: usize) -> f64 {
        self.k0() * self.mode(index) as f64
    }

    pub fn is_nyquist(&self, index: usize) -> bool {
        index == self.n / 2
    }

    /// Per-axis indices of a flat sample index (unused axes are 0).
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    /// Coordinates of a sample (unused axes are 0).
    pub fn coords(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(flat);
        let dx = self.dx();
        match self.dim {
            1 => [i as f64 * dx, 0.0],
            _ => [i as f64 * dx, j as f64 * dx],
        }
    }

    /// Nodes along one axis.
    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.dx()).collect()
    }

    /// Wavevector of a flat spectral index.
    pub fn wavevector(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(flat);
        match self.dim {
            1 => [self.wavenumber(i), 0.0],
            _ => [self.wavenumber(i), self.wavenumber(j)],
        }
    }

    pub fn k_squared(&self, flat: usize) -> f64 {
        let [kx, ky] = self.wavevector(flat);
        kx * kx + ky * ky
    }

    /// Normalised Fourier coefficients of samples on this grid.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.len(), "sample count does not match grid");
        let mut buf = values.to_vec();
        self.transform(&mut buf, &self.plans.forward);
        let scale = 1.0 / self.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Samples from normalised Fourier coefficients.
    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.len(), "coefficient count does not match grid");
        self.transform(&mut coeffs, &self.plans.inverse);
        coeffs
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        // Whole-buffer process() runs one transform per contiguous row.
        fft.process(buf);
        if self.dim == 2 {
            transpose_square(buf, self.n);
            fft.process(buf);
            transpose_square(buf, self.n);
        }
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Complex,
    Real,
}

/// Samples of a function on a [`Grid`].
///
/// Real-kind fields are stored as complex numbers whose imaginary parts are
/// kept at zero; constructors reject real data with a significant imaginary
/// component.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    kind: FieldKind,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<Complex64>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let values = match kind {
            FieldKind::Complex => values,
            FieldKind::Real => {
                let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.norm()));
                let worst = values.iter().fold(0.0_f64, |m, v| m.max(v.im.abs()));
                if worst > REAL_TOLERANCE * scale {
                    return Err(Error::InvalidField(format!(
                        "real field has imaginary part {worst:.3e}"
                    )));
                }
                values.into_iter().map(|v| Complex64::new(v.re, 0.0)).collect()
            }
        };
        Ok(Self {
            grid: grid.clone(),
            values,
            kind,
        })
    }

    pub fn complex(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, values, FieldKind::Complex)
    }

    pub fn real(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(
            grid,
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            FieldKind::Real,
        )
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|j| f(&grid.coords(j)[..grid.dim()]))
            .collect();
        Self {
            grid: grid.clone(),
            values,
            kind: FieldKind::Complex,
        }
    }

    pub fn real_from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|j| Complex64::new(f(&grid.coords(j)[..grid.dim()]), 0.0))
            .collect();
        Self {
            grid: grid.clone(),
            values,
            kind: FieldKind::Real,
        }
    }

    pub fn constant(grid: &Grid, c: Complex64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
            kind: FieldKind::Complex,
        }
    }

    pub fn real_constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(c, 0.0); grid.len()],
            kind: FieldKind::Real,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::real_constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn is_real(&self) -> bool {
        self.kind == FieldKind::Real
    }

    /// Real parts of the samples.
    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Projects onto the real part, dropping the imaginary component.
    pub fn real_part(&self) -> Field {
        self.map_real(|v| v.re)
    }

    /// Reinterprets as a real-kind field, failing if the imaginary part is not negligible.
    pub fn to_real(&self) -> Result<Field> {
        Self::new(&self.grid, self.values.clone(), FieldKind::Real)
    }

    /// Same samples reinterpreted as complex-kind.
    pub fn to_complex(&self) -> Field {
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
            kind: FieldKind::Complex,
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind: FieldKind::Complex,
        }
    }

    pub fn map_real(&self, f: impl Fn(Complex64) -> f64) -> Field {
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .map(|&v| Complex64::new(f(v), 0.0))
                .collect(),
            kind: FieldKind::Real,
        }
    }

    /// Pointwise combination; the result is complex-kind.
    pub fn zip_map(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            kind: FieldKind::Complex,
        })
    }

    fn zip_keep_kind(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        let mut out = self.zip_map(other, f)?;
        if self.is_real() && other.is_real() {
            out.kind = FieldKind::Real;
            for v in &mut out.values {
                v.im = 0.0;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_keep_kind(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_keep_kind(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_keep_kind(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v * s).collect(),
            kind: self.kind,
        }
    }

    pub fn conj(&self) -> Field {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
            kind: self.kind,
        }
    }

    /// `|f|²` as a real field.
    pub fn abs_squared(&self) -> Field {
        self.map_real(|v| v.norm_sqr())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Trapezoidal (spectrally exact) integral over the torus.
    pub fn integral(&self) -> Complex64 {
        let sum: Complex64 = self.values.iter().sum();
        sum * self.grid.cell_volume()
    }

    pub fn fourier_coefficients(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    /// Builds a field from normalised Fourier coefficients, keeping `kind`.
    pub fn from_coefficients(grid: &Grid, coeffs: Vec<Complex64>, kind: FieldKind) -> Field {
        let mut values = grid.inverse(coeffs);
        if kind == FieldKind::Real {
            for v in &mut values {
                v.im = 0.0;
            }
        }
        Self {
            grid: grid.clone(),
            values,
            kind,
        }
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }
}

/// Norms used to measure fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    Linf,
    /// Sobolev norm with weight `(1+|k|²)^s`.
    Hs(f64),
}

impl NormKind {
    pub fn sobolev(s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::NegativeSobolevIndex(s));
        }
        Ok(NormKind::Hs(s))
    }

    pub fn label(&self) -> String {
        match self {
            NormKind::L2 => "L2".to_string(),
            NormKind::Linf => "Linf".to_string(),
            NormKind::Hs(s) => format!("H{s}"),
        }
    }
}

fn multiply_spectrum(f: &Field, coeffs: &[Complex64], symbol: impl Fn(usize) -> Complex64) -> Field {
    let grid = f.grid();
    let scaled = coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| c * symbol(j))
        .collect();
    Field::from_coefficients(grid, scaled, f.kind())
}

fn derivative_symbol(grid: &Grid, flat: usize, axis: usize) -> Complex64 {
    let idx = grid.multi_index(flat)[axis];
    // The Nyquist mode has no odd-derivative partner and is dropped.
    if grid.is_nyquist(idx) {
        Complex64::new(0.0, 0.0)
    } else {
        I * grid.wavenumber(idx)
    }
}

/// Spectral partial derivatives, one field per axis.
pub fn gradient(f: &Field) -> Vec<Field> {
    let coeffs = f.fourier_coefficients();
    let grid = f.grid();
    (0..grid.dim())
        .map(|axis| multiply_spectrum(f, &coeffs, |j| derivative_symbol(grid, j, axis)))
        .collect()
}

/// Spectral Laplacian, the Fourier multiplier `-|k|²`.
pub fn laplacian(f: &Field) -> Field {
    let coeffs = f.fourier_coefficients();
    let grid = f.grid();
    multiply_spectrum(f, &coeffs, |j| Complex64::new(-grid.k_squared(j), 0.0))
}

/// Gradient and Laplacian sharing one forward transform.
pub fn gradient_and_laplacian(f: &Field) -> (Vec<Field>, Field) {
    let coeffs = f.fourier_coefficients();
    let grid = f.grid();
    let grad = (0..grid.dim())
        .map(|axis| multiply_spectrum(f, &coeffs, |j| derivative_symbol(grid, j, axis)))
        .collect();
    let lap = multiply_spectrum(f, &coeffs, |j| Complex64::new(-grid.k_squared(j), 0.0));
    (grad, lap)
}

/// Spectral divergence of a vector field given by its components.
pub fn divergence(components: &[Field]) -> Result<Field> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidField("divergence of an empty vector field".into()))?;
    let grid = first.grid();
    if components.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: components.len(),
        });
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut all_real = true;
    for (axis, c) in components.iter().enumerate() {
        first.check_same_grid(c)?;
        all_real &= c.is_real();
        let coeffs = c.fourier_coefficients();
        for (j, (a, v)) in acc.iter_mut().zip(coeffs).enumerate() {
            *a += v * derivative_symbol(grid, j, axis);
        }
    }
    let kind = if all_real { FieldKind::Real } else { FieldKind::Complex };
    Ok(Field::from_coefficients(grid, acc, kind))
}

/// L², L∞ or Hˢ norm of a field.
pub fn norm(f: &Field, kind: NormKind) -> f64 {
    match kind {
        NormKind::L2 => {
            let sum: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
            (sum * f.grid().cell_volume()).sqrt()
        }
        NormKind::Linf => f.max_abs(),
        NormKind::Hs(s) => {
            let grid = f.grid();
            let sum: f64 = f
                .fourier_coefficients()
                .iter()
                .enumerate()
                .map(|(j, c)| (1.0 + grid.k_squared(j)).powf(s) * c.norm_sqr())
                .sum();
            (sum * grid.volume()).sqrt()
        }
    }
}

/// Zero-padded spectral interpolation onto a finer grid with the same period.
pub fn resample(f: &Field, finer: &Grid) -> Result<Field> {
    let coarse = f.grid();
    if coarse.period() != finer.period() {
        return Err(Error::GridMismatch(format!(
            "periods differ: {} vs {}",
            coarse.period(),
            finer.period()
        )));
    }
    if coarse.dim() != finer.dim() {
        return Err(Error::GridMismatch(format!(
            "dimensions differ: {} vs {}",
            coarse.dim(),
            finer.dim()
        )));
    }
    if finer.points_per_dim() < coarse.points_per_dim() {
        return Err(Error::GridMismatch(format!(
            "target grid is coarser: {} < {}",
            finer.points_per_dim(),
            coarse.points_per_dim()
        )));
    }
    if finer == coarse {
        return Ok(f.clone());
    }
    let n = coarse.points_per_dim() as i64;
    let m = finer.points_per_dim() as i64;
    let coeffs = f.fourier_coefficients();
    let mut padded = vec![Complex64::new(0.0, 0.0); finer.len()];

    // Each coarse mode maps to one fine mode, except the Nyquist mode which
    // splits evenly between ±N/2 so real data stays real.
    let targets = |mode: i64| -> Vec<(i64, f64)> {
        if mode == -n / 2 {
            vec![(-n / 2, 0.5), (n / 2, 0.5)]
        } else {
            vec![(mode, 1.0)]
        }
    };
    let wrap = |mode: i64| -> usize { mode.rem_euclid(m) as usize };

    for (flat, c) in coeffs.iter().enumerate() {
        let [i, j] = coarse.multi_index(flat);
        match coarse.dim() {
            1 => {
                for (mi, wi) in targets(coarse.mode(i)) {
                    padded[wrap(mi)] += c * wi;
                }
            }
            _ => {
                for (mi, wi) in targets(coarse.mode(i)) {
                    for (mj, wj) in targets(coarse.mode(j)) {
                        padded[wrap(mi) * m as usize + wrap(mj)] += c * (wi * wj);
                    }
                }
            }
        }
    }
    Ok(Field::from_coefficients(finer, padded, f.kind()))
}

/// Two-thirds-rule filter: keeps modes with `|m| ≤ N/3` on every axis.
pub fn dealias(f: &Field) -> Field {
    let grid = f.grid();
    let cutoff = grid.points_per_dim() as i64 / 3;
    let coeffs = f.fourier_coefficients();
    multiply_spectrum(f, &coeffs, |flat| {
        let idx = grid.multi_index(flat);
        let keep = idx[..grid.dim()]
            .iter()
            .all(|&i| grid.mode(i).abs() <= cutoff);
        if keep {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
