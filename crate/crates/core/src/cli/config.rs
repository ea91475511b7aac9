//! Experiment configuration: JSON schema, catalogue resolution and validation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::phase_amplitude::DEFAULT_DELTA_MIN;
use crate::schrodinger::{Nonlinearity, DEFAULT_DT0};
use crate::spectral::{gradient, Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Riccati,
    Converge,
    Colinsoyeur,
    Instability,
    Hydro,
}

impl Study {
    pub const ALL: [Study; 5] = [
        Study::Riccati,
        Study::Converge,
        Study::Colinsoyeur,
        Study::Instability,
        Study::Hydro,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Study::Riccati => "riccati",
            Study::Converge => "converge",
            Study::Colinsoyeur => "colinsoyeur",
            Study::Instability => "instability",
            Study::Hydro => "hydro",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A real or complex coefficient: `0.3` or `[0.3, -0.1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::Real(0.0)
    }
}

impl Coefficient {
    pub fn value(&self) -> Complex64 {
        match *self {
            Coefficient::Real(r) => Complex64::new(r, 0.0),
            Coefficient::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// `cos·cos(k·x) + sin·sin(k·x)` with `x` measured in units of `2π/period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    /// Integer wave vector; missing trailing components are zero.
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: Coefficient,
    #[serde(default)]
    pub sin: Coefficient,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPolynomial {
    #[serde(default)]
    pub constant: Coefficient,
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: Coefficient::Real(c),
            terms: Vec::new(),
        }
    }

    pub fn with_cos(mut self, k: i64, c: f64) -> Self {
        self.terms.push(TrigTerm {
            k: vec![k],
            cos: Coefficient::Real(c),
            sin: Coefficient::default(),
        });
        self
    }

    pub fn with_sin(mut self, k: i64, c: f64) -> Self {
        self.terms.push(TrigTerm {
            k: vec![k],
            cos: Coefficient::default(),
            sin: Coefficient::Real(c),
        });
        self
    }

    pub fn is_real(&self) -> bool {
        let real = |c: &Coefficient| c.value().im == 0.0;
        real(&self.constant) && self.terms.iter().all(|t| real(&t.cos) && real(&t.sin))
    }

    pub fn max_wavenumber(&self) -> i64 {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, grid: &Grid) -> Field {
        let scale = 2.0 * PI / grid.period();
        let values: Vec<Complex64> = (0..grid.len())
            .map(|j| {
                let x = grid.coords(j);
                self.terms.iter().fold(self.constant.value(), |acc, t| {
                    let phase: f64 = t.k.iter().zip(x).map(|(k, x)| *k as f64 * x * scale).sum();
                    acc + t.cos.value() * phase.cos() + t.sin.value() * phase.sin()
                })
            })
            .collect();
        let f = Field::complex(grid, values).expect("sample count matches grid");
        if self.is_real() {
            f.real_part()
        } else {
            f
        }
    }
}

/// A catalogue name or an inline polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataRef {
    Named(String),
    Inline(TrigPolynomial),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialData {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<DataRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<DataRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<DataRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<DataRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub points: Option<usize>,
    #[serde(default = "default_period")]
    pub period: f64,
}

fn default_dim() -> usize {
    1
}

fn default_period() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtPolicy {
    /// Upper bound on the splitting step.
    #[serde(default = "default_max_dt")]
    pub max: f64,
    /// Splitting step per unit ε.
    #[serde(default = "default_per_eps")]
    pub per_epsilon: f64,
    /// RK4 step for the phase–amplitude and corrector systems.
    #[serde(default = "default_grenier_dt")]
    pub grenier: f64,
}

fn default_max_dt() -> f64 {
    1e-2
}

fn default_per_eps() -> f64 {
    DEFAULT_DT0
}

fn default_grenier_dt() -> f64 {
    0.05 / 64.0
}

impl Default for DtPolicy {
    fn default() -> Self {
        Self {
            max: default_max_dt(),
            per_epsilon: default_per_eps(),
            grenier: default_grenier_dt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiConfig {
    pub example: String,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_riccati_dim")]
    pub dim: usize,
    #[serde(default = "default_riccati_dt")]
    pub dt: f64,
    /// Defaults to 0.9 of the analytic horizon, or 2 without one.
    #[serde(default)]
    pub t_max: Option<f64>,
}

fn default_omega() -> f64 {
    1.0
}

fn default_riccati_dim() -> usize {
    2
}

fn default_riccati_dt() -> f64 {
    1e-3
}

impl Default for RiccatiConfig {
    fn default() -> Self {
        Self {
            example: "harmonic".into(),
            omega: default_omega(),
            dim: default_riccati_dim(),
            dt: default_riccati_dt(),
            t_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub study: Study,
    pub grid: GridConfig,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub catalogue: BTreeMap<String, TrigPolynomial>,
    #[serde(default)]
    pub data: InitialData,
    #[serde(default)]
    pub dt: DtPolicy,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// Instability exponent: perturbation size `ε^alpha`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub dealias: bool,
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default)]
    pub riccati: Option<RiccatiConfig>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_nonlinearity() -> Nonlinearity {
    Nonlinearity::Cubic
}

fn default_t_final() -> f64 {
    0.5
}

fn default_alpha() -> f64 {
    0.5
}

fn default_delta_min() -> f64 {
    DEFAULT_DELTA_MIN
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| 2f64.powi(-j)).collect()
}

fn named(name: &str) -> Option<DataRef> {
    Some(DataRef::Named(name.into()))
}

impl ExperimentConfig {
    /// The configuration shipped for each study.
    pub fn default_for(study: Study) -> Self {
        let mut catalogue = BTreeMap::new();
        catalogue.insert(
            "bump".to_string(),
            TrigPolynomial::constant(1.0).with_cos(1, 0.3),
        );
        let mut cfg = Self {
            study,
            grid: GridConfig {
                dim: 1,
                points: Some(1024),
                period: default_period(),
            },
            epsilons: dyadic(3, 7),
            nonlinearity: Nonlinearity::Cubic,
            catalogue: BTreeMap::new(),
            data: InitialData::default(),
            dt: DtPolicy::default(),
            t_final: 0.5,
            alpha: default_alpha(),
            dealias: false,
            delta_min: DEFAULT_DELTA_MIN,
            riccati: None,
            out: PathBuf::from("out").join(study.name()),
        };
        match study {
            Study::Riccati => {
                cfg.grid.points = Some(8);
                cfg.epsilons = Vec::new();
                cfg.riccati = Some(RiccatiConfig::default());
            }
            Study::Converge => {
                catalogue.insert("second_harmonic".into(), TrigPolynomial::default().with_cos(2, 0.2));
                catalogue.insert("swell".into(), TrigPolynomial::default().with_sin(1, 0.4));
                cfg.data = InitialData {
                    a0: named("bump"),
                    a1: named("second_harmonic"),
                    phi0: named("swell"),
                    theta0: None,
                };
            }
            Study::Colinsoyeur => {
                cfg.grid.points = Some(256);
                cfg.t_final = 2.0;
                catalogue.clear();
                catalogue.insert("tilt".into(), TrigPolynomial::default().with_sin(1, 0.5));
                cfg.data = InitialData {
                    theta0: named("tilt"),
                    ..InitialData::default()
                };
            }
            Study::Instability => {
                cfg.grid.points = Some(512);
                cfg.epsilons = dyadic(4, 8);
                catalogue.insert("kick".into(), TrigPolynomial::default().with_cos(1, 0.5));
                cfg.data = InitialData {
                    a0: named("bump"),
                    a1: named("kick"),
                    phi0: None,
                    theta0: None,
                };
            }
            Study::Hydro => {
                cfg.grid.points = Some(512);
                cfg.epsilons = dyadic(3, 6);
                cfg.t_final = 1.0;
                catalogue.insert("shear".into(), TrigPolynomial::default().with_sin(2, 0.5));
                catalogue.insert("swell".into(), TrigPolynomial::default().with_sin(1, 0.4));
                cfg.data = InitialData {
                    a0: named("bump"),
                    a1: named("shear"),
                    phi0: named("swell"),
                    theta0: None,
                };
            }
        }
        cfg.catalogue = catalogue;
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn grid(&self) -> Result<Grid, String> {
        let n = self.grid.points.ok_or("grid.points is missing")?;
        Grid::new(self.grid.dim, n, self.grid.period).map_err(|e| e.to_string())
    }

    fn lookup(&self, r: &DataRef) -> Result<TrigPolynomial, String> {
        match r {
            DataRef::Inline(p) => Ok(p.clone()),
            DataRef::Named(name) => self
                .catalogue
                .get(name)
                .cloned()
                .or_else(|| match name.as_str() {
                    "zero" => Some(TrigPolynomial::default()),
                    "one" => Some(TrigPolynomial::constant(1.0)),
                    _ => None,
                })
                .ok_or_else(|| format!("catalogue entry '{name}' does not exist")),
        }
    }

    /// Evaluates a data slot; absent slots default to zero.
    pub fn field(&self, slot: &Option<DataRef>, grid: &Grid) -> Result<Field, String> {
        match slot {
            None => Ok(Field::zeros(grid)),
            Some(r) => Ok(self.lookup(r)?.evaluate(grid)),
        }
    }

    /// Leading amplitude: `a0`, or `exp(iθ0)` when only `θ0` is given.
    pub fn leading_amplitude(&self, grid: &Grid) -> Result<Field, String> {
        if self.data.a0.is_none() && self.data.theta0.is_some() {
            let theta = self.field(&self.data.theta0, grid)?;
            return Ok(theta.map(|t| Complex64::from_polar(1.0, t.re)));
        }
        match &self.data.a0 {
            Some(_) => self.field(&self.data.a0, grid),
            None => Err("initial amplitude a0 is missing".into()),
        }
    }

    pub fn splitting_dt(&self, eps: f64) -> f64 {
        self.dt.max.min(eps * self.dt.per_epsilon)
    }

    /// All violations; empty when the configuration is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let grid = match self.grid() {
            Ok(g) => Some(g),
            Err(e) => {
                v.push(e);
                None
            }
        };

        if self.study == Study::Riccati {
            match &self.riccati {
                None => v.push("riccati section is missing".into()),
                Some(r) => {
                    if crate::eikonal::RiccatiExample::from_name(&r.example, r.omega).is_none() {
                        v.push(format!(
                            "unknown riccati example '{}' (expected harmonic, repulsive, focusing, defocusing or free)",
                            r.example
                        ));
                    }
                    if r.dim == 0 {
                        v.push("riccati.dim must be positive".into());
                    }
                    if !(r.dt > 0.0) {
                        v.push("riccati.dt must be positive".into());
                    }
                    if !(r.omega > 0.0) {
                        v.push("riccati.omega must be positive".into());
                    }
                    if let Some(t) = r.t_max {
                        if !(t > 0.0) {
                            v.push("riccati.t_max must be positive".into());
                        }
                    }
                }
            }
            return v;
        }

        if self.epsilons.len() < 3 {
            v.push("at least three epsilons are needed for a slope fit".into());
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            v.push("epsilons must lie in (0, 1]".into());
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            v.push("epsilon list must be strictly decreasing".into());
        }
        if !(self.t_final > 0.0) {
            v.push("t_final must be positive".into());
        }
        if !(self.dt.max > 0.0 && self.dt.per_epsilon > 0.0 && self.dt.grenier > 0.0) {
            v.push("all dt policy entries must be positive".into());
        }
        if self.study == Study::Instability && !(self.alpha > 0.0 && self.alpha < 1.0) {
            v.push("alpha must lie in (0, 1)".into());
        }
        if !(self.delta_min > 0.0) {
            v.push("delta_min must be positive".into());
        }

        if self.study == Study::Colinsoyeur && (self.data.phi0.is_some() || self.data.a1.is_some()) {
            v.push("the colinsoyeur study takes only theta0 (phi0 = 0, a1 = 0)".into());
        }
        let required: &[(&str, &Option<DataRef>)] = match self.study {
            Study::Colinsoyeur => &[("theta0", &self.data.theta0)],
            Study::Instability => &[("a0", &self.data.a0), ("a1", &self.data.a1)],
            _ => &[("a0", &self.data.a0)],
        };
        for (name, slot) in required {
            if slot.is_none() {
                v.push(format!("initial datum {name} is missing"));
            }
        }
        let slots = [
            ("a0", &self.data.a0),
            ("a1", &self.data.a1),
            ("phi0", &self.data.phi0),
            ("theta0", &self.data.theta0),
        ];
        for (name, slot) in slots {
            let Some(r) = slot else { continue };
            match self.lookup(r) {
                Err(e) => v.push(format!("{name}: {e}")),
                Ok(p) => {
                    if matches!(name, "phi0" | "theta0") && !p.is_real() {
                        v.push(format!("{name} must be real"));
                    }
                    if p.terms.iter().any(|t| t.k.len() > self.grid.dim) {
                        v.push(format!("{name} has a wave vector longer than the grid dimension"));
                    }
                    if let Some(g) = &grid {
                        if 2 * p.max_wavenumber() as usize >= g.points_per_dim() {
                            v.push(format!("{name} is not resolved by the grid"));
                        }
                    }
                }
            }
        }
        if !v.is_empty() {
            return v;
        }
        let Some(grid) = grid else { return v };

        match self.leading_amplitude(&grid) {
            Ok(a0) => {
                let min_density = a0
                    .values()
                    .iter()
                    .map(|z| z.norm_sqr())
                    .fold(f64::INFINITY, f64::min);
                if let Nonlinearity::CubicQuintic { lambda } = self.nonlinearity {
                    if lambda < 0.0 && min_density < self.delta_min + lambda.abs() / 2.0 {
                        v.push(format!(
                            "hyperbolicity condition min |a0|^2 >= delta + |lambda|/2 fails: \
                             min |a0|^2 = {min_density:.4}, delta = {}, lambda = {lambda}",
                            self.delta_min
                        ));
                    }
                }
            }
            Err(e) => v.push(e),
        }

        if let (Ok(phi0), Some(&finest)) = (self.field(&self.data.phi0, &grid), self.epsilons.last()) {
            let speed = gradient(&phi0)
                .iter()
                .map(|g| g.max_abs())
                .fold(0.0, f64::max);
            let k_max = grid.points_per_dim() as f64 / 2.0 * grid.k0();
            if k_max <= 4.0 * speed / finest {
                v.push(format!(
                    "grid of {} points does not resolve the phase at eps = {finest}: need k_max > 4 max|grad phi0|/eps = {:.1}",
                    grid.points_per_dim(),
                    4.0 * speed / finest
                ));
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for s in Study::ALL {
            let cfg = ExperimentConfig::default_for(s);
            assert!(cfg.validate().is_empty(), "{s}: {:?}", cfg.validate());
        }
    }

    #[test]
    fn json_round_trip() {
        for s in Study::ALL {
            let cfg = ExperimentConfig::default_for(s);
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
    }

    #[test]
    fn increasing_epsilons_rejected() {
        let mut cfg = ExperimentConfig::default_for(Study::Converge);
        cfg.epsilons = vec![0.0625, 0.125, 0.25];
        assert!(cfg.validate().iter().any(|m| m.contains("strictly decreasing")));
    }

    #[test]
    fn missing_grid_size() {
        let text = r#"{"study": "converge", "grid": {"dim": 1}, "epsilons": [0.5, 0.25, 0.125],
                       "data": {"a0": "one"}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert!(cfg.validate().iter().any(|m| m.contains("grid.points")));
    }

    #[test]
    fn elliptic_data_flagged() {
        let mut cfg = ExperimentConfig::default_for(Study::Converge);
        cfg.nonlinearity = Nonlinearity::CubicQuintic { lambda: -1.0 };
        cfg.catalogue.insert("low".into(), TrigPolynomial::constant(0.3f64.sqrt()));
        cfg.data.a0 = Some(DataRef::Named("low".into()));
        let v = cfg.validate();
        assert!(v.iter().any(|m| m.contains("hyperbolicity condition")), "{v:?}");
        cfg.nonlinearity = Nonlinearity::CubicQuintic { lambda: 1.0 };
        assert!(cfg.validate().is_empty());
    }

    #[test]
    fn unknown_entry_and_unresolved_grid() {
        let mut cfg = ExperimentConfig::default_for(Study::Hydro);
        cfg.data.a1 = Some(DataRef::Named("nope".into()));
        assert!(cfg.validate().iter().any(|m| m.contains("'nope'")));
        let mut cfg = ExperimentConfig::default_for(Study::Converge);
        cfg.grid.points = Some(64);
        assert!(cfg.validate().iter().any(|m| m.contains("does not resolve")));
    }

    #[test]
    fn polynomial_evaluation() {
        let grid = Grid::unit_torus(2, 16).unwrap();
        let p = TrigPolynomial {
            constant: Coefficient::Complex([1.0, 0.5]),
            terms: vec![TrigTerm {
                k: vec![1, 2],
                cos: Coefficient::Real(0.2),
                sin: Coefficient::Complex([0.0, 0.3]),
            }],
        };
        let f = p.evaluate(&grid);
        for j in [0, 5, 77, 200] {
            let x = grid.coords(j);
            let ph = x[0] + 2.0 * x[1];
            let expect = Complex64::new(1.0 + 0.2 * ph.cos(), 0.5 + 0.3 * ph.sin());
            assert!((f.values()[j] - expect).norm() < 1e-14);
        }
        assert!(TrigPolynomial::constant(1.0).with_cos(1, 0.3).evaluate(&grid).is_real());
    }
}
