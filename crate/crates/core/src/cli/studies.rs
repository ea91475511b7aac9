//! The five studies behind the command-line runner.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Study};
use super::CliError;
use crate::analysis::{error_norms, fit_slope, instability_experiment, wave_solve, ConvergenceReport};
use crate::eikonal::{boundary_modulus, RiccatiExample};
use crate::hydro::{fit_gronwall_rate, satisfies_gronwall, track_hydro_limit, ModulatedEnergyRecord};
use crate::io::{bundle_slice_csv, riccati_csv, snapshot_csv, write_snapshot_binary};
use crate::phase_amplitude::{leading_approx, reconstruct, solve_grenier, wkb_approx, GrenierOptions, WkbBundle};
use crate::schrodinger::{simulate, EpsProblem, Observers};
use crate::spectral::{Field, NormKind};

/// Result of one study run.
#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub study: Study,
    pub pass: bool,
    pub metric: &'static str,
    pub value: f64,
    /// Human-readable table.
    pub table: String,
}

impl StudyOutcome {
    pub fn summary_line(&self) -> String {
        format!(
            "STUDY {} {} {}={:.6e}",
            self.study,
            if self.pass { "PASS" } else { "FAIL" },
            self.metric,
            self.value
        )
    }
}

/// Files to write once the study has finished.
struct Artifacts(Vec<(String, Vec<u8>)>);

impl Artifacts {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn text(&mut self, name: impl Into<String>, body: String) {
        self.0.push((name.into(), body.into_bytes()));
    }

    fn snapshot(&mut self, stem: &str, u: &Field) {
        if u.grid().dim() == 1 {
            self.text(format!("{stem}.csv"), snapshot_csv(u));
        } else {
            let mut buf = Vec::new();
            write_snapshot_binary(u, &mut buf).expect("writing to memory");
            self.0.push((format!("{stem}.bin"), buf));
        }
    }

    fn write(self, out: &Path) -> Result<(), CliError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(out).map_err(io_err(out))?;
        for (name, body) in self.0 {
            let path = out.join(name);
            fs::write(&path, body).map_err(io_err(&path))?;
        }
        Ok(())
    }
}

fn solver(study: Study) -> impl Fn(crate::Error) -> CliError {
    move |source| CliError::Solver { study, source }
}

fn config_err(e: String) -> CliError {
    CliError::Config(e)
}

/// Validates and runs a study, then writes its artifacts and summary.
pub fn run(cfg: &ExperimentConfig) -> Result<StudyOutcome, CliError> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(CliError::Config(violations.join("; ")));
    }
    let mut artifacts = Artifacts::new();
    let outcome = match cfg.study {
        Study::Riccati => riccati(cfg, &mut artifacts)?,
        Study::Converge => converge(cfg, &mut artifacts)?,
        Study::Colinsoyeur => colinsoyeur(cfg, &mut artifacts)?,
        Study::Instability => instability(cfg, &mut artifacts)?,
        Study::Hydro => hydro(cfg, &mut artifacts)?,
    };
    artifacts.text("config.json", cfg.to_json() + "\n");
    artifacts.text(
        "summary.txt",
        format!("{}\n{}\n", outcome.table.trim_end(), outcome.summary_line()),
    );
    artifacts.write(&cfg.out)?;
    Ok(outcome)
}

fn riccati(cfg: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<StudyOutcome, CliError> {
    let r = cfg.riccati.clone().unwrap_or_default();
    let ex = RiccatiExample::from_name(&r.example, r.omega)
        .ok_or_else(|| config_err(format!("unknown riccati example '{}'", r.example)))?;
    let traj = ex.solve(r.dim, r.t_max, r.dt).map_err(solver(Study::Riccati))?;
    let mut q_err: f64 = 0.0;
    let mut m_err: f64 = 0.0;
    for (t, q) in traj.times().iter().zip(traj.q_samples()) {
        let exact = ex.q_exact(*t);
        for i in 0..r.dim {
            for j in 0..r.dim {
                let e = if i == j { exact } else { 0.0 };
                q_err = q_err.max((q[(i, j)] - e).abs());
            }
        }
        let m = boundary_modulus(&traj, *t).map_err(solver(Study::Riccati))?;
        m_err = m_err.max((m - ex.boundary_modulus_exact(*t, r.dim)).abs());
    }
    artifacts.text("riccati.csv", riccati_csv(&traj, Some(&ex)).map_err(solver(Study::Riccati))?);
    let mut table = String::new();
    let _ = writeln!(table, "example      {}", ex.name());
    let _ = writeln!(table, "dimension    {}", r.dim);
    let _ = writeln!(table, "t range      [0, {:.6}]", traj.horizon());
    let _ = writeln!(table, "samples      {}", traj.times().len());
    let _ = writeln!(table, "max |Q - Q*| {q_err:.3e}");
    let _ = writeln!(table, "max modulus  {m_err:.3e}");
    Ok(StudyOutcome {
        study: Study::Riccati,
        pass: q_err <= 1e-8 && m_err <= 1e-8,
        metric: "max_modulus_err",
        value: m_err,
        table,
    })
}

fn eps_tag(eps: f64) -> String {
    format!("eps_{eps}")
}

fn converge(cfg: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<StudyOutcome, CliError> {
    let study = Study::Converge;
    let grid = cfg.grid().map_err(config_err)?;
    let a0 = cfg.leading_amplitude(&grid).map_err(config_err)?;
    let a1 = cfg.field(&cfg.data.a1, &grid).map_err(config_err)?;
    let phi0 = cfg.field(&cfg.data.phi0, &grid).map_err(config_err)?;
    let nl = cfg.nonlinearity;
    let t = cfg.t_final;
    let mut opts = GrenierOptions::limit(t, cfg.dt.grenier);
    opts.delta_min = cfg.delta_min;
    let bundle = WkbBundle::compute(&a0, &phi0, &a1, nl, &opts).map_err(solver(study))?;

    let finest = *cfg.epsilons.last().expect("validated");
    let small_times: Vec<f64> = (0..=4)
        .map(|j| t / 10.0 * 2f64.powi(-j))
        .filter(|s| bundle.index_of(*s).is_ok())
        .collect();
    let norms = [NormKind::Linf, NormKind::L2];

    struct Run {
        plain: Vec<f64>,
        dealiased: Vec<f64>,
        small: Vec<f64>,
        last: Field,
    }
    let runs = cfg
        .epsilons
        .par_iter()
        .map(|&eps| -> crate::Result<Run> {
            let u0 = reconstruct(&a0.add(&a1.scale(eps))?, &phi0, eps)?;
            let reference = wkb_approx(&bundle, t, eps)?;
            let mut times = vec![t];
            if eps == finest {
                times.extend_from_slice(&small_times);
            }
            let mut errors = Vec::new();
            let mut small = Vec::new();
            let mut last = None;
            for dealias in [false, true] {
                let p = EpsProblem::new(u0.clone(), eps, nl, cfg.splitting_dt(eps), t)?.with_dealias(dealias);
                let (u, rec) = simulate(&p, &Observers::snapshots(&times))?;
                errors.push(error_norms(&u, &reference, &norms)?);
                if !dealias {
                    for s in &small_times {
                        if let Some((_, snap)) = rec.snapshots.iter().find(|(x, _)| x == s) {
                            small.push(error_norms(snap, &leading_approx(&bundle, *s, eps)?, &[NormKind::Linf])?[0]);
                        }
                    }
                    last = Some(u);
                }
            }
            Ok(Run {
                plain: errors[0].clone(),
                dealiased: errors[1].clone(),
                small,
                last: last.expect("plain run"),
            })
        })
        .collect::<crate::Result<Vec<_>>>()
        .map_err(solver(study))?;

    let report = ConvergenceReport::new(
        cfg.epsilons.clone(),
        norms.to_vec(),
        runs.iter().map(|r| r.plain.clone()).collect(),
    )
    .map_err(solver(study))?;
    let dealiased = ConvergenceReport::new(
        cfg.epsilons.clone(),
        norms.to_vec(),
        runs.iter().map(|r| r.dealiased.clone()).collect(),
    )
    .map_err(solver(study))?;
    let dealias_gap = runs
        .iter()
        .flat_map(|r| r.plain.iter().zip(&r.dealiased).map(|(a, b)| (a - b).abs() / a))
        .fold(0.0, f64::max);

    artifacts.text("report.csv", report.to_csv());
    artifacts.text("report_dealiased.csv", dealiased.to_csv());
    let small = &runs.last().expect("validated").small;
    let small_fit = if small.len() >= 3 {
        let mut csv = String::from("t,Linf_leading\n");
        for (s, e) in small_times.iter().zip(small) {
            let _ = writeln!(csv, "{s:.17e},{e:.17e}");
        }
        artifacts.text("small_time.csv", csv);
        fit_slope(&small_times, small).ok()
    } else {
        None
    };
    if grid.dim() == 1 {
        let i = bundle.index_of(t).map_err(solver(study))?;
        artifacts.text("bundle_final.csv", bundle_slice_csv(&bundle, i));
        artifacts.text("bundle_initial.csv", bundle_slice_csv(&bundle, 0));
    }
    artifacts.snapshot(&format!("u_final_{}", eps_tag(finest)), &runs.last().expect("validated").last);

    let slope = report.slope().slope;
    let mut table = String::new();
    let _ = writeln!(table, "{:>12} {:>12} {:>12} {:>14}", "epsilon", "Linf", "L2", "Linf dealiased");
    for (i, eps) in cfg.epsilons.iter().enumerate() {
        let _ = writeln!(
            table,
            "{eps:>12.5e} {:>12.4e} {:>12.4e} {:>14.4e}",
            report.errors[i][0], report.errors[i][1], dealiased.errors[i][0]
        );
    }
    let _ = writeln!(table, "slope Linf {slope:.4} (residual {:.2e}), slope L2 {:.4}", report.fits[0].residual, report.fits[1].slope);
    let _ = writeln!(table, "dealiasing changes errors by at most {:.2}%", 100.0 * dealias_gap);
    if let Some(f) = small_fit {
        let _ = writeln!(table, "small-time slope (corrector omitted, eps = {finest}) {:.4}", f.slope);
    }
    Ok(StudyOutcome {
        study,
        pass: (0.85..=1.15).contains(&slope) && dealias_gap <= 0.05,
        metric: "slope",
        value: slope,
        table,
    })
}

fn colinsoyeur(cfg: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<StudyOutcome, CliError> {
    let study = Study::Colinsoyeur;
    let grid = cfg.grid().map_err(config_err)?;
    let theta0 = cfg.field(&cfg.data.theta0, &grid).map_err(config_err)?;
    let u0 = theta0.map(|t| Complex64::from_polar(1.0, t.re));
    let zero = Field::zeros(&grid);
    let checkpoints: Vec<f64> = (1..=4).map(|i| cfg.t_final * i as f64 / 4.0).collect();
    let references = checkpoints
        .iter()
        .map(|t| Ok(wave_solve(&theta0, &zero, &zero, *t)?.map(|v| Complex64::from_polar(1.0, v.re))))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(solver(study))?;
    let errors = cfg
        .epsilons
        .par_iter()
        .map(|&eps| -> crate::Result<Vec<f64>> {
            let p = EpsProblem::new(u0.clone(), eps, cfg.nonlinearity, cfg.splitting_dt(eps), cfg.t_final)?
                .with_dealias(cfg.dealias);
            let (_, rec) = simulate(&p, &Observers::snapshots(&checkpoints))?;
            let mut worst = vec![0.0f64; 3];
            for ((_, u), reference) in rec.snapshots.iter().zip(&references) {
                let e = error_norms(u, reference, &[NormKind::Linf, NormKind::L2])?;
                worst[0] = worst[0].max(e[0]);
                worst[1] = worst[1].max(e[1]);
                worst[2] = worst[2].max(e[0].max(e[1]));
            }
            Ok(worst)
        })
        .collect::<crate::Result<Vec<_>>>()
        .map_err(solver(study))?;
    let combined: Vec<f64> = errors.iter().map(|e| e[2]).collect();
    let fit = fit_slope(&cfg.epsilons, &combined).map_err(solver(study))?;
    let mut csv = String::from("epsilon,Linf,L2,max\n");
    let mut table = format!("{:>12} {:>12} {:>12}\n", "epsilon", "Linf", "L2");
    for (eps, e) in cfg.epsilons.iter().zip(&errors) {
        let _ = writeln!(csv, "{eps:.17e},{:.17e},{:.17e},{:.17e}", e[0], e[1], e[2]);
        let _ = writeln!(table, "{eps:>12.5e} {:>12.4e} {:>12.4e}", e[0], e[1]);
    }
    let _ = writeln!(csv, "slope,,,{:.17e}", fit.slope);
    let _ = writeln!(csv, "residual,,,{:.17e}", fit.residual);
    artifacts.text("colinsoyeur.csv", csv);
    let _ = writeln!(
        table,
        "errors are maxima over t in {:?}; slope {:.4} (residual {:.2e})",
        checkpoints, fit.slope, fit.residual
    );
    Ok(StudyOutcome {
        study,
        pass: (0.85..=1.15).contains(&fit.slope),
        metric: "slope",
        value: fit.slope,
        table,
    })
}

fn instability(cfg: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<StudyOutcome, CliError> {
    let study = Study::Instability;
    let grid = cfg.grid().map_err(config_err)?;
    let a0 = cfg.leading_amplitude(&grid).map_err(config_err)?;
    let a1 = cfg.field(&cfg.data.a1, &grid).map_err(config_err)?;
    let phi0 = cfg.field(&cfg.data.phi0, &grid).map_err(config_err)?;
    let run = |a1: &Field| {
        instability_experiment(&a0, a1, &phi0, cfg.nonlinearity, cfg.alpha, &cfg.epsilons, cfg.dt.max)
            .map_err(solver(study))
    };
    let main = run(&a1)?;
    let control = run(&a0.map(|v| v * Complex64::i()))?;
    artifacts.text("instability.csv", main.to_csv());
    artifacts.text("instability_control.csv", control.to_csv());

    let min_distance = main.records.iter().map(|r| r.distance).fold(f64::INFINITY, f64::min);
    let increasing = main.records.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let control_max = control.records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let mut table = format!(
        "{:>12} {:>10} {:>10} {:>12} {:>10} {:>12} {:>14}\n",
        "epsilon", "delta", "t_eps", "|u-v|inf", "ratio", "residual", "control ratio"
    );
    for (r, c) in main.records.iter().zip(&control.records) {
        let _ = writeln!(
            table,
            "{:>12.5e} {:>10.4e} {:>10.4e} {:>12.4e} {:>10.3} {:>12.4e} {:>14.3}",
            r.epsilon, r.delta, r.t_eps, r.distance, r.ratio, r.predicted_residual, c.ratio
        );
    }
    let _ = writeln!(
        table,
        "sup |Re(conj(a0) a1)| = {:.3}; ratios increasing: {increasing}; control max ratio {control_max:.3}",
        main.coupling
    );
    Ok(StudyOutcome {
        study,
        pass: min_distance >= 0.1 && increasing && control_max <= 10.0,
        metric: "min_distance",
        value: min_distance,
        table,
    })
}

fn hydro(cfg: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<StudyOutcome, CliError> {
    let study = Study::Hydro;
    let grid = cfg.grid().map_err(config_err)?;
    let a0 = cfg.leading_amplitude(&grid).map_err(config_err)?;
    let a1 = cfg.field(&cfg.data.a1, &grid).map_err(config_err)?;
    let phi0 = cfg.field(&cfg.data.phi0, &grid).map_err(config_err)?;
    let mut opts = GrenierOptions::limit(cfg.t_final, cfg.dt.grenier);
    opts.delta_min = cfg.delta_min;
    let euler = solve_grenier(&a0, &phi0, cfg.nonlinearity, &opts).map_err(solver(study))?;
    let stride = (euler.states.len() / 20).max(1);
    let records: Vec<ModulatedEnergyRecord> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| {
            let u0 = reconstruct(&a0.add(&a1.scale(eps))?, &phi0, eps)?;
            let p = EpsProblem::new(u0, eps, cfg.nonlinearity, cfg.splitting_dt(eps), cfg.t_final)?
                .with_dealias(cfg.dealias);
            track_hydro_limit(&p, &euler, stride)
        })
        .collect::<crate::Result<Vec<_>>>()
        .map_err(solver(study))?;

    let dens: Vec<f64> = records.iter().map(|r| r.max_density_err()).collect();
    let mom: Vec<f64> = records.iter().map(|r| r.max_momentum_err()).collect();
    let density_slope = fit_slope(&cfg.epsilons, &dens).map_err(solver(study))?.slope;
    let momentum_slope = fit_slope(&cfg.epsilons, &mom).map_err(solver(study))?.slope;
    let rate = fit_gronwall_rate(&records[0]).map_err(solver(study))?;
    let gronwall = records.iter().all(|r| satisfies_gronwall(r, rate));

    let mut summary = String::from("epsilon,max_E_eps,max_density_err_L2,max_momentum_err_L1\n");
    let mut table = format!("{:>12} {:>12} {:>14} {:>14}\n", "epsilon", "max E_eps", "density L2", "momentum L1");
    for (i, (eps, r)) in cfg.epsilons.iter().zip(&records).enumerate() {
        artifacts.text(format!("hydro_{}.csv", eps_tag(*eps)), r.to_csv());
        let e_max = r.e_eps.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(summary, "{eps:.17e},{e_max:.17e},{:.17e},{:.17e}", dens[i], mom[i]);
        let _ = writeln!(table, "{eps:>12.5e} {e_max:>12.4e} {:>14.4e} {:>14.4e}", dens[i], mom[i]);
    }
    artifacts.text("hydro_summary.csv", summary);
    let _ = writeln!(
        table,
        "density slope {density_slope:.4}, momentum slope {momentum_slope:.4}, Gronwall rate {rate:.3e} ({})",
        if gronwall { "bound holds for every epsilon" } else { "bound violated" }
    );
    Ok(StudyOutcome {
        study,
        pass: (0.8..=1.2).contains(&density_slope) && (0.8..=1.2).contains(&momentum_slope) && gronwall,
        metric: "density_slope",
        value: density_slope,
        table,
    })
}
