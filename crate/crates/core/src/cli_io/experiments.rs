//! Experiment runners, report rows and parameter sweeps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::diagnostics::{
    conservation_audit, front_position_grid, l2_bound_audit_trajectory, planarity_check, pulsation_stats, FrontTrace,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hysteresis::{
    eps_convergence_study, run_limit, ConvergenceConfig, LimitOptions, LimitRunConfig, LimitState, LimitTrajectory,
};
use crate::shs_sim::{run_eps, EpsRunConfig, EpsTrajectory, StepOptions};
use crate::stability::{find_roots, verify_ode, DispersionProblem};
use crate::waves::{pulsating_wave, TravelingWave};

use super::config::{sweep_point, Experiment, RunConfig};
use super::output::{ensure_dir, fmt_f64, write_eps_trajectory, write_limit_trajectory, write_table};

/// Relative conservation drift allowed for an ε-run to pass.
pub const CONSERVATION_TOLERANCE: f64 = 1e-10;
/// Relative speed amplitude below which a front counts as planar.
pub const PLANAR_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub experiment: String,
    pub config_hash: String,
    /// Non-finite values are stored as `None`.
    pub metrics: Vec<(String, Option<f64>)>,
    pub verdicts: Vec<(String, bool)>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn new(id: impl Into<String>, experiment: &str, config_hash: &str) -> Self {
        Self {
            id: id.into(),
            experiment: experiment.to_owned(),
            config_hash: config_hash.to_owned(),
            metrics: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            error: None,
        }
    }

    pub fn failed(id: impl Into<String>, experiment: &str, config_hash: &str, error: &Error) -> Self {
        let mut row = Self::new(id, experiment, config_hash);
        row.error = Some(error.to_string());
        row
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value.is_finite().then_some(value)));
    }

    pub fn verdict(&mut self, name: impl Into<String>, pass: bool) {
        self.verdicts.push((name.into(), pass));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).and_then(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.verdicts.iter().all(|(_, ok)| *ok)
    }
}

/// Overall result of a set of rows, mapped to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    VerdictFailure,
    ExecutionError,
}

impl Outcome {
    pub fn of(rows: &[ReportRow]) -> Self {
        if rows.iter().any(|r| r.error.is_some()) {
            Outcome::ExecutionError
        } else if rows.iter().all(ReportRow::passed) {
            Outcome::Pass
        } else {
            Outcome::VerdictFailure
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::VerdictFailure => 2,
            Outcome::ExecutionError => 1,
        }
    }
}

/// Long-format report: one line per metric, verdict, note or error.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("id,experiment,config_hash,kind,name,value\n");
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_owned()
        }
    };
    for r in rows {
        let prefix = format!("{},{},{}", quote(&r.id), r.experiment, r.config_hash);
        for (name, value) in &r.metrics {
            let v = value.map(fmt_f64).unwrap_or_else(|| "none".into());
            let _ = writeln!(out, "{prefix},metric,{},{v}", quote(name));
        }
        for (name, ok) in &r.verdicts {
            let _ = writeln!(out, "{prefix},verdict,{},{}", quote(name), if *ok { "pass" } else { "fail" });
        }
        for note in &r.notes {
            let _ = writeln!(out, "{prefix},note,,{}", quote(note));
        }
        if let Some(e) = &r.error {
            let _ = writeln!(out, "{prefix},error,,{}", quote(e));
        }
    }
    out
}

pub fn write_report(rows: &[ReportRow], dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("report.csv");
    std::fs::write(&path, report_csv(rows)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Run the configured experiment. `out` overrides the configured output
/// directory; with neither, nothing is written.
pub fn run_experiment(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<ReportRow>> {
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output.dir.clone());
    let rows = if cfg.experiment == Experiment::Sweep {
        run_sweep(cfg, dir.as_deref())?
    } else {
        vec![run_single(cfg, dir.as_deref(), cfg.experiment.name())?]
    };
    if let Some(d) = &dir {
        write_report(&rows, d)?;
    }
    Ok(rows)
}

fn run_single(cfg: &RunConfig, dir: Option<&Path>, id: &str) -> Result<ReportRow> {
    let mut row = ReportRow::new(id, cfg.experiment.name(), &cfg.hash);
    match cfg.experiment {
        Experiment::SimulateEps => simulate_eps(cfg, dir, &mut row)?,
        Experiment::SimulateLimit => simulate_limit(cfg, dir, &mut row)?,
        Experiment::TravelingWave => traveling(cfg, dir, &mut row)?,
        Experiment::PulsatingWave => pulsating(cfg, dir, &mut row)?,
        Experiment::Dispersion => dispersion(cfg, dir, &mut row)?,
        Experiment::EpsConvergence => convergence(cfg, dir, &mut row)?,
        Experiment::Sweep => return Err(Error::Config(vec!["sweeps cannot nest".into()])),
    }
    Ok(row)
}

fn required(value: Option<f64>, key: &str) -> Result<f64> {
    value.ok_or_else(|| Error::Config(vec![format!("{key}: missing required key")]))
}

/// Front threshold for ε-runs, just below the ignition temperature.
pub const EPS_FRONT_THRESHOLD: f64 = -1e-3;

/// Mean front position along the first axis for each snapshot, with the
/// fitted speed when at least three positions exist.
fn front_metrics(grid: &Grid, x_origin: f64, threshold: f64, snapshots: &[(f64, Vec<f64>)], row: &mut ReportRow) {
    let mut trace = FrontTrace::default();
    for (t, u) in snapshots {
        if let Some(f) = front_position_grid(grid, u, threshold, x_origin) {
            trace.times.push(*t);
            trace.positions.push(f.mean);
        }
    }
    if let Some(&x) = trace.positions.last() {
        row.metric("front_position", x);
    }
    if trace.times.len() >= 3 {
        let n = trace.times.len();
        let mt = trace.times.iter().sum::<f64>() / n as f64;
        let mx = trace.positions.iter().sum::<f64>() / n as f64;
        let num: f64 = trace.times.iter().zip(&trace.positions).map(|(t, x)| (t - mt) * (x - mx)).sum();
        let den: f64 = trace.times.iter().map(|t| (t - mt) * (t - mt)).sum();
        row.metric("front_speed", num / den);
    }
}

fn simulate_eps(cfg: &RunConfig, dir: Option<&Path>, row: &mut ReportRow) -> Result<()> {
    let (grid, data) = cfg.initial_data()?;
    let params = cfg
        .kinetics
        .ok_or_else(|| Error::Config(vec!["missing [kinetics] section".into()]))?;
    let t_final = required(cfg.numerics.t_final, "numerics.t_final")?;
    let traj = run_eps(&EpsRunConfig {
        grid: grid.clone(),
        params,
        u0: data.u0,
        v0: data.v0,
        t_final,
        dt: required(cfg.numerics.dt, "numerics.dt")?,
        snapshot_every: cfg.numerics.snapshot_every,
        options: StepOptions {
            scheme: cfg.numerics.scheme,
            strang: cfg.numerics.strang,
            ..StepOptions::default()
        },
    })?;
    eps_row(&traj, cfg, t_final, row)?;
    if let Some(d) = dir {
        if cfg.output.snapshots {
            write_eps_trajectory(&traj, cfg.grid.as_ref().map_or(0.0, |g| g.x_origin), &cfg.hash, d)?;
        }
    }
    Ok(())
}

fn eps_row(traj: &EpsTrajectory, cfg: &RunConfig, t_final: f64, row: &mut ReportRow) -> Result<()> {
    let audit = conservation_audit(traj);
    row.metric("conservation_drift", audit.relative);
    row.metric("min_u", traj.min_u_all_steps);
    row.metric("steps", traj.steps as f64);
    row.metric("halvings", traj.halvings as f64);
    let x_origin = cfg.grid.as_ref().map_or(0.0, |g| g.x_origin);
    let snaps: Vec<(f64, Vec<f64>)> = traj.snapshots.iter().map(|s| (s.t, s.u.clone())).collect();
    front_metrics(&traj.grid, x_origin, EPS_FRONT_THRESHOLD, &snaps, row);
    row.verdict("conservation", audit.relative <= CONSERVATION_TOLERANCE);
    row.verdict("reactant_monotone", traj.reactant_monotone);
    if t_final > 0.0 {
        let l2 = l2_bound_audit_trajectory(traj, t_final, cfg.v0_max)?;
        row.metric("l2_lhs", l2.lhs);
        row.metric("l2_rhs", l2.rhs);
        row.verdict("l2_bound", l2.holds);
    }
    Ok(())
}

fn simulate_limit(cfg: &RunConfig, dir: Option<&Path>, row: &mut ReportRow) -> Result<()> {
    let (grid, data) = cfg.initial_data()?;
    let initial = if cfg.numerics.front_start {
        LimitState::from_front_profile(&grid, &data.u0, &data.v0)?
    } else {
        LimitState::from_initial(&data.u0, &data.v0)?
    };
    let traj = run_limit(&LimitRunConfig {
        grid: grid.clone(),
        initial,
        t_final: required(cfg.numerics.t_final, "numerics.t_final")?,
        dt: required(cfg.numerics.dt, "numerics.dt")?,
        snapshot_every: cfg.numerics.snapshot_every,
        options: LimitOptions {
            ignition: cfg.numerics.ignition,
            fixed_point_ignition: cfg.numerics.fixed_point_ignition,
            ..LimitOptions::default()
        },
        audit_residuals: cfg.numerics.audit_residuals,
    })?;
    limit_row(&traj, cfg, row);
    if let Some(d) = dir {
        if cfg.output.snapshots {
            write_limit_trajectory(&traj, cfg.grid.as_ref().map_or(0.0, |g| g.x_origin), &cfg.hash, d)?;
        }
    }
    Ok(())
}

fn limit_row(traj: &LimitTrajectory, cfg: &RunConfig, row: &mut ReportRow) {
    row.metric("steps", traj.steps as f64);
    row.metric("burnt_cells", traj.final_snapshot().chi.iter().filter(|&&c| c == 1).count() as f64);
    let x_origin = cfg.grid.as_ref().map_or(0.0, |g| g.x_origin);
    // The burnt indicator is crisp, so its edge is the front.
    let snaps: Vec<(f64, Vec<f64>)> = traj
        .snapshots
        .iter()
        .map(|s| (s.t, s.chi.iter().map(|&c| c as f64 - 0.5).collect()))
        .collect();
    front_metrics(&traj.grid, x_origin, 0.0, &snaps, row);
    if cfg.numerics.audit_residuals {
        row.metric("max_enthalpy_residual", traj.max_enthalpy_residual);
        row.metric("min_supercaloric", traj.min_supercaloric);
    }
    row.verdict("chi_monotone", traj.chi_monotone);
    row.verdict("chi_consistent", traj.consistency_violations == 0);
    if let Some(t) = traj.outside_monotone_regime {
        row.notes.push(format!("left the monotone regime at t = {t}"));
    }
}

fn traveling(cfg: &RunConfig, dir: Option<&Path>, row: &mut ReportRow) -> Result<()> {
    let spec = cfg
        .traveling
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["missing [traveling] section".into()]))?;
    let wave = TravelingWave::new(spec.c0, spec.m)?;
    let jumps = wave.branch_jumps();
    let residual = wave.eq13_residual().abs();
    let jump = jumps.iter().map(|j| j.abs()).fold(0.0, f64::max);
    row.metric("a", wave.a);
    row.metric("s0", wave.s0);
    row.metric("s1", wave.s1);
    row.metric("matching_residual", residual);
    row.metric("max_branch_jump", jump);
    row.verdict("matching", residual <= 1e-12);
    row.verdict("c1_continuity", jump <= 1e-10);
    if let Some(d) = dir {
        ensure_dir(d)?;
        let n = spec.samples;
        let rows = (0..n).map(|k| {
            let s = spec.s_min + (spec.s_max - spec.s_min) * k as f64 / (n - 1) as f64;
            let (phi, dphi) = wave.profile_with_slope(s);
            vec![s, phi, dphi]
        });
        write_table(&d.join("profile.csv"), &["s", "phi", "dphi"], rows)?;
    }
    Ok(())
}

fn pulsating(cfg: &RunConfig, dir: Option<&Path>, row: &mut ReportRow) -> Result<()> {
    let pc = cfg
        .pulsating
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["missing [pulsating] section".into()]))?;
    let wave = pulsating_wave(pc)?;
    let r = &wave.report;
    row.metric("a", wave.a);
    row.metric("mu0", wave.mu0);
    row.metric("residual", r.residual);
    row.metric("lattice_shift_residual", r.lattice_shift_residual);
    row.metric("far_field_error", r.far_field_error);
    row.metric("monotone_defect", r.monotone_defect);
    row.metric("min_time_convexity", r.min_time_convexity);
    row.metric("measured_speed", r.measured_speed);
    if let Some(e) = r.planar_profile_error {
        row.metric("planar_profile_error", e);
    }
    row.verdict("converged", r.residual <= pc.tolerance);
    row.verdict("lattice_shift", r.lattice_shift_residual <= 1e-3);
    if r.far_field_error.is_finite() {
        row.verdict("far_field", r.far_field_error <= 0.02);
    }
    row.verdict("speed_in_bracket", r.speed_in_bracket);
    match pulsation_stats(&wave.trace, PLANAR_TOLERANCE) {
        Ok(stats) => {
            row.metric("mean_front_speed", stats.mean_speed);
            row.metric("pulsation_amplitude", stats.amplitude / stats.mean_speed.abs());
            if let Some(p) = stats.period {
                row.metric("pulsation_period", p);
            }
            row.notes.push(format!("pulsation verdict: {}", stats.verdict.name()));
        }
        Err(e) => row.notes.push(format!("pulsation statistics unavailable: {e}")),
    }
    if wave.nx > 1 {
        let shifts: Vec<f64> = (1..wave.nx).map(|k| k as f64 / wave.nx as f64).collect();
        let planar = planarity_check(&wave.w_tilde, wave.nx, &shifts, PLANAR_TOLERANCE)?;
        row.metric("planarity_relative_sup", planar.relative_sup);
        row.metric("cell_average_defect", planar.cell_average_defect);
        row.notes.push(format!("planarity verdict: {}", planar.verdict.name()));
    }
    row.notes.extend(wave.warnings.iter().cloned());
    if let Some(d) = dir {
        ensure_dir(d)?;
        let s = wave.s_values();
        let nx = wave.nx;
        let rows = (0..wave.ns * nx).map(|k| vec![s[k / nx], (k % nx) as f64 / nx as f64, wave.w_tilde[k]]);
        write_table(&d.join("w_tilde.csv"), &["s", "x", "w"], rows)?;
        let speeds = wave.trace.speeds();
        let rows = (0..wave.trace.times.len()).map(|k| vec![wave.trace.times[k], wave.trace.positions[k], speeds[k]]);
        write_table(&d.join("front_trace.csv"), &["t", "x_front", "speed"], rows)?;
    }
    Ok(())
}

fn dispersion(cfg: &RunConfig, dir: Option<&Path>, row: &mut ReportRow) -> Result<()> {
    let spec = cfg
        .dispersion
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["missing [dispersion] section".into()]))?;
    let mut table = Vec::new();
    for &c in &spec.speeds {
        let search = find_roots(&DispersionProblem::new(c, spec.re, spec.im)?, spec.density)?;
        let near_zero = search.roots.iter().filter(|r| r.value.norm() <= 1e-8).count();
        row.metric(format!("roots[c={c}]"), search.roots.len() as f64);
        row.verdict(format!("single_zero_root[c={c}]"), search.roots.len() == 1 && near_zero == 1);
        for r in &search.roots {
            table.push(vec![c, r.value.re, r.value.im, r.multiplicity as f64]);
        }
    }
    let c = spec.speeds[0];
    let lambda = Complex64::new(spec.ode_lambda, 0.0);
    let length = spec.ode_length.unwrap_or(20.0 / c);
    let coarse = verify_ode(lambda, c, length, 2.0 * spec.ode_h)?;
    let fine = verify_ode(lambda, c, length, spec.ode_h)?;
    let order = (coarse / fine).log2();
    row.metric("ode_residual", fine);
    row.metric("ode_order", order);
    row.verdict("ode_order_2", (order - 2.0).abs() <= 0.1);
    if let Some(d) = dir {
        ensure_dir(d)?;
        write_table(&d.join("roots.csv"), &["c", "re", "im", "multiplicity"], table)?;
    }
    Ok(())
}

fn convergence(cfg: &RunConfig, dir: Option<&Path>, row: &mut ReportRow) -> Result<()> {
    let spec = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["missing [convergence] section".into()]))?;
    let (grid, data) = cfg.initial_data()?;
    let template = cfg
        .kinetics
        .ok_or_else(|| Error::Config(vec!["missing [kinetics] section".into()]))?;
    let table = eps_convergence_study(&ConvergenceConfig {
        grid,
        template,
        epsilons: spec.epsilons.clone(),
        u0: data.u0,
        v0: data.v0,
        t_final: required(cfg.numerics.t_final, "numerics.t_final")?,
        dt_eps: spec.dt_eps,
        dt_limit: spec.dt_limit,
        eps_options: StepOptions {
            scheme: cfg.numerics.scheme,
            strang: cfg.numerics.strang,
            ..StepOptions::default()
        },
        limit_options: LimitOptions {
            ignition: cfg.numerics.ignition,
            fixed_point_ignition: cfg.numerics.fixed_point_ignition,
            ..LimitOptions::default()
        },
    })?;
    for r in &table.rows {
        row.metric(format!("l1_error[eps={}]", r.epsilon), r.l1_error);
    }
    if let Some(last) = table.rows.last() {
        row.metric("l1_error", last.l1_error);
    }
    let drift = table.rows.iter().map(|r| r.conservation_drift).fold(0.0, f64::max);
    row.metric("conservation_drift", drift);
    row.verdict("conservation", drift <= CONSERVATION_TOLERANCE);
    if table.rows.len() >= 2 {
        row.verdict("l1_strictly_decreasing", table.strictly_decreasing);
    }
    row.notes.push(format!("trend verdict: {}", table.verdict.name()));
    if let Some(d) = dir {
        ensure_dir(d)?;
        let rows = table.rows.iter().map(|r| vec![r.epsilon, r.l1_error, r.conservation_drift]);
        write_table(&d.join("convergence.csv"), &["epsilon", "l1_error", "conservation_drift"], rows)?;
    }
    Ok(())
}

/// One row per sweep point, in the order of the configured values, plus a
/// trend row when a decreasing metric is named. Points run in parallel and
/// a failing point becomes an error row.
pub fn run_sweep(cfg: &RunConfig, dir: Option<&Path>) -> Result<Vec<ReportRow>> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["missing [sweep] section".into()]))?;
    let name = spec.experiment.name();
    let mut rows: Vec<ReportRow> = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(k, value)| {
            let id = format!("{}={}", spec.parameter, value);
            let sub = dir.map(|d| d.join(format!("run_{k:03}")));
            match sweep_point(cfg, value).and_then(|point| run_single(&point, sub.as_deref(), &id)) {
                Ok(row) => row,
                Err(e) => ReportRow::failed(id, name, &cfg.hash, &e),
            }
        })
        .collect();
    if let (Some(metric), false) = (&spec.decreasing, rows.is_empty()) {
        let mut trend = ReportRow::new("trend", name, &cfg.hash);
        let values: Vec<Option<f64>> = rows.iter().map(|r| r.get(metric)).collect();
        let complete: Vec<f64> = values.iter().flatten().copied().collect();
        if complete.len() != values.len() {
            trend.notes.push(format!("{metric} missing from some rows"));
        }
        trend.verdict(
            format!("{metric}_strictly_decreasing"),
            complete.len() == values.len() && complete.windows(2).all(|w| w[1] < w[0]),
        );
        rows.push(trend);
    }
    Ok(rows)
}
