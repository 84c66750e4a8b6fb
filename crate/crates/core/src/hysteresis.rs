//! Limit problem `u_t - v⁰χ_t = Δu` with the running-maximum hysteresis
//! `χ = H(max_{s<t} u)`, solved in enthalpy form `e = u - v⁰χ`.
//!
//! Two ignition rules are available. Under the instant rule a step solves
//! the heat equation implicitly with `χ` frozen, then ignites every unburnt
//! cell whose provisional temperature reached 0 and adds the latent release
//! `v⁰` to it. Under the pinned rule (the default) an ignited cell is held
//! at `u = 0` inside the implicit solve and releases exactly the heat it
//! conducts away, until its reserve `v⁰` is spent; its released fraction is
//! tracked in `burnt`. Burnt cells stay burnt under both rules.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ImplicitDiffusion};
use crate::kinetics::{ScalingParams, Verdict};
use crate::shs_sim::{output_times, run_eps, EpsRunConfig, EpsTrajectory, StepOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub u: Vec<f64>,
    /// Running maximum of `u` over the stored steps.
    pub m: Vec<f64>,
    pub chi: Vec<u8>,
    /// Fraction of the cell's latent heat already released. Equals `χ`
    /// under instant ignition; lags it while an igniting cell is held at 0.
    pub burnt: Vec<f64>,
    pub v0: Vec<f64>,
    pub t: f64,
}

impl LimitState {
    /// Initial state `u = u⁰ + v⁰H(u⁰)` with the closed threshold `H(0) = 1`.
    pub fn from_initial(u0: &[f64], v0: &[f64]) -> Result<Self> {
        check_fields(u0, v0)?;
        let chi: Vec<u8> = u0.iter().map(|&u| (u >= 0.0) as u8).collect();
        let u: Vec<f64> = u0
            .iter()
            .zip(v0)
            .zip(&chi)
            .map(|((&u, &v), &c)| u + v * c as f64)
            .collect();
        Ok(Self {
            m: u.clone(),
            u,
            burnt: chi.iter().map(|&c| c as f64).collect(),
            chi,
            v0: v0.to_vec(),
            t: 0.0,
        })
    }

    /// State with prescribed temperature, ignition indicator and released
    /// fraction, used to start from an exact wave where the burnt region
    /// already sits at `u = 0`.
    pub fn from_parts(u: &[f64], chi: &[u8], burnt: &[f64], v0: &[f64]) -> Result<Self> {
        check_fields(u, v0)?;
        let mut problems = Vec::new();
        if chi.len() != u.len() || burnt.len() != u.len() {
            problems.push(format!(
                "chi has {} cells and burnt has {}, u has {}",
                chi.len(),
                burnt.len(),
                u.len()
            ));
        } else if chi.iter().zip(burnt).any(|(&c, &b)| !(0.0..=1.0).contains(&b) || (c == 0 && b != 0.0)) {
            problems.push("burnt fraction must lie in [0,1] and vanish where chi = 0".into());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let state = Self {
            u: u.to_vec(),
            m: u.to_vec(),
            chi: chi.to_vec(),
            burnt: burnt.to_vec(),
            v0: v0.to_vec(),
            t: 0.0,
        };
        let bad = consistency_violations(&state);
        if bad > 0 {
            return Err(Error::Validation(vec![format!(
                "{bad} cells violate chi = 1 <=> u >= 0 in the supplied state"
            )]));
        }
        Ok(state)
    }

    /// State built from a temperature profile whose burnt region already
    /// sits at `u ≥ 0`, as for an exact wave. The first unburnt cell next to
    /// the burnt region along each row is started as an igniting cell held at
    /// `u = 0` with the same enthalpy, which keeps a marginal front moving.
    pub fn from_front_profile(grid: &Grid, u: &[f64], v0: &[f64]) -> Result<Self> {
        check_fields(u, v0)?;
        if u.len() != grid.len() {
            return Err(Error::Validation(vec![format!(
                "profile has {} cells, grid has {}",
                u.len(),
                grid.len()
            )]));
        }
        let mut u = u.to_vec();
        let mut chi: Vec<u8> = u.iter().map(|&x| (x >= 0.0) as u8).collect();
        let mut burnt: Vec<f64> = chi.iter().map(|&c| c as f64).collect();
        let seeds: Vec<usize> = (0..u.len())
            .filter(|&k| {
                chi[k] == 0
                    && v0[k] > 0.0
                    && -u[k] < v0[k]
                    && grid.neighbours(k).iter().any(|&n| chi[n] == 1)
            })
            .collect();
        for k in seeds {
            burnt[k] = -u[k] / v0[k];
            chi[k] = 1;
            u[k] = 0.0;
        }
        Self::from_parts(&u, &chi, &burnt, v0)
    }

    /// Enthalpy `e = u - v⁰β` with `β` the released fraction.
    pub fn enthalpy(&self) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.v0)
            .zip(&self.burnt)
            .map(|((u, v), b)| u - v * b)
            .collect()
    }

    pub fn burnt_cells(&self) -> usize {
        self.chi.iter().map(|&c| c as usize).sum()
    }
}

fn check_fields(u: &[f64], v0: &[f64]) -> Result<()> {
    let mut problems = Vec::new();
    if u.len() != v0.len() {
        problems.push(format!("u has {} cells, v0 has {}", u.len(), v0.len()));
    }
    if u.iter().any(|x| !x.is_finite()) {
        problems.push("u must be finite".into());
    }
    if v0.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        problems.push("v0 must be finite and non-negative".into());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

/// Number of cells where `χ = 1` and `m ≥ 0` disagree.
pub fn consistency_violations(state: &LimitState) -> usize {
    state
        .chi
        .iter()
        .zip(&state.m)
        .filter(|(&c, &m)| (c == 1) != (m >= 0.0))
        .count()
}

/// How an igniting cell releases its latent heat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IgnitionRule {
    /// The whole `v⁰` is added in the step where the provisional
    /// temperature reaches 0.
    Instant,
    /// An ignited cell releases only what holds it at `u = 0` until its
    /// reserve is spent; a previously ignited cell heated above 0 releases
    /// the rest at once.
    Pinned,
}

impl IgnitionRule {
    pub fn name(self) -> &'static str {
        match self {
            IgnitionRule::Instant => "instant",
            IgnitionRule::Pinned => "pinned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    pub ignition: IgnitionRule,
    /// Instant rule only: re-solve with the latent source and re-test
    /// ignition until no new cell ignites within the step.
    pub fixed_point_ignition: bool,
    /// A burnt cell dropping from `u ≥ 0` below `-monotone_tolerance` marks
    /// the run as outside the monotone regime.
    pub monotone_tolerance: f64,
    /// Turn the monotone-regime flag into an error.
    pub strict_monotone: bool,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            ignition: IgnitionRule::Pinned,
            fixed_point_ignition: false,
            monotone_tolerance: 1e-8,
            strict_monotone: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub ignited: usize,
    pub monotone_violations: usize,
}

#[derive(Debug, Clone)]
pub struct LimitSolver {
    grid: Grid,
    options: LimitOptions,
    solvers: HashMap<u64, ImplicitDiffusion>,
}

impl LimitSolver {
    pub fn new(grid: &Grid, options: LimitOptions) -> Self {
        Self {
            grid: grid.clone(),
            options,
            solvers: HashMap::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn solver(&mut self, dt: f64) -> Result<&ImplicitDiffusion> {
        let key = dt.to_bits();
        if !self.solvers.contains_key(&key) {
            let h = self.grid.h();
            self.solvers.insert(key, ImplicitDiffusion::new(&self.grid, dt / (h * h))?);
        }
        Ok(&self.solvers[&key])
    }

    /// Implicit step with every burning cell held at `u = 0`. The release a
    /// held cell needs is read off its row of the linear system. A cell that
    /// would need a negative release (heated from outside) or more than its
    /// reserve releases the reserve as a fixed source instead; in the latter
    /// case the front has crossed the cell and its unburnt neighbours start
    /// burning, provided they can be held at 0 from their own reserve.
    /// Returns the number of newly ignited cells.
    fn pinned_release(
        &mut self,
        state: &LimitState,
        u: &mut [f64],
        chi: &mut [u8],
        burnt: &mut [f64],
        dt: f64,
    ) -> Result<usize> {
        let n = state.u.len();
        let grid = self.grid.clone();
        let solver = self.solver(dt)?;
        let a = solver.coefficient();
        let mut pinned: Vec<bool> = (0..n).map(|k| state.chi[k] == 1 && state.burnt[k] < 1.0).collect();
        if !pinned.iter().any(|&p| p) {
            solver.solve(&state.u, u)?;
            return Ok(0);
        }
        let mut rhs = state.u.clone();
        let mut exhausted = vec![false; n];
        // Cells entered by the front this step; `false` once rejected.
        let mut entered: Vec<Option<bool>> = vec![None; n];
        let mut lap = vec![0.0; n];
        for _ in 0..=2 * n {
            solver.solve_pinned(&rhs, &pinned, u)?;
            grid.laplacian_undivided(u, &mut lap);
            let mut changed = false;
            for k in 0..n {
                if !pinned[k] {
                    continue;
                }
                let need = -a * lap[k] - rhs[k];
                let reserve = state.v0[k] * (1.0 - state.burnt[k]);
                if entered[k] == Some(true) {
                    if need < 0.0 || need > reserve {
                        // Either hot enough to ignite on its own or too cold
                        // to be held at 0: leave it to the threshold test.
                        pinned[k] = false;
                        entered[k] = Some(false);
                        changed = true;
                    }
                    continue;
                }
                if need < 0.0 || need > reserve {
                    pinned[k] = false;
                    exhausted[k] = true;
                    rhs[k] += reserve;
                    changed = true;
                    if need > reserve {
                        for j in grid.neighbours(k) {
                            if state.chi[j] == 0 && entered[j].is_none() {
                                entered[j] = Some(true);
                                pinned[j] = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut fresh = 0;
        for k in 0..n {
            if exhausted[k] {
                burnt[k] = 1.0;
            } else if pinned[k] {
                let need = (-a * lap[k] - rhs[k]).max(0.0);
                burnt[k] = (burnt[k] + need / state.v0[k]).min(1.0);
                u[k] = 0.0;
                if chi[k] == 0 {
                    chi[k] = 1;
                    fresh += 1;
                }
            }
        }
        Ok(fresh)
    }

    pub fn step_limit(&mut self, state: &LimitState, dt: f64) -> Result<(LimitState, StepInfo)> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Integration {
                t: state.t,
                reason: format!("time step must be positive, got {dt}"),
            });
        }
        let n = state.u.len();
        let options = self.options;
        let solver = self.solver(dt)?;
        let mut u = vec![0.0; n];
        if options.ignition == IgnitionRule::Instant {
            solver.solve(&state.u, &mut u)?;
        }
        let mut chi = state.chi.clone();
        let mut burnt = state.burnt.clone();
        let mut ignited = 0;
        match options.ignition {
            IgnitionRule::Instant if options.fixed_point_ignition => {
                let mut rhs = state.u.clone();
                loop {
                    let mut fresh = 0;
                    for k in 0..n {
                        if chi[k] == 0 && u[k] >= 0.0 {
                            chi[k] = 1;
                            burnt[k] = 1.0;
                            rhs[k] += state.v0[k];
                            fresh += 1;
                        }
                    }
                    if fresh == 0 {
                        break;
                    }
                    ignited += fresh;
                    solver.solve(&rhs, &mut u)?;
                }
            }
            IgnitionRule::Instant => {
                for k in 0..n {
                    if chi[k] == 0 && u[k] >= 0.0 {
                        chi[k] = 1;
                        burnt[k] = 1.0;
                        u[k] += state.v0[k];
                        ignited += 1;
                    }
                }
            }
            IgnitionRule::Pinned => {
                ignited += self.pinned_release(state, &mut u, &mut chi, &mut burnt, dt)?;
                for k in 0..n {
                    if chi[k] == 0 && u[k] >= 0.0 {
                        chi[k] = 1;
                        ignited += 1;
                    }
                }
            }
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Integration {
                t: state.t,
                reason: "non-finite temperature".into(),
            });
        }
        let tol = options.monotone_tolerance;
        let monotone_violations = (0..n)
            .filter(|&k| state.chi[k] == 1 && state.u[k] >= 0.0 && u[k] < -tol)
            .count();
        if monotone_violations > 0 && options.strict_monotone {
            return Err(Error::Invariant(format!(
                "outside monotone regime at t = {}: {monotone_violations} burnt cells cooled below 0",
                state.t
            )));
        }
        let m: Vec<f64> = state.m.iter().zip(&u).map(|(&m, &u)| m.max(u)).collect();
        if chi.iter().zip(&state.chi).any(|(new, old)| new < old) {
            return Err(Error::Invariant("chi decreased".into()));
        }
        Ok((
            LimitState {
                u,
                m,
                chi,
                burnt,
                v0: state.v0.clone(),
                t: state.t + dt,
            },
            StepInfo {
                ignited,
                monotone_violations,
            },
        ))
    }
}

/// Cells touched by the stencil of any cell whose `χ` changed between the
/// two states.
fn ignition_neighbourhood(grid: &Grid, prev: &LimitState, next: &LimitState) -> Vec<bool> {
    let n = prev.chi.len();
    let mut flip = vec![0.0; n];
    for k in 0..n {
        if prev.chi[k] != next.chi[k] || prev.burnt[k] != next.burnt[k] {
            flip[k] = 1.0;
        }
    }
    let mut lap = vec![0.0; n];
    grid.laplacian_undivided(&flip, &mut lap);
    (0..n).map(|k| flip[k] != 0.0 || lap[k] != 0.0).collect()
}

/// `max |(eⁿ⁺¹ - eⁿ)/dt - Δuⁿ⁺¹|` over cells away from this step's ignitions.
pub fn enthalpy_residual(grid: &Grid, prev: &LimitState, next: &LimitState, dt: f64) -> f64 {
    let e0 = prev.enthalpy();
    let e1 = next.enthalpy();
    let lap = grid.laplacian(&next.u);
    let skip = ignition_neighbourhood(grid, prev, next);
    (0..e0.len())
        .filter(|&k| !skip[k])
        .map(|k| ((e1[k] - e0[k]) / dt - lap[k]).abs())
        .fold(0.0, f64::max)
}

/// `min ((uⁿ⁺¹ - uⁿ)/dt - Δuⁿ⁺¹)` over cells away from this step's ignitions.
pub fn supercaloric_defect(grid: &Grid, prev: &LimitState, next: &LimitState, dt: f64) -> f64 {
    let lap = grid.laplacian(&next.u);
    let skip = ignition_neighbourhood(grid, prev, next);
    (0..lap.len())
        .filter(|&k| !skip[k])
        .map(|k| (next.u[k] - prev.u[k]) / dt - lap[k])
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSnapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub m: Vec<f64>,
    pub chi: Vec<u8>,
    pub burnt: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LimitTrajectory {
    pub grid: Grid,
    pub v0: Vec<f64>,
    pub snapshots: Vec<LimitSnapshot>,
    pub steps: usize,
    /// `χ` never decreased in any cell on any step.
    pub chi_monotone: bool,
    /// Total count over all steps of cells violating `χ = 1 ⟺ m ≥ 0`.
    pub consistency_violations: usize,
    /// Time of the first monotone-regime violation.
    pub outside_monotone_regime: Option<f64>,
    pub max_enthalpy_residual: f64,
    pub min_supercaloric: f64,
}

impl LimitTrajectory {
    pub fn final_snapshot(&self) -> &LimitSnapshot {
        self.snapshots.last().expect("trajectory always holds the initial state")
    }
}

#[derive(Debug, Clone)]
pub struct LimitRunConfig {
    pub grid: Grid,
    pub initial: LimitState,
    pub t_final: f64,
    pub dt: f64,
    pub snapshot_every: Option<f64>,
    pub options: LimitOptions,
    /// Evaluate the enthalpy and supercaloric residuals on every step.
    pub audit_residuals: bool,
}

fn snapshot(state: &LimitState) -> LimitSnapshot {
    LimitSnapshot {
        t: state.t,
        u: state.u.clone(),
        m: state.m.clone(),
        chi: state.chi.clone(),
        burnt: state.burnt.clone(),
    }
}

pub fn run_limit(config: &LimitRunConfig) -> Result<LimitTrajectory> {
    let mut problems = Vec::new();
    if config.initial.u.len() != config.grid.len() {
        problems.push(format!(
            "initial state has {} cells, grid has {}",
            config.initial.u.len(),
            config.grid.len()
        ));
    }
    if !(config.dt.is_finite() && config.dt > 0.0) {
        problems.push(format!("dt must be positive, got {}", config.dt));
    }
    if !(config.t_final.is_finite() && config.t_final >= 0.0) {
        problems.push(format!("final time must be non-negative, got {}", config.t_final));
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    let mut solver = LimitSolver::new(&config.grid, config.options);
    let mut state = config.initial.clone();
    let mut snapshots = vec![snapshot(&state)];
    let mut chi_monotone = true;
    let mut violations = consistency_violations(&state);
    let mut outside = None;
    let mut max_residual: f64 = 0.0;
    let mut min_super = f64::INFINITY;
    let mut steps = 0;
    for target in output_times(config.t_final, config.snapshot_every) {
        while state.t < target {
            let remaining = target - state.t;
            let last = remaining <= config.dt * (1.0 + 1e-9);
            let dt = if last { remaining } else { config.dt };
            let (mut next, info) = solver.step_limit(&state, dt)?;
            if last {
                next.t = target;
            }
            chi_monotone &= next.chi.iter().zip(&state.chi).all(|(a, b)| a >= b);
            violations += consistency_violations(&next);
            if info.monotone_violations > 0 && outside.is_none() {
                outside = Some(state.t);
            }
            if config.audit_residuals {
                max_residual = max_residual.max(enthalpy_residual(&config.grid, &state, &next, dt));
                min_super = min_super.min(supercaloric_defect(&config.grid, &state, &next, dt));
            }
            state = next;
            steps += 1;
        }
        snapshots.push(snapshot(&state));
    }
    Ok(LimitTrajectory {
        grid: config.grid.clone(),
        v0: config.initial.v0.clone(),
        snapshots,
        steps,
        chi_monotone,
        consistency_violations: violations,
        outside_monotone_regime: outside,
        max_enthalpy_residual: max_residual,
        min_supercaloric: min_super,
    })
}

/// First time each cell reaches `u ≥ 0`, linearly interpolated between
/// consecutive samples; `+∞` where it never does.
pub fn ignition_time_map(times: &[f64], fields: &[&[f64]]) -> Vec<f64> {
    let Some(first) = fields.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|k| {
            if first[k] >= 0.0 {
                return times[0];
            }
            for s in 1..fields.len() {
                let (a, b) = (fields[s - 1][k], fields[s][k]);
                if b >= 0.0 {
                    let r = -a / (b - a);
                    return times[s - 1] + r * (times[s] - times[s - 1]);
                }
            }
            f64::INFINITY
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub grid: Grid,
    pub template: ScalingParams,
    pub epsilons: Vec<f64>,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub t_final: f64,
    pub dt_eps: f64,
    pub dt_limit: f64,
    pub eps_options: StepOptions,
    pub limit_options: LimitOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub l1_error: f64,
    pub conservation_drift: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
    /// Decreasing trend allowing at most one inversion.
    pub verdict: Verdict,
    pub limit: LimitTrajectory,
    pub eps_runs: Vec<EpsTrajectory>,
}

pub fn l1_distance(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * grid.cell_volume()
}

/// L¹ distance at the final time between each ε-solution and the limit
/// solution from the same initial data. The ε runs execute in parallel.
pub fn eps_convergence_study(config: &ConvergenceConfig) -> Result<ConvergenceTable> {
    if config.epsilons.iter().any(|&e| !(e > 0.0)) || config.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(vec![
            "epsilon list must be positive and strictly decreasing".into(),
        ]));
    }
    if config.grid.dim() != 1 {
        return Err(Error::Config(vec!["convergence study requires a 1D grid".into()]));
    }
    let limit = run_limit(&LimitRunConfig {
        grid: config.grid.clone(),
        initial: LimitState::from_initial(&config.u0, &config.v0)?,
        t_final: config.t_final,
        dt: config.dt_limit,
        snapshot_every: None,
        options: config.limit_options,
        audit_residuals: false,
    })?;
    let eps_runs: Vec<EpsTrajectory> = config
        .epsilons
        .par_iter()
        .map(|&eps| {
            run_eps(&EpsRunConfig {
                grid: config.grid.clone(),
                params: config.template.with_epsilon(eps),
                u0: config.u0.clone(),
                v0: config.v0.clone(),
                t_final: config.t_final,
                dt: config.dt_eps,
                snapshot_every: None,
                options: config.eps_options,
            })
        })
        .collect::<Result<_>>()?;
    let reference = &limit.final_snapshot().u;
    let rows: Vec<ConvergenceRow> = config
        .epsilons
        .iter()
        .zip(&eps_runs)
        .map(|(&epsilon, run)| ConvergenceRow {
            epsilon,
            l1_error: l1_distance(&config.grid, &run.final_snapshot().u, reference),
            conservation_drift: run.max_conservation_drift(),
        })
        .collect();
    let strictly_decreasing = rows.windows(2).all(|w| w[1].l1_error < w[0].l1_error);
    let inversions = rows.windows(2).filter(|w| w[1].l1_error >= w[0].l1_error).count();
    let verdict = if rows.len() < 2 {
        Verdict::Vacuous
    } else if inversions <= 1 && rows.last().unwrap().l1_error < rows[0].l1_error {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ConvergenceTable {
        rows,
        strictly_decreasing,
        verdict,
        limit,
        eps_runs,
    })
}
