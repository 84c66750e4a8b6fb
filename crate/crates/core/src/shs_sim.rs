//! Finite-ε integrator for `u_t = Δu + v g_ε(u)/ε`, `v_t = -v g_ε(u)/ε`.
//!
//! Each step integrates the reaction exactly with `u` frozen, moves the
//! consumed reactant into `u`, and then applies implicit diffusion. Both
//! parts conserve `Σ(u + v)` to round-off.

use std::collections::HashMap;

use log::debug;

use crate::error::{Error, Result};
use crate::grid::{Grid, ImplicitDiffusion};
use crate::kinetics::ScalingParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffusionScheme {
    BackwardEuler,
    CrankNicolson,
}

impl DiffusionScheme {
    fn theta(self) -> f64 {
        match self {
            DiffusionScheme::BackwardEuler => 1.0,
            DiffusionScheme::CrankNicolson => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub scheme: DiffusionScheme,
    /// Half reaction, diffusion, half reaction instead of reaction then diffusion.
    pub strang: bool,
    /// Relative change of `Σ(u+v)` that triggers a retry with halved steps.
    pub conservation_tolerance: f64,
    pub max_halvings: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            scheme: DiffusionScheme::BackwardEuler,
            strang: false,
            conservation_tolerance: 1e-12,
            max_halvings: 8,
        }
    }
}

/// Stepper bound to one grid, kinetics and reactant field. Diffusion
/// factorisations are cached per step size.
#[derive(Debug, Clone)]
pub struct EpsIntegrator {
    grid: Grid,
    params: ScalingParams,
    options: StepOptions,
    solvers: HashMap<u64, ImplicitDiffusion>,
    halvings: usize,
}

impl EpsIntegrator {
    pub fn new(grid: &Grid, params: ScalingParams, options: StepOptions) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            grid: grid.clone(),
            params,
            options,
            solvers: HashMap::new(),
            halvings: 0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ScalingParams {
        &self.params
    }

    /// Number of step halvings performed so far.
    pub fn halvings(&self) -> usize {
        self.halvings
    }

    fn solver(&mut self, dt: f64) -> Result<&ImplicitDiffusion> {
        let key = dt.to_bits();
        if !self.solvers.contains_key(&key) {
            let h = self.grid.h();
            let a = self.options.scheme.theta() * dt / (h * h);
            self.solvers.insert(key, ImplicitDiffusion::new(&self.grid, a)?);
        }
        Ok(&self.solvers[&key])
    }

    fn react(&self, state: &mut EpsState, dt: f64) -> Result<()> {
        for (u, v) in state.u.iter_mut().zip(state.v.iter_mut()) {
            let keep = self.params.survival(*u, dt).map_err(|e| Error::Integration {
                t: state.t,
                reason: e.to_string(),
            })?;
            let v_new = *v * keep;
            *u += *v - v_new;
            *v = v_new;
        }
        Ok(())
    }

    fn diffuse(&mut self, state: &mut EpsState, dt: f64) -> Result<()> {
        let scheme = self.options.scheme;
        let grid = self.grid.clone();
        let rhs = match scheme {
            DiffusionScheme::BackwardEuler => state.u.clone(),
            DiffusionScheme::CrankNicolson => {
                let mut lap = vec![0.0; state.u.len()];
                grid.laplacian_undivided(&state.u, &mut lap);
                let a = 0.5 * dt / (grid.h() * grid.h());
                state.u.iter().zip(&lap).map(|(u, l)| u + a * l).collect()
            }
        };
        let t = state.t;
        let solver = self.solver(dt)?;
        solver.solve(&rhs, &mut state.u).map_err(|e| Error::Integration {
            t,
            reason: format!("diffusion solve: {e}"),
        })?;
        Ok(())
    }

    fn raw_step(&mut self, state: &mut EpsState, dt: f64) -> Result<()> {
        if self.options.strang {
            self.react(state, 0.5 * dt)?;
            self.diffuse(state, dt)?;
            self.react(state, 0.5 * dt)?;
        } else {
            self.react(state, dt)?;
            self.diffuse(state, dt)?;
        }
        state.t += dt;
        Ok(())
    }

    /// Advance by `dt`, splitting into halves when the conservation check of
    /// the diffusion solve fails.
    pub fn step_imex(&mut self, state: &EpsState, dt: f64) -> Result<EpsState> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Integration {
                t: state.t,
                reason: format!("time step must be positive, got {dt}"),
            });
        }
        self.step_with_depth(state, dt, 0)
    }

    fn step_with_depth(&mut self, state: &EpsState, dt: f64, depth: usize) -> Result<EpsState> {
        let before = total(state);
        let scale = scale(state);
        let mut next = state.clone();
        let outcome = self.raw_step(&mut next, dt);
        let drift_ok = outcome.is_ok() && (total(&next) - before).abs() <= self.options.conservation_tolerance * scale;
        if drift_ok {
            if next.u.iter().chain(&next.v).any(|x| !x.is_finite()) {
                return Err(Error::Integration {
                    t: state.t,
                    reason: "non-finite field value".into(),
                });
            }
            return Ok(next);
        }
        if depth >= self.options.max_halvings {
            return match outcome {
                Err(e) => Err(e),
                Ok(()) => Err(Error::Integration {
                    t: state.t,
                    reason: format!(
                        "conservation drift {:e} persists after {depth} halvings",
                        (total(&next) - before).abs() / scale
                    ),
                }),
            };
        }
        debug!("halving step {dt} at t = {}", state.t);
        self.halvings += 1;
        let mid = self.step_with_depth(state, 0.5 * dt, depth + 1)?;
        self.step_with_depth(&mid, 0.5 * dt, depth + 1)
    }
}

fn total(state: &EpsState) -> f64 {
    state.u.iter().chain(&state.v).sum()
}

fn scale(state: &EpsState) -> f64 {
    state.u.iter().chain(&state.v).map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE)
}

/// Uniform-data reference: the two reaction ODEs with zero Laplacian,
/// integrated by classical RK4 with `n` steps over `[0, t]`.
pub fn uniform_reference(params: &ScalingParams, u0: f64, v0: f64, t: f64, n: usize) -> Result<(f64, f64)> {
    let rhs = |u: f64, v: f64| -> Result<f64> { Ok(v * params.rate(u)? / params.epsilon) };
    let dt = t / n as f64;
    let (mut u, mut v) = (u0, v0);
    for _ in 0..n {
        let k1 = rhs(u, v)?;
        let k2 = rhs(u + 0.5 * dt * k1, v - 0.5 * dt * k1)?;
        let k3 = rhs(u + 0.5 * dt * k2, v - 0.5 * dt * k2)?;
        let k4 = rhs(u + dt * k3, v - dt * k3)?;
        let du = dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        u += du;
        v -= du;
    }
    Ok((u, v))
}

#[derive(Debug, Clone)]
pub struct EpsRunConfig {
    pub grid: Grid,
    pub params: ScalingParams,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    /// Interval between stored snapshots; the final time is always stored.
    pub snapshot_every: Option<f64>,
    pub options: StepOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsSnapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotDiagnostics {
    pub t: f64,
    /// `|Σ(u+v) - Σ(u⁰+v⁰)| / Σ(|u⁰|+|v⁰|)`.
    pub conservation_drift: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    /// `max(v - v⁰)`, nonpositive when the reactant bound holds.
    pub max_v_excess: f64,
}

#[derive(Debug, Clone)]
pub struct EpsTrajectory {
    pub grid: Grid,
    pub params: ScalingParams,
    pub v0: Vec<f64>,
    pub snapshots: Vec<EpsSnapshot>,
    pub diagnostics: Vec<SnapshotDiagnostics>,
    pub steps: usize,
    pub halvings: usize,
    /// `v` never increased in any cell on any step.
    pub reactant_monotone: bool,
    /// Smallest `u` seen on any step.
    pub min_u_all_steps: f64,
}

impl EpsTrajectory {
    pub fn final_snapshot(&self) -> &EpsSnapshot {
        self.snapshots.last().expect("trajectory always holds the initial state")
    }

    pub fn max_conservation_drift(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.conservation_drift).fold(0.0, f64::max)
    }
}

fn diagnostics_for(state: &EpsState, v0: &[f64], initial_total: f64, initial_scale: f64) -> SnapshotDiagnostics {
    let fold = |it: &mut dyn Iterator<Item = f64>, init: f64, f: fn(f64, f64) -> f64| it.fold(init, f);
    SnapshotDiagnostics {
        t: state.t,
        conservation_drift: (total(state) - initial_total).abs() / initial_scale,
        min_u: fold(&mut state.u.iter().copied(), f64::INFINITY, f64::min),
        max_u: fold(&mut state.u.iter().copied(), f64::NEG_INFINITY, f64::max),
        min_v: fold(&mut state.v.iter().copied(), f64::INFINITY, f64::min),
        max_v_excess: fold(&mut state.v.iter().zip(v0).map(|(v, v0)| v - v0), f64::NEG_INFINITY, f64::max),
    }
}

pub fn run_eps(config: &EpsRunConfig) -> Result<EpsTrajectory> {
    let n = config.grid.len();
    let mut problems = config.params.problems();
    if config.u0.len() != n || config.v0.len() != n {
        problems.push(format!(
            "initial fields must have {n} cells, got u0 {} and v0 {}",
            config.u0.len(),
            config.v0.len()
        ));
    }
    if !(config.dt.is_finite() && config.dt > 0.0) {
        problems.push(format!("dt must be positive, got {}", config.dt));
    }
    if !(config.t_final.is_finite() && config.t_final >= 0.0) {
        problems.push(format!("final time must be non-negative, got {}", config.t_final));
    }
    if let Some(every) = config.snapshot_every {
        if !(every.is_finite() && every > 0.0) {
            problems.push(format!("snapshot interval must be positive, got {every}"));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    let mut integrator = EpsIntegrator::new(&config.grid, config.params, config.options)?;
    let mut state = EpsState {
        u: config.u0.clone(),
        v: config.v0.clone(),
        t: 0.0,
    };
    let initial_total = total(&state);
    let initial_scale = scale(&state);
    let mut snapshots = vec![EpsSnapshot {
        t: 0.0,
        u: state.u.clone(),
        v: state.v.clone(),
    }];
    let mut diagnostics = vec![diagnostics_for(&state, &config.v0, initial_total, initial_scale)];
    let mut reactant_monotone = true;
    let mut min_u_all = diagnostics[0].min_u;

    let targets = output_times(config.t_final, config.snapshot_every);
    let mut steps = 0;
    for &target in &targets {
        while state.t < target {
            let remaining = target - state.t;
            // Land exactly on the target instead of leaving a sliver step.
            let dt = if remaining <= config.dt * (1.0 + 1e-9) {
                remaining
            } else {
                config.dt
            };
            let next = integrator.step_imex(&state, dt)?;
            reactant_monotone &= next.v.iter().zip(&state.v).all(|(new, old)| new <= old);
            min_u_all = next.u.iter().copied().fold(min_u_all, f64::min);
            state = next;
            if remaining <= config.dt * (1.0 + 1e-9) {
                state.t = target;
            }
            steps += 1;
        }
        snapshots.push(EpsSnapshot {
            t: state.t,
            u: state.u.clone(),
            v: state.v.clone(),
        });
        diagnostics.push(diagnostics_for(&state, &config.v0, initial_total, initial_scale));
    }
    Ok(EpsTrajectory {
        grid: config.grid.clone(),
        params: config.params,
        v0: config.v0.clone(),
        snapshots,
        diagnostics,
        steps,
        halvings: integrator.halvings(),
        reactant_monotone,
        min_u_all_steps: min_u_all,
    })
}

/// Output instants after 0, ending exactly at `t_final`.
pub(crate) fn output_times(t_final: f64, every: Option<f64>) -> Vec<f64> {
    if t_final <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    if let Some(every) = every {
        let count = (t_final / every * (1.0 - 1e-12)).floor() as usize;
        out.extend((1..=count).map(|k| k as f64 * every).filter(|&t| t < t_final * (1.0 - 1e-12)));
    }
    out.push(t_final);
    out
}
