//! Acceptance battery. Prints one line per criterion and exits non-zero if
//! any criterion fails.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use shs_core::diagnostics::{
    clearing_out_check, conservation_audit, l2_bound_audit_trajectory, planarity_check, pulsation_stats, Affine,
    ClearingRegion, ClearingSettings, ClearingVerdict, FrontVerdict,
};
use shs_core::grid::{Boundary, Grid};
use shs_core::hysteresis::{
    eps_convergence_study, run_limit, ConvergenceConfig, IgnitionRule, LimitOptions, LimitRunConfig, LimitState,
};
use shs_core::initial::{build_initial_data, ReactantProfile, SampleTable, TemperatureProfile};
use shs_core::kinetics::ScalingParams;
use shs_core::shs_sim::{run_eps, DiffusionScheme, EpsRunConfig, EpsTrajectory, StepOptions};
use shs_core::stability::{find_roots, verify_ode, DispersionProblem};
use shs_core::waves::{pulsating_wave, solve_a, PulsatingConfig, TravelingWave};

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if elapsed > budget {
        out.pass = false;
        out.detail.push_str(&format!("; over budget of {budget:?}"));
    }
    out.detail.push_str(&format!("; {:.2} s", elapsed.as_secs_f64()));
    out
}

/// Closed-form wave written out independently of the library.
fn oracle_profile(c: f64, m: f64, a: f64, s: f64) -> (f64, f64) {
    let s1 = -c * m;
    let s0 = s1 - ((m - a) / m).ln() / c;
    if s <= s1 {
        (m * (1.0 - (c * (s - s0)).exp()), -m * c * (c * (s - s0)).exp())
    } else if s <= 0.0 {
        (((c * s).exp() - 1.0 - c * s) / (c * c), ((c * s).exp() - 1.0) / c)
    } else {
        (0.0, 0.0)
    }
}

fn criterion_1() -> Outcome {
    let mut residual: f64 = 0.0;
    let mut jump: f64 = 0.0;
    let mut oracle_jump: f64 = 0.0;
    for (c, m) in [(1.0, 1.0), (2.0, 1.0), (0.5, 2.0)] {
        let wave = match TravelingWave::new(c, m) {
            Ok(w) => w,
            Err(e) => {
                return Outcome {
                    pass: false,
                    detail: format!("({c}, {m}): {e}"),
                }
            }
        };
        let a = solve_a(c, m).unwrap();
        // M - A = (1 - e^{-c0² M}) / c0².
        residual = residual.max((m - a - (1.0 - (-c * c * m).exp()) / (c * c)).abs());
        jump = jump.max(wave.branch_jumps().iter().map(|j| j.abs()).fold(0.0, f64::max));
        // Both branch formulas evaluated at the joints.
        let s1 = -c * m;
        let s0 = s1 - ((m - a) / m).ln() / c;
        let outer = (m * (1.0 - (c * (s1 - s0)).exp()), -m * c * (c * (s1 - s0)).exp());
        let middle = (((c * s1).exp() - 1.0 - c * s1) / (c * c), ((c * s1).exp() - 1.0) / c);
        oracle_jump = oracle_jump
            .max((outer.0 - middle.0).abs())
            .max((outer.1 - middle.1).abs() / c.max(1.0));
        for s in [s1 - 0.5, 0.5 * s1, 0.25] {
            let (v, d) = oracle_profile(c, m, a, s);
            let (lv, ld) = wave.profile_with_slope(s);
            oracle_jump = oracle_jump.max((v - lv).abs()).max((d - ld).abs());
        }
    }
    Outcome {
        pass: residual <= 1e-12 && jump <= 1e-10 && oracle_jump <= 1e-10,
        detail: format!("matching residual {residual:.2e}, branch jumps {jump:.2e}, oracle mismatch {oracle_jump:.2e}"),
    }
}

fn criterion_2() -> Outcome {
    // The right wall sits where the exact profile is flat to e^-13.
    let (lo, n) = (-2.0, 4000);
    let h = 16.0 / n as f64;
    let grid = Grid::line(n, h, Boundary::Neumann).unwrap();
    let exact = |x: f64, t: f64| -((-(t - x).exp_m1()).max(0.0));
    let xs = grid.centers_x();
    let u0: Vec<f64> = xs.iter().map(|&x| exact(x + lo, 0.0)).collect();
    let initial = LimitState::from_front_profile(&grid, &u0, &vec![1.0; n]).unwrap();
    let traj = run_limit(&LimitRunConfig {
        grid: grid.clone(),
        initial,
        t_final: 1.0,
        dt: h * h,
        snapshot_every: Some(0.125),
        options: LimitOptions::default(),
        audit_residuals: false,
    })
    .unwrap();
    let mut err: f64 = 0.0;
    let (mut ts, mut fronts) = (Vec::new(), Vec::new());
    for snap in &traj.snapshots {
        for (k, &x) in xs.iter().enumerate() {
            err = err.max((snap.u[k] - exact(x + lo, snap.t)).abs());
        }
        let burnt = snap.chi.iter().filter(|&&c| c == 1).count();
        ts.push(snap.t);
        fronts.push(lo + burnt as f64 * h);
    }
    let speed = slope(&ts, &fronts);
    Outcome {
        pass: (speed - 1.0).abs() <= 0.02 && err <= 0.03,
        detail: format!("front speed {speed:.5}, profile error {err:.4}"),
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn criterion_3(suite: &mut Vec<(String, EpsTrajectory, f64)>) -> Outcome {
    let n = 1000;
    let grid = Grid::line(n, 4.0 / n as f64, Boundary::Neumann).unwrap();
    let profile = TemperatureProfile::Step {
        x0: 0.5,
        width: 0.5,
        left: 0.5,
        right: -0.5,
    };
    let data = build_initial_data(&grid, &profile, &ReactantProfile::Constant(1.0), 0.0, 1.0).unwrap();
    let table = eps_convergence_study(&ConvergenceConfig {
        grid,
        template: ScalingParams::matkowsky_sivashinsky(0.1),
        epsilons: vec![0.1, 0.05, 0.025],
        u0: data.u0,
        v0: data.v0,
        t_final: 0.5,
        dt_eps: 1e-4,
        dt_limit: 1e-4,
        eps_options: StepOptions::default(),
        limit_options: LimitOptions::default(),
    })
    .unwrap();
    let errors: Vec<String> = table.rows.iter().map(|r| format!("{:.4e}", r.l1_error)).collect();
    for (row, run) in table.rows.iter().zip(table.eps_runs) {
        suite.push((format!("convergence eps={}", row.epsilon), run, 1.0));
    }
    Outcome {
        pass: table.strictly_decreasing && table.rows.len() == 3,
        detail: format!("L1 errors [{}]", errors.join(", ")),
    }
}

fn eps_run(grid: Grid, params: ScalingParams, u0: Vec<f64>, v0: Vec<f64>, t: f64, dt: f64, opts: StepOptions) -> EpsTrajectory {
    run_eps(&EpsRunConfig {
        grid,
        params,
        u0,
        v0,
        t_final: t,
        dt,
        snapshot_every: Some(t / 10.0),
        options: opts,
    })
    .unwrap()
}

/// Extra ε-runs covering other schemes, kinetics and dimensions.
fn extra_suite(suite: &mut Vec<(String, EpsTrajectory, f64)>) {
    let line = Grid::line(400, 0.01, Boundary::Neumann).unwrap();
    let u0 = line.sample(|x, _| if x < 0.5 { 0.3 } else { -0.6 });
    suite.push((
        "ignition v0=1".into(),
        eps_run(line.clone(), ScalingParams::matkowsky_sivashinsky(0.05), u0.clone(), vec![1.0; 400], 0.5, 1e-4, StepOptions::default()),
        1.0,
    ));
    let v0 = line.sample(|x, _| 1.0 + 0.5 * (std::f64::consts::TAU * x).sin());
    suite.push((
        "crank-nicolson strang".into(),
        eps_run(
            line.clone(),
            ScalingParams::matkowsky_sivashinsky(0.1),
            u0,
            v0,
            0.3,
            2e-4,
            StepOptions {
                scheme: DiffusionScheme::CrankNicolson,
                strang: true,
                ..StepOptions::default()
            },
        ),
        1.5,
    ));
    let plane = Grid::plane(40, 20, 0.025, Boundary::Periodic).unwrap();
    let u0 = plane.sample(|x, y| if x < 0.3 + 0.1 * y { 0.2 } else { -0.4 });
    suite.push((
        "threshold 2d periodic".into(),
        eps_run(plane, ScalingParams::threshold(0.1, 0.5, 0.5), u0, vec![1.0; 800], 0.2, 2e-4, StepOptions::default()),
        1.0,
    ));
}

fn criterion_4(suite: &[(String, EpsTrajectory, f64)]) -> Outcome {
    let mut worst = (0.0f64, String::new());
    for (name, traj, _) in suite {
        let drift = conservation_audit(traj).relative.max(traj.max_conservation_drift());
        if drift >= worst.0 {
            worst = (drift, name.clone());
        }
    }
    Outcome {
        pass: worst.0 <= 1e-10 && !suite.is_empty(),
        detail: format!("{} trajectories, worst relative drift {:.2e} ({})", suite.len(), worst.0, worst.1),
    }
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut counts = Vec::new();
    for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let search = find_roots(&DispersionProblem::new(c, (0.0, 8.0), (-8.0, 8.0)).unwrap(), 32).unwrap();
        let ok = search.roots.len() == 1 && search.roots[0].value.norm() <= 1e-8;
        pass &= ok;
        counts.push(format!("c={c}: {}", search.roots.len()));
    }
    let lambda = Complex64::new(1.0, 0.0);
    let fine = verify_ode(lambda, 1.0, 20.0, 1e-3).unwrap();
    let coarse = verify_ode(lambda, 1.0, 20.0, 2e-3).unwrap();
    let order = (coarse / fine).log2();
    pass &= fine <= 1e-5 && (order - 2.0).abs() <= 0.1;
    Outcome {
        pass,
        detail: format!("roots [{}], ode residual {fine:.2e}, order {order:.3}", counts.join(", ")),
    }
}

fn sine_samples(nx: usize, amplitude: f64) -> Vec<f64> {
    (0..nx)
        .map(|j| 1.0 + amplitude * (std::f64::consts::TAU * j as f64 / nx as f64).sin())
        .collect()
}

fn criterion_6() -> Outcome {
    let v0 = sine_samples(64, 0.5);
    let mu0 = v0.iter().sum::<f64>() / v0.len() as f64;
    let cfg = PulsatingConfig::new(1.0, 16.0, v0, 2000);
    let wave = match pulsating_wave(&cfg) {
        Ok(w) => w,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: e.to_string(),
            }
        }
    };
    let r = &wave.report;
    let stats = pulsation_stats(&wave.trace, 1e-3).unwrap();
    let period = stats.period.unwrap_or(f64::NAN);
    let pass = r.residual <= cfg.tolerance
        && r.lattice_shift_residual <= 1e-3
        && (wave.mu0 - mu0).abs() <= 1e-12
        && (mu0 - 1.0).abs() <= 1e-12
        && r.far_field_error <= 0.02
        && stats.verdict == FrontVerdict::Pulsating
        && (period - 1.0).abs() <= 0.05;
    Outcome {
        pass,
        detail: format!(
            "residual {:.2e}, lattice shift {:.2e}, far field {:.4}, verdict {}, period {period:.4}",
            r.residual,
            r.lattice_shift_residual,
            r.far_field_error,
            stats.verdict.name()
        ),
    }
}

fn criterion_7() -> Outcome {
    let nx = 64;
    let mut cfg = PulsatingConfig::new(1.0, 16.0, vec![1.0; nx], 2000);
    // A lateral seed perturbation that the construction has to remove.
    cfg.seed_perturbation = 0.05;
    let wave = match pulsating_wave(&cfg) {
        Ok(w) => w,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: e.to_string(),
            }
        }
    };
    let shifts: Vec<f64> = (1..nx).map(|k| k as f64 / nx as f64).collect();
    let planar = planarity_check(&wave.w_tilde, nx, &shifts, 1e-3).unwrap();
    let stats = pulsation_stats(&wave.trace, 1e-3).unwrap();
    let amplitude = stats.amplitude / stats.mean_speed.abs();
    Outcome {
        pass: planar.verdict == FrontVerdict::Planar && planar.relative_sup <= 1e-3 && amplitude <= 1e-3,
        detail: format!(
            "sup eta / max w {:.2e}, relative pulsation amplitude {amplitude:.2e}",
            planar.relative_sup
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let mut total_steps = 0;
    for k in 0..20 {
        let two_d = k % 2 == 1;
        let boundary = if k % 4 == 3 { Boundary::Periodic } else { Boundary::Neumann };
        let grid = if two_d {
            Grid::plane(30 + 2 * k, 10 + k, 1.0 / 30.0, boundary).unwrap()
        } else {
            Grid::line(60 + 10 * k, 2.0 / (60 + 10 * k) as f64, boundary).unwrap()
        };
        let temperature = match k % 5 {
            0 => TemperatureProfile::Step {
                x0: 0.4,
                width: 0.2,
                left: 0.3,
                right: -0.4,
            },
            1 => TemperatureProfile::SmoothFront {
                x0: 0.5,
                width: 0.05 + 0.01 * k as f64,
                left: 0.5,
                right: -0.6,
            },
            2 => TemperatureProfile::PlanarWave { x0: 0.3, c: 1.0 + 0.1 * k as f64 },
            3 => TemperatureProfile::Table(
                SampleTable::new(vec![0.0, 0.3, 0.4, 0.5, 2.0], vec![-0.3, -0.3, 0.8, -0.3, -0.3]).unwrap(),
            ),
            _ => TemperatureProfile::Uniform { value: -0.2 },
        };
        let reactant = match k % 3 {
            0 => ReactantProfile::Constant(1.0),
            1 => ReactantProfile::Sinusoidal {
                mean: 1.0,
                amplitude: [0.5, 0.25],
                frequency: [2.0, 1.0],
            },
            _ => ReactantProfile::Constant(0.3),
        };
        let data = build_initial_data(&grid, &temperature, &reactant, 0.0, 2.0).unwrap();
        let ignition = if k % 3 == 2 { IgnitionRule::Instant } else { IgnitionRule::Pinned };
        let h = grid.h();
        let traj = run_limit(&LimitRunConfig {
            grid: grid.clone(),
            initial: LimitState::from_initial(&data.u0, &data.v0).unwrap(),
            t_final: 0.2,
            dt: h * h * [0.5, 1.0, 4.0][k % 3],
            snapshot_every: None,
            options: LimitOptions {
                ignition,
                fixed_point_ignition: k % 6 == 5,
                ..LimitOptions::default()
            },
            audit_residuals: false,
        });
        match traj {
            Ok(t) => {
                total_steps += t.steps;
                if !t.chi_monotone || t.consistency_violations != 0 {
                    failures.push(format!("config {k}"));
                }
            }
            Err(e) => failures.push(format!("config {k}: {e}")),
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("20 configs, {total_steps} steps checked, failures [{}]", failures.join(", ")),
    }
}

fn criterion_9(suite: &mut Vec<(String, EpsTrajectory, f64)>) -> Outcome {
    let region = ClearingRegion {
        t0: 0.9,
        delta: 0.4,
        phi1: Affine::constant(0.2),
        phi2: Affine { offset: 0.6, slope: 0.2 },
    };
    let mut settings = ClearingSettings::new(-0.5, region);
    settings.omega_delta = 0.1;
    let params = ScalingParams::matkowsky_sivashinsky(0.05);
    let grid = Grid::line(50, 0.02, Boundary::Neumann).unwrap();
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();

    // u ≡ 1.1 κ, the boundary hypothesis holding with equality.
    let constructed = vec![vec![-0.55; 50]; times.len()];
    let a = clearing_out_check(&grid, &times, &constructed, &params, &settings).unwrap();

    let simulate = |value: f64| {
        run_eps(&EpsRunConfig {
            grid: grid.clone(),
            params,
            u0: vec![value; 50],
            v0: vec![1.0; 50],
            t_final: 1.0,
            dt: 1e-3,
            snapshot_every: Some(0.05),
            options: StepOptions::default(),
        })
        .unwrap()
    };
    let fields = |t: &EpsTrajectory| -> (Vec<f64>, Vec<Vec<f64>>) {
        (t.snapshots.iter().map(|s| s.t).collect(), t.snapshots.iter().map(|s| s.u.clone()).collect())
    };
    let cold = simulate(-0.56);
    let (ts, us) = fields(&cold);
    let b = clearing_out_check(&grid, &ts, &us, &params, &settings).unwrap();
    let warm = simulate(-0.4);
    let (ts, us) = fields(&warm);
    let c = clearing_out_check(&grid, &ts, &us, &params, &settings).unwrap();
    let hot_u0 = grid.sample(|x, _| if x < 0.4 { 0.2 } else { -0.6 });
    let hot = run_eps(&EpsRunConfig {
        grid: grid.clone(),
        params,
        u0: hot_u0,
        v0: vec![1.0; 50],
        t_final: 1.0,
        dt: 1e-3,
        snapshot_every: Some(0.05),
        options: StepOptions::default(),
    })
    .unwrap();
    let (ts, us) = fields(&hot);
    let d = clearing_out_check(&grid, &ts, &us, &params, &settings).unwrap();
    suite.push(("clearing cold".into(), cold, 1.0));
    suite.push(("clearing warm".into(), warm, 1.0));
    suite.push(("clearing hot".into(), hot, 1.0));
    let pass = a.verdict == ClearingVerdict::Pass
        && b.verdict == ClearingVerdict::Pass
        && c.verdict == ClearingVerdict::Inapplicable
        && d.verdict != ClearingVerdict::Pass;
    Outcome {
        pass,
        detail: format!(
            "constructed {}, simulated cold {}, violated {}, igniting {} (ode ceiling {:.4})",
            a.verdict.name(),
            b.verdict.name(),
            c.verdict.name(),
            d.verdict.name(),
            a.ode_ceiling
        ),
    }
}

fn criterion_10(suite: &[(String, EpsTrajectory, f64)]) -> Outcome {
    let mut worst = (f64::INFINITY, String::new());
    let mut pass = !suite.is_empty();
    for (name, traj, c_bound) in suite {
        let t_end = traj.final_snapshot().t;
        match l2_bound_audit_trajectory(traj, t_end, *c_bound) {
            Ok(audit) => {
                let margin = (audit.rhs - audit.lhs) / audit.rhs;
                pass &= audit.holds && margin > 0.0;
                if margin < worst.0 {
                    worst = (margin, name.clone());
                }
            }
            Err(e) => {
                pass = false;
                worst = (f64::NEG_INFINITY, format!("{name}: {e}"));
            }
        }
    }
    Outcome {
        pass,
        detail: format!("{} trajectories, smallest relative margin {:.4} ({})", suite.len(), worst.0, worst.1),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let mut suite = Vec::new();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "traveling-wave oracle", timed(secs(1), criterion_1)));
    results.push((2, "limit-solver wave speed", timed(secs(30), criterion_2)));
    results.push((3, "epsilon convergence", timed(secs(300), || criterion_3(&mut suite))));
    results.push((5, "dispersion relation", timed(secs(10), criterion_5)));
    results.push((6, "pulsating wave existence", timed(secs(600), criterion_6)));
    results.push((7, "planarity for constant v0", timed(secs(600), criterion_7)));
    results.push((8, "hysteresis invariants", timed(secs(120), criterion_8)));
    results.push((9, "clearing out", timed(secs(60), || criterion_9(&mut suite))));
    extra_suite(&mut suite);
    results.push((4, "conservation", criterion_4(&suite)));
    results.push((10, "L2 bound audit", criterion_10(&suite)));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (k, name, out) in &results {
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {k:>2} [{name}]: {status} ({})", out.detail);
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
