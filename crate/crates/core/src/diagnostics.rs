//! Front tracking, pulsation statistics, conservation and energy audits,
//! the clearing-out check and the tangential-difference planarity test.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kinetics::ScalingParams;
use crate::shs_sim::EpsTrajectory;

/// First crossing of `threshold` along a line of samples, by linear
/// interpolation; `None` when the samples never reach it.
pub fn front_position(xs: &[f64], u: &[f64], threshold: f64) -> Option<f64> {
    let n = xs.len().min(u.len());
    (0..n.saturating_sub(1)).find_map(|k| {
        let (a, b) = (u[k] - threshold, u[k + 1] - threshold);
        if a == 0.0 && b == 0.0 {
            return None;
        }
        if a == 0.0 {
            return Some(xs[k]);
        }
        if (a > 0.0) != (b > 0.0) || b == 0.0 {
            Some(xs[k] + (xs[k + 1] - xs[k]) * a / (a - b))
        } else {
            None
        }
    })
}

/// Crossings on each row of a grid field, along the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPosition {
    pub per_line: Vec<Option<f64>>,
    pub mean: f64,
    pub spread: f64,
}

/// Front on every grid row, with the first axis offset by `x_origin`.
pub fn front_position_grid(grid: &Grid, u: &[f64], threshold: f64, x_origin: f64) -> Option<FrontPosition> {
    let xs: Vec<f64> = grid.centers_x().iter().map(|x| x + x_origin).collect();
    let per_line: Vec<Option<f64>> = u.chunks(grid.nx()).map(|row| front_position(&xs, row, threshold)).collect();
    let found: Vec<f64> = per_line.iter().flatten().copied().collect();
    if found.is_empty() {
        return None;
    }
    let mean = found.iter().sum::<f64>() / found.len() as f64;
    let lo = found.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = found.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some(FrontPosition {
        per_line,
        mean,
        spread: hi - lo,
    })
}

/// Front positions `x_f(t)` in the physical frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrontTrace {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

impl FrontTrace {
    /// Centered differences, one-sided at the ends.
    pub fn speeds(&self) -> Vec<f64> {
        let n = self.times.len().min(self.positions.len());
        if n < 2 {
            return Vec::new();
        }
        (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                (self.positions[b] - self.positions[a]) / (self.times[b] - self.times[a])
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontVerdict {
    Planar,
    Pulsating,
}

impl FrontVerdict {
    pub fn name(self) -> &'static str {
        match self {
            FrontVerdict::Planar => "planar",
            FrontVerdict::Pulsating => "pulsating",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsationStats {
    pub mean_speed: f64,
    /// Peak-to-trough speed over the last full period (or the retained
    /// series when no period is found).
    pub amplitude: f64,
    pub period: Option<f64>,
    pub verdict: FrontVerdict,
}

/// Speed statistics of a uniformly sampled trace after dropping its first
/// quarter as transient. `planar_tolerance` is relative to the mean speed.
pub fn pulsation_stats(trace: &FrontTrace, planar_tolerance: f64) -> Result<PulsationStats> {
    let n = trace.times.len();
    if n < 16 || trace.positions.len() != n {
        return Err(Error::InsufficientData(format!(
            "pulsation statistics need at least 16 samples, got {n}"
        )));
    }
    let dt = (trace.times[n - 1] - trace.times[0]) / (n - 1) as f64;
    if trace
        .times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs().max(1e-300))
    {
        return Err(Error::Domain("pulsation statistics need uniform sampling".into()));
    }
    let speeds = trace.speeds();
    // The end points use one-sided differences; drop them with the transient.
    let kept = &speeds[n / 4..n - 1];
    let mean = kept.iter().sum::<f64>() / kept.len() as f64;
    let period = autocorrelation_period(kept).map(|lag| lag * dt);
    let tail = match period {
        Some(p) => {
            let len = ((p / dt).ceil() as usize + 1).min(kept.len());
            &kept[kept.len() - len..]
        }
        None => kept,
    };
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let amplitude = hi - lo;
    let verdict = if amplitude < planar_tolerance * mean.abs() {
        FrontVerdict::Planar
    } else {
        FrontVerdict::Pulsating
    };
    Ok(PulsationStats {
        mean_speed: mean,
        amplitude,
        period: if verdict == FrontVerdict::Pulsating { period } else { None },
        verdict,
    })
}

/// Lag (in samples, refined by a parabola) of the first autocorrelation
/// peak above 0.5 after the first zero crossing.
fn autocorrelation_period(series: &[f64]) -> Option<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let energy: f64 = centred.iter().map(|v| v * v).sum();
    if !(energy > 0.0) {
        return None;
    }
    let max_lag = n / 2;
    let r: Vec<f64> = (0..=max_lag)
        .map(|lag| {
            let s: f64 = centred[..n - lag].iter().zip(&centred[lag..]).map(|(a, b)| a * b).sum();
            s / energy * n as f64 / (n - lag) as f64
        })
        .collect();
    let start = r.iter().position(|&v| v < 0.0)?;
    let peak = (start + 1..max_lag).find(|&k| r[k] >= r[k - 1] && r[k] >= r[k + 1] && r[k] > 0.5)?;
    let (a, b, c) = (r[peak - 1], r[peak], r[peak + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some(peak as f64 + offset)
}

/// Affine curve `offset + slope·t`, used for the lateral boundaries of the
/// clearing-out region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub offset: f64,
    pub slope: f64,
}

impl Affine {
    pub fn constant(offset: f64) -> Self {
        Self { offset, slope: 0.0 }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.offset + self.slope * t
    }
}

/// `Q = {t0 - 2δ < t < t0, φ1(t) < x < φ2(t)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingRegion {
    pub t0: f64,
    pub delta: f64,
    pub phi1: Affine,
    pub phi2: Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClearingVerdict {
    Pass,
    Fail,
    Inapplicable,
}

impl ClearingVerdict {
    pub fn name(self) -> &'static str {
        match self {
            ClearingVerdict::Pass => "pass",
            ClearingVerdict::Fail => "fail",
            ClearingVerdict::Inapplicable => "inapplicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearingReport {
    pub verdict: ClearingVerdict,
    pub boundary_max: f64,
    pub interior_max: f64,
    /// `y(t0)` for `y' = C g_ε(y)/ε`, `y(t0 - 2δ) = (1 + ω(δ))κ`.
    pub ode_ceiling: f64,
    pub boundary_samples: usize,
    pub interior_samples: usize,
    pub warnings: Vec<String>,
}

/// Parameters of the clearing-out check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingSettings {
    pub kappa: f64,
    pub region: ClearingRegion,
    /// Admissibility bound on `ε`; exceeding it only warns.
    pub omega_kappa: f64,
    pub omega_delta: f64,
    /// Upper bound `C` of `v⁰` in the comparison ODE.
    pub c_bound: f64,
    pub grid_tolerance: f64,
}

impl ClearingSettings {
    /// Defaults `ω(δ) = δ`, `ω(κ) = |κ|`, `C = 1`, tolerance `1e-9`.
    pub fn new(kappa: f64, region: ClearingRegion) -> Self {
        Self {
            kappa,
            region,
            omega_kappa: kappa.abs(),
            omega_delta: region.delta,
            c_bound: 1.0,
            grid_tolerance: 1e-9,
        }
    }
}

/// RK4 for `y' = rate(y)` over `duration`, stopping early once `y ≥ 0`.
pub fn ceiling_ode(y0: f64, duration: f64, rate: impl Fn(f64) -> f64) -> f64 {
    let steps = 2000;
    let h = duration / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        if y >= 0.0 || !y.is_finite() {
            break;
        }
        let k1 = rate(y);
        let k2 = rate(y + 0.5 * h * k1);
        let k3 = rate(y + 0.5 * h * k2);
        let k4 = rate(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// Sampled check of `u ≤ κ` inside `Q` given `u ≤ (1 + ω(δ))κ` on its
/// parabolic boundary. `fields[k]` is `u` at `times[k]` on `grid`.
pub fn clearing_out_check(
    grid: &Grid,
    times: &[f64],
    fields: &[Vec<f64>],
    params: &ScalingParams,
    settings: &ClearingSettings,
) -> Result<ClearingReport> {
    let ClearingSettings {
        kappa,
        region,
        omega_kappa,
        omega_delta,
        c_bound,
        grid_tolerance,
    } = *settings;
    let mut problems = Vec::new();
    if !(kappa < 0.0) {
        problems.push(format!("kappa must be negative, got {kappa}"));
    }
    if !(region.delta > 0.0 && region.delta < 1.0) {
        problems.push(format!("delta must lie in (0, 1), got {}", region.delta));
    }
    if !(region.t0 - 2.0 * region.delta >= 0.0) {
        problems.push("need t0 - 2 delta >= 0".into());
    }
    if times.len() != fields.len() || fields.iter().any(|f| f.len() != grid.len()) {
        problems.push("fields must match the sample times and the grid".into());
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    let mut warnings = Vec::new();
    if params.epsilon > omega_kappa {
        warnings.push(format!(
            "epsilon = {} exceeds the admissibility bound omega(kappa) = {omega_kappa}",
            params.epsilon
        ));
    }
    let bottom = region.t0 - 2.0 * region.delta;
    let window: Vec<usize> = (0..times.len())
        .filter(|&k| times[k] >= bottom - 1e-12 && times[k] < region.t0 + 1e-12)
        .collect();
    if window.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two samples in [{bottom}, {}], got {}",
            region.t0,
            window.len()
        )));
    }
    let xs = grid.centers_x();
    let nx = grid.nx();
    let bound = (1.0 + omega_delta) * kappa;
    let (mut bmax, mut imax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut bcount, mut icount) = (0, 0);
    for (rank, &k) in window.iter().enumerate() {
        let t = times[k];
        let (lo, hi) = (region.phi1.at(t), region.phi2.at(t));
        let inside: Vec<usize> = (0..nx).filter(|&i| xs[i] > lo && xs[i] < hi).collect();
        let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
            continue;
        };
        for row in fields[k].chunks(nx) {
            // Nearest cells outside the lateral boundaries.
            for i in [first.checked_sub(1), Some(last + 1).filter(|&i| i < nx)].into_iter().flatten() {
                bmax = bmax.max(row[i]);
                bcount += 1;
            }
            for &i in &inside {
                if rank == 0 {
                    bmax = bmax.max(row[i]);
                    bcount += 1;
                } else {
                    imax = imax.max(row[i]);
                    icount += 1;
                }
            }
        }
    }
    let eps = params.epsilon;
    let ode_ceiling = ceiling_ode(bound, 2.0 * region.delta, |y| {
        c_bound * params.rate(y).unwrap_or(f64::INFINITY) / eps
    });
    let verdict = if bcount == 0 || icount == 0 || bmax > bound + grid_tolerance {
        ClearingVerdict::Inapplicable
    } else if imax <= kappa + grid_tolerance {
        ClearingVerdict::Pass
    } else {
        ClearingVerdict::Fail
    };
    Ok(ClearingReport {
        verdict,
        boundary_max: bmax,
        interior_max: imax,
        ode_ceiling,
        boundary_samples: bcount,
        interior_samples: icount,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationAudit {
    /// Largest `|∫(u+v)(t) - ∫(u+v)(0)|` over the snapshots.
    pub absolute: f64,
    pub relative: f64,
}

pub fn conservation_audit(traj: &EpsTrajectory) -> ConservationAudit {
    let vol = traj.grid.cell_volume();
    let mass = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(a, b)| a + b).sum::<f64>() * vol };
    let Some(first) = traj.snapshots.first() else {
        return ConservationAudit {
            absolute: 0.0,
            relative: 0.0,
        };
    };
    let m0 = mass(&first.u, &first.v);
    let absolute = traj
        .snapshots
        .iter()
        .map(|s| (mass(&s.u, &s.v) - m0).abs())
        .fold(0.0, f64::max);
    let scale = traj.snapshots[0]
        .u
        .iter()
        .zip(&traj.snapshots[0].v)
        .map(|(a, b)| a.abs() + b.abs())
        .sum::<f64>()
        * vol;
    ConservationAudit {
        absolute,
        relative: if scale > 0.0 { absolute / scale } else { absolute },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Audit {
    /// `∫₀ᵀ∫u²` by the trapezoidal rule over the samples.
    pub lhs: f64,
    /// `T∫(C + |u⁰|)²`.
    pub rhs: f64,
    pub holds: bool,
}

/// Energy estimate `∫₀ᵀ∫u² ≤ T∫(C + |u⁰|)²` on samples starting at `t = 0`.
pub fn l2_bound_audit(grid: &Grid, times: &[f64], fields: &[Vec<f64>], t_end: f64, c_bound: f64) -> Result<L2Audit> {
    if times.is_empty() || times.len() != fields.len() {
        return Err(Error::InsufficientData("need matching samples starting at t = 0".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InsufficientData(format!("first sample must be at t = 0, got {}", times[0])));
    }
    if !(t_end >= 0.0) || t_end > times[times.len() - 1] + 1e-12 {
        return Err(Error::Domain(format!("T = {t_end} lies outside the sampled range")));
    }
    let vol = grid.cell_volume();
    let norm2 = |u: &[f64]| u.iter().map(|x| x * x).sum::<f64>() * vol;
    let mut lhs = 0.0;
    for k in 1..times.len() {
        let (a, b) = (times[k - 1], times[k].min(t_end));
        if b <= a {
            break;
        }
        let (fa, fb) = (norm2(&fields[k - 1]), norm2(&fields[k]));
        let fb_cut = if times[k] > t_end {
            fa + (fb - fa) * (b - a) / (times[k] - a)
        } else {
            fb
        };
        lhs += 0.5 * (b - a) * (fa + fb_cut);
    }
    let rhs = t_end * fields[0].iter().map(|u| (c_bound + u.abs()).powi(2)).sum::<f64>() * vol;
    Ok(L2Audit {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12),
    })
}

pub fn l2_bound_audit_trajectory(traj: &EpsTrajectory, t_end: f64, c_bound: f64) -> Result<L2Audit> {
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let fields: Vec<Vec<f64>> = traj.snapshots.iter().map(|s| s.u.clone()).collect();
    l2_bound_audit(&traj.grid, &times, &fields, t_end, c_bound)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentialDifference {
    /// Shifts in units of the unit cell, multiples of `1/nx`.
    pub shifts: Vec<f64>,
    /// `η = max_ξ |z^ξ|` per stored sample.
    pub eta: Vec<f64>,
    pub sup_eta: f64,
    /// `sup η / max |w|`.
    pub relative_sup: f64,
    /// Largest `|cell average of z^ξ|` over rows and shifts.
    pub cell_average_defect: f64,
    pub verdict: FrontVerdict,
}

/// `z^ξ(s, x) = w̃(s, x - ξ) - w̃(s, x)` on a moving-frame field
/// `w̃[i * nx + j]`, which is `w(t - ξ/c, x - ξ) - w(t, x)` in the physical
/// frame. Planar when `sup η ≤ tolerance · max |w|`.
pub fn planarity_check(w_tilde: &[f64], nx: usize, shifts: &[f64], tolerance: f64) -> Result<TangentialDifference> {
    if nx == 0 || w_tilde.len() % nx != 0 {
        return Err(Error::Domain(format!("field of {} values is not a multiple of nx = {nx}", w_tilde.len())));
    }
    let mut lattice = Vec::with_capacity(shifts.len());
    for &xi in shifts {
        let k = xi * nx as f64;
        if !(k.is_finite() && (k - k.round()).abs() < 1e-9) {
            return Err(Error::Domain(format!("shift {xi} is not a lattice vector of spacing 1/{nx}")));
        }
        lattice.push((k.round() as i64).rem_euclid(nx as i64) as usize);
    }
    let mut eta = vec![0.0f64; w_tilde.len()];
    let mut avg_defect: f64 = 0.0;
    for (row_idx, row) in w_tilde.chunks(nx).enumerate() {
        for &k in &lattice {
            let mut sum = 0.0;
            for j in 0..nx {
                let z = row[(j + nx - k) % nx] - row[j];
                sum += z;
                let slot = &mut eta[row_idx * nx + j];
                *slot = slot.max(z.abs());
            }
            avg_defect = avg_defect.max((sum / nx as f64).abs());
        }
    }
    let sup_eta = eta.iter().cloned().fold(0.0, f64::max);
    let scale = w_tilde.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let relative_sup = if scale > 0.0 { sup_eta / scale } else { 0.0 };
    Ok(TangentialDifference {
        shifts: shifts.to_vec(),
        eta,
        sup_eta,
        relative_sup,
        cell_average_defect: avg_defect,
        verdict: if relative_sup <= tolerance {
            FrontVerdict::Planar
        } else {
            FrontVerdict::Pulsating
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn front_of_planar_profile() {
        let xs: Vec<f64> = (0..2001).map(|k| k as f64 * 0.005).collect();
        let u: Vec<f64> = xs.iter().map(|&x| -((-(-(x - 3.0)).exp_m1()).max(0.0))).collect();
        let x = front_position(&xs, &u, -0.5).unwrap();
        assert!((x - (3.0 + 2f64.ln())).abs() < 1e-5);
        assert_eq!(front_position(&xs, &vec![-1.0; xs.len()], -0.5), None);
    }

    #[test]
    fn front_is_translation_equivariant() {
        let grid = Grid::line(200, 0.05, Boundary::Neumann).unwrap();
        let f = |x: f64| -(1.0 + (2.0 * (x - 4.0)).tanh()) / 2.0;
        let u0 = grid.sample(|x, _| f(x));
        let u3 = grid.sample(|x, _| f(x - 3.0 * 0.05));
        let a = front_position_grid(&grid, &u0, -0.5, 0.0).unwrap().mean;
        let b = front_position_grid(&grid, &u3, -0.5, 0.0).unwrap().mean;
        assert!((b - a - 0.15).abs() < 1e-12);
    }

    #[test]
    fn synthetic_pulsation() {
        let dt = 0.01;
        let times: Vec<f64> = (0..=500).map(|k| k as f64 * dt).collect();
        let tau = std::f64::consts::TAU;
        let positions: Vec<f64> = times.iter().map(|&t| t + 0.1 * (1.0 - (tau * t).cos()) / tau).collect();
        let stats = pulsation_stats(&FrontTrace { times: times.clone(), positions }, 1e-3).unwrap();
        assert!((stats.amplitude - 0.2).abs() < 2e-3, "{}", stats.amplitude);
        assert!((stats.period.unwrap() - 1.0).abs() < 0.02);
        assert_eq!(stats.verdict, FrontVerdict::Pulsating);
        let steady = FrontTrace {
            positions: times.iter().map(|t| 2.0 * t).collect(),
            times,
        };
        let stats = pulsation_stats(&steady, 1e-3).unwrap();
        assert!(stats.amplitude < 1e-12);
        assert_eq!(stats.verdict, FrontVerdict::Planar);
        assert!(pulsation_stats(&FrontTrace::default(), 1e-3).is_err());
    }

    fn clearing_setup(value: f64) -> (Grid, Vec<f64>, Vec<Vec<f64>>) {
        let grid = Grid::line(50, 0.02, Boundary::Neumann).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
        let fields = vec![vec![value; 50]; times.len()];
        (grid, times, fields)
    }

    #[test]
    fn clearing_out_scenarios() {
        let region = ClearingRegion {
            t0: 0.9,
            delta: 0.4,
            phi1: Affine::constant(0.2),
            phi2: Affine { offset: 0.6, slope: 0.2 },
        };
        let mut settings = ClearingSettings::new(-0.5, region);
        settings.omega_delta = 0.1;
        let params = ScalingParams::matkowsky_sivashinsky(0.05);
        let (grid, times, fields) = clearing_setup(-0.55);
        let ok = clearing_out_check(&grid, &times, &fields, &params, &settings).unwrap();
        assert_eq!(ok.verdict, ClearingVerdict::Pass);
        assert!(ok.ode_ceiling <= -0.5);
        let (grid, times, fields) = clearing_setup(-0.4);
        let bad = clearing_out_check(&grid, &times, &fields, &params, &settings).unwrap();
        assert_eq!(bad.verdict, ClearingVerdict::Inapplicable);
    }

    #[test]
    fn zero_kinetics_keeps_the_ceiling() {
        assert_eq!(ceiling_ode(-0.55, 1.0, |_| 0.0), -0.55);
    }

    #[test]
    fn l2_audit_cases() {
        let grid = Grid::line(10, 0.1, Boundary::Neumann).unwrap();
        let fields = vec![vec![-1.0; 10], vec![-0.9; 10]];
        let audit = l2_bound_audit(&grid, &[0.0, 1.0], &fields, 1.0, 0.0).unwrap();
        assert!(audit.holds);
        assert!((audit.rhs - 1.0).abs() < 1e-12);
        let zero = l2_bound_audit(&grid, &[0.0, 1.0], &fields, 0.0, 0.0).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        assert!(zero.holds);
    }

    #[test]
    fn planarity_of_simple_fields() {
        let flat: Vec<f64> = (0..40).map(|k| (k / 8) as f64).collect();
        let td = planarity_check(&flat, 8, &[0.125, 0.5], 1e-10).unwrap();
        assert_eq!(td.sup_eta, 0.0);
        assert_eq!(td.verdict, FrontVerdict::Planar);
        let wavy: Vec<f64> = (0..40)
            .map(|k| 1.0 + 0.1 * (std::f64::consts::TAU * (k % 8) as f64 / 8.0).sin())
            .collect();
        let td = planarity_check(&wavy, 8, &[0.25], 1e-3).unwrap();
        assert_eq!(td.verdict, FrontVerdict::Pulsating);
        assert!(td.cell_average_defect < 1e-15);
        assert!(planarity_check(&wavy, 8, &[0.1], 1e-3).is_err());
    }
}
