//! Pulsating waves `w̃(s, x)` with `s = ct - x`, periodic in `x` with unit
//! period, solving `Lw̃ = v⁰(x) g_M(w̃)` between `w̃ = M` at `s = -S` and
//! `w̃ = 0` at `s = S`.
//!
//! The moving-frame operator is degenerate in one space dimension, since
//! `Δw̃ + ∂ₛₛw̃ - 2∂ₓ∂ₛw̃ = (∂ₓ - ∂ₛ)²w̃`. The solve therefore relaxes the
//! equivalent physical-time problem `∂ₜw = ∂ₓₓw - v⁰g_M(w)` on the lattice
//! `ds = dx = h`, `dt = h/c`: grid points of equal physical time lie on the
//! diagonals `i + j ≡ L (mod nx)` of the stored `(s, x)` array, so each time
//! level is one tridiagonal solve along a diagonal and the array is its own
//! co-moving window. A shooting loop on `A` keeps the front inside the window.

use crate::diagnostics::FrontTrace;
use crate::error::{Error, Result};
use crate::grid::solve_tridiagonal;
use crate::kinetics::{g_m_with_slope, TruncationParams};

use super::mu0;
use super::traveling::TravelingWave;

#[derive(Debug, Clone, PartialEq)]
pub struct PulsatingConfig {
    /// Prescribed speed along `e = +x`.
    pub c: f64,
    pub m: f64,
    /// Samples of `v⁰` at `x_j = j/nx`; a single sample means a constant field.
    pub v0: Vec<f64>,
    /// Number of stored points along `s`.
    pub ns: usize,
    /// Window half-length, used only for constant fields where the lattice
    /// spacing is free. Defaults to `20/c`.
    pub half_length: Option<f64>,
    /// Relative residual at which relaxation stops.
    pub tolerance: f64,
    pub max_periods: usize,
    /// Adjust `A` until the front stays put in the window.
    pub shooting: bool,
    /// Front position as a fraction of the window, measured from `s = -S`.
    pub front_fraction: f64,
    /// Relative transverse perturbation `δ sin(2πx)` of the starting guess.
    pub seed_perturbation: f64,
    /// Width of the descent of `g_M` below `A`.
    pub descent_width: f64,
    /// Physical time over which each shooting trial measures drift;
    /// by default long enough for the wave to cross its own length.
    pub trial_time: Option<f64>,
}

impl PulsatingConfig {
    pub fn new(c: f64, m: f64, v0: Vec<f64>, ns: usize) -> Self {
        Self {
            c,
            m,
            v0,
            ns,
            half_length: None,
            tolerance: 1e-8,
            max_periods: 100_000,
            shooting: true,
            front_fraction: 0.8,
            seed_perturbation: 0.0,
            descent_width: 0.5,
            trial_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulsatingReport {
    /// `max |∂ₜw - ∂ₓₓw + v⁰g_M(w)| / max v⁰` over the stored lattice.
    pub residual: f64,
    /// Relative `L∞` defect of `w(t, x + k) = w(t - k/c, x)` for `k = 1, 2, 3`.
    pub lattice_shift_residual: f64,
    /// Largest `|∂ₜw + μ₀|/μ₀` over the far-field band: rows below `A/2` at
    /// least `6/c` ahead of the front. NaN when no row qualifies.
    pub far_field_error: f64,
    /// Largest `∂ₛw̃` (should not be positive).
    pub monotone_defect: f64,
    /// Smallest `∂ₜₜw` where `w̃ ∈ (1/M, A/2)`.
    pub min_time_convexity: f64,
    /// Largest `|∂ₛw̃|` in the first and last stored rows.
    pub cap_gradients: (f64, f64),
    pub measured_speed: f64,
    pub speed_in_bracket: bool,
    /// For constant `v⁰`: `L∞` distance of `∂ₜw` to the exact planar profile
    /// from the far-field band to the back cap.
    pub planar_profile_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulsatingWave {
    /// Row-major `w̃[i * nx + j]` at `s_i = s_first + i·ds`, `x_j = j/nx`.
    pub w_tilde: Vec<f64>,
    pub ns: usize,
    pub nx: usize,
    pub ds: f64,
    /// `s` of row 0 after shifting the front to `s = 0`.
    pub s_first: f64,
    pub c: f64,
    pub e: f64,
    pub v0: Vec<f64>,
    pub mu0: f64,
    pub m: f64,
    pub a: f64,
    pub truncation: TruncationParams,
    pub residual_history: Vec<f64>,
    pub periods: usize,
    pub shooting_trials: usize,
    pub trace: FrontTrace,
    pub report: PulsatingReport,
    pub warnings: Vec<String>,
}

impl PulsatingWave {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.w_tilde[i * self.nx + j]
    }

    pub fn s_values(&self) -> Vec<f64> {
        (0..self.ns).map(|i| self.s_first + i as f64 * self.ds).collect()
    }

    /// Stored values with the caps `M` (before row 0) and 0 (after the last row).
    fn padded(&self, i: isize, j: usize) -> f64 {
        padded(&self.w_tilde, self.ns, self.nx, self.m, i, j)
    }

    /// `w(t, x) := w̃(ct - x, x)`, linear in `s` on the stored rows;
    /// `x` is rounded to the nearest lattice column.
    pub fn physical(&self, t: f64, x: f64) -> f64 {
        let s = self.c * t - x;
        let j = ((x * self.nx as f64).round() as i64).rem_euclid(self.nx as i64) as usize;
        let r = (s - self.s_first) / self.ds;
        let i0 = r.floor();
        let f = r - i0;
        let i0 = i0 as isize;
        (1.0 - f) * self.padded(i0, j) + f * self.padded(i0 + 1, j)
    }

    /// `∂ₜw = c ∂ₛw̃` on the stored lattice, by the backward difference that
    /// matches the time discretisation.
    pub fn time_derivative(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.w_tilde.len()];
        for i in 0..self.ns {
            for j in 0..self.nx {
                out[i * self.nx + j] = self.c * (self.padded(i as isize, j) - self.padded(i as isize - 1, j)) / self.ds;
            }
        }
        out
    }

    /// Cell average of `w̃` in each row.
    pub fn row_averages(&self) -> Vec<f64> {
        row_averages(&self.w_tilde, self.nx)
    }

    /// `s` where the row average last exceeds `1/M`.
    pub fn front_s(&self) -> f64 {
        self.s_first + front_index(&self.row_averages(), 1.0 / self.m) * self.ds
    }
}

fn padded(w: &[f64], ns: usize, nx: usize, m: f64, i: isize, j: usize) -> f64 {
    if i < 0 {
        m
    } else if i as usize >= ns {
        0.0
    } else {
        w[i as usize * nx + j]
    }
}

fn row_averages(w: &[f64], nx: usize) -> Vec<f64> {
    w.chunks(nx).map(|r| r.iter().sum::<f64>() / nx as f64).collect()
}

/// Fractional index of the last crossing of `level` by a profile that
/// decreases towards the end, with the cap `M` before index 0.
fn front_index(profile: &[f64], level: f64) -> f64 {
    match profile.iter().rposition(|&v| v > level) {
        None => -1.0,
        Some(k) if k + 1 == profile.len() => k as f64,
        Some(k) => {
            let (a, b) = (profile[k], profile[k + 1]);
            k as f64 + (a - level) / (a - b)
        }
    }
}

struct Lattice {
    ns: usize,
    nx: usize,
    h: f64,
    dt: f64,
    m: f64,
    v0: Vec<f64>,
    trunc: TruncationParams,
    w: Vec<f64>,
    level: i64,
    clamped: usize,
    // Scratch buffers for one diagonal.
    prev: Vec<f64>,
    x: Vec<f64>,
    vv: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
    delta: Vec<f64>,
}

impl Lattice {
    fn column(&self, i: usize, level: i64) -> usize {
        (level - i as i64).rem_euclid(self.nx as i64) as usize
    }

    /// Advance one time level; returns the largest change of a stored value.
    fn advance(&mut self) -> Result<f64> {
        let level = self.level + 1;
        let ns = self.ns;
        let inv_dt = 1.0 / self.dt;
        let inv_h2 = 1.0 / (self.h * self.h);
        for i in 0..ns {
            let j = self.column(i, level);
            self.prev[i] = if i == 0 { self.m } else { self.w[(i - 1) * self.nx + j] };
            self.x[i] = self.w[i * self.nx + j];
            self.vv[i] = self.v0[j];
        }
        let scale = self.m.max(1.0);
        let mut converged = false;
        for _ in 0..50 {
            let mut worst: f64 = 0.0;
            for i in 0..ns {
                let left = if i == 0 { self.m } else { self.x[i - 1] };
                let right = if i + 1 == ns { 0.0 } else { self.x[i + 1] };
                let (g, dg) = g_m_with_slope(self.x[i], &self.trunc);
                self.rhs[i] = (self.x[i] - self.prev[i]) * inv_dt - (left - 2.0 * self.x[i] + right) * inv_h2
                    + self.vv[i] * g;
                self.diag[i] = inv_dt + 2.0 * inv_h2 + self.vv[i] * dg;
            }
            solve_tridiagonal(&self.sub, &self.diag, &self.sub, &self.rhs, &mut self.delta);
            for i in 0..ns {
                self.x[i] -= self.delta[i];
                worst = worst.max(self.delta[i].abs());
            }
            if worst <= 1e-14 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                iterations: 50,
                last_residual: f64::NAN,
                history: Vec::new(),
            });
        }
        let mut change: f64 = 0.0;
        for i in 0..ns {
            let j = self.column(i, level);
            let mut v = self.x[i];
            if !(0.0..=self.m).contains(&v) {
                if v < -1e-12 * scale || v > self.m * (1.0 + 1e-12) {
                    self.clamped += 1;
                }
                v = v.clamp(0.0, self.m);
            }
            let slot = &mut self.w[i * self.nx + j];
            change = change.max((v - *slot).abs());
            *slot = v;
        }
        self.level = level;
        Ok(change)
    }

    fn advance_levels(&mut self, n: usize) -> Result<f64> {
        let mut change: f64 = 0.0;
        for _ in 0..n {
            change = change.max(self.advance()?);
        }
        Ok(change)
    }

    fn front(&self) -> f64 {
        front_index(&row_averages(&self.w, self.nx), 1.0 / self.m)
    }

    /// Front of the physical line at the current level, as `(t, x)`.
    fn line_front(&self) -> (f64, f64) {
        let line: Vec<f64> = (0..self.ns)
            .map(|i| self.w[i * self.nx + self.column(i, self.level)])
            .collect();
        let i_f = front_index(&line, 1.0 / self.m);
        let t = self.level as f64 * self.dt;
        (t, (self.level as f64 - i_f) * self.h)
    }

    fn residual(&self) -> f64 {
        let (ns, nx) = (self.ns, self.nx);
        let get = |i: isize, j: usize| padded(&self.w, ns, nx, self.m, i, j);
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut worst: f64 = 0.0;
        for i in 0..ns as isize {
            for j in 0..nx {
                let here = get(i, j);
                let ahead = get(i - 1, (j + 1) % nx);
                let behind = get(i + 1, (j + nx - 1) % nx);
                let r = (here - get(i - 1, j)) / self.dt - (ahead - 2.0 * here + behind) * inv_h2
                    + self.v0[j] * g_m_with_slope(here, &self.trunc).0;
                worst = worst.max(r.abs());
            }
        }
        worst / self.v0.iter().cloned().fold(0.0, f64::max)
    }

    /// Shift rows by `k` (positive moves the profile towards larger `s`).
    fn shift_rows(&mut self, k: isize) {
        if k == 0 {
            return;
        }
        let (ns, nx) = (self.ns, self.nx);
        let old = self.w.clone();
        for i in 0..ns as isize {
            for j in 0..nx {
                self.w[i as usize * nx + j] = padded(&old, ns, nx, self.m, i - k, j);
            }
        }
    }

    fn set_a(&mut self, a: f64, d: f64) -> Result<()> {
        self.trunc = TruncationParams::with_descent_width(self.m, a, d.min(a / 2.0))?;
        Ok(())
    }

    /// Run for `levels` and return the drift of the front in `s` per unit
    /// time, fitted over the second half.
    fn drift(&mut self, levels: usize, samples: usize) -> Result<f64> {
        let chunk = (levels / samples).max(1);
        let mut ts = Vec::new();
        let mut fs = Vec::new();
        for k in 0..samples {
            self.advance_levels(chunk)?;
            if k >= samples / 2 {
                ts.push(self.level as f64 * self.dt);
                fs.push(self.front() * self.h);
            }
        }
        Ok(slope(&ts, &fs))
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

/// Check the configuration without running it.
pub fn validate_pulsating(cfg: &PulsatingConfig) -> Result<()> {
    let mut problems = Vec::new();
    if !(cfg.c.is_finite() && cfg.c > 0.0) {
        problems.push(format!("c must be positive, got {}", cfg.c));
    }
    if !(cfg.m.is_finite() && cfg.m > 0.0) {
        problems.push(format!("M must be positive, got {}", cfg.m));
    }
    if cfg.v0.is_empty() || cfg.v0.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        problems.push("v0 samples must be positive and finite".into());
    }
    if cfg.ns < 16 {
        problems.push(format!("need at least 16 rows along s, got {}", cfg.ns));
    }
    if !(cfg.tolerance > 0.0) {
        problems.push("tolerance must be positive".into());
    }
    if !(cfg.front_fraction > 0.0 && cfg.front_fraction < 1.0) {
        problems.push("front fraction must lie in (0, 1)".into());
    }
    if !(cfg.descent_width > 0.0) {
        problems.push("descent width must be positive".into());
    }
    if cfg.trial_time.is_some_and(|t| !(t > 0.0)) {
        problems.push("trial time must be positive".into());
    }
    if let Some(s) = cfg.half_length {
        if !(s > 0.0) {
            problems.push("half length must be positive".into());
        }
    }
    if problems.is_empty() {
        let mu = cfg.v0.iter().sum::<f64>() / cfg.v0.len() as f64;
        let (_, half) = window(cfg);
        let needed = cfg.c * cfg.m / mu + 8.0 / cfg.c;
        if cfg.front_fraction * 2.0 * half < needed || (1.0 - cfg.front_fraction) * 2.0 * half < 2.0 / cfg.c {
            problems.push(format!(
                "window [-{half:.3}, {half:.3}] is too short: the wave needs {needed:.3} ahead of the front and {:.3} behind it",
                2.0 / cfg.c
            ));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

/// Lattice spacing and half-width of the moving-frame window.
fn window(cfg: &PulsatingConfig) -> (f64, f64) {
    let nx = cfg.v0.len();
    let h = if nx > 1 {
        1.0 / nx as f64
    } else {
        2.0 * cfg.half_length.unwrap_or(20.0 / cfg.c) / (cfg.ns + 1) as f64
    };
    (h, (cfg.ns + 1) as f64 * h / 2.0)
}

/// Build a pulsating wave moving with speed `c` along `+x`.
pub fn pulsating_wave(cfg: &PulsatingConfig) -> Result<PulsatingWave> {
    validate_pulsating(cfg)?;
    let (c, m, ns) = (cfg.c, cfg.m, cfg.ns);
    let nx = cfg.v0.len();
    let (mu, warning) = mu0(&cfg.v0)?;
    let mut warnings: Vec<String> = warning.into_iter().collect();
    let (h, half) = window(cfg);
    let dt = h / c;

    // Homogenised planar seed: μ₀φ(s; c, M/μ₀).
    let planar = TravelingWave::new(c, m / mu)?;
    let needed = c * m / mu + 8.0 / c;
    let a0 = mu * planar.a;
    let front0 = -half + cfg.front_fraction * 2.0 * half;
    let target = (front0 + half) / h - 1.0;
    let mut w = vec![0.0; ns * nx];
    for i in 0..ns {
        let s = -half + (i + 1) as f64 * h;
        let base = mu * planar.profile(s - front0);
        for j in 0..nx {
            let bump = 1.0 + cfg.seed_perturbation * (std::f64::consts::TAU * j as f64 / nx as f64).sin();
            w[i * nx + j] = (base * bump).clamp(0.0, m);
        }
    }
    let d = cfg.descent_width;
    let mut lat = Lattice {
        ns,
        nx,
        h,
        dt,
        m,
        v0: cfg.v0.clone(),
        trunc: TruncationParams::with_descent_width(m, a0, d.min(a0 / 2.0))?,
        w,
        level: 0,
        clamped: 0,
        prev: vec![0.0; ns],
        x: vec![0.0; ns],
        vv: vec![0.0; ns],
        sub: vec![-1.0 / (h * h); ns],
        diag: vec![0.0; ns],
        rhs: vec![0.0; ns],
        delta: vec![0.0; ns],
    };

    let period_levels = nx.max((1.0 / (c * dt)).round() as usize).max(1);
    let trial_levels = {
        let time = cfg.trial_time.unwrap_or((16.0 / (c * c)).max(2.0 * needed / c));
        let raw = (time / dt).ceil() as usize;
        raw.div_ceil(nx) * nx
    };
    let recentre = |lat: &mut Lattice| {
        let off = (target - lat.front()).round() as isize;
        if off.abs() > 2 {
            lat.shift_rows(off);
        }
    };

    let mut a = a0;
    let mut trials = 0;
    // Sensitivity of the drift to A, refined from the bracket.
    let mut sensitivity = None;
    if cfg.shooting {
        lat.advance_levels(trial_levels)?;
        let mut f_a = lat.drift(trial_levels, 16)?;
        trials += 1;
        let mut step = 0.02 * (m - a0).max(1.0 / m);
        let (mut lo, mut hi): ((f64, f64), (f64, f64));
        // Expand until the drift changes sign.
        loop {
            let next = if f_a > 0.0 { a + step } else { a - step };
            if !(next > 2.0 / m && next < m) {
                return Err(Error::Infeasible(format!(
                    "no truncation level in (2/M, M) holds the front at speed {c}"
                )));
            }
            lat.set_a(next, d)?;
            recentre(&mut lat);
            let f_next = lat.drift(trial_levels, 16)?;
            trials += 1;
            if (f_next > 0.0) != (f_a > 0.0) {
                if f_a > 0.0 {
                    lo = (a, f_a);
                    hi = (next, f_next);
                } else {
                    lo = (next, f_next);
                    hi = (a, f_a);
                }
                a = next;
                break;
            }
            a = next;
            f_a = f_next;
            step *= 2.0;
            if trials > 40 {
                return Err(Error::NonConvergence {
                    iterations: trials,
                    last_residual: f_a,
                    history: Vec::new(),
                });
            }
        }
        // Illinois regula falsi on the drift.
        let drift_tol = 1e-3 * cfg.tolerance * c;
        let mut side = 0;
        for _ in 0..60 {
            let cand = (lo.0 * hi.1 - hi.0 * lo.1) / (hi.1 - lo.1);
            let cand = if cand.is_finite() && cand > lo.0.min(hi.0) && cand < lo.0.max(hi.0) {
                cand
            } else {
                0.5 * (lo.0 + hi.0)
            };
            a = cand;
            lat.set_a(a, d)?;
            recentre(&mut lat);
            let f = lat.drift(trial_levels, 16)?;
            trials += 1;
            if f > 0.0 {
                lo = (a, f);
                if side == 1 {
                    hi.1 *= 0.5;
                }
                side = 1;
            } else {
                hi = (a, f);
                if side == -1 {
                    lo.1 *= 0.5;
                }
                side = -1;
            }
            if f.abs() < drift_tol || (hi.0 - lo.0).abs() < 1e-14 * m {
                break;
            }
        }
        if hi.0 != lo.0 {
            sensitivity = Some((hi.1 - lo.1) / (hi.0 - lo.0));
        }
    }

    // Final relaxation, nudging A with the measured sensitivity.
    recentre(&mut lat);
    let mut history = Vec::new();
    let mut periods = 0;
    let check_every = (trial_levels / period_levels).max(1);
    let mut front_mark = (lat.level, lat.front());
    loop {
        lat.advance_levels(period_levels)?;
        periods += 1;
        let r = lat.residual();
        history.push(r);
        if r < cfg.tolerance {
            break;
        }
        if periods >= cfg.max_periods {
            return Err(Error::NonConvergence {
                iterations: periods,
                last_residual: r,
                history,
            });
        }
        if periods % check_every == 0 {
            let f = lat.front();
            let drift = (f - front_mark.1) * h / ((lat.level - front_mark.0) as f64 * dt);
            if let Some(k) = sensitivity.filter(|k: &f64| *k < 0.0) {
                a -= drift / k;
                lat.set_a(a, d)?;
            }
            if !(1.0..(ns as f64 - 2.0)).contains(&f) {
                return Err(Error::NonConvergence {
                    iterations: periods,
                    last_residual: r,
                    history,
                });
            }
            front_mark = (lat.level, f);
        }
        if history.len() > 200 {
            let recent = history[history.len() - 1];
            let older = history[history.len() - 101];
            if recent > 0.999 * older && cfg.shooting && sensitivity.is_none() {
                return Err(Error::NonConvergence {
                    iterations: periods,
                    last_residual: recent,
                    history,
                });
            }
        }
    }

    // Extra periods: lattice-shift identity and the front trace.
    let snapshot = lat.w.clone();
    let scale = lat.w.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut trace = FrontTrace::default();
    let mut shift_defect: f64 = 0.0;
    for _ in 0..3 {
        for _ in 0..period_levels {
            lat.advance()?;
            let (t, x) = lat.line_front();
            trace.times.push(t);
            trace.positions.push(x);
        }
        let defect = lat
            .w
            .iter()
            .zip(&snapshot)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        shift_defect = shift_defect.max(defect / scale);
    }
    if lat.clamped > 0 {
        warnings.push(format!("{} values left [0, M] and were clamped", lat.clamped));
    }
    let residual = lat.residual();

    let front_row = lat.front();
    let s_first = -(front_row * h);
    let mut wave = PulsatingWave {
        w_tilde: lat.w,
        ns,
        nx,
        ds: h,
        s_first,
        c,
        e: 1.0,
        v0: cfg.v0.clone(),
        mu0: mu,
        m,
        a,
        truncation: lat.trunc,
        residual_history: history,
        periods,
        shooting_trials: trials,
        trace,
        report: PulsatingReport {
            residual,
            lattice_shift_residual: shift_defect,
            far_field_error: f64::NAN,
            monotone_defect: f64::NAN,
            min_time_convexity: f64::NAN,
            cap_gradients: (f64::NAN, f64::NAN),
            measured_speed: f64::NAN,
            speed_in_bracket: false,
            planar_profile_error: None,
        },
        warnings,
    };
    wave.report = verify(&wave);
    Ok(wave)
}

fn verify(wave: &PulsatingWave) -> PulsatingReport {
    let (ns, nx, c, ds) = (wave.ns, wave.nx, wave.c, wave.ds);
    let u = wave.time_derivative();
    let s = wave.s_values();
    let s_front = wave.front_s();
    // Far field: rows below A/2, clear of the descent of g_M, and at least
    // 6/c ahead of the front.
    let top = wave.truncation.inner_flat_hi();
    let in_band: Vec<bool> = (0..ns)
        .map(|i| (0..nx).all(|j| wave.at(i, j) < top) && s[i] <= s_front - 6.0 / c)
        .collect();
    let band_start = (0..ns).find(|&i| in_band[i]).map_or(s_front, |i| s[i]);
    let mut far = if in_band.iter().any(|&b| b) { 0.0f64 } else { f64::NAN };
    let mut monotone: f64 = f64::NEG_INFINITY;
    let mut convex = f64::INFINITY;
    let plateau = (wave.truncation.inner_flat_lo(), wave.truncation.inner_flat_hi());
    for i in 0..ns {
        for j in 0..nx {
            let k = i * nx + j;
            if in_band[i] {
                far = far.max((u[k] + wave.mu0).abs() / wave.mu0);
            }
            monotone = monotone.max(wave.padded(i as isize + 1, j) - wave.at(i, j));
            let (lo, mid, hi) = (
                wave.padded(i as isize - 1, j),
                wave.at(i, j),
                wave.padded(i as isize + 1, j),
            );
            let inside = |v: f64| v > plateau.0 && v < plateau.1;
            if inside(lo) && inside(mid) && inside(hi) {
                convex = convex.min(c * c * (lo - 2.0 * mid + hi) / (ds * ds));
            }
        }
    }
    let cap = |i: usize| -> f64 {
        (0..nx)
            .map(|j| ((wave.padded(i as isize + 1, j) - wave.padded(i as isize - 1, j)) / (2.0 * ds)).abs())
            .fold(0.0, f64::max)
    };
    let measured = if wave.trace.times.len() >= 2 {
        let n = wave.trace.times.len();
        (wave.trace.positions[n - 1] - wave.trace.positions[0]) / (wave.trace.times[n - 1] - wave.trace.times[0])
    } else {
        f64::NAN
    };
    let vmax = wave.v0.iter().cloned().fold(0.0, f64::max);
    let constant = wave.v0.iter().all(|&v| v == wave.v0[0]);
    let planar_profile_error = constant.then(|| {
        // Align at the half level of ∂ₜw, where the exact profile sits ln2/c
        // ahead of its support edge.
        let averaged = row_averages(&u, nx);
        let neg: Vec<f64> = averaged.iter().map(|v| -v).collect();
        let half_idx = front_index(&neg, wave.mu0 / 2.0);
        let edge = wave.s_first + half_idx * ds + std::f64::consts::LN_2 / c;
        let mut err: f64 = 0.0;
        for i in 0..ns {
            if s[i] < band_start {
                continue;
            }
            // Exact profile of the planar wave with reactant μ₀.
            let exact = -wave.mu0 * (-(c * (s[i] - edge)).exp_m1()).max(0.0);
            for j in 0..nx {
                err = err.max((u[i * nx + j] - exact).abs() / wave.mu0);
            }
        }
        err
    });
    PulsatingReport {
        residual: wave.report.residual,
        lattice_shift_residual: wave.report.lattice_shift_residual,
        far_field_error: far,
        monotone_defect: monotone,
        min_time_convexity: convex,
        cap_gradients: (cap(0), cap(ns - 1)),
        measured_speed: measured,
        speed_in_bracket: measured >= c / 2.0 && measured <= 2.0 * c * vmax.sqrt(),
        planar_profile_error,
    }
}
