//! `w(t,x) = -∫_t^∞ u(τ,x) dτ` for one-phase temperature histories.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DuvautField {
    pub times: Vec<f64>,
    /// `w[k][cell]` at `times[k]`.
    pub w: Vec<Vec<f64>>,
    /// Tail `-∫_T^∞ u` added at the horizon, per cell.
    pub tail: Vec<f64>,
}

impl DuvautField {
    /// `∂ₜw` by centered differences (one-sided at the ends).
    pub fn time_derivative(&self) -> Vec<Vec<f64>> {
        let n = self.times.len();
        (0..n)
            .map(|k| {
                let (a, b) = match (k, n) {
                    (_, 1) => return vec![0.0; self.w[0].len()],
                    (0, _) => (0, 1),
                    (k, n) if k == n - 1 => (k - 1, k),
                    (k, _) => (k - 1, k + 1),
                };
                let dt = self.times[b] - self.times[a];
                self.w[b].iter().zip(&self.w[a]).map(|(x, y)| (x - y) / dt).collect()
            })
            .collect()
    }

    /// Samples where `u < -tol` and `w > 0` disagree.
    pub fn support_mismatches(&self, u: &[Vec<f64>], tol: f64) -> usize {
        self.w
            .iter()
            .zip(u)
            .flat_map(|(w, u)| w.iter().zip(u))
            .filter(|(&w, &u)| {
                let burning = u < -tol;
                let positive = w > tol;
                // Cells within `tol` of zero in both are not decidable.
                (burning != positive) && !(u.abs() <= tol || w.abs() <= tol)
            })
            .count()
    }
}

/// Integrate a sampled history `u[k][cell]` backward from the horizon with
/// the trapezoidal rule. The tail beyond the last sample is extrapolated from
/// the last two samples as an exponential decay.
pub fn duvaut_transform(times: &[f64], u: &[Vec<f64>]) -> Result<DuvautField> {
    let n = times.len();
    if n < 2 || u.len() != n {
        return Err(Error::InsufficientData(format!(
            "need at least two samples with matching times, got {} times and {} fields",
            n,
            u.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("sample times must be strictly increasing".into()));
    }
    let cells = u[0].len();
    if u.iter().any(|f| f.len() != cells) {
        return Err(Error::InsufficientData("fields must share one grid".into()));
    }
    for (k, field) in u.iter().enumerate() {
        if let Some(&bad) = field.iter().find(|&&v| !v.is_finite() || v > 1e-12) {
            return Err(Error::Domain(format!(
                "one-phase input needs u <= 0, found {bad} at t = {}",
                times[k]
            )));
        }
    }
    let (last, prev) = (&u[n - 1], &u[n - 2]);
    let dt = times[n - 1] - times[n - 2];
    let mut tail = vec![0.0; cells];
    for c in 0..cells {
        let (a, b) = (prev[c], last[c]);
        if b.abs() <= 1e-14 {
            continue;
        }
        if !(a < b && b < 0.0) {
            return Err(Error::InsufficientData(format!(
                "tail not truncatable at cell {c}: u = {b} is not decaying at the horizon"
            )));
        }
        let rate = (a / b).ln() / dt;
        tail[c] = -b / rate;
    }
    let mut w = vec![vec![0.0; cells]; n];
    w[n - 1] = tail.clone();
    for k in (0..n - 1).rev() {
        let h = times[k + 1] - times[k];
        for c in 0..cells {
            w[k][c] = w[k + 1][c] - 0.5 * h * (u[k][c] + u[k + 1][c]);
        }
    }
    Ok(DuvautField {
        times: times.to_vec(),
        w,
        tail,
    })
}
