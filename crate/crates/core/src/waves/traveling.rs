//! Closed-form traveling wave for the truncated kinetics `χ_{(0,A)}`:
//!
//! ```text
//! φ(s) = M(1 - e^{c0(s - s0)})          s ≤ s1
//!        (e^{c0 s} - 1 - c0 s)/c0²       s1 ≤ s ≤ 0
//!        0                               s ≥ 0
//! ```
//!
//! with `s1 = -c0 M` and `M - A = (1 - e^{-c0² M})/c0²`.

use crate::error::{Error, Result};

/// `A = M - (1 - e^{-c0² M})/c0²`, computed without cancellation.
pub fn solve_a(c0: f64, m: f64) -> Result<f64> {
    if !(c0.is_finite() && c0 > 0.0 && m.is_finite() && m > 0.0) {
        return Err(Error::Domain(format!("need c0 > 0 and M > 0, got c0 = {c0}, M = {m}")));
    }
    let x = c0 * c0 * m;
    let a = (x + (-x).exp_m1()) / (c0 * c0);
    if !(a > 0.0 && a < m) {
        return Err(Error::Infeasible(format!(
            "A = {a} is not in (0, M) for c0 = {c0}, M = {m}"
        )));
    }
    Ok(a)
}

/// `|M - A - (1 - e^{-c0² M})/c0²|`.
pub fn eq13_residual(c0: f64, m: f64, a: f64) -> f64 {
    let x = c0 * c0 * m;
    (m - a + (-x).exp_m1() / (c0 * c0)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelingWave {
    pub c0: f64,
    pub m: f64,
    pub a: f64,
    pub s0: f64,
    pub s1: f64,
}

impl TravelingWave {
    pub fn new(c0: f64, m: f64) -> Result<Self> {
        let a = solve_a(c0, m)?;
        Self::from_parts(c0, m, a)
    }

    /// Wave with an arbitrary `A ∈ (0, M)`; branch matching at `s1` holds
    /// only when `A` is the value returned by [`solve_a`].
    pub fn from_parts(c0: f64, m: f64, a: f64) -> Result<Self> {
        if !(c0 > 0.0 && m > 0.0 && a > 0.0 && a < m && c0.is_finite() && m.is_finite()) {
            return Err(Error::Invariant(format!(
                "traveling wave needs c0 > 0 and 0 < A < M, got c0 = {c0}, M = {m}, A = {a}"
            )));
        }
        let s1 = -c0 * m;
        let s0 = s1 - ((m - a) / m).ln() / c0;
        Ok(Self { c0, m, a, s0, s1 })
    }

    fn left(&self, s: f64) -> (f64, f64) {
        let e = (self.c0 * (s - self.s0)).exp();
        (self.m * (1.0 - e), -self.m * self.c0 * e)
    }

    fn middle(&self, s: f64) -> (f64, f64) {
        let c = self.c0;
        let x = c * s;
        // e^x - 1 - x without cancellation near 0.
        let value = if x.abs() < 1e-3 {
            x * x / 2.0 * (1.0 + x / 3.0 * (1.0 + x / 4.0))
        } else {
            x.exp_m1() - x
        };
        (value / (c * c), x.exp_m1() / c)
    }

    pub fn profile(&self, s: f64) -> f64 {
        self.profile_with_slope(s).0
    }

    /// `(φ(s), φ'(s))`.
    pub fn profile_with_slope(&self, s: f64) -> (f64, f64) {
        if s >= 0.0 {
            (0.0, 0.0)
        } else if s > self.s1 {
            self.middle(s)
        } else {
            self.left(s)
        }
    }

    /// Value and slope jumps `(value at s1, slope at s1, value at 0, slope at 0)`
    /// between the branch formulas meeting there.
    pub fn branch_jumps(&self) -> [f64; 4] {
        let (l_v, l_d) = self.left(self.s1);
        let (m_v, m_d) = self.middle(self.s1);
        let (z_v, z_d) = self.middle(0.0);
        [(l_v - m_v).abs(), (l_d - m_d).abs(), z_v.abs(), z_d.abs()]
    }

    pub fn eq13_residual(&self) -> f64 {
        eq13_residual(self.c0, self.m, self.a)
    }
}
