//! Reaction rates for the two high-activation-energy scalings, the
//! regularised truncated rate used by the pulsating-wave construction, and a
//! numerical audit of the asymptotic assumptions on `g_ε`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalingKind {
    /// `g = exp((1 - 1/(z+1))/ε)` for `z > -1`.
    MatkowskySivashinsky,
    /// `g = exp((z/(κz+1))/ε)` for `z > θ̄ - 1`.
    Threshold,
}

impl ScalingKind {
    pub fn name(self) -> &'static str {
        match self {
            ScalingKind::MatkowskySivashinsky => "matkowsky-sivashinsky",
            ScalingKind::Threshold => "threshold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub epsilon: f64,
    pub sigma: f64,
    pub kappa_eps: f64,
    pub theta_bar: f64,
    pub kind: ScalingKind,
}

impl ScalingParams {
    pub fn matkowsky_sivashinsky(epsilon: f64) -> Self {
        Self {
            epsilon,
            sigma: 0.0,
            kappa_eps: 1.0,
            theta_bar: 0.5,
            kind: ScalingKind::MatkowskySivashinsky,
        }
    }

    /// Threshold scaling with `κ(ε) = 1 - σ`.
    pub fn threshold(epsilon: f64, sigma: f64, theta_bar: f64) -> Self {
        Self {
            epsilon,
            sigma,
            kappa_eps: 1.0 - sigma,
            theta_bar,
            kind: ScalingKind::Threshold,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Every violated invariant, empty when the parameters are usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            out.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.sigma >= 0.0 && self.sigma < 1.0) {
            out.push(format!("sigma must lie in [0,1), got {}", self.sigma));
        }
        if !(self.theta_bar > 0.0 && self.theta_bar < 1.0) {
            out.push(format!("theta_bar must lie in (0,1), got {}", self.theta_bar));
        }
        if self.kind == ScalingKind::Threshold && !(self.kappa_eps.is_finite() && self.kappa_eps > 0.0) {
            out.push(format!(
                "threshold scaling requires kappa(eps) > 0, got {}",
                self.kappa_eps
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Lowest temperature offset at which the rate is nonzero.
    pub fn ignition_point(&self) -> f64 {
        match self.kind {
            ScalingKind::MatkowskySivashinsky => -1.0,
            ScalingKind::Threshold => self.theta_bar - 1.0,
        }
    }

    /// Natural logarithm of `g_ε(z)`, `-∞` where the rate vanishes.
    pub fn log_rate(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("temperature offset must be finite, got {z}")));
        }
        match self.kind {
            ScalingKind::MatkowskySivashinsky => {
                if z <= -1.0 {
                    Ok(f64::NEG_INFINITY)
                } else {
                    Ok((1.0 - 1.0 / (z + 1.0)) / self.epsilon)
                }
            }
            ScalingKind::Threshold => {
                if z <= self.theta_bar - 1.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let denom = self.kappa_eps * z + 1.0;
                if denom <= 0.0 {
                    return Err(Error::Singular(format!(
                        "kappa*z + 1 = {denom} at z = {z} (kappa = {})",
                        self.kappa_eps
                    )));
                }
                Ok(z / denom / self.epsilon)
            }
        }
    }

    pub fn rate(&self, z: f64) -> Result<f64> {
        Ok(self.log_rate(z)?.exp())
    }

    /// Fraction of reactant surviving a reaction sub-step of length `dt`
    /// frozen at temperature `z`: `exp(-dt g_ε(z)/ε)`, evaluated in the log
    /// domain so that huge rates give 0 rather than overflow.
    pub fn survival(&self, z: f64, dt: f64) -> Result<f64> {
        let log_g = self.log_rate(z)?;
        if log_g == f64::NEG_INFINITY {
            return Ok(1.0);
        }
        let log_exponent = log_g + dt.ln() - self.epsilon.ln();
        Ok((-log_exponent.exp()).exp())
    }

    /// Upper bound of `g_ε` on the whole line, where one exists.
    pub fn rate_ceiling(&self) -> Option<f64> {
        match self.kind {
            ScalingKind::MatkowskySivashinsky => Some((1.0 / self.epsilon).exp()),
            ScalingKind::Threshold => Some((1.0 / (self.kappa_eps * self.epsilon)).exp()),
        }
    }
}

fn require_kind(p: &ScalingParams, kind: ScalingKind) -> Result<()> {
    if p.kind != kind {
        return Err(Error::Domain(format!(
            "expected {} scaling, got {}",
            kind.name(),
            p.kind.name()
        )));
    }
    Ok(())
}

pub fn g_eps_ms(z: f64, p: &ScalingParams) -> Result<f64> {
    require_kind(p, ScalingKind::MatkowskySivashinsky)?;
    p.rate(z)
}

pub fn g_eps_threshold(z: f64, p: &ScalingParams) -> Result<f64> {
    require_kind(p, ScalingKind::Threshold)?;
    p.rate(z)
}

/// Parameters of the truncated rate `g_M`: supported on `[0, A]`, equal to 1
/// on `[1/M, A - d]`, where `d` is the width of the descent to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    pub m: f64,
    pub a: f64,
    descent_width: f64,
}

impl TruncationParams {
    pub fn new(m: f64, a: f64) -> Result<Self> {
        Self::with_descent_width(m, a, a / 2.0)
    }

    /// `d` must lie in `(0, A/2]` so that the plateau still covers `[1/M, A/2]`.
    pub fn with_descent_width(m: f64, a: f64, d: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(m.is_finite() && a.is_finite() && m > 0.0) {
            problems.push(format!("M must be positive and finite, got M = {m}, A = {a}"));
        } else if !(1.0 / m < a / 2.0 && a < m) {
            problems.push(format!("need 0 < 1/M < A/2 < A < M, got M = {m}, A = {a}"));
        }
        if !(d > 0.0 && d <= a / 2.0) {
            problems.push(format!("descent width must lie in (0, A/2], got {d}"));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self {
            m,
            a,
            descent_width: d,
        })
    }

    pub fn inner_flat_lo(&self) -> f64 {
        1.0 / self.m
    }

    pub fn inner_flat_hi(&self) -> f64 {
        self.a / 2.0
    }

    pub fn descent_width(&self) -> f64 {
        self.descent_width
    }

    pub fn descent_start(&self) -> f64 {
        self.a - self.descent_width
    }
}

/// `g_M(z)`: concave quadratic rise on `(0, 1/M)`, plateau 1, then a C¹
/// two-piece quadratic descent reaching 0 with zero slope at `A`.
pub fn g_m_regularized(z: f64, t: &TruncationParams) -> f64 {
    g_m_with_slope(z, t).0
}

/// `(g_M(z), g_M'(z))`.
pub fn g_m_with_slope(z: f64, t: &TruncationParams) -> (f64, f64) {
    if !(z > 0.0 && z < t.a) {
        return (0.0, 0.0);
    }
    let inv_m = 1.0 / t.m;
    if z < inv_m {
        let q = 1.0 - t.m * z;
        return (1.0 - q * q, 2.0 * t.m * q);
    }
    let lo = t.descent_start();
    if z <= lo {
        return (1.0, 0.0);
    }
    let d = t.descent_width;
    let r = (z - lo) / d;
    if r <= 0.5 {
        (1.0 - 2.0 * r * r, -4.0 * r / d)
    } else {
        let q = 1.0 - r;
        (2.0 * q * q, -4.0 * q / d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionRow {
    pub epsilon: f64,
    /// `max_{K_neg} g_ε/ε`.
    pub max_neg_ratio: f64,
    /// `min_{K_pos} min(g_ε, c_K)`.
    pub min_pos_capped: f64,
    pub rate_ceiling: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub kind: ScalingKind,
    pub c_k: f64,
    pub rows: Vec<AssumptionRow>,
    pub neg_decreasing: bool,
    pub pos_approaching: bool,
    pub verdict: Verdict,
}

/// Sample `g_ε` on the compact sets `K_neg ⊂ (-∞,0)` and `K_pos ⊂ (0,∞)` for
/// each ε and check the two trends: `g_ε/ε → 0` on `K_neg` and
/// `min(g_ε, c_K) → c_K` on `K_pos`.
pub fn check_assumptions(
    template: &ScalingParams,
    eps_sequence: &[f64],
    k_neg: (f64, f64),
    k_pos: (f64, f64),
    c_k: f64,
    resolution: usize,
) -> Result<AssumptionReport> {
    if !(k_neg.0 <= k_neg.1 && k_neg.1 < 0.0 && k_neg.0.is_finite()) {
        return Err(Error::Domain(format!(
            "K_neg must be a compact interval in (-inf, 0), got [{}, {}]",
            k_neg.0, k_neg.1
        )));
    }
    if !(k_pos.0 <= k_pos.1 && k_pos.0 > 0.0 && k_pos.1.is_finite()) {
        return Err(Error::Domain(format!(
            "K_pos must be a compact interval in (0, inf), got [{}, {}]",
            k_pos.0, k_pos.1
        )));
    }
    if !(c_k > 0.0 && c_k.is_finite()) {
        return Err(Error::Domain(format!("c_K must be positive, got {c_k}")));
    }
    if resolution < 2 {
        return Err(Error::Domain("resolution must be at least 2".into()));
    }
    if eps_sequence.iter().any(|&e| !(e > 0.0 && e.is_finite()))
        || eps_sequence.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Domain(
            "epsilon sequence must be positive and strictly decreasing".into(),
        ));
    }

    let sample = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..resolution)
            .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
            .collect()
    };
    let zs_neg = sample(k_neg);
    let zs_pos = sample(k_pos);

    let mut rows = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let p = template.with_epsilon(eps);
        p.validate()?;
        let mut max_neg: f64 = 0.0;
        for &z in &zs_neg {
            max_neg = max_neg.max(p.rate(z)? / eps);
        }
        let mut min_pos = f64::INFINITY;
        for &z in &zs_pos {
            min_pos = min_pos.min(p.rate(z)?.min(c_k));
        }
        rows.push(AssumptionRow {
            epsilon: eps,
            max_neg_ratio: max_neg,
            min_pos_capped: min_pos,
            rate_ceiling: p.rate_ceiling(),
        });
    }

    let neg_decreasing = rows
        .windows(2)
        .all(|w| w[1].max_neg_ratio < w[0].max_neg_ratio || w[1].max_neg_ratio == 0.0);
    let pos_approaching = rows.windows(2).all(|w| w[1].min_pos_capped >= w[0].min_pos_capped)
        && match (rows.first(), rows.last()) {
            (Some(first), Some(last)) => {
                let gap_first = c_k - first.min_pos_capped;
                let gap_last = c_k - last.min_pos_capped;
                gap_last == 0.0 || gap_last < gap_first
            }
            _ => true,
        };
    let verdict = if rows.len() < 2 {
        Verdict::Vacuous
    } else if neg_decreasing && pos_approaching {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(AssumptionReport {
        kind: template.kind,
        c_k,
        rows,
        neg_decreasing,
        pos_approaching,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ms_rate_values() {
        let p = ScalingParams::matkowsky_sivashinsky(0.5);
        assert_eq!(g_eps_ms(-1.0, &p).unwrap(), 0.0);
        assert_eq!(g_eps_ms(-3.0, &p).unwrap(), 0.0);
        assert_eq!(g_eps_ms(0.0, &p).unwrap(), 1.0);
        assert_relative_eq!(g_eps_ms(1.0, &p).unwrap(), std::f64::consts::E, max_relative = 1e-15);
        assert!(g_eps_ms(f64::NAN, &p).is_err());
        assert!(g_eps_threshold(0.0, &p).is_err());
    }

    #[test]
    fn threshold_rate_values() {
        let p = ScalingParams {
            epsilon: 0.5,
            sigma: 0.9,
            kappa_eps: 0.1,
            theta_bar: 0.3,
            kind: ScalingKind::Threshold,
        };
        assert_eq!(g_eps_threshold(-0.7, &p).unwrap(), 0.0);
        assert_eq!(g_eps_threshold(0.0, &p).unwrap(), 1.0);
        let oracle = (-0.5f64 / (1.0 - 0.05) / 0.5).exp();
        assert_relative_eq!(g_eps_threshold(-0.5, &p).unwrap(), oracle, max_relative = 1e-15);
        assert!((oracle - 0.348994).abs() < 1e-4);
    }

    #[test]
    fn threshold_singularity_is_reported() {
        let p = ScalingParams {
            epsilon: 0.5,
            sigma: 0.0,
            kappa_eps: 4.0,
            theta_bar: 0.3,
            kind: ScalingKind::Threshold,
        };
        assert!(matches!(p.rate(-0.5), Err(Error::Singular(_))));
    }

    #[test]
    fn survival_handles_huge_rates() {
        let p = ScalingParams::matkowsky_sivashinsky(1e-3);
        assert_eq!(p.survival(5.0, 1e-4).unwrap(), 0.0);
        assert_eq!(p.survival(-1.5, 1e-4).unwrap(), 1.0);
        let q = ScalingParams::matkowsky_sivashinsky(0.5);
        assert_relative_eq!(q.survival(0.0, 0.1).unwrap(), (-0.2f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn g_m_shape() {
        let t = TruncationParams::new(4.0, 2.0).unwrap();
        assert_eq!(g_m_regularized((0.25 + 1.0) / 2.0, &t), 1.0);
        assert_eq!(g_m_regularized(-0.1, &t), 0.0);
        assert_eq!(g_m_regularized(2.1, &t), 0.0);
        // Derivative agrees with finite differences across every branch.
        for k in 1..400 {
            let z = 2.0 * k as f64 / 400.0 + 1e-4;
            let h = 1e-7;
            let fd = (g_m_regularized(z + h, &t) - g_m_regularized(z - h, &t)) / (2.0 * h);
            assert!((fd - g_m_with_slope(z, &t).1).abs() < 1e-5, "z = {z}");
        }
    }

    #[test]
    fn g_m_exhaustive_grid_at_small_m() {
        let m = 1.0;
        let a = (-1.0f64).exp();
        // The invariant 1/M < A/2 fails at M = 1, so the check uses the shape
        // with the same A and a larger plateau height.
        assert!(TruncationParams::new(m, a).is_err());
        let t = TruncationParams::new(8.0, a).unwrap();
        let n = 10_000;
        let zs: Vec<f64> = (0..n).map(|k| a * k as f64 / (n - 1) as f64).collect();
        let g: Vec<f64> = zs.iter().map(|&z| g_m_regularized(z, &t)).collect();
        assert!(g.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for k in 1..n {
            if zs[k] < a / 2.0 {
                assert!(g[k] >= g[k - 1]);
            }
        }
    }

    #[test]
    fn truncation_invariants() {
        assert!(TruncationParams::new(16.0, 15.0).is_ok());
        assert!(TruncationParams::new(16.0, 17.0).is_err());
        assert!(TruncationParams::new(2.0, 0.5).is_err());
        assert!(TruncationParams::with_descent_width(16.0, 15.0, 8.0).is_err());
    }

    #[test]
    fn assumptions_ms() {
        let p = ScalingParams::matkowsky_sivashinsky(0.2);
        let r = check_assumptions(&p, &[0.2, 0.1, 0.05], (-0.9, -0.5), (0.1, 1.0), 1.0, 10_000).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.rows.windows(2).all(|w| w[1].max_neg_ratio < w[0].max_neg_ratio));
        assert!(r.rows.iter().all(|row| row.min_pos_capped == 1.0));

        // Near z = 0 the ratio e^{-a/ε}/ε peaks at ε = a = 1/9, so the
        // sequence over {0.2, 0.1, 0.05} is not monotone on [-0.9, -0.1].
        let r = check_assumptions(&p, &[0.2, 0.1, 0.05], (-0.9, -0.1), (0.1, 1.0), 1.0, 10_000).unwrap();
        let a = 1.0 / 9.0;
        let oracle: Vec<f64> = [0.2f64, 0.1, 0.05].iter().map(|e| (-a / e).exp() / e).collect();
        for (row, o) in r.rows.iter().zip(&oracle) {
            assert!((row.max_neg_ratio - o).abs() < 1e-9 * o);
        }
        assert_eq!(r.verdict, Verdict::Fail);
        let tail = check_assumptions(&p, &[0.05, 0.025, 0.0125], (-0.9, -0.1), (0.1, 1.0), 1.0, 10_000).unwrap();
        assert_eq!(tail.verdict, Verdict::Pass);

        let empty = check_assumptions(&p, &[], (-0.9, -0.1), (0.1, 1.0), 1.0, 100).unwrap();
        assert_eq!(empty.verdict, Verdict::Vacuous);
        assert!(check_assumptions(&p, &[0.1], (-0.9, 0.0), (0.1, 1.0), 1.0, 100).is_err());
        assert!(check_assumptions(&p, &[0.1, 0.2], (-0.9, -0.1), (0.1, 1.0), 1.0, 100).is_err());
    }

    #[test]
    fn validation_lists_everything() {
        let p = ScalingParams {
            epsilon: -1.0,
            sigma: 0.9,
            kappa_eps: 0.0,
            theta_bar: 1.5,
            kind: ScalingKind::Threshold,
        };
        assert_eq!(p.problems().len(), 3);
    }
}
