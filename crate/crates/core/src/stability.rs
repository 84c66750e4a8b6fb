//! Linear stability of the planar wave: eigenfunction `W`, exponents
//! `μ± = -c/2 ± √(c²/4 + λ)` and the dispersion relation
//! `1 = (c/λ)(-c - μ₋)`, analysed through the regularised residual
//! `G(λ) = λ - c(√(c²/4 + λ) - c/2) = λ² / (√(c²/4 + λ) + c/2)²`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Slack on the branch inequality `Re √(c²/4 + λ) ≥ c/2`, which holds with
/// equality only at `λ = 0`.
const BRANCH_SLACK: f64 = 1e-12;

fn check_speed(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("wave speed must be positive, got {c}")))
    }
}

/// `√(c²/4 + λ)` on the principal branch, rejected when its real part drops
/// below `c/2`.
pub fn branch_root(lambda: Complex64, c: f64) -> Result<Complex64> {
    check_speed(c)?;
    let r = (Complex64::new(c * c / 4.0, 0.0) + lambda).sqrt();
    if r.re < c / 2.0 - BRANCH_SLACK * c.max(1.0) {
        return Err(Error::Branch {
            re: lambda.re,
            im: lambda.im,
            detail: format!("Re sqrt(c^2/4 + lambda) = {} < c/2 = {}", r.re, c / 2.0),
        });
    }
    Ok(r)
}

/// `μ₋ = -c/2 - √(c²/4 + λ)`.
pub fn mu_minus(lambda: Complex64, c: f64) -> Result<Complex64> {
    Ok(-c / 2.0 - branch_root(lambda, c)?)
}

/// `μ₊ = -c/2 + √(c²/4 + λ)`.
pub fn mu_plus(lambda: Complex64, c: f64) -> Result<Complex64> {
    Ok(-c / 2.0 + branch_root(lambda, c)?)
}

pub fn dispersion_residual(lambda: Complex64, c: f64) -> Result<Complex64> {
    let d = branch_root(lambda, c)? + c / 2.0;
    Ok(lambda * lambda / (d * d))
}

/// `(G(λ), G'(λ))` on the principal branch without the branch check, used
/// on contours that dip into `Re λ < 0`.
fn residual_and_slope(lambda: Complex64, c: f64) -> (Complex64, Complex64) {
    let r = (Complex64::new(c * c / 4.0, 0.0) + lambda).sqrt();
    let d = r + c / 2.0;
    let g = lambda * lambda / (d * d);
    let dg = 2.0 * lambda / (d * d) - lambda * lambda / (r * d * d * d);
    (g, dg)
}

/// Rectangle `[re_lo, re_hi] × [im_lo, im_hi]` of the closed right half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionProblem {
    pub c: f64,
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl DispersionProblem {
    pub fn new(c: f64, re: (f64, f64), im: (f64, f64)) -> Result<Self> {
        let mut problems = Vec::new();
        if !(c.is_finite() && c > 0.0) {
            problems.push(format!("wave speed must be positive, got {c}"));
        }
        if !(re.0 >= 0.0 && re.1 >= re.0 && re.1.is_finite()) {
            problems.push(format!("real range must satisfy 0 <= lo <= hi, got {re:?}"));
        }
        if !(im.1 >= im.0 && im.0.is_finite() && im.1.is_finite()) {
            problems.push(format!("imaginary range must satisfy lo <= hi, got {im:?}"));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self { c, re, im })
    }

    fn contains(&self, z: Complex64, tol: f64) -> bool {
        z.re >= self.re.0 - tol && z.re <= self.re.1 + tol && z.im >= self.im.0 - tol && z.im <= self.im.1 + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSearch {
    pub roots: Vec<Root>,
    pub seeds: usize,
    /// Seeds whose Newton iteration diverged or left the branch.
    pub failed_seeds: usize,
    /// Every root found lies within `1e-8` of 0.
    pub only_zero: bool,
}

/// Newton from one seed; `None` on divergence or branch violation.
fn newton(seed: Complex64, c: f64) -> Option<Complex64> {
    let mut z = seed;
    for _ in 0..500 {
        if z.re < -BRANCH_SLACK * c.max(1.0) {
            return None;
        }
        branch_root(z, c).ok()?;
        let (g, dg) = residual_and_slope(z, c);
        if g == Complex64::new(0.0, 0.0) {
            return Some(z);
        }
        if !(dg.norm() > 0.0) {
            return None;
        }
        let step = g / dg;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        if step.norm() <= 1e-15 * z.norm().max(1e-2) {
            return Some(z);
        }
    }
    None
}

/// Zeros of `G` enclosed by the circle, by the argument principle.
pub fn winding_number(center: Complex64, radius: f64, c: f64) -> usize {
    let n = 512;
    let mut total = 0.0;
    let point = |k: usize| {
        let theta = std::f64::consts::TAU * k as f64 / n as f64;
        center + Complex64::from_polar(radius, theta)
    };
    let mut prev = residual_and_slope(point(0), c).0;
    for k in 1..=n {
        let g = residual_and_slope(point(k % n), c).0;
        total += (g / prev).arg();
        prev = g;
    }
    (total / std::f64::consts::TAU).round().max(0.0) as usize
}

/// Grid-seeded complex Newton on `G` over the rectangle, with
/// `density × density` seeds, deduplicated roots and their multiplicities.
pub fn find_roots(problem: &DispersionProblem, density: usize) -> Result<RootSearch> {
    if density < 32 {
        return Err(Error::Domain(format!("need at least 32 seeds per axis, got {density}")));
    }
    let c = problem.c;
    let coord = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (density - 1) as f64;
    let seeds: Vec<Complex64> = (0..density)
        .flat_map(|a| (0..density).map(move |b| (a, b)))
        .map(|(a, b)| {
            Complex64::new(
                coord(problem.re.0, problem.re.1, a),
                coord(problem.im.0, problem.im.1, b),
            )
        })
        .collect();
    let results: Vec<Option<Complex64>> = seeds.par_iter().map(|&s| newton(s, c)).collect();
    let failed_seeds = results.iter().filter(|r| r.is_none()).count();
    let mut found: Vec<Complex64> = Vec::new();
    for z in results.into_iter().flatten() {
        if !problem.contains(z, 1e-9) {
            continue;
        }
        if !found.iter().any(|f| (f - z).norm() < 1e-6) {
            found.push(z);
        }
    }
    let roots: Vec<Root> = found
        .iter()
        .map(|&z| {
            let nearest = found
                .iter()
                .filter(|&&o| o != z)
                .map(|o| (o - z).norm())
                .fold(f64::INFINITY, f64::min);
            let radius = (nearest / 2.0).min(1e-2 * c.min(1.0));
            Root {
                value: z,
                multiplicity: winding_number(z, radius, c),
            }
        })
        .collect();
    let only_zero = roots.iter().all(|r| r.value.norm() <= 1e-8);
    Ok(RootSearch {
        roots,
        seeds: seeds.len(),
        failed_seeds,
        only_zero,
    })
}

/// `W(y) = -(c/λ)(e^{-cy} - e^{μ₋y})`.
pub fn eigenfunction_w(y: f64, lambda: Complex64, c: f64) -> Result<Complex64> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular(
            "W is singular at lambda = 0; use the regularised dispersion residual".into(),
        ));
    }
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("W is defined for y >= 0, got {y}")));
    }
    let mu = mu_minus(lambda, c)?;
    let decay = Complex64::new((-c * y).exp(), 0.0);
    Ok(-(c / lambda) * (decay - (mu * y).exp()))
}

/// Max-norm residual of `W'' + cW' - λW - ce^{-cy}` by central differences
/// on `(0, length)` with step `h`, where `W` is built from `lambda_w` and the
/// equation uses `lambda_ode`.
pub fn verify_ode_with(lambda_w: Complex64, lambda_ode: Complex64, c: f64, length: f64, h: f64) -> Result<f64> {
    check_speed(c)?;
    if !(length >= 10.0 / c) {
        return Err(Error::Domain(format!("need length >= 10/c = {}, got {length}", 10.0 / c)));
    }
    if !(h > 0.0 && h < length / 4.0) {
        return Err(Error::Domain(format!("step must lie in (0, length/4), got {h}")));
    }
    let n = (length / h).round() as usize;
    let w: Vec<Complex64> = (0..=n)
        .map(|k| eigenfunction_w(k as f64 * h, lambda_w, c))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for k in 1..n {
        let y = k as f64 * h;
        let d2 = (w[k + 1] - 2.0 * w[k] + w[k - 1]) / (h * h);
        let d1 = (w[k + 1] - w[k - 1]) / (2.0 * h);
        let r = d2 + c * d1 - lambda_ode * w[k] - c * (-c * y).exp();
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

pub fn verify_ode(lambda: Complex64, c: f64, length: f64, h: f64) -> Result<f64> {
    verify_ode_with(lambda, lambda, c, length, h)
}
