//! Named initial temperature profiles and reactant fields.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Lower bound on the normalised temperature offset.
pub const U_MIN: f64 = -1.0;

/// Temperature profile along the first axis (constant across the second).
#[derive(Debug, Clone, PartialEq)]
pub enum TemperatureProfile {
    Uniform { value: f64 },
    /// `left` for `x < x0 - width/2`, `right` for `x > x0 + width/2`, linear between.
    Step { x0: f64, width: f64, left: f64, right: f64 },
    /// `right + (left - right)(1 - tanh((x - x0)/width))/2`.
    SmoothFront { x0: f64, width: f64, left: f64, right: f64 },
    /// Exact planar wave `-max(1 - e^{-c(x - x0)}, 0)`.
    PlanarWave { x0: f64, c: f64 },
    Table(SampleTable),
}

/// Piecewise-linear interpolant through `(x, value)` samples, clamped at the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl SampleTable {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut problems = Vec::new();
        if xs.is_empty() || xs.len() != values.len() {
            problems.push(format!(
                "table needs matching non-empty columns, got {} abscissae and {} values",
                xs.len(),
                values.len()
            ));
        }
        if xs.iter().chain(&values).any(|v| !v.is_finite()) {
            problems.push("table entries must be finite".into());
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            problems.push("table abscissae must be strictly increasing".into());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self { xs, values })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.values[0];
        }
        if x >= self.xs[n - 1] {
            return self.values[n - 1];
        }
        let k = self.xs.partition_point(|&xi| xi <= x);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

impl TemperatureProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TemperatureProfile::Uniform { value } => *value,
            TemperatureProfile::Step { x0, width, left, right } => {
                let r = ((x - x0) / width + 0.5).clamp(0.0, 1.0);
                left + (right - left) * r
            }
            TemperatureProfile::SmoothFront { x0, width, left, right } => {
                right + (left - right) * 0.5 * (1.0 - ((x - x0) / width).tanh())
            }
            TemperatureProfile::PlanarWave { x0, c } => -(-(-c * (x - x0)).exp_m1()).max(0.0),
            TemperatureProfile::Table(table) => table.eval(x),
        }
    }
}

/// Reactant coefficient field, periodic or constant.
#[derive(Debug, Clone, PartialEq)]
pub enum ReactantProfile {
    Constant(f64),
    /// `mean + Σ_axis amplitude[axis] sin(2π frequency[axis] x_axis)`.
    Sinusoidal {
        mean: f64,
        amplitude: [f64; 2],
        frequency: [f64; 2],
    },
    /// Interpolated along the first axis.
    Table(SampleTable),
}

impl ReactantProfile {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            ReactantProfile::Constant(c) => *c,
            ReactantProfile::Sinusoidal {
                mean,
                amplitude,
                frequency,
            } => {
                let tau = std::f64::consts::TAU;
                mean + amplitude[0] * (tau * frequency[0] * x).sin() + amplitude[1] * (tau * frequency[1] * y).sin()
            }
            ReactantProfile::Table(table) => table.eval(x),
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.sample(|x, y| self.eval(x, y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    /// Smallest `|∂ₓu⁰|` over the sign changes of `u⁰` along the first axis,
    /// `None` when `u⁰` never changes sign.
    pub min_crossing_slope: Option<f64>,
}

/// Sample the profiles on `grid` and check `u⁰ ≥ U_MIN`, `0 ≤ v⁰ ≤ v0_max`.
/// The first axis is offset by `x_origin` so domains need not start at 0.
pub fn build_initial_data(
    grid: &Grid,
    temperature: &TemperatureProfile,
    reactant: &ReactantProfile,
    x_origin: f64,
    v0_max: f64,
) -> Result<InitialData> {
    let u0 = grid.sample(|x, _| temperature.eval(x + x_origin));
    let v0 = grid.sample(|x, y| reactant.eval(x + x_origin, y));
    let mut problems = Vec::new();
    if let Some((k, &u)) = u0.iter().enumerate().find(|(_, u)| !(u.is_finite() && **u >= U_MIN - 1e-14)) {
        problems.push(format!("u0 >= u_min = {U_MIN} violated at cell {k} (u0 = {u})"));
    }
    if let Some((k, &v)) = v0.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        problems.push(format!("0 <= v0 violated at cell {k} (v0 = {v})"));
    }
    if let Some((k, &v)) = v0.iter().enumerate().find(|(_, v)| **v > v0_max) {
        problems.push(format!("v0 <= C = {v0_max} violated at cell {k} (v0 = {v})"));
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    let min_crossing_slope = crossing_slope(grid, &u0);
    Ok(InitialData {
        u0,
        v0,
        min_crossing_slope,
    })
}

/// Smallest one-sided difference quotient across a sign change of `u`
/// (zero counted as nonnegative) along the first axis.
pub fn crossing_slope(grid: &Grid, u: &[f64]) -> Option<f64> {
    let nx = grid.nx();
    let mut best: Option<f64> = None;
    for row in u.chunks(nx) {
        for w in row.windows(2) {
            if (w[0] >= 0.0) != (w[1] >= 0.0) {
                let slope = ((w[1] - w[0]) / grid.h()).abs();
                best = Some(best.map_or(slope, |b: f64| b.min(slope)));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn uniform_profiles() {
        let g = Grid::line(10, 0.1, Boundary::Neumann).unwrap();
        let d = build_initial_data(
            &g,
            &TemperatureProfile::Uniform { value: -0.5 },
            &ReactantProfile::Constant(1.0),
            0.0,
            10.0,
        )
        .unwrap();
        assert!(d.u0.iter().all(|&u| u == -0.5));
        assert!(d.v0.iter().all(|&v| v == 1.0));
        assert_eq!(d.min_crossing_slope, None);
    }

    #[test]
    fn step_slope_at_crossing() {
        let g = Grid::line(100, 0.01, Boundary::Neumann).unwrap();
        let step = TemperatureProfile::Step {
            x0: 0.5,
            width: 0.5,
            left: 0.5,
            right: -0.5,
        };
        let d = build_initial_data(&g, &step, &ReactantProfile::Constant(1.0), 0.0, 1.0).unwrap();
        assert!((d.min_crossing_slope.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn negative_reactant_is_rejected() {
        let g = Grid::line(10, 0.1, Boundary::Neumann).unwrap();
        let table = SampleTable::new(vec![0.0, 1.0], vec![1.0, -0.1]).unwrap();
        let err = build_initial_data(
            &g,
            &TemperatureProfile::Uniform { value: 0.0 },
            &ReactantProfile::Table(table),
            0.0,
            10.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("0 <= v0"));
    }

    #[test]
    fn table_interpolation() {
        let t = SampleTable::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(5.0), 0.0);
        assert!(SampleTable::new(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn planar_wave_profile() {
        let p = TemperatureProfile::PlanarWave { x0: 3.0, c: 1.0 };
        assert_eq!(p.eval(2.0), 0.0);
        assert!((p.eval(3.0 + 2f64.ln()) + 0.5).abs() < 1e-15);
    }
}
