//! Uniform cell-centred meshes in one or two dimensions and the implicit
//! diffusion solves shared by the finite-ε and limit solvers.
//!
//! Cell `i` along an axis has centre `(i + 1/2) h`. Fields are stored as flat
//! vectors with the first axis varying fastest, so the storage order is the
//! lexicographic cell order used by the output tables.
//!
//! Neumann closure is implemented by even reflection through a ghost cell,
//! which makes every stencil conservative: the discrete Laplacian sums to zero
//! over the grid for both closures.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Neumann,
    Periodic,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Neumann => "neumann",
            Boundary::Periodic => "periodic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    cells: Vec<usize>,
    h: f64,
    boundary: Boundary,
}

impl Grid {
    pub fn new(cells: &[usize], h: f64, boundary: Boundary) -> Result<Self> {
        let mut problems = Vec::new();
        if cells.is_empty() || cells.len() > 2 {
            problems.push(format!("grid dimension must be 1 or 2, got {}", cells.len()));
        }
        for (axis, &n) in cells.iter().enumerate() {
            if n < 3 {
                problems.push(format!("axis {axis} needs at least 3 cells, got {n}"));
            }
        }
        if !(h.is_finite() && h > 0.0) {
            problems.push(format!("grid spacing must be positive, got {h}"));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self {
            cells: cells.to_vec(),
            h,
            boundary,
        })
    }

    pub fn line(n: usize, h: f64, boundary: Boundary) -> Result<Self> {
        Self::new(&[n], h, boundary)
    }

    pub fn plane(nx: usize, ny: usize, h: f64, boundary: Boundary) -> Result<Self> {
        Self::new(&[nx, ny], h, boundary)
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn nx(&self) -> usize {
        self.cells[0]
    }

    /// Number of cells along the second axis, 1 for a line.
    pub fn ny(&self) -> usize {
        self.cells.get(1).copied().unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// Physical extent along each axis.
    pub fn lengths(&self) -> Vec<f64> {
        self.cells.iter().map(|&n| n as f64 * self.h).collect()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    /// Centre of cell `idx` as `(x, y)`; `y` is zero on a line.
    pub fn center(&self, idx: usize) -> (f64, f64) {
        let nx = self.nx();
        let (i, j) = (idx % nx, idx / nx);
        let x = (i as f64 + 0.5) * self.h;
        if self.dim() == 1 {
            (x, 0.0)
        } else {
            (x, (j as f64 + 0.5) * self.h)
        }
    }

    pub fn centers_x(&self) -> Vec<f64> {
        (0..self.nx()).map(|i| (i as f64 + 0.5) * self.h).collect()
    }

    /// Sample a function of the cell centre on every cell.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let (x, y) = self.center(idx);
                f(x, y)
            })
            .collect()
    }

    /// Integral of a cell field (midpoint rule).
    pub fn integrate(&self, field: &[f64]) -> f64 {
        field.iter().sum::<f64>() * self.cell_volume()
    }

    fn neighbour(&self, i: usize, n: usize, forward: bool) -> Option<usize> {
        match (forward, self.boundary) {
            (true, _) if i + 1 < n => Some(i + 1),
            (false, _) if i > 0 => Some(i - 1),
            (true, Boundary::Periodic) => Some(0),
            (false, Boundary::Periodic) => Some(n - 1),
            (_, Boundary::Neumann) => None,
        }
    }

    /// Undivided Laplacian `h^2 Δu` with the grid's closure. Neighbours that
    /// fall outside a Neumann boundary mirror the cell itself and contribute
    /// nothing.
    pub fn laplacian_undivided(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.len());
        let nx = self.nx();
        let ny = self.ny();
        for j in 0..ny {
            for i in 0..nx {
                let idx = j * nx + i;
                let centre = u[idx];
                let mut acc = 0.0;
                for fwd in [false, true] {
                    if let Some(k) = self.neighbour(i, nx, fwd) {
                        acc += u[j * nx + k] - centre;
                    }
                    if self.dim() == 2 {
                        if let Some(k) = self.neighbour(j, ny, fwd) {
                            acc += u[k * nx + i] - centre;
                        }
                    }
                }
                out[idx] = acc;
            }
        }
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.laplacian_undivided(u, &mut out);
        let inv_h2 = 1.0 / (self.h * self.h);
        out.iter_mut().for_each(|v| *v *= inv_h2);
        out
    }

    /// Indices of the distinct cells sharing a face with `idx`.
    pub fn neighbours(&self, idx: usize) -> Vec<usize> {
        let nx = self.nx();
        let ny = self.ny();
        let (i, j) = (idx % nx, idx / nx);
        let mut out = Vec::with_capacity(4);
        for fwd in [false, true] {
            if let Some(k) = self.neighbour(i, nx, fwd) {
                out.push(j * nx + k);
            }
            if self.dim() == 2 {
                if let Some(k) = self.neighbour(j, ny, fwd) {
                    out.push(k * nx + i);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn real_neighbours(&self, idx: usize) -> usize {
        let nx = self.nx();
        let ny = self.ny();
        let (i, j) = (idx % nx, idx / nx);
        let mut count = 0;
        for fwd in [false, true] {
            count += self.neighbour(i, nx, fwd).is_some() as usize;
            if self.dim() == 2 {
                count += self.neighbour(j, ny, fwd).is_some() as usize;
            }
        }
        count
    }
}

/// Outcome of one implicit diffusion solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solver for `(I - a h^2 Δ) u = rhs` with `a = θ dt / h^2`, factorised once
/// for a fixed coefficient.
#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    grid: Grid,
    a: f64,
    kind: SolverKind,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
}

#[derive(Debug, Clone)]
enum SolverKind {
    /// Thomas sweep with the forward-elimination coefficients cached.
    Tridiagonal { c_prime: Vec<f64>, inv_denom: Vec<f64> },
    /// Cyclic line: Thomas on the open line plus a Sherman-Morrison correction.
    Cyclic {
        c_prime: Vec<f64>,
        inv_denom: Vec<f64>,
        z: Vec<f64>,
        gamma: f64,
    },
    ConjugateGradient,
}

impl ImplicitDiffusion {
    /// `a` is the dimensionless coefficient `θ dt / h^2`.
    pub fn new(grid: &Grid, a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Domain(format!(
                "diffusion coefficient must be finite and non-negative, got {a}"
            )));
        }
        let n = grid.nx();
        let kind = match (grid.dim(), grid.boundary()) {
            (1, Boundary::Neumann) => {
                let mut diag = vec![1.0 + 2.0 * a; n];
                diag[0] = 1.0 + a;
                diag[n - 1] = 1.0 + a;
                let (c_prime, inv_denom) = thomas_factor(&diag, -a);
                SolverKind::Tridiagonal { c_prime, inv_denom }
            }
            (1, Boundary::Periodic) => {
                // A = T + u v^T with u = (gamma, 0.., -a), v = (1, 0.., -a / gamma).
                let gamma = -(1.0 + 2.0 * a);
                let mut diag = vec![1.0 + 2.0 * a; n];
                diag[0] -= gamma;
                diag[n - 1] -= -a * -a / gamma;
                let (c_prime, inv_denom) = thomas_factor(&diag, -a);
                let mut u = vec![0.0; n];
                u[0] = gamma;
                u[n - 1] = -a;
                let mut z = vec![0.0; n];
                thomas_apply(&c_prime, &inv_denom, -a, &u, &mut z);
                SolverKind::Cyclic {
                    c_prime,
                    inv_denom,
                    z,
                    gamma,
                }
            }
            _ => SolverKind::ConjugateGradient,
        };
        Ok(Self {
            grid: grid.clone(),
            a,
            kind,
            cg_tolerance: 1e-15,
            cg_max_iterations: 10_000,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.a
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.grid.laplacian_undivided(u, out);
        for (o, &ui) in out.iter_mut().zip(u) {
            *o = ui - self.a * *o;
        }
    }

    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) -> Result<SolveStats> {
        let a = self.a;
        match &self.kind {
            SolverKind::Tridiagonal { c_prime, inv_denom } => {
                thomas_apply(c_prime, inv_denom, -a, rhs, out);
                Ok(SolveStats {
                    iterations: 1,
                    relative_residual: 0.0,
                })
            }
            SolverKind::Cyclic {
                c_prime,
                inv_denom,
                z,
                gamma,
            } => {
                let n = rhs.len();
                thomas_apply(c_prime, inv_denom, -a, rhs, out);
                let v_last = -a / gamma;
                let num = out[0] + v_last * out[n - 1];
                let den = 1.0 + z[0] + v_last * z[n - 1];
                let factor = num / den;
                for (o, &zi) in out.iter_mut().zip(z) {
                    *o -= factor * zi;
                }
                Ok(SolveStats {
                    iterations: 1,
                    relative_residual: 0.0,
                })
            }
            SolverKind::ConjugateGradient => self.conjugate_gradient(rhs, out),
        }
    }

    fn conjugate_gradient(&self, rhs: &[f64], x: &mut [f64]) -> Result<SolveStats> {
        let inv_diag: Vec<f64> = (0..rhs.len())
            .map(|idx| 1.0 / (1.0 + self.a * self.grid.real_neighbours(idx) as f64))
            .collect();
        self.pcg(|u, out| self.apply(u, out), &inv_diag, rhs, x)
    }

    /// Solve with the cells in `pinned` held at `u = 0`: those rows become
    /// the identity and their couplings drop out of the free rows, which
    /// keeps the system symmetric positive definite.
    pub fn solve_pinned(&self, rhs: &[f64], pinned: &[bool], out: &mut [f64]) -> Result<SolveStats> {
        let n = rhs.len();
        let a = self.a;
        let masked_rhs: Vec<f64> = rhs.iter().zip(pinned).map(|(&r, &p)| if p { 0.0 } else { r }).collect();
        if matches!(self.kind, SolverKind::Tridiagonal { .. }) {
            let mut sub = vec![0.0; n];
            let mut sup = vec![0.0; n];
            let mut diag = vec![1.0; n];
            for i in 0..n {
                if pinned[i] {
                    continue;
                }
                diag[i] = 1.0 + a * self.grid.real_neighbours(i) as f64;
                if i > 0 && !pinned[i - 1] {
                    sub[i] = -a;
                }
                if i + 1 < n && !pinned[i + 1] {
                    sup[i] = -a;
                }
            }
            solve_tridiagonal(&sub, &diag, &sup, &masked_rhs, out);
            return Ok(SolveStats {
                iterations: 1,
                relative_residual: 0.0,
            });
        }
        let free: Vec<f64> = pinned.iter().map(|&p| if p { 0.0 } else { 1.0 }).collect();
        let inv_diag: Vec<f64> = (0..n)
            .map(|idx| {
                if pinned[idx] {
                    1.0
                } else {
                    1.0 / (1.0 + a * self.grid.real_neighbours(idx) as f64)
                }
            })
            .collect();
        let apply = |u: &[f64], out: &mut [f64]| {
            let masked: Vec<f64> = u.iter().zip(&free).map(|(u, f)| u * f).collect();
            self.grid.laplacian_undivided(&masked, out);
            for k in 0..n {
                out[k] = if pinned[k] { u[k] } else { u[k] - a * out[k] };
            }
        };
        self.pcg(apply, &inv_diag, &masked_rhs, out)
    }

    fn pcg(&self, apply: impl Fn(&[f64], &mut [f64]), inv_diag: &[f64], rhs: &[f64], x: &mut [f64]) -> Result<SolveStats> {
        let n = rhs.len();
        let rhs_norm = dot(rhs, rhs).sqrt();
        if rhs_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        // Warm start from the right-hand side: the operator is a small
        // perturbation of the identity for the step sizes in use.
        x.copy_from_slice(rhs);
        let mut ax = vec![0.0; n];
        apply(x, &mut ax);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let mut rel = dot(&r, &r).sqrt() / rhs_norm;
        for it in 0..self.cg_max_iterations {
            if rel <= self.cg_tolerance {
                return Ok(SolveStats {
                    iterations: it,
                    relative_residual: rel,
                });
            }
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            rel = dot(&r, &r).sqrt() / rhs_norm;
            for k in 0..n {
                z[k] = r[k] * inv_diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        if rel <= 1e3 * self.cg_tolerance.max(f64::EPSILON) {
            // Stagnation at round-off level is acceptable.
            return Ok(SolveStats {
                iterations: self.cg_max_iterations,
                relative_residual: rel,
            });
        }
        Err(Error::NonConvergence {
            iterations: self.cg_max_iterations,
            last_residual: rel,
            history: vec![rel],
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Forward elimination for a symmetric tridiagonal matrix with constant
/// off-diagonal `off`.
pub(crate) fn thomas_factor(diag: &[f64], off: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut inv_denom = vec![0.0; n];
    inv_denom[0] = 1.0 / diag[0];
    c_prime[0] = off * inv_denom[0];
    for i in 1..n {
        let denom = diag[i] - off * c_prime[i - 1];
        inv_denom[i] = 1.0 / denom;
        c_prime[i] = off * inv_denom[i];
    }
    (c_prime, inv_denom)
}

pub(crate) fn thomas_apply(c_prime: &[f64], inv_denom: &[f64], off: f64, rhs: &[f64], out: &mut [f64]) {
    let n = rhs.len();
    out[0] = rhs[0] * inv_denom[0];
    for i in 1..n {
        out[i] = (rhs[i] - off * out[i - 1]) * inv_denom[i];
    }
    for i in (0..n - 1).rev() {
        out[i] -= c_prime[i] * out[i + 1];
    }
}

/// General tridiagonal solve (sub, diag, sup all varying); `sub[0]` and
/// `sup[n-1]` are ignored.
pub(crate) fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], out: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_solver(grid: &Grid, a: f64) {
        let rhs = grid.sample(|x, y| (3.0 * x).sin() + y * y - 0.2);
        let solver = ImplicitDiffusion::new(grid, a).unwrap();
        let mut u = vec![0.0; rhs.len()];
        solver.solve(&rhs, &mut u).unwrap();
        let mut back = vec![0.0; rhs.len()];
        solver.apply(&u, &mut back);
        let err = back
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "residual {err}");
        let drift = (u.iter().sum::<f64>() - rhs.iter().sum::<f64>()).abs();
        assert!(drift < 1e-11, "sum drift {drift}");
    }

    #[test]
    fn implicit_solves_invert_the_operator() {
        for b in [Boundary::Neumann, Boundary::Periodic] {
            check_solver(&Grid::line(37, 0.1, b).unwrap(), 3.7);
            check_solver(&Grid::plane(12, 9, 0.1, b).unwrap(), 2.5);
        }
    }

    #[test]
    fn pinned_solves_agree_across_backends() {
        let line = Grid::line(30, 0.1, Boundary::Neumann).unwrap();
        let plane = Grid::plane(30, 1, 0.1, Boundary::Neumann);
        assert!(plane.is_err());
        let rhs = line.sample(|x, _| (2.0 * x).cos() - 0.3);
        let mut pinned = vec![false; 30];
        pinned[4] = true;
        pinned[17] = true;
        let direct = ImplicitDiffusion::new(&line, 1.7).unwrap();
        let mut a = vec![0.0; 30];
        direct.solve_pinned(&rhs, &pinned, &mut a).unwrap();
        assert_eq!(a[4], 0.0);
        assert_eq!(a[17], 0.0);
        let mut cg = direct.clone();
        cg.kind = SolverKind::ConjugateGradient;
        let mut b = vec![0.0; 30];
        cg.solve_pinned(&rhs, &pinned, &mut b).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        // Free rows satisfy the original equation with u = 0 at pinned cells.
        let mut lap = vec![0.0; 30];
        line.laplacian_undivided(&a, &mut lap);
        for k in (0..30).filter(|&k| !pinned[k]) {
            assert!((a[k] - 1.7 * lap[k] - rhs[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_is_conservative() {
        for b in [Boundary::Neumann, Boundary::Periodic] {
            let g = Grid::plane(7, 5, 0.3, b).unwrap();
            let u = g.sample(|x, y| x * x * y + (y * 5.0).cos());
            let lap = g.laplacian(&u);
            assert!(lap.iter().sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::line(2, 0.1, Boundary::Neumann).is_err());
        assert!(Grid::line(10, 0.0, Boundary::Neumann).is_err());
        assert!(Grid::new(&[4, 4, 4], 0.1, Boundary::Neumann).is_err());
    }

    #[test]
    fn general_tridiagonal_matches_thomas() {
        let n = 9;
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + i as f64 * 0.1).collect();
        let sub = vec![-1.0; n];
        let sup = vec![-1.0; n];
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut a = vec![0.0; n];
        solve_tridiagonal(&sub, &diag, &sup, &rhs, &mut a);
        let (c, d) = thomas_factor(&diag, -1.0);
        let mut b = vec![0.0; n];
        thomas_apply(&c, &d, -1.0, &rhs, &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}
