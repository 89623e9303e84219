//! Negative eigenvalues of `-d^2/dx^2 + Q` for compactly supported `Q`.
//!
//! Shooting starts from the decaying left tail `e^{omega x}` and the mismatch
//! `y'(B) + omega y(B)` vanishes exactly when the right tail decays too.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{scaled_potential, PiecewisePotential, ScalingFamily};
use crate::prop::{l2_norm, propagate_rescaled, NormPiece, OdeState, Trajectory};

/// Smallest `omega` scanned; roots below it are treated as sitting at the threshold.
pub const OMEGA_MIN: f64 = 1e-12;
const GEOMETRIC_POINTS: usize = 256;
const LINEAR_POINTS: usize = 256;
const ROOT_REL_WIDTH: f64 = 1e-12;

/// `H_lambda = -d^2/dx^2 + U + lambda alpha_lambda V(alpha_lambda x)`.
#[derive(Debug, Clone)]
pub struct ScaledProblem {
    pub u: PiecewisePotential,
    pub v: PiecewisePotential,
    pub family: ScalingFamily,
    pub lambda: f64,
}

impl ScaledProblem {
    pub fn new(u: PiecewisePotential, v: PiecewisePotential, family: ScalingFamily, lambda: f64) -> Self {
        Self { u, v, family, lambda }
    }

    pub fn alpha(&self) -> Result<f64> {
        self.family.alpha_at(self.lambda)
    }

    /// `lambda alpha V(alpha x)` alone.
    pub fn perturbation(&self) -> Result<PiecewisePotential> {
        scaled_potential(&self.v, &self.family, self.lambda)
    }

    /// `U + lambda alpha V(alpha x)` on the common half-width.
    pub fn q(&self) -> Result<PiecewisePotential> {
        Ok(self.u.sum(&self.perturbation()?))
    }

    pub fn half_width(&self) -> Result<f64> {
        Ok(self.u.half_width().max(self.v.half_width() / self.alpha()?))
    }
}

/// `y'(B) + omega y(B)` for the solution equal to `e^{omega x}` left of `-B`.
///
/// On wide supports the solution is rescaled during propagation, so only the
/// sign and zeros of the result are meaningful there.
pub fn mismatch(q: &PiecewisePotential, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    let b = q.half_width();
    let (end, _) = propagate_rescaled(q, -omega * omega, OdeState::new(-b, 1.0, omega), b)?;
    Ok(end.dy + omega * end.y)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EigenSolveResult {
    /// Increasing, all negative.
    pub eigenvalues: Vec<f64>,
    pub omegas: Vec<f64>,
    pub bracket_count: usize,
    /// `|F(omega)|` at each converged root.
    pub residuals: Vec<f64>,
}

/// Default scan ceiling: `sqrt(max(0, -min Q)) + 1`.
pub fn default_omega_max(q: &PiecewisePotential) -> f64 {
    (-q.lower_bound()).max(0.0).sqrt() + 1.0
}

fn scan_grid(omega_min: f64, omega_max: f64) -> Vec<f64> {
    let ratio = (omega_max / omega_min).ln() / (GEOMETRIC_POINTS - 1) as f64;
    let mut grid: Vec<f64> = (0..GEOMETRIC_POINTS).map(|i| omega_min * (ratio * i as f64).exp()).collect();
    grid.extend((1..=LINEAR_POINTS).map(|i| omega_max * i as f64 / LINEAR_POINTS as f64));
    grid.push(omega_max);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn bisect(q: &PiecewisePotential, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<(f64, f64)> {
    while hi - lo > ROOT_REL_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = mismatch(q, mid)?;
        if fm == 0.0 {
            return Ok((mid, 0.0));
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    Ok((root, mismatch(q, root)?.abs()))
}

/// All negative eigenvalues with `omega` in `(OMEGA_MIN, omega_max]`.
pub fn find_negative_eigenvalues(q: &PiecewisePotential, omega_max: Option<f64>) -> Result<EigenSolveResult> {
    let omega_max = omega_max.unwrap_or_else(|| default_omega_max(q));
    if !(omega_max > OMEGA_MIN) {
        return Err(Error::InvalidInput(format!("omega_max = {omega_max} is below the scan floor")));
    }
    let grid = scan_grid(OMEGA_MIN, omega_max);
    let values: Vec<f64> = grid.par_iter().map(|&w| mismatch(q, w)).collect::<Result<_>>()?;

    let mut roots: Vec<(f64, f64)> = Vec::new();
    let mut brackets = 0;
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push((grid[i], 0.0));
            continue;
        }
        if i + 1 < grid.len() && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            brackets += 1;
            roots.push(bisect(q, grid[i], grid[i + 1], values[i])?);
        }
    }
    roots.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(EigenSolveResult {
        eigenvalues: roots.iter().map(|r| -r.0 * r.0).collect(),
        omegas: roots.iter().map(|r| r.0).collect(),
        bracket_count: brackets,
        residuals: roots.iter().map(|r| r.1).collect(),
    })
}

/// The negative eigenvalue of `H_lambda` closest to zero, with its `omega`.
pub fn threshold_eigenvalue(problem: &ScaledProblem) -> Result<(f64, f64)> {
    if !(problem.lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {}", problem.lambda)));
    }
    let q = problem.q()?;
    let result = find_negative_eigenvalues(&q, None)?;
    match (result.eigenvalues.last(), result.omegas.last()) {
        (Some(&e), Some(&w)) => Ok((e, w)),
        _ => Err(Error::NotFound),
    }
}

/// Eigenfunction reconstructed from shooting, with exponential tails glued at `+-B`.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub omega: f64,
    trajectory: Trajectory,
}

impl Eigenfunction {
    pub fn new(q: &PiecewisePotential, omega: f64) -> Result<Self> {
        let b = q.half_width();
        let trajectory = Trajectory::shoot(q, -omega * omega, OdeState::new(-b, 1.0, omega), b)?;
        Ok(Self { omega, trajectory })
    }

    /// `(phi(x), phi'(x))`; the right tail uses the value at `B`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let start = self.trajectory.start();
        let end = self.trajectory.end();
        if x < start.x {
            let y = (self.omega * (x - start.x)).exp();
            (y, self.omega * y)
        } else if x > end.x {
            let y = end.y * (-self.omega * (x - end.x)).exp();
            (y, -self.omega * y)
        } else {
            self.trajectory.eval(x)
        }
    }

    pub fn norm(&self) -> Result<f64> {
        let start = self.trajectory.start();
        let end = self.trajectory.end();
        let f = |x: f64| self.trajectory.value(x);
        let knots = self.trajectory.knots();
        l2_norm(&[
            NormPiece::ExpTail { amplitude: 1.0, rate: self.omega },
            NormPiece::Finite { f: &f, a: start.x, b: end.x, breaks: &knots },
            NormPiece::ExpTail { amplitude: end.y, rate: self.omega },
        ])
    }
}
