//! Propagation of `-y'' + (Q - E) y = 0` across a potential's support.
//!
//! Constant cells use closed-form transfer matrices (cosh/sinh or cos/sin);
//! analytic cells use adaptive Taylor stepping. Every propagation can be
//! recorded as a [`Trajectory`] that evaluates `(y, y')` anywhere on its span.

pub mod quad;
pub mod taylor;

mod inhomogeneous;

pub use inhomogeneous::{solve_inhomogeneous, FundamentalPair, InhomogeneousSolution, Source};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::PiecewisePotential;

/// A point on a solution: position, value and slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeState {
    pub x: f64,
    pub y: f64,
    pub dy: f64,
}

impl OdeState {
    pub fn new(x: f64, y: f64, dy: f64) -> Self {
        Self { x, y, dy }
    }
}

/// `sinh(z)/z` or `sin(z)/z` without cancellation near zero, where
/// `z^2 = k2 * dx^2` and `k2 = Q - E`. Returns `(C, S)` with
/// `y(dx) = C y0 + S dy0`, `y'(dx) = k2 S y0 + C dy0`.
const RENORM_THRESHOLD: f64 = 1e150;

fn closed_transfer(k2: f64, dx: f64) -> (f64, f64) {
    let z2 = k2 * dx * dx;
    if z2.abs() < 1e-6 {
        // series in z^2, accurate to ~1e-24 relative here
        let c = 1.0 + z2 / 2.0 * (1.0 + z2 / 12.0 * (1.0 + z2 / 30.0));
        let s = dx * (1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0)));
        return (c, s);
    }
    if k2 > 0.0 {
        let k = k2.sqrt();
        ((k * dx).cosh(), (k * dx).sinh() / k)
    } else {
        let k = (-k2).sqrt();
        ((k * dx).cos(), (k * dx).sin() / k)
    }
}

/// One recorded stretch of a solution.
#[derive(Debug, Clone)]
pub(crate) enum Segment {
    Closed { x0: f64, x1: f64, y0: f64, dy0: f64, k2: f64 },
    Taylor { x0: f64, x1: f64, coeffs: Vec<f64> },
}

impl Segment {
    fn span(&self) -> (f64, f64) {
        match self {
            Segment::Closed { x0, x1, .. } | Segment::Taylor { x0, x1, .. } => (*x0, *x1),
        }
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            Segment::Closed { x0, y0, dy0, k2, .. } => {
                let (c, s) = closed_transfer(*k2, x - x0);
                (c * y0 + s * dy0, k2 * s * y0 + c * dy0)
            }
            Segment::Taylor { x0, coeffs, .. } => taylor::eval(coeffs, x - x0),
        }
    }
}

/// Marches forward from `start` to `to_x >= start.x`, reporting each segment.
fn march(
    q: &PiecewisePotential,
    energy: f64,
    start: OdeState,
    to_x: f64,
    mut log_scale: Option<&mut f64>,
    mut sink: impl FnMut(Segment),
) -> Result<OdeState> {
    let mut renormalize = |state: &mut OdeState| {
        if let Some(ls) = log_scale.as_deref_mut() {
            let size = state.y.abs().max(state.dy.abs());
            if size > RENORM_THRESHOLD {
                state.y /= size;
                state.dy /= size;
                *ls += size.ln();
            }
        }
    };
    let mut state = start;
    for cell in q.cells(start.x, to_x) {
        let constant = match cell.piece {
            None => Some(0.0),
            Some(p) => p.constant_value(),
        };
        if let Some(v) = constant {
            let k2 = v - energy;
            // exponential growth per chunk stays well inside the f64 range
            let chunks = if k2 > 0.0 { (k2.sqrt() * (cell.to - cell.from) / 300.0).ceil().max(1.0) } else { 1.0 };
            let n = chunks as usize;
            let width = (cell.to - cell.from) / chunks;
            for i in 0..n {
                let x0 = cell.from + width * i as f64;
                let x1 = if i + 1 == n { cell.to } else { x0 + width };
                let (c, s) = closed_transfer(k2, x1 - x0);
                sink(Segment::Closed { x0, x1, y0: state.y, dy0: state.dy, k2 });
                state = OdeState::new(x1, c * state.y + s * state.dy, k2 * s * state.y + c * state.dy);
                renormalize(&mut state);
            }
            continue;
        }
        let piece = cell.piece.expect("non-constant cell has a piece");
        let mut x = cell.from;
        while x < cell.to {
            let coeffs = taylor::solution_coeffs(piece, energy, x, state.y, state.dy);
            let h = taylor::step_length(&coeffs);
            let min_step = 1e-13 * x.abs().max(1.0);
            let (x_next, last) = if x + h >= cell.to || cell.to - (x + h) < min_step {
                (cell.to, true)
            } else {
                (x + h, false)
            };
            if !last && h < min_step {
                return Err(Error::StepFailure { x });
            }
            let (y, dy) = taylor::eval(&coeffs, x_next - x);
            if !(y.is_finite() && dy.is_finite()) {
                return Err(Error::StepFailure { x });
            }
            sink(Segment::Taylor { x0: x, x1: x_next, coeffs });
            state = OdeState::new(x_next, y, dy);
            renormalize(&mut state);
            x = x_next;
        }
    }
    state.x = to_x;
    Ok(state)
}

/// `(y, y')` at `to_x` of the solution of `-y'' + (Q - E) y = 0` through `from`.
pub fn propagate(q: &PiecewisePotential, energy: f64, from: OdeState, to_x: f64) -> Result<OdeState> {
    if !(from.y.is_finite() && from.dy.is_finite() && from.x.is_finite() && to_x.is_finite()) {
        return Err(Error::InvalidInput("non-finite propagation input".into()));
    }
    if to_x >= from.x {
        return march(q, energy, from, to_x, None, |_| {});
    }
    // y(-x) solves the mirrored problem
    let mirrored = q.mirrored();
    let out = march(&mirrored, energy, OdeState::new(-from.x, from.y, -from.dy), -to_x, None, |_| {})?;
    Ok(OdeState::new(to_x, out.y, -out.dy))
}

/// Forward propagation that rescales the state whenever it grows large.
///
/// Returns the final state divided by `exp(log_scale)`; the direction of
/// `(y, y')` is exact, which is all that sign tests need.
pub fn propagate_rescaled(q: &PiecewisePotential, energy: f64, from: OdeState, to_x: f64) -> Result<(OdeState, f64)> {
    if !(from.y.is_finite() && from.dy.is_finite() && from.x.is_finite() && to_x.is_finite()) || to_x < from.x {
        return Err(Error::InvalidInput("rescaled propagation needs finite input and to_x >= from.x".into()));
    }
    let mut log_scale = 0.0;
    let out = march(q, energy, from, to_x, Some(&mut log_scale), |_| {})?;
    Ok((out, log_scale))
}

/// A solution recorded over `[start, end]`, evaluable anywhere.
///
/// Outside the span the solution is continued linearly, which is exact when
/// the potential vanishes there and the energy is zero.
#[derive(Debug, Clone)]
pub struct Trajectory {
    segments: Vec<Segment>,
    start: OdeState,
    end: OdeState,
}

impl Trajectory {
    pub fn shoot(q: &PiecewisePotential, energy: f64, from: OdeState, to_x: f64) -> Result<Self> {
        if to_x < from.x {
            return Err(Error::InvalidInput("trajectories are recorded left to right".into()));
        }
        let mut segments = Vec::new();
        let end = march(q, energy, from, to_x, None, |s| segments.push(s))?;
        Ok(Self { segments, start: from, end })
    }

    pub fn start(&self) -> OdeState {
        self.start
    }

    pub fn end(&self) -> OdeState {
        self.end
    }

    /// `(y(x), y'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x <= self.start.x {
            return (self.start.y + self.start.dy * (x - self.start.x), self.start.dy);
        }
        if x >= self.end.x {
            return (self.end.y + self.end.dy * (x - self.end.x), self.end.dy);
        }
        let idx = self.segments.partition_point(|s| s.span().1 < x);
        match self.segments.get(idx) {
            Some(seg) => seg.eval(x),
            None => (self.end.y, self.end.dy),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Segment boundaries, useful as quadrature breakpoints.
    pub fn knots(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().map(|s| s.span().0).collect();
        out.push(self.end.x);
        out
    }
}

/// A piece of a function whose L2 norm is wanted.
pub enum NormPiece<'a> {
    /// `f` on `[a, b]`, smooth between `breaks`.
    Finite { f: &'a dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &'a [f64] },
    /// `amplitude * e^{-rate |x - x0|}` on a half-line; closed form.
    ExpTail { amplitude: f64, rate: f64 },
}

/// Relative tolerance of the L2 quadrature.
pub const L2_REL_TOL: f64 = 1e-10;

/// `(sum of int |g|^2)^{1/2}` over the given pieces.
pub fn l2_norm(pieces: &[NormPiece<'_>]) -> Result<f64> {
    let mut total = 0.0;
    for piece in pieces {
        total += match piece {
            NormPiece::Finite { f, a, b, breaks } => {
                quad::integrate(&|x| f(x).powi(2), *a, *b, breaks, L2_REL_TOL, 0.0)?.value
            }
            NormPiece::ExpTail { amplitude, rate } => {
                if !(*rate > 0.0) {
                    return Err(Error::InvalidInput(format!("tail rate must be positive, got {rate}")));
                }
                amplitude * amplitude / (2.0 * rate)
            }
        };
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Harmonic, PotentialPiece};
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    #[test]
    fn free_exponential() {
        let q = PiecewisePotential::zero(1.0);
        let s = propagate(&q, -1.0, OdeState::new(0.0, 1.0, 1.0), 1.0).unwrap();
        assert_relative_eq!(s.y, E, max_relative = 1e-15);
        assert_relative_eq!(s.dy, E, max_relative = 1e-15);
    }

    #[test]
    fn cosine_in_deep_well() {
        let q = PiecewisePotential::square_well(0.0, 1.0, -PI * PI, 1.0).unwrap();
        let s = propagate(&q, 0.0, OdeState::new(0.0, 1.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(s.y, -1.0, epsilon = 1e-15);
        assert!(s.dy.abs() < 1e-14);
    }

    #[test]
    fn constants_solve_free_zero_energy() {
        let q = PiecewisePotential::zero(5.0);
        let s = propagate(&q, 0.0, OdeState::new(0.0, 1.0, 0.0), 5.0).unwrap();
        assert_eq!((s.y, s.dy), (1.0, 0.0));
    }

    #[test]
    fn taylor_cell_matches_analytic_solution() {
        // exp(sin x) on [-2, 2]
        let q = PiecewisePotential::new(
            2.0,
            vec![PotentialPiece::new(
                -2.0,
                2.0,
                vec![0.5],
                vec![Harmonic::cos(0.5, 2.0, 0.0), Harmonic::sin(-1.0, 1.0, 0.0)],
            )],
        )
        .unwrap();
        let x0 = -2.0f64;
        let s = propagate(&q, 0.0, OdeState::new(x0, x0.sin().exp(), x0.cos() * x0.sin().exp()), 2.0).unwrap();
        let x = 2.0f64;
        assert_relative_eq!(s.y, x.sin().exp(), max_relative = 1e-13);
        assert_relative_eq!(s.dy, x.cos() * x.sin().exp(), max_relative = 1e-12);
    }

    #[test]
    fn backward_propagation_inverts_forward() {
        let q = PiecewisePotential::new(
            1.0,
            vec![
                PotentialPiece::new(-1.0, 0.2, vec![0.3, 1.0, -2.0], vec![Harmonic::sin(0.5, 7.0, 0.1)]),
                PotentialPiece::constant(0.2, 0.9, -4.0),
            ],
        )
        .unwrap();
        let start = OdeState::new(-1.0, 0.7, -0.3);
        let fwd = propagate(&q, -0.5, start, 1.0).unwrap();
        let back = propagate(&q, -0.5, fwd, -1.0).unwrap();
        assert_relative_eq!(back.y, start.y, epsilon = 1e-12);
        assert_relative_eq!(back.dy, start.dy, epsilon = 1e-12);
    }

    #[test]
    fn trajectory_matches_propagate() {
        let q = PiecewisePotential::new(
            1.5,
            vec![
                PotentialPiece::constant(-1.0, 0.0, -2.0),
                PotentialPiece::new(0.0, 1.0, vec![0.0, 0.0, -3.0], vec![Harmonic::cos(1.0, 3.0, 0.0)]),
            ],
        )
        .unwrap();
        let start = OdeState::new(-1.5, 1.0, 0.0);
        let traj = Trajectory::shoot(&q, 0.0, start, 1.5).unwrap();
        for x in [-1.2, -0.5, 0.0, 0.33, 0.9, 1.4] {
            let p = propagate(&q, 0.0, start, x).unwrap();
            let (y, dy) = traj.eval(x);
            assert_relative_eq!(y, p.y, epsilon = 1e-12);
            assert_relative_eq!(dy, p.dy, epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_examples() {
        let one = |_x: f64| 1.0;
        let n = l2_norm(&[NormPiece::Finite { f: &one, a: 0.0, b: 1.0, breaks: &[] }]).unwrap();
        assert_relative_eq!(n, 1.0, max_relative = 1e-14);
        let tail = l2_norm(&[NormPiece::ExpTail { amplitude: 1.0, rate: 2.0 }]).unwrap();
        assert_relative_eq!(tail, 0.5, max_relative = 1e-15);
        let s = |x: f64| (PI * x).sin();
        let n = l2_norm(&[NormPiece::Finite { f: &s, a: 0.0, b: 1.0, breaks: &[] }]).unwrap();
        assert_relative_eq!(n, 0.5f64.sqrt(), max_relative = 1e-12);
    }
}
