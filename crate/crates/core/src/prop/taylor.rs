//! High-order Taylor stepping for `y'' = (q(x) - E) y` on an analytic piece.
//!
//! The Taylor coefficients of `q` at any point are available in closed form
//! (shifted polynomial plus differentiated harmonics), so the coefficients of
//! `y` follow from the recurrence
//! `(n+1)(n+2) a_{n+2} = sum_{j<=n} q_j a_{n-j}`. The step length is chosen
//! from the decay of the last two coefficients, which makes the method a
//! one-step scheme with built-in error control.

use crate::potential::{taylor_shift, HarmonicKind, PotentialPiece};

/// Expansion order.
pub const ORDER: usize = 32;

/// Target local truncation error, relative to the state magnitude.
const STEP_TOL: f64 = 1e-16;

/// Taylor coefficients of `piece(x0 + t) - energy`, up to `t^(n-1)`.
fn potential_coeffs(piece: &PotentialPiece, energy: f64, x0: f64, n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n];
    let shifted = taylor_shift(&piece.poly, x0);
    for (qi, c) in q.iter_mut().zip(&shifted) {
        *qi = *c;
    }
    for h in &piece.harmonics {
        let arg = h.frequency * x0 + h.phase;
        let (s, c) = arg.sin_cos();
        // derivative cycles of sin and cos
        let cycle = match h.kind {
            HarmonicKind::Sine => [s, c, -s, -c],
            HarmonicKind::Cosine => [c, -s, -c, s],
        };
        let mut scale = h.amplitude;
        for (j, qj) in q.iter_mut().enumerate() {
            if j > 0 {
                scale *= h.frequency / j as f64;
            }
            if scale == 0.0 {
                break;
            }
            *qj += scale * cycle[j % 4];
        }
    }
    q[0] -= energy;
    q
}

/// Coefficients `a_0..=a_ORDER` of the solution through `(y0, dy0)` at `x0`.
pub fn solution_coeffs(piece: &PotentialPiece, energy: f64, x0: f64, y0: f64, dy0: f64) -> Vec<f64> {
    let q = potential_coeffs(piece, energy, x0, ORDER - 1);
    let mut a = vec![0.0; ORDER + 1];
    a[0] = y0;
    a[1] = dy0;
    for n in 0..=ORDER - 2 {
        let conv: f64 = (0..=n).map(|j| q[j] * a[n - j]).sum();
        a[n + 2] = conv / ((n + 1) * (n + 2)) as f64;
    }
    a
}

/// Largest step for which the truncated tail stays below tolerance, or
/// infinity when the tail vanishes.
pub fn step_length(a: &[f64]) -> f64 {
    let scale = a[0].abs().max(a[1].abs());
    if scale == 0.0 {
        return f64::INFINITY;
    }
    let mut h = f64::INFINITY;
    for k in [ORDER - 1, ORDER] {
        let c = a[k].abs();
        if c > 0.0 {
            // the derivative tail carries an extra factor k / h; 0.5 covers it
            h = h.min(0.5 * (STEP_TOL * scale / c).powf(1.0 / k as f64));
        }
    }
    h
}

/// `(y, y')` of the truncated series at offset `t`.
pub fn eval(a: &[f64], t: f64) -> (f64, f64) {
    let mut y = 0.0;
    let mut dy = 0.0;
    for (n, c) in a.iter().enumerate().rev() {
        y = y * t + c;
        if n > 0 {
            dy = dy * t + n as f64 * c;
        }
    }
    (y, dy)
}
