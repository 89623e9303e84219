//! Zero-energy resonances of `-d^2/dx^2 + U` and the normalized half-bound state.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::PiecewisePotential;
use crate::prop::{FundamentalPair, Trajectory};

/// Default relative mismatch below which `h'(b)` counts as zero.
pub const DEFAULT_TOL: f64 = 1e-9;

/// The zero-energy solution through `(-b, 1, 0)` and its data at `b`.
#[derive(Debug, Clone)]
pub struct ZeroEnergyShot {
    pub value_at_b: f64,
    pub slope_at_b: f64,
    pub u: Trajectory,
}

pub fn shoot_zero_energy(potential: &PiecewisePotential) -> Result<ZeroEnergyShot> {
    let pair = FundamentalPair::new(potential)?;
    let end = pair.u().end();
    Ok(ZeroEnergyShot { value_at_b: end.y, slope_at_b: end.dy, u: pair.u().clone() })
}

/// Bounded zero-energy solution normalized to `u = 1` left of the support.
#[derive(Debug, Clone, Serialize)]
pub struct HalfBoundState {
    pub b: f64,
    pub theta: f64,
    #[serde(rename = "u0")]
    pub u_at_0: f64,
    #[serde(rename = "du0")]
    pub du_at_0: f64,
    pub mismatch: f64,
    #[serde(skip)]
    pair: Arc<FundamentalPair>,
}

impl HalfBoundState {
    /// `(u(x), u'(x))`, with `u = 1` left of `-b` and `u = theta` right of `b`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x <= -self.b {
            (1.0, 0.0)
        } else if x >= self.b {
            (self.theta, 0.0)
        } else {
            self.pair.u().eval(x)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Fundamental pair of `U` on `[-b, b]`, whose first member is `u`.
    pub fn pair(&self) -> &Arc<FundamentalPair> {
        &self.pair
    }
}

pub fn detect_resonance(potential: &PiecewisePotential, tol: f64) -> Result<HalfBoundState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("resonance tolerance must be positive, got {tol}")));
    }
    let pair = FundamentalPair::new(potential)?;
    let end = pair.u().end();
    let mismatch = end.dy.abs();
    if mismatch > tol * end.y.abs().max(1.0) || end.y == 0.0 {
        return Err(Error::NoResonance { mismatch });
    }
    let b = potential.half_width();
    let theta = end.y;
    let (u_at_0, du_at_0) = if 0.0 <= -b {
        (1.0, 0.0)
    } else if 0.0 >= b {
        (theta, 0.0)
    } else {
        pair.u().eval(0.0)
    };
    Ok(HalfBoundState { b, theta, u_at_0, du_at_0, mismatch, pair: Arc::new(pair) })
}

/// Coupling `gamma` in `[lo, hi]` at which `gamma * U` is resonant, by
/// bisection on `h'(b; gamma U)` down to a bracket of width `tol`.
pub fn tune_to_resonance(potential: &PiecewisePotential, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("need lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}")));
    }
    let slope = |gamma: f64| -> Result<f64> { Ok(shoot_zero_energy(&potential.scaled_by(gamma))?.slope_at_b) };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (slope(a)?, slope(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi });
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = slope(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
