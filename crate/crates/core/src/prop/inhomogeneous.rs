//! Zero-energy inhomogeneous problems `-v'' + U v = f` by variation of
//! parameters over a fundamental pair with unit Wronskian.

use std::fmt;
use std::sync::Arc;

use super::quad::{self, Panel};
use super::{OdeState, Trajectory};
use crate::error::{Error, Result};
use crate::potential::PiecewisePotential;

const REL_TOL: f64 = 1e-13;

/// A real source term together with the points where it is not smooth.
#[derive(Clone)]
pub struct Source {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    breaks: Vec<f64>,
}

impl Source {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, breaks: Vec<f64>) -> Self {
        Self { f: Arc::new(f), breaks }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, Vec::new())
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Source").field("breaks", &self.breaks).finish_non_exhaustive()
    }
}

/// `u` with `(u, u')(-b) = (1, 0)` and `u1` with `(u1, u1')(-b) = (0, 1)`.
#[derive(Debug, Clone)]
pub struct FundamentalPair {
    b: f64,
    breaks: Vec<f64>,
    u: Trajectory,
    u1: Trajectory,
}

impl FundamentalPair {
    pub fn new(potential: &PiecewisePotential) -> Result<Self> {
        let b = potential.half_width();
        let u = Trajectory::shoot(potential, 0.0, OdeState::new(-b, 1.0, 0.0), b)?;
        let u1 = Trajectory::shoot(potential, 0.0, OdeState::new(-b, 0.0, 1.0), b)?;
        Ok(Self { b, breaks: potential.breakpoints(), u, u1 })
    }

    pub fn half_width(&self) -> f64 {
        self.b
    }

    pub fn u(&self) -> &Trajectory {
        &self.u
    }

    pub fn u1(&self) -> &Trajectory {
        &self.u1
    }

    pub fn wronskian(&self, x: f64) -> f64 {
        let (u, du) = self.u.eval(x);
        let (w, dw) = self.u1.eval(x);
        u * dw - du * w
    }
}

/// A solution of `-v'' + U v = f` evaluable anywhere; beyond `[-b, b]` it is
/// continued as the solution with `U = f = 0`.
#[derive(Debug, Clone)]
pub struct InhomogeneousSolution {
    pair: Arc<FundamentalPair>,
    source: Source,
    y0: f64,
    dy0: f64,
    /// Panel left ends, followed by `b`.
    nodes: Vec<f64>,
    /// `(int u f, int u1 f)` from `-b` to each node.
    cumulative: Vec<[f64; 2]>,
}

impl InhomogeneousSolution {
    fn integrals(&self, x: f64) -> [f64; 2] {
        let b = self.pair.b;
        let x = x.clamp(-b, b);
        let idx = self.nodes.partition_point(|&n| n <= x).saturating_sub(1);
        let base = self.cumulative[idx];
        let a = self.nodes[idx];
        if x <= a {
            return base;
        }
        let g = |s: f64| {
            let f = self.source.eval(s);
            [self.pair.u.value(s) * f, self.pair.u1.value(s) * f]
        };
        let part = quad::gk21(&g, a, x).value;
        [base[0] + part[0], base[1] + part[1]]
    }

    /// `(v(x), v'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (u, du) = self.pair.u.eval(x);
        let (w, dw) = self.pair.u1.eval(x);
        let [i1, i2] = self.integrals(x);
        (
            self.y0 * u + self.dy0 * w - (w * i1 - u * i2),
            self.y0 * du + self.dy0 * dw - (dw * i1 - du * i2),
        )
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    pub fn half_width(&self) -> f64 {
        self.pair.b
    }

    /// Points where `v''` may jump.
    pub fn breaks(&self) -> Vec<f64> {
        let mut out = self.pair.breaks.clone();
        out.extend_from_slice(self.source.breaks());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn pair(&self) -> &Arc<FundamentalPair> {
        &self.pair
    }

    pub fn source(&self) -> &Source {
        &self.source
    }
}

impl FundamentalPair {
    /// Solves `-v'' + U v = f` with `(v, v')(-b) = (init.y, init.dy)`.
    pub fn solve(self: &Arc<Self>, source: &Source, init: OdeState) -> Result<InhomogeneousSolution> {
        let b = self.b;
        if (init.x + b).abs() > 1e-12 * b.max(1.0) {
            return Err(Error::InvalidInput(format!("initial point {} is not -b = {}", init.x, -b)));
        }
        let g = |s: f64| {
            let f = source.eval(s);
            [self.u.value(s) * f, self.u1.value(s) * f]
        };
        let mut breaks = self.breaks.clone();
        breaks.extend_from_slice(source.breaks());
        let panels: Vec<Panel<2>> = quad::panels(&g, -b, b, &breaks, REL_TOL, 1e-300)?;
        let mut nodes = Vec::with_capacity(panels.len() + 1);
        let mut cumulative = Vec::with_capacity(panels.len() + 1);
        let mut acc = [0.0; 2];
        for p in &panels {
            nodes.push(p.a);
            cumulative.push(acc);
            acc[0] += p.rule.value[0];
            acc[1] += p.rule.value[1];
        }
        nodes.push(b);
        cumulative.push(acc);
        Ok(InhomogeneousSolution {
            pair: Arc::clone(self),
            source: source.clone(),
            y0: init.y,
            dy0: init.dy,
            nodes,
            cumulative,
        })
    }
}

/// Solves `-v'' + U v = f` on `[-b, b]` with Cauchy data at `-b`.
pub fn solve_inhomogeneous(potential: &PiecewisePotential, source: &Source, init: OdeState) -> Result<InhomogeneousSolution> {
    Arc::new(FundamentalPair::new(potential)?).solve(source, init)
}
