//! Explicit quasimodes `(-omega^2, psi)` of `H_lambda` for the higher-order
//! regimes, with their residuals `r = (H_lambda + omega^2) psi`.
//!
//! The trial function is `e^{omega (x + J)}` left of `-J`, `u + sum c_i f_i`
//! on `[-J, J]` and `a0 e^{-omega (x - J)} + a1 rho(x - J)` right of `J`.
//! Each correction `f_i` solves `-f'' + U f = s_i`, so on `[-J, J]` the
//! residual is `sum c_i s_i + (P + omega^2) psi` with `P` the perturbation.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{scaled_potential, PiecewisePotential, ScalingFamily};
use crate::prop::{quad, FundamentalPair, InhomogeneousSolution, OdeState, Source};
use crate::resonance::HalfBoundState;
use crate::threshold::{eps_of, Case};

const NORM_TOL: f64 = 1e-10;
const C1_SAMPLES: usize = 400;
const ROUNDING_GUARD: f64 = 1e-13;

/// `rho(t) = t (1 - t)^2` on `[0, 1]`, zero beyond.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlueFunction;

impl GlueFunction {
    pub fn value(&self, t: f64) -> f64 {
        if (0.0..=1.0).contains(&t) {
            t * (1.0 - t) * (1.0 - t)
        } else {
            0.0
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if (0.0..=1.0).contains(&t) {
            1.0 - 4.0 * t + 3.0 * t * t
        } else {
            0.0
        }
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        if (0.0..=1.0).contains(&t) {
            6.0 * t - 4.0
        } else {
            0.0
        }
    }
}

/// Defects of `psi` and `psi'` at the two junctions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct JunctionErrors {
    pub left_value: f64,
    pub left_slope: f64,
    pub right_value: f64,
    pub right_slope: f64,
}

impl JunctionErrors {
    pub fn max(&self) -> f64 {
        [self.left_value, self.left_slope, self.right_value, self.right_slope]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug)]
struct Parts {
    u_potential: PiecewisePotential,
    pair: Arc<FundamentalPair>,
    corrections: Vec<(f64, InhomogeneousSolution)>,
    breaks: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Quasimode {
    pub case: Case,
    pub lambda: f64,
    pub alpha: f64,
    pub omega: f64,
    pub k_lambda: f64,
    pub a0: f64,
    pub a1: f64,
    /// Junction abscissa `J`; the interior is `[-J, J]`.
    pub junction: f64,
    pub norm: f64,
    pub residual: f64,
    pub accuracy_ratio: f64,
    /// `|a1| * ||rho'' - omega^2 rho||`.
    pub glue_residual: f64,
    pub junction_errors: JunctionErrors,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    parts: Arc<Parts>,
}

impl Quasimode {
    /// `(psi(x), psi'(x))` on the whole line.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let j = self.junction;
        let w = self.omega;
        if x < -j {
            let e = (w * (x + j)).exp();
            return (e, w * e);
        }
        if x > j {
            let e = (-w * (x - j)).exp();
            let t = x - j;
            return (
                self.a0 * e + self.a1 * GlueFunction.value(t),
                -w * self.a0 * e + self.a1 * GlueFunction.derivative(t),
            );
        }
        self.interior(x)
    }

    fn interior(&self, x: f64) -> (f64, f64) {
        let (mut y, mut dy) = self.parts.pair.u().eval(x);
        for (c, f) in &self.parts.corrections {
            let (v, dv) = f.eval(x);
            y += c * v;
            dy += c * dv;
        }
        (y, dy)
    }

    /// `-psi'' + U psi` on `[-J, J]`, from the correction equations.
    fn interior_operator(&self, x: f64) -> f64 {
        self.parts.corrections.iter().map(|(c, f)| c * f.source().eval(x)).sum()
    }

    /// `r(x) = (-d^2/dx^2 + U + P + omega^2) psi`.
    pub fn residual_at(&self, u: &PiecewisePotential, perturbation: &PiecewisePotential, x: f64) -> f64 {
        let j = self.junction;
        let w2 = self.omega * self.omega;
        let (psi, _) = self.eval(x);
        if x.abs() <= j {
            let built = self.interior_operator(x);
            built + (u.evaluate(x) - self.parts.u_potential.evaluate(x)) * psi + (perturbation.evaluate(x) + w2) * psi
        } else if x > j && x <= j + 1.0 {
            let t = x - j;
            -self.a1 * (GlueFunction.second_derivative(t) - w2 * GlueFunction.value(t))
                + (u.evaluate(x) + perturbation.evaluate(x)) * psi
        } else {
            (u.evaluate(x) + perturbation.evaluate(x)) * psi
        }
    }

    /// Breakpoints of the interior pieces.
    pub fn breaks(&self) -> &[f64] {
        &self.parts.breaks
    }

    /// Correction functions with their weights, in construction order.
    pub fn corrections(&self) -> impl Iterator<Item = (f64, &InhomogeneousSolution)> {
        self.parts.corrections.iter().map(|(c, f)| (*c, f))
    }
}

/// `||r||` over the line for the given `U` and perturbation `P`.
pub fn residual_norm(qm: &Quasimode, u: &PiecewisePotential, perturbation: &PiecewisePotential) -> Result<f64> {
    let j = qm.junction;
    let mut breaks = qm.breaks().to_vec();
    breaks.extend(u.breakpoints());
    breaks.extend(perturbation.breakpoints());
    let support = u.half_width().max(perturbation.half_width());
    let lo = -j.max(support);
    let hi = (j + 1.0).max(support);
    breaks.extend_from_slice(&[-j, j, j + 1.0]);
    // r is a small difference of larger terms; resolve it only down to their rounding level
    let terms = (0..=C1_SAMPLES)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / C1_SAMPLES as f64;
            let psi = qm.eval(x).0.abs();
            let built = if x.abs() <= j { qm.interior_operator(x).abs() } else { 0.0 };
            built.max((u.evaluate(x).abs() + perturbation.evaluate(x).abs()) * psi)
        })
        .fold(0.0, f64::max);
    let floor = (ROUNDING_GUARD * terms).powi(2) * (hi - lo);
    let r = |x: f64| qm.residual_at(u, perturbation, x).powi(2);
    Ok(quad::integrate(&r, lo, hi, &breaks, NORM_TOL, floor)?.value.sqrt())
}

/// Shared assembly once `k`, the corrections and `a0`, `a1` are known.
struct Assembly {
    case: Case,
    lambda: f64,
    alpha: f64,
    k_lambda: f64,
    omega: f64,
    junction: f64,
    a0: f64,
    a1: f64,
    u_potential: PiecewisePotential,
    pair: Arc<FundamentalPair>,
    corrections: Vec<(f64, InhomogeneousSolution)>,
    perturbation: PiecewisePotential,
    diagnostics: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

impl Assembly {
    fn finish(self) -> Result<Quasimode> {
        let j = self.junction;
        let w = self.omega;
        let mut breaks = self.u_potential.breakpoints();
        breaks.extend(self.perturbation.breakpoints());
        for (_, f) in &self.corrections {
            breaks.extend(f.breaks());
        }
        breaks.extend_from_slice(&[-j, 0.0, j]);
        breaks.retain(|x| x.abs() <= j);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut qm = Quasimode {
            case: self.case,
            lambda: self.lambda,
            alpha: self.alpha,
            omega: w,
            k_lambda: self.k_lambda,
            a0: self.a0,
            a1: self.a1,
            junction: j,
            norm: f64::NAN,
            residual: f64::NAN,
            accuracy_ratio: f64::NAN,
            glue_residual: f64::NAN,
            junction_errors: JunctionErrors::default(),
            diagnostics: self.diagnostics,
            warnings: self.warnings,
            parts: Arc::new(Parts {
                u_potential: self.u_potential.clone(),
                pair: self.pair,
                corrections: self.corrections,
                breaks,
            }),
        };

        let (l, dl) = qm.interior(-j);
        let (r, dr) = qm.interior(j);
        qm.junction_errors = JunctionErrors {
            left_value: l - 1.0,
            left_slope: dl - w,
            right_value: r - qm.a0,
            right_slope: dr - (-w * qm.a0 + qm.a1),
        };
        if qm.junction_errors.max() > 1e-9 {
            qm.warnings.push(format!("junction defect {:e} exceeds 1e-9", qm.junction_errors.max()));
        }

        let inner = quad::integrate(&|x| qm.interior(x).0.powi(2), -j, j, qm.breaks(), NORM_TOL, 0.0)?.value;
        let (a0, a1) = (qm.a0, qm.a1);
        let glue_cross = quad::integrate(
            &|t| 2.0 * a0 * a1 * (-w * t).exp() * GlueFunction.value(t) + a1 * a1 * GlueFunction.value(t).powi(2),
            0.0,
            1.0,
            &[],
            NORM_TOL,
            0.0,
        )?
        .value;
        qm.norm = (1.0 / (2.0 * w) + inner + a0 * a0 / (2.0 * w) + glue_cross).sqrt();
        let glue = quad::integrate(
            &|t| (GlueFunction.second_derivative(t) - w * w * GlueFunction.value(t)).powi(2),
            0.0,
            1.0,
            &[],
            NORM_TOL,
            0.0,
        )?
        .value;
        qm.glue_residual = a1.abs() * glue.sqrt();
        qm.residual = residual_norm(&qm, &self.u_potential, &self.perturbation)?;
        qm.accuracy_ratio = qm.residual / (qm.norm * w * w);
        qm.diagnostics.insert("norm_sqrt_omega".into(), qm.norm * w.sqrt());
        Ok(qm)
    }
}

fn positive_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::ConditionsViolated { failed: vec![format!("k_lambda_positive (k_lambda = {k:e})")], prediction: None })
    }
}

/// `max(sup |f|, sup |f'|)` over `[-J, J]` on a uniform sample plus breakpoints.
fn c1_norm(f: &InhomogeneousSolution, j: f64, breaks: &[f64]) -> f64 {
    let mut xs: Vec<f64> = (0..=C1_SAMPLES).map(|i| -j + 2.0 * j * i as f64 / C1_SAMPLES as f64).collect();
    xs.extend(breaks.iter().copied().filter(|x| x.abs() <= j));
    xs.into_iter()
        .map(|x| {
            let (v, dv) = f.eval(x);
            v.abs().max(dv.abs())
        })
        .fold(0.0, f64::max)
}

fn sup_abs(f: &InhomogeneousSolution, j: f64, breaks: &[f64]) -> f64 {
    let mut xs: Vec<f64> = (0..=C1_SAMPLES).map(|i| -j + 2.0 * j * i as f64 / C1_SAMPLES as f64).collect();
    xs.extend(breaks.iter().copied().filter(|x| x.abs() <= j));
    xs.into_iter().map(|x| f.value(x).abs()).fold(0.0, f64::max)
}

fn setup(u: &PiecewisePotential, junction: f64) -> Result<(PiecewisePotential, Arc<FundamentalPair>)> {
    let extended = u.with_half_width(junction)?;
    let pair = Arc::new(FundamentalPair::new(&extended)?);
    Ok((extended, pair))
}

fn u_source(pair: &Arc<FundamentalPair>, weight: PiecewisePotential, scale: f64) -> Source {
    let pair = Arc::clone(pair);
    let breaks = weight.breakpoints();
    Source::new(move |x| scale * weight.evaluate(x) * pair.u().value(x), breaks)
}

/// `int P u^2` over the support of `P`.
fn weighted_u2(pair: &FundamentalPair, p: &PiecewisePotential) -> Result<f64> {
    let b = p.half_width();
    let mut breaks = p.breakpoints();
    breaks.push(0.0);
    Ok(quad::integrate(&|x| p.evaluate(x) * pair.u().value(x).powi(2), -b, b, &breaks, 1e-13, 0.0)?.value)
}

/// Quasimode for `alpha_lambda = alpha + eps`.
pub fn build_quasimode_t2(
    u: &PiecewisePotential,
    v: &PiecewisePotential,
    alpha: f64,
    eps: f64,
    lambda: f64,
    h: &HalfBoundState,
) -> Result<Quasimode> {
    if eps == 0.0 || !eps.is_finite() {
        return Err(Error::InvalidInput("eps_lambda must be finite and nonzero".into()));
    }
    let alpha_l = alpha + eps;
    if !(alpha > 0.0 && alpha_l > 0.0) {
        return Err(Error::InvalidScaling(format!("alpha = {alpha}, alpha + eps = {alpha_l} must be positive")));
    }
    let v0 = v.rescaled(alpha, alpha);
    let vl = v.rescaled(alpha_l, alpha_l);
    let junction = u.half_width().max(v0.half_width()).max(vl.half_width());
    let (extended, pair) = setup(u, junction)?;
    let theta = h.theta;

    let diff = vl.sum(&v0.scaled_by(-1.0));
    let k = -weighted_u2(&pair, &diff)? / (eps * (theta * theta + 1.0));
    positive_k(k)?;

    let init = OdeState::new(-junction, 0.0, 0.0);
    let sol_v = pair.solve(&u_source(&pair, v0.clone(), -1.0), init)?;
    let sol_w = pair.solve(&u_source(&pair, diff, -1.0 / eps), OdeState::new(-junction, 0.0, k))?;
    let (vb, dvb) = sol_v.eval(junction);
    let (wb, dwb) = sol_w.eval(junction);
    let a0 = theta + lambda * vb + lambda * eps * wb;
    let a1 = lambda * lambda * eps * k * (vb + eps * wb);
    let omega = lambda * eps * k;

    let mut diagnostics = BTreeMap::new();
    let mut warnings = Vec::new();
    let matching = dwb + theta * k;
    diagnostics.insert("w_prime_b_plus_theta_k".into(), matching);
    diagnostics.insert("v_prime_b".into(), dvb);
    diagnostics.insert("int_V0_u2".into(), weighted_u2(&pair, &v0)?);
    if matching.abs() > 1e-8 * k.abs().max(1.0) {
        warnings.push(format!("w'(b) + theta k = {matching:e} is not zero"));
    }

    Assembly {
        case: Case::T2,
        lambda,
        alpha: alpha_l,
        k_lambda: k,
        omega,
        junction,
        a0,
        a1,
        u_potential: extended,
        pair,
        corrections: vec![(lambda, sol_v), (lambda * eps, sol_w)],
        perturbation: vl.scaled_by(lambda),
        diagnostics,
        warnings,
    }
    .finish()
}

/// Quasimode for `alpha_lambda -> infinity`.
pub fn build_quasimode_t3(
    u: &PiecewisePotential,
    v: &PiecewisePotential,
    family: &ScalingFamily,
    lambda: f64,
    h: &HalfBoundState,
) -> Result<Quasimode> {
    let alpha = family.alpha_at(lambda)?;
    let vl = v.rescaled(alpha, alpha);
    let junction = u.half_width().max(vl.half_width());
    let (extended, pair) = setup(u, junction)?;
    let theta = h.theta;

    let k = -alpha / (theta * theta + 1.0) * weighted_u2(&pair, &vl)?;
    positive_k(k)?;

    let sol_v = pair.solve(&u_source(&pair, vl.clone(), -alpha), OdeState::new(-junction, 0.0, k))?;
    let sv = sol_v.clone();
    let weight = vl.clone();
    let source_w = Source::new(move |x| -alpha * weight.evaluate(x) * sv.value(x), vl.breakpoints());
    let sol_w = pair.solve(&source_w, OdeState::new(-junction, 0.0, 0.0))?;

    let r = lambda / alpha;
    let (vb, dvb) = sol_v.eval(junction);
    let (wb, dwb) = sol_w.eval(junction);
    let a0 = theta + r * vb + r * r * wb;
    let a1 = r * r * k * (vb + dwb / k + r * wb);
    let omega = r * k;

    let breaks = extended.breakpoints();
    let mut diagnostics = BTreeMap::new();
    let v_c1 = c1_norm(&sol_v, junction, &breaks);
    let w_c1 = c1_norm(&sol_w, junction, &breaks);
    diagnostics.insert("v_c1".into(), v_c1);
    diagnostics.insert("w_c1".into(), w_c1);
    diagnostics.insert("v_c1_over_alpha".into(), v_c1 / alpha);
    diagnostics.insert("w_c1_over_alpha2".into(), w_c1 / (alpha * alpha));
    diagnostics.insert("v_prime_b_plus_theta_k".into(), dvb + theta * k);

    Assembly {
        case: Case::T3,
        lambda,
        alpha,
        k_lambda: k,
        omega,
        junction,
        a0,
        a1,
        u_potential: extended,
        pair,
        corrections: vec![(r, sol_v), (r * r, sol_w)],
        perturbation: vl.scaled_by(lambda),
        diagnostics,
        warnings: Vec::new(),
    }
    .finish()
}

/// Quasimode for `alpha_lambda -> 0`.
pub fn build_quasimode_t4(
    u: &PiecewisePotential,
    v: &PiecewisePotential,
    family: &ScalingFamily,
    lambda: f64,
    h: &HalfBoundState,
) -> Result<Quasimode> {
    let alpha = family.alpha_at(lambda)?;
    let va = v.rescaled(alpha, 1.0);
    let junction = u.half_width().max(va.half_width());
    let (extended, pair) = setup(u, junction)?;
    let theta = h.theta;

    let k = -weighted_u2(&pair, &va)? / (theta * theta + 1.0);
    positive_k(k)?;

    let sol_v = pair.solve(&u_source(&pair, va.clone(), -1.0), OdeState::new(-junction, 0.0, k))?;
    let s = lambda * alpha;
    let (vj, dvj) = sol_v.eval(junction);
    let a0 = theta + s * vj;
    let a1 = s * s * k * vj;
    let omega = s * k;

    let breaks = extended.breakpoints();
    let mut diagnostics = BTreeMap::new();
    let sup = sup_abs(&sol_v, junction, &breaks);
    diagnostics.insert("v_sup".into(), sup);
    diagnostics.insert("v_sup_alpha2".into(), sup * alpha * alpha);
    diagnostics.insert("v_prime_J_plus_theta_k".into(), dvj + theta * k);

    Assembly {
        case: Case::T4,
        lambda,
        alpha,
        k_lambda: k,
        omega,
        junction,
        a0,
        a1,
        u_potential: extended,
        pair,
        corrections: vec![(s, sol_v)],
        perturbation: va.scaled_by(s),
        diagnostics,
        warnings: Vec::new(),
    }
    .finish()
}

/// Builds the quasimode of the given higher-order case at `lambda`.
pub fn build_quasimode(
    case: Case,
    u: &PiecewisePotential,
    v: &PiecewisePotential,
    family: &ScalingFamily,
    lambda: f64,
    h: &HalfBoundState,
) -> Result<Quasimode> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    match case {
        Case::T2 => {
            let alpha = family
                .limit_alpha()
                .ok_or_else(|| Error::InvalidScaling("case T2 needs a finite limit alpha".into()))?;
            build_quasimode_t2(u, v, alpha, eps_of(family, lambda)?, lambda, h)
        }
        Case::T3 => build_quasimode_t3(u, v, family, lambda, h),
        Case::T4 => build_quasimode_t4(u, v, family, lambda, h),
        other => Err(Error::InvalidInput(format!("no quasimode construction for case {other:?}"))),
    }
}

/// The perturbation `lambda alpha_lambda V(alpha_lambda x)` matching a quasimode.
pub fn perturbation_for(v: &PiecewisePotential, family: &ScalingFamily, lambda: f64) -> Result<PiecewisePotential> {
    scaled_potential(v, family, lambda)
}
