//! Compactly supported potentials built from polynomial and harmonic pieces,
//! and the scaling families `lambda -> alpha_lambda`.
//!
//! Every piece is an exact closed form, so derivatives, translations and the
//! rescaling `x -> lambda * alpha * V(alpha * x)` stay exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prop::quad;

/// Structural tolerance for continuity checks at breakpoints.
pub const CONTINUITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarmonicKind {
    #[serde(rename = "sin")]
    Sine,
    #[serde(rename = "cos")]
    Cosine,
}

/// `amplitude * sin(frequency * x + phase)` or the cosine analogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(rename = "w")]
    pub frequency: f64,
    #[serde(rename = "phi", default)]
    pub phase: f64,
    pub kind: HarmonicKind,
}

impl Harmonic {
    pub fn sin(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self { amplitude, frequency, phase, kind: HarmonicKind::Sine }
    }

    pub fn cos(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self { amplitude, frequency, phase, kind: HarmonicKind::Cosine }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let arg = self.frequency * x + self.phase;
        match self.kind {
            HarmonicKind::Sine => self.amplitude * arg.sin(),
            HarmonicKind::Cosine => self.amplitude * arg.cos(),
        }
    }

    fn derivative(&self) -> Self {
        match self.kind {
            HarmonicKind::Sine => Harmonic::cos(self.amplitude * self.frequency, self.frequency, self.phase),
            HarmonicKind::Cosine => Harmonic::sin(-self.amplitude * self.frequency, self.frequency, self.phase),
        }
    }

    /// `amplitude * e^{i phase}` such that the harmonic equals the real or
    /// imaginary part of `c * e^{i w x}`.
    fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    fn is_constant(&self) -> bool {
        self.amplitude == 0.0 || self.frequency == 0.0
    }
}

/// One analytic piece `sum c_i x^i + sum harmonics` on `[from, to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialPiece {
    pub from: f64,
    pub to: f64,
    #[serde(default)]
    pub poly: Vec<f64>,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
}

impl PotentialPiece {
    pub fn new(from: f64, to: f64, poly: Vec<f64>, harmonics: Vec<Harmonic>) -> Self {
        Self { from, to, poly, harmonics }
    }

    pub fn constant(from: f64, to: f64, value: f64) -> Self {
        Self::new(from, to, vec![value], Vec::new())
    }

    pub fn value(&self, x: f64) -> f64 {
        let poly = self.poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
        poly + self.harmonics.iter().map(|h| h.eval(x)).sum::<f64>()
    }

    /// Returns the constant value when the piece is constant in closed form.
    pub fn constant_value(&self) -> Option<f64> {
        if self.poly.iter().skip(1).any(|&c| c != 0.0) {
            return None;
        }
        if !self.harmonics.iter().all(Harmonic::is_constant) {
            return None;
        }
        Some(self.value(0.5 * (self.from + self.to)))
    }

    pub fn derivative(&self) -> Self {
        let poly = self
            .poly
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| i as f64 * c)
            .collect();
        let harmonics = self
            .harmonics
            .iter()
            .filter(|h| !h.is_constant())
            .map(Harmonic::derivative)
            .collect();
        Self::new(self.from, self.to, poly, harmonics)
    }

    /// `x -> factor * P(alpha * x)` on `[from / alpha, to / alpha]`, `alpha > 0`.
    fn rescaled(&self, alpha: f64, factor: f64) -> Self {
        let mut power = factor;
        let poly = self
            .poly
            .iter()
            .map(|c| {
                let out = c * power;
                power *= alpha;
                out
            })
            .collect();
        let harmonics = self
            .harmonics
            .iter()
            .map(|h| Harmonic {
                amplitude: factor * h.amplitude,
                frequency: alpha * h.frequency,
                phase: h.phase,
                kind: h.kind,
            })
            .collect();
        Self::new(self.from / alpha, self.to / alpha, poly, harmonics)
    }

    /// `x -> P(x - shift)`.
    fn translated(&self, shift: f64) -> Self {
        // coefficients of p(t + s) with s = -shift
        let poly = taylor_shift(&self.poly, -shift);
        let harmonics = self
            .harmonics
            .iter()
            .map(|h| Harmonic { phase: h.phase - h.frequency * shift, ..h.clone() })
            .collect();
        Self::new(self.from + shift, self.to + shift, poly, harmonics)
    }

    /// `x -> P(-x)`.
    fn mirrored(&self) -> Self {
        let poly = self
            .poly
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { *c } else { -c })
            .collect();
        let harmonics = self
            .harmonics
            .iter()
            .map(|h| Harmonic { frequency: -h.frequency, ..h.clone() })
            .collect();
        Self::new(-self.to, -self.from, poly, harmonics)
    }

    fn scaled_by(&self, gamma: f64) -> Self {
        self.rescaled(1.0, gamma)
    }

    /// Rigorous lower bound of the piece on its interval.
    fn lower_bound(&self) -> f64 {
        if let Some(c) = self.constant_value() {
            return c;
        }
        let mut bound = self.poly.first().copied().unwrap_or(0.0);
        for (i, c) in self.poly.iter().enumerate().skip(1) {
            let at_from = c * self.from.powi(i as i32);
            let at_to = c * self.to.powi(i as i32);
            let mut lo = at_from.min(at_to);
            if self.from < 0.0 && self.to > 0.0 {
                lo = lo.min(0.0);
            }
            bound += lo;
        }
        bound - self.harmonics.iter().map(|h| h.amplitude.abs()).sum::<f64>()
    }

    /// `int_lo^hi x^n P(x) dx` in closed form, or `None` when a harmonic is too
    /// slow for the closed form to be free of cancellation.
    fn moment_closed(&self, n: u32, lo: f64, hi: f64) -> Option<f64> {
        let mut total = 0.0;
        for (i, c) in self.poly.iter().enumerate() {
            let p = n as i32 + i as i32 + 1;
            total += c * (hi.powi(p) - lo.powi(p)) / p as f64;
        }
        for h in &self.harmonics {
            if h.frequency == 0.0 {
                let value = h.eval(0.0);
                let p = n as i32 + 1;
                total += value * (hi.powi(p) - lo.powi(p)) / p as f64;
                continue;
            }
            if h.frequency.abs() * (hi - lo) < 1e-2 {
                return None;
            }
            let integral = h.complex_amplitude() * power_exp_integral(n, h.frequency, lo, hi);
            total += match h.kind {
                HarmonicKind::Sine => integral.im,
                HarmonicKind::Cosine => integral.re,
            };
        }
        Some(total)
    }
}

/// `int_lo^hi x^n e^{i w x} dx` from the antiderivative
/// `e^{iwx} sum_k (-1)^k n!/(n-k)! x^{n-k} / (iw)^{k+1}`.
fn power_exp_integral(n: u32, w: f64, lo: f64, hi: f64) -> Complex64 {
    let iw = Complex64::new(0.0, w);
    let antiderivative = |x: f64| {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut falling = 1.0;
        let mut denom = iw;
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * falling * x.powi((n - k) as i32) / denom;
            falling *= (n - k) as f64;
            denom *= iw;
        }
        Complex64::from_polar(1.0, w * x) * sum
    };
    antiderivative(hi) - antiderivative(lo)
}

/// Coefficients of `p(t + s)` given the coefficients of `p`.
pub(crate) fn taylor_shift(coeffs: &[f64], s: f64) -> Vec<f64> {
    let mut a = coeffs.to_vec();
    let n = a.len();
    if n < 2 || s == 0.0 {
        return a;
    }
    for k in 0..n - 1 {
        for j in (k..n - 1).rev() {
            a[j] += s * a[j + 1];
        }
    }
    a
}

/// Integration region for [`PiecewisePotential::moment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Full,
    NegativeHalf,
    PositiveHalf,
}

impl Region {
    fn bounds(self) -> (f64, f64) {
        match self {
            Region::Full => (f64::NEG_INFINITY, f64::INFINITY),
            Region::NegativeHalf => (f64::NEG_INFINITY, 0.0),
            Region::PositiveHalf => (0.0, f64::INFINITY),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawPotential {
    b: f64,
    #[serde(default)]
    pieces: Vec<PotentialPiece>,
}

/// A real potential supported in `[-b, b]`, zero outside its pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPotential")]
pub struct PiecewisePotential {
    b: f64,
    pieces: Vec<PotentialPiece>,
}

impl TryFrom<RawPotential> for PiecewisePotential {
    type Error = Error;

    fn try_from(raw: RawPotential) -> Result<Self> {
        Self::new(raw.b, raw.pieces)
    }
}

/// A maximal interval on which the potential is a single piece (or zero).
#[derive(Debug, Clone, Copy)]
pub struct Cell<'a> {
    pub from: f64,
    pub to: f64,
    pub piece: Option<&'a PotentialPiece>,
}

impl PiecewisePotential {
    pub fn new(b: f64, mut pieces: Vec<PotentialPiece>) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidPotential(format!("half-width b must be positive, got {b}")));
        }
        for p in &pieces {
            if !(p.from < p.to) {
                return Err(Error::InvalidPotential(format!("piece [{}, {}] is empty", p.from, p.to)));
            }
            if p.from < -b || p.to > b {
                return Err(Error::InvalidPotential(format!(
                    "piece [{}, {}] leaves the support [-{b}, {b}]",
                    p.from, p.to
                )));
            }
            let finite = p.poly.iter().all(|c| c.is_finite())
                && p.harmonics
                    .iter()
                    .all(|h| h.amplitude.is_finite() && h.frequency.is_finite() && h.phase.is_finite());
            if !finite {
                return Err(Error::InvalidPotential("non-finite coefficient".into()));
            }
        }
        pieces.sort_by(|a, b| a.from.total_cmp(&b.from));
        for pair in pieces.windows(2) {
            if pair[0].to > pair[1].from {
                return Err(Error::InvalidPotential(format!(
                    "pieces [{}, {}] and [{}, {}] overlap",
                    pair[0].from, pair[0].to, pair[1].from, pair[1].to
                )));
            }
        }
        Ok(Self { b, pieces })
    }

    pub fn zero(b: f64) -> Self {
        Self { b, pieces: Vec::new() }
    }

    /// Constant `depth` on `[from, to]`.
    pub fn square_well(from: f64, to: f64, depth: f64, b: f64) -> Result<Self> {
        Self::new(b, vec![PotentialPiece::constant(from, to, depth)])
    }

    pub fn half_width(&self) -> f64 {
        self.b
    }

    pub fn pieces(&self) -> &[PotentialPiece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.constant_value() == Some(0.0))
    }

    pub fn with_half_width(&self, b: f64) -> Result<Self> {
        Self::new(b, self.pieces.clone())
    }

    fn piece_at(&self, x: f64) -> Option<&PotentialPiece> {
        let idx = self.pieces.partition_point(|p| p.to < x);
        self.pieces.get(idx).filter(|p| p.from <= x && x <= p.to)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.piece_at(x).map_or(0.0, |p| p.value(x))
    }

    /// All piece endpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().flat_map(|p| [p.from, p.to]).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Partition of `[a, b]` into cells on which the potential is one closed form.
    pub fn cells(&self, a: f64, b: f64) -> Vec<Cell<'_>> {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|&x| x > a && x < b));
        cuts.push(b);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| Cell {
                from: w[0],
                to: w[1],
                piece: self.piece_at(0.5 * (w[0] + w[1])),
            })
            .collect()
    }

    /// One-sided limits `(P(x-0), P(x+0))`.
    pub fn one_sided(&self, x: f64) -> (f64, f64) {
        let left = self
            .pieces
            .iter()
            .find(|p| p.from < x && x <= p.to)
            .map_or(0.0, |p| p.value(x));
        let right = self
            .pieces
            .iter()
            .find(|p| p.from <= x && x < p.to)
            .map_or(0.0, |p| p.value(x));
        (left, right)
    }

    /// Largest jump over all breakpoints, with its location.
    pub fn max_jump(&self) -> (f64, f64) {
        self.breakpoints()
            .into_iter()
            .map(|x| {
                let (l, r) = self.one_sided(x);
                (x, (l - r).abs())
            })
            .fold((0.0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    /// Exact piecewise derivative; fails with `NotW12` if the potential jumps
    /// anywhere (including at the ends of its support).
    pub fn derivative(&self) -> Result<Self> {
        for x in self.breakpoints() {
            let (l, r) = self.one_sided(x);
            let jump = (l - r).abs();
            if jump > CONTINUITY_TOL * l.abs().max(r.abs()).max(1.0) {
                return Err(Error::NotW12 { at: x, jump });
            }
        }
        Ok(Self {
            b: self.b,
            pieces: self.pieces.iter().map(PotentialPiece::derivative).collect(),
        })
    }

    /// `int x^n P(x) dx` over `region`, closed form where cancellation-free.
    pub fn moment(&self, n: u32, region: Region) -> Result<f64> {
        let (lo, hi) = region.bounds();
        let mut total = 0.0;
        for p in &self.pieces {
            let a = p.from.max(lo);
            let b = p.to.min(hi);
            if b <= a {
                continue;
            }
            total += match p.moment_closed(n, a, b) {
                Some(v) => v,
                None => quad::integrate(&|x| x.powi(n as i32) * p.value(x), a, b, &[], 1e-13, 0.0)?.value,
            };
        }
        Ok(total)
    }

    /// Same moment by adaptive quadrature only.
    pub fn moment_quadrature(&self, n: u32, region: Region) -> Result<f64> {
        let (lo, hi) = region.bounds();
        let mut total = 0.0;
        for p in &self.pieces {
            let a = p.from.max(lo);
            let b = p.to.min(hi);
            if b > a {
                total += quad::integrate(&|x| x.powi(n as i32) * p.value(x), a, b, &[], 1e-13, 0.0)?.value;
            }
        }
        Ok(total)
    }

    /// `x -> factor * P(alpha * x)`, support half-width `b / alpha`.
    pub fn rescaled(&self, alpha: f64, factor: f64) -> Self {
        Self {
            b: self.b / alpha,
            pieces: self.pieces.iter().map(|p| p.rescaled(alpha, factor)).collect(),
        }
    }

    /// `x -> gamma * P(x)`.
    pub fn scaled_by(&self, gamma: f64) -> Self {
        Self {
            b: self.b,
            pieces: self.pieces.iter().map(|p| p.scaled_by(gamma)).collect(),
        }
    }

    /// `x -> P(x - shift)`; the half-width grows by `|shift|`.
    pub fn translated(&self, shift: f64) -> Self {
        Self {
            b: self.b + shift.abs(),
            pieces: self.pieces.iter().map(|p| p.translated(shift)).collect(),
        }
    }

    /// `x -> P(-x)`.
    pub fn mirrored(&self) -> Self {
        let mut pieces: Vec<_> = self.pieces.iter().map(PotentialPiece::mirrored).collect();
        pieces.reverse();
        Self { b: self.b, pieces }
    }

    /// Pointwise sum; the result lives on the common half-width.
    pub fn sum(&self, other: &Self) -> Self {
        let b = self.b.max(other.b);
        let mut cuts: Vec<f64> = self.breakpoints();
        cuts.extend(other.breakpoints());
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let parts: Vec<&PotentialPiece> =
                [self.piece_at(mid), other.piece_at(mid)].into_iter().flatten().collect();
            if parts.is_empty() {
                continue;
            }
            let degree = parts.iter().map(|p| p.poly.len()).max().unwrap_or(0);
            let mut poly = vec![0.0; degree];
            let mut harmonics = Vec::new();
            for p in parts {
                for (acc, c) in poly.iter_mut().zip(&p.poly) {
                    *acc += c;
                }
                harmonics.extend(p.harmonics.iter().cloned());
            }
            pieces.push(PotentialPiece::new(w[0], w[1], poly, harmonics));
        }
        Self { b, pieces }
    }

    /// Rigorous lower bound of the potential on the line (never above 0).
    pub fn lower_bound(&self) -> f64 {
        self.pieces.iter().map(PotentialPiece::lower_bound).fold(0.0, f64::min)
    }

    /// Jump of the potential at the origin.
    pub fn jump_at_zero(&self) -> f64 {
        let (l, r) = self.one_sided(0.0);
        (l - r).abs()
    }
}

/// `c * lambda^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub c: f64,
    pub p: f64,
}

impl PowerLaw {
    pub fn at(&self, lambda: f64) -> f64 {
        self.c * lambda.powf(self.p)
    }
}

/// Limit of `alpha_lambda` as `lambda -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitClass {
    FinitePositive,
    Infinite,
    Zero,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawScaling {
    Const {
        alpha: f64,
        #[serde(default)]
        eps: Option<PowerLaw>,
    },
    Power {
        c: f64,
        p: f64,
    },
    Table {
        rows: Vec<[f64; 2]>,
    },
}

/// The map `lambda -> alpha_lambda`.
///
/// `Constant` may carry a vanishing shift `eps(lambda) = c lambda^p`, so that
/// `alpha_lambda = alpha + eps(lambda)`; this is how the finite-limit family
/// with `alpha_lambda != alpha` is described.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScaling", tag = "kind", rename_all = "lowercase")]
pub enum ScalingFamily {
    #[serde(rename = "const")]
    Constant {
        alpha: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        eps: Option<PowerLaw>,
    },
    Power {
        c: f64,
        p: f64,
    },
    Table {
        rows: Vec<[f64; 2]>,
    },
}

impl TryFrom<RawScaling> for ScalingFamily {
    type Error = Error;

    fn try_from(raw: RawScaling) -> Result<Self> {
        match raw {
            RawScaling::Const { alpha, eps } => Self::constant_with_eps(alpha, eps),
            RawScaling::Power { c, p } => Self::power(c, p),
            RawScaling::Table { rows } => Self::table(rows),
        }
    }
}

impl ScalingFamily {
    pub fn constant(alpha: f64) -> Result<Self> {
        Self::constant_with_eps(alpha, None)
    }

    pub fn constant_with_eps(alpha: f64, eps: Option<PowerLaw>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidScaling(format!("alpha must be positive, got {alpha}")));
        }
        if let Some(e) = eps {
            if !(e.p > 0.0) || e.c == 0.0 || !e.c.is_finite() {
                return Err(Error::InvalidScaling(
                    "eps must be a nonzero power law c*lambda^p with p > 0".into(),
                ));
            }
        }
        Ok(ScalingFamily::Constant { alpha, eps })
    }

    pub fn power(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && p.is_finite()) {
            return Err(Error::InvalidScaling(format!("power family needs c > 0, got c = {c}, p = {p}")));
        }
        Ok(ScalingFamily::Power { c, p })
    }

    pub fn table(mut rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidScaling("table needs at least two rows".into()));
        }
        if rows.iter().any(|r| !(r[0] > 0.0 && r[1] > 0.0 && r[0].is_finite() && r[1].is_finite())) {
            return Err(Error::InvalidScaling("table entries must be positive".into()));
        }
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        if rows.windows(2).any(|w| w[0][0] == w[1][0]) {
            return Err(Error::InvalidScaling("duplicate lambda in table".into()));
        }
        Ok(ScalingFamily::Table { rows })
    }

    pub fn alpha_at(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        let alpha = match self {
            ScalingFamily::Constant { alpha, eps } => alpha + eps.map_or(0.0, |e| e.at(lambda)),
            ScalingFamily::Power { c, p } => c * lambda.powf(*p),
            ScalingFamily::Table { rows } => {
                let lo = rows[0][0];
                let hi = rows[rows.len() - 1][0];
                if lambda < lo || lambda > hi {
                    return Err(Error::OutOfTable { lambda, lo, hi });
                }
                let idx = rows.partition_point(|r| r[0] < lambda).clamp(1, rows.len() - 1);
                let (l0, a0) = (rows[idx - 1][0].ln(), rows[idx - 1][1].ln());
                let (l1, a1) = (rows[idx][0].ln(), rows[idx][1].ln());
                let t = (lambda.ln() - l0) / (l1 - l0);
                (a0 + t * (a1 - a0)).exp()
            }
        };
        if !(alpha > 0.0) {
            return Err(Error::InvalidScaling(format!("alpha_lambda = {alpha} is not positive at lambda = {lambda}")));
        }
        Ok(alpha)
    }

    /// Log-log slope used to classify table families (between the two smallest lambdas).
    fn table_slope(rows: &[[f64; 2]]) -> f64 {
        let (l0, a0) = (rows[0][0].ln(), rows[0][1].ln());
        let (l1, a1) = (rows[1][0].ln(), rows[1][1].ln());
        (a1 - a0) / (l1 - l0)
    }

    pub fn limit_class(&self) -> LimitClass {
        let p = match self {
            ScalingFamily::Constant { .. } => 0.0,
            ScalingFamily::Power { p, .. } => *p,
            ScalingFamily::Table { rows } => {
                let slope = Self::table_slope(rows);
                if slope.abs() < 1e-3 { 0.0 } else { slope }
            }
        };
        if p < 0.0 {
            LimitClass::Infinite
        } else if p > 0.0 {
            LimitClass::Zero
        } else {
            LimitClass::FinitePositive
        }
    }

    /// The finite limit `alpha`, when there is one.
    pub fn limit_alpha(&self) -> Option<f64> {
        match self {
            ScalingFamily::Constant { alpha, .. } => Some(*alpha),
            ScalingFamily::Power { c, p } if *p == 0.0 => Some(*c),
            ScalingFamily::Table { rows } if self.limit_class() == LimitClass::FinitePositive => Some(rows[0][1]),
            _ => None,
        }
    }

    /// Growth exponent `p` in `alpha ~ lambda^p`, known exactly for power families.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            ScalingFamily::Constant { .. } => Some(0.0),
            ScalingFamily::Power { p, .. } => Some(*p),
            ScalingFamily::Table { .. } => None,
        }
    }

    /// `eps(lambda) = alpha_lambda - alpha` for the finite-limit family.
    pub fn eps_at(&self, lambda: f64) -> Option<f64> {
        match self {
            ScalingFamily::Constant { eps: Some(e), .. } => Some(e.at(lambda)),
            _ => None,
        }
    }

    pub fn eps_law(&self) -> Option<PowerLaw> {
        match self {
            ScalingFamily::Constant { eps, .. } => *eps,
            _ => None,
        }
    }
}

/// `x -> lambda * alpha_lambda * V(alpha_lambda * x)`.
pub fn scaled_potential(v: &PiecewisePotential, family: &ScalingFamily, lambda: f64) -> Result<PiecewisePotential> {
    if lambda == 0.0 {
        return Ok(PiecewisePotential::zero(v.half_width()));
    }
    let alpha = family.alpha_at(lambda)?;
    Ok(v.rescaled(alpha, lambda * alpha))
}
