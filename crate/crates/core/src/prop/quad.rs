//! Globally adaptive Gauss-Kronrod (10/21) quadrature on intervals with
//! known breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const MAX_INTERVALS: usize = 20_000;

/// One 21-point Kronrod evaluation of a vector-valued integrand.
#[derive(Debug, Clone, Copy)]
pub struct Rule<const D: usize> {
    pub value: [f64; D],
    pub err: [f64; D],
    /// Integral of `|f|`.
    pub abs: [f64; D],
}

pub fn gk21<const D: usize>(f: &dyn Fn(f64) -> [f64; D], a: f64, b: f64) -> Rule<D> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = [0.0; D];
    let mut gauss = [0.0; D];
    let mut abs = [0.0; D];
    let mut fvals = [[0.0; D]; 21];
    for d in 0..D {
        kronrod[d] = fc[d] * WGK[10];
        abs[d] = fc[d].abs() * WGK[10];
    }
    fvals[20] = fc;
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fvals[2 * j] = f1;
        fvals[2 * j + 1] = f2;
        for d in 0..D {
            kronrod[d] += WGK[j] * (f1[d] + f2[d]);
            abs[d] += WGK[j] * (f1[d].abs() + f2[d].abs());
            if j % 2 == 1 {
                gauss[d] += WG[j / 2] * (f1[d] + f2[d]);
            }
        }
    }
    let mut value = [0.0; D];
    let mut err = [0.0; D];
    for d in 0..D {
        let mean = kronrod[d] * 0.5;
        let mut asc = WGK[10] * (fc[d] - mean).abs();
        for j in 0..10 {
            asc += WGK[j] * ((fvals[2 * j][d] - mean).abs() + (fvals[2 * j + 1][d] - mean).abs());
        }
        let asc = asc * half.abs();
        let mut e = ((kronrod[d] - gauss[d]) * half).abs();
        if asc != 0.0 && e != 0.0 {
            e = asc * (200.0 * e / asc).powf(1.5).min(1.0);
        }
        let resabs = abs[d] * half.abs();
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            e = e.max(50.0 * f64::EPSILON * resabs);
        }
        value[d] = kronrod[d] * half;
        err[d] = e;
        abs[d] = resabs;
    }
    Rule { value, err, abs }
}

/// A converged subinterval.
#[derive(Debug, Clone, Copy)]
pub struct Panel<const D: usize> {
    pub a: f64,
    pub b: f64,
    pub rule: Rule<D>,
}

struct Queued<const D: usize> {
    priority: f64,
    panel: Panel<D>,
}

impl<const D: usize> PartialEq for Queued<D> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<const D: usize> Eq for Queued<D> {}
impl<const D: usize> PartialOrd for Queued<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Queued<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn worst<const D: usize>(r: &Rule<D>) -> f64 {
    r.err.iter().copied().fold(0.0, f64::max)
}

/// Adaptive subdivision until, for every component, the summed error is
/// below `max(abs_tol, rel_tol * int |f|)`. Returns the final panels in order.
pub fn panels<const D: usize>(
    f: &dyn Fn(f64) -> [f64; D],
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Vec<Panel<D>>> {
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let mut err = [0.0; D];
    let mut abs = [0.0; D];
    let push = |heap: &mut BinaryHeap<Queued<D>>, err: &mut [f64; D], abs: &mut [f64; D], x0: f64, x1: f64| {
        let rule = gk21(f, x0, x1);
        for d in 0..D {
            err[d] += rule.err[d];
            abs[d] += rule.abs[d];
        }
        heap.push(Queued { priority: worst(&rule), panel: Panel { a: x0, b: x1, rule } });
    };
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            push(&mut heap, &mut err, &mut abs, w[0], w[1]);
        }
    }

    while !(0..D).all(|d| err[d] <= abs_tol.max(rel_tol * abs[d])) {
        let e = err.iter().copied().fold(0.0, f64::max);
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure { a, b, err: e });
        }
        let Some(top) = heap.pop() else { break };
        let Panel { a: lo, b: hi, rule } = top.panel;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::QuadratureFailure { a, b, err: e });
        }
        for d in 0..D {
            err[d] -= rule.err[d];
            abs[d] -= rule.abs[d];
        }
        push(&mut heap, &mut err, &mut abs, lo, mid);
        push(&mut heap, &mut err, &mut abs, mid, hi);
        if heap.len() % 64 == 0 {
            // refresh running sums against drift
            err = [0.0; D];
            abs = [0.0; D];
            for q in heap.iter() {
                for d in 0..D {
                    err[d] += q.panel.rule.err[d];
                    abs[d] += q.panel.rule.abs[d];
                }
            }
        }
    }

    let mut out: Vec<Panel<D>> = heap.into_iter().map(|q| q.panel).collect();
    out.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(out)
}

/// Result of a scalar integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub err: f64,
    /// `int |f|`, the scale used by relative tolerances.
    pub abs: f64,
}

/// `int_a^b f` with breakpoints honored. `b < a` integrates backwards.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, err: 0.0, abs: 0.0 });
    }
    if b < a {
        let r = integrate(f, b, a, breaks, rel_tol, abs_tol)?;
        return Ok(Integral { value: -r.value, ..r });
    }
    let g = |x: f64| [f(x)];
    let ps = panels(&g, a, b, breaks, rel_tol, abs_tol)?;
    // sum small contributions first
    let mut values: Vec<f64> = ps.iter().map(|p| p.rule.value[0]).collect();
    values.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    Ok(Integral {
        value: values.iter().sum(),
        err: ps.iter().map(|p| p.rule.err[0]).sum(),
        abs: ps.iter().map(|p| p.rule.abs[0]).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(&|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, &[], 1e-13, 0.0).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert_relative_eq!(r.value, exact, max_relative = 1e-14);
    }

    #[test]
    fn kink_with_breakpoint() {
        let r = integrate(&|x: f64| x.abs(), -1.0, 3.0, &[0.0], 1e-13, 0.0).unwrap();
        assert_relative_eq!(r.value, 5.0, max_relative = 1e-14);
    }

    #[test]
    fn oscillatory_and_reversed() {
        let r = integrate(&|x: f64| (20.0 * x).sin().powi(2), 0.0, PI, &[], 1e-13, 0.0).unwrap();
        assert_relative_eq!(r.value, PI / 2.0, max_relative = 1e-12);
        let back = integrate(&|x: f64| x.exp(), 1.0, 0.0, &[], 1e-13, 0.0).unwrap();
        assert_relative_eq!(back.value, 1.0 - 1f64.exp(), max_relative = 1e-13);
    }

    #[test]
    fn cancelling_integrand_uses_l1_scale() {
        let r = integrate(&|x: f64| (2.0 * PI * x).cos(), 0.0, 1.0, &[], 1e-12, 0.0).unwrap();
        assert!(r.value.abs() < 1e-13);
        assert!(r.abs > 0.6);
    }
}
