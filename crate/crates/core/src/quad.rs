//! Globally adaptive Gauss-Kronrod (7/15) quadrature for complex-valued
//! integrands on finite and semi-infinite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result, C64};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 4000 }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-10)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn into_result(self, tol: &Tolerance) -> Result<C64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                estimate: self.error,
                tolerance: tol.abs.max(tol.rel * self.value.norm()),
            })
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).norm();
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, first splitting at the given interior
/// breakpoints (which must be sorted and lie inside the interval).
pub fn integrate_with_breaks<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: &Tolerance,
) -> QuadResult {
    let mut nodes = Vec::with_capacity(breaks.len() + 2);
    nodes.push(a);
    nodes.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    nodes.push(b);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in nodes.windows(2) {
        heap.push(gk15(&mut f, w[0], w[1]));
        evaluations += 15;
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((C64::new(0.0, 0.0), 0.0), |(v, e), s| (v + s.value, e + s.error));
        let target = tol.abs.max(tol.rel * value.norm());
        if error <= target {
            return QuadResult { value, error, evaluations, converged: true };
        }
        if heap.len() >= tol.max_intervals {
            return QuadResult { value, error, evaluations, converged: false };
        }
        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            heap.push(Segment { error: 0.0, ..worst });
            let (value, error) = heap
                .iter()
                .fold((C64::new(0.0, 0.0), 0.0), |(v, e), s| (v + s.value, e + s.error));
            return QuadResult { value, error: error + worst.error, evaluations, converged: false };
        }
        heap.push(gk15(&mut f, worst.a, mid));
        heap.push(gk15(&mut f, mid, worst.b));
        evaluations += 30;
    }
}

pub fn integrate<F: FnMut(f64) -> C64>(f: F, a: f64, b: f64, tol: &Tolerance) -> QuadResult {
    integrate_with_breaks(f, a, b, &[], tol)
}

/// Integrates `f` over `[a, inf)` through the map `x = a + scale * s / (1 - s)`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    scale: f64,
    tol: &Tolerance,
) -> QuadResult {
    let g = |s: f64| {
        if s >= 1.0 {
            return C64::new(0.0, 0.0);
        }
        let d = 1.0 - s;
        let x = a + scale * s / d;
        let v = f(x) * (scale / (d * d));
        if v.is_finite() {
            v
        } else {
            C64::new(0.0, 0.0)
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Breakpoints `x0 * ratio^j` accumulating geometrically toward `0`, useful
/// for integrable endpoint singularities at the origin.
pub fn geometric_breaks(x0: f64, ratio: f64, count: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=count).map(|j| x0 * ratio.powi(j as i32)).collect();
    v.reverse();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let tol = Tolerance::default();
        let r = integrate(|x| C64::new(x.powi(5) - 2.0 * x, x * x), -1.0, 2.0, &tol);
        assert!(r.converged);
        let exact = C64::new((64.0 - 1.0) / 6.0 - (4.0 - 1.0), 3.0);
        assert!((r.value - exact).norm() < 1e-13);
    }

    #[test]
    fn oscillatory_and_singular() {
        let tol = Tolerance::new(1e-13, 1e-12);
        let r = integrate(|x| C64::from_polar(1.0, 20.0 * x), 0.0, PI, &tol);
        let exact = (C64::from_polar(1.0, 20.0 * PI) - 1.0) / C64::new(0.0, 20.0);
        assert!((r.value - exact).norm() < 1e-12);

        let r = integrate_with_breaks(
            |x| C64::new(x.sqrt().recip(), 0.0),
            0.0,
            1.0,
            &geometric_breaks(1.0, 0.5, 40),
            &tol,
        );
        assert!((r.value.re - 2.0).abs() < 1e-10, "{:?}", r);
    }

    #[test]
    fn semi_infinite() {
        let tol = Tolerance::new(1e-13, 1e-12);
        let r = integrate_semi_infinite(|x| C64::new((-x).exp(), 1.0 / (1.0 + x * x)), 0.0, 1.0, &tol);
        assert!(r.converged);
        assert!((r.value - C64::new(1.0, PI / 2.0)).norm() < 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        let tol = Tolerance { abs: 1e-15, rel: 0.0, max_intervals: 4 };
        let r = integrate(|x| C64::new((1.0 / (x + 1e-6)).sin(), 0.0), 0.0, 1.0, &tol);
        assert!(!r.converged);
        assert!(matches!(r.into_result(&tol), Err(Error::Quadrature { .. })));
    }
}
