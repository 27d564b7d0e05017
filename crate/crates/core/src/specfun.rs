//! Complex special functions: the complete elliptic integral of the first
//! kind with its multi-sheet continuations, and the Bessel/Hankel functions
//! used by the two-emitter asymptotics.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::quad::{self, Tolerance};
use crate::{Error, Result, C64};

const AGM_MAX_ITER: usize = 60;
/// Angle (radians) from the negative real axis at which an AGM iterate
/// ratio is considered ambiguous and the quadrature fallback is used.
const AGM_BRANCH_GUARD: f64 = 1e-6;

/// Complete elliptic integral of the first kind, principal branch,
/// `K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt`.
///
/// Computed with the complex arithmetic-geometric mean
/// `K(m) = pi / (2 M(1, sqrt(1 - m)))`, taking at every step the square
/// root closest to the arithmetic mean. Errors on the real cut `m >= 1`.
pub fn ellipk(m: C64) -> Result<C64> {
    if m.im == 0.0 && m.re >= 1.0 {
        return Err(Error::OnBranchCut { m });
    }
    if !m.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite elliptic parameter {m}")));
    }
    match agm(C64::new(1.0, 0.0), (1.0 - m).sqrt()) {
        Some(mean) => Ok(PI / (2.0 * mean)),
        None => ellipk_quadrature(m),
    }
}

fn agm(mut a: C64, mut b: C64) -> Option<C64> {
    for _ in 0..AGM_MAX_ITER {
        if (a - b).norm() <= 4.0 * f64::EPSILON * a.norm() {
            return Some(a);
        }
        if (b / a).arg().abs() > PI - AGM_BRANCH_GUARD {
            return None;
        }
        let an = 0.5 * (a + b);
        let mut bn = (a * b).sqrt();
        if (an - bn).norm() > (an + bn).norm() {
            bn = -bn;
        }
        a = an;
        b = bn;
    }
    None
}

fn ellipk_quadrature(m: C64) -> Result<C64> {
    let tol = Tolerance::new(1e-15, 1e-14);
    quad::integrate(|t| (1.0 - m * t.sin().powi(2)).sqrt().inv(), 0.0, FRAC_PI_2, &tol)
        .into_result(&tol)
}

/// Riemann sheet of the continued self-energy. Sheet I is physical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SheetId {
    I,
    II,
    III,
    IV,
    V,
}

impl SheetId {
    pub const ALL: [SheetId; 5] = [SheetId::I, SheetId::II, SheetId::III, SheetId::IV, SheetId::V];
}

impl fmt::Display for SheetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SheetId::I => "I",
            SheetId::II => "II",
            SheetId::III => "III",
            SheetId::IV => "IV",
            SheetId::V => "V",
        };
        f.write_str(s)
    }
}

/// Signs of `Im[z^2]`, `Im[k(z)]` and `Re[k(z)]` at a complex energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegionSigns {
    pub sign_im_z2: i8,
    pub sign_im_kz: i8,
    pub sign_re_kz: i8,
}

impl fmt::Display for RegionSigns {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(Im z^2: {:+}, Im k: {:+}, Re k: {:+})",
            self.sign_im_z2, self.sign_im_kz, self.sign_re_kz
        )
    }
}

/// `p K(m) + q i K(1 - m)`.
pub fn ellipk_combination(m: C64, p: i32, q: i32) -> Result<C64> {
    let mut v = C64::new(0.0, 0.0);
    if p != 0 {
        v += ellipk(m)? * p as f64;
    }
    if q != 0 {
        v += C64::i() * ellipk(1.0 - m)? * q as f64;
    }
    Ok(v)
}

/// Branch coefficients `(p, q)` of `p K(m) + q i K(1 - m)` for a sheet and
/// region.
pub fn sheet_coefficients(sheet: SheetId, signs: RegionSigns) -> Result<(i32, i32)> {
    let RegionSigns { sign_im_z2: s2, sign_im_kz: si, sign_re_kz: sr } = signs;
    let coeffs = match sheet {
        SheetId::I => match (s2 * si).signum() {
            -1 => Some((1, 0)),
            1 if si > 0 => Some((1, 2)),
            1 => Some((1, -2)),
            _ => None,
        },
        _ => sheet_table(sheet, s2, si, sr),
    };
    coeffs.ok_or_else(|| Error::NoSheetEntry { sheet: sheet.to_string(), signs: signs.to_string() })
}

// Continuation below the real axis. Each unphysical sheet covers one strip
// of the lower half-plane between detour lines:
//   II: -3 < Re z < -1,  IV: -1 < Re z < 0,  V: 0 < Re z < 1,  III: 1 < Re z < 3.
// Inside a strip `m = k^2` crosses the cut of K(m) where Im k changes sign and
// the cut of K(1 - m) where Re k changes sign; (p, q) jumps accordingly.
fn sheet_table(sheet: SheetId, _s2: i8, si: i8, sr: i8) -> Option<(i32, i32)> {
    match (sheet, si, sr) {
        (SheetId::II, _, 1) => Some((1, 2)),
        (SheetId::II, _, -1) => Some((-3, 2)),
        (SheetId::III, _, 1) => Some((1, -2)),
        (SheetId::III, _, -1) => Some((-3, -2)),
        (SheetId::IV, 1, _) => Some((3, 2)),
        (SheetId::IV, -1, _) => Some((3, -4)),
        (SheetId::V, -1, _) => Some((3, -2)),
        (SheetId::V, 1, _) => Some((3, 4)),
        _ => None,
    }
}

/// Elliptic integral on the given sheet: `p K(m) + q i K(1 - m)` with the
/// coefficients selected by [`sheet_coefficients`].
pub fn ellipk_sheet(m: C64, sheet: SheetId, signs: RegionSigns) -> Result<C64> {
    let (p, q) = sheet_coefficients(sheet, signs)?;
    ellipk_combination(m, p, q)
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselOrder {
    Zero,
    One,
}

impl BesselOrder {
    fn nu(self) -> usize {
        match self {
            BesselOrder::Zero => 0,
            BesselOrder::One => 1,
        }
    }
}

/// Bessel function of the first kind `J_0` or `J_1` for real `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("bessel_j needs finite x >= 0, got {x}")));
    }
    let z = C64::new(x, 0.0);
    if x < SERIES_RADIUS {
        Ok(bessel_j_series(order.nu(), z).re)
    } else {
        Ok(hankel1_integral(order.nu(), z)?.re)
    }
}

/// Hankel function `H_1^(1)(x) = J_1(x) + i Y_1(x)`, principal branch
/// (cut along the negative real axis).
pub fn hankel1_1(x: C64) -> Result<C64> {
    if x.norm() == 0.0 {
        return Err(Error::HankelPole);
    }
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite Hankel argument {x}")));
    }
    if x.norm() < SERIES_RADIUS || !integral_rep_valid(x) {
        let j = bessel_j_series(1, x);
        Ok(j + C64::i() * bessel_y1_series(x, j))
    } else {
        hankel1_integral(1, x)
    }
}

fn integral_rep_valid(x: C64) -> bool {
    // the Laplace-type representation breaks down near the negative
    // imaginary axis, where 1 + i u / (2x) vanishes for some u > 0
    let a = x.arg();
    a > -FRAC_PI_2 + 0.25 && a < PI
}

/// Ascending series `sum_k (-1)^k (x/2)^{2k+n} / (k! (k+n)!)`.
fn bessel_j_series(n: usize, x: C64) -> C64 {
    let h = x / 2.0;
    let q = -h * h;
    let mut term = if n == 0 { C64::new(1.0, 0.0) } else { h };
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// `Y_1` from its ascending series, reusing `J_1(x)`.
fn bessel_y1_series(x: C64, j1: C64) -> C64 {
    let h = x / 2.0;
    let q = -h * h;
    // psi(k+1) + psi(k+2) with psi(n+1) = -gamma + H_n
    let mut harmonic = 0.0;
    let mut term = h;
    let mut sum = term * (-2.0 * EULER_GAMMA + 1.0);
    for k in 1..200 {
        harmonic += 1.0 / k as f64;
        term *= q / (k as f64 * (k + 1) as f64);
        let psi = -2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (k + 1) as f64;
        let t = term * psi;
        sum += t;
        if t.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    2.0 / PI * h.ln() * j1 - 2.0 / (PI * x) - sum / PI
}

/// `H_nu^(1)(x) = sqrt(2/(pi x)) e^{i(x - nu pi/2 - pi/4)} / Gamma(nu + 1/2)
///   * int_0^inf 2 s^{2 nu} e^{-s^2} (1 + i s^2 / (2x))^{nu - 1/2} ds`
fn hankel1_integral(nu: usize, x: C64) -> Result<C64> {
    let tol = Tolerance::new(1e-16, 1e-15);
    let power = nu as f64 - 0.5;
    let integrand = |s: f64| {
        let s2 = s * s;
        let base = 1.0 + C64::i() * s2 / (2.0 * x);
        2.0 * s2.powi(nu as i32) * (-s2).exp() * base.powf(power)
    };
    let integral = quad::integrate(integrand, 0.0, 9.0, &tol).into_result(&tol)?;
    let gamma = match nu {
        0 => PI.sqrt(),
        _ => PI.sqrt() / 2.0,
    };
    let phase = C64::i() * (x - nu as f64 * FRAC_PI_2 - PI / 4.0);
    Ok((2.0 / (PI * x)).sqrt() * phase.exp() * integral / gamma)
}
