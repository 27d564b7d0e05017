//! Continuum single-emitter dynamics from the resolvent
//! `G_e(z) = 1 / (z - Delta - Sigma_e(z))`.
//!
//! `C_e(t)` is split into pole contributions `R_j e^{-i z_j t}` (real bound
//! states on the physical sheet, unstable poles on the sheets continued
//! through each band segment) and one branch-cut integral per anchor
//! `a in {-3, -1, 0, 1, 3}`:
//! `C_a(t) = e^{-i a t} / (2 pi) int_0^inf [G_R(a - iy) - G_L(a - iy)] e^{-yt} dy`,
//! where `G_R`/`G_L` use the sheets to the right/left of the anchor.

use std::f64::consts::PI;

use crate::quad::{geometric_breaks, integrate, integrate_semi_infinite, integrate_with_breaks, Tolerance};
use crate::selfenergy::{markov_pole, sigma_e_closed, MarkovStatus, NON_ANALYTIC_POINTS};
use crate::specfun::SheetId;
use crate::{Error, Result, C64};

const SQRT3: f64 = 1.732_050_807_568_877_2;
/// Below this depth the anchor-0 integral uses the near-Dirac expansion.
const DIRAC_TAIL_DEPTH: f64 = 1e-6;
const ROOT_TOL: f64 = 1e-13;
const DEFECT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleKind {
    /// Real bound state above the band.
    UpperBoundState,
    /// Real bound state below the band.
    LowerBoundState,
    /// Pole with `Im z < 0` on a non-physical sheet.
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub z: C64,
    pub kind: PoleKind,
    pub sheet: SheetId,
    pub residue: C64,
}

/// Band segment whose lower-half-plane continuation is the given sheet.
pub fn strip(sheet: SheetId) -> (f64, f64) {
    match sheet {
        SheetId::I => (f64::NEG_INFINITY, f64::INFINITY),
        SheetId::II => (-3.0, -1.0),
        SheetId::III => (1.0, 3.0),
        SheetId::IV => (-1.0, 0.0),
        SheetId::V => (0.0, 1.0),
    }
}

/// Sheets on the `(left, right)` of the vertical cut below an anchor.
pub fn sheets_at_anchor(anchor: f64) -> Result<(SheetId, SheetId)> {
    let pair = [
        (-3.0, SheetId::I, SheetId::II),
        (-1.0, SheetId::II, SheetId::IV),
        (0.0, SheetId::IV, SheetId::V),
        (1.0, SheetId::V, SheetId::III),
        (3.0, SheetId::III, SheetId::I),
    ]
    .into_iter()
    .find(|p| p.0 == anchor);
    pair.map(|(_, l, r)| (l, r))
        .ok_or_else(|| Error::InvalidParameter(format!("{anchor} is not a branch point")))
}

/// Sheet on which the lower-half-plane value at `Re z = x` is the
/// continuation of the physical boundary value.
pub fn sheet_below(x: f64) -> SheetId {
    match x {
        x if x <= -3.0 || x >= 3.0 => SheetId::I,
        x if x < -1.0 => SheetId::II,
        x if x < 0.0 => SheetId::IV,
        x if x < 1.0 => SheetId::V,
        _ => SheetId::III,
    }
}

fn sigma(z: C64, g: f64, sheet: SheetId) -> Result<C64> {
    Ok(sigma_e_closed(z, g, sheet)?.value)
}

/// Horizontal distance from `z` to the nearest point where the sheet's
/// formula stops being analytic along a horizontal line.
fn horizontal_room(z: C64, sheet: SheetId) -> f64 {
    if sheet == SheetId::I {
        if z.im != 0.0 {
            return f64::INFINITY;
        }
        return NON_ANALYTIC_POINTS.iter().map(|p| (z.re - p).abs()).fold(f64::INFINITY, f64::min);
    }
    let (lo, hi) = strip(sheet);
    (z.re - lo).min(hi - z.re)
}

/// Derivative of `Sigma_e` on a sheet by a five-point stencil along the real
/// direction, with a Richardson-style error estimate from halving the step.
pub fn sigma_derivative(z: C64, g: f64, sheet: SheetId) -> Result<(C64, f64)> {
    let h = (0.25 * horizontal_room(z, sheet)).min(1e-3 * (1.0 + z.norm()));
    if !(h > 0.0) {
        return Err(Error::NonAnalytic { z });
    }
    let five = |h: f64| -> Result<C64> {
        let f = |d: f64| sigma(z + d, g, sheet);
        Ok((f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?) * 8.0) / (12.0 * h))
    };
    let d1 = five(h)?;
    let d2 = five(h / 2.0)?;
    Ok((d2 + (d2 - d1) / 15.0, (d2 - d1).norm()))
}

/// `R = 1 / (1 - dSigma/dz)` at a pole on the given sheet.
pub fn residue_at(z: C64, g: f64, sheet: SheetId) -> Result<C64> {
    let (d, _) = sigma_derivative(z, g, sheet)?;
    let denom = C64::new(1.0, 0.0) - d;
    if denom.norm() < DEFECT_TOL {
        return Err(Error::DefectivePole { z, denom: denom.norm() });
    }
    Ok(denom.inv())
}

/// Real root of `E - Delta - Sigma_e(E) = 0` above the band, if it can be
/// resolved in double precision.
fn upper_bound_state(delta: f64, g: f64) -> Result<Option<f64>> {
    let h = |e: f64| -> Result<f64> { Ok(e - delta - sigma(C64::new(e, 0.0), g, SheetId::I)?.re) };
    // h -> -inf at the band edge (logarithmic density of states) and -> +inf far away
    let mut lo = 1.0;
    while h(3.0 + lo)? >= 0.0 {
        lo *= 0.1;
        if lo < 1e-12 {
            return Ok(None);
        }
    }
    let mut hi = 1.0_f64.max(2.0 * (delta - 3.0));
    while h(3.0 + hi)? <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoConvergence { seed: C64::new(3.0 + hi, 0.0) });
        }
    }
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    for _ in 0..400 {
        let mid = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * (3.0 + hi) {
            break;
        }
        if h(3.0 + mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    // closer than this to the edge the residue is below double precision anyway
    if d < 1e-13 {
        return Ok(None);
    }
    Ok(Some(3.0 + d))
}

fn newton_on_sheet(seed: C64, delta: f64, g: f64, sheet: SheetId) -> Option<C64> {
    let (lo, hi) = strip(sheet);
    let mut z = seed;
    for _ in 0..80 {
        let f = z - delta - sigma(z, g, sheet).ok()?;
        if f.norm() < ROOT_TOL * (1.0 + z.norm()) {
            return Some(z);
        }
        let (d, _) = sigma_derivative(z, g, sheet).ok()?;
        let mut step = f / (C64::new(1.0, 0.0) - d);
        // stay inside the strip and below the axis
        let room = (z.re - lo).min(hi - z.re).min(-z.im);
        if step.norm() > 0.5 * room {
            step *= 0.5 * room / step.norm();
        }
        z -= step;
        if !(z.re > lo && z.re < hi && z.im < 0.0) || z.im < -20.0 {
            return None;
        }
    }
    None
}

fn push_unique(found: &mut Vec<C64>, z: C64) {
    if found.iter().all(|w| (w - z).norm() > 1e-8 * (1.0 + z.norm())) {
        found.push(z);
    }
}

/// All poles of `G_e` that enter the contour deformation: real bound states
/// outside the band and unstable poles below each band segment.
pub fn find_poles(delta: f64, g: f64) -> Result<Vec<Pole>> {
    if !delta.is_finite() || !g.is_finite() || g < 0.0 {
        return Err(Error::InvalidParameter(format!("delta = {delta}, g = {g}")));
    }
    let mut poles = Vec::new();
    if let Some(e) = upper_bound_state(delta, g)? {
        let residue = residue_at(C64::new(e, 0.0), g, SheetId::I)?;
        poles.push(Pole { z: C64::new(e, 0.0), kind: PoleKind::UpperBoundState, sheet: SheetId::I, residue });
    }
    // Sigma_e is odd, so lower bound states mirror upper ones of -Delta
    if let Some(e) = upper_bound_state(-delta, g)? {
        let residue = residue_at(C64::new(-e, 0.0), g, SheetId::I)?;
        poles.push(Pole { z: C64::new(-e, 0.0), kind: PoleKind::LowerBoundState, sheet: SheetId::I, residue });
    }
    if g == 0.0 {
        return Ok(poles);
    }
    let zm = match markov_pole(delta, g) {
        Ok(m) if m.status == MarkovStatus::Regular => Some(m.z),
        _ => None,
    };
    for sheet in [SheetId::II, SheetId::III, SheetId::IV, SheetId::V] {
        let (lo, hi) = strip(sheet);
        let mut seeds = Vec::new();
        if let Some(z) = zm {
            seeds.push(z);
        }
        if delta > lo && delta < hi {
            seeds.push(C64::new(delta, -1e-3));
        }
        for i in 1..16 {
            let x = lo + (hi - lo) * i as f64 / 16.0;
            for &y in &[1e-4, 1e-3, 1e-2, 0.05, 0.2, 0.5, 1.0, 2.0] {
                seeds.push(C64::new(x, -y));
            }
        }
        for &a in &[lo, hi] {
            for &d in &[1e-3, 1e-2, 0.1] {
                let x = if a == lo { a + d } else { a - d };
                seeds.push(C64::new(x, -0.1));
                seeds.push(C64::new(x, -d));
            }
        }
        let mut found = Vec::new();
        for seed in seeds.into_iter().filter(|s| s.re > lo && s.re < hi && s.im < 0.0) {
            if let Some(z) = newton_on_sheet(seed, delta, g, sheet) {
                if z.im < -1e-12 {
                    push_unique(&mut found, z);
                }
            }
        }
        found.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for z in found {
            let residue = residue_at(z, g, sheet)?;
            poles.push(Pole { z, kind: PoleKind::Unstable, sheet, residue });
        }
    }
    Ok(poles)
}

/// Resolvent `1 / (z - Delta - Sigma_e(z))` on a given sheet.
pub fn resolvent(z: C64, delta: f64, g: f64, sheet: SheetId) -> Result<C64> {
    Ok((z - delta - sigma(z, g, sheet)?).inv())
}

/// `y G_S(-iy)` for `y -> 0` near the Dirac anchor, written in
/// `u = -ln y` so that arbitrarily small `y` stay representable.
fn dirac_tail_integrand(u: f64, delta: f64, g: f64, t: f64) -> C64 {
    let a = g * g / (PI * SQRT3);
    let log_term = -2.0 * u - 2.0 * 3f64.ln();
    let i = C64::i();
    if delta != 0.0 && u > 600.0 {
        // |Delta| / y dominates and the difference vanishes like y^2
        return C64::new(0.0, 0.0);
    }
    let side = |c: C64| {
        let dterm = if delta == 0.0 { 0.0 } else { delta * u.exp() };
        (-i - dterm + i * a * (log_term + c)).inv()
    };
    // Sigma on the right/left sheets is a z (log(-z^2/9) -+ 2 pi i)
    let right = side(C64::new(0.0, -2.0 * PI));
    let left = side(C64::new(0.0, 2.0 * PI));
    (right - left) * ((-(-u).exp() * t).exp() / (2.0 * PI))
}

/// Branch-cut contribution of one anchor at time `t >= 0`.
pub fn branch_cut_contribution(delta: f64, g: f64, anchor: f64, t: f64, tol: &Tolerance) -> Result<C64> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time {t}")));
    }
    let (left, right) = sheets_at_anchor(anchor)?;
    let mut failure = None;
    let mut integrand = |y: f64| -> C64 {
        let eps = if anchor == 0.0 { 1e-9 * y } else { (1e-9 * y).max(1e-14) };
        let zr = C64::new(anchor + eps, -y);
        let zl = C64::new(anchor - eps, -y);
        match (resolvent(zr, delta, g, right), resolvent(zl, delta, g, left)) {
            (Ok(r), Ok(l)) => (r - l) * ((-y * t).exp() / (2.0 * PI)),
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        }
    };
    let split = 1.0;
    let (near_start, mut total) = if anchor == 0.0 {
        let tail = integrate_semi_infinite(|u| dirac_tail_integrand(u, delta, g, t), -DIRAC_TAIL_DEPTH.ln(), 10.0, tol);
        (DIRAC_TAIL_DEPTH, tail.into_result(tol)?)
    } else {
        (0.0, C64::new(0.0, 0.0))
    };
    let lower = if near_start > 0.0 { near_start } else { 1e-16 };
    let breaks: Vec<f64> = geometric_breaks(split, 0.1, 16).into_iter().filter(|&b| b > lower).collect();
    total += integrate_with_breaks(&mut integrand, near_start, split, &breaks, tol).into_result(tol)?;
    // e^{-yt} decays on the scale 1/t, so stretch the map accordingly
    let scale = if t > 1.0 { 1.0 / t } else { 1.0 };
    total += if t > 1.0 {
        integrate(&mut integrand, split, split + 50.0 / t, tol).into_result(tol)?
            + integrate_semi_infinite(&mut integrand, split + 50.0 / t, scale, tol).into_result(tol)?
    } else {
        integrate_semi_infinite(&mut integrand, split, scale, tol).into_result(tol)?
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(total * C64::from_polar(1.0, -anchor * t))
}

/// Poles plus branch cuts for one `(Delta, g)`; evaluates `C_e(t)`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub delta: f64,
    pub g: f64,
    pub poles: Vec<Pole>,
    pub anchors: Vec<f64>,
    pub tolerance: Tolerance,
}

impl SpectralDecomposition {
    pub fn new(delta: f64, g: f64) -> Result<Self> {
        Ok(Self {
            delta,
            g,
            poles: find_poles(delta, g)?,
            anchors: NON_ANALYTIC_POINTS.to_vec(),
            tolerance: Tolerance { abs: 1e-11, rel: 1e-10, max_intervals: 4000 },
        })
    }

    pub fn pole_part(&self, t: f64) -> C64 {
        self.poles.iter().map(|p| p.residue * (-C64::i() * p.z * t).exp()).sum()
    }

    pub fn branch_part(&self, t: f64) -> Result<C64> {
        let mut s = C64::new(0.0, 0.0);
        for &a in &self.anchors {
            s += branch_cut_contribution(self.delta, self.g, a, t, &self.tolerance)?;
        }
        Ok(s)
    }

    pub fn ce(&self, t: f64) -> Result<C64> {
        Ok(self.pole_part(t) + self.branch_part(t)?)
    }
}

/// Continuum `C_e(t)` at each requested time.
pub fn ce_resolvent(delta: f64, g: f64, times: &[f64]) -> Result<Vec<C64>> {
    let sd = SpectralDecomposition::new(delta, g)?;
    times.iter().map(|&t| sd.ce(t)).collect()
}

/// Markovian amplitude `e^{-i z_M t}`.
pub fn markov_ce(delta: f64, g: f64, t: f64) -> Result<C64> {
    let m = markov_pole(delta, g)?;
    if m.status == MarkovStatus::Divergent {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok((-C64::i() * m.z * t).exp())
}

/// Slope of `1 / |C_e(t)|` against `ln t` at `Delta = 0`, set by the
/// Dirac-point branch cut: `2 g^2 / (pi sqrt 3)`.
pub fn dirac_log_slope(g: f64) -> f64 {
    2.0 * g * g / (PI * SQRT3)
}
