//! Single-emitter and collective self-energies.
//!
//! Finite-`N` quantities are exact momentum sums over the `N x N` grid;
//! continuum quantities use the closed form
//! `Sigma_e(z) = g^2 z / (4 pi) C(z) K(k(z)^2)` with
//! `C(z) = 8 / ((sqrt(z^2) - 1)^{3/2} (sqrt(z^2) + 3)^{1/2})` and
//! `k(z) = C(z) (z^2)^{1/4} / 2`, continued onto the sheets of
//! [`SheetId`]. All energies are in units of `J`.

use std::f64::consts::PI;

use crate::lattice::{rescaled_separation, BathModel, Site};
use crate::specfun::{ellipk_sheet, RegionSigns, SheetId};
use crate::sum::ComplexSum;
use crate::{Error, Result, C64};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Offset used for boundary values `E + i0+` on the physical sheet.
pub const BOUNDARY_ETA: f64 = 1e-8;
/// Energies where the continuum self-energy is not analytic.
pub const NON_ANALYTIC_POINTS: [f64; 5] = [-3.0, -1.0, 0.0, 1.0, 3.0];
/// Upper edge of the window where the near-Dirac expansion is used.
pub const NEAR_DIRAC_WINDOW: f64 = 0.1;
/// Constant of `g(N) ~ C + 2/(pi sqrt 3) log N`.
pub const G_OF_N_OFFSET: f64 = 0.2;
/// Constant of `g_-(n(a1 + a2)) ~ D + 2/(pi sqrt 3) log n`.
pub const SUBRADIANT_OFFSET: f64 = 0.6;

const RESONANCE_TOL: f64 = 1e-14;
const SIGN_TOL: f64 = 1e-14;
const SIGN_SHIFT: f64 = 1e-12;
const REAL_AXIS_NUDGE: f64 = 1e-200;

/// `2 / (pi sqrt 3)`, the slope of the logarithmic divergences.
pub fn log_slope() -> f64 {
    2.0 / (PI * SQRT3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfEnergySource {
    FiniteSum { n: usize },
    ClosedForm,
    NearDiracExpansion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfEnergyValue {
    pub z: C64,
    pub value: C64,
    pub sheet: SheetId,
    pub source: SelfEnergySource,
}

/// Sublattices the two emitters couple to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SublatticePair {
    AA,
    BB,
    AB,
    BA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectiveIndex {
    pub beta: SublatticePair,
    pub n12: Site,
}

// ---------------------------------------------------------------------------
// momentum sums

/// Per-axis trigonometric tables so a full grid sweep needs no trig calls.
pub(crate) struct AxisTables {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl AxisTables {
    pub fn new(model: &BathModel) -> Self {
        let dk = model.momentum_step();
        let (sin, cos) = model.momentum_indices().map(|m| (dk * m as f64).sin_cos()).unzip();
        Self { cos, sin }
    }

    /// `e^{i k m}` for every grid momentum `k` along one axis.
    pub fn phases(&self, model: &BathModel, shift: i64) -> Vec<C64> {
        let dk = model.momentum_step();
        model
            .momentum_indices()
            .map(|m| {
                // reduce the integer product first so large shifts stay exact
                let r = (m * shift).rem_euclid(model.n() as i64);
                C64::from_polar(1.0, dk * r as f64)
            })
            .collect()
    }
}

/// Sweeps the grid row by row, calling `term(f(k), |f(k)|^2, i, j)` and
/// accumulating with compensated sums merged in row order.
pub(crate) fn grid_sum<const K: usize, F>(model: &BathModel, tables: &AxisTables, mut term: F) -> [C64; K]
where
    F: FnMut(C64, f64, usize, usize) -> [C64; K],
{
    let n = model.n();
    let mut total = [ComplexSum::default(); K];
    for i in 0..n {
        let (c1, s1) = (tables.cos[i], tables.sin[i]);
        let mut row = [ComplexSum::default(); K];
        for l in 0..n {
            let (c2, s2) = (tables.cos[l], tables.sin[l]);
            let f = C64::new(1.0 + c1 + c2, s1 + s2);
            let w2 = 3.0 + 2.0 * (c1 + c2 + c1 * c2 + s1 * s2);
            let t = term(f, w2, i, l);
            for (acc, v) in row.iter_mut().zip(t) {
                acc.add(v);
            }
        }
        for (acc, r) in total.iter_mut().zip(row.iter()) {
            acc.merge(r);
        }
    }
    total.map(|s| s.value())
}

fn check_finite_z(z: C64, model: &BathModel) -> Result<()> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite energy {z}")));
    }
    if z.norm() == 0.0 {
        model.require_gapless_free()?;
    }
    Ok(())
}

fn resonance_guard(z: C64, z2: C64, w2: f64, hit: &mut bool) {
    // |z -+ omega| < tol  <=>  |z^2 - omega^2| < tol |z +- omega|
    if (z2 - w2).norm() < RESONANCE_TOL * (z.norm() + w2.sqrt()).max(RESONANCE_TOL) && z.norm() > 0.0 {
        *hit = true;
    }
}

/// `Sigma_e(z) = (g^2/N^2) sum_k z / (z^2 - |f(k)|^2)`.
pub fn sigma_e_finite(z: C64, g: f64, model: &BathModel) -> Result<SelfEnergyValue> {
    check_finite_z(z, model)?;
    let tables = AxisTables::new(model);
    let z2 = z * z;
    let mut hit = false;
    let [s] = grid_sum(model, &tables, |_, w2, _, _| {
        resonance_guard(z, z2, w2, &mut hit);
        [z / (z2 - w2)]
    });
    if hit {
        return Err(Error::Resonance { z });
    }
    Ok(SelfEnergyValue {
        z,
        value: s * (g * g / model.num_cells() as f64),
        sheet: SheetId::I,
        source: SelfEnergySource::FiniteSum { n: model.n() },
    })
}

/// Collective sums at one energy, returned together with their
/// `z`-derivatives: `(Sigma_e, dSigma_e, Sigma_12, dSigma_12)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveSums {
    pub sigma_e: C64,
    pub d_sigma_e: C64,
    pub sigma_12: C64,
    pub d_sigma_12: C64,
}

impl CollectiveSums {
    /// `Sigma_+-(z) = Sigma_e(z) +- Sigma_12(z)` and its derivative.
    pub fn combined(&self, sign: f64) -> (C64, C64) {
        (self.sigma_e + self.sigma_12 * sign, self.d_sigma_e + self.d_sigma_12 * sign)
    }
}

/// Exact finite-`N` sums for `Sigma_e` and `Sigma_12^beta(z; n12)` with their
/// first derivatives, in one sweep of the grid.
pub fn collective_sums(z: C64, g: f64, model: &BathModel, idx: CollectiveIndex) -> Result<CollectiveSums> {
    check_finite_z(z, model)?;
    let tables = AxisTables::new(model);
    let p1 = tables.phases(model, idx.n12[0]);
    let p2 = tables.phases(model, idx.n12[1]);
    let z2 = z * z;
    let mut hit = false;
    let [se, dse, s12, ds12] = grid_sum(model, &tables, |f, w2, i, j| {
        resonance_guard(z, z2, w2, &mut hit);
        let inv = (z2 - w2).inv();
        let inv2 = inv * inv;
        let phase = p1[i] * p2[j];
        let se = z * inv;
        let dse = -(z2 + w2) * inv2;
        let (s12, ds12) = match idx.beta {
            SublatticePair::AA | SublatticePair::BB => (se * phase, dse * phase),
            SublatticePair::AB => {
                let d = f.conj() * phase;
                (d * inv, -2.0 * z * d * inv2)
            }
            SublatticePair::BA => {
                let d = f * phase;
                (d * inv, -2.0 * z * d * inv2)
            }
        };
        [se, dse, s12, ds12]
    });
    if hit {
        return Err(Error::Resonance { z });
    }
    let scale = g * g / model.num_cells() as f64;
    Ok(CollectiveSums {
        sigma_e: se * scale,
        d_sigma_e: dse * scale,
        sigma_12: s12 * scale,
        d_sigma_12: ds12 * scale,
    })
}

/// `Sigma_12^beta(z; n12) = (g^2/N^2) sum_k D_beta e^{i k . n12} / (z^2 - |f|^2)`
/// with `D_AA = D_BB = z` and `D_AB = conj(D_BA) = conj(f(k))`.
pub fn sigma12_finite(z: C64, g: f64, model: &BathModel, idx: CollectiveIndex) -> Result<SelfEnergyValue> {
    let sums = collective_sums(z, g, model, idx)?;
    Ok(SelfEnergyValue {
        z,
        value: sums.sigma_12,
        sheet: SheetId::I,
        source: SelfEnergySource::FiniteSum { n: model.n() },
    })
}

/// `g(N) = (1/N^2) sum_k J^2 / |f(k)|^2`.
pub fn g_of_n(model: &BathModel) -> Result<f64> {
    model.require_gapless_free()?;
    let tables = AxisTables::new(model);
    let [s] = grid_sum(model, &tables, |_, w2, _, _| [C64::new(w2.recip(), 0.0)]);
    Ok(s.re / model.num_cells() as f64)
}

/// `0.2 + 2/(pi sqrt 3) log N`.
pub fn g_of_n_approx(n: usize) -> f64 {
    G_OF_N_OFFSET + log_slope() * (n as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Antisymmetric => -1.0,
        }
    }
}

/// `g_+-(n12, N) = (1/N^2) sum_k J^2 (1 +- e^{i k . n12}) / |f(k)|^2`.
pub fn g_pm(model: &BathModel, n12: Site, parity: Parity) -> Result<f64> {
    model.require_gapless_free()?;
    let tables = AxisTables::new(model);
    let p1 = tables.phases(model, n12[0]);
    let p2 = tables.phases(model, n12[1]);
    let sign = parity.sign();
    let [s] = grid_sum(model, &tables, |_, w2, i, j| [(1.0 + sign * p1[i] * p2[j]) / w2]);
    let v = s / model.num_cells() as f64;
    debug_assert!(v.im.abs() < 1e-10, "imaginary part {}", v.im);
    Ok(v.re)
}

/// Residue of the quasi-bound state, `R_0 = 1 / (1 + g^2 g(N))`.
pub fn residue_r0(g: f64, model: &BathModel) -> Result<f64> {
    Ok(1.0 / (1.0 + g * g * g_of_n(model)?))
}

/// `R_0` with the logarithmic approximation of `g(N)`.
pub fn residue_r0_approx(g: f64, n: usize) -> f64 {
    1.0 / (1.0 + g * g * g_of_n_approx(n))
}

/// Residue of the AA/BB subradiant state at separation `n (a1 + a2)`.
pub fn residue_subradiant_aa(n: u64, g: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("subradiant residue needs n >= 1".into()));
    }
    Ok(1.0 / (1.0 + g * g * (SUBRADIANT_OFFSET + log_slope() * (n as f64).ln())))
}

/// Large-distance Markovian AB exchange `J_AB,M(n12)` (units of `J`).
pub fn jab_markov_asymptotic(n12: Site, g: f64) -> Result<f64> {
    if n12 == [0, 0] {
        return Err(Error::InvalidParameter("n12 = (0, 0) has no asymptotic exchange".into()));
    }
    let [m1, m2] = rescaled_separation(n12);
    let r = m1.hypot(m2);
    let angle = 2.0 * PI / 3.0 * (n12[0] - n12[1]).rem_euclid(3) as f64;
    Ok(g * g * SQRT3 / (PI * r) * (m1 * angle.cos() - m2 * angle.sin()) / r)
}

/// Near-Dirac asymptotic `Sigma_12^AB(z; n12)` in terms of the Hankel
/// function, `i g^2 z / sqrt 3 H_1(2 z |m12| / 3) (m1 cos - m2 sin) / |m12|`.
pub fn sigma12_ab_hankel(z: C64, g: f64, n12: Site) -> Result<C64> {
    if n12 == [0, 0] {
        return Err(Error::InvalidParameter("n12 = (0, 0)".into()));
    }
    let [m1, m2] = rescaled_separation(n12);
    let r = m1.hypot(m2);
    let angle = 2.0 * PI / 3.0 * (n12[0] - n12[1]).rem_euclid(3) as f64;
    let h = crate::specfun::hankel1_1(z * (2.0 * r / 3.0))?;
    Ok(C64::i() * g * g * z / SQRT3 * h * (m1 * angle.cos() - m2 * angle.sin()) / r)
}

// ---------------------------------------------------------------------------
// continuum closed form

#[inline]
fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `(C(z), k(z))` with principal branches of every power.
pub fn elliptic_kernel(z: C64) -> (C64, C64) {
    let z2 = z * z;
    let r = z2.sqrt();
    let c = 8.0 / ((r - 1.0).powf(1.5) * (r + 3.0).sqrt());
    let k = c * z2.powf(0.25) / 2.0;
    (c, k)
}

/// Signs of `Im z^2`, `Im k(z)`, `Re k(z)`. Quantities within `1e-14` of
/// zero take the sign they have at `z - 1e-12 i` (and, on the imaginary
/// axis where that shift leaves `Im z^2 = 0`, at `z + 1e-12 - 1e-12 i`).
pub fn region_signs(z: C64) -> RegionSigns {
    let signs_at = |w: C64| {
        let (_, k) = elliptic_kernel(w);
        [(w * w).im, k.im, k.re]
    };
    let mut v = signs_at(z);
    for shift in [C64::new(0.0, -SIGN_SHIFT), C64::new(SIGN_SHIFT, -SIGN_SHIFT)] {
        if v.iter().all(|x| x.abs() >= SIGN_TOL) {
            break;
        }
        let s = signs_at(z + shift);
        for (x, xs) in v.iter_mut().zip(s) {
            if x.abs() < SIGN_TOL {
                *x = if xs == 0.0 { 0.0 } else { xs.signum() * SIGN_TOL };
            }
        }
    }
    RegionSigns { sign_im_z2: sign_of(v[0]), sign_im_kz: sign_of(v[1]), sign_re_kz: sign_of(v[2]) }
}

/// Whether `z` is exactly one of the five non-analytic energies.
pub fn is_non_analytic(z: C64) -> bool {
    NON_ANALYTIC_POINTS.iter().any(|&p| z.im == 0.0 && z.re == p)
}

/// Closed-form continuum self-energy on the given sheet.
pub fn sigma_e_closed(z: C64, g: f64, sheet: SheetId) -> Result<SelfEnergyValue> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite energy {z}")));
    }
    if is_non_analytic(z) {
        return Err(Error::NonAnalytic { z });
    }
    // inside the band the real axis is a cut; resolve it toward the lower
    // half-plane, consistently with the tie-breaking of the region signs
    let zeval = if z.im == 0.0 && z.re.abs() < 3.0 { C64::new(z.re, -REAL_AXIS_NUDGE) } else { z };
    let (c, k) = elliptic_kernel(zeval);
    let kk = ellipk_sheet(k * k, sheet, region_signs(zeval))?;
    Ok(SelfEnergyValue {
        z,
        value: g * g * z / (4.0 * PI) * c * kk,
        sheet,
        source: SelfEnergySource::ClosedForm,
    })
}

/// `Sigma_e(E + i0+)` on the physical sheet, taken exactly as the complex
/// conjugate of the lower-side value on the real axis.
pub fn sigma_e_boundary(energy: f64, g: f64) -> Result<C64> {
    Ok(sigma_e_closed(C64::new(energy, 0.0), g, SheetId::I)?.value.conj())
}

/// `Sigma_e(E + i0+) = delta_omega(E) - i Gamma(E) / 2` on the physical
/// sheet; returns `(delta_omega, Gamma)`. `Gamma` is exactly zero outside
/// the band.
pub fn lamb_shift_and_rate(energy: f64, g: f64) -> Result<(f64, f64)> {
    let s = sigma_e_boundary(energy, g)?;
    let gamma = if energy.abs() > 3.0 { 0.0 } else { (-2.0 * s.im).max(0.0) };
    Ok((s.re, gamma))
}

/// Expansion of the self-energy around the Dirac point,
/// `g^2/(pi sqrt 3) [E log(E^2/9) - i pi |E|]` for real `E` approached from
/// above; complex `E` uses the analytic form `g^2/(pi sqrt 3) E log(-E^2/9)`.
/// Intended for `|E| <= 0.1`.
pub fn sigma_e_near_zero(e: C64, g: f64) -> SelfEnergyValue {
    let a = g * g / (PI * SQRT3);
    let value = if e.norm() == 0.0 {
        C64::new(0.0, 0.0)
    } else if e.im == 0.0 {
        let x = e.re;
        C64::new(a * x * (x * x / 9.0).ln(), -a * PI * x.abs())
    } else {
        a * e * (-(e * e) / 9.0).ln()
    };
    SelfEnergyValue { z: e, value, sheet: SheetId::I, source: SelfEnergySource::NearDiracExpansion }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkovStatus {
    Regular,
    /// `Delta = 0`: the Markov pole predicts no decay at all.
    Marginal,
    /// `Delta = +-J`: the golden-rule rate diverges.
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovPole {
    pub z: C64,
    pub status: MarkovStatus,
}

impl MarkovPole {
    pub fn lamb_shift(&self, delta: f64) -> f64 {
        self.z.re - delta
    }

    pub fn rate(&self) -> f64 {
        -2.0 * self.z.im
    }
}

/// `z_M = Delta + Sigma_e(Delta + i0+)`.
pub fn markov_pole(delta: f64, g: f64) -> Result<MarkovPole> {
    if !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("detuning {delta}")));
    }
    if delta.abs() < 1e-12 {
        return Ok(MarkovPole { z: C64::new(0.0, 0.0), status: MarkovStatus::Marginal });
    }
    if delta.abs() == 1.0 {
        return Ok(MarkovPole { z: C64::new(delta, f64::NEG_INFINITY), status: MarkovStatus::Divergent });
    }
    if delta.abs() == 3.0 {
        return Err(Error::NonAnalytic { z: C64::new(delta, 0.0) });
    }
    let (shift, gamma) = lamb_shift_and_rate(delta, g)?;
    Ok(MarkovPole { z: C64::new(delta + shift, -gamma / 2.0), status: MarkovStatus::Regular })
}
