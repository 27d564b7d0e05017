//! Honeycomb bath geometry: lattice vectors, momentum grid and the
//! dispersion `f(k) = J (1 + e^{i k1} + e^{i k2})`.
//!
//! Momenta are stored in reduced coordinates `(k1, k2)` with respect to the
//! reciprocal basis `b1, b2` (`a_i . b_j = delta_ij`, no factor of 2 pi), so
//! that `k . n = k1 n1 + k2 n2` for a site `n = n1 a1 + n2 a2`.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Threshold below which `|f(k)|/J` counts as an exact Dirac zero.
pub const DIRAC_ZERO_TOL: f64 = 1e-12;

pub type Vec2 = [f64; 2];
pub type Site = [i64; 2];

/// Finite periodic honeycomb bath with `N x N` unit cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathModel {
    hopping: f64,
    n: usize,
}

impl BathModel {
    /// Bath in units of the hopping (`J = 1`).
    pub fn new(n: usize) -> Result<Self> {
        Self::with_hopping(1.0, n)
    }

    pub fn with_hopping(hopping: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("lattice size N = {n} must be >= 2")));
        }
        if !(hopping.is_finite() && hopping > 0.0) {
            return Err(Error::InvalidParameter(format!("hopping J = {hopping} must be positive")));
        }
        Ok(Self { hopping, n })
    }

    /// Hopping `J` in the caller's energy unit. Only used to scale I/O.
    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn lattice_vectors(&self) -> [Vec2; 2] {
        [[1.5, SQRT3 / 2.0], [1.5, -SQRT3 / 2.0]]
    }

    pub fn reciprocal_vectors(&self) -> [Vec2; 2] {
        [[1.0 / 3.0, 1.0 / SQRT3], [1.0 / 3.0, -1.0 / SQRT3]]
    }

    /// Whether the Dirac points `K+-` belong to the momentum grid, which
    /// happens exactly when `N` is a multiple of 3.
    pub fn has_dirac_on_grid(&self) -> bool {
        self.n % 3 == 0
    }

    /// Errors if the grid contains the Dirac points; quantities evaluated at
    /// `z = 0` are undefined there.
    pub fn require_gapless_free(&self) -> Result<()> {
        if self.has_dirac_on_grid() {
            Err(Error::DiracPointOnGrid(self.n))
        } else {
            Ok(())
        }
    }

    /// Integer momentum index range `m in {-floor(N/2), ..., N - floor(N/2) - 1}`.
    pub fn momentum_indices(&self) -> std::ops::Range<i64> {
        let lo = -((self.n / 2) as i64);
        lo..lo + self.n as i64
    }

    pub fn momentum_step(&self) -> f64 {
        2.0 * PI / self.n as f64
    }
}

/// The `N^2` allowed momenta, row-major over `(m1, m2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    points: Vec<Vec2>,
}

impl MomentumGrid {
    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True if some grid point has `|f(k)| < 1e-12 J`.
    pub fn contains_dirac_point(&self) -> bool {
        self.points.iter().any(|&k| dispersion(k).norm() < DIRAC_ZERO_TOL)
    }
}

pub fn momentum_grid(model: &BathModel) -> Result<MomentumGrid> {
    if model.n < 2 {
        return Err(Error::InvalidParameter(format!("lattice size N = {} must be >= 2", model.n)));
    }
    let dk = model.momentum_step();
    let mut points = Vec::with_capacity(model.num_cells());
    for m1 in model.momentum_indices() {
        for m2 in model.momentum_indices() {
            points.push([dk * m1 as f64, dk * m2 as f64]);
        }
    }
    Ok(MomentumGrid { points })
}

/// Dimensionless dispersion `1 + e^{i k1} + e^{i k2}` (energy in units of `J`).
#[inline]
pub fn dispersion(k: Vec2) -> C64 {
    let (s1, c1) = k[0].sin_cos();
    let (s2, c2) = k[1].sin_cos();
    C64::new(1.0 + c1 + c2, s1 + s2)
}

/// `f(k) = J (1 + e^{i k1} + e^{i k2})`; `|f|` is the upper-band energy and
/// `arg f` the phase `phi(k)`.
pub fn f_k(model: &BathModel, k: Vec2) -> C64 {
    dispersion(k) * model.hopping
}

/// `omega(k)^2 / J^2 = 3 + 2 cos k1 + 2 cos k2 + 2 cos(k1 - k2)`.
#[inline]
pub fn omega_sq(k: Vec2) -> f64 {
    3.0 + 2.0 * (k[0].cos() + k[1].cos() + (k[0] - k[1]).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valley {
    Plus,
    Minus,
}

impl Valley {
    fn sign(self) -> f64 {
        match self {
            Valley::Plus => 1.0,
            Valley::Minus => -1.0,
        }
    }
}

/// Dirac points and the linearization of `f` around them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracData {
    pub k_plus: Vec2,
    pub k_minus: Vec2,
    pub h_plus: [C64; 2],
    pub h_minus: [C64; 2],
    /// Isotropic-coordinate vectors `(-1, +-i)`.
    pub hp_plus: [C64; 2],
    pub hp_minus: [C64; 2],
}

impl DiracData {
    pub fn new() -> Self {
        let t = 2.0 * PI / 3.0;
        Self {
            k_plus: [t, -t],
            k_minus: [-t, t],
            h_plus: h_vector(Valley::Plus),
            h_minus: h_vector(Valley::Minus),
            hp_plus: [C64::new(-1.0, 0.0), C64::new(0.0, 1.0)],
            hp_minus: [C64::new(-1.0, 0.0), C64::new(0.0, -1.0)],
        }
    }

    pub fn point(&self, valley: Valley) -> Vec2 {
        match valley {
            Valley::Plus => self.k_plus,
            Valley::Minus => self.k_minus,
        }
    }
}

impl Default for DiracData {
    fn default() -> Self {
        Self::new()
    }
}

fn h_vector(valley: Valley) -> [C64; 2] {
    let t = valley.sign() * 2.0 * PI / 3.0;
    let i = C64::i();
    [i * C64::from_polar(1.0, t), i * C64::from_polar(1.0, -t)]
}

/// Linearized dispersion `J h+- . dq` around the Dirac point of `valley`.
pub fn linearized_f(model: &BathModel, dq: Vec2, valley: Valley) -> C64 {
    let h = h_vector(valley);
    (h[0] * dq[0] + h[1] * dq[1]) * model.hopping
}

/// `m12 = (3/2 (n1 + n2), sqrt(3)/2 (n1 - n2))`, the Cartesian separation of
/// two cells.
pub fn rescaled_separation(n12: Site) -> Vec2 {
    let (n1, n2) = (n12[0] as f64, n12[1] as f64);
    [1.5 * (n1 + n2), SQRT3 / 2.0 * (n1 - n2)]
}
