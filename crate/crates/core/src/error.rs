use thiserror::Error;

use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lattice size N = {0} is a multiple of 3: the Dirac points lie on the momentum grid")]
    DiracPointOnGrid(usize),

    #[error("energy z = {z} is resonant with a bath eigenvalue")]
    Resonance { z: C64 },

    #[error("energy z = {z} is a non-analytic point of the self-energy")]
    NonAnalytic { z: C64 },

    #[error("elliptic parameter m = {m} lies on the branch cut [1, inf)")]
    OnBranchCut { m: C64 },

    #[error("no continuation coefficients for sheet {sheet} with region signs {signs}")]
    NoSheetEntry { sheet: String, signs: String },

    #[error("Hankel function evaluated at its pole x = 0")]
    HankelPole,

    #[error("defective pole at z = {z}: |1 - dSigma/dz| = {denom:e}")]
    DefectivePole { z: C64, denom: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("root search from seed {seed} did not converge")]
    NoConvergence { seed: C64 },

    #[error("norm drift {drift:e} exceeds the allowed bound {bound:e}")]
    NormDrift { drift: f64, bound: f64 },
}
