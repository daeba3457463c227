//! Central residual tolerances.
//!
//! Thresholds are grouped by how a quantity is produced, not by where it is
//! checked; every suite pulls its defaults from here so that a tolerance is
//! never an ad-hoc literal inside a check.
//!
//! | Group      | Source of error                         | Default |
//! |------------|------------------------------------------|---------|
//! | algebraic  | exact arithmetic + forward-mode jets     | 1e-8    |
//! | ode        | adaptive RK5(4) at (1e-11, 1e-9)         | 1e-7    |
//! | fd         | 4th-order finite differences in x        | 1e-4    |
//!
//! Construction-time invariants (structure constants, quadrature exactness,
//! unitarity) sit near machine precision and have their own constants.

/// Jacobi identity and antisymmetry of shipped structure constants.
pub const STRUCTURE_CONSTANTS: f64 = 1e-12;

/// Inner product vs. minus the Cartan–Killing form on the semisimple part.
pub const KILLING_MATCH: f64 = 1e-10;

/// Determinant-one and unitarity checks on group/harmonic elements.
pub const UNIT_DET: f64 = 1e-12;

/// Ad-invariance of the Hermitian norm under sampled compact rotations.
pub const AD_INVARIANCE: f64 = 1e-10;

/// Matrix exponential relative truncation target.
pub const EXP_RELATIVE: f64 = 1e-13;

/// Condition-number guard for group inverses and adjoint re-expression.
pub const CONDITION_GUARD: f64 = 1e12;

/// Haar quadrature on low-degree harmonic monomials.
pub const HAAR_EXACTNESS: f64 = 1e-10;

/// Identities that only involve jet evaluation of analytic data.
pub const ALGEBRAIC: f64 = 1e-8;

/// Operator identities on sampled charged fields (two nested derivatives).
pub const OPERATOR_IDENTITY: f64 = 1e-9;

/// Residuals routed through the bridge integrator.
pub const ODE_DERIVED: f64 = 1e-7;

/// Residuals built from finite differences of extracted central data.
pub const FD_DERIVED: f64 = 1e-4;

/// Default absolute / relative tolerances of the bridge integrator.
pub const ODE_ABS: f64 = 1e-11;
pub const ODE_REL: f64 = 1e-9;

/// Both sides of a ratio below this count as "0/0" and are reported as
/// not applicable instead of as a number.
pub const RATIO_SENTINEL: f64 = 1e-14;

/// Named tolerance profile resolved by the verification suites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TolProfile {
    pub algebraic: f64,
    pub operator: f64,
    pub ode: f64,
    pub fd: f64,
}

impl TolProfile {
    pub fn default_profile() -> Self {
        TolProfile { algebraic: ALGEBRAIC, operator: OPERATOR_IDENTITY, ode: ODE_DERIVED, fd: FD_DERIVED }
    }

    /// Uniformly loosened profile for coarse grids.
    pub fn loose() -> Self {
        TolProfile { algebraic: 1e-6, operator: 1e-7, ode: 1e-5, fd: 1e-2 }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default_profile()),
            "loose" => Some(Self::loose()),
            _ => None,
        }
    }
}
