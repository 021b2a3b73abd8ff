//! Time-harmonic scattering of out-of-plane lattice waves on the infinite
//! square lattice by a pair of staggered semi-infinite defects: either two
//! cracks (rows of broken vertical bonds) or two rigid constraints (rows of
//! pinned sites), offset horizontally by an integer stagger `M` and separated
//! vertically by `N` rows.
//!
//! The staggered geometry produces a 2x2 matrix Wiener-Hopf kernel with no
//! known constructive factorization. This crate implements the reduction of
//! that problem to a finite complex linear system (|M| unknowns for the crack
//! pair, |M| + 2 for the constraint pair) whose coefficients involve only
//! *scalar* Wiener-Hopf factorizations carried out numerically by Cauchy
//! projectors on a circular contour inside the annulus of joint analyticity.
//!
//! Pipeline: [`scenario`] fixes the physical parameters and solves the
//! dispersion relation; [`contour`] provides Laurent-series algebra on the
//! contour; [`kernel`] evaluates the lattice symbols and their branch
//! structure; [`factor`] produces multiplicative factor pairs; [`crack`] and
//! [`constraint`] assemble and solve the reduced systems; [`field`]
//! reconstructs the scattered field everywhere by the inverse transform; and
//! [`oracle`] solves the same problem directly on a truncated grid for
//! independent validation.

pub mod constraint;
pub mod contour;
pub mod crack;
pub mod factor;
pub mod field;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod scenario;
pub mod setup;

mod reduce;

use num_complex::Complex64;

/// Complex scalar used throughout.
pub type C64 = Complex64;

/// Errors shared by the whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("scenario rejected: {0}")]
    InvalidScenario(String),
    #[error("dispersion solve did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("dispersion derivative vanishes at the root (degenerate incidence angle)")]
    DegenerateAngle,
    #[error("annulus of analyticity is empty: {0}")]
    EmptyAnnulus(String),
    #[error("non-finite value while sampling a contour function at node {0}")]
    NonFiniteSample(usize),
    #[error("symbol evaluation at z = 0")]
    ZeroArgument,
    #[error("branch conditions for the square roots violated at z = {0}")]
    OnBranchCut(C64),
    #[error("quadratic root lies on the unit circle; no interior zero to select")]
    UnitModulusRoot,
    #[error("scalar kernel evaluated at a zero of {0}")]
    DivisionByZero(&'static str),
    #[error("winding number along the contour is {0}; log-based factorization impossible")]
    WindingNonZero(i64),
    #[error("function to factorize vanishes (or nearly vanishes) on the contour")]
    VanishingSample,
    #[error("closed-form root selection ambiguous: |g| = 1 within tolerance")]
    RootSelectionAmbiguous,
    #[error("reduced system is numerically singular (condition estimate {0:.3e})")]
    SingularSystem(f64),
    #[error("transform pole |z_P| = {0} coincides with the contour radius")]
    PoleOnContour(f64),
    #[error("|z_q| = {0} too close to the contour radius {1}")]
    ZqOnContour(f64, f64),
    #[error("z_q approaches z_P (resonant incidence); right-hand side unbounded")]
    ResonantIncidence,
    #[error("iterative grid solve stalled: residual {0:.3e} after {1} iterations")]
    IterationDivergence(f64, usize),
    #[error("grid window too small: {0}")]
    WindowTooSmall(String),
    #[error("series has the wrong support for this operation: {0}")]
    BadSupport(String),
    #[error("Wiener-Hopf residual {0:.3e} exceeds tolerance {1:.3e}")]
    ResidualTooLarge(f64, f64),
    #[error("invalid numerics parameter: {0}")]
    InvalidNumerics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use contour::{ContourGrid, LaurentSeries};
pub use factor::{build_factor_suite, cauchy_factorize, FactorPair, FactorSuite};
pub use field::{synthesize_field, FieldKind, LatticeField};
pub use kernel::KernelBundle;
pub use scenario::{DefectKind, ScatteringScenario, WaveVector};
pub use setup::{Numerics, Problem};
