//! Numerical G2 geometry on R^7.
//!
//! The crate is organised bottom up:
//!
//! * [`forms`]: exterior algebra on R^7, the calibrations `phi` and `*phi`, the cross product.
//! * [`g2`]: the Lie algebra g2 inside so(7), G2 frames and discretised frame fields.
//! * [`s6`]: the SU(3) coframing of S^6 and holomorphic curves in it.
//! * [`cr`]: the CR structure on oriented 2-planes, the ruled construction and the
//!   coassociativity verifier.
//! * [`invariants`]: the first order invariants of CR-holomorphic curves.
//! * [`families`]: explicit examples (Harvey-Lawson cones, surface bundles, fiber curves).
//!
//! Every check returns a [`Report`] carrying residual statistics and the tolerance it was
//! judged against.

pub mod cr;
pub mod error;
pub mod families;
pub mod forms;
pub mod g2;
pub mod invariants;
pub mod linalg;
pub mod report;
pub mod s6;

pub use error::{Error, Result};
pub use report::Report;

pub use nalgebra::Complex;

/// A vector in R^7.
pub type Vector7 = nalgebra::SVector<f64, 7>;
/// A real 7x7 matrix. Frames store their vectors as columns.
pub type Matrix7 = nalgebra::SMatrix<f64, 7, 7>;
/// Complex scalars.
pub type C64 = Complex<f64>;
/// A complex 7-vector, used for the complex frame vectors on S^6.
pub type CVector7 = nalgebra::SVector<C64, 7>;
/// A complex 3-vector.
pub type CVector3 = nalgebra::SVector<C64, 3>;
/// A complex 3x3 matrix.
pub type CMatrix3 = nalgebra::SMatrix<C64, 3, 3>;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Standard basis vector `e_i` of R^7, one-based.
pub fn basis(i: usize) -> Vector7 {
    assert!((1..=7).contains(&i), "basis index {i} out of range");
    let mut v = Vector7::zeros();
    v[i - 1] = 1.0;
    v
}
