//! The Lie algebra g2 inside so(7), G2 frames and frame fields on parameter grids.
//!
//! g2 is the null space of skewness plus seven linear relations between matrix entries
//! (`m_ij` stands for the connection form `omega_ij`):
//!
//! ```text
//! m67 = m12 + m34    m75 = m13 + m42    m56 = m14 + m23
//! m51 = -m64 + m73   m52 = -m63 - m74   m53 = m62 - m71   m54 = m61 + m72
//! ```
//!
//! The (theta, beta) presentation identifies T = span(e1..e4) with the quaternions via
//! `x1 + x2 i + x3 j + x4 k`; with this choice the relation `i b5 + j b6 + k b7 = 0`
//! (left multiplication) is exactly the last four relations above.

mod algebra;
mod frame;
mod lift;

pub use algebra::{
    adjoint_matrix, bracket, embed, full_solution_dimension, g2_basis, g2_relation_residuals, killing_form, phi_preservation_residual, sigma_plus,
    G2AlgebraElement, G2_RELATIONS,
};
pub use frame::{exp_frame, G2Frame, RepairReport, FRAME_TOL};
pub use lift::{CurveLift, FdOrder, FdValue, GridSpec, LiftJson, Node};
