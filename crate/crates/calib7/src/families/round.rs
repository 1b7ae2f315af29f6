//! The round S^2 in the associative 3-plane `V+ = span(e5, e6, e7)`.
//!
//! `E(alpha, beta) = exp(alpha A) exp(beta B)` with the block diagonal g2 elements
//! `A = (E13 + E42)/2 + E75` and `B = -(E14 + E23)/2 - E56` (`Eij = e_i e_j^T - e_j e_i^T`).
//! Their `V+` parts rotate about `e6` and `e7`, so `u = E e5` sweeps the unit sphere of `V+`
//! with `alpha` the longitude and `beta` the latitude; the poles are `beta = ±pi/2`.
//! Along this frame `theta2 = theta3 = kappa21 = kappa31 = kappa23 = 0`.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use crate::g2::{CurveLift, FdOrder, G2AlgebraElement, G2Frame};
use crate::{Error, Matrix7, Result};

fn eij(i: usize, j: usize) -> Matrix7 {
    let mut m = Matrix7::zeros();
    m[(i - 1, j - 1)] = 1.0;
    m[(j - 1, i - 1)] = -1.0;
    m
}

/// The generators `(A, B)`.
pub fn round_generators() -> &'static (G2AlgebraElement, G2AlgebraElement) {
    static G: OnceLock<(G2AlgebraElement, G2AlgebraElement)> = OnceLock::new();
    G.get_or_init(|| {
        let a = (eij(1, 3) + eij(4, 2)) * 0.5 + eij(7, 5);
        let b = -(eij(1, 4) + eij(2, 3)) * 0.5 - eij(5, 6);
        (
            G2AlgebraElement::from_matrix(a, 1e-14).expect("A lies in g2"),
            G2AlgebraElement::from_matrix(b, 1e-14).expect("B lies in g2"),
        )
    })
}

/// Latitudes closer than this to `±pi/2` are rejected.
pub const POLE_TOL: f64 = 1e-3;

/// Analytic frame field of the round sphere in `(alpha, beta)` coordinates.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundS2;

impl RoundS2 {
    pub fn frame(&self, alpha: f64, beta: f64) -> Matrix7 {
        let (a, b) = round_generators();
        (a.matrix7() * alpha).exp() * (b.matrix7() * beta).exp()
    }

    /// `(dE/dalpha, dE/dbeta) = (A E, E B)`.
    pub fn partials(&self, alpha: f64, beta: f64) -> (Matrix7, [Matrix7; 2]) {
        let (a, b) = round_generators();
        let e = self.frame(alpha, beta);
        (e, [a.matrix7() * e, e * b.matrix7()])
    }
}

/// Gudermannian `atan(sinh y)`: latitude of the Mercator coordinate `y`.
pub fn gudermannian(y: f64) -> f64 {
    y.sinh().atan()
}

fn check_poles(beta_min: f64, beta_max: f64) -> Result<()> {
    if beta_max > FRAC_PI_2 - POLE_TOL || beta_min < -FRAC_PI_2 + POLE_TOL {
        return Err(Error::Precondition(format!(
            "latitude range [{beta_min:.6}, {beta_max:.6}] reaches a coordinate pole"
        )));
    }
    Ok(())
}

/// Lift on a grid over `(alpha, beta)`.
pub fn round_s2_frame_field(shape: [usize; 2], origin: [f64; 2], step: f64, fd_order: FdOrder) -> Result<CurveLift> {
    let beta_max = origin[1] + step * (shape[1].max(1) - 1) as f64;
    check_poles(origin[1], beta_max)?;
    CurveLift::surface_from_fn(shape, origin, step, fd_order, |a, b| G2Frame::new(RoundS2.frame(a, b)))
}

/// Lift over conformal coordinates `(x, y) -> (alpha, beta) = (x, gd(y))`, in which the
/// induced metric is `sech(y)^2 (dx^2 + dy^2)`.
pub fn round_s2_conformal_lift(shape: [usize; 2], origin: [f64; 2], step: f64, fd_order: FdOrder) -> Result<CurveLift> {
    let y_max = origin[1] + step * (shape[1].max(1) - 1) as f64;
    check_poles(gudermannian(origin[1]), gudermannian(y_max))?;
    CurveLift::surface_from_fn(shape, origin, step, fd_order, |x, y| G2Frame::new(RoundS2.frame(x, gudermannian(y))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis as e;
    use crate::s6::coframe_from_connection;

    #[test]
    fn generators_are_block_diagonal() {
        let (a, b) = round_generators();
        assert!(a.is_block_diagonal() && b.is_block_diagonal());
    }

    #[test]
    fn standard_frame_at_origin() {
        assert!((RoundS2.frame(0.0, 0.0) - Matrix7::identity()).norm() < 1e-15);
    }

    #[test]
    fn u_sweeps_unit_sphere_of_v_plus() {
        for (a, b) in [(0.3, 0.4), (2.0, -1.2), (-3.0, 1.5)] {
            let u = RoundS2.frame(a, b) * e(5);
            assert!((u.norm() - 1.0).abs() < 1e-14);
            assert!(u.rows(0, 4).norm() < 1e-14);
        }
        // latitude reaches the poles at beta = ±pi/2
        let pole = RoundS2.frame(0.7, FRAC_PI_2) * e(5);
        let other = RoundS2.frame(-1.9, FRAC_PI_2) * e(5);
        assert!((pole - other).norm() < 1e-14);
    }

    #[test]
    fn connection_has_the_round_pattern() {
        let (e, d) = RoundS2.partials(0.4, 0.3);
        for p in d {
            let (th, ka) = coframe_from_connection(&(e.transpose() * p));
            assert!(th[1].norm() < 1e-14 && th[2].norm() < 1e-14);
            for (i, j) in [(1, 0), (2, 0), (1, 2)] {
                assert!(ka[(i, j)].norm() < 1e-14, "kappa{}{}", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn pole_rejected() {
        assert!(round_s2_frame_field([5, 5], [0.0, 1.0], 0.2, FdOrder::Second).is_err());
        let l = round_s2_frame_field([5, 5], [0.0, -0.4], 0.01, FdOrder::Fourth).unwrap();
        assert!(l.maurer_cartan_report(1e-5).passed);
    }
}
