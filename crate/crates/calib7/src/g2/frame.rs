use nalgebra::{DMatrix, DVector};

use super::algebra::G2AlgebraElement;
use crate::forms::{cross, phi_eval};
use crate::linalg::max_abs;
use crate::{basis, Error, Matrix7, Result, Vector7};

/// Tolerance of the frame invariants.
pub const FRAME_TOL: f64 = 1e-10;

/// An orthonormal frame in the G2-orbit of the standard frame. Column `i - 1` is `e_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Frame {
    m: Matrix7,
}

/// What [`G2Frame::repair`] did.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RepairReport {
    pub orthonormality_before: f64,
    pub adaptation_before: f64,
    pub orthonormality_after: f64,
    pub adaptation_after: f64,
    pub iterations: usize,
}

fn triples() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..7).flat_map(|i| (i + 1..7).flat_map(move |j| (j + 1..7).map(move |k| (i, j, k))))
}

/// max |E^T E - I|.
pub fn orthonormality_residual(m: &Matrix7) -> f64 {
    max_abs(&(m.transpose() * m - Matrix7::identity()))
}

/// max over i<j<k of |phi(E e_i, E e_j, E e_k) - phi(e_i, e_j, e_k)|.
pub fn adaptation_residual(m: &Matrix7) -> f64 {
    let cols: Vec<Vector7> = (0..7).map(|i| m.column(i).into_owned()).collect();
    triples()
        .map(|(i, j, k)| {
            (phi_eval(&cols[i], &cols[j], &cols[k]) - phi_eval(&basis(i + 1), &basis(j + 1), &basis(k + 1))).abs()
        })
        .fold(0.0, f64::max)
}

fn adaptation_vector(m: &Matrix7) -> DVector<f64> {
    let cols: Vec<Vector7> = (0..7).map(|i| m.column(i).into_owned()).collect();
    DVector::from_iterator(
        35,
        triples().map(|(i, j, k)| {
            phi_eval(&cols[i], &cols[j], &cols[k]) - phi_eval(&basis(i + 1), &basis(j + 1), &basis(k + 1))
        }),
    )
}

impl G2Frame {
    pub fn identity() -> Self {
        G2Frame { m: Matrix7::identity() }
    }

    pub fn new(m: Matrix7) -> Result<Self> {
        G2Frame::with_tolerance(m, FRAME_TOL)
    }

    pub fn with_tolerance(m: Matrix7, tol: f64) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::FrameInvariant { invariant: "finiteness", residual: f64::INFINITY });
        }
        let o = orthonormality_residual(&m);
        if o > tol {
            return Err(Error::FrameInvariant { invariant: "orthonormality", residual: o });
        }
        let a = adaptation_residual(&m);
        if a > tol {
            return Err(Error::FrameInvariant { invariant: "phi-adaptation", residual: a });
        }
        Ok(G2Frame { m })
    }

    /// Wrap a matrix without checking; for matrices known to be G2 (products of G2 frames).
    pub(crate) fn from_matrix_unchecked(m: Matrix7) -> Self {
        G2Frame { m }
    }

    /// The frame determined by `e1, e2, e3` with `e3` orthogonal to `e1, e2` and `e2 e1`:
    /// `e5 = e2 e1, e6 = e3 e1, e4 = e6 e2, e7 = e4 e1` (products are cross products).
    pub fn from_triple(e1: &Vector7, e2: &Vector7, e3: &Vector7) -> Result<Self> {
        let e5 = cross(e2, e1);
        let gram = [
            (e1.norm() - 1.0).abs(),
            (e2.norm() - 1.0).abs(),
            (e3.norm() - 1.0).abs(),
            e1.dot(e2).abs(),
            e1.dot(e3).abs(),
            e2.dot(e3).abs(),
            e5.dot(e3).abs(),
        ];
        let r = gram.iter().cloned().fold(0.0, f64::max);
        if r > FRAME_TOL {
            return Err(Error::FrameInvariant { invariant: "associated triple", residual: r });
        }
        let e6 = cross(e3, e1);
        let e4 = cross(&e6, e2);
        let e7 = cross(&e4, e1);
        let m = Matrix7::from_columns(&[*e1, *e2, *e3, e4, e5, e6, e7]);
        G2Frame::new(m)
    }

    /// Some frame with `e5 = u`, chosen deterministically from the coordinate axes.
    pub fn with_u(u: &Vector7) -> Result<Self> {
        if (u.norm() - 1.0).abs() > FRAME_TOL {
            return Err(Error::FrameInvariant { invariant: "unit u", residual: (u.norm() - 1.0).abs() });
        }
        let pick = |against: &[Vector7]| -> Vector7 {
            let mut best = Vector7::zeros();
            for i in 1..=7 {
                let mut v = basis(i);
                for w in against {
                    v -= w * w.dot(&v);
                }
                for w in against {
                    v -= w * w.dot(&v);
                }
                if v.norm() > best.norm() + 1e-9 {
                    best = v;
                }
            }
            best.normalize()
        };
        let e1 = pick(&[*u]);
        let e2 = cross(&e1, u);
        let e3 = pick(&[*u, e1, e2]);
        let f = G2Frame::from_triple(&e1, &e2, &e3)?;
        debug_assert!((f.e(5) - u).norm() < 1e-12);
        Ok(f)
    }

    pub fn matrix(&self) -> &Matrix7 {
        &self.m
    }

    /// The vector `e_i`, one-based.
    pub fn e(&self, i: usize) -> Vector7 {
        self.m.column(i - 1).into_owned()
    }

    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.m)
    }

    pub fn adaptation_residual(&self) -> f64 {
        adaptation_residual(&self.m)
    }

    /// `g E` for `g` in G2 (left action on R^7).
    pub fn left_mul(&self, g: &G2Frame) -> G2Frame {
        G2Frame { m: g.m * self.m }
    }

    /// `E g`: change of adapted frame at the same point.
    pub fn right_mul(&self, g: &G2Frame) -> G2Frame {
        G2Frame { m: self.m * g.m }
    }

    pub fn transpose(&self) -> G2Frame {
        G2Frame { m: self.m.transpose() }
    }

    /// Re-orthonormalize `m` (polar factor) and then minimize the adaptation residual
    /// over SO(7) by Gauss-Newton on `m exp(X)`, `X` in so(7).
    pub fn repair(m: &Matrix7) -> Result<(G2Frame, RepairReport)> {
        let orth_before = orthonormality_residual(m);
        let adapt_before = adaptation_residual(m);
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut q = u * vt;
        if q.determinant() < 0.0 {
            return Err(Error::FrameInvariant { invariant: "orientation", residual: q.determinant() });
        }
        let gens: Vec<Matrix7> = (0..7)
            .flat_map(|i| (i + 1..7).map(move |j| (i, j)))
            .map(|(i, j)| {
                let mut g = Matrix7::zeros();
                g[(i, j)] = 1.0;
                g[(j, i)] = -1.0;
                g
            })
            .collect();
        let mut iterations = 0;
        for _ in 0..30 {
            let r = adaptation_vector(&q);
            if r.amax() < 1e-15 {
                break;
            }
            iterations += 1;
            // residual is linear to first order: d/dX phi(QX e_i, Q e_j, Q e_k) + ...
            let cols: Vec<Vector7> = (0..7).map(|i| q.column(i).into_owned()).collect();
            let jac = DMatrix::from_fn(35, gens.len(), |row, g| {
                let (i, j, k) = triples().nth(row).unwrap();
                let d = q * gens[g];
                let dcol = |c: usize| -> Vector7 { d.column(c).into_owned() };
                phi_eval(&dcol(i), &cols[j], &cols[k])
                    + phi_eval(&cols[i], &dcol(j), &cols[k])
                    + phi_eval(&cols[i], &cols[j], &dcol(k))
            });
            let step = jac
                .svd(true, true)
                .solve(&(-r), 1e-10)
                .map_err(|e| Error::Internal(format!("repair solve: {e}")))?;
            let mut x = Matrix7::zeros();
            for (g, c) in gens.iter().zip(step.iter()) {
                x += g * *c;
            }
            q *= x.exp();
        }
        let report = RepairReport {
            orthonormality_before: orth_before,
            adaptation_before: adapt_before,
            orthonormality_after: orthonormality_residual(&q),
            adaptation_after: adaptation_residual(&q),
            iterations,
        };
        Ok((G2Frame::new(q)?, report))
    }
}

/// `base exp(t a)`, validated as a G2 frame.
pub fn exp_frame(a: &G2AlgebraElement, t: f64, base: &G2Frame) -> Result<G2Frame> {
    G2Frame::new(base.m * (a.matrix7() * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2::G2AlgebraElement;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_adapted() {
        let e = G2Frame::identity();
        assert_eq!(e.adaptation_residual(), 0.0);
        let t = G2Frame::from_triple(&basis(1), &basis(2), &basis(3)).unwrap();
        assert!(max_abs(&(t.matrix() - Matrix7::identity())) < 1e-15);
    }

    #[test]
    fn exp_frame_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = G2AlgebraElement::random(&mut rng, 1.0);
        let base = G2Frame::identity();
        assert_eq!(exp_frame(&a, 0.0, &base).unwrap(), base);
        let f = exp_frame(&a, 1.7, &base).unwrap();
        let back = exp_frame(&a, -1.7, &f).unwrap();
        assert!(max_abs(&(back.matrix() - base.matrix())) < 1e-12);
        assert!(f.adaptation_residual() < 1e-10);
    }

    #[test]
    fn non_g2_rotation_rejected() {
        let mut g = Matrix7::zeros();
        g[(0, 4)] = 1.0;
        g[(4, 0)] = -1.0;
        let m = (g * 0.5).exp();
        assert!(matches!(G2Frame::new(m), Err(Error::FrameInvariant { invariant: "phi-adaptation", .. })));
        assert!(matches!(
            G2Frame::new(Matrix7::identity() * 1.1),
            Err(Error::FrameInvariant { invariant: "orthonormality", .. })
        ));
    }

    #[test]
    fn with_u_sets_e5() {
        let u = Vector7::from_column_slice(&[0.3, -0.2, 0.5, 0.1, 0.6, -0.4, 0.2]).normalize();
        let f = G2Frame::with_u(&u).unwrap();
        assert!((f.e(5) - u).norm() < 1e-14);
        assert!(f.adaptation_residual() < 1e-14);
    }

    #[test]
    fn repair_drifted_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = G2AlgebraElement::random(&mut rng, 1.0);
        let f = exp_frame(&a, 0.8, &G2Frame::identity()).unwrap();
        let mut noise = Matrix7::zeros();
        for (k, x) in noise.iter_mut().enumerate() {
            *x = 1e-6 * ((k * 37 % 11) as f64 - 5.0);
        }
        let (fixed, rep) = G2Frame::repair(&(f.matrix() + noise)).unwrap();
        assert!(rep.adaptation_before > 1e-7);
        assert!(rep.adaptation_after < 1e-14);
        assert!(rep.orthonormality_after < 1e-14);
        assert!(max_abs(&(fixed.matrix() - f.matrix())) < 1e-4);
    }
}
