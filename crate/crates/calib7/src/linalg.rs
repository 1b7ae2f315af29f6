//! Small dense linear algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::{C64, CVector3, CVector7, CMatrix3, Vector7};

/// Modified Gram-Schmidt. Returns `None` if some vector is (numerically) dependent
/// on the previous ones, using `tol` on the remaining norm.
pub fn gram_schmidt<const N: usize>(vs: &[SVector<f64, N>], tol: f64) -> Option<Vec<SVector<f64, N>>> {
    let mut out: Vec<SVector<f64, N>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = *v;
        for q in &out {
            w -= q * q.dot(&w);
        }
        // second pass keeps orthogonality at round-off level
        for q in &out {
            w -= q * q.dot(&w);
        }
        let n = w.norm();
        if !(n > tol) {
            return None;
        }
        out.push(w / n);
    }
    Some(out)
}

/// Orthonormal basis of the null space of `c` (rows are constraints), from the
/// eigenvectors of c^T c whose eigenvalue is below `tol`.
pub fn null_space(c: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let n = c.ncols();
    let ctc = c.transpose() * c;
    let eig = ctc.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() < tol).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut vs: Vec<DVector<f64>> = idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    // canonical sign: first entry of largest magnitude positive
    for v in vs.iter_mut() {
        let k = v.iamax();
        if v[k] < 0.0 {
            *v = -v.clone();
        }
    }
    vs
}

/// Largest absolute entry.
pub fn max_abs<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

pub fn skew_residual<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    max_abs(&(m + m.transpose()))
}

/// Complex bilinear dot product (no conjugation).
pub fn cdot7(a: &CVector7, b: &CVector7) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Pairing of a complex 7-vector with a real one.
pub fn cdot7r(a: &CVector7, b: &Vector7) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * *y).sum()
}

pub fn to_complex7(v: &Vector7) -> CVector7 {
    v.map(|x| C64::new(x, 0.0))
}

pub fn re7(v: &CVector7) -> Vector7 {
    v.map(|x| x.re)
}

pub fn im7(v: &CVector7) -> Vector7 {
    v.map(|x| x.im)
}

/// Complex cross product on C^3 (bilinear, no conjugation).
pub fn ccross3(a: &CVector3, b: &CVector3) -> CVector3 {
    CVector3::new(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
}

/// The bracket map [a] of the SU(3) structure equations:
/// [a] = [[0, a3, -a2], [-a3, 0, a1], [a2, -a1, 0]].
pub fn bracket3(a: &CVector3) -> CMatrix3 {
    let z = C64::new(0.0, 0.0);
    CMatrix3::new(z, a[2], -a[1], -a[2], z, a[0], a[1], -a[0], z)
}

/// max |U*U - I| for a complex square matrix.
pub fn unitary_residual<const N: usize>(u: &SMatrix<C64, N, N>) -> f64 {
    let g = u.adjoint() * u - SMatrix::<C64, N, N>::identity();
    g.iter().fold(0.0f64, |a, x| a.max(x.norm()))
}

/// Principal angles (radians, ascending) between the column spans of two matrices
/// with orthonormal columns.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let m = a.transpose() * b;
    let sv = m.svd(false, false).singular_values;
    let mut angles: Vec<f64> = sv.iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    angles
}

/// Orthonormalize columns by thin QR (Householder). The result spans the same space.
pub fn orthonormal_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_orthonormal() {
        let vs = [Vector7::from_element(1.0), crate::basis(3), crate::basis(7)];
        let q = gram_schmidt(&vs, 1e-12).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = q[i].dot(&q[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(gram_schmidt(&[crate::basis(1), crate::basis(1) * 2.0], 1e-12).is_none());
    }

    #[test]
    fn null_space_dimension() {
        let c = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0]);
        let ns = null_space(&c, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!((&c * v).norm() < 1e-12);
        }
    }

    #[test]
    fn bracket_map_is_cross_product() {
        let a = CVector3::new(C64::new(1.0, 2.0), C64::new(-0.5, 0.1), C64::new(0.3, -1.0));
        let b = CVector3::new(C64::new(0.2, 0.0), C64::new(1.0, 1.0), C64::new(-2.0, 0.5));
        // [a] b = b x a
        let lhs = bracket3(&a) * b;
        let rhs = ccross3(&b, &a);
        assert!((lhs - rhs).norm() < 1e-14);
    }
}
