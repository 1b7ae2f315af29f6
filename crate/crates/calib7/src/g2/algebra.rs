use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix4, SMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::forms::{interior, phi, phi_eval};
use crate::linalg::{max_abs, null_space, skew_residual};
use crate::{basis, Error, Matrix7, Result};

/// Human readable names of the seven relations, in the order of [`g2_relation_residuals`].
pub const G2_RELATIONS: [&str; 7] = [
    "m67 = m12 + m34",
    "m75 = m13 + m42",
    "m56 = m14 + m23",
    "m51 = -m64 + m73",
    "m52 = -m63 - m74",
    "m53 = m62 - m71",
    "m54 = m61 + m72",
];

const EMBED_TOL: f64 = 1e-12;

fn m(a: &Matrix7, i: usize, j: usize) -> f64 {
    a[(i - 1, j - 1)]
}

/// Residuals of the seven g2 relations; all zero exactly on g2 (given skewness).
pub fn g2_relation_residuals(a: &Matrix7) -> [f64; 7] {
    [
        m(a, 6, 7) - m(a, 1, 2) - m(a, 3, 4),
        m(a, 7, 5) - m(a, 1, 3) - m(a, 4, 2),
        m(a, 5, 6) - m(a, 1, 4) - m(a, 2, 3),
        m(a, 5, 1) + m(a, 6, 4) - m(a, 7, 3),
        m(a, 5, 2) + m(a, 6, 3) + m(a, 7, 4),
        m(a, 5, 3) - m(a, 6, 2) + m(a, 7, 1),
        m(a, 5, 4) - m(a, 6, 1) - m(a, 7, 2),
    ]
}

/// An element of g2 together with its (theta, beta) presentation.
#[derive(Debug, Clone, PartialEq)]
pub struct G2AlgebraElement {
    theta: Matrix4<f64>,
    beta: SMatrix<f64, 3, 4>,
    matrix7: Matrix7,
}

/// The 4x4 skew matrix of `e_a ⌟ phi` restricted to T, for a = 5, 6, 7.
fn self_dual_basis() -> &'static [Matrix4<f64>; 3] {
    static OMEGA: OnceLock<[Matrix4<f64>; 3]> = OnceLock::new();
    OMEGA.get_or_init(|| {
        let make = |a: usize| {
            let w = interior(&basis(a), &phi()).expect("grade 3");
            Matrix4::from_fn(|i, j| w.coeff(&[i + 1, j + 1]))
        };
        [make(5), make(6), make(7)]
    })
}

fn raw_sigma(theta: &Matrix4<f64>) -> nalgebra::Matrix3<f64> {
    let om = self_dual_basis();
    nalgebra::Matrix3::from_fn(|a, b| {
        let c = theta * om[b] - om[b] * theta;
        om[a].dot(&c) / om[a].dot(&om[a])
    })
}

/// Sign aligning the conjugation action with the g2 relations, decided once on a
/// rotation generator of the (x1, x2)-plane.
fn sigma_sign() -> f64 {
    static SIGN: OnceLock<f64> = OnceLock::new();
    *SIGN.get_or_init(|| {
        let mut t = Matrix4::zeros();
        t[(0, 1)] = 1.0;
        t[(1, 0)] = -1.0;
        let s = raw_sigma(&t);
        // relation m67 = m12 + m34 with m12 = 1, m34 = 0
        if (s[(1, 2)] - 1.0).abs() < 1e-12 {
            1.0
        } else {
            -1.0
        }
    })
}

/// The induced action of theta in so(T) on V+ = span(e5, e6, e7), computed by
/// conjugating theta onto the self-dual forms `e_a ⌟ phi |_T`.
pub fn sigma_plus(theta: &Matrix4<f64>) -> nalgebra::Matrix3<f64> {
    raw_sigma(theta) * sigma_sign()
}

/// Quaternionic relation `i b5 + j b6 + k b7` (left multiplication) as four real components.
fn quaternion_relation(beta: &SMatrix<f64, 3, 4>) -> [(&'static str, f64); 4] {
    let b = |a: usize, i: usize| beta[(a, i)];
    [
        ("real", -b(0, 1) - b(1, 2) - b(2, 3)),
        ("i", b(0, 0) + b(1, 3) - b(2, 2)),
        ("j", -b(0, 3) + b(1, 0) + b(2, 1)),
        ("k", b(0, 2) - b(1, 1) + b(2, 0)),
    ]
}

/// Assemble `[[theta, -beta^T], [beta, sigma+(theta)]]`.
pub fn embed(theta: Matrix4<f64>, beta: SMatrix<f64, 3, 4>) -> Result<G2AlgebraElement> {
    let sk = skew_residual(&theta);
    if sk > EMBED_TOL {
        return Err(Error::NotSkew(sk));
    }
    for (component, r) in quaternion_relation(&beta) {
        if r.abs() > EMBED_TOL {
            return Err(Error::QuaternionRelation { component, residual: r.abs() });
        }
    }
    let sigma = sigma_plus(&theta);
    let mut a = Matrix7::zeros();
    a.fixed_view_mut::<4, 4>(0, 0).copy_from(&theta);
    a.fixed_view_mut::<3, 4>(4, 0).copy_from(&beta);
    a.fixed_view_mut::<4, 3>(0, 4).copy_from(&(-beta.transpose()));
    a.fixed_view_mut::<3, 3>(4, 4).copy_from(&sigma);
    let el = G2AlgebraElement { theta, beta, matrix7: a };
    let r = el.relation_residual();
    if r > 1e-12 * (1.0 + max_abs(&a)) {
        return Err(Error::Internal(format!("embed output violates g2 relations by {r:.3e}")));
    }
    Ok(el)
}

impl G2AlgebraElement {
    pub fn zero() -> Self {
        G2AlgebraElement { theta: Matrix4::zeros(), beta: SMatrix::zeros(), matrix7: Matrix7::zeros() }
    }

    /// Accept a 7x7 matrix lying in g2 within `tol` (absolute, entrywise).
    pub fn from_matrix(a: Matrix7, tol: f64) -> Result<Self> {
        let sk = skew_residual(&a);
        if sk > tol {
            return Err(Error::NotSkew(sk));
        }
        for (k, r) in g2_relation_residuals(&a).iter().enumerate() {
            if r.abs() > tol {
                return Err(Error::NotInG2 { relation: G2_RELATIONS[k].to_string(), residual: r.abs() });
            }
        }
        Ok(G2AlgebraElement {
            theta: a.fixed_view::<4, 4>(0, 0).into_owned(),
            beta: a.fixed_view::<3, 4>(4, 0).into_owned(),
            matrix7: a,
        })
    }

    /// Gaussian combination of the basis elements.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Self {
        let mut a = Matrix7::zeros();
        for b in g2_basis() {
            let c: f64 = rng.sample(StandardNormal);
            a += b.matrix7 * (c * scale);
        }
        G2AlgebraElement::from_matrix(a, 1e-10).expect("combination of basis elements")
    }

    pub fn theta(&self) -> &Matrix4<f64> {
        &self.theta
    }

    pub fn beta(&self) -> &SMatrix<f64, 3, 4> {
        &self.beta
    }

    pub fn matrix7(&self) -> &Matrix7 {
        &self.matrix7
    }

    pub fn is_block_diagonal(&self) -> bool {
        max_abs(&self.beta) == 0.0
    }

    pub fn relation_residual(&self) -> f64 {
        g2_relation_residuals(&self.matrix7).iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn phi_preservation_residual(&self) -> f64 {
        phi_preservation_residual(&self.matrix7)
    }

    pub fn scale(&self, s: f64) -> Self {
        G2AlgebraElement { theta: self.theta * s, beta: self.beta * s, matrix7: self.matrix7 * s }
    }

    pub fn add(&self, other: &Self) -> Self {
        G2AlgebraElement {
            theta: self.theta + other.theta,
            beta: self.beta + other.beta,
            matrix7: self.matrix7 + other.matrix7,
        }
    }

    /// Coordinates in the orthonormal basis returned by [`g2_basis`].
    pub fn coordinates(&self) -> Vec<f64> {
        g2_basis().iter().map(|b| 0.5 * b.matrix7.dot(&self.matrix7)).collect()
    }
}

/// Failure of `a` to annihilate phi: max over basis triples of
/// `|phi(a x, y, z) + phi(x, a y, z) + phi(x, y, a z)|`.
pub fn phi_preservation_residual(a: &Matrix7) -> f64 {
    let mut worst = 0.0f64;
    for i in 1..=7 {
        for j in i + 1..=7 {
            for k in j + 1..=7 {
                let (x, y, z) = (basis(i), basis(j), basis(k));
                let r = phi_eval(&(a * x), &y, &z) + phi_eval(&x, &(a * y), &z) + phi_eval(&x, &y, &(a * z));
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

fn skew_generator(i: usize, j: usize) -> Matrix7 {
    let mut g = Matrix7::zeros();
    g[(i - 1, j - 1)] = 1.0;
    g[(j - 1, i - 1)] = -1.0;
    g
}

/// Solve the g2 relations on the span of the given skew generators.
fn solve_relations(gens: &[Matrix7]) -> Vec<Matrix7> {
    let c = DMatrix::from_fn(7, gens.len(), |r, k| g2_relation_residuals(&gens[k])[r]);
    null_space(&c, 1e-10)
        .into_iter()
        .map(|v| gens.iter().zip(v.iter()).fold(Matrix7::zeros(), |acc, (g, c)| acc + g * *c))
        .collect()
}

/// Basis of g2 as the solution space of the linear constraints: first the 6
/// block-diagonal elements (so(4) part), then the 8 off-diagonal ones (beta part).
/// The basis is orthonormal for `<A, B> = tr(A^T B) / 2`.
pub fn g2_basis() -> &'static [G2AlgebraElement] {
    static BASIS: OnceLock<Vec<G2AlgebraElement>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut block = Vec::new();
        for i in 1..=4 {
            for j in i + 1..=4 {
                block.push(skew_generator(i, j));
            }
        }
        for (i, j) in [(5, 6), (5, 7), (6, 7)] {
            block.push(skew_generator(i, j));
        }
        let mut off = Vec::new();
        for a in 5..=7 {
            for i in 1..=4 {
                off.push(skew_generator(a, i));
            }
        }
        solve_relations(&block)
            .into_iter()
            .chain(solve_relations(&off))
            .map(|a| G2AlgebraElement::from_matrix(a, 1e-10).expect("null space element lies in g2"))
            .collect()
    })
}

/// Dimension of the solution space when all 21 skew generators are used at once.
pub fn full_solution_dimension() -> usize {
    let mut gens = Vec::new();
    for i in 1..=7 {
        for j in i + 1..=7 {
            gens.push(skew_generator(i, j));
        }
    }
    solve_relations(&gens).len()
}

/// Matrix commutator, checked to land back in g2.
pub fn bracket(a: &G2AlgebraElement, b: &G2AlgebraElement) -> Result<G2AlgebraElement> {
    let c = a.matrix7 * b.matrix7 - b.matrix7 * a.matrix7;
    let tol = 1e-12 * (1.0 + max_abs(&a.matrix7) * max_abs(&b.matrix7));
    G2AlgebraElement::from_matrix(c, tol).map_err(|e| Error::Internal(format!("bracket left g2: {e}")))
}

/// Killing form `tr(ad X ad Y)` in the basis of [`g2_basis`].
pub fn killing_form() -> DMatrix<f64> {
    let basis = g2_basis();
    let ad: Vec<DMatrix<f64>> = basis
        .iter()
        .map(|x| {
            let cols: Vec<Vec<f64>> = basis.iter().map(|y| bracket(x, y).expect("closed").coordinates()).collect();
            DMatrix::from_fn(14, 14, |r, c| cols[c][r])
        })
        .collect();
    DMatrix::from_fn(14, 14, |i, j| (&ad[i] * &ad[j]).trace())
}

/// Matrix of `ad x` in the basis of [`g2_basis`].
pub fn adjoint_matrix(x: &G2AlgebraElement) -> DMatrix<f64> {
    let basis = g2_basis();
    let cols: Vec<Vec<f64>> = basis.iter().map(|y| bracket(x, y).expect("closed").coordinates()).collect();
    DMatrix::from_fn(14, 14, |r, c| cols[c][r])
}
