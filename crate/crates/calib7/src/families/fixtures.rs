//! Test curves: CP^2 fiber curves, a homogeneous holomorphic torus, random lifts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::forms::cross;
use crate::g2::{exp_frame, CurveLift, FdOrder, G2AlgebraElement, G2Frame};
use crate::linalg::ccross3;
use crate::s6::{adapt_holomorphic, su3_from_g2, su3_to_g2, AdaptationMode, AdaptedLift};
use crate::{basis, CMatrix3, CVector3, Error, Matrix7, Result, Vector7, C64};

/// A linear family of complex lines `v(z) = a + z b` in the `C^3` of a base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFamily {
    pub a: CVector3,
    pub b: CVector3,
}

impl LineFamily {
    pub fn at(&self, z: C64) -> CVector3 {
        self.a + self.b * z
    }
}

fn su3_completion(c: &CVector3, fixed: &CVector3) -> Option<CMatrix3> {
    let n = c.norm();
    if n < 1e-8 {
        return None;
    }
    let u2 = c / C64::new(n, 0.0);
    let w = fixed - u2 * u2.dotc(fixed);
    if w.norm() < 1e-8 {
        return None;
    }
    let u3 = w / C64::new(w.norm(), 0.0);
    let u1 = ccross3(&u2, &u3).conjugate();
    Some(CMatrix3::from_columns(&[u1, u2, u3]))
}

/// Curve in the fiber over `base.e5`: at `z = x + i y` the frame is `f U(z)` with
/// `U = (conj(u2 x u3), u2, u3)`, `u2 = conj(v(z)) / |v(z)|` and `u3` the unit complement of
/// a fixed vector. Then `u = e5` is constant and `e1 ^ e2` is the complex line of `f2 U`.
/// A node where the family or the completion degenerates fails the whole grid.
pub fn fiber_curve(
    base: &G2Frame,
    family: &LineFamily,
    shape: [usize; 2],
    origin: [f64; 2],
    step: f64,
    fd_order: FdOrder,
) -> Result<CurveLift> {
    let s = su3_from_g2(base);
    let centre = family.at(C64::new(
        origin[0] + 0.5 * step * (shape[0] - 1) as f64,
        origin[1] + 0.5 * step * (shape[1] - 1) as f64,
    ));
    // the standard basis vector least aligned with the centre line
    let cc = centre.conjugate();
    let m = (0..3).min_by(|&i, &j| cc[i].norm().total_cmp(&cc[j].norm())).unwrap();
    let fixed = CVector3::from_fn(|i, _| C64::new(if i == m { 1.0 } else { 0.0 }, 0.0));
    let mut frames = Vec::with_capacity(shape[0] * shape[1]);
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            let z = C64::new(origin[0] + step * i as f64, origin[1] + step * j as f64);
            let u = su3_completion(&family.at(z).conjugate(), &fixed).ok_or(Error::BranchPoint(vec![i, j]))?;
            frames.push(su3_to_g2(&s.rotate(&u))?);
        }
    }
    CurveLift::surface(shape, origin, step, fd_order, frames)
}

/// The fiber fixture: a degree-1 family over `e5` of the standard frame.
pub fn fiber_fixture() -> Result<CurveLift> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let family = LineFamily {
        a: CVector3::new(c(1.0, 0.0), c(0.0, 0.3), c(0.2, 0.0)),
        b: CVector3::new(c(0.2, 0.0), c(1.0, 0.0), c(0.0, -0.5)),
    };
    fiber_curve(&G2Frame::identity(), &family, [11, 11], [-0.25, -0.25], 0.05, FdOrder::Fourth)
}

/// The infinitesimal action on `R^7` of `kappa` in su(3) acting on the frame `f` of the
/// standard G2 frame (fixing `e5`).
pub fn su3_generator(kappa: &CMatrix3) -> Matrix7 {
    let s = su3_from_g2(&G2Frame::identity());
    let cols: Vec<Vector7> = (1..=7).map(|j| s.real_vector(&(kappa * s.coords(&basis(j))))).collect();
    Matrix7::from_columns(&cols)
}

/// A flat holomorphic torus in S^6: the orbit of `p = (e7 - e1 - e4)/sqrt(3)` under the
/// maximal torus of SU(3), parametrized so that `d_y u = p . d_x u`.
/// Its binormal lift has `a = b = 1/6`, `rho = 0`.
pub struct HomogeneousTorus {
    pub y1: Matrix7,
    pub y2: Matrix7,
    pub base: G2Frame,
}

impl HomogeneousTorus {
    pub fn new() -> Result<Self> {
        let i = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        let d = |a: C64, b: C64, c: C64| CMatrix3::from_diagonal(&nalgebra::Vector3::new(a, b, c));
        let x1 = su3_generator(&d(i, -i, z));
        let x2 = su3_generator(&d(z, i, -i));
        let p = (basis(7) - basis(1) - basis(4)) / 3f64.sqrt();
        let target = cross(&p, &(x1 * p));
        let m = nalgebra::DMatrix::from_fn(7, 2, |r, c| if c == 0 { (x1 * p)[r] } else { (x2 * p)[r] });
        let svd = m.svd(true, true);
        let coef = svd.solve(&nalgebra::DVector::from_column_slice(target.as_slice()), 1e-12).map_err(|e| Error::Internal(e.into()))?;
        let y2 = x1 * coef[0] + x2 * coef[1];
        let miss = (y2 * p - target).norm();
        if miss > 1e-12 {
            return Err(Error::Internal(format!("torus orbit is not holomorphic (misfit {miss:.3e})")));
        }
        Ok(HomogeneousTorus { y1: x1, y2, base: G2Frame::with_u(&p)? })
    }

    pub fn frame(&self, x: f64, y: f64) -> Matrix7 {
        (self.y1 * x + self.y2 * y).exp() * self.base.matrix()
    }

    pub fn lift(&self, shape: [usize; 2], origin: [f64; 2], step: f64, fd_order: FdOrder) -> Result<CurveLift> {
        CurveLift::surface_from_fn(shape, origin, step, fd_order, |x, y| G2Frame::new(self.frame(x, y)))
    }
}

/// Binormal lift of the homogeneous torus, adapted with `f2` spanning the second normal.
pub fn binormal_fixture() -> Result<AdaptedLift> {
    let torus = HomogeneousTorus::new()?.lift([13, 13], [0.1, 0.2], 0.02, FdOrder::Fourth)?;
    adapt_holomorphic(&torus, AdaptationMode::F2SpansN2)
}

/// `E(x, y) = exp(x A + y B + x y C)` for seeded random g2 elements of norm about one:
/// a generic (non-CR) surface of planes.
pub fn random_lift(seed: u64, shape: [usize; 2], step: f64, fd_order: FdOrder) -> CurveLift {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = G2AlgebraElement::random(&mut rng, 1.0);
    let b = G2AlgebraElement::random(&mut rng, 1.0);
    let c = G2AlgebraElement::random(&mut rng, 1.0);
    let g = exp_frame(&G2AlgebraElement::random(&mut rng, 1.0), 1.0, &G2Frame::identity()).expect("g2 exponential");
    CurveLift::surface_from_fn(shape, [0.0, 0.0], step, fd_order, |x, y| {
        G2Frame::new(g.matrix() * (a.matrix7() * x + b.matrix7() * y + c.matrix7() * (x * y)).exp())
    })
    .expect("exponentials of g2 are G2 frames")
}

/// `E(x, y) = g exp(x A) exp(y B)` for seeded random `g` in G2 and `A, B` in g2, whose
/// connection `(exp(-y B) A exp(y B), B)` is known in closed form.
#[derive(Debug, Clone)]
pub struct ProductLift {
    pub g: Matrix7,
    pub a: Matrix7,
    pub b: Matrix7,
}

impl ProductLift {
    pub fn random(seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = *exp_frame(&G2AlgebraElement::random(&mut rng, 1.0), 1.0, &G2Frame::identity())
            .expect("g2 exponential")
            .matrix();
        let a = *G2AlgebraElement::random(&mut rng, scale).matrix7();
        let b = *G2AlgebraElement::random(&mut rng, scale).matrix7();
        ProductLift { g, a, b }
    }

    pub fn frame(&self, x: f64, y: f64) -> Matrix7 {
        self.g * (self.a * x).exp() * (self.b * y).exp()
    }

    pub fn connection(&self, _x: f64, y: f64) -> [Matrix7; 2] {
        let r = (self.b * y).exp();
        [r.transpose() * self.a * r, self.b]
    }

    pub fn lift(&self, shape: [usize; 2], origin: [f64; 2], step: f64, fd_order: FdOrder) -> Result<CurveLift> {
        CurveLift::surface_from_fn(shape, origin, step, fd_order, |x, y| G2Frame::new(self.frame(x, y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2::G2AlgebraElement;

    #[test]
    fn su3_generators_lie_in_g2() {
        let i = C64::new(0.0, 1.0);
        let k = CMatrix3::from_diagonal(&nalgebra::Vector3::new(i, -i, C64::new(0.0, 0.0)));
        let x = su3_generator(&k);
        assert!(G2AlgebraElement::from_matrix(x, 1e-12).is_ok());
        assert!((x * basis(5)).norm() < 1e-15);
    }

    #[test]
    fn torus_is_holomorphic() {
        let t = HomogeneousTorus::new().unwrap();
        let l = t.lift([7, 7], [0.0, 0.0], 0.02, FdOrder::Fourth).unwrap();
        let h = crate::s6::holomorphicity_residual(&l, 1e-6).unwrap();
        assert!(h.passed, "{h:?}");
    }

    #[test]
    fn fiber_curve_keeps_u() {
        let l = fiber_fixture().unwrap();
        for f in l.frames() {
            assert!((f.e(5) - basis(5)).norm() < 1e-12);
        }
    }
}
