//! Oriented 2-planes in R^7, the G2-invariant CR structure on them, the ruled
//! construction `Gamma(r1, r2, s) = r1 v1(s) + r2 v2(s)` and the coassociativity verifier.
//!
//! For a frame field with `(e1, e2)` spanning the plane the CR coframe is
//! `zeta3 = w31 + i w41, zeta4 = w32 + i w42, zeta6 = w61 - i w71, zeta7 = w62 - i w72`,
//! with `Phi = w63 + i w73`. A surface of planes is CR-holomorphic iff `w51 = w52 = 0` and
//! all `zeta_i ^ zeta_j` vanish on it.

use std::io::Write;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::forms::{cross, phi_eval, star_phi_eval};
use crate::g2::{g2_basis, CurveLift, G2Frame, Node};
use crate::linalg::gram_schmidt;
use crate::{Error, Matrix7, Report, Result, Vector7, C64};

/// An oriented 2-plane, represented by an ordered orthonormal pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedTwoPlane {
    v1: Vector7,
    v2: Vector7,
}

impl OrientedTwoPlane {
    pub fn new(v1: Vector7, v2: Vector7) -> Result<Self> {
        let r = (v1.norm() - 1.0).abs().max((v2.norm() - 1.0).abs()).max(v1.dot(&v2).abs());
        if r > 1e-10 {
            return Err(Error::FrameInvariant { invariant: "orthonormal pair", residual: r });
        }
        Ok(OrientedTwoPlane { v1, v2 })
    }

    /// The plane `e1 ^ e2` of a frame.
    pub fn from_frame(f: &G2Frame) -> Self {
        OrientedTwoPlane { v1: f.e(1), v2: f.e(2) }
    }

    pub fn v1(&self) -> &Vector7 {
        &self.v1
    }

    pub fn v2(&self) -> &Vector7 {
        &self.v2
    }

    /// Same oriented plane, basis rotated by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        OrientedTwoPlane { v1: self.v1 * c + self.v2 * s, v2: -self.v1 * s + self.v2 * c }
    }

    pub fn transformed(&self, g: &Matrix7) -> Self {
        OrientedTwoPlane { v1: g * self.v1, v2: g * self.v2 }
    }
}

/// `p(v1 ^ v2) = v2 . v1`, the associated unit vector (the point of S^6 under the plane).
pub fn project_p(plane: &OrientedTwoPlane) -> Vector7 {
    cross(&plane.v2, &plane.v1)
}

/// CR coframe evaluated on one tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CRCoframe {
    /// `(zeta3, zeta4, zeta6, zeta7)`.
    pub zeta: [C64; 4],
    pub w51: f64,
    pub w52: f64,
    pub phi: C64,
}

impl CRCoframe {
    pub fn from_connection(w: &Matrix7) -> Self {
        let o = |i: usize, j: usize| w[(i - 1, j - 1)];
        CRCoframe {
            zeta: [
                C64::new(o(3, 1), o(4, 1)),
                C64::new(o(3, 2), o(4, 2)),
                C64::new(o(6, 1), -o(7, 1)),
                C64::new(o(6, 2), -o(7, 2)),
            ],
            w51: o(5, 1),
            w52: o(5, 2),
            phi: C64::new(o(6, 3), o(7, 3)),
        }
    }
}

pub fn cr_coframe(lift: &CurveLift, node: Node) -> Result<Vec<CRCoframe>> {
    Ok(lift.maurer_cartan(node)?.iter().map(CRCoframe::from_connection).collect())
}

fn require_2d(lift: &CurveLift) -> Result<()> {
    if lift.dim() != 2 {
        return Err(Error::LiftDimension { expected: 2 });
    }
    Ok(())
}

/// CR-holomorphicity residual of the surface of planes `e1 ^ e2`.
pub fn cr_residual(lift: &CurveLift, tol: f64) -> Result<Report> {
    require_2d(lift)?;
    let nodes = lift.interior_nodes(lift.fd_order().radius());
    let per: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|n| {
            let c = cr_coframe(lift, *n)?;
            let one = c.iter().map(|k| k.w51.abs().max(k.w52.abs())).fold(0.0, f64::max);
            let mut wedge = 0.0f64;
            for i in 0..4 {
                for j in i + 1..4 {
                    let m = c[0].zeta[i] * c[1].zeta[j] - c[1].zeta[i] * c[0].zeta[j];
                    wedge = wedge.max(m.norm());
                }
            }
            let z67 = c.iter().map(|k| k.zeta[2].norm().max(k.zeta[3].norm())).fold(0.0, f64::max);
            Ok((one, wedge, z67))
        })
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = per.iter().map(|p| p.0.max(p.1)).collect();
    let mut rep = Report::from_values("cr-holomorphic", tol, &vals, lift.len() - nodes.len())
        .with_metric("one_form_max", per.iter().map(|p| p.0).fold(0.0, f64::max))
        .with_metric("wedge_max", per.iter().map(|p| p.1).fold(0.0, f64::max))
        .with_param("step", lift.step());
    let z67 = per.iter().map(|p| p.2).fold(0.0, f64::max);
    rep = rep.with_metric("zeta67_max", z67);
    if z67 < 1e-8 {
        rep = rep.with_flag("o2-branch: zeta6 = zeta7 = 0");
    }
    if is_constant_plane(lift)? {
        rep = rep.with_flag("degenerate: constant plane");
    }
    Ok(rep)
}

fn is_constant_plane(lift: &CurveLift) -> Result<bool> {
    for n in lift.interior_nodes(lift.fd_order().radius()) {
        for d in 0..lift.dim() {
            let de = lift.derivative(n, d)?;
            if de.column(0).norm() > 1e-12 || de.column(1).norm() > 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Residual of the ruling ideal: the 1-forms `<de_i, e_i . e_j>` and the 2-forms
/// `<de_i, de_j . e_k>` (i, j, k in {1, 2}) pulled back to the surface.
pub fn ruling_ideal_residual(lift: &CurveLift, tol: f64) -> Result<Report> {
    require_2d(lift)?;
    let nodes = lift.interior_nodes(lift.fd_order().radius());
    let per: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|n| {
            let f = lift.frame(*n);
            let e = [f.e(1), f.e(2)];
            let dx = lift.derivative(*n, 0)?;
            let dy = lift.derivative(*n, 1)?;
            let de = |i: usize, m: &Matrix7| -> Vector7 { m.column(i).into_owned() };
            let mut one = 0.0f64;
            for (i, j) in [(0, 1), (1, 0)] {
                let w = cross(&e[i], &e[j]);
                one = one.max(de(i, &dx).dot(&w).abs()).max(de(i, &dy).dot(&w).abs());
            }
            let mut two = 0.0f64;
            for i in 0..2 {
                for j in 0..2 {
                    for (k, ek) in e.iter().enumerate() {
                        let _ = k;
                        let v = de(i, &dx).dot(&cross(&de(j, &dy), ek)) - de(i, &dy).dot(&cross(&de(j, &dx), ek));
                        two = two.max(v.abs());
                    }
                }
            }
            Ok((one, two))
        })
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = per.iter().map(|p| p.0.max(p.1)).collect();
    Ok(Report::from_values("ruling-ideal", tol, &vals, lift.len() - nodes.len())
        .with_metric("one_form_max", per.iter().map(|p| p.0).fold(0.0, f64::max))
        .with_metric("two_form_max", per.iter().map(|p| p.1).fold(0.0, f64::max))
        .with_param("step", lift.step()))
}

/// Minimal norm elements `P51, P52` of g2 with `w5r(P5s) = delta_rs`, used to remove the
/// `w51, w52` components of a tangent vector least-squares style.
fn kernel_complements() -> &'static [Matrix7; 2] {
    static P: OnceLock<[Matrix7; 2]> = OnceLock::new();
    P.get_or_init(|| {
        let basis = g2_basis();
        let l = DMatrix::from_fn(2, basis.len(), |r, k| basis[k].matrix7()[(4, r)]);
        let llt = &l * l.transpose();
        let inv = llt.try_inverse().expect("w51, w52 are independent on g2");
        let coeffs = l.transpose() * inv;
        let make = |r: usize| {
            basis.iter().enumerate().fold(Matrix7::zeros(), |acc, (k, b)| acc + b.matrix7() * coeffs[(k, r)])
        };
        [make(0), make(1)]
    })
}

/// Both sides of the six congruences defining `Upsilon_1..6` at one node.
///
/// The left sides are the `zeta` wedges of `connection` (the connection matrices along the
/// two grid directions), the right sides use the lift's finite difference `de_i`. Both are
/// taken after removing the `w51, w52` components of each tangent vector along the
/// minimal-norm g2 elements dual to them. The congruences are algebraic in the connection,
/// so with the finite difference connection itself ([`upsilon_identity_check`]) they hold
/// to round-off; an exact connection exposes the finite difference error.
pub fn upsilon_identity_check_with(lift: &CurveLift, node: Node, connection: &[Matrix7; 2], tol: f64) -> Result<Report> {
    require_2d(lift)?;
    let f = lift.frame(node);
    let e = f.matrix();
    let p = kernel_complements();
    let coef = |w: &Matrix7| [w[(4, 0)], w[(4, 1)]];
    let (cx, cy) = (coef(&connection[0]), coef(&connection[1]));
    let x = connection[0] - p[0] * cx[0] - p[1] * cx[1];
    let y = connection[1] - p[0] * cy[0] - p[1] * cy[1];
    let zx = CRCoframe::from_connection(&x).zeta;
    let zy = CRCoframe::from_connection(&y).zeta;
    let wedge = |a: usize, b: usize| zx[a] * zy[b] - zy[a] * zx[b];
    // indices into zeta: 0 -> zeta3, 1 -> zeta4, 2 -> zeta6, 3 -> zeta7
    let u12 = wedge(2, 0);
    let u34 = wedge(3, 1);
    let u56 = wedge(3, 0) + wedge(2, 1);
    let ex = lift.derivative(node, 0)? - e * (p[0] * cx[0] + p[1] * cx[1]);
    let ey = lift.derivative(node, 1)? - e * (p[0] * cy[0] + p[1] * cy[1]);
    let col = |m: &Matrix7, i: usize| -> Vector7 { m.column(i - 1).into_owned() };
    let ea = |a: usize| f.e(a);
    let p2 = |a: usize, i: usize, j: usize| {
        phi_eval(&ea(a), &col(&ex, i), &col(&ey, j)) - phi_eval(&ea(a), &col(&ey, i), &col(&ex, j))
    };
    let lhs = [u12.re, u12.im, u34.re, u34.im, u56.re, u56.im];
    let rhs = [
        0.5 * p2(1, 1, 1),
        -0.5 * p2(2, 1, 1),
        0.5 * p2(1, 2, 2),
        -0.5 * p2(2, 2, 2),
        p2(1, 1, 2),
        -p2(2, 1, 2),
    ];
    let diffs: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).collect();
    let mut rep = Report::from_values("upsilon-identities", tol, &[diffs.iter().cloned().fold(0.0, f64::max)], 0)
        .with_param("node", node)
        .with_param("removed_w51_w52", [cx, cy]);
    for (k, d) in diffs.iter().enumerate() {
        rep = rep.with_metric(format!("upsilon{}", k + 1), *d);
    }
    Ok(rep)
}

/// [`upsilon_identity_check_with`] using the lift's own finite difference connection.
pub fn upsilon_identity_check(lift: &CurveLift, node: Node, tol: f64) -> Result<Report> {
    require_2d(lift)?;
    let mc = lift.maurer_cartan(node)?;
    upsilon_identity_check_with(lift, node, &[mc[0], mc[1]], tol)
}

/// [`upsilon_identity_check`] reduced over all interior nodes.
pub fn upsilon_identity_residual(lift: &CurveLift, tol: f64) -> Result<Report> {
    upsilon_identity_residual_with(lift, tol, |n| {
        let mc = lift.maurer_cartan(n)?;
        Ok([mc[0], mc[1]])
    })
}

/// [`upsilon_identity_check_with`] reduced over all interior nodes, with the connection at
/// each node supplied by `connection`.
pub fn upsilon_identity_residual_with<F>(lift: &CurveLift, tol: f64, connection: F) -> Result<Report>
where
    F: Fn(Node) -> Result<[Matrix7; 2]> + Sync,
{
    require_2d(lift)?;
    let nodes = lift.interior_nodes(lift.fd_order().radius());
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|n| upsilon_identity_check_with(lift, *n, &connection(*n)?, tol).map(|r| r.max()))
        .collect::<Result<_>>()?;
    Ok(Report::from_values("upsilon-identities", tol, &vals, lift.len() - nodes.len()).with_param("step", lift.step()))
}

/// One sampled point of a 4-fold with its coordinate tangent vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourfoldSample {
    pub params: [f64; 4],
    pub point: Vector7,
    pub tangents: [Vector7; 4],
}

/// How the tangent vectors were obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference { step: f64 },
}

/// A sampled 4-dimensional submanifold of R^7.
#[derive(Debug, Clone, PartialEq)]
pub struct Fourfold {
    pub param_names: [String; 4],
    pub samples: Vec<FourfoldSample>,
    pub derivatives: DerivativeSource,
    pub flags: Vec<String>,
}

/// Smallest singular value of the Jacobian below which a sample is not an immersion.
pub const IMMERSION_TOL: f64 = 1e-6;

fn names(n: [&str; 4]) -> [String; 4] {
    n.map(String::from)
}

impl Fourfold {
    /// Sample `map` on a product grid with central difference tangents of step `h`.
    pub fn from_map<F>(param_names: [&str; 4], grid: &[Vec<f64>; 4], h: f64, map: F) -> Fourfold
    where
        F: Fn([f64; 4]) -> Vector7 + Sync,
    {
        let pts = product(grid);
        let samples = pts
            .par_iter()
            .map(|p| {
                let tangents = [0, 1, 2, 3].map(|d| {
                    let (mut a, mut b) = (*p, *p);
                    a[d] += h;
                    b[d] -= h;
                    (map(a) - map(b)) / (2.0 * h)
                });
                FourfoldSample { params: *p, point: map(*p), tangents }
            })
            .collect();
        Fourfold {
            param_names: names(param_names),
            samples,
            derivatives: DerivativeSource::FiniteDifference { step: h },
            flags: Vec::new(),
        }
    }

    /// Sample a map that returns its value and its four partial derivatives.
    pub fn from_analytic<F>(param_names: [&str; 4], grid: &[Vec<f64>; 4], map: F) -> Fourfold
    where
        F: Fn([f64; 4]) -> (Vector7, [Vector7; 4]) + Sync,
    {
        let samples = product(grid)
            .par_iter()
            .map(|p| {
                let (point, tangents) = map(*p);
                FourfoldSample { params: *p, point, tangents }
            })
            .collect();
        Fourfold { param_names: names(param_names), samples, derivatives: DerivativeSource::Analytic, flags: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// CSV with the parameter columns, `x1..x7` and the coassociativity residual
    /// (empty where the sample is excluded).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let res = sample_residuals(self);
        writeln!(w, "{},x1,x2,x3,x4,x5,x6,x7,residual", self.param_names.join(","))?;
        for (s, r) in self.samples.iter().zip(res) {
            let mut cells: Vec<String> = s.params.iter().map(|v| format!("{v:.17e}")).collect();
            cells.extend(s.point.iter().map(|v| format!("{v:.17e}")));
            cells.push(r.map(|r| format!("{:.6e}", r.residual)).unwrap_or_default());
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn product(grid: &[Vec<f64>; 4]) -> Vec<[f64; 4]> {
    let mut out = Vec::with_capacity(grid.iter().map(|g| g.len()).product());
    for &a in &grid[0] {
        for &b in &grid[1] {
            for &c in &grid[2] {
                for &d in &grid[3] {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// The ruled 4-fold `r1 e1(s) + r2 e2(s)` over a 2D lift, sampled at every interior node and
/// every `(r1, r2)` pair. Tangents along the surface use the lift's finite differences.
pub fn gamma_construction(curve: &CurveLift, r_grid: &[(f64, f64)]) -> Result<Fourfold> {
    require_2d(curve)?;
    let nodes = curve.interior_nodes(curve.fd_order().radius());
    let per_node: Vec<Vec<FourfoldSample>> = nodes
        .par_iter()
        .map(|n| {
            let f = curve.frame(*n);
            let (e1, e2) = (f.e(1), f.e(2));
            let dx = curve.derivative(*n, 0)?;
            let dy = curve.derivative(*n, 1)?;
            let s = curve.param(*n);
            Ok(r_grid
                .iter()
                .map(|&(r1, r2)| FourfoldSample {
                    params: [r1, r2, s[0], s[1]],
                    point: e1 * r1 + e2 * r2,
                    tangents: [
                        e1,
                        e2,
                        dx.column(0) * r1 + dx.column(1) * r2,
                        dy.column(0) * r1 + dy.column(1) * r2,
                    ],
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut m = Fourfold {
        param_names: names(["r1", "r2", "sigma1", "sigma2"]),
        samples: per_node.into_iter().flatten().collect(),
        derivatives: DerivativeSource::FiniteDifference { step: curve.step() },
        flags: Vec::new(),
    };
    if is_constant_plane(curve)? {
        m.flags.push("degenerate: constant plane".into());
    }
    Ok(m)
}

/// Coassociativity data of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleResidual {
    /// Max |phi| over the four triples of the orthonormalized tangent frame.
    pub residual: f64,
    /// `*phi` on the orthonormalized tangent frame, in parameter order.
    pub calibration: f64,
}

/// Per-sample residuals; `None` where the Jacobian is rank deficient.
pub fn sample_residuals(m: &Fourfold) -> Vec<Option<SampleResidual>> {
    m.samples
        .par_iter()
        .map(|s| {
            let jac = DMatrix::from_fn(7, 4, |i, j| s.tangents[j][i]);
            let smin = jac.svd(false, false).singular_values.min();
            if !(smin > IMMERSION_TOL) {
                return None;
            }
            let q = gram_schmidt(&s.tangents, 1e-12)?;
            let residual = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
                .iter()
                .map(|&(a, b, c)| phi_eval(&q[a], &q[b], &q[c]).abs())
                .fold(0.0, f64::max);
            Some(SampleResidual { residual, calibration: star_phi_eval(&[q[0], q[1], q[2], q[3]]) })
        })
        .collect()
}

/// Coassociativity of a sampled 4-fold: `phi` restricted to its tangent spaces.
pub fn coassociativity_residual(m: &Fourfold, tol: f64) -> Report {
    let res = sample_residuals(m);
    let vals: Vec<f64> = res.iter().flatten().map(|r| r.residual).collect();
    let cal: Vec<f64> = res.iter().flatten().map(|r| r.calibration).collect();
    let excluded = res.len() - vals.len();
    let cmin = cal.iter().cloned().fold(f64::INFINITY, f64::min);
    let cmax = cal.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut rep = Report::from_values("coassociativity", tol, &vals, excluded)
        .with_metric("calibration_min", cmin)
        .with_metric("calibration_max", cmax)
        .with_param("derivatives", &m.derivatives);
    for f in &m.flags {
        rep = rep.with_flag(f.clone());
    }
    if !cal.is_empty() && (cmin < 0.0) != (cmax < 0.0) {
        rep = rep.with_flag("orientation changes sign across samples");
    }
    rep
}
