//! The SU(3) structure on S^6 carried by G2 frames with `u = e5`.
//!
//! `f = (e7 + i e6, -e1 - i e2, -e4 + i e3) / 2` and the structure equations
//!
//! ```text
//! du = f(-2i theta) + conj(f)(2i conj(theta))
//! df = u(-i theta^*) + f kappa - conj(f) [theta]
//! ```
//!
//! are used verbatim. A real tangent vector `n` of S^6 has coordinates `c_l = 2 conj(f_l) . n`;
//! the complex structure `J(v) = v . e5` acts on them as multiplication by `-i`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::g2::{CurveLift, FdOrder, G2Frame, Node};
use crate::linalg::{bracket3, cdot7, cdot7r, im7, re7, to_complex7, unitary_residual};
use crate::{CMatrix3, CVector3, CVector7, Error, Matrix7, Report, Result, Vector7, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const HALF: C64 = C64 { re: 0.5, im: 0.0 };

/// The complex frame `(u, f1, f2, f3)` of a G2 frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SU3Frame {
    pub u: Vector7,
    pub f: [CVector7; 3],
}

fn cplx(a: &Vector7, b: &Vector7) -> CVector7 {
    CVector7::from_fn(|i, _| C64::new(a[i], b[i]))
}

pub fn su3_from_g2(frame: &G2Frame) -> SU3Frame {
    let e = |i| frame.e(i);
    SU3Frame {
        u: e(5),
        f: [cplx(&e(7), &e(6)) * HALF, cplx(&-e(1), &-e(2)) * HALF, cplx(&-e(4), &e(3)) * HALF],
    }
}

pub fn su3_to_g2(s: &SU3Frame) -> Result<G2Frame> {
    let [f1, f2, f3] = &s.f;
    let cols = [
        -re7(f2) * 2.0,
        -im7(f2) * 2.0,
        im7(f3) * 2.0,
        -re7(f3) * 2.0,
        s.u,
        im7(f1) * 2.0,
        re7(f1) * 2.0,
    ];
    G2Frame::new(Matrix7::from_columns(&cols))
}

impl SU3Frame {
    /// 1-based access to `f_l`.
    pub fn fl(&self, l: usize) -> &CVector7 {
        &self.f[l - 1]
    }

    /// Largest violation of `f_k^* f_l = delta/2`, `f_k . f_l = 0`, `u . f_l = 0`, `|u| = 1`.
    pub fn unitary_residual(&self) -> f64 {
        let mut r = (self.u.norm() - 1.0).abs();
        for k in 0..3 {
            r = r.max(cdot7r(&self.f[k], &self.u).norm());
            for l in 0..3 {
                let herm = self.f[k].dotc(&self.f[l]);
                let target = if k == l { 0.5 } else { 0.0 };
                r = r.max((herm - target).norm()).max(cdot7(&self.f[k], &self.f[l]).norm());
            }
        }
        r
    }

    /// Coordinates `c_l = 2 conj(f_l) . n` of a real vector.
    pub fn coords(&self, n: &Vector7) -> CVector3 {
        CVector3::from_fn(|l, _| self.f[l].dotc(&to_complex7(n)) * 2.0)
    }

    /// The real vector `sum_l c_l f_l + conj(c_l f_l)`.
    pub fn real_vector(&self, c: &CVector3) -> Vector7 {
        let mut z = CVector7::zeros();
        for l in 0..3 {
            z += self.f[l] * c[l];
        }
        re7(&z) * 2.0
    }

    /// The frame `f U` (U in SU(3)).
    pub fn rotate(&self, u: &CMatrix3) -> SU3Frame {
        let mut f = [CVector7::zeros(); 3];
        for (l, fl) in f.iter_mut().enumerate() {
            for k in 0..3 {
                *fl += self.f[k] * u[(k, l)];
            }
        }
        SU3Frame { u: self.u, f }
    }
}

/// Bryant's sign convention: `(u, f, theta, kappa) -> (u, -f, -theta, kappa)`.
pub fn to_bryant_convention(frame: &SU3Frame, coframe: &SU3Coframe) -> (SU3Frame, SU3Coframe) {
    let f = SU3Frame { u: frame.u, f: [-frame.f[0], -frame.f[1], -frame.f[2]] };
    let c = SU3Coframe {
        theta: coframe.theta.iter().map(|t| -t).collect(),
        kappa: coframe.kappa.clone(),
        reconstruction_residual: coframe.reconstruction_residual,
    };
    (f, c)
}

/// `theta` and `kappa` evaluated on each grid direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SU3Coframe {
    pub theta: Vec<CVector3>,
    pub kappa: Vec<CMatrix3>,
    /// Largest misfit of the du and df reconstructions.
    pub reconstruction_residual: f64,
}

impl SU3Coframe {
    /// Largest `|kappa + kappa^*|` and `|tr kappa|` over directions.
    pub fn kappa_residual(&self) -> f64 {
        self.kappa
            .iter()
            .map(|k| {
                let h = (k + k.adjoint()).iter().fold(0.0f64, |a, x| a.max(x.norm()));
                h.max(k.trace().norm())
            })
            .fold(0.0, f64::max)
    }
}

/// `(theta, kappa)` of a connection matrix `w` in g2, read off entrywise.
pub fn coframe_from_connection(w: &Matrix7) -> (CVector3, CMatrix3) {
    let o = |i: usize, j: usize| w[(i - 1, j - 1)];
    let theta = CVector3::new(
        C64::new(o(6, 5), o(7, 5)) * 0.5,
        C64::new(-o(2, 5), -o(1, 5)) * 0.5,
        C64::new(o(3, 5), -o(4, 5)) * 0.5,
    );
    let a12 = o(1, 7) + 0.5 * o(3, 5);
    let a13 = -o(3, 6) - 0.5 * o(2, 5);
    let a23 = -o(2, 3) + 0.5 * o(5, 6);
    let alpha = nalgebra::Matrix3::new(0.0, a12, a13, -a12, 0.0, a23, -a13, -a23, 0.0);
    let b12 = -o(1, 6) + 0.5 * o(4, 5);
    let b13 = -o(3, 7) + 0.5 * o(1, 5);
    let b23 = -o(1, 3) - 0.5 * o(5, 7);
    let beta = nalgebra::Matrix3::new(-o(6, 7), b12, b13, b12, o(1, 2), b23, b13, b23, o(3, 4));
    let kappa = CMatrix3::from_fn(|i, j| C64::new(alpha[(i, j)], beta[(i, j)]));
    (theta, kappa)
}

/// Coframe from frame derivatives `dE` along each direction, by projection on the
/// unitary frame: `theta_k = i conj(f_k) . du`, `kappa_kl = 2 conj(f_k) . df_l`.
pub fn coframe_from_derivatives(frame: &G2Frame, derivs: &[Matrix7]) -> Result<SU3Coframe> {
    let s = su3_from_g2(frame);
    let unit = s.unitary_residual();
    if unit > 1e-8 {
        return Err(Error::Precondition(format!("degenerate unitary frame (residual {unit:.3e})")));
    }
    let mut theta = Vec::new();
    let mut kappa = Vec::new();
    let mut recon = 0.0f64;
    for d in derivs {
        let ds = su3_from_g2(&G2Frame::from_matrix_unchecked(*d));
        let du = ds.u;
        let th = CVector3::from_fn(|k, _| I * s.f[k].dotc(&to_complex7(&du)));
        let ka = CMatrix3::from_fn(|k, l| s.f[k].dotc(&ds.f[l]) * 2.0);
        // reconstruct du and df from (theta, kappa)
        let mut du_hat = CVector7::zeros();
        for k in 0..3 {
            du_hat += s.f[k] * (-I * 2.0 * th[k]) + s.f[k].conjugate() * (I * 2.0 * th[k].conj());
        }
        recon = recon.max((du_hat - to_complex7(&du)).norm());
        let br = bracket3(&th);
        for l in 0..3 {
            let mut df = to_complex7(&s.u) * (-I * th[l].conj());
            for k in 0..3 {
                df += s.f[k] * ka[(k, l)] - s.f[k].conjugate() * br[(k, l)];
            }
            recon = recon.max((df - ds.f[l]).norm());
        }
        theta.push(th);
        kappa.push(ka);
    }
    Ok(SU3Coframe { theta, kappa, reconstruction_residual: recon })
}

/// Pulled-back SU(3) coframe at an interior node.
pub fn su3_coframe(lift: &CurveLift, node: Node) -> Result<SU3Coframe> {
    let derivs: Vec<Matrix7> = (0..lift.dim()).map(|d| lift.derivative(node, d)).collect::<Result<_>>()?;
    coframe_from_derivatives(lift.frame(node), &derivs)
}

fn wedge_scalar(a: &[C64], b: &[C64]) -> C64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Residual of `d theta = -kappa ^ theta - [conj theta] ^ conj theta` and
/// `d kappa = -kappa ^ kappa + 3 theta ^ theta^* - (theta^T ^ conj theta) Id` on a 2D lift.
pub fn structure_residual(lift: &CurveLift, node: Node) -> Result<f64> {
    if lift.dim() != 2 {
        return Err(Error::LiftDimension { expected: 2 });
    }
    let r = lift.fd_order().radius();
    if !lift.has_margin(node, 2 * r) {
        return Err(Error::BoundaryNode(node.to_vec()));
    }
    let cf = |n: Node| su3_coframe(lift, n).expect("margin checked");
    let dth = lift.derivative_of(node, 0, |n| cf(n).theta[1])? - lift.derivative_of(node, 1, |n| cf(n).theta[0])?;
    let dka = lift.derivative_of(node, 0, |n| cf(n).kappa[1])? - lift.derivative_of(node, 1, |n| cf(n).kappa[0])?;
    let c = cf(node);
    let (tx, ty, kx, ky) = (c.theta[0], c.theta[1], c.kappa[0], c.kappa[1]);
    let rhs_th = -(kx * ty - ky * tx) - (bracket3(&tx.conjugate()) * ty.conjugate() - bracket3(&ty.conjugate()) * tx.conjugate());
    let tt = tx * ty.adjoint() - ty * tx.adjoint();
    let tr: C64 = (0..3).map(|k| tx[k] * ty[k].conj() - ty[k] * tx[k].conj()).sum();
    let rhs_ka = -(kx * ky - ky * kx) + tt * C64::new(3.0, 0.0) - CMatrix3::identity() * tr;
    let e1 = (dth - rhs_th).iter().fold(0.0f64, |a, x| a.max(x.norm()));
    let e2 = (dka - rhs_ka).iter().fold(0.0f64, |a, x| a.max(x.norm()));
    Ok(e1.max(e2))
}

const DEGENERATE_THETA: f64 = 1e-10;

/// Holomorphicity of the curve `u` on a 2D lift: the 2x2 minors of the 3x2 matrix
/// `(theta_i(d_x), theta_i(d_y))` vanish iff all `theta_i ^ theta_j` do.
pub fn holomorphicity_residual(surface: &CurveLift, tol: f64) -> Result<Report> {
    if surface.dim() != 2 {
        return Err(Error::LiftDimension { expected: 2 });
    }
    let nodes = surface.interior_nodes(surface.fd_order().radius());
    let per: Vec<Option<(f64, f64)>> = nodes
        .par_iter()
        .map(|n| {
            let c = su3_coframe(surface, *n)?;
            let (tx, ty) = (c.theta[0], c.theta[1]);
            if tx.norm() < DEGENERATE_THETA && ty.norm() < DEGENERATE_THETA {
                return Ok(None);
            }
            let mut s = 0.0;
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                s += wedge_scalar(&[tx[i], ty[i]], &[tx[j], ty[j]]).norm_sqr();
            }
            let abs = s.sqrt();
            Ok(Some((abs, abs / (tx.norm() * ty.norm()).max(f64::MIN_POSITIVE))))
        })
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = per.iter().flatten().map(|v| v.0).collect();
    let rel = per.iter().flatten().map(|v| v.1).fold(0.0, f64::max);
    let degenerate = per.iter().filter(|p| p.is_none()).count();
    let mut rep = Report::from_values("holomorphicity", tol, &vals, degenerate + surface.len() - nodes.len())
        .with_metric("relative_max", rel)
        .with_metric("degenerate_nodes", degenerate as f64);
    if vals.is_empty() {
        rep = rep.fail_with("degenerate: theta vanishes (u constant)");
    }
    Ok(rep)
}

/// Which normal bundle the frame vectors f2, f3 are aligned with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptationMode {
    /// f2 spans the second normal N2, f3 spans N1: `theta2 = theta3 = kappa21 = 0`.
    F2SpansN2,
    /// f3 spans N2, f2 spans N1: `theta2 = theta3 = kappa31 = 0`.
    F3SpansN2,
}

impl AdaptationMode {
    /// Index (0-based) of the frame vector spanning N1.
    fn n1_slot(self) -> usize {
        match self {
            AdaptationMode::F2SpansN2 => 2,
            AdaptationMode::F3SpansN2 => 1,
        }
    }
}

/// Output of [`adapt_holomorphic`].
#[derive(Debug, Clone)]
pub struct AdaptedLift {
    pub lift: CurveLift,
    pub mode: AdaptationMode,
    /// The first normal vanishes everywhere (kappa31 = 0 in the F2SpansN2 convention): u is a round S^2.
    pub round_s2: bool,
    /// Nodes where N1 (numerically) vanished and the phase came from a neighbour.
    pub fallback_nodes: usize,
    pub flags: Vec<String>,
}

fn second_derivative(lift: &CurveLift, node: Node, dir: usize, f: impl Fn(Node) -> Vector7) -> Vector7 {
    let h2 = lift.step() * lift.step();
    let at = |k: isize| {
        let mut n = node;
        n[dir] = (n[dir] as isize + k) as usize;
        f(n)
    };
    match lift.fd_order() {
        FdOrder::Second => (at(1) - at(0) * 2.0 + at(-1)) / h2,
        FdOrder::Fourth => (-at(2) + at(1) * 16.0 - at(0) * 30.0 + at(-1) * 16.0 - at(-2)) / (12.0 * h2),
    }
}

const ROUND_TOL: f64 = 1e-6;

/// Gauge the frames of a holomorphic curve `u` so that `theta2 = theta3 = 0`, `theta1(d_x)`
/// is real positive and the N1 slot (f3 or f2 by `mode`) spans the first normal line.
///
/// The phase of the N1 vector is taken as close as possible to the input frame's
/// vector in that slot, and from the breadth-first parent where that is ill defined.
/// Second derivatives need a stencil, so the output grid drops `radius` nodes on each side.
pub fn adapt_holomorphic(surface: &CurveLift, mode: AdaptationMode) -> Result<AdaptedLift> {
    let hol = holomorphicity_residual(surface, f64::INFINITY)?;
    if hol.residual.count == 0 {
        return Err(Error::Precondition("u is constant: nothing to adapt".into()));
    }
    if hol.metric("relative_max").unwrap_or(f64::INFINITY) > 1e-4 {
        return Err(Error::Precondition(format!(
            "surface is not holomorphic (relative minor {:.3e})",
            hol.metric("relative_max").unwrap()
        )));
    }
    let r = surface.fd_order().radius();
    let [nx, ny] = surface.shape();
    if nx <= 2 * r || ny <= 2 * r {
        return Err(Error::MalformedLift("grid too small to adapt".into()));
    }
    let out_shape = [nx - 2 * r, ny - 2 * r];
    let u_of = |n: Node| surface.frame(n).e(5);

    // pointwise data: frame, u1 and the (unphased) N1 direction in f-coordinates
    struct Local {
        su3: SU3Frame,
        u1: CVector3,
        n1: Option<CVector3>,
    }
    let locals: Vec<Local> = (0..out_shape[0] * out_shape[1])
        .into_par_iter()
        .map(|k| {
            let node = [k / out_shape[1] + r, k % out_shape[1] + r];
            let su3 = su3_from_g2(surface.frame(node));
            let du_x = surface.derivative_of(node, 0, u_of)?;
            let du_y = surface.derivative_of(node, 1, u_of)?;
            let cx = su3.coords(&du_x);
            if cx.norm() < DEGENERATE_THETA {
                return Err(Error::BranchPoint(node.to_vec()));
            }
            let u1 = cx * I / C64::new(cx.norm(), 0.0);
            let u = su3.u;
            let tangent = crate::linalg::gram_schmidt(&[du_x, du_y], 1e-12);
            let normal = |v: Vector7| {
                let mut w = v - u * u.dot(&v);
                if let Some(t) = &tangent {
                    for q in t {
                        w -= q * q.dot(&w);
                    }
                }
                w
            };
            let nxx = normal(second_derivative(surface, node, 0, u_of));
            let nyy = normal(second_derivative(surface, node, 1, u_of));
            let pick = if nxx.norm() >= nyy.norm() { nxx } else { nyy };
            let mut c = su3.coords(&pick);
            c -= u1 * u1.dotc(&c);
            let scale = du_x.norm_squared().max(1.0);
            let n1 = if c.norm() > ROUND_TOL * scale { Some(c / C64::new(c.norm(), 0.0)) } else { None };
            Ok(Local { su3, u1, n1 })
        })
        .collect::<Result<_>>()?;

    let slot = mode.n1_slot();
    let idx = |i: usize, j: usize| i * out_shape[1] + j;
    let mut n1_ambient: Vec<Option<CVector7>> = vec![None; locals.len()];
    let mut coords: Vec<Option<CVector3>> = vec![None; locals.len()];
    let mut fallback = 0usize;
    let seed = [out_shape[0] / 2, out_shape[1] / 2];
    let mut queue = VecDeque::from([(seed, None::<usize>)]);
    let mut seen = vec![false; locals.len()];
    seen[idx(seed[0], seed[1])] = true;
    while let Some((node, parent)) = queue.pop_front() {
        let k = idx(node[0], node[1]);
        let loc = &locals[k];
        let ambient = |c: &CVector3| -> CVector7 { (0..3).fold(CVector7::zeros(), |acc, l| acc + loc.su3.f[l] * c[l]) };
        // unit vector in the N1 line (or, on the round S^2, the input slot made orthogonal to u1)
        let base = loc.n1.unwrap_or_else(|| {
            let mut e = CVector3::zeros();
            e[slot] = C64::new(1.0, 0.0);
            if let Some(p) = parent.and_then(|p| n1_ambient[p]) {
                e = loc.su3.f.iter().enumerate().fold(CVector3::zeros(), |mut acc, (l, fl)| {
                    acc[l] = fl.dotc(&p) * 2.0;
                    acc
                });
            }
            e -= loc.u1 * loc.u1.dotc(&e);
            e / C64::new(e.norm(), 0.0)
        });
        if loc.n1.is_none() {
            fallback += 1;
        }
        let overlap = base[slot];
        let phase = if overlap.norm() > 1e-3 {
            overlap.conj() / overlap.norm()
        } else if let Some(p) = parent.and_then(|p| n1_ambient[p]) {
            let z = cdot7(&p.conjugate(), &ambient(&base));
            if z.norm() > 0.0 { z.conj() / z.norm() } else { C64::new(1.0, 0.0) }
        } else {
            let m = base.icamax();
            base[m].conj() / base[m].norm()
        };
        let c = base * phase;
        n1_ambient[k] = Some(ambient(&c));
        coords[k] = Some(c);
        for (di, dj) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
            let (a, b) = (node[0] as isize + di, node[1] as isize + dj);
            if a < 0 || b < 0 || a >= out_shape[0] as isize || b >= out_shape[1] as isize {
                continue;
            }
            let kk = idx(a as usize, b as usize);
            if !seen[kk] {
                seen[kk] = true;
                queue.push_back(([a as usize, b as usize], Some(k)));
            }
        }
    }

    let frames: Vec<G2Frame> = locals
        .par_iter()
        .zip(coords.par_iter())
        .map(|(loc, c)| {
            let n1 = c.expect("every node visited");
            let u1 = loc.u1;
            let (u2, u3) = match mode {
                AdaptationMode::F2SpansN2 => (crate::linalg::ccross3(&n1, &u1).conjugate(), n1),
                AdaptationMode::F3SpansN2 => (n1, crate::linalg::ccross3(&u1, &n1).conjugate()),
            };
            let u = CMatrix3::from_columns(&[u1, u2, u3]);
            let ur = unitary_residual(&u);
            if ur > 1e-10 {
                return Err(Error::Internal(format!("adapting gauge is not unitary ({ur:.3e})")));
            }
            su3_to_g2(&loc.su3.rotate(&u))
        })
        .collect::<Result<_>>()?;
    let origin = surface.param([r, r]);
    let lift = CurveLift::surface(out_shape, origin, surface.step(), surface.fd_order(), frames)?;
    let round_s2 = locals.iter().all(|l| l.n1.is_none());
    let mut flags = Vec::new();
    if round_s2 {
        flags.push("round-s2: first normal vanishes identically".to_string());
    }
    Ok(AdaptedLift { lift, mode, round_s2, fallback_nodes: fallback, flags })
}

/// Largest pulled-back `|theta2|, |theta3|` and `|kappa21|` (or `|kappa31|`) over interior
/// nodes: the integrality residual of the adapted ideal.
pub fn adapted_ideal_residual(lift: &CurveLift, mode: AdaptationMode, tol: f64) -> Result<Report> {
    let nodes = lift.interior_nodes(lift.fd_order().radius());
    let (k_row, k_name) = match mode {
        AdaptationMode::F2SpansN2 => (1, "kappa21_max"),
        AdaptationMode::F3SpansN2 => (2, "kappa31_max"),
    };
    let per: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|n| {
            let c = su3_coframe(lift, *n)?;
            let th = c.theta.iter().map(|t| t[1].norm().max(t[2].norm())).fold(0.0, f64::max);
            let ka = c.kappa.iter().map(|k| k[(k_row, 0)].norm()).fold(0.0, f64::max);
            Ok((th, ka))
        })
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = per.iter().map(|(a, b)| a.max(*b)).collect();
    Ok(Report::from_values("adapted-ideal", tol, &vals, lift.len() - nodes.len())
        .with_metric("theta23_max", per.iter().map(|p| p.0).fold(0.0, f64::max))
        .with_metric(k_name, per.iter().map(|p| p.1).fold(0.0, f64::max)))
}

/// Torsion of an adapted lift at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torsion {
    pub h1: C64,
    pub h2: C64,
    pub fit_residual: f64,
}

/// Least-squares `H1, H2` with `kappa31 = H1 theta1`, `kappa23 = H2 theta1` (F2SpansN2), or
/// `kappa21 = H1 theta1`, `kappa32 = H2 theta1` (F3SpansN2).
pub fn torsion(adapted: &CurveLift, node: Node, mode: AdaptationMode) -> Result<Torsion> {
    let c = su3_coframe(adapted, node)?;
    let th: Vec<C64> = c.theta.iter().map(|t| t[0]).collect();
    let norm2: f64 = th.iter().map(|t| t.norm_sqr()).sum();
    if norm2.sqrt() < 1e-8 {
        return Err(Error::BranchPoint(node.to_vec()));
    }
    let ((a1, b1), (a2, b2)) = match mode {
        AdaptationMode::F2SpansN2 => ((2, 0), (1, 2)),
        AdaptationMode::F3SpansN2 => ((1, 0), (2, 1)),
    };
    let fit = |r: usize, s: usize| -> (C64, f64) {
        let ks: Vec<C64> = c.kappa.iter().map(|k| k[(r, s)]).collect();
        let h = ks.iter().zip(&th).map(|(k, t)| k * t.conj()).sum::<C64>() / norm2;
        let res = ks.iter().zip(&th).map(|(k, t)| (k - h * t).norm()).fold(0.0, f64::max);
        (h, res)
    };
    let (h1, r1) = fit(a1, b1);
    let (h2, r2) = fit(a2, b2);
    Ok(Torsion { h1, h2, fit_residual: r1.max(r2) })
}

/// Discrete `d/dz-bar H1 = (d_x + i d_y) H1 / 2` over nodes where the stencil fits.
pub fn h1_dbar_residual(adapted: &CurveLift, mode: AdaptationMode) -> Result<f64> {
    let r = adapted.fd_order().radius();
    let h1 = |n: Node| torsion(adapted, n, mode).map(|t| t.h1);
    let mut worst = 0.0f64;
    for n in adapted.interior_nodes(2 * r) {
        // propagate branch points as errors rather than differentiating across them
        for d in 0..2 {
            for k in -(r as isize)..=r as isize {
                let mut m = n;
                m[d] = (m[d] as isize + k) as usize;
                h1(m)?;
            }
        }
        let dx = adapted.derivative_of(n, 0, |m| h1(m).unwrap())?;
        let dy = adapted.derivative_of(n, 1, |m| h1(m).unwrap())?;
        worst = worst.max(((dx + I * dy) * 0.5).norm());
    }
    Ok(worst)
}
