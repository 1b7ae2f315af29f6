//! First-order invariants of CR-holomorphic curves.
//!
//! Along a CR-holomorphic lift `(theta1, theta3, kappa21, kappa23) = (A1, A2, B1, B2) dz`.
//! Under `U in U(2)`: `A -> U A`, `B -> det(conj U) conj(U) B`, so `a = |A|^2`,
//! `b = |B|^2` and `|B^T A|` do not depend on the frame.
//!
//! Holomorphy of `A` and `B` is a statement about a frame, not about the curve:
//! [`holomorphy_residual`] tests the plain `d/dz-bar` of the components, while
//! [`covariant_holomorphy_residual`] tests `d/dz-bar V + M(d/dz-bar) V = 0` with the
//! connection block `M` built from `kappa`, which holds in every frame.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use crate::g2::{CurveLift, FdOrder, Node};
use crate::linalg::unitary_residual;
use crate::s6::{su3_coframe, su3_from_g2, su3_to_g2};
use crate::{CMatrix3, Error, Result, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Orientation of the parameter plane relative to the CR complex structure:
/// `V(d_y) = i V(d_x)` for positive, `-i V(d_x)` for negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// `A`, `B` and the connection block on a rectangular grid of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ABData {
    pub shape: [usize; 2],
    pub step: f64,
    pub fd_order: FdOrder,
    /// Lift nodes the samples came from (empty for synthetic data).
    pub source_nodes: Vec<Node>,
    pub a: Vec<Vector2<C64>>,
    pub b: Vec<Vector2<C64>>,
    /// `M(d_x)`, `M(d_y)` acting on `V = (A1, A2, B1, B2)`.
    pub connection: Vec<[Matrix4<C64>; 2]>,
    pub orientation: Orientation,
    /// Largest `|V(d_y) -+ i V(d_x)|` relative to `max |V(d_x)|`.
    pub cr_fit_residual: f64,
}

/// Default bound on [`ABData::cr_fit_residual`] accepted by [`extract_ab`].
pub const DZ_FIT_TOL: f64 = 1e-4;

fn v_of(theta: &crate::CVector3, kappa: &CMatrix3) -> Vector4<C64> {
    Vector4::new(theta[0], theta[2], kappa[(1, 0)], kappa[(1, 2)])
}

fn m_of(k: &CMatrix3) -> Matrix4<C64> {
    let z = C64::new(0.0, 0.0);
    let kk = |i: usize, j: usize| k[(i - 1, j - 1)];
    Matrix4::new(
        kk(1, 1), kk(1, 3), z, z,
        kk(3, 1), kk(3, 3), z, z,
        z, z, kk(2, 2) - kk(1, 1), -kk(3, 1),
        z, z, -kk(1, 3), kk(2, 2) - kk(3, 3),
    )
}

impl ABData {
    /// Synthetic data with zero connection.
    pub fn from_fields(shape: [usize; 2], step: f64, a: Vec<Vector2<C64>>, b: Vec<Vector2<C64>>) -> Result<Self> {
        let n = shape[0] * shape[1];
        if a.len() != n || b.len() != n {
            return Err(Error::Precondition(format!("expected {n} samples, got {} and {}", a.len(), b.len())));
        }
        Ok(ABData {
            shape,
            step,
            fd_order: FdOrder::Second,
            source_nodes: Vec::new(),
            a,
            b,
            connection: vec![[Matrix4::zeros(); 2]; n],
            orientation: Orientation::Positive,
            cr_fit_residual: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    fn index(&self, n: Node) -> usize {
        n[0] * self.shape[1] + n[1]
    }

    fn v(&self, k: usize) -> Vector4<C64> {
        Vector4::new(self.a[k][0], self.a[k][1], self.b[k][0], self.b[k][1])
    }
}

/// `V(d_x)`, `V(d_y)` and `M(d_x)`, `M(d_y)` at one lift node.
pub fn ab_at(lift: &CurveLift, node: Node) -> Result<([Vector4<C64>; 2], [Matrix4<C64>; 2])> {
    let c = su3_coframe(lift, node)?;
    Ok((
        [v_of(&c.theta[0], &c.kappa[0]), v_of(&c.theta[1], &c.kappa[1])],
        [m_of(&c.kappa[0]), m_of(&c.kappa[1])],
    ))
}

/// Read `A`, `B` off the `d_x` components at every interior node of a CR-holomorphic lift.
///
/// The orientation is the sign for which `V(d_y) = +-i V(d_x)` fits best. Fails with a
/// precondition error when `V` vanishes identically or the relative misfit exceeds `tol`.
pub fn extract_ab(lift: &CurveLift, tol: f64) -> Result<ABData> {
    if lift.dim() != 2 {
        return Err(Error::LiftDimension { expected: 2 });
    }
    let r = lift.fd_order().radius();
    let [nx, ny] = lift.shape();
    if nx <= 2 * r || ny <= 2 * r {
        return Err(Error::Precondition("grid too small for the stencil".into()));
    }
    let nodes = lift.interior_nodes(r);
    let raw: Vec<_> = nodes.par_iter().map(|n| ab_at(lift, *n)).collect::<Result<_>>()?;
    let scale = raw.iter().map(|(v, _)| v[0].norm().max(v[1].norm())).fold(0.0, f64::max);
    if scale < 1e-12 {
        return Err(Error::Precondition("degenerate: A and B vanish (not an immersed CR curve)".into()));
    }
    let misfit = |s: f64| {
        raw.iter().map(|(v, _)| (v[1] - v[0] * (I * s)).norm()).fold(0.0, f64::max) / scale
    };
    let (pos, neg) = (misfit(1.0), misfit(-1.0));
    let (orientation, fit) = if pos <= neg { (Orientation::Positive, pos) } else { (Orientation::Negative, neg) };
    if !(fit <= tol) {
        return Err(Error::Precondition(format!("not a CR-holomorphic curve: dz fit residual {fit:.3e}")));
    }
    Ok(ABData {
        shape: [nx - 2 * r, ny - 2 * r],
        step: lift.step(),
        fd_order: lift.fd_order(),
        source_nodes: nodes,
        a: raw.iter().map(|(v, _)| Vector2::new(v[0][0], v[0][1])).collect(),
        b: raw.iter().map(|(v, _)| Vector2::new(v[0][2], v[0][3])).collect(),
        connection: raw.iter().map(|(_, m)| *m).collect(),
        orientation,
        cr_fit_residual: fit,
    })
}

fn gauge_block(u: &Matrix2<C64>) -> Matrix4<C64> {
    let ub = u.map(|x| x.conj());
    let d = ub.determinant();
    let mut g = Matrix4::zeros();
    g.fixed_view_mut::<2, 2>(0, 0).copy_from(u);
    g.fixed_view_mut::<2, 2>(2, 2).copy_from(&(ub * d));
    g
}

/// Constant change of coframe: `A -> U A`, `B -> det(conj U) conj(U) B`; the connection
/// block is conjugated accordingly.
pub fn gauge_transform(ab: &ABData, u: &Matrix2<C64>) -> Result<ABData> {
    let res = unitary_residual(u);
    if res > 1e-12 {
        return Err(Error::NotUnitary(res));
    }
    let g = gauge_block(u);
    let gi = g.adjoint();
    let mut out = ab.clone();
    for k in 0..ab.len() {
        let v = g * ab.v(k);
        out.a[k] = Vector2::new(v[0], v[1]);
        out.b[k] = Vector2::new(v[2], v[3]);
        out.connection[k] = [g * ab.connection[k][0] * gi, g * ab.connection[k][1] * gi];
    }
    Ok(out)
}

/// Re-gauge every frame of a lift by `f -> f U(sigma)` with `U` in SU(3) (u and hence the
/// curve in S^6 are untouched).
pub fn regauge_lift<F>(lift: &CurveLift, u: F) -> Result<CurveLift>
where
    F: Fn([f64; 2]) -> CMatrix3 + Sync,
{
    let frames = lift
        .nodes()
        .par_iter()
        .map(|n| su3_to_g2(&su3_from_g2(lift.frame(*n)).rotate(&u(lift.param(*n)))))
        .collect::<Result<Vec<_>>>()?;
    lift.with_frames(frames)
}

/// Which case of the vanishing pattern a curve falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    #[serde(rename = "binormal-lift")]
    BinormalLift,
    #[serde(rename = "null-torsion-binormal")]
    NullTorsionBinormal,
    #[serde(rename = "fiber-CP2")]
    FiberCp2,
    #[serde(rename = "generic")]
    Generic,
    #[serde(rename = "degenerate-O2-branch")]
    DegenerateO2Branch,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::BinormalLift => "binormal-lift",
            Classification::NullTorsionBinormal => "null-torsion-binormal",
            Classification::FiberCp2 => "fiber-CP2",
            Classification::Generic => "generic",
            Classification::DegenerateO2Branch => "degenerate-O2-branch",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeInvariants {
    pub a: f64,
    pub b: f64,
    pub rho_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CRInvariants {
    pub nodes: Vec<NodeInvariants>,
    pub a_max: f64,
    pub b_max: f64,
    pub rho_max: f64,
    /// Relative threshold as configured.
    pub tau_rel: f64,
    /// Absolute threshold `tau_rel * max(a_max, b_max, 1)`.
    pub tau: f64,
    pub classification: Classification,
}

pub const DEFAULT_TAU_REL: f64 = 1e-6;

pub fn invariants_of(ab: &ABData) -> CRInvariants {
    invariants_with(ab, DEFAULT_TAU_REL)
}

/// Pointwise `a, b, |B^T A|` and the component label.
///
/// A curve with `a = 0` but `b != 0` is a fiber; both zero is the degenerate branch;
/// otherwise `b = 0` and then `rho = 0` select the two binormal cases.
/// Each test compares the node maximum against `tau`.
pub fn invariants_with(ab: &ABData, tau_rel: f64) -> CRInvariants {
    let nodes: Vec<NodeInvariants> = (0..ab.len())
        .map(|k| NodeInvariants {
            a: ab.a[k].norm_squared(),
            b: ab.b[k].norm_squared(),
            rho_abs: (ab.b[k][0] * ab.a[k][0] + ab.b[k][1] * ab.a[k][1]).norm(),
        })
        .collect();
    let mx = |f: fn(&NodeInvariants) -> f64| nodes.iter().map(f).fold(0.0, f64::max);
    let (a_max, b_max, rho_max) = (mx(|n| n.a), mx(|n| n.b), mx(|n| n.rho_abs));
    let tau = tau_rel * a_max.max(b_max).max(1.0);
    let classification = if a_max < tau && b_max >= tau {
        Classification::FiberCp2
    } else if a_max < tau {
        Classification::DegenerateO2Branch
    } else if b_max < tau {
        Classification::NullTorsionBinormal
    } else if rho_max < tau {
        Classification::BinormalLift
    } else {
        Classification::Generic
    };
    CRInvariants { nodes, a_max, b_max, rho_max, tau_rel, tau, classification }
}

/// Phase jumps larger than this between neighbouring samples are treated as a gauge seam.
pub const PHASE_JUMP: f64 = std::f64::consts::FRAC_PI_2;

fn check_phase_continuity(ab: &ABData) -> Result<()> {
    let [nx, ny] = ab.shape;
    let scale = (0..ab.len()).map(|k| ab.v(k).camax()).fold(0.0, f64::max);
    let floor = 1e-6 * scale.max(f64::MIN_POSITIVE);
    for i in 0..nx {
        for j in 0..ny {
            let v = ab.v(ab.index([i, j]));
            for (di, dj) in [(1, 0), (0, 1)] {
                if i + di >= nx || j + dj >= ny {
                    continue;
                }
                let w = ab.v(ab.index([i + di, j + dj]));
                for c in 0..4 {
                    if v[c].norm() > floor && w[c].norm() > floor {
                        let jump = (w[c] / v[c]).arg().abs();
                        if jump > PHASE_JUMP {
                            return Err(Error::GaugeDiscontinuity { a: vec![i, j], b: vec![i + di, j + dj], jump });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn dbar_field(ab: &ABData, covariant: bool) -> Result<f64> {
    check_phase_continuity(ab)?;
    let r = ab.fd_order.radius();
    let [nx, ny] = ab.shape;
    let s = ab.orientation.sign();
    let mut worst = 0.0f64;
    for i in r..nx.saturating_sub(r) {
        for j in r..ny.saturating_sub(r) {
            let line = |d: usize| -> Vec<Vector4<C64>> {
                (-(r as isize)..=r as isize)
                    .map(|k| {
                        let n = if d == 0 { [(i as isize + k) as usize, j] } else { [i, (j as isize + k) as usize] };
                        ab.v(ab.index(n))
                    })
                    .collect()
            };
            let dx = ab.fd_order.diff(&line(0), ab.step);
            let dy = ab.fd_order.diff(&line(1), ab.step);
            let mut res = (dx + dy * (I * s)) * C64::new(0.5, 0.0);
            if covariant {
                let k = ab.index([i, j]);
                let [mx, my] = ab.connection[k];
                res += (mx + my * (I * s)) * C64::new(0.5, 0.0) * ab.v(k);
            }
            worst = worst.max(res.camax());
        }
    }
    Ok(worst)
}

/// Max discrete `d/dz-bar` of the components of `A` and `B` over nodes where the stencil fits.
/// Gauge dependent; fails on a phase seam.
pub fn holomorphy_residual(ab: &ABData) -> Result<f64> {
    dbar_field(ab, false)
}

/// Max of `d/dz-bar V + M(d/dz-bar) V`: frame independent.
pub fn covariant_holomorphy_residual(ab: &ABData) -> Result<f64> {
    dbar_field(ab, true)
}
