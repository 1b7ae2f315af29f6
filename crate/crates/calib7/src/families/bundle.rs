//! Surface bundles `x = w(t) u + 2 z(t) Im(e^{i angle} f3)` over an adapted base surface, the
//! explicit verification framing `h1..h4`, and the orbit-invariant implicit equation.
//!
//! In frame coordinates `2 Im(e^{i angle} f3) = cos(angle) e3 - sin(angle) e4`, so every
//! sample is `E(sigma) v(t, angle)` with `v = w e5 + z (cos e3 - sin e4)` and all four
//! tangents follow from `dE` and the profile derivative.

use rayon::prelude::*;
use serde::Serialize;

use super::profile::{profile_derivative, profile_point, Branch, ASYMPTOTE_SLOPE};
use super::round::RoundS2;
use crate::cr::{DerivativeSource, Fourfold, FourfoldSample};
use crate::g2::{CurveLift, G2Frame};
use crate::linalg::{im7, re7};
use crate::s6::{coframe_from_connection, su3_from_g2};
use crate::{basis, CMatrix3, Error, Matrix7, Result, Vector7, C64};

/// A base point with its frame and the two partial derivatives of the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSample {
    pub sigma: [f64; 2],
    pub frame: Matrix7,
    pub partials: [Matrix7; 2],
}

/// Source of base samples for [`surface_bundle`].
pub trait BundleBase: Sync {
    fn samples(&self) -> Result<Vec<BaseSample>>;
    /// Whether the partials are exact (rather than finite differences with the given step).
    fn derivatives(&self) -> DerivativeSource;
}

/// Product grid over the round sphere, with analytic partials.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundS2Grid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl RoundS2Grid {
    /// `n x m` nodes on `[-a, a] x [-b, b]`.
    pub fn centered(n: usize, m: usize, a: f64, b: f64) -> Self {
        let lin = |n: usize, r: f64| (0..n).map(|i| -r + 2.0 * r * i as f64 / (n.max(2) - 1) as f64).collect();
        RoundS2Grid { alphas: lin(n, a), betas: lin(m, b) }
    }
}

impl BundleBase for RoundS2Grid {
    fn samples(&self) -> Result<Vec<BaseSample>> {
        if let Some(b) = self.betas.iter().find(|b| b.abs() > std::f64::consts::FRAC_PI_2 - super::round::POLE_TOL) {
            return Err(Error::Precondition(format!("latitude {b} reaches a coordinate pole")));
        }
        let mut out = Vec::with_capacity(self.alphas.len() * self.betas.len());
        for &a in &self.alphas {
            for &b in &self.betas {
                let (frame, partials) = RoundS2.partials(a, b);
                out.push(BaseSample { sigma: [a, b], frame, partials });
            }
        }
        Ok(out)
    }

    fn derivatives(&self) -> DerivativeSource {
        DerivativeSource::Analytic
    }
}

impl BundleBase for CurveLift {
    fn samples(&self) -> Result<Vec<BaseSample>> {
        if self.dim() != 2 {
            return Err(Error::LiftDimension { expected: 2 });
        }
        self.interior_nodes(self.fd_order().radius())
            .into_iter()
            .map(|n| {
                Ok(BaseSample {
                    sigma: self.param(n),
                    frame: *self.frame(n).matrix(),
                    partials: [self.derivative(n, 0)?, self.derivative(n, 1)?],
                })
            })
            .collect()
    }

    fn derivatives(&self) -> DerivativeSource {
        DerivativeSource::FiniteDifference { step: self.step() }
    }
}

/// Largest `|theta2|, |theta3|, |kappa31|` relative to `|theta1|` at a base sample: zero for
/// a base with `f1` tangent and `f3` spanning the second normal.
pub fn base_adaptation_residual(s: &BaseSample) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for p in &s.partials {
        let (th, ka) = coframe_from_connection(&(s.frame.transpose() * p));
        worst = worst.max(th[1].norm()).max(th[2].norm()).max(ka[(2, 0)].norm());
        scale = scale.max(th[0].norm());
    }
    if scale < 1e-10 {
        return Err(Error::Precondition(format!("base is not immersed at sigma = {:?}", s.sigma)));
    }
    Ok(worst / scale)
}

/// Adaptation tolerance for analytic and for finite difference bases.
pub const ADAPT_TOL_ANALYTIC: f64 = 1e-10;
pub const ADAPT_TOL_FD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundlePiece {
    /// Profile branch `t > sqrt(5)/2`.
    Outer,
    /// Profile branch `0 < t < sqrt(5)/2`.
    Inner,
    /// `k = 0`: the round cone over `w = (√5/2) z`.
    Cone,
    /// `k = 0`: the second normal planes (`w = 0`).
    Plane,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleComponent {
    pub piece: BundlePiece,
    pub fourfold: Fourfold,
    /// `(w, z)` of each sample recovered from `x` by projecting on `u` and its complement.
    pub cylindrical: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceBundle {
    pub k: f64,
    pub components: Vec<BundleComponent>,
}

fn fiber_vector(w: f64, z: f64, angle: f64) -> Vector7 {
    let (s, c) = angle.sin_cos();
    basis(5) * w + (basis(3) * c - basis(4) * s) * z
}

/// Sample the bundle over `base` for `t` in `t_grid` and fiber angles `angles`.
///
/// For `k > 0` the samples split into the two profile components. For `k = 0` the
/// entries of `t_grid` are radii `s > 0` and the output holds the cone
/// `x = s ((√5/2) u + 2 Im(e^{i angle} f3))` and the plane piece `x = 2 s Im(e^{i angle} f3)`.
pub fn surface_bundle(base: &dyn BundleBase, k: f64, t_grid: &[f64], angles: &[f64]) -> Result<SurfaceBundle> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::Precondition(format!("k = {k} must be nonnegative")));
    }
    let samples = base.samples()?;
    let tol = match base.derivatives() {
        DerivativeSource::Analytic => ADAPT_TOL_ANALYTIC,
        DerivativeSource::FiniteDifference { .. } => ADAPT_TOL_FD,
    };
    for s in &samples {
        let r = base_adaptation_residual(s)?;
        if r > tol {
            return Err(Error::Precondition(format!(
                "base is not adapted with f3 spanning the second normal at sigma = {:?} (residual {r:.3e})",
                s.sigma
            )));
        }
    }
    // (piece, t or s) -> (w, z, dw, dz)
    let mut groups: Vec<(BundlePiece, Vec<(f64, [f64; 4])>)> = Vec::new();
    let mut push = |p: BundlePiece, t: f64, v: [f64; 4]| match groups.iter_mut().find(|g| g.0 == p) {
        Some(g) => g.1.push((t, v)),
        None => groups.push((p, vec![(t, v)])),
    };
    for &t in t_grid {
        if k > 0.0 {
            let piece = match Branch::of(t)? {
                Branch::Outer => BundlePiece::Outer,
                Branch::Inner => BundlePiece::Inner,
            };
            let (z, w) = profile_point(t, k)?;
            let (dz, dw) = profile_derivative(t, k)?;
            push(piece, t, [w, z, dw, dz]);
        } else {
            if !(t > 0.0) {
                return Err(Error::Precondition(format!("cone radius {t} must be positive")));
            }
            push(BundlePiece::Cone, t, [ASYMPTOTE_SLOPE * t, t, ASYMPTOTE_SLOPE, 1.0]);
            push(BundlePiece::Plane, t, [0.0, t, 0.0, 1.0]);
        }
    }
    let derivatives = base.derivatives();
    let param = if k > 0.0 { "t" } else { "s" };
    let components = groups
        .into_iter()
        .map(|(piece, ts)| {
            let out: Vec<(FourfoldSample, [f64; 2])> = samples
                .par_iter()
                .flat_map_iter(|b| {
                    let ts = &ts;
                    ts.iter().flat_map(move |&(t, [w, z, dw, dz])| {
                        angles.iter().map(move |&ang| {
                            let v = fiber_vector(w, z, ang);
                            let point = b.frame * v;
                            let (s, c) = ang.sin_cos();
                            let tangents = [
                                b.partials[0] * v,
                                b.partials[1] * v,
                                b.frame * fiber_vector(dw, dz, ang),
                                b.frame * ((basis(3) * -s - basis(4) * c) * z),
                            ];
                            let u = b.frame.column(4).into_owned();
                            let wc = point.dot(&u);
                            let zc = (point - u * wc).norm();
                            (FourfoldSample { params: [b.sigma[0], b.sigma[1], t, ang], point, tangents }, [wc, zc])
                        })
                    })
                })
                .collect();
            let (samples, cylindrical): (Vec<_>, Vec<_>) = out.into_iter().unzip();
            BundleComponent {
                piece,
                fourfold: Fourfold {
                    param_names: ["sigma1", "sigma2", param, "angle"].map(String::from),
                    samples,
                    derivatives: derivatives.clone(),
                    flags: Vec::new(),
                },
                cylindrical,
            }
        })
        .collect();
    Ok(SurfaceBundle { k, components })
}

/// The bundle over the round sphere as a plain map, for finite difference checks.
pub fn round_bundle_map(k: f64, p: [f64; 4]) -> Result<Vector7> {
    let (z, w) = profile_point(p[2], k)?;
    Ok(RoundS2.frame(p[0], p[1]) * fiber_vector(w, z, p[3]))
}

/// The framing `h1..h4` of the bundle tangent space at base frame `frame`, profile
/// parameter `t` and fiber angle `angle` (the circle action is the SU(3) gauge
/// `diag(1, e^{-i angle}, e^{i angle})`). Only `w/z` enters, so `k` is irrelevant.
pub fn verification_framing(frame: &G2Frame, t: f64, angle: f64) -> Result<[Vector7; 4]> {
    let (z, w) = profile_point(t, 1.0)?;
    let one = C64::new(1.0, 0.0);
    let g = CMatrix3::from_diagonal(&nalgebra::Vector3::new(
        one,
        C64::from_polar(1.0, -angle),
        C64::from_polar(1.0, angle),
    ));
    let s = su3_from_g2(frame).rotate(&g);
    let [f1, f2, f3] = &s.f;
    let d = z * z + 4.0 * w * w;
    let r = d.sqrt();
    let h1 = im7(f3) * (2.0 * (z * z - 4.0 * w * w) / d) - s.u * (4.0 * z * w / d);
    let h2 = -re7(f3) * 2.0;
    let h3 = (im7(f1) * (4.0 * w) + im7(f2) * (2.0 * z)) / r;
    let h4 = (re7(f1) * (4.0 * w) - re7(f2) * (2.0 * z)) / r;
    Ok([h1, h2, h3, h4])
}

/// `s (s^2 - 5/4 r^2)^2 - k^5` with `s = |(x5, x6, x7)|`, `r = |(x1, .., x4)|`, divided by
/// `max(1, k^5)`: the implicit equation extended to the SU(2) orbit sweep.
pub fn hl_implicit_residual(x: &Vector7, k: f64) -> f64 {
    let r4 = x.rows(0, 4).norm();
    let s = x.rows(4, 3).norm();
    super::profile::implicit_residual(r4, s, k)
}

/// The curve of second normal planes `e3 ^ e4` of a base lift, reframed by
/// `(e1, e2, e3) -> (e3, e4, e1)` so that `e5` is kept.
pub fn n2_plane_lift(base: &CurveLift) -> Result<CurveLift> {
    let frames = base
        .frames()
        .par_iter()
        .map(|f| G2Frame::from_triple(&f.e(3), &f.e(4), &f.e(1)))
        .collect::<Result<Vec<_>>>()?;
    base.with_frames(frames)
}
