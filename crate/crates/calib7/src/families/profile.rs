//! The profile curve `w (w^2 - 5/4 z^2)^2 = k^5` in the `(z, w)` half plane.
//!
//! Parametrized by `z = k t^(-1/5) (t^2 - 5/4)^(-2/5)`, `w = t z` with real fifth roots, so
//! `z > 0` for every `t > 0`. The two branches `t > sqrt(5)/2` and `0 < t < sqrt(5)/2` are
//! the two connected components; negative `t` gives the mirror image `z -> -z`, which the
//! circle action already covers, and is not stored.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::{Error, Result};

/// `sqrt(5)/2`: the asymptote slope and the singular parameter value.
pub const ASYMPTOTE_SLOPE: f64 = 1.118_033_988_749_895;

/// Admissible parameters stay this far from `0` and the asymptote.
pub const SINGULAR_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `t > sqrt(5)/2`: `w^2 > 5/4 z^2`, the component meeting the axis `z = 0`.
    Outer,
    /// `0 < t < sqrt(5)/2`: `w^2 < 5/4 z^2`.
    Inner,
}

impl Branch {
    pub fn of(t: f64) -> Result<Branch> {
        check_t(t)?;
        if t < 0.0 {
            return Err(Error::Precondition(format!("t = {t} < 0: only t > 0 is stored")));
        }
        Ok(if t > ASYMPTOTE_SLOPE { Branch::Outer } else { Branch::Inner })
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Outer => "outer",
            Branch::Inner => "inner",
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::SingularProfile { t, what: "not finite" });
    }
    if t.abs() < SINGULAR_EPS {
        return Err(Error::SingularProfile { t, what: "t = 0, the w = 0 axis of the cone limit" });
    }
    if (t.abs() - ASYMPTOTE_SLOPE).abs() < SINGULAR_EPS {
        return Err(Error::SingularProfile { t, what: "asymptote w = ±(√5/2) z" });
    }
    Ok(())
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Precondition(format!("k = {k} must be positive")));
    }
    Ok(())
}

/// `(z, w)` at parameter `t`.
pub fn profile_point(t: f64, k: f64) -> Result<(f64, f64)> {
    check_t(t)?;
    check_k(k)?;
    let q = t * t - 1.25;
    let z = k / t.cbrt5() / q.cbrt5().powi(2);
    Ok((z, t * z))
}

/// `(dz/dt, dw/dt)`.
pub fn profile_derivative(t: f64, k: f64) -> Result<(f64, f64)> {
    let (z, _) = profile_point(t, k)?;
    let q = t * t - 1.25;
    let dz = z * (-1.0 / (5.0 * t) - 4.0 * t / (5.0 * q));
    Ok((dz, z + t * dz))
}

trait FifthRoot {
    fn cbrt5(self) -> f64;
}

impl FifthRoot for f64 {
    /// Real fifth root, odd in the argument.
    fn cbrt5(self) -> f64 {
        self.signum() * self.abs().powf(0.2)
    }
}

/// `w (w^2 - 5/4 z^2)^2 - k^5`, divided by `max(1, k^5)`.
pub fn implicit_residual(z: f64, w: f64, k: f64) -> f64 {
    let d = (w - ASYMPTOTE_SLOPE * z) * (w + ASYMPTOTE_SLOPE * z);
    (w * d * d - k.powi(5)) / k.powi(5).max(1.0)
}

/// Solve the implicit equation for `w` at fixed `z >= 0` on the outer branch, where the
/// curve is a graph over `z`; `z = 0` gives the axis point `w = k`. Used to cross-check the
/// parametrization. (The inner branch folds back over `z` at `w = z/2` and is not a graph.)
pub fn w_from_z(z: f64, k: f64) -> Result<f64> {
    check_k(k)?;
    if !(z >= 0.0) {
        return Err(Error::Precondition(format!("z = {z} must be nonnegative")));
    }
    let c2 = 1.25 * z * z;
    let k5 = k.powi(5);
    let f = |w: f64| w * (w * w - c2).powi(2) - k5;
    let df = |w: f64| (w * w - c2).powi(2) + 4.0 * w * w * (w * w - c2);
    // f increases from -k^5 on (sqrt(c2), inf)
    let (mut lo, mut hi) = (c2.sqrt(), c2.sqrt() + k + 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut w = hi;
    for _ in 0..200 {
        let fw = f(w);
        if fw == 0.0 {
            break;
        }
        if fw > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let next = w - fw / df(w);
        w = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub t: f64,
    pub z: f64,
    pub w: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileBranch {
    pub branch: Branch,
    pub t_range: (f64, f64),
    pub samples: Vec<ProfileSample>,
}

/// Sampled profile curve; `k = 0` stores only the degenerate pieces `w = 0` and
/// `w = (√5/2) z`, as sample lists with `t = NaN`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCurve {
    pub k: f64,
    pub branches: Vec<ProfileBranch>,
    pub degenerate: Option<Vec<ProfileSample>>,
}

/// Default sampling ranges: both branches, kept clear of the singular values.
pub fn default_intervals() -> Vec<(f64, f64)> {
    vec![(0.02, ASYMPTOTE_SLOPE - 1e-3), (ASYMPTOTE_SLOPE + 1e-3, 6.0)]
}

impl ProfileCurve {
    /// `n` evenly spaced samples on each interval; every interval must lie inside one branch.
    pub fn sample(k: f64, intervals: &[(f64, f64)], n: usize) -> Result<ProfileCurve> {
        if k == 0.0 {
            let zmax = 4.0;
            let pts = (0..n.max(2))
                .map(|i| {
                    let z = zmax * i as f64 / (n.max(2) - 1) as f64;
                    let w = ASYMPTOTE_SLOPE * z;
                    ProfileSample { t: f64::NAN, z, w, residual: implicit_residual(z, w, 0.0) }
                })
                .collect();
            return Ok(ProfileCurve { k, branches: Vec::new(), degenerate: Some(pts) });
        }
        check_k(k)?;
        if n < 2 {
            return Err(Error::Precondition("need at least 2 samples per branch".into()));
        }
        let mut branches = Vec::new();
        for &(a, b) in intervals {
            let (ba, bb) = (Branch::of(a)?, Branch::of(b)?);
            if ba != bb || !(a < b) {
                return Err(Error::Precondition(format!("interval {a}:{b} crosses a singular value or is empty")));
            }
            let mut samples = Vec::with_capacity(n);
            for i in 0..n {
                let t = a + (b - a) * i as f64 / (n - 1) as f64;
                let (z, w) = profile_point(t, k)?;
                samples.push(ProfileSample { t, z, w, residual: implicit_residual(z, w, k) });
            }
            branches.push(ProfileBranch { branch: ba, t_range: (a, b), samples });
        }
        Ok(ProfileCurve { k, branches, degenerate: None })
    }

    pub fn max_residual(&self) -> f64 {
        self.all().map(|s| s.residual.abs()).fold(0.0, f64::max)
    }

    fn all(&self) -> impl Iterator<Item = &ProfileSample> {
        self.branches.iter().flat_map(|b| b.samples.iter()).chain(self.degenerate.iter().flatten())
    }

    /// Columns `t, z, w, branch, residual`; `t` is empty on the degenerate pieces.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,z,w,branch,residual")?;
        for b in &self.branches {
            for s in &b.samples {
                writeln!(out, "{:.17e},{:.17e},{:.17e},{},{:.6e}", s.t, s.z, s.w, b.branch.name(), s.residual)?;
            }
        }
        if let Some(d) = &self.degenerate {
            for s in d {
                writeln!(out, ",{:.17e},{:.17e},cone,{:.6e}", s.z, s.w, s.residual)?;
            }
            writeln!(out, ",0,0,plane,0")?;
        }
        Ok(())
    }

    /// The curve in the `(z, w)` plane with the asymptotes `w = ±(√5/2) z` dashed.
    pub fn to_svg(&self) -> String {
        let (size, margin) = (480.0, 30.0);
        let lim = 4.0f64;
        let map = |z: f64, w: f64| {
            let sx = margin + (z / lim) * (size - 2.0 * margin);
            let sy = size / 2.0 - (w / lim) * (size / 2.0 - margin);
            (sx, sy)
        };
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (x0, y0) = map(0.0, 0.0);
        let (x1, _) = map(lim, 0.0);
        let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="gray"/>"#);
        let (_, yt) = map(0.0, lim);
        let (_, yb) = map(0.0, -lim);
        let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{yt:.2}" x2="{x0:.2}" y2="{yb:.2}" stroke="gray"/>"#);
        for sign in [1.0, -1.0] {
            let zend = lim / ASYMPTOTE_SLOPE;
            let (ax, ay) = map(zend, sign * lim);
            let _ = writeln!(
                s,
                r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{ax:.2}" y2="{ay:.2}" stroke="steelblue" stroke-dasharray="6,4"/>"#
            );
        }
        for b in &self.branches {
            let pts: Vec<String> = b
                .samples
                .iter()
                .filter(|p| p.z <= lim && p.w.abs() <= lim)
                .map(|p| {
                    let (x, y) = map(p.z, p.w);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let _ = writeln!(s, r#"<text x="{:.0}" y="{:.0}" font-size="12">k = {}</text>"#, size - 90.0, margin, self.k);
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implicit_equation_holds() {
        let (z, w) = profile_point(2.0, 1.0).unwrap();
        assert!(implicit_residual(z, w, 1.0).abs() < 1e-12);
        for k in [0.5, 1.0, 2.0] {
            for t in [0.01, 0.3, 1.0, 1.1, 1.2, 3.0, 50.0] {
                let (z, w) = profile_point(t, k).unwrap();
                assert!(z > 0.0);
                assert!(implicit_residual(z, w, k).abs() < 1e-12, "t {t} k {k}");
            }
        }
    }

    #[test]
    fn limits() {
        let (z, w) = profile_point(1e6, 1.0).unwrap();
        assert!(z < 2e-6 && (w - 1.0).abs() < 1e-6);
        assert_eq!(w_from_z(0.0, 1.0).unwrap(), 1.0);
        let (z, w) = profile_point(ASYMPTOTE_SLOPE + 1e-4, 1.0).unwrap();
        assert!((w / z - ASYMPTOTE_SLOPE).abs() < 1e-4);
    }

    #[test]
    fn singular_parameters() {
        assert!(matches!(profile_point(0.0, 1.0), Err(Error::SingularProfile { .. })));
        match profile_point(ASYMPTOTE_SLOPE, 1.0) {
            Err(Error::SingularProfile { what, .. }) => assert!(what.contains("asymptote")),
            other => panic!("{other:?}"),
        }
        assert!(profile_point(1.0, 0.0).is_err());
    }

    #[test]
    fn newton_agrees_with_parametrization() {
        for t in [1.2, 1.5, 4.0, 100.0] {
            let (z, w) = profile_point(t, 1.3).unwrap();
            let wn = w_from_z(z, 1.3).unwrap();
            assert!((wn - w).abs() < 1e-10 * w.max(1.0), "t {t}: {wn} vs {w}");
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let (t, k, h) = (1.7, 1.0, 1e-5);
        let (dz, dw) = profile_derivative(t, k).unwrap();
        let (zp, wp) = profile_point(t + h, k).unwrap();
        let (zm, wm) = profile_point(t - h, k).unwrap();
        assert!((dz - (zp - zm) / (2.0 * h)).abs() < 1e-8);
        assert!((dw - (wp - wm) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn sampling_and_outputs() {
        let c = ProfileCurve::sample(1.0, &default_intervals(), 500).unwrap();
        assert_eq!(c.branches.len(), 2);
        assert!(c.max_residual() < 1e-10);
        let mut a = Vec::new();
        let mut b = Vec::new();
        c.write_csv(&mut a).unwrap();
        ProfileCurve::sample(1.0, &default_intervals(), 500).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        assert!(c.to_svg().contains("stroke-dasharray"));
        assert!(ProfileCurve::sample(1.0, &[(1.0, 2.0)], 10).is_err());
        let d = ProfileCurve::sample(0.0, &[], 10).unwrap();
        assert!(d.branches.is_empty() && d.max_residual() == 0.0);
    }
}
