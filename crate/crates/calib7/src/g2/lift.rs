use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::algebra::g2_relation_residuals;
use super::frame::G2Frame;
use crate::linalg::max_abs;
use crate::{Error, Matrix7, Report, Result};

/// Grid node `[i, j]`; curves use `j = 0`.
pub type Node = [usize; 2];

/// Central difference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    /// Half width of the first derivative stencil.
    pub fn radius(self) -> usize {
        match self {
            FdOrder::Second => 1,
            FdOrder::Fourth => 2,
        }
    }

    /// Weights for offsets `1..=radius` of the antisymmetric first derivative stencil.
    fn weights(self) -> &'static [f64] {
        match self {
            FdOrder::Second => &[0.5],
            FdOrder::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
        }
    }

    /// Central first derivative from samples at offsets `-r..=r` (index `r` is the centre).
    pub fn diff<T: FdValue>(self, samples: &[T], h: f64) -> T {
        let r = self.radius();
        let w = self.weights();
        let mut acc = (samples[r + 1] - samples[r - 1]).scaled(w[0] / h);
        for k in 2..=r {
            acc = acc + (samples[r + k] - samples[r - k]).scaled(w[k - 1] / h);
        }
        acc
    }
}

impl TryFrom<u8> for FdOrder {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            2 => Ok(FdOrder::Second),
            4 => Ok(FdOrder::Fourth),
            other => Err(format!("fd_order must be 2 or 4, got {other}")),
        }
    }
}

impl From<FdOrder> for u8 {
    fn from(o: FdOrder) -> u8 {
        match o {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }
}

/// Values that finite difference stencils can combine.
pub trait FdValue: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> {
    fn scaled(self, s: f64) -> Self;
}

impl FdValue for f64 {
    fn scaled(self, s: f64) -> f64 {
        self * s
    }
}

impl FdValue for crate::C64 {
    fn scaled(self, s: f64) -> Self {
        self * s
    }
}

impl<T, const R: usize, const C: usize> FdValue for nalgebra::SMatrix<T, R, C>
where
    T: nalgebra::ComplexField<RealField = f64> + Copy,
{
    fn scaled(self, s: f64) -> Self {
        self.map(|x| x * T::from_real(s))
    }
}

/// A frame field sampled on a uniform 1D or 2D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveLift {
    dim: usize,
    shape: [usize; 2],
    origin: [f64; 2],
    step: f64,
    fd_order: FdOrder,
    frames: Vec<G2Frame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub shape: [usize; 2],
    pub origin: [f64; 2],
}

/// On-disk form of a [`CurveLift`]. Frames are 7x7 row-major with column `c` equal to `e_{c+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub step: f64,
    pub fd_order: FdOrder,
    pub frames: Vec<Vec<f64>>,
}

/// Tolerance on frames read from or written to JSON.
pub const JSON_FRAME_TOL: f64 = 1e-8;

impl CurveLift {
    fn check(self) -> Result<Self> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::MalformedLift(format!("step must be positive, got {}", self.step)));
        }
        let n = self.shape[0] * self.shape[1];
        if n == 0 || self.frames.len() != n {
            return Err(Error::MalformedLift(format!(
                "grid {:?} needs {} frames, got {}",
                &self.shape[..self.dim],
                n,
                self.frames.len()
            )));
        }
        Ok(self)
    }

    pub fn curve(origin: f64, step: f64, fd_order: FdOrder, frames: Vec<G2Frame>) -> Result<Self> {
        let n = frames.len();
        CurveLift { dim: 1, shape: [n, 1], origin: [origin, 0.0], step, fd_order, frames }.check()
    }

    /// Frames ordered with node `[i, j]` at index `i * ny + j`.
    pub fn surface(shape: [usize; 2], origin: [f64; 2], step: f64, fd_order: FdOrder, frames: Vec<G2Frame>) -> Result<Self> {
        CurveLift { dim: 2, shape, origin, step, fd_order, frames }.check()
    }

    /// Sample `f` on the grid (in parallel; the result does not depend on scheduling).
    pub fn surface_from_fn<F>(shape: [usize; 2], origin: [f64; 2], step: f64, fd_order: FdOrder, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<G2Frame> + Sync,
    {
        let frames: Vec<G2Frame> = (0..shape[0] * shape[1])
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / shape[1], k % shape[1]);
                f(origin[0] + i as f64 * step, origin[1] + j as f64 * step)
            })
            .collect::<Result<_>>()?;
        CurveLift::surface(shape, origin, step, fd_order, frames)
    }

    pub fn curve_from_fn<F>(n: usize, origin: f64, step: f64, fd_order: FdOrder, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<G2Frame> + Sync,
    {
        let frames: Vec<G2Frame> =
            (0..n).into_par_iter().map(|i| f(origin + i as f64 * step)).collect::<Result<_>>()?;
        CurveLift::curve(origin, step, fd_order, frames)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn fd_order(&self) -> FdOrder {
        self.fd_order
    }

    pub fn frames(&self) -> &[G2Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn index(&self, node: Node) -> usize {
        node[0] * self.shape[1] + node[1]
    }

    pub fn node(&self, index: usize) -> Node {
        [index / self.shape[1], index % self.shape[1]]
    }

    pub fn frame(&self, node: Node) -> &G2Frame {
        &self.frames[self.index(node)]
    }

    /// Parameter values of a node.
    pub fn param(&self, node: Node) -> [f64; 2] {
        [self.origin[0] + node[0] as f64 * self.step, self.origin[1] + node[1] as f64 * self.step]
    }

    pub fn nodes(&self) -> Vec<Node> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Nodes at least `margin` away from the boundary in every grid direction.
    pub fn interior_nodes(&self, margin: usize) -> Vec<Node> {
        self.nodes().into_iter().filter(|n| self.has_margin(*n, margin)).collect()
    }

    pub fn has_margin(&self, node: Node, margin: usize) -> bool {
        (0..self.dim).all(|d| node[d] >= margin && node[d] + margin < self.shape[d])
    }

    /// Same grid with new frames.
    pub fn with_frames(&self, frames: Vec<G2Frame>) -> Result<Self> {
        CurveLift { frames, ..self.clone() }.check()
    }

    pub fn with_step(&self, step: f64) -> Result<Self> {
        CurveLift { step, ..self.clone() }.check()
    }

    fn shifted(&self, node: Node, dir: usize, k: isize) -> Node {
        let mut n = node;
        n[dir] = (n[dir] as isize + k) as usize;
        n
    }

    /// Central difference of the frame matrix along grid direction `dir`.
    pub fn derivative(&self, node: Node, dir: usize) -> Result<Matrix7> {
        self.derivative_of(node, dir, |n| *self.frame(n).matrix())
    }

    /// Central difference along `dir` of any per-node quantity.
    pub fn derivative_of<T, F>(&self, node: Node, dir: usize, f: F) -> Result<T>
    where
        F: Fn(Node) -> T,
        T: FdValue,
    {
        let r = self.fd_order.radius();
        if dir >= self.dim || !self.has_margin(node, r) {
            return Err(Error::BoundaryNode(node[..self.dim].to_vec()));
        }
        let samples: Vec<T> = (-(r as isize)..=r as isize).map(|k| f(self.shifted(node, dir, k))).collect();
        Ok(self.fd_order.diff(&samples, self.step))
    }

    /// `omega(d_s) = E^T dE/ds` for each grid direction `s`.
    pub fn maurer_cartan(&self, node: Node) -> Result<Vec<Matrix7>> {
        let e = self.frame(node).matrix();
        (0..self.dim).map(|d| Ok(e.transpose() * self.derivative(node, d)?)).collect()
    }

    /// Max over interior nodes of the skewness and g2-relation residuals of the
    /// Maurer-Cartan matrices.
    pub fn maurer_cartan_report(&self, tol: f64) -> Report {
        let nodes = self.interior_nodes(self.fd_order.radius());
        let vals: Vec<(f64, f64)> = nodes
            .par_iter()
            .map(|n| {
                let mc = self.maurer_cartan(*n).expect("interior node");
                mc.iter().fold((0.0f64, 0.0f64), |(s, g), w| {
                    let rel = g2_relation_residuals(w).iter().fold(0.0f64, |a, r| a.max(r.abs()));
                    (s.max(max_abs(&(w + w.transpose()))), g.max(rel))
                })
            })
            .collect();
        let combined: Vec<f64> = vals.iter().map(|(s, g)| s.max(*g)).collect();
        let skew = vals.iter().map(|v| v.0).fold(0.0, f64::max);
        let rel = vals.iter().map(|v| v.1).fold(0.0, f64::max);
        Report::from_values("maurer-cartan", tol, &combined, self.len() - nodes.len())
            .with_metric("skew_max", skew)
            .with_metric("g2_relation_max", rel)
            .with_param("step", self.step)
    }

    /// Integrability `d omega + omega ^ omega = 0` on a 2D lift, evaluated as
    /// `d_x omega_y - d_y omega_x + [omega_x, omega_y]` with nested central differences.
    pub fn structure_equation_residual(&self, node: Node) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::LiftDimension { expected: 2 });
        }
        let r = self.fd_order.radius();
        if !self.has_margin(node, 2 * r) {
            return Err(Error::BoundaryNode(node.to_vec()));
        }
        let mc = |n: Node| self.maurer_cartan(n).expect("margin checked");
        let dx_wy = self.derivative_of(node, 0, |n| mc(n)[1])?;
        let dy_wx = self.derivative_of(node, 1, |n| mc(n)[0])?;
        let w = mc(node);
        Ok(max_abs(&(dx_wy - dy_wx + w[0] * w[1] - w[1] * w[0])))
    }

    pub fn structure_equation_report(&self, tol: f64) -> Result<Report> {
        let r = self.fd_order.radius();
        let nodes = self.interior_nodes(2 * r);
        let vals: Vec<f64> = nodes.par_iter().map(|n| self.structure_equation_residual(*n)).collect::<Result<_>>()?;
        Ok(Report::from_values("structure-equation", tol, &vals, self.len() - nodes.len()))
    }

    pub fn to_json(&self) -> LiftJson {
        let (params, grid) = if self.dim == 1 {
            (Some((0..self.shape[0]).map(|i| self.origin[0] + i as f64 * self.step).collect()), None)
        } else {
            (None, Some(GridSpec { shape: self.shape, origin: self.origin }))
        };
        LiftJson {
            params,
            grid,
            step: self.step,
            fd_order: self.fd_order,
            frames: self.frames.iter().map(|f| f.matrix().transpose().as_slice().to_vec()).collect(),
        }
    }

    pub fn from_json(j: &LiftJson) -> Result<Self> {
        let frames: Vec<G2Frame> = j
            .frames
            .iter()
            .enumerate()
            .map(|(k, f)| {
                if f.len() != 49 {
                    return Err(Error::MalformedLift(format!("frame {k} has {} entries, expected 49", f.len())));
                }
                let m = Matrix7::from_row_slice(f);
                G2Frame::with_tolerance(m, JSON_FRAME_TOL)
                    .map_err(|e| Error::MalformedLift(format!("frame {k}: {e}")))
            })
            .collect::<Result<_>>()?;
        match (&j.params, &j.grid) {
            (Some(p), None) => {
                if p.len() != frames.len() {
                    return Err(Error::MalformedLift(format!("{} params for {} frames", p.len(), frames.len())));
                }
                for w in p.windows(2) {
                    if ((w[1] - w[0]) - j.step).abs() > 1e-9 * j.step.abs().max(1.0) {
                        return Err(Error::MalformedLift("params are not uniformly spaced at `step`".into()));
                    }
                }
                CurveLift::curve(p.first().copied().unwrap_or(0.0), j.step, j.fd_order, frames)
            }
            (None, Some(g)) => CurveLift::surface(g.shape, g.origin, j.step, j.fd_order, frames),
            _ => Err(Error::MalformedLift("exactly one of `params` and `grid` is required".into())),
        }
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let j: LiftJson = serde_json::from_str(&text)?;
        CurveLift::from_json(&j)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        for (k, f) in self.frames.iter().enumerate() {
            G2Frame::with_tolerance(*f.matrix(), JSON_FRAME_TOL)
                .map_err(|e| Error::MalformedLift(format!("refusing to write frame {k}: {e}")))?;
        }
        std::fs::write(path, serde_json::to_string(&self.to_json())?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2::{exp_frame, G2AlgebraElement};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp_lift(h: f64, order: FdOrder) -> (CurveLift, G2AlgebraElement) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = G2AlgebraElement::random(&mut rng, 0.7);
        let lift = CurveLift::curve_from_fn(9, -4.0 * h + 0.3, h, order, |s| exp_frame(&a, s, &G2Frame::identity())).unwrap();
        (lift, a)
    }

    #[test]
    fn constant_lift_has_zero_connection() {
        let lift = CurveLift::surface([5, 5], [0.0, 0.0], 0.1, FdOrder::Second, vec![G2Frame::identity(); 25]).unwrap();
        let mc = lift.maurer_cartan([2, 2]).unwrap();
        assert_eq!(mc.len(), 2);
        assert!(mc.iter().all(|w| max_abs(w) == 0.0));
        assert!(matches!(lift.maurer_cartan([0, 2]), Err(Error::BoundaryNode(_))));
    }

    #[test]
    fn exp_lift_recovers_generator_at_second_order() {
        let err = |h: f64| {
            let (lift, a) = exp_lift(h, FdOrder::Second);
            max_abs(&(lift.maurer_cartan([4, 0]).unwrap()[0] - a.matrix7()))
        };
        let (e1, e2) = (err(2e-3), err(1e-3));
        assert!(e1 < 1e-4);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
        let (lift4, a4) = exp_lift(1e-2, FdOrder::Fourth);
        assert!(max_abs(&(lift4.maurer_cartan([4, 0]).unwrap()[0] - a4.matrix7())) < 1e-6);
        assert!(lift4.maurer_cartan_report(1e-5).passed);
    }

    #[test]
    fn json_roundtrip() {
        let (lift, _) = exp_lift(0.05, FdOrder::Fourth);
        let j = serde_json::to_string(&lift.to_json()).unwrap();
        let back = CurveLift::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back.len(), lift.len());
        assert!(lift.frames().iter().zip(back.frames()).all(|(a, b)| max_abs(&(a.matrix() - b.matrix())) < 1e-15));
        let bad = j.replace("\"fd_order\":4", "\"fd_order\":3");
        assert!(serde_json::from_str::<LiftJson>(&bad).is_err());
    }

    #[test]
    fn json_rejects_bad_frames() {
        let mut j = exp_lift(0.05, FdOrder::Second).0.to_json();
        j.frames[3][0] += 1e-3;
        match CurveLift::from_json(&j) {
            Err(Error::MalformedLift(msg)) => assert!(msg.contains("frame 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn surface_structure_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = G2AlgebraElement::random(&mut rng, 0.6);
        let b = G2AlgebraElement::random(&mut rng, 0.6);
        let c = G2AlgebraElement::random(&mut rng, 0.3);
        let lift = CurveLift::surface_from_fn([7, 7], [-0.01, -0.01], 2e-3, FdOrder::Second, |x, y| {
            let m = (a.matrix7() * x + b.matrix7() * y + c.matrix7() * (x * y)).exp();
            G2Frame::new(m)
        })
        .unwrap();
        let rep = lift.structure_equation_report(1e-4).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(lift.maurer_cartan_report(1e-5).passed);
    }
}
