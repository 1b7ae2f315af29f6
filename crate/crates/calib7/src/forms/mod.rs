//! Exterior algebra on R^7.
//!
//! Forms are stored sparsely on strictly increasing index tuples over `1..=7`.
//! Orientation is `nu = dx1 ^ ... ^ dx7`. The 3-form [`phi`] is the only hard coded
//! G2 datum; [`star_phi`], [`cross`] and everything downstream are derived from it.

mod comass;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::DMatrix;

pub use comass::{comass_sample, ComassOptions};

use crate::{Error, Result, Vector7};

/// Coefficients below this magnitude are dropped on normalization.
pub const ZERO_TOL: f64 = 1e-15;

/// A strictly increasing index tuple, stored as a bitmask (bit `i-1` for index `i`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Blade(u8);

impl Blade {
    pub fn grade(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn indices(self) -> Vec<usize> {
        (1..=7).filter(|i| self.0 & (1 << (i - 1)) != 0).collect()
    }

    fn complement(self) -> Blade {
        Blade(!self.0 & 0x7f)
    }

    /// Blade and permutation sign of an arbitrary index list; `None` on repeats.
    fn from_unsorted(idx: &[usize]) -> Result<Option<(Blade, f64)>> {
        let mut mask = 0u8;
        for &i in idx {
            if !(1..=7).contains(&i) {
                return Err(Error::IndexOutOfRange(i));
            }
            if mask & (1 << (i - 1)) != 0 {
                return Ok(None);
            }
            mask |= 1 << (i - 1);
        }
        let mut inversions = 0;
        for a in 0..idx.len() {
            for b in a + 1..idx.len() {
                if idx[a] > idx[b] {
                    inversions += 1;
                }
            }
        }
        Ok(Some((Blade(mask), if inversions % 2 == 0 { 1.0 } else { -1.0 })))
    }
}

impl Ord for Blade {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.indices().cmp(&other.indices())
    }
}

impl PartialOrd for Blade {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sign of the shuffle taking `a` followed by `b` into increasing order.
fn merge_sign(a: Blade, b: Blade) -> f64 {
    let mut inversions = 0;
    for i in a.indices() {
        inversions += b.indices().iter().filter(|&&j| j < i).count();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A homogeneous alternating form on R^7.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    grade: usize,
    coeffs: BTreeMap<Blade, f64>,
}

impl Form {
    pub fn zero(grade: usize) -> Result<Form> {
        if grade > 7 {
            return Err(Error::GradeOverflow(grade));
        }
        Ok(Form { grade, coeffs: BTreeMap::new() })
    }

    pub fn scalar(c: f64) -> Form {
        let mut f = Form { grade: 0, coeffs: BTreeMap::new() };
        f.coeffs.insert(Blade(0), c);
        f.normalized()
    }

    /// Build a form from `(indices, coefficient)` terms. Index lists need not be
    /// sorted; repeated indices make a term vanish.
    pub fn new<I, T>(grade: usize, terms: I) -> Result<Form>
    where
        I: IntoIterator<Item = (T, f64)>,
        T: AsRef<[usize]>,
    {
        let mut f = Form::zero(grade)?;
        for (idx, c) in terms {
            let idx = idx.as_ref();
            if idx.len() != grade {
                return Err(Error::GradeMismatch(grade, idx.len()));
            }
            if let Some((b, s)) = Blade::from_unsorted(idx)? {
                *f.coeffs.entry(b).or_insert(0.0) += s * c;
            }
        }
        Ok(f.normalized())
    }

    /// The monomial `dx_{i1} ^ ... ^ dx_{ip}` in the given order.
    pub fn monomial(idx: &[usize]) -> Result<Form> {
        Form::new(idx.len(), [(idx, 1.0)])
    }

    pub fn dx(i: usize) -> Result<Form> {
        Form::monomial(&[i])
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    /// Coefficient on an index tuple, unsorted tuples picking up the permutation sign.
    pub fn coeff(&self, idx: &[usize]) -> f64 {
        if idx.len() != self.grade {
            return 0.0;
        }
        match Blade::from_unsorted(idx) {
            Ok(Some((b, s))) => s * self.coeffs.get(&b).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// Terms in lexicographic order of their index tuples.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.coeffs.iter().map(|(b, c)| (b.indices(), *c))
    }

    fn normalized(mut self) -> Form {
        self.coeffs.retain(|_, c| c.abs() > ZERO_TOL);
        self
    }

    /// Largest coefficient difference; forms of different grade compare as infinitely far.
    pub fn distance(&self, other: &Form) -> f64 {
        if self.grade != other.grade {
            return f64::INFINITY;
        }
        let mut d = 0.0f64;
        for (b, c) in &self.coeffs {
            d = d.max((c - other.coeffs.get(b).copied().unwrap_or(0.0)).abs());
        }
        for (b, c) in &other.coeffs {
            if !self.coeffs.contains_key(b) {
                d = d.max(c.abs());
            }
        }
        d
    }

    pub fn checked_add(&self, other: &Form) -> Result<Form> {
        if self.grade != other.grade {
            return Err(Error::GradeMismatch(self.grade, other.grade));
        }
        let mut out = self.clone();
        for (b, c) in &other.coeffs {
            *out.coeffs.entry(*b).or_insert(0.0) += c;
        }
        Ok(out.normalized())
    }

    pub fn scale(&self, s: f64) -> Form {
        Form { grade: self.grade, coeffs: self.coeffs.iter().map(|(b, c)| (*b, s * c)).collect() }.normalized()
    }
}

// Operators panic on a grade mismatch; use `checked_add` to get an error instead.
impl Add for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        self.checked_add(rhs).expect("adding forms of different grade")
    }
}

impl Sub for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self.checked_add(&rhs.scale(-1.0)).expect("subtracting forms of different grade")
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scale(-1.0)
    }
}

impl Mul<&Form> for f64 {
    type Output = Form;
    fn mul(self, rhs: &Form) -> Form {
        rhs.scale(self)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.terms().enumerate() {
            let sign = if c < 0.0 { "-" } else if n > 0 { "+" } else { "" };
            if n > 0 {
                write!(f, " {sign} ")?;
            } else {
                write!(f, "{sign}")?;
            }
            let mag = c.abs();
            if (mag - 1.0).abs() > 1e-12 || idx.is_empty() {
                write!(f, "{mag}")?;
                if !idx.is_empty() {
                    write!(f, " ")?;
                }
            }
            if !idx.is_empty() {
                let s: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                write!(f, "dx{}", s.join(""))?;
            }
        }
        Ok(())
    }
}

/// Exterior product.
pub fn wedge(a: &Form, b: &Form) -> Result<Form> {
    let grade = a.grade + b.grade;
    if grade > 7 {
        return Err(Error::GradeOverflow(grade));
    }
    let mut out = Form::zero(grade)?;
    for (ba, ca) in &a.coeffs {
        for (bb, cb) in &b.coeffs {
            if ba.0 & bb.0 != 0 {
                continue;
            }
            let s = merge_sign(*ba, *bb);
            *out.coeffs.entry(Blade(ba.0 | bb.0)).or_insert(0.0) += s * ca * cb;
        }
    }
    Ok(out.normalized())
}

/// Hodge star for the Euclidean metric with orientation `nu`:
/// `*(dx_I) = sign(I, I^c) dx_{I^c}`.
pub fn hodge_star(a: &Form) -> Form {
    let mut out = Form { grade: 7 - a.grade, coeffs: BTreeMap::new() };
    for (b, c) in &a.coeffs {
        let comp = b.complement();
        out.coeffs.insert(comp, merge_sign(*b, comp) * c);
    }
    out.normalized()
}

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        n => DMatrix::from_fn(n, n, |i, j| m[i][j]).determinant(),
    }
}

/// Value of `a` on the vectors `vs`: sum over monomials of the minor determinant.
pub fn evaluate(a: &Form, vs: &[Vector7]) -> Result<f64> {
    if vs.len() != a.grade {
        return Err(Error::Arity { expected: a.grade, got: vs.len() });
    }
    let mut total = 0.0;
    for (b, c) in &a.coeffs {
        let idx = b.indices();
        // rows: form indices, columns: vectors
        let m: Vec<Vec<f64>> = idx.iter().map(|&i| vs.iter().map(|v| v[i - 1]).collect()).collect();
        total += c * det(&m);
    }
    Ok(total)
}

/// Interior product `v ⌟ a`, contracting the first slot.
pub fn interior(v: &Vector7, a: &Form) -> Result<Form> {
    if a.grade == 0 {
        return Err(Error::InteriorOfScalar);
    }
    let mut out = Form::zero(a.grade - 1)?;
    for (b, c) in &a.coeffs {
        for (pos, i) in b.indices().into_iter().enumerate() {
            let rest = Blade(b.0 & !(1 << (i - 1)));
            let s = if pos % 2 == 0 { 1.0 } else { -1.0 };
            *out.coeffs.entry(rest).or_insert(0.0) += s * c * v[i - 1];
        }
    }
    Ok(out.normalized())
}

/// The standard volume form `dx1 ^ ... ^ dx7`.
pub fn volume_form() -> Form {
    Form::monomial(&[1, 2, 3, 4, 5, 6, 7]).expect("valid monomial")
}

fn phi_terms() -> &'static Vec<(usize, usize, usize, f64)> {
    static TERMS: OnceLock<Vec<(usize, usize, usize, f64)>> = OnceLock::new();
    TERMS.get_or_init(|| {
        phi()
            .terms()
            .map(|(idx, c)| (idx[0] - 1, idx[1] - 1, idx[2] - 1, c))
            .collect()
    })
}

/// The G2 3-form
/// `phi = dx567 - dx5 ^ (dx12 + dx34) - dx6 ^ (dx13 + dx42) - dx7 ^ (dx14 + dx23)`.
pub fn phi() -> Form {
    static PHI: OnceLock<Form> = OnceLock::new();
    PHI.get_or_init(|| {
        Form::new(
            3,
            [
                ([5, 6, 7], 1.0),
                ([5, 1, 2], -1.0),
                ([5, 3, 4], -1.0),
                ([6, 1, 3], -1.0),
                ([6, 4, 2], -1.0),
                ([7, 1, 4], -1.0),
                ([7, 2, 3], -1.0),
            ],
        )
        .expect("valid phi")
    })
    .clone()
}

/// The coassociative calibration `*phi`.
pub fn star_phi() -> Form {
    static STAR: OnceLock<Form> = OnceLock::new();
    STAR.get_or_init(|| hodge_star(&phi())).clone()
}

/// `phi(x, y, z)` without going through the generic evaluator.
pub fn phi_eval(x: &Vector7, y: &Vector7, z: &Vector7) -> f64 {
    let mut s = 0.0;
    for &(a, b, c, k) in phi_terms() {
        s += k
            * (x[a] * (y[b] * z[c] - y[c] * z[b]) - x[b] * (y[a] * z[c] - y[c] * z[a])
                + x[c] * (y[a] * z[b] - y[b] * z[a]));
    }
    s
}

/// The cross product defined by `<cross(x, y), z> = phi(x, y, z)`.
pub fn cross(x: &Vector7, y: &Vector7) -> Vector7 {
    let mut out = Vector7::zeros();
    for &(a, b, c, k) in phi_terms() {
        out[c] += k * (x[a] * y[b] - x[b] * y[a]);
        out[a] += k * (x[b] * y[c] - x[c] * y[b]);
        out[b] += k * (x[c] * y[a] - x[a] * y[c]);
    }
    out
}

/// `*phi(a, b, c, d)` on four vectors.
pub fn star_phi_eval(vs: &[Vector7; 4]) -> f64 {
    static TERMS: OnceLock<Vec<([usize; 4], f64)>> = OnceLock::new();
    let terms = TERMS.get_or_init(|| {
        star_phi()
            .terms()
            .map(|(idx, c)| ([idx[0] - 1, idx[1] - 1, idx[2] - 1, idx[3] - 1], c))
            .collect()
    });
    let mut s = 0.0;
    for (idx, c) in terms {
        let m = nalgebra::Matrix4::from_fn(|i, j| vs[j][idx[i]]);
        s += c * m.determinant();
    }
    s
}

/// All increasing `k`-subsets of `0..n`.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Exterior derivative of the pullback `F^* a` of a constant coefficient form by a map
/// `F: R^m -> R^7`, evaluated at `x` with central differences of step `h`. Returns the
/// largest absolute component over increasing coordinate tuples; it vanishes up to
/// the truncation error of the stencil since `d a = 0`.
pub fn pullback_derivative_residual<F>(a: &Form, map: F, x: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vector7,
{
    let m = x.len();
    let p = a.grade;
    if p + 1 > m {
        return Ok(0.0);
    }
    let jac = |y: &[f64]| -> Vec<Vector7> {
        (0..m)
            .map(|i| {
                let mut yp = y.to_vec();
                let mut ym = y.to_vec();
                yp[i] += h;
                ym[i] -= h;
                (map(&yp) - map(&ym)) / (2.0 * h)
            })
            .collect()
    };
    // (F^*a)_J at y for an increasing p-tuple J of coordinates
    let pulled = |y: &[f64], cols: &[usize]| -> Result<f64> {
        let j = jac(y);
        let vs: Vec<Vector7> = cols.iter().map(|&c| j[c]).collect();
        evaluate(a, &vs)
    };
    let mut worst = 0.0f64;
    for tuple in subsets(m, p + 1) {
        let mut d = 0.0;
        for (pos, &i) in tuple.iter().enumerate() {
            let rest: Vec<usize> = tuple.iter().copied().filter(|&c| c != i).collect();
            let mut yp = x.to_vec();
            let mut ym = x.to_vec();
            yp[i] += h;
            ym[i] -= h;
            let deriv = (pulled(&yp, &rest)? - pulled(&ym, &rest)?) / (2.0 * h);
            d += if pos % 2 == 0 { deriv } else { -deriv };
        }
        worst = worst.max(d.abs());
    }
    Ok(worst)
}
