//! Rational quaternion algebras `(a, b)` and orders inside them.
//!
//! The algebra has standard basis `1, i, j, ij` with `i² = a`, `j² = b` and
//! `ij = −ji`. An order is given by four basis vectors in standard
//! coordinates; elements of the order carry integer coordinates in that basis
//! and all exact operations run on precomputed integer structure constants.
//! The splitting embedding into real 2×2 matrices is floating point and is
//! only used for geometry.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

use crate::hyperbolic::Mat2;

pub type Rational = BigRational;

/// Largest magnitude accepted for structure constants and norm-form
/// coefficients of an order. Together with [`MAX_COORDINATE`] this keeps
/// every exact computation inside `i128`.
pub const MAX_STRUCTURE_CONSTANT: i64 = 1 << 24;

/// Largest coordinate magnitude for which norms and traces are exact.
pub const MAX_COORDINATE: i64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuaternionError {
    #[error("structure constant must be nonzero")]
    ZeroStructureConstant,
    #[error("order basis is singular")]
    SingularBasis,
    #[error("order axioms violated: {0}")]
    InvalidOrder(OrderReport),
    #[error("order structure constants exceed the supported size")]
    CoefficientsTooLarge,
    #[error("quaternion has non-integral coordinates in the order basis: {0:?}")]
    NonIntegral(Vec<String>),
    #[error("integer overflow in order arithmetic")]
    Overflow,
    #[error("algebra ({a}, {b}) is not split at the real place (a < 0 and b < 0)")]
    NotSplit { a: String, b: String },
    #[error("embedding produced non-finite entries")]
    NonFinite,
}

/// Structure constants `(a, b)` of the algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraSpec {
    a: Rational,
    b: Rational,
}

impl AlgebraSpec {
    pub fn new(a: Rational, b: Rational) -> Result<Self, QuaternionError> {
        if a.is_zero() || b.is_zero() {
            return Err(QuaternionError::ZeroStructureConstant);
        }
        Ok(Self { a, b })
    }

    pub fn from_ints(a: i64, b: i64) -> Result<Self, QuaternionError> {
        Self::new(Rational::from_integer(a.into()), Rational::from_integer(b.into()))
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    /// Split at the real place, i.e. `a > 0` or `b > 0`.
    pub fn is_indefinite(&self) -> bool {
        self.a.is_positive() || self.b.is_positive()
    }
}

/// A quaternion in standard coordinates `x₀ + x₁i + x₂j + x₃ij`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quaternion(pub [Rational; 4]);

impl Quaternion {
    pub fn from_ints(c: [i64; 4]) -> Self {
        Quaternion(c.map(|v| Rational::from_integer(v.into())))
    }

    pub fn zero() -> Self {
        Self::from_ints([0, 0, 0, 0])
    }

    pub fn one() -> Self {
        Self::from_ints([1, 0, 0, 0])
    }

    pub fn coeffs(&self) -> &[Rational; 4] {
        &self.0
    }

    pub fn add(&self, o: &Quaternion) -> Quaternion {
        Quaternion(std::array::from_fn(|k| &self.0[k] + &o.0[k]))
    }

    pub fn scale(&self, s: &Rational) -> Quaternion {
        Quaternion(std::array::from_fn(|k| &self.0[k] * s))
    }

    pub fn mul(&self, o: &Quaternion, alg: &AlgebraSpec) -> Quaternion {
        let [x0, x1, x2, x3] = &self.0;
        let [y0, y1, y2, y3] = &o.0;
        let (a, b) = (&alg.a, &alg.b);
        let ab = a * b;
        Quaternion([
            x0 * y0 + a * x1 * y1 + b * x2 * y2 - &ab * x3 * y3,
            x0 * y1 + x1 * y0 - b * x2 * y3 + b * x3 * y2,
            x0 * y2 + x2 * y0 + a * x1 * y3 - a * x3 * y1,
            x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
        ])
    }

    pub fn conj(&self) -> Quaternion {
        let [x0, x1, x2, x3] = &self.0;
        Quaternion([x0.clone(), -x1, -x2, -x3])
    }

    /// `x₀² − a x₁² − b x₂² + ab x₃²`.
    pub fn reduced_norm(&self, alg: &AlgebraSpec) -> Rational {
        let [x0, x1, x2, x3] = &self.0;
        let (a, b) = (&alg.a, &alg.b);
        x0 * x0 - a * x1 * x1 - b * x2 * x2 + a * b * x3 * x3
    }

    pub fn reduced_trace(&self) -> Rational {
        &self.0[0] + &self.0[0]
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = ["", "i", "j", "ij"];
        let mut first = true;
        for (c, l) in self.0.iter().zip(labels) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if l.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c}){l}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn invert4(m: &[[Rational; 4]; 4]) -> Option<[[Rational; 4]; 4]> {
    let mut a: Vec<Vec<Rational>> = m.iter().map(|r| r.to_vec()).collect();
    let mut inv: Vec<Vec<Rational>> = (0..4)
        .map(|i| (0..4).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    for col in 0..4 {
        let pivot = (col..4).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for j in 0..4 {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..4 {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..4 {
                let (ac, ic) = (a[col][j].clone(), inv[col][j].clone());
                a[r][j] -= &f * ac;
                inv[r][j] -= &f * ic;
            }
        }
    }
    Some(std::array::from_fn(|i| std::array::from_fn(|j| inv[i][j].clone())))
}

fn to_strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(|r| r.to_string()).collect()
}

/// Four basis vectors `e₀..e₃` in standard coordinates, with nonzero
/// determinant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderBasis {
    rows: [[Rational; 4]; 4],
    inverse: [[Rational; 4]; 4],
}

impl OrderBasis {
    pub fn new(rows: [[Rational; 4]; 4]) -> Result<Self, QuaternionError> {
        let inverse = invert4(&rows).ok_or(QuaternionError::SingularBasis)?;
        Ok(Self { rows, inverse })
    }

    /// `{1, i, j, ij}`.
    pub fn standard() -> Self {
        let rows = std::array::from_fn(|r| {
            std::array::from_fn(|c| if r == c { Rational::one() } else { Rational::zero() })
        });
        Self::new(rows).expect("identity basis is invertible")
    }

    pub fn rows(&self) -> &[[Rational; 4]; 4] {
        &self.rows
    }

    pub fn vector(&self, k: usize) -> Quaternion {
        Quaternion(self.rows[k].clone())
    }

    /// Coordinates of `q` in this basis (possibly non-integral).
    pub fn coordinates(&self, q: &Quaternion) -> [Rational; 4] {
        std::array::from_fn(|k| {
            (0..4).fold(Rational::zero(), |acc, l| acc + &q.0[l] * &self.inverse[l][k])
        })
    }

    pub fn integral_coordinates(&self, q: &Quaternion) -> Result<[BigInt; 4], QuaternionError> {
        let c = self.coordinates(q);
        if c.iter().any(|v| !v.is_integer()) {
            return Err(QuaternionError::NonIntegral(to_strings(&c)));
        }
        Ok(c.map(|v| v.to_integer()))
    }

    pub fn element(&self, coords: &[i64; 4]) -> Quaternion {
        Quaternion(std::array::from_fn(|l| {
            (0..4).fold(Rational::zero(), |acc, k| {
                acc + Rational::from_integer(coords[k].into()) * &self.rows[k][l]
            })
        }))
    }
}

/// One failed order axiom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderViolation {
    SingularBasis,
    ProductNotClosed { left: usize, right: usize, coordinates: Vec<String> },
    NonIntegralNorm { index: usize, norm: String },
    NonIntegralTrace { index: usize, trace: String },
    OneNotInLattice { coordinates: Vec<String> },
}

impl fmt::Display for OrderViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderViolation::SingularBasis => write!(f, "basis matrix is singular"),
            OrderViolation::ProductNotClosed { left, right, coordinates } => {
                write!(f, "e{left}·e{right} has coordinates {coordinates:?}")
            }
            OrderViolation::NonIntegralNorm { index, norm } => write!(f, "N(e{index}) = {norm}"),
            OrderViolation::NonIntegralTrace { index, trace } => write!(f, "tr(e{index}) = {trace}"),
            OrderViolation::OneNotInLattice { coordinates } => {
                write!(f, "1 has coordinates {coordinates:?}")
            }
        }
    }
}

/// Result of checking the order axioms on a candidate basis.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct OrderReport {
    pub violations: Vec<OrderViolation>,
}

impl OrderReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for OrderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid order");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks closure under multiplication, integrality of norms and traces of
/// the basis vectors, and that `1` lies in the lattice. Maximality is not
/// checked.
pub fn verify_order(alg: &AlgebraSpec, rows: &[[Rational; 4]; 4]) -> OrderReport {
    let mut report = OrderReport::default();
    let basis = match OrderBasis::new(rows.clone()) {
        Ok(b) => b,
        Err(_) => {
            report.violations.push(OrderViolation::SingularBasis);
            return report;
        }
    };
    for k in 0..4 {
        let e = basis.vector(k);
        let n = e.reduced_norm(alg);
        if !n.is_integer() {
            report.violations.push(OrderViolation::NonIntegralNorm { index: k, norm: n.to_string() });
        }
        let t = e.reduced_trace();
        if !t.is_integer() {
            report.violations.push(OrderViolation::NonIntegralTrace { index: k, trace: t.to_string() });
        }
    }
    for l in 0..4 {
        for r in 0..4 {
            let p = basis.vector(l).mul(&basis.vector(r), alg);
            let c = basis.coordinates(&p);
            if c.iter().any(|v| !v.is_integer()) {
                report.violations.push(OrderViolation::ProductNotClosed {
                    left: l,
                    right: r,
                    coordinates: to_strings(&c),
                });
            }
        }
    }
    let one = basis.coordinates(&Quaternion::one());
    if one.iter().any(|v| !v.is_integer()) {
        report.violations.push(OrderViolation::OneNotInLattice { coordinates: to_strings(&one) });
    }
    report
}

/// Real splitting `τ: B → M₂(ℝ)` given by the images of `1, i, j, ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedding {
    images: [Mat2; 4],
}

impl Embedding {
    /// For `b > 0`: `i ↦ [[0, 1], [a, 0]]`, `j ↦ diag(√b, −√b)`. Otherwise
    /// (`a > 0`) the roles of `i` and `j` are exchanged.
    pub fn new(alg: &AlgebraSpec) -> Result<Self, QuaternionError> {
        let a = alg.a.to_f64().ok_or(QuaternionError::NonFinite)?;
        let b = alg.b.to_f64().ok_or(QuaternionError::NonFinite)?;
        let (i, j) = if alg.b.is_positive() {
            let s = b.sqrt();
            (Mat2::new(0.0, 1.0, a, 0.0), Mat2::new(s, 0.0, 0.0, -s))
        } else if alg.a.is_positive() {
            let s = a.sqrt();
            (Mat2::new(s, 0.0, 0.0, -s), Mat2::new(0.0, 1.0, b, 0.0))
        } else {
            return Err(QuaternionError::NotSplit { a: alg.a.to_string(), b: alg.b.to_string() });
        };
        let images = [Mat2::IDENTITY, i, j, i.mul(&j)];
        if images.iter().any(|m| ![m.a, m.b, m.c, m.d].iter().all(|v| v.is_finite())) {
            return Err(QuaternionError::NonFinite);
        }
        Ok(Self { images })
    }

    pub fn images(&self) -> &[Mat2; 4] {
        &self.images
    }

    pub fn apply(&self, q: &Quaternion) -> Mat2 {
        self.images.iter().zip(&q.0).fold(Mat2::ZERO, |acc, (m, c)| {
            acc.add(&m.scale(c.to_f64().unwrap_or(f64::NAN)))
        })
    }
}

/// An element of an order, by integer coordinates in the order basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct OrderElement(pub [i64; 4]);

impl OrderElement {
    pub fn coords(&self) -> &[i64; 4] {
        &self.0
    }

    pub fn neg(&self) -> OrderElement {
        OrderElement(self.0.map(|c| -c))
    }
}

/// Integer quadratic form `Σ n_kl x_k x_l` (k ≤ l) of the reduced norm in
/// order coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormForm {
    /// `coeff[k][l]` for `k ≤ l`; `coeff[k][k] = N(e_k)`, `coeff[k][l] = tr(e_k ē_l)`.
    pub coeff: [[i64; 4]; 4],
}

impl NormForm {
    pub fn eval(&self, x: &[i64; 4]) -> i128 {
        let mut acc = 0i128;
        for k in 0..4 {
            let xk = x[k] as i128;
            for l in k..4 {
                acc += self.coeff[k][l] as i128 * xk * x[l] as i128;
            }
        }
        acc
    }
}

fn small(v: &BigInt) -> Result<i64, QuaternionError> {
    v.to_i64()
        .filter(|x| x.abs() <= MAX_STRUCTURE_CONSTANT)
        .ok_or(QuaternionError::CoefficientsTooLarge)
}

/// A validated order: basis, integer multiplication table, norm and trace
/// forms, and (for indefinite algebras) the embedded basis.
#[derive(Debug, Clone)]
pub struct QuaternionOrder {
    algebra: AlgebraSpec,
    basis: OrderBasis,
    table: [[[i64; 4]; 4]; 4],
    norm: NormForm,
    trace: [i64; 4],
    one: [i64; 4],
    images: Option<[Mat2; 4]>,
}

impl QuaternionOrder {
    pub fn new(algebra: AlgebraSpec, rows: [[Rational; 4]; 4]) -> Result<Self, QuaternionError> {
        let report = verify_order(&algebra, &rows);
        if !report.is_valid() {
            return Err(QuaternionError::InvalidOrder(report));
        }
        let basis = OrderBasis::new(rows)?;
        let e: Vec<Quaternion> = (0..4).map(|k| basis.vector(k)).collect();
        let mut table = [[[0i64; 4]; 4]; 4];
        for l in 0..4 {
            for r in 0..4 {
                let c = basis.integral_coordinates(&e[l].mul(&e[r], &algebra))?;
                for k in 0..4 {
                    table[l][r][k] = small(&c[k])?;
                }
            }
        }
        let mut norm = [[0i64; 4]; 4];
        for k in 0..4 {
            norm[k][k] = small(&e[k].reduced_norm(&algebra).to_integer())?;
            for l in k + 1..4 {
                let t = e[k].mul(&e[l].conj(), &algebra).reduced_trace();
                debug_assert!(t.is_integer());
                norm[k][l] = small(&t.to_integer())?;
            }
        }
        let mut trace = [0i64; 4];
        for k in 0..4 {
            trace[k] = small(&e[k].reduced_trace().to_integer())?;
        }
        let one_big = basis.integral_coordinates(&Quaternion::one())?;
        let mut one = [0i64; 4];
        for k in 0..4 {
            one[k] = small(&one_big[k])?;
        }
        let images = match Embedding::new(&algebra) {
            Ok(emb) => Some(std::array::from_fn(|k| emb.apply(&e[k]))),
            Err(_) => None,
        };
        Ok(Self { algebra, basis, table, norm: NormForm { coeff: norm }, trace, one, images })
    }

    /// The standard order `Z⟨1, i, j, ij⟩` of an algebra with integral `a, b`.
    pub fn standard(algebra: AlgebraSpec) -> Result<Self, QuaternionError> {
        let rows = OrderBasis::standard().rows().clone();
        Self::new(algebra, rows)
    }

    pub fn algebra(&self) -> &AlgebraSpec {
        &self.algebra
    }

    pub fn basis(&self) -> &OrderBasis {
        &self.basis
    }

    pub fn norm_form(&self) -> &NormForm {
        &self.norm
    }

    pub fn one(&self) -> OrderElement {
        OrderElement(self.one)
    }

    pub fn multiply(&self, x: &OrderElement, y: &OrderElement) -> Result<OrderElement, QuaternionError> {
        let mut out = [0i128; 4];
        for l in 0..4 {
            if x.0[l] == 0 {
                continue;
            }
            for r in 0..4 {
                let xy = (x.0[l] as i128)
                    .checked_mul(y.0[r] as i128)
                    .ok_or(QuaternionError::Overflow)?;
                for k in 0..4 {
                    let term = xy
                        .checked_mul(self.table[l][r][k] as i128)
                        .ok_or(QuaternionError::Overflow)?;
                    out[k] = out[k].checked_add(term).ok_or(QuaternionError::Overflow)?;
                }
            }
        }
        let mut c = [0i64; 4];
        for k in 0..4 {
            c[k] = i64::try_from(out[k]).map_err(|_| QuaternionError::Overflow)?;
        }
        Ok(OrderElement(c))
    }

    /// Reduced norm; exact for coordinates bounded by [`MAX_COORDINATE`].
    pub fn reduced_norm(&self, x: &OrderElement) -> i128 {
        self.norm.eval(&x.0)
    }

    pub fn reduced_trace(&self, x: &OrderElement) -> i128 {
        (0..4).map(|k| self.trace[k] as i128 * x.0[k] as i128).sum()
    }

    /// `x̄ = tr(x)·1 − x`.
    pub fn conjugate(&self, x: &OrderElement) -> Result<OrderElement, QuaternionError> {
        let t = self.reduced_trace(x);
        let mut c = [0i64; 4];
        for k in 0..4 {
            let v = t
                .checked_mul(self.one[k] as i128)
                .and_then(|v| v.checked_sub(x.0[k] as i128))
                .ok_or(QuaternionError::Overflow)?;
            c[k] = i64::try_from(v).map_err(|_| QuaternionError::Overflow)?;
        }
        Ok(OrderElement(c))
    }

    /// `n · 1` as an order element.
    pub fn scalar(&self, n: i64) -> OrderElement {
        OrderElement(self.one.map(|c| c * n))
    }

    pub fn to_quaternion(&self, x: &OrderElement) -> Quaternion {
        self.basis.element(&x.0)
    }

    /// Images `τ(e₀), …, τ(e₃)` of the order basis.
    pub fn basis_images(&self) -> Result<&[Mat2; 4], QuaternionError> {
        self.images.as_ref().ok_or_else(|| QuaternionError::NotSplit {
            a: self.algebra.a.to_string(),
            b: self.algebra.b.to_string(),
        })
    }

    pub fn embed(&self, x: &OrderElement) -> Result<Mat2, QuaternionError> {
        let images = self.basis_images()?;
        Ok(images
            .iter()
            .zip(&x.0)
            .fold(Mat2::ZERO, |acc, (m, &c)| acc.add(&m.scale(c as f64))))
    }
}

/// Parse-free helper for tests and defaults: `num/den` as a rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

/// The algebra `(−1, 3)` (ramified exactly at 2 and 3).
pub fn default_algebra() -> AlgebraSpec {
    AlgebraSpec::from_ints(-1, 3).expect("nonzero")
}

/// Basis `1, i, j, (1 + i + j + ij)/2` of the default order in `(−1, 3)`.
/// It has index 2 over `Z⟨1, i, j, ij⟩` (reduced discriminant 12), so its
/// reduced discriminant is 6 = 2·3 and the order is maximal.
pub fn default_basis_rows() -> [[Rational; 4]; 4] {
    let i = |n: i64| Rational::from_integer(n.into());
    let h = ratio(1, 2);
    [
        [i(1), i(0), i(0), i(0)],
        [i(0), i(1), i(0), i(0)],
        [i(0), i(0), i(1), i(0)],
        [h.clone(), h.clone(), h.clone(), h],
    ]
}

pub fn default_order() -> QuaternionOrder {
    QuaternionOrder::new(default_algebra(), default_basis_rows()).expect("default order is valid")
}

/// Integer `gcd`-free divisibility helper used by the norm solver.
pub(crate) fn exact_div(num: i128, den: i128) -> Option<i128> {
    if den == 0 {
        return None;
    }
    let (q, r) = num.div_rem(&den);
    (r == 0).then_some(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn elem() -> impl Strategy<Value = OrderElement> {
        prop::array::uniform4(-100i64..=100).prop_map(OrderElement)
    }

    #[test]
    fn identity_and_anticommutation() {
        let alg = default_algebra();
        let one = Quaternion::one();
        let i = Quaternion::from_ints([0, 1, 0, 0]);
        let j = Quaternion::from_ints([0, 0, 1, 0]);
        let x = Quaternion::from_ints([3, -1, 4, 1]);
        assert_eq!(one.mul(&x, &alg), x);
        assert_eq!(i.mul(&j, &alg), Quaternion::from_ints([0, 0, 0, 1]));
        assert_eq!(j.mul(&i, &alg), Quaternion::from_ints([0, 0, 0, -1]));
        let p = Quaternion::from_ints([1, 1, 0, 0]).mul(&Quaternion::from_ints([1, -1, 0, 0]), &alg);
        assert_eq!(p, Quaternion::from_ints([2, 0, 0, 0]));
    }

    #[test]
    fn norms() {
        let alg = default_algebra();
        assert_eq!(Quaternion::one().reduced_norm(&alg), ratio(1, 1));
        assert_eq!(Quaternion::from_ints([1, 1, 0, 0]).reduced_norm(&alg), ratio(2, 1));
        let order = default_order();
        assert_eq!(order.reduced_norm(&order.one()), 1);
        assert_eq!(order.reduced_norm(&OrderElement([1, 1, 0, 0])), 2);
        // (1 + i + j + ij)/2 has norm (1 + 1 − 3 − 3)/4 = −1 and trace 1.
        assert_eq!(order.reduced_norm(&OrderElement([0, 0, 0, 1])), -1);
        assert_eq!(order.reduced_trace(&OrderElement([0, 0, 0, 1])), 1);
    }

    #[test]
    fn verify_order_examples() {
        let alg = default_algebra();
        assert!(verify_order(&alg, OrderBasis::standard().rows()).is_valid());
        assert!(verify_order(&alg, &default_basis_rows()).is_valid());

        let mut half_i = OrderBasis::standard().rows().clone();
        half_i[1][1] = ratio(1, 2);
        let report = verify_order(&alg, &half_i);
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, OrderViolation::NonIntegralNorm { index: 1, norm } if norm == "1/4")));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, OrderViolation::ProductNotClosed { left: 1, right: 1, .. })));

        let mut singular = OrderBasis::standard().rows().clone();
        singular[3] = singular[2].clone();
        assert_eq!(verify_order(&alg, &singular).violations, vec![OrderViolation::SingularBasis]);

        // Lattice of 2·standard misses 1.
        let doubled = OrderBasis::standard().rows().clone().map(|r| r.map(|v| v * ratio(2, 1)));
        assert!(verify_order(&alg, &doubled)
            .violations
            .iter()
            .any(|v| matches!(v, OrderViolation::OneNotInLattice { .. })));
        assert!(matches!(
            QuaternionOrder::new(alg, doubled),
            Err(QuaternionError::InvalidOrder(_))
        ));
    }

    #[test]
    fn non_integral_coordinates_signal_invalid_basis() {
        let basis = OrderBasis::standard();
        let q = Quaternion([ratio(1, 2), ratio(0, 1), ratio(0, 1), ratio(0, 1)]);
        assert!(matches!(basis.integral_coordinates(&q), Err(QuaternionError::NonIntegral(_))));
    }

    #[test]
    fn embedding_basics() {
        let alg = default_algebra();
        let emb = Embedding::new(&alg).unwrap();
        let [one, i, j, _] = *emb.images();
        assert_eq!(one, Mat2::IDENTITY);
        assert_eq!(i, Mat2::new(0.0, 1.0, -1.0, 0.0));
        let anti = i.mul(&j).add(&j.mul(&i));
        assert!(anti.max_abs_diff(&Mat2::ZERO) < 1e-15);
        let order = default_order();
        assert_eq!(order.embed(&order.one()).unwrap(), Mat2::IDENTITY);

        let definite = AlgebraSpec::from_ints(-1, -1).unwrap();
        assert!(matches!(Embedding::new(&definite), Err(QuaternionError::NotSplit { .. })));
        let order = QuaternionOrder::standard(definite).unwrap();
        assert!(order.embed(&order.one()).is_err());
    }

    #[test]
    fn embedding_with_positive_a_only() {
        let alg = AlgebraSpec::from_ints(2, -5).unwrap();
        let order = QuaternionOrder::standard(alg).unwrap();
        for x in [[1, 2, 3, 4], [0, 1, 0, 0], [5, -1, 2, -3]] {
            let x = OrderElement(x);
            let det = order.embed(&x).unwrap().det();
            let n = order.reduced_norm(&x) as f64;
            assert!((det - n).abs() <= 1e-12 * n.abs().max(1.0));
        }
    }

    #[test]
    fn zero_structure_constant_rejected() {
        assert_eq!(AlgebraSpec::from_ints(0, 3), Err(QuaternionError::ZeroStructureConstant));
    }

    #[test]
    fn rational_structure_constants() {
        // (−1/4, 3) is isomorphic to (−1, 3) via i ↦ i/2.
        let alg = AlgebraSpec::new(ratio(-1, 4), ratio(3, 1)).unwrap();
        let mut rows = OrderBasis::standard().rows().clone();
        rows[1][1] = ratio(2, 1);
        rows[3][3] = ratio(2, 1);
        let order = QuaternionOrder::new(alg, rows).unwrap();
        assert_eq!(order.reduced_norm(&OrderElement([1, 1, 0, 0])), 2);
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(x in elem(), y in elem()) {
            let order = default_order();
            let xy = order.multiply(&x, &y).unwrap();
            prop_assert_eq!(order.reduced_norm(&xy), order.reduced_norm(&x) * order.reduced_norm(&y));
        }

        #[test]
        fn times_conjugate_is_norm(x in elem()) {
            let order = default_order();
            let n = order.reduced_norm(&x);
            let p = order.multiply(&x, &order.conjugate(&x).unwrap()).unwrap();
            prop_assert_eq!(p, order.scalar(n as i64));
        }

        #[test]
        fn order_arithmetic_matches_rational(x in elem(), y in elem()) {
            let order = default_order();
            let alg = order.algebra().clone();
            let (qx, qy) = (order.to_quaternion(&x), order.to_quaternion(&y));
            let xy = order.multiply(&x, &y).unwrap();
            prop_assert_eq!(order.to_quaternion(&xy), qx.mul(&qy, &alg));
            prop_assert_eq!(Rational::from_integer(order.reduced_norm(&x).into()), qx.reduced_norm(&alg));
            prop_assert_eq!(Rational::from_integer(order.reduced_trace(&x).into()), qx.reduced_trace());
            prop_assert_eq!(order.to_quaternion(&order.conjugate(&x).unwrap()), qx.conj());
        }

        #[test]
        fn det_of_embedding_is_norm(x in prop::array::uniform4(-10_000i64..=10_000)) {
            let order = default_order();
            let x = OrderElement(x);
            let m = order.embed(&x).unwrap();
            let n = order.reduced_norm(&x) as f64;
            let scale = m.frobenius_sq().max(1.0);
            // relative to the magnitude of the terms that cancel in the determinant
            prop_assert!((m.det() - n).abs() <= 1e-9 * scale.max(n.abs()));
        }

        #[test]
        fn embedding_is_multiplicative(x in elem(), y in elem(), z in elem()) {
            let order = default_order();
            let xyz = order.multiply(&order.multiply(&x, &y).unwrap(), &z).unwrap();
            let direct = order.embed(&xyz).unwrap();
            let prod = order.embed(&x).unwrap().mul(&order.embed(&y).unwrap()).mul(&order.embed(&z).unwrap());
            let scale = direct.frobenius_sq().sqrt().max(1.0);
            prop_assert!(direct.max_abs_diff(&prod) <= 1e-9 * scale);
            let sum = OrderElement(std::array::from_fn(|k| x.0[k] + y.0[k]));
            let lin = order.embed(&x).unwrap().add(&order.embed(&y).unwrap());
            prop_assert!(order.embed(&sum).unwrap().max_abs_diff(&lin) <= 1e-12 * scale);
        }
    }
}
