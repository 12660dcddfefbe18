//! Counting order elements of fixed reduced norm near a point.
//!
//! `M(N, t; z) = #{γ ∈ R(N) : u(γz, z) < t}`. Conjugating by the transporter
//! `σ_z` turns the condition into a statement about `m = σ_z⁻¹ τ(γ) σ_z`:
//! with `m = [[a, b], [c, d]]` and `det m = N`,
//!
//! ```text
//! ‖m‖²_F = 2N (1 + 2u),      (a − d)² + (b + c)² = ‖m‖²_F − 2 det m = 4N u.
//! ```
//!
//! So the ball is the ellipsoid `Q_z(γ) < 2N(1 + 2t)` intersected with the
//! norm quadric. The search adds a multiple of the positive semidefinite
//! "displacement" form `(a − d)² + (b + c)²` to `Q_z` to shrink the ellipsoid
//! when `t` is small, enumerates three coordinates by Cholesky backtracking
//! and solves the norm equation for the last one exactly.

use num_integer::Roots;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hyperbolic::{act, point_pair_u, transporter, GeometryError, Isometry, Mat2, PlanePoint};
use crate::is_prime;
use crate::quaternion::{exact_div, OrderElement, QuaternionError, QuaternionOrder};

/// Relative inflation of the search ellipsoid.
pub const ENUMERATION_MARGIN: f64 = 1e-9;

/// Elements with `|u − t| ≤ BOUNDARY_TOLERANCE · t` are treated as lying on
/// the sphere `u = t`: they are excluded by the strict inequality and
/// reported separately.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Largest accepted value of `2N(1 + 2t)`.
pub const MAX_SEARCH_RADIUS: f64 = 1e8;

const MAX_PRUNING_WEIGHT: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountingError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("pulled-back form is not positive definite at z = ({x}, {y}); pivot {pivot}")]
    Degenerate { x: f64, y: f64, pivot: f64 },
    #[error("search radius {0:e} exceeds the supported range")]
    TooLarge(f64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error(transparent)]
    Quaternion(#[from] QuaternionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Arguments of `M(N, t; z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountQuery {
    norm: u64,
    t: f64,
    z: PlanePoint,
}

impl CountQuery {
    pub fn new(norm: u64, t: f64, z: PlanePoint) -> Result<Self, CountingError> {
        if norm == 0 {
            return Err(CountingError::InvalidQuery("norm must be at least 1".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(CountingError::InvalidQuery(format!("t must be positive, got {t}")));
        }
        Ok(Self { norm, t, z })
    }

    pub fn norm(&self) -> u64 {
        self.norm
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn z(&self) -> PlanePoint {
        self.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Strict `u < t`, with a relative band around `t` treated as the boundary.
pub fn classify(u: f64, t: f64) -> Membership {
    if (u - t).abs() <= BOUNDARY_TOLERANCE * t {
        Membership::Boundary
    } else if u < t {
        Membership::Inside
    } else {
        Membership::Outside
    }
}

/// Gram matrix of `γ ↦ ‖σ_z⁻¹ τ(γ) σ_z‖²_F` in order coordinates.
#[derive(Debug, Clone)]
pub struct PulledBackForm {
    z: PlanePoint,
    conjugated: [Mat2; 4],
    gram: [[f64; 4]; 4],
}

impl PulledBackForm {
    pub fn z(&self) -> PlanePoint {
        self.z
    }

    pub fn gram(&self) -> &[[f64; 4]; 4] {
        &self.gram
    }

    pub fn eval(&self, c: &[i64; 4]) -> f64 {
        quadratic(&self.gram, c)
    }

    /// `σ_z⁻¹ τ(γ) σ_z`.
    pub fn conjugate(&self, c: &[i64; 4]) -> Mat2 {
        self.conjugated
            .iter()
            .zip(c)
            .fold(Mat2::ZERO, |acc, (m, &k)| acc.add(&m.scale(k as f64)))
    }

    /// `(a − d)² + (b + c)²` of the conjugated matrix, i.e. `4 N(γ) u(γz, z)`.
    pub fn displacement(&self, c: &[i64; 4]) -> f64 {
        let m = self.conjugate(c);
        let (p, q) = (m.a - m.d, m.b + m.c);
        p * p + q * q
    }

    fn displacement_gram(&self) -> [[f64; 4]; 4] {
        let f1: Vec<f64> = self.conjugated.iter().map(|m| m.a - m.d).collect();
        let f2: Vec<f64> = self.conjugated.iter().map(|m| m.b + m.c).collect();
        std::array::from_fn(|k| std::array::from_fn(|l| f1[k] * f1[l] + f2[k] * f2[l]))
    }
}

fn quadratic(g: &[[f64; 4]; 4], c: &[i64; 4]) -> f64 {
    let mut acc = 0.0;
    for k in 0..4 {
        for l in 0..4 {
            acc += g[k][l] * c[k] as f64 * c[l] as f64;
        }
    }
    acc
}

/// Fincke–Pohst decomposition `F(x) = Σ q_ii (x_i + Σ_{j>i} q_ij x_j)²`.
/// Returns the failing pivot when `F` is not positive definite.
fn decompose(f: &[[f64; 4]; 4]) -> Result<[[f64; 4]; 4], f64> {
    let mut q = *f;
    for i in 0..4 {
        if !(q[i][i] > 0.0 && q[i][i].is_finite()) {
            return Err(q[i][i]);
        }
        for j in i + 1..4 {
            q[j][i] = q[i][j];
            q[i][j] /= q[i][i];
        }
        for k in i + 1..4 {
            for l in k..4 {
                q[k][l] -= q[k][i] * q[i][l];
            }
        }
    }
    Ok(q)
}

pub fn gram_form(order: &QuaternionOrder, z: &PlanePoint) -> Result<PulledBackForm, CountingError> {
    let images = order.basis_images()?;
    let sigma = transporter(z);
    let inv = sigma.inverse();
    let conjugated: [Mat2; 4] = std::array::from_fn(|k| inv.matrix().mul(&images[k]).mul(sigma.matrix()));
    let gram = std::array::from_fn(|k| std::array::from_fn(|l| conjugated[k].dot(&conjugated[l])));
    let form = PulledBackForm { z: *z, conjugated, gram };
    decompose(&form.gram).map_err(|pivot| CountingError::Degenerate { x: z.x(), y: z.y(), pivot })?;
    Ok(form)
}

/// Elements found for one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub elements: Vec<OrderElement>,
    pub count: usize,
    /// Norm-`N` elements with `u` inside the boundary band; not in `elements`.
    pub boundary_count: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    /// Number of slabs the outermost coordinate range is cut into.
    pub slabs: usize,
    pub margin: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { slabs: 4 * rayon::current_num_threads().max(1), margin: ENUMERATION_MARGIN }
    }
}

struct Search<'a> {
    order: &'a QuaternionOrder,
    form: &'a PulledBackForm,
    q: [[f64; 4]; 4],
    bound: f64,
    norm: i128,
    t: f64,
}

impl Search<'_> {
    fn interval(&self, i: usize, x: &[i64; 4], remaining: f64) -> (f64, i64, i64) {
        let center = -(i + 1..4).map(|j| self.q[i][j] * x[j] as f64).sum::<f64>();
        let r = (remaining.max(0.0) / self.q[i][i]).sqrt();
        let slack = 1e-9 * (1.0 + r + center.abs());
        let lo = (center - r - slack).ceil() as i64;
        let hi = (center + r + slack).floor() as i64;
        (center, lo, hi)
    }

    fn run(&self, top: std::ops::RangeInclusive<i64>, out: &mut Vec<(OrderElement, Membership)>) {
        let mut x = [0i64; 4];
        for x3 in top {
            x[3] = x3;
            let c3 = -0.0;
            let used = self.q[3][3] * (x3 as f64 - c3) * (x3 as f64 - c3);
            if used > self.bound * (1.0 + 1e-12) {
                continue;
            }
            self.descend(2, &mut x, self.bound - used, out);
        }
    }

    fn descend(&self, i: usize, x: &mut [i64; 4], remaining: f64, out: &mut Vec<(OrderElement, Membership)>) {
        let (center, lo, hi) = self.interval(i, x, remaining);
        if i == 0 {
            self.solve_last(x, lo, hi, out);
            return;
        }
        for v in lo..=hi {
            x[i] = v;
            let d = v as f64 - center;
            let rest = remaining - self.q[i][i] * d * d;
            if rest < -1e-9 * self.bound {
                continue;
            }
            self.descend(i - 1, x, rest, out);
        }
        x[i] = 0;
    }

    /// All integers `x₀` with `N(x) = norm`, given `x₁..x₃`.
    fn solve_last(&self, x: &mut [i64; 4], lo: i64, hi: i64, out: &mut Vec<(OrderElement, Membership)>) {
        let n = &self.order.norm_form().coeff;
        let a = n[0][0] as i128;
        let b: i128 = (1..4).map(|j| n[0][j] as i128 * x[j] as i128).sum();
        x[0] = 0;
        let c = self.order.norm_form().eval(x) - self.norm;
        let mut roots: Vec<i128> = Vec::with_capacity(2);
        if a != 0 {
            let disc = b * b - 4 * a * c;
            if disc < 0 {
                return;
            }
            let s = disc.sqrt();
            if s * s != disc {
                return;
            }
            for r in [-b + s, -b - s] {
                if let Some(v) = exact_div(r, 2 * a) {
                    if !roots.contains(&v) {
                        roots.push(v);
                    }
                }
            }
        } else if b != 0 {
            if let Some(v) = exact_div(-c, b) {
                roots.push(v);
            }
        } else if c == 0 {
            roots.extend((lo as i128)..=(hi as i128));
        }
        for r in roots {
            let Ok(v) = i64::try_from(r) else { continue };
            x[0] = v;
            self.accept(x, out);
        }
        x[0] = 0;
    }

    fn accept(&self, x: &[i64; 4], out: &mut Vec<(OrderElement, Membership)>) {
        if self.order.norm_form().eval(x) != self.norm {
            return;
        }
        let u = self.form.displacement(x) / (4.0 * self.norm as f64);
        match classify(u, self.t) {
            Membership::Outside => {}
            m => out.push((OrderElement(*x), m)),
        }
    }
}

/// Every `γ` in the order with `N(γ) = N` and `u(τ(γ)z, z) < t`, in
/// lexicographic order of coordinates.
pub fn enumerate(order: &QuaternionOrder, query: &CountQuery) -> Result<EnumerationResult, CountingError> {
    enumerate_with(order, query, EnumerationOptions::default())
}

pub fn enumerate_with(
    order: &QuaternionOrder,
    query: &CountQuery,
    opts: EnumerationOptions,
) -> Result<EnumerationResult, CountingError> {
    let form = gram_form(order, &query.z)?;
    enumerate_in_form(order, &form, query, opts)
}

/// Same as [`enumerate_with`] with a precomputed form for `query.z()`.
pub fn enumerate_in_form(
    order: &QuaternionOrder,
    form: &PulledBackForm,
    query: &CountQuery,
    opts: EnumerationOptions,
) -> Result<EnumerationResult, CountingError> {
    let n = query.norm as f64;
    let t = query.t;
    let radius = 2.0 * n * (1.0 + 2.0 * t);
    if radius > MAX_SEARCH_RADIUS {
        return Err(CountingError::TooLarge(radius));
    }
    // On the target set F_s = Q + s·D < 2N(1 + 2t) + 4Nts; s = (1 − 2t)/(2t)
    // minimises the ellipsoid volume.
    let s = if t < 0.5 { ((1.0 - 2.0 * t) / (2.0 * t)).min(MAX_PRUNING_WEIGHT) } else { 0.0 };
    let disp = form.displacement_gram();
    let pruned: [[f64; 4]; 4] =
        std::array::from_fn(|k| std::array::from_fn(|l| form.gram[k][l] + s * disp[k][l]));
    let q = decompose(&pruned).map_err(|pivot| CountingError::Degenerate {
        x: query.z.x(),
        y: query.z.y(),
        pivot,
    })?;
    let bound = (radius + 4.0 * n * t * s) * (1.0 + opts.margin);
    let search = Search { order, form, q, bound, norm: query.norm as i128, t };

    let r3 = (bound / q[3][3]).sqrt();
    let lo = (-r3 - 1e-9 * (1.0 + r3)).ceil() as i64;
    let hi = (r3 + 1e-9 * (1.0 + r3)).floor() as i64;
    let slabs = split_range(lo, hi, opts.slabs.max(1));
    let mut found: Vec<(OrderElement, Membership)> = slabs
        .into_par_iter()
        .map(|range| {
            let mut out = Vec::new();
            search.run(range, &mut out);
            out
        })
        .flatten()
        .collect();
    found.sort_by(|a, b| a.0.cmp(&b.0));
    found.dedup_by(|a, b| a.0 == b.0);
    let boundary_count = found.iter().filter(|(_, m)| *m == Membership::Boundary).count();
    let elements: Vec<OrderElement> = found
        .into_iter()
        .filter(|(_, m)| *m == Membership::Inside)
        .map(|(e, _)| e)
        .collect();
    Ok(EnumerationResult { count: elements.len(), elements, boundary_count })
}

/// Contiguous, non-overlapping pieces covering `lo..=hi`.
pub fn split_range(lo: i64, hi: i64, pieces: usize) -> Vec<std::ops::RangeInclusive<i64>> {
    if hi < lo {
        return Vec::new();
    }
    let len = (hi - lo + 1) as u64;
    let pieces = (pieces as u64).min(len).max(1);
    let mut out = Vec::with_capacity(pieces as usize);
    let mut start = lo;
    for p in 0..pieces {
        let size = len / pieces + u64::from(p < len % pieces);
        let end = start + size as i64 - 1;
        out.push(start..=end);
        start = end + 1;
    }
    out
}

/// `M(N, t; z)`.
pub fn count(order: &QuaternionOrder, query: &CountQuery) -> Result<u64, CountingError> {
    Ok(enumerate(order, query)?.count as u64)
}

/// `u(τ(γ)z, z)` computed through the Möbius action.
pub fn displacement_u(order: &QuaternionOrder, x: &OrderElement, z: &PlanePoint) -> Result<f64, CountingError> {
    let g = Isometry::new(order.embed(x)?)?;
    Ok(point_pair_u(&act(&g, z)?, z))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub k: u32,
    pub norm: u64,
    pub count: u64,
    /// `M / (t N²)`.
    pub ratio: f64,
    pub boundary_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthScan {
    pub prime: u64,
    pub t: f64,
    pub z: PlanePoint,
    pub rows: Vec<GrowthRow>,
    /// Least-squares slope of `ln M` against `ln N` over rows with `M > 0`.
    pub slope: Option<f64>,
    /// Set when a row failed; `rows` then holds the completed prefix.
    pub aborted: Option<String>,
}

impl GrowthScan {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

pub fn growth_scan(
    order: &QuaternionOrder,
    p: u64,
    k_max: u32,
    t: f64,
    z: PlanePoint,
) -> Result<GrowthScan, CountingError> {
    if !is_prime(p) {
        return Err(CountingError::NotPrime(p));
    }
    if !(t > 1.0 && t.is_finite()) {
        return Err(CountingError::InvalidQuery(format!("growth scan needs t > 1, got {t}")));
    }
    let form = gram_form(order, &z)?;
    let mut rows = Vec::new();
    let mut aborted = None;
    for k in 0..=k_max {
        let Some(norm) = p.checked_pow(k) else {
            aborted = Some(format!("p^{k} overflows"));
            break;
        };
        let res = CountQuery::new(norm, t, z)
            .and_then(|q| enumerate_in_form(order, &form, &q, EnumerationOptions::default()));
        match res {
            Ok(r) => rows.push(GrowthRow {
                k,
                norm,
                count: r.count as u64,
                ratio: r.count as f64 / (t * (norm as f64).powi(2)),
                boundary_count: r.boundary_count,
            }),
            Err(e) => {
                aborted = Some(format!("k = {k}: {e}"));
                break;
            }
        }
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.count > 0)
        .map(|r| ((r.norm as f64).ln(), (r.count as f64).ln()))
        .collect();
    Ok(GrowthScan { prime: p, t, z, slope: least_squares_slope(&pts), rows, aborted })
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub k: u32,
    pub norm: u64,
    /// `δ_N = N⁻⁴`.
    pub delta: f64,
    pub count: u64,
    pub perfect_square: bool,
    /// Count above the configured threshold.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaScan {
    pub prime: u64,
    pub z: PlanePoint,
    pub threshold: u64,
    pub rows: Vec<DeltaRow>,
}

pub fn is_perfect_square(n: u64) -> bool {
    let r = n.sqrt();
    r * r == n
}

pub fn delta_scan(
    order: &QuaternionOrder,
    p: u64,
    k_max: u32,
    z: PlanePoint,
    threshold: u64,
) -> Result<DeltaScan, CountingError> {
    if !is_prime(p) {
        return Err(CountingError::NotPrime(p));
    }
    let form = gram_form(order, &z)?;
    let mut rows = Vec::new();
    for k in 0..=k_max {
        let norm = p.checked_pow(k).ok_or_else(|| CountingError::InvalidQuery(format!("p^{k} overflows")))?;
        let delta = (norm as f64).powi(-4);
        let q = CountQuery::new(norm, delta, z)?;
        let count = enumerate_in_form(order, &form, &q, EnumerationOptions::default())?.count as u64;
        rows.push(DeltaRow { k, norm, delta, count, perfect_square: is_perfect_square(norm), flagged: count > threshold });
    }
    Ok(DeltaScan { prime: p, z, threshold, rows })
}

/// Reference counts from a plain scan of a coordinate box.
///
/// The box is the bounding box of the ellipsoid `Q_z(γ) < 2N(1 + 2t)` for
/// the largest `(N, t)` requested; every lattice point in it is tested with
/// the exact norm and `u` evaluated through the Möbius action. Kept
/// independent of the enumeration path above.
pub mod oracle {
    use super::*;

    #[derive(Debug, Clone)]
    pub struct BoxScan {
        pub max_norm: u64,
        pub max_t: f64,
        pub half_widths: [i64; 4],
        pub scanned: u64,
        /// `(element, u)` for every scanned element of norm `1..=max_norm`,
        /// indexed by norm.
        hits: Vec<Vec<(OrderElement, f64)>>,
    }

    impl BoxScan {
        pub fn elements(&self, norm: u64, t: f64) -> Vec<OrderElement> {
            assert!(norm >= 1 && norm <= self.max_norm && t <= self.max_t);
            let mut v: Vec<OrderElement> = self.hits[norm as usize]
                .iter()
                .filter(|(_, u)| classify(*u, t) == Membership::Inside)
                .map(|(e, _)| *e)
                .collect();
            v.sort();
            v
        }

        pub fn count(&self, norm: u64, t: f64) -> u64 {
            self.elements(norm, t).len() as u64
        }
    }

    fn invert(m: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
        let mut a = *m;
        let mut inv = [[0.0; 4]; 4];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for col in 0..4 {
            let piv = (col..4).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
            if a[piv][col] == 0.0 {
                return None;
            }
            a.swap(col, piv);
            inv.swap(col, piv);
            let p = a[col][col];
            for j in 0..4 {
                a[col][j] /= p;
                inv[col][j] /= p;
            }
            for r in 0..4 {
                if r != col {
                    let f = a[r][col];
                    for j in 0..4 {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn box_scan(
        order: &QuaternionOrder,
        z: &PlanePoint,
        max_norm: u64,
        max_t: f64,
    ) -> Result<BoxScan, CountingError> {
        let images = order.basis_images()?;
        let sigma = transporter(z);
        let inv = sigma.inverse();
        let conj: Vec<Mat2> = images.iter().map(|m| inv.matrix().mul(m).mul(sigma.matrix())).collect();
        let gram: [[f64; 4]; 4] = std::array::from_fn(|k| std::array::from_fn(|l| conj[k].dot(&conj[l])));
        let ginv = invert(&gram).ok_or(CountingError::Degenerate { x: z.x(), y: z.y(), pivot: 0.0 })?;
        let radius = 2.0 * max_norm as f64 * (1.0 + 2.0 * max_t) * (1.0 + 1e-6);
        let half_widths: [i64; 4] = std::array::from_fn(|k| (radius * ginv[k][k]).sqrt().floor() as i64 + 1);
        let mut hits = vec![Vec::new(); max_norm as usize + 1];
        let mut scanned = 0u64;
        let [w0, w1, w2, w3] = half_widths;
        for x0 in -w0..=w0 {
            for x1 in -w1..=w1 {
                for x2 in -w2..=w2 {
                    for x3 in -w3..=w3 {
                        scanned += 1;
                        let x = OrderElement([x0, x1, x2, x3]);
                        let n = order.reduced_norm(&x);
                        if n < 1 || n > max_norm as i128 {
                            continue;
                        }
                        let u = displacement_u(order, &x, z)?;
                        hits[n as usize].push((x, u));
                    }
                }
            }
        }
        Ok(BoxScan { max_norm, max_t, half_widths, scanned, hits })
    }
}
