//! Sphere and Hecke operators on a truncated `(p+1)`-regular tree.
//!
//! Vertices are numbered by depth. The root is `0`; the `p + 1` vertices of
//! depth one have offsets `0..=p`; a vertex of depth `d ≥ 1` at offset `o`
//! has children at offsets `o·p .. o·p + p − 1` of depth `d + 1`. No
//! adjacency is stored: parents and children are arithmetic on offsets, and
//! operator rows are generated on demand by non-backtracking walks.
//!
//! `U(n) = Σ_{k≤n, k≡n (2)} S_k` is `p^{n/2} T(pⁿ)`, so the Hecke relation
//! `T(pᵃ)T(pᵇ) = Σ_{i≤min(a,b)} T(p^{a+b−2i})` becomes the integer identity
//! `U(a)U(b) = Σ_i p^i U(a+b−2i)`. Identities are checked on rows whose
//! depth leaves room for every walk involved.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::amplifier::SatakeParameter;
use crate::is_prime;

/// Largest vertex count a tree may have.
pub const MAX_VERTICES: u64 = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("tree with p = {p} and radius {radius} is too large")]
    TooLarge { p: u64, radius: u32 },
    #[error("operator reach {reach} exceeds the tree radius {radius}")]
    InsufficientRadius { reach: u32, radius: u32 },
    #[error("{value} is not a power of {p}")]
    NotPrimePower { value: u64, p: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruncatedTree {
    p: u64,
    radius: u32,
    /// `level_start[d]` is the index of the first vertex of depth `d`;
    /// the last entry is the vertex count.
    level_start: Vec<usize>,
}

/// `1 + (p+1)(p^R − 1)/(p − 1)`.
pub fn vertex_count(p: u64, radius: u32) -> Option<u64> {
    let pr = p.checked_pow(radius)?;
    Some(1 + (p + 1).checked_mul((pr - 1) / (p - 1))?)
}

pub fn build_tree(p: u64, radius: u32) -> Result<TruncatedTree, TreeError> {
    if !is_prime(p) {
        return Err(TreeError::NotPrime(p));
    }
    if radius == 0 {
        return Err(TreeError::ZeroRadius);
    }
    match vertex_count(p, radius) {
        Some(n) if n <= MAX_VERTICES => {}
        _ => return Err(TreeError::TooLarge { p, radius }),
    }
    let mut level_start = vec![0usize, 1];
    let mut width = (p + 1) as usize;
    for _ in 1..=radius {
        level_start.push(level_start.last().unwrap() + width);
        width *= p as usize;
    }
    Ok(TruncatedTree { p, radius, level_start })
}

impl TruncatedTree {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        *self.level_start.last().unwrap()
    }

    pub fn depth(&self, v: usize) -> u32 {
        assert!(v < self.vertex_count(), "vertex {v} out of range");
        (self.level_start.partition_point(|&s| s <= v) - 1) as u32
    }

    fn locate(&self, v: usize) -> (u32, usize) {
        let d = self.depth(v);
        (d, v - self.level_start[d as usize])
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        match self.locate(v) {
            (0, _) => None,
            (1, _) => Some(0),
            (d, o) => Some(self.level_start[d as usize - 1] + o / self.p as usize),
        }
    }

    pub fn children(&self, v: usize) -> Range<usize> {
        let (d, o) = self.locate(v);
        if d == self.radius {
            return 0..0;
        }
        let next = self.level_start[d as usize + 1];
        if d == 0 {
            next..next + self.p as usize + 1
        } else {
            let p = self.p as usize;
            next + o * p..next + o * p + p
        }
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.parent(v).into_iter().chain(self.children(v)).collect()
    }

    /// Vertices of depth at most `R − reach`: exactly the rows on which an
    /// operator product reaching `reach` steps is untouched by truncation.
    pub fn interior(&self, reach: u32) -> Range<usize> {
        if reach > self.radius {
            return 0..0;
        }
        0..self.level_start[(self.radius - reach) as usize + 1]
    }

    /// Vertices at distance exactly `k` from `v`, sorted.
    pub fn sphere(&self, v: usize, k: u32) -> Vec<usize> {
        let mut out = Vec::new();
        self.walk(v, None, k, &mut out);
        out.sort_unstable();
        out
    }

    fn walk(&self, v: usize, from: Option<usize>, k: u32, out: &mut Vec<usize>) {
        if k == 0 {
            out.push(v);
            return;
        }
        if let Some(par) = self.parent(v) {
            if Some(par) != from {
                self.walk(par, Some(v), k - 1, out);
            }
        }
        for c in self.children(v) {
            if Some(c) != from {
                self.walk(c, Some(v), k - 1, out);
            }
        }
    }

    pub fn distance(&self, u: usize, v: usize) -> u32 {
        let (mut a, mut b) = (u, v);
        let (mut da, mut db) = (self.depth(a), self.depth(b));
        let mut steps = 0;
        while da > db {
            a = self.parent(a).unwrap();
            da -= 1;
            steps += 1;
        }
        while db > da {
            b = self.parent(b).unwrap();
            db -= 1;
            steps += 1;
        }
        while a != b {
            a = self.parent(a).unwrap();
            b = self.parent(b).unwrap();
            steps += 2;
        }
        steps
    }
}

/// Sparse integer row: sorted `(column, value)` with no zero values.
pub type SparseRow = Vec<(usize, i64)>;

/// `S_k`: entry `(u, v)` is `1` iff `d(u, v) = k`.
#[derive(Debug, Clone, Copy)]
pub struct SphereOperator<'t> {
    tree: &'t TruncatedTree,
    k: u32,
}

pub fn sphere_operator(tree: &TruncatedTree, k: u32) -> Result<SphereOperator<'_>, TreeError> {
    if k > tree.radius {
        return Err(TreeError::InsufficientRadius { reach: k, radius: tree.radius });
    }
    Ok(SphereOperator { tree, k })
}

impl SphereOperator<'_> {
    pub fn radius(&self) -> u32 {
        self.k
    }

    pub fn row(&self, v: usize) -> SparseRow {
        self.tree.sphere(v, self.k).into_iter().map(|w| (w, 1)).collect()
    }

    /// Number of ones in row `v`.
    pub fn row_sum(&self, v: usize) -> i64 {
        self.tree.sphere(v, self.k).len() as i64
    }
}

/// `U(n) = p^{n/2} T(pⁿ)`; the `p^{−n/2}` is kept as the exponent `n`.
#[derive(Debug, Clone, Copy)]
pub struct HeckeOperator<'t> {
    tree: &'t TruncatedTree,
    n: u32,
}

pub fn hecke_operator(tree: &TruncatedTree, n: u32) -> Result<HeckeOperator<'_>, TreeError> {
    if n > tree.radius {
        return Err(TreeError::InsufficientRadius { reach: n, radius: tree.radius });
    }
    Ok(HeckeOperator { tree, n })
}

impl HeckeOperator<'_> {
    pub fn order(&self) -> u32 {
        self.n
    }

    /// Power of `√p` dividing `U(n)` to give `T(pⁿ)`.
    pub fn scaling_exponent(&self) -> u32 {
        self.n
    }

    pub fn row(&self, v: usize) -> SparseRow {
        let mut cols: Vec<usize> = (0..=self.n)
            .rev()
            .step_by(2)
            .flat_map(|k| self.tree.sphere(v, k))
            .collect();
        cols.sort_unstable();
        cols.into_iter().map(|w| (w, 1)).collect()
    }

    pub fn row_sum(&self, v: usize) -> i64 {
        self.row(v).iter().map(|e| e.1).sum()
    }
}

/// `(p^{n+1} − 1)/(p − 1)`, the number of cosets of norm `pⁿ`.
pub fn coset_count(p: u64, n: u32) -> i64 {
    ((p.pow(n + 1) - 1) / (p - 1)) as i64
}

fn row_product(left: &SparseRow, right: impl Fn(usize) -> SparseRow) -> BTreeMap<usize, i64> {
    let mut acc = BTreeMap::new();
    for &(w, a) in left {
        for (c, b) in right(w) {
            *acc.entry(c).or_insert(0) += a * b;
        }
    }
    acc
}

fn add_scaled(acc: &mut BTreeMap<usize, i64>, row: SparseRow, scale: i64) {
    for (c, v) in row {
        *acc.entry(c).or_insert(0) += scale * v;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub row: usize,
    pub column: usize,
    pub lhs: i64,
    pub rhs: i64,
}

/// One term `coefficient · U(order)` (or `S(order)`) of a right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Term {
    pub coefficient: i64,
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    pub p: u64,
    pub radius: u32,
    pub left: (u32, u32),
    pub right: Vec<Term>,
    pub rows_checked: usize,
    pub mismatching_rows: usize,
    pub first_mismatch: Option<Mismatch>,
    pub passed: bool,
}

fn compare_rows(
    tree: &TruncatedTree,
    reach: u32,
    lhs: impl Fn(usize) -> BTreeMap<usize, i64> + Sync,
    rhs: impl Fn(usize) -> BTreeMap<usize, i64> + Sync,
) -> (usize, usize, Option<Mismatch>) {
    let rows = tree.interior(reach);
    let checked = rows.len();
    let bad: Vec<Mismatch> = rows
        .into_par_iter()
        .filter_map(|v| {
            let mut l = lhs(v);
            let mut r = rhs(v);
            l.retain(|_, x| *x != 0);
            r.retain(|_, x| *x != 0);
            if l == r {
                return None;
            }
            let column = l.keys().chain(r.keys()).copied().find(|c| l.get(c) != r.get(c)).unwrap();
            Some(Mismatch {
                row: v,
                column,
                lhs: l.get(&column).copied().unwrap_or(0),
                rhs: r.get(&column).copied().unwrap_or(0),
            })
        })
        .collect();
    let first = bad.iter().min_by_key(|m| m.row).cloned();
    (checked, bad.len(), first)
}

fn p_order(p: u64, value: u64) -> Result<u32, TreeError> {
    let mut v = value;
    let mut k = 0;
    if v == 0 {
        return Err(TreeError::NotPrimePower { value, p });
    }
    while v % p == 0 {
        v /= p;
        k += 1;
    }
    if v != 1 {
        return Err(TreeError::NotPrimePower { value, p });
    }
    Ok(k)
}

/// Checks `T(m)T(n) = Σ_{d|(m,n)} T(mn/d²)` for powers `m`, `n` of `p`.
pub fn verify_hecke_relation(tree: &TruncatedTree, m: u64, n: u64) -> Result<RelationReport, TreeError> {
    let a = p_order(tree.p, m)?;
    let b = p_order(tree.p, n)?;
    verify_hecke_orders(tree, a, b)
}

/// `U(a)U(b) = Σ_{i=0}^{min(a,b)} p^i U(a+b−2i)` on rows of depth `≤ R − a − b`.
pub fn verify_hecke_orders(tree: &TruncatedTree, a: u32, b: u32) -> Result<RelationReport, TreeError> {
    let reach = a + b;
    if reach > tree.radius {
        return Err(TreeError::InsufficientRadius { reach, radius: tree.radius });
    }
    let ua = hecke_operator(tree, a)?;
    let ub = hecke_operator(tree, b)?;
    let right: Vec<Term> =
        (0..=a.min(b)).map(|i| Term { coefficient: tree.p.pow(i) as i64, order: a + b - 2 * i }).collect();
    let (rows_checked, mismatching_rows, first_mismatch) = compare_rows(
        tree,
        reach,
        |v| row_product(&ua.row(v), |w| ub.row(w)),
        |v| {
            let mut acc = BTreeMap::new();
            for t in &right {
                add_scaled(&mut acc, HeckeOperator { tree, n: t.order }.row(v), t.coefficient);
            }
            acc
        },
    );
    Ok(RelationReport {
        p: tree.p,
        radius: tree.radius,
        left: (a, b),
        right,
        rows_checked,
        mismatching_rows,
        passed: mismatching_rows == 0,
        first_mismatch,
    })
}

/// `S₁S_k = S_{k+1} + p S_{k−1}` for `k ≥ 2` and `S₁S₁ = S₂ + (p+1)S₀`.
pub fn verify_sphere_recursion(tree: &TruncatedTree, k: u32) -> Result<RelationReport, TreeError> {
    let reach = k + 1;
    if k == 0 || reach > tree.radius {
        return Err(TreeError::InsufficientRadius { reach, radius: tree.radius });
    }
    let lower = if k == 1 { tree.p as i64 + 1 } else { tree.p as i64 };
    let right = vec![Term { coefficient: 1, order: k + 1 }, Term { coefficient: lower, order: k - 1 }];
    let (rows_checked, mismatching_rows, first_mismatch) = compare_rows(
        tree,
        reach,
        |v| row_product(&SphereOperator { tree, k: 1 }.row(v), |w| SphereOperator { tree, k }.row(w)),
        |v| {
            let mut acc = BTreeMap::new();
            for t in &right {
                add_scaled(&mut acc, SphereOperator { tree, k: t.order }.row(v), t.coefficient);
            }
            acc
        },
    );
    Ok(RelationReport {
        p: tree.p,
        radius: tree.radius,
        left: (1, k),
        right,
        rows_checked,
        mismatching_rows,
        passed: mismatching_rows == 0,
        first_mismatch,
    })
}

/// Interior rows whose sum differs from `σ(pⁿ)`; empty when all agree.
pub fn hecke_row_sum_violations(tree: &TruncatedTree, n: u32) -> Result<Vec<usize>, TreeError> {
    let u = hecke_operator(tree, n)?;
    let want = coset_count(tree.p, n);
    Ok(tree.interior(n).filter(|&v| u.row_sum(v) != want).collect())
}

/// Interior rows whose sum differs from `p^{k−1}(p+1)` (or `1` at `k = 0`).
pub fn sphere_row_sum_violations(tree: &TruncatedTree, k: u32) -> Result<Vec<usize>, TreeError> {
    let s = sphere_operator(tree, k)?;
    let want = if k == 0 { 1 } else { (tree.p.pow(k - 1) * (tree.p + 1)) as i64 };
    Ok(tree.interior(k).filter(|&v| s.row_sum(v) != want).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenConsistency {
    pub n: u32,
    /// `|λ(pⁿ⁺¹) − λ(pⁿ)λ(p) + λ(pⁿ⁻¹)|` from the closed form.
    pub residual: f64,
}

/// The relation `U(n)U(1) = U(n+1) + pU(n−1)` seen through an eigenvalue
/// sequence: the recurrence residual of the closed-form values.
pub fn eigenvalue_consistency(
    tree: &TruncatedTree,
    alpha: &SatakeParameter,
    n: u32,
) -> Result<EigenConsistency, TreeError> {
    if n + 1 > tree.radius {
        return Err(TreeError::InsufficientRadius { reach: n + 1, radius: tree.radius });
    }
    let prev = if n == 0 { 0.0 } else { alpha.lambda(n - 1) };
    let residual = (alpha.lambda(n + 1) - alpha.lambda(n) * alpha.first() + prev).abs();
    Ok(EigenConsistency { n, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplifier::Sign;
    use std::f64::consts::PI;

    #[test]
    fn vertex_counts() {
        assert_eq!(build_tree(2, 1).unwrap().vertex_count(), 4);
        assert_eq!(build_tree(3, 2).unwrap().vertex_count(), 17);
        assert_eq!(build_tree(2, 8).unwrap().vertex_count(), 766);
        assert_eq!(build_tree(5, 8).unwrap().vertex_count(), 585_937);
        assert_eq!(build_tree(4, 2), Err(TreeError::NotPrime(4)));
        assert_eq!(build_tree(2, 0), Err(TreeError::ZeroRadius));
    }

    #[test]
    fn adjacency_is_a_tree() {
        let t = build_tree(3, 4).unwrap();
        let n = t.vertex_count();
        let edges: usize = (0..n).map(|v| t.children(v).len()).sum();
        assert_eq!(edges, n - 1);
        for v in 1..n {
            let par = t.parent(v).unwrap();
            assert!(t.children(par).contains(&v));
            assert_eq!(t.depth(par) + 1, t.depth(v));
        }
        assert_eq!(t.neighbors(0).len(), 4);
        assert!(t.interior(1).all(|v| t.neighbors(v).len() == 4));
    }

    #[test]
    fn sphere_zero_is_identity() {
        let t = build_tree(2, 3).unwrap();
        let s0 = sphere_operator(&t, 0).unwrap();
        assert!((0..t.vertex_count()).all(|v| s0.row(v) == vec![(v, 1)]));
        assert!(sphere_operator(&t, 4).is_err());
    }

    #[test]
    fn spheres_are_symmetric_and_match_distance() {
        let t = build_tree(3, 3).unwrap();
        let n = t.vertex_count();
        for k in 0..=3 {
            let s = sphere_operator(&t, k).unwrap();
            let rows: Vec<Vec<usize>> = (0..n).map(|v| s.row(v).into_iter().map(|e| e.0).collect()).collect();
            for u in 0..n {
                for &v in &rows[u] {
                    assert!(rows[v].binary_search(&u).is_ok());
                    assert_eq!(t.distance(u, v), k);
                }
            }
        }
    }

    #[test]
    fn row_sums() {
        let t = build_tree(3, 4).unwrap();
        assert_eq!(sphere_operator(&t, 2).unwrap().row_sum(0), 12);
        for k in 0..=4 {
            assert!(sphere_row_sum_violations(&t, k).unwrap().is_empty());
            assert!(hecke_row_sum_violations(&t, k).unwrap().is_empty());
        }
    }

    #[test]
    fn sphere_square() {
        let t = build_tree(2, 6).unwrap();
        for k in 1..=5 {
            let r = verify_sphere_recursion(&t, k).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.rows_checked > 0);
        }
    }

    #[test]
    fn hecke_small_cases() {
        let t = build_tree(3, 5).unwrap();
        let r = verify_hecke_relation(&t, 3, 3).unwrap();
        assert!(r.passed);
        assert_eq!(r.right, vec![Term { coefficient: 1, order: 2 }, Term { coefficient: 3, order: 0 }]);
        assert!(verify_hecke_relation(&t, 3, 1).unwrap().passed);
        assert!(matches!(verify_hecke_relation(&t, 6, 3), Err(TreeError::NotPrimePower { .. })));
        assert!(matches!(verify_hecke_relation(&t, 27, 27), Err(TreeError::InsufficientRadius { .. })));
    }

    #[test]
    fn wrong_identity_is_caught() {
        // S₁² = S₂ + p·S₀ is off by one on the diagonal.
        let t = build_tree(2, 3).unwrap();
        let s1 = SphereOperator { tree: &t, k: 1 };
        let (_, bad, first) = compare_rows(
            &t,
            2,
            |v| row_product(&s1.row(v), |w| s1.row(w)),
            |v| {
                let mut acc = BTreeMap::new();
                add_scaled(&mut acc, SphereOperator { tree: &t, k: 2 }.row(v), 1);
                add_scaled(&mut acc, vec![(v, 1)], 2);
                acc
            },
        );
        assert_eq!(bad, t.interior(2).len());
        assert_eq!(first, Some(Mismatch { row: 0, column: 0, lhs: 3, rhs: 2 }));
    }

    #[test]
    fn eigen_residuals() {
        let t = build_tree(2, 6).unwrap();
        let r = eigenvalue_consistency(&t, &SatakeParameter::tempered(PI / 3.0).unwrap(), 2).unwrap();
        assert!(r.residual < 1e-12);
        let s = SatakeParameter::singular(Sign::Plus);
        assert!((0..=5).all(|n| eigenvalue_consistency(&t, &s, n).unwrap().residual == 0.0));
        assert!(eigenvalue_consistency(&t, &s, 6).is_err());
    }
}
