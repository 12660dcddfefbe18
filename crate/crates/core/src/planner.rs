//! Parameter choices and term comparison of the amplified bound.
//!
//! Everything is carried in log space: `log λ` up to `10⁶` is supported.

use serde::Serialize;
use thiserror::Error;

use crate::counting::{count, CountQuery, CountingError};
use crate::hyperbolic::PlanePoint;
use crate::is_prime;
use crate::logval::LogValue;
use crate::quaternion::QuaternionOrder;

/// Slack in `⌊log λ / (100 log Πp)⌋` so that exact multiples are not lost to
/// rounding.
const FLOOR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("log λ must exceed 1, got {0}")]
    SmallLambda(f64),
    #[error("no primes given")]
    NoPrimes,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("C must be positive, got {0}")]
    BadConstant(f64),
    #[error("amplifier length L = ⌊{0:.4}⌋ is below 1; λ is too small for these primes")]
    LengthTooSmall(f64),
    #[error("ε = {0} must lie in (0, 1]")]
    BadEpsilon(f64),
    #[error("δ must be positive, got {0}")]
    BadDelta(f64),
    #[error(transparent)]
    Counting(#[from] CountingError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanInput {
    pub log_lambda: f64,
    pub primes: Vec<u64>,
    /// The constant of the kernel envelope; not determined by the method.
    pub c_const: f64,
    /// `A_L`; `None` uses `Π_p Σ_{n=1}^{L} (n+1)²`.
    pub amplifier_mass: Option<LogValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanOutput {
    pub log_lambda: f64,
    pub primes: Vec<u64>,
    pub c_const: f64,
    pub length: u64,
    /// `4C + 4`.
    pub c: f64,
    /// `c / log λ`.
    pub epsilon: f64,
    pub amplifier_mass: LogValue,
    /// `(λ / log λ) A_L`.
    pub term1: LogValue,
    /// `λ^{1/2 + (C+1)/c} L^{|P|} A_L Π p^{7L}`.
    pub term2: LogValue,
    /// `λ / (log λ)^{|P|+1}`.
    pub bound: LogValue,
    /// `term2 ≤ term1`.
    pub dominance: bool,
    /// `ln term2 − ln term1`.
    pub log_ratio: f64,
    /// `(|P| + 1)/2`: the power of `log λ` saved in the sup norm.
    pub saving_exponent: f64,
}

fn validate_primes(primes: &[u64]) -> Result<f64, PlanError> {
    if primes.is_empty() {
        return Err(PlanError::NoPrimes);
    }
    if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
        return Err(PlanError::NotPrime(p));
    }
    Ok(primes.iter().map(|&p| (p as f64).ln()).sum())
}

/// `Π_p Σ_{n=1}^{L} (n+1)²`.
pub fn singular_amplifier_mass(primes: usize, length: u64) -> LogValue {
    let l = length as f64;
    // Σ_{m=2}^{L+1} m²
    let s = (l + 1.0) * (l + 2.0) * (2.0 * l + 3.0) / 6.0 - 1.0;
    LogValue::from_ln(primes as f64 * s.ln())
}

pub fn plan(input: &PlanInput) -> Result<PlanOutput, PlanError> {
    let ll = input.log_lambda;
    if !(ll > 1.0 && ll.is_finite()) {
        return Err(PlanError::SmallLambda(ll));
    }
    if !(input.c_const > 0.0 && input.c_const.is_finite()) {
        return Err(PlanError::BadConstant(input.c_const));
    }
    let log_prod = validate_primes(&input.primes)?;
    let raw = ll / (100.0 * log_prod);
    let length = (raw * (1.0 + FLOOR_SLACK)).floor();
    if length < 1.0 {
        return Err(PlanError::LengthTooSmall(raw));
    }
    let length_u = length as u64;
    let np = input.primes.len() as f64;
    let c = 4.0 * input.c_const + 4.0;
    let epsilon = c / ll;
    let a_l = input.amplifier_mass.unwrap_or_else(|| singular_amplifier_mass(input.primes.len(), length_u));
    let term1 = LogValue::from_ln(ll - ll.ln()).mul(&a_l);
    let term2 = LogValue::from_ln(
        (0.5 + (input.c_const + 1.0) / c) * ll + np * length.ln() + 7.0 * length * log_prod,
    )
    .mul(&a_l);
    let bound = LogValue::from_ln(ll - (np + 1.0) * ll.ln());
    let log_ratio = term2.ln() - term1.ln();
    Ok(PlanOutput {
        log_lambda: ll,
        primes: input.primes.clone(),
        c_const: input.c_const,
        length: length_u,
        c,
        epsilon,
        amplifier_mass: a_l,
        term1,
        term2,
        bound,
        dominance: term2 <= term1,
        log_ratio,
        saving_exponent: (np + 1.0) / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominancePoint {
    pub log_lambda: f64,
    pub length: u64,
    pub dominance: bool,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceScan {
    pub points: Vec<DominancePoint>,
    /// Smallest grid value from which dominance holds at every later point.
    pub threshold: Option<f64>,
    /// First grid value with dominance.
    pub first_dominant: Option<f64>,
}

impl DominanceScan {
    /// Dominance never switches off once on.
    pub fn monotone(&self) -> bool {
        self.threshold == self.first_dominant
    }
}

/// Plans on the geometric grid `start · ratioᵏ ≤ stop`, starting at the
/// smallest `log λ` with `L ≥ 1`.
pub fn dominance_scan(primes: &[u64], c_const: f64, ratio: f64, stop: f64) -> Result<DominanceScan, PlanError> {
    let log_prod = validate_primes(primes)?;
    assert!(ratio > 1.0, "grid ratio must exceed 1");
    let mut ll = 100.0 * log_prod;
    let mut points = Vec::new();
    while ll <= stop {
        let out = plan(&PlanInput { log_lambda: ll, primes: primes.to_vec(), c_const, amplifier_mass: None })?;
        points.push(DominancePoint { log_lambda: ll, length: out.length, dominance: out.dominance, log_ratio: out.log_ratio });
        ll *= ratio;
    }
    let last_bad = points.iter().rposition(|p| !p.dominance);
    let threshold = match last_bad {
        None => points.first().map(|p| p.log_lambda),
        Some(i) => points.get(i + 1).map(|p| p.log_lambda),
    };
    let first_dominant = points.iter().find(|p| p.dominance).map(|p| p.log_lambda);
    Ok(DominanceScan { points, threshold, first_dominant })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitTerms {
    pub norm: u64,
    pub delta: f64,
    /// `M(N, δ; z)`.
    pub near_count: u64,
    /// `λ^{1/c}` with `c = ε log λ`.
    pub far_radius: f64,
    /// `M(N, λ^{1/c}; z)`.
    pub far_count: u64,
    /// `(λ / log λ) M(N, δ; z)`.
    pub near: LogValue,
    /// `(λ / log(1 + 2δ))^{1/2} λ^{C/c} M(N, λ^{1/c}; z)`.
    pub far: LogValue,
}

/// `δ = (√(mn)/d)^{−8}` for the `d`-th summand.
pub fn summand_delta(m: u64, n: u64, d: u64) -> f64 {
    (((m as f64) * (n as f64)).sqrt() / d as f64).powi(-8)
}

/// Near and far parts of the geometric side with counts from the order.
pub fn splitting_estimate(
    order: &QuaternionOrder,
    norm: u64,
    delta: f64,
    log_lambda: f64,
    epsilon: f64,
    c_const: f64,
    z: PlanePoint,
) -> Result<SplitTerms, PlanError> {
    if !(log_lambda > 1.0 && log_lambda.is_finite()) {
        return Err(PlanError::SmallLambda(log_lambda));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(PlanError::BadEpsilon(epsilon));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(PlanError::BadDelta(delta));
    }
    let c = epsilon * log_lambda;
    let far_radius = (log_lambda / c).exp();
    let near_count = count(order, &CountQuery::new(norm, delta, z)?)?;
    let far_count = count(order, &CountQuery::new(norm, far_radius, z)?)?;
    let near = LogValue::from_ln(log_lambda - log_lambda.ln()).mul(&LogValue::from_f64(near_count as f64));
    let far = LogValue::from_ln(0.5 * (log_lambda - (2.0 * delta).ln_1p().ln()) + c_const / c * log_lambda)
        .mul(&LogValue::from_f64(far_count as f64));
    Ok(SplitTerms { norm, delta, near_count, far_radius, far_count, near, far })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::default_order;

    fn input(ll: f64, primes: &[u64]) -> PlanInput {
        PlanInput { log_lambda: ll, primes: primes.to_vec(), c_const: 1.0, amplifier_mass: None }
    }

    #[test]
    fn length_one_at_hundred_log_two() {
        let out = plan(&input(100.0 * 2f64.ln(), &[2])).unwrap();
        assert_eq!(out.length, 1);
        assert_eq!(out.c, 8.0);
        assert!(matches!(plan(&input(60.0, &[2])), Err(PlanError::LengthTooSmall(_))));
    }

    #[test]
    fn dominance_at_large_lambda() {
        let out = plan(&input(1000.0, &[2])).unwrap();
        assert!(out.dominance);
        assert!(out.log_ratio < 0.0);
    }

    #[test]
    fn bound_shape() {
        let out = plan(&input(5000.0, &[2, 3])).unwrap();
        assert!((out.bound.ln() - (5000.0 - 3.0 * 5000f64.ln())).abs() < 1e-9);
        assert_eq!(out.saving_exponent, 1.5);
    }

    #[test]
    fn huge_lambda_stays_finite() {
        let out = plan(&input(1e6, &[2, 3, 5])).unwrap();
        assert!(out.term1.ln().is_finite() && out.term2.ln().is_finite());
        assert_eq!(out.term1.to_f64(), None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(plan(&input(0.5, &[2])).is_err());
        assert!(plan(&input(1000.0, &[])).is_err());
        assert!(plan(&input(1000.0, &[6])).is_err());
        assert!(plan(&PlanInput { c_const: 0.0, ..input(1000.0, &[2]) }).is_err());
    }

    #[test]
    fn singular_mass() {
        assert!((singular_amplifier_mass(1, 2).to_f64().unwrap() - 13.0).abs() < 1e-12);
        assert!((singular_amplifier_mass(2, 2).to_f64().unwrap() - 169.0).abs() < 1e-10);
    }

    #[test]
    fn units_in_near_term() {
        let order = default_order();
        let s = splitting_estimate(&order, 1, 1e-3, 10.0, 0.8, 1.0, PlanePoint::i()).unwrap();
        assert!(s.near_count >= 2);
        assert!(s.near.ln() >= (2.0 * 10f64.exp() / 10.0).ln() - 1e-12);
        let again = splitting_estimate(&order, 1, 1e-3, 10.0, 0.8, 1.0, PlanePoint::i()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn far_prefactor_shrinks_with_delta() {
        let order = default_order();
        let a = splitting_estimate(&order, 4, 0.01, 10.0, 0.8, 1.0, PlanePoint::i()).unwrap();
        let b = splitting_estimate(&order, 4, 10.0, 10.0, 0.8, 1.0, PlanePoint::i()).unwrap();
        assert_eq!(a.far_count, b.far_count);
        assert!(b.far < a.far);
        assert_eq!(summand_delta(2, 8, 2), 2f64.powi(-8));
    }
}
