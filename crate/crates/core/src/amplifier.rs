//! Hecke eigenvalue sequences at a prime, the amplifier built from them and
//! the sums that control it.
//!
//! Eigenvalues are normalised so that `λ(p) = α + α⁻¹` and
//! `λ(pⁿ) = (αⁿ⁺¹ − α⁻ⁿ⁻¹)/(α − α⁻¹)`; they satisfy
//! `λ(pⁿ⁺¹) = λ(pⁿ)λ(p) − λ(pⁿ⁻¹)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::is_prime;
use crate::logval::LogValue;

/// Tempered parameters this close to `0` or `π` are treated as singular.
pub const SINGULAR_WINDOW: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmplifierError {
    #[error("tempered angle must lie in (0, π), got {0}")]
    AngleOutOfRange(f64),
    #[error("nontempered parameter must be positive, got {0}")]
    NonPositiveParameter(f64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} appears twice")]
    RepeatedPrime(u64),
    #[error("amplifier length must be at least 1")]
    ZeroLength,
    #[error("no primes given")]
    EmptySupport,
    #[error("{0} has a prime factor outside the support")]
    PrimeOutsideSupport(String),
    #[error("expected one eigenvalue sequence per prime of the support")]
    SequenceMismatch,
    #[error("sequence for p = {p} holds {have} terms, {need} needed")]
    SequenceTooShort { p: u64, have: usize, need: usize },
    #[error("weight vector is zero")]
    ZeroWeights,
    #[error("expected {expected} weights, got {got}")]
    WeightLength { expected: usize, got: usize },
    #[error("angle grid must lie inside (0, π)")]
    BadGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn pow(self, n: u32) -> f64 {
        if self == Sign::Minus && n % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

/// `α = e^{iθ}`, `±e^{θ}` or `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SatakeParameter {
    Tempered { theta: f64 },
    Nontempered { theta: f64, sign: Sign },
    Singular { sign: Sign },
}

impl SatakeParameter {
    /// `α = e^{iθ}`; angles within [`SINGULAR_WINDOW`] of `0` or `π` become
    /// `α = ±1`.
    pub fn tempered(theta: f64) -> Result<Self, AmplifierError> {
        if !(theta.is_finite() && (0.0..=PI).contains(&theta)) {
            return Err(AmplifierError::AngleOutOfRange(theta));
        }
        if theta <= SINGULAR_WINDOW {
            Ok(SatakeParameter::Singular { sign: Sign::Plus })
        } else if PI - theta <= SINGULAR_WINDOW {
            Ok(SatakeParameter::Singular { sign: Sign::Minus })
        } else {
            Ok(SatakeParameter::Tempered { theta })
        }
    }

    pub fn nontempered(theta: f64, sign: Sign) -> Result<Self, AmplifierError> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(AmplifierError::NonPositiveParameter(theta));
        }
        if theta <= SINGULAR_WINDOW {
            return Ok(SatakeParameter::Singular { sign });
        }
        Ok(SatakeParameter::Nontempered { theta, sign })
    }

    pub fn singular(sign: Sign) -> Self {
        SatakeParameter::Singular { sign }
    }

    /// `λ(pⁿ)` from the closed form.
    pub fn lambda(&self, n: u32) -> f64 {
        match *self {
            SatakeParameter::Tempered { theta } => {
                if theta <= PI / 2.0 {
                    ((n + 1) as f64 * theta).sin() / theta.sin()
                } else {
                    // sin((n+1)(π−φ)) = (−1)ⁿ sin((n+1)φ); keeps the
                    // argument small when θ is near π.
                    let phi = PI - theta;
                    Sign::Minus.pow(n) * ((n + 1) as f64 * phi).sin() / phi.sin()
                }
            }
            SatakeParameter::Nontempered { theta, sign } => {
                sign.pow(n) * ((n + 1) as f64 * theta).sinh() / theta.sinh()
            }
            SatakeParameter::Singular { sign } => sign.pow(n) * (n + 1) as f64,
        }
    }

    /// `λ(p) = α + α⁻¹`.
    pub fn first(&self) -> f64 {
        match *self {
            SatakeParameter::Tempered { theta } => 2.0 * theta.cos(),
            SatakeParameter::Nontempered { theta, sign } => 2.0 * sign.value() * theta.cosh(),
            SatakeParameter::Singular { sign } => 2.0 * sign.value(),
        }
    }

    /// `|α² − 1|`.
    pub fn distance_to_singular(&self) -> f64 {
        match *self {
            SatakeParameter::Tempered { theta } => 2.0 * theta.sin().abs(),
            SatakeParameter::Nontempered { theta, .. } => (2.0 * theta).exp_m1(),
            SatakeParameter::Singular { .. } => 0.0,
        }
    }
}

/// `λ(p⁰), …, λ(p^L)` at one prime.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueSequence {
    prime: u64,
    parameter: SatakeParameter,
    values: Vec<f64>,
}

impl EigenvalueSequence {
    pub fn new(prime: u64, parameter: SatakeParameter, length: u32) -> Result<Self, AmplifierError> {
        if !is_prime(prime) {
            return Err(AmplifierError::NotPrime(prime));
        }
        let values = (0..=length).map(|n| parameter.lambda(n)).collect();
        Ok(Self { prime, parameter, values })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn parameter(&self) -> SatakeParameter {
        self.parameter
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `λ(pⁿ)`; computed on demand beyond the cached range.
    pub fn value(&self, n: u32) -> f64 {
        self.values.get(n as usize).copied().unwrap_or_else(|| self.parameter.lambda(n))
    }

    /// `λ(p⁰), …, λ(p^L)` from the three-term recurrence.
    pub fn by_recurrence(&self, length: u32) -> Vec<f64> {
        let l1 = self.parameter.first();
        let mut out = Vec::with_capacity(length as usize + 1);
        let (mut prev, mut cur) = (0.0, 1.0);
        out.push(cur);
        for _ in 0..length {
            let next = cur * l1 - prev;
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    }

    /// `σ(p^m) = p^{m/2} λ(p^m) − p^{m/2 − 1} λ(p^{m−2})`, with `λ(p⁻¹) = λ(p⁻²) = 0`.
    pub fn sigma(&self, m: u32) -> f64 {
        let p = self.prime as f64;
        let half = m as f64 / 2.0;
        let lower = if m >= 2 { p.powf(half - 1.0) * self.value(m - 2) } else { 0.0 };
        p.powf(half) * self.value(m) - lower
    }
}

/// `λ(pⁿ)` for the sequence.
pub fn lambda_value(seq: &EigenvalueSequence, n: u32) -> f64 {
    seq.value(n)
}

/// The primes `P` and length `L` of an amplifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AmplifierSupport {
    primes: Vec<u64>,
    length: u32,
}

impl AmplifierSupport {
    pub fn new(primes: &[u64], length: u32) -> Result<Self, AmplifierError> {
        if primes.is_empty() {
            return Err(AmplifierError::EmptySupport);
        }
        if length == 0 {
            return Err(AmplifierError::ZeroLength);
        }
        for (i, &p) in primes.iter().enumerate() {
            if !is_prime(p) {
                return Err(AmplifierError::NotPrime(p));
            }
            if primes[..i].contains(&p) {
                return Err(AmplifierError::RepeatedPrime(p));
            }
        }
        Ok(Self { primes: primes.to_vec(), length })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    /// `L^{|P|}`.
    pub fn size(&self) -> usize {
        (self.length as usize).pow(self.primes.len() as u32)
    }

    /// Exponent vectors of the members `Π p^{k_p}`, `1 ≤ k_p ≤ L`, in
    /// lexicographic order.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::with_capacity(self.size());
        let mut e = vec![1u32; self.primes.len()];
        loop {
            out.push(e.clone());
            let mut i = e.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if e[i] < self.length {
                    e[i] += 1;
                    break;
                }
                e[i] = 1;
            }
        }
    }

    pub fn modulus(&self, exponents: &[u32]) -> BigUint {
        self.primes
            .iter()
            .zip(exponents)
            .fold(BigUint::from(1u32), |acc, (&p, &k)| acc * BigUint::from(p).pow(k))
    }

    fn check_sequences(&self, seqs: &[EigenvalueSequence], need: u32) -> Result<(), AmplifierError> {
        if seqs.len() != self.primes.len() || seqs.iter().zip(&self.primes).any(|(s, &p)| s.prime != p) {
            return Err(AmplifierError::SequenceMismatch);
        }
        for s in seqs {
            if s.len() < need as usize + 1 {
                return Err(AmplifierError::SequenceTooShort { p: s.prime, have: s.len(), need: need as usize + 1 });
            }
        }
        Ok(())
    }
}

fn product_lambda(seqs: &[EigenvalueSequence], exponents: &[u32]) -> f64 {
    seqs.iter().zip(exponents).map(|(s, &k)| s.value(k)).product()
}

/// `λ(m) = Π_p λ(p^{v_p(m)})`.
pub fn lambda_multiplicative(seqs: &[EigenvalueSequence], m: &BigUint) -> Result<f64, AmplifierError> {
    let zero = BigUint::from(0u32);
    if *m == zero {
        return Err(AmplifierError::PrimeOutsideSupport("0".into()));
    }
    let mut rest = m.clone();
    let mut value = 1.0;
    for s in seqs {
        let p = BigUint::from(s.prime);
        let mut k = 0u32;
        while (&rest % &p) == zero {
            rest /= &p;
            k += 1;
        }
        value *= s.value(k);
    }
    if rest != BigUint::from(1u32) {
        return Err(AmplifierError::PrimeOutsideSupport(m.to_string()));
    }
    Ok(value)
}

/// Which argument of the lower-bound proof applies at an angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `|α² − 1| > 1/L`: the geometric sum is small.
    Oscillating,
    /// `|α² − 1| ≤ 1/L`: a single large term dominates.
    NearSingular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    /// `Σ_{n≤L} λ(pⁿ)² / L`.
    pub ratio: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub length: u32,
    pub min_ratio: f64,
    pub argmin: f64,
    pub rows: Vec<SweepRow>,
}

/// `S(θ, L) = Σ_{n=1}^{L} λ(pⁿ)²`.
pub fn square_sum(param: &SatakeParameter, length: u32) -> f64 {
    (1..=length).map(|n| param.lambda(n).powi(2)).sum()
}

/// `min_θ S(θ, L)/L` over the grid. The tempered eigenvalues do not depend
/// on `p`.
pub fn sum_lower_bound_sweep(length: u32, grid: &[f64]) -> Result<SweepResult, AmplifierError> {
    if length == 0 {
        return Err(AmplifierError::ZeroLength);
    }
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0 && t < PI)) {
        return Err(AmplifierError::BadGrid);
    }
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&theta| {
            let param = SatakeParameter::tempered(theta).expect("grid checked");
            let regime = if param.distance_to_singular() > 1.0 / length as f64 {
                Regime::Oscillating
            } else {
                Regime::NearSingular
            };
            SweepRow { theta, ratio: square_sum(&param, length) / length as f64, regime }
        })
        .collect();
    let best = rows
        .iter()
        .min_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("grid is non-empty");
    Ok(SweepResult { length, min_ratio: best.ratio, argmin: best.theta, rows: rows.clone() })
}

/// `k·step` for `k ≥ 1` while below `π`.
pub fn angle_grid(step: f64) -> Vec<f64> {
    (1..).map(|k| k as f64 * step).take_while(|&t| t < PI).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSumRow {
    pub n: u32,
    /// `Σ_{k=0}^{n} σ(p^{2k})`.
    pub sigma_sum: f64,
    /// `pⁿ sinh((2n+1)θ)/sinh θ`.
    pub closed_form: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NontemperedReport {
    pub prime: u64,
    pub theta: f64,
    pub partial_sums: Vec<PartialSumRow>,
    pub max_rel_error: f64,
    /// `|λ(pⁿ)| ≥ n + 1` for every `n ≤ L`.
    pub dominates_singular: bool,
}

pub fn nontempered_check(prime: u64, theta: f64, length: u32) -> Result<NontemperedReport, AmplifierError> {
    let seq = EigenvalueSequence::new(prime, SatakeParameter::nontempered(theta, Sign::Plus)?, length)?;
    let p = prime as f64;
    let sh = theta.sinh();
    let mut partial_sums = Vec::new();
    let mut acc = 0.0;
    for n in 0..=length / 2 {
        acc += seq.sigma(2 * n);
        let closed_form = if theta <= SINGULAR_WINDOW {
            p.powi(n as i32) * (2 * n + 1) as f64
        } else {
            p.powi(n as i32) * ((2 * n + 1) as f64 * theta).sinh() / sh
        };
        partial_sums.push(PartialSumRow {
            n,
            sigma_sum: acc,
            closed_form,
            rel_error: (acc - closed_form).abs() / closed_form.abs(),
        });
    }
    let max_rel_error = partial_sums.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    // Relative slack for the rounding in sinh ratios near the singular limit.
    let dominates_singular = (0..=length).all(|n| seq.value(n).abs() >= (n + 1) as f64 * (1.0 - 1e-12));
    Ok(NontemperedReport { prime, theta, partial_sums, max_rel_error, dominates_singular })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplifierValue {
    /// `Σ_{n=1}^{L} λ(pⁿ)²` per prime.
    pub per_prime: Vec<f64>,
    /// `A_L`, the product of the per-prime sums.
    pub a_l: f64,
    /// Eigenvalue of `K_L`, equal to `A_L²`.
    pub kernel_eigenvalue: f64,
}

pub fn amplifier_value(seqs: &[EigenvalueSequence], support: &AmplifierSupport) -> Result<AmplifierValue, AmplifierError> {
    support.check_sequences(seqs, support.length)?;
    let per_prime: Vec<f64> =
        seqs.iter().map(|s| (1..=support.length).map(|n| s.value(n).powi(2)).sum()).collect();
    let a_l: f64 = per_prime.iter().product();
    Ok(AmplifierValue { per_prime, a_l, kernel_eigenvalue: a_l * a_l })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionTerm {
    /// `v_p(M)` for each prime of the support.
    pub exponents: Vec<u32>,
    #[serde(serialize_with = "serialize_biguint")]
    pub modulus: BigUint,
    pub coefficient: f64,
}

fn serialize_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// `K_L = Σ_M c(M) T(M)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplifierExpansion {
    pub primes: Vec<u64>,
    pub length: u32,
    pub terms: Vec<ExpansionTerm>,
}

impl AmplifierExpansion {
    /// `Σ_M c(M) λ(M)`, the eigenvalue of the expansion on the form with
    /// eigenvalues `seqs`.
    pub fn contract(&self, seqs: &[EigenvalueSequence]) -> f64 {
        self.terms.iter().map(|t| t.coefficient * product_lambda(seqs, &t.exponents)).sum()
    }
}

/// Calls `f` with every vector `i` such that `0 ≤ i_k ≤ bound_k`.
fn for_each_below(bound: &[u32], mut f: impl FnMut(&[u32])) {
    let mut i = vec![0u32; bound.len()];
    loop {
        f(&i);
        let mut k = i.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if i[k] < bound[k] {
                i[k] += 1;
                break;
            }
            i[k] = 0;
        }
    }
}

/// Expands `(Σ_{m∈M(P,L)} λ(m) T(m))²` with `T(m)T(n) = Σ_{d|(m,n)} T(mn/d²)`.
pub fn expand_kl(seqs: &[EigenvalueSequence], support: &AmplifierSupport) -> Result<AmplifierExpansion, AmplifierError> {
    support.check_sequences(seqs, support.length)?;
    let members = support.members();
    let weights: Vec<f64> = members.iter().map(|e| product_lambda(seqs, e)).collect();
    let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for (m, wm) in members.iter().zip(&weights) {
        for (n, wn) in members.iter().zip(&weights) {
            let gcd: Vec<u32> = m.iter().zip(n).map(|(a, b)| *a.min(b)).collect();
            for_each_below(&gcd, |d| {
                let e: Vec<u32> = (0..m.len()).map(|k| m[k] + n[k] - 2 * d[k]).collect();
                *acc.entry(e).or_insert(0.0) += wm * wn;
            });
        }
    }
    let terms = acc
        .into_iter()
        .map(|(exponents, coefficient)| ExpansionTerm { modulus: support.modulus(&exponents), exponents, coefficient })
        .collect();
    Ok(AmplifierExpansion { primes: support.primes.clone(), length: support.length, terms })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TechnicalSum {
    pub lhs: LogValue,
    pub rhs: LogValue,
    /// `LHS / RHS`.
    pub ratio: f64,
}

/// Single-prime factor of the left-hand side,
/// `Σ_{1≤r,s≤L} |λ(p^r)λ(p^s)| Σ_{i=0}^{min(r,s)} p^{((r+s)/2 − i)x}`.
pub fn technical_lhs_single(seq: &EigenvalueSequence, length: u32, x: f64) -> LogValue {
    let lp = (seq.prime as f64).ln();
    let logs: Vec<f64> = (0..=length).map(|n| seq.value(n).abs().ln()).collect();
    let mut terms = Vec::new();
    for r in 1..=length {
        for s in 1..=length {
            let base = logs[r as usize] + logs[s as usize];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for i in 0..=r.min(s) {
                terms.push(base + ((r + s) as f64 / 2.0 - i as f64) * x * lp);
            }
        }
    }
    log_sum_exp(&terms)
}

fn log_sum_exp(terms: &[f64]) -> LogValue {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogValue::ZERO;
    }
    LogValue::from_ln(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
}

/// Left-hand side summed over pairs `m, n ∈ M(P, L)` and common divisors
/// directly, without using that it factors over primes.
pub fn technical_lhs_direct(
    seqs: &[EigenvalueSequence],
    support: &AmplifierSupport,
    x: f64,
) -> Result<LogValue, AmplifierError> {
    support.check_sequences(seqs, support.length)?;
    let members = support.members();
    let lps: Vec<f64> = support.primes.iter().map(|&p| (p as f64).ln()).collect();
    let mut terms = Vec::new();
    for m in &members {
        for n in &members {
            let w = (product_lambda(seqs, m) * product_lambda(seqs, n)).abs();
            if w == 0.0 {
                continue;
            }
            let base = w.ln();
            let gcd: Vec<u32> = m.iter().zip(n).map(|(a, b)| *a.min(b)).collect();
            for_each_below(&gcd, |d| {
                // ln(√(mn)/d)
                let ln_q: f64 = (0..m.len()).map(|k| ((m[k] + n[k]) as f64 / 2.0 - d[k] as f64) * lps[k]).sum();
                terms.push(base + x * ln_q);
            });
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Left side against `Π_p Σ λ²` (`x < 0`) or `Π_p p^{xL} L Σ λ²` (`x ≥ 0`).
pub fn technical_sum(
    seqs: &[EigenvalueSequence],
    support: &AmplifierSupport,
    x: f64,
) -> Result<TechnicalSum, AmplifierError> {
    support.check_sequences(seqs, support.length)?;
    let l = support.length;
    let mut lhs = LogValue::ONE;
    let mut rhs = LogValue::ONE;
    for s in seqs {
        lhs = lhs.mul(&technical_lhs_single(s, l, x));
        let sq: f64 = (1..=l).map(|n| s.value(n).powi(2)).sum();
        let mut factor = LogValue::from_f64(sq);
        if x >= 0.0 {
            factor = factor.mul(&LogValue::from_ln(x * l as f64 * (s.prime as f64).ln() + (l as f64).ln()));
        }
        rhs = rhs.mul(&factor);
    }
    let ratio = if rhs.is_zero() { f64::INFINITY } else { (lhs.ln() - rhs.ln()).exp() };
    Ok(TechnicalSum { lhs, rhs, ratio })
}

/// A constant `C` with `LHS ≤ C · RHS` for every eigenvalue sequence.
///
/// For `x < 0` the divisor sum is dominated by `p^{x|r−s|/2}/(1 − p^x)` and
/// Cauchy–Schwarz along diagonals gives `(1 + q)/((1 − q)(1 − p^x))` per
/// prime, `q = p^{x/2}`. For `x > 0` the divisor sum is at most
/// `p^{(r+s)x/2}/(1 − p^{−x})`. At `x = 0` the divisor sum has
/// `min(r, s) + 1` terms and only `L + 1` works.
pub fn technical_sum_constant(primes: &[u64], length: u32, x: f64) -> f64 {
    primes
        .iter()
        .map(|&p| {
            let p = p as f64;
            if x < 0.0 {
                let q = p.powf(x / 2.0);
                (1.0 + q) / ((1.0 - q) * (1.0 - p.powf(x)))
            } else if x > 0.0 {
                1.0 / (1.0 - p.powf(-x))
            } else {
                length as f64 + 1.0
            }
        })
        .product()
}

/// `(Σ α_m λ(p^m))² / Σ α_m²`, `m = 1..L`.
pub fn efficiency_ratio(weights: &[f64], seq: &EigenvalueSequence, length: u32) -> Result<f64, AmplifierError> {
    if weights.len() != length as usize {
        return Err(AmplifierError::WeightLength { expected: length as usize, got: weights.len() });
    }
    let norm: f64 = weights.iter().map(|w| w * w).sum();
    if norm == 0.0 {
        return Err(AmplifierError::ZeroWeights);
    }
    let dot: f64 = weights.iter().zip(1..=length).map(|(w, m)| w * seq.value(m)).sum();
    Ok(dot * dot / norm)
}
