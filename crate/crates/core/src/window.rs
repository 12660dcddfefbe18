//! The spectral window `h` and the kernel envelope.
//!
//! `χ(x) = exp(−1/(1 − (4x)²))` on `(−1/4, 1/4)`; `ψ = χ ∗ χ` is supported
//! in `(−1/2, 1/2)` and `h(ξ) = ∫ψ(t) cos(ξt) dt / ∫ψ`. Since `χ` is real and
//! even, `h = (χ̂/χ̂(0))² ≥ 0`, `h(0) = 1`, and `h` has Fourier support in
//! `[−1/2, 1/2]`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::logval::LogValue;
use crate::quadrature::Rule;

pub const MIN_NODES: usize = 256;
/// Largest change in `h` on the check grid allowed when the node count doubles.
pub const DOUBLING_TOLERANCE: f64 = 1e-8;
/// `h` is compared between `n` and `2n` nodes on this many points of `[−50, 50]`.
const CHECK_POINTS: usize = 1001;
const CHECK_RANGE: f64 = 50.0;
/// Truncation of the inverse transform in [`WindowFunction::reconstruct_hat_h`]:
/// `h(1000) ≈ 1e−16`, and 1024 outer nodes still resolve `cos(1000 t)`.
pub const RECONSTRUCTION_CUTOFF: f64 = 1000.0;
const PANEL_ORDER: usize = 16;
const INNER_PANELS: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowError {
    #[error("at least {MIN_NODES} quadrature nodes required, got {0}")]
    TooFewNodes(usize),
    #[error("node count must be a multiple of {PANEL_ORDER}, got {0}")]
    NodeCount(usize),
    #[error("quadrature not converged: doubling changed h by {0:e}")]
    NotConverged(f64),
    #[error("ε = {epsilon} must lie in [1/λ, 1]")]
    EpsilonOutOfRange { epsilon: f64 },
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("log λ must be positive, got {0}")]
    BadLogLambda(f64),
}

/// `exp(−1/(1 − (4x)²))` on `(−1/4, 1/4)`, zero elsewhere.
pub fn chi(x: f64) -> f64 {
    let y = 4.0 * x;
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

/// `(χ ∗ χ)(t)` by Gauss–Legendre over the overlap of the two supports.
pub fn psi(t: f64) -> f64 {
    let lo = (-0.25f64).max(t - 0.25);
    let hi = 0.25f64.min(t + 0.25);
    if hi <= lo {
        return 0.0;
    }
    Rule::composite(lo, hi, INNER_PANELS, PANEL_ORDER).integrate(|s| chi(s) * chi(t - s))
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowFunction {
    nodes: Vec<f64>,
    /// `w_k ψ(t_k)`.
    masses: Vec<f64>,
    /// `∫ψ` by the outer rule.
    pub normalization: f64,
    /// Largest change of `h` on the check grid against twice as many nodes.
    pub doubling_error: f64,
}

fn sample(n: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let rule = Rule::composite(-0.5, 0.5, n / PANEL_ORDER, PANEL_ORDER);
    let raw: Vec<f64> = rule.nodes.par_iter().zip(&rule.weights).map(|(&t, &w)| w * psi(t)).collect();
    let norm: f64 = raw.iter().sum();
    (rule.nodes, raw, norm)
}

/// `Σ m_k cos(ξ t_k) / Σ m_k`; both sums run in the same order, so the
/// value at `ξ = 0` is exactly `1`.
fn eval(nodes: &[f64], masses: &[f64], norm: f64, xi: f64) -> f64 {
    nodes.iter().zip(masses).map(|(t, m)| m * (xi * t).cos()).sum::<f64>() / norm
}

pub fn check_grid() -> Vec<f64> {
    (0..CHECK_POINTS)
        .map(|k| -CHECK_RANGE + 2.0 * CHECK_RANGE * k as f64 / (CHECK_POINTS - 1) as f64)
        .collect()
}

pub fn build_window(nodes: usize) -> Result<WindowFunction, WindowError> {
    if nodes < MIN_NODES {
        return Err(WindowError::TooFewNodes(nodes));
    }
    if nodes % PANEL_ORDER != 0 {
        return Err(WindowError::NodeCount(nodes));
    }
    let (t1, m1, normalization) = sample(nodes);
    let (t2, m2, n2) = sample(2 * nodes);
    let doubling_error = check_grid()
        .par_iter()
        .map(|&xi| (eval(&t1, &m1, normalization, xi) - eval(&t2, &m2, n2, xi)).abs())
        .reduce(|| 0.0, f64::max);
    if doubling_error > DOUBLING_TOLERANCE {
        return Err(WindowError::NotConverged(doubling_error));
    }
    Ok(WindowFunction { nodes: t1, masses: m1, normalization, doubling_error })
}

impl WindowFunction {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn h(&self, xi: f64) -> f64 {
        eval(&self.nodes, &self.masses, self.normalization, xi)
    }

    /// `(χ̂(ξ)/χ̂(0))²`, evaluated independently of `ψ`.
    pub fn h_from_chi(xi: f64) -> f64 {
        let rule = Rule::composite(-0.25, 0.25, 4 * INNER_PANELS, PANEL_ORDER);
        let c = rule.integrate(|x| chi(x) * (xi * x).cos());
        let c0 = rule.integrate(chi);
        (c / c0).powi(2)
    }

    /// `ψ(t)/∫ψ`, the Fourier transform of `h` in the convention
    /// `h(ξ) = ∫ ĥ(t) e^{−iξt} dt`.
    pub fn hat_h(&self, t: f64) -> f64 {
        psi(t) / self.normalization
    }

    /// `(1/2π) ∫_{−Ξ}^{Ξ} h(ξ) cos(ξt) dξ`, i.e. `ĥ(t)` recovered from
    /// samples of `h` alone.
    pub fn reconstruct_hat_h(&self, t: f64, cutoff: f64) -> f64 {
        let panels = (cutoff / 2.0).ceil() as usize;
        let rule = Rule::composite(0.0, cutoff, panels, PANEL_ORDER);
        let total: f64 = rule
            .nodes
            .par_iter()
            .zip(&rule.weights)
            .map(|(&xi, &w)| w * self.h(xi) * (xi * t).cos())
            .sum();
        total / std::f64::consts::PI
    }

    /// `(ξ, h(ξ))` on the check grid.
    pub fn table(&self) -> Vec<(f64, f64)> {
        check_grid().into_iter().map(|xi| (xi, self.h(xi))).collect()
    }
}

/// Which piece of the envelope applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeBranch {
    Near,
    /// `d = 1`: the larger of the two positive pieces.
    Junction,
    Far,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub value: LogValue,
    pub branch: EnvelopeBranch,
}

/// `λε + e^{C/ε}` for `d ≤ 1`, `(λ/d)^{1/2} e^{C/ε}` for `1 < d ≤ 1/ε`,
/// `0` beyond; `λ = e^{log_lambda}`.
pub fn kernel_envelope(d: f64, log_lambda: f64, epsilon: f64, c_const: f64) -> Result<Envelope, WindowError> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(WindowError::NegativeDistance(d));
    }
    if !(log_lambda > 0.0 && log_lambda.is_finite()) {
        return Err(WindowError::BadLogLambda(log_lambda));
    }
    if !(epsilon <= 1.0 && epsilon.ln() >= -log_lambda) {
        return Err(WindowError::EpsilonOutOfRange { epsilon });
    }
    let growth = LogValue::from_ln(c_const / epsilon);
    let near = || LogValue::from_ln(log_lambda + epsilon.ln()).add(&growth);
    let far = |d: f64| LogValue::from_ln(0.5 * (log_lambda - d.ln())).mul(&growth);
    let (value, branch) = if d < 1.0 {
        (near(), EnvelopeBranch::Near)
    } else if d == 1.0 {
        (near().max(far(1.0)), EnvelopeBranch::Junction)
    } else if d <= 1.0 / epsilon {
        (far(d), EnvelopeBranch::Far)
    } else {
        (LogValue::ZERO, EnvelopeBranch::Outside)
    };
    Ok(Envelope { value, branch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn window() -> &'static WindowFunction {
        static W: OnceLock<WindowFunction> = OnceLock::new();
        W.get_or_init(|| build_window(512).unwrap())
    }

    #[test]
    fn chi_support() {
        assert_eq!(chi(0.25), 0.0);
        assert_eq!(chi(-0.3), 0.0);
        assert!((chi(0.0) - (-1f64).exp()).abs() < 1e-16);
        assert_eq!(psi(0.5), 0.0);
        assert!(psi(0.49) > 0.0);
    }

    #[test]
    fn normalised_at_origin() {
        assert_eq!(window().h(0.0), 1.0);
    }

    #[test]
    fn matches_squared_transform_of_chi() {
        for xi in [0.0, 1.0, 7.5, 20.0, 49.0] {
            assert!((window().h(xi) - WindowFunction::h_from_chi(xi)).abs() < 1e-12, "ξ={xi}");
        }
    }

    #[test]
    fn nonnegative_on_grid() {
        assert!(window().table().iter().all(|&(_, h)| h >= -1e-8));
    }

    #[test]
    fn rejects_bad_node_counts() {
        assert_eq!(build_window(128).unwrap_err(), WindowError::TooFewNodes(128));
        assert_eq!(build_window(300).unwrap_err(), WindowError::NodeCount(300));
    }

    #[test]
    fn envelope_branches() {
        let ll = 20.0;
        let eps = 1.0 / ll;
        let out = kernel_envelope(1.0 / eps + 1.0, ll, eps, 1.0).unwrap();
        assert_eq!(out.value, LogValue::ZERO);
        // ε = 1/log λ: λ/log λ + λ^C
        let near = kernel_envelope(0.5, ll, eps, 1.0).unwrap();
        let want = (ll.exp() / ll + ll.exp()).ln();
        assert!((near.value.ln() - want).abs() < 1e-12);
        let j = kernel_envelope(1.0, ll, eps, 1.0).unwrap();
        assert_eq!(j.branch, EnvelopeBranch::Junction);
        assert!(j.value >= near.value);
        assert!(kernel_envelope(1.0, ll, 2.0, 1.0).is_err());
        assert!(kernel_envelope(1.0, ll, (-ll - 1.0).exp(), 1.0).is_err());
        assert!(kernel_envelope(-1.0, ll, eps, 1.0).is_err());
    }

    #[test]
    fn envelope_decreases_past_one() {
        let mut prev = kernel_envelope(1.0001, 30.0, 0.01, 1.0).unwrap().value;
        for k in 1..100 {
            let v = kernel_envelope(1.0001 + k as f64, 30.0, 0.01, 1.0).unwrap().value;
            assert!(v <= prev);
            prev = v;
        }
    }
}
