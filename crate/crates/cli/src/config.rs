//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use supnorm_core::is_prime;
use supnorm_core::quaternion::{verify_order, AlgebraSpec, OrderReport, QuaternionOrder, Rational};
use thiserror::Error;

use crate::parse::{parse_rational, ParseError};

/// Shipped configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

/// Environment variable naming a config file to use instead of the default.
pub const CONFIG_ENV: &str = "SUPNORM_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("{field}: {source}")]
    Value { field: String, source: ParseError },
    #[error("invalid algebra: {0}")]
    Algebra(String),
    #[error("order basis fails verification: {0}")]
    Order(OrderReport),
    #[error("order cannot be used: {0}")]
    Unusable(String),
    #[error("amplifier prime {0} is not prime")]
    NotPrime(u64),
    #[error("amplifier prime {0} is declared ramified")]
    Ramified(u64),
    #[error("{0}")]
    Range(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    algebra: RawAlgebra,
    order: RawOrder,
    amplifier: AmplifierDefaults,
    planner: PlannerDefaults,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    a: String,
    b: String,
    ramified_primes: Vec<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrder {
    basis: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierDefaults {
    pub primes: Vec<u64>,
    pub sweep_step: f64,
    pub lengths: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerDefaults {
    pub c_const: f64,
}

/// A parsed configuration. The order basis is only checked on demand, so
/// `verify-order` can report a broken basis instead of failing to load.
#[derive(Debug, Clone)]
pub struct Config {
    pub algebra: AlgebraSpec,
    pub ramified_primes: Vec<u64>,
    pub basis: [[Rational; 4]; 4],
    pub amplifier: AmplifierDefaults,
    pub planner: PlannerDefaults,
}

fn rational(field: String, s: &str) -> Result<Rational, ConfigError> {
    parse_rational(s).map_err(|source| ConfigError::Value { field, source })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
        let a = rational("algebra.a".into(), &raw.algebra.a)?;
        let b = rational("algebra.b".into(), &raw.algebra.b)?;
        let algebra = AlgebraSpec::new(a, b).map_err(|e| ConfigError::Algebra(e.to_string()))?;
        if raw.order.basis.len() != 4 || raw.order.basis.iter().any(|r| r.len() != 4) {
            return Err(ConfigError::Range("order.basis must be a 4×4 matrix".into()));
        }
        let mut rows: Vec<[Rational; 4]> = Vec::with_capacity(4);
        for (i, row) in raw.order.basis.iter().enumerate() {
            let mut out: Vec<Rational> = Vec::with_capacity(4);
            for (j, s) in row.iter().enumerate() {
                out.push(rational(format!("order.basis[{i}][{j}]"), s)?);
            }
            rows.push(out.try_into().expect("length checked"));
        }
        let basis: [[Rational; 4]; 4] = rows.try_into().expect("length checked");
        for &p in &raw.amplifier.primes {
            if !is_prime(p) {
                return Err(ConfigError::NotPrime(p));
            }
            if raw.algebra.ramified_primes.contains(&p) {
                return Err(ConfigError::Ramified(p));
            }
        }
        if raw.amplifier.primes.is_empty() {
            return Err(ConfigError::Range("amplifier.primes is empty".into()));
        }
        if !(raw.amplifier.sweep_step > 0.0 && raw.amplifier.sweep_step < 1.0) {
            return Err(ConfigError::Range("amplifier.sweep_step must lie in (0, 1)".into()));
        }
        if raw.amplifier.lengths.iter().any(|&l| l == 0 || l > 100_000) {
            return Err(ConfigError::Range("amplifier.lengths must lie in 1..=100000".into()));
        }
        if !(raw.planner.c_const > 0.0 && raw.planner.c_const.is_finite()) {
            return Err(ConfigError::Range("planner.c_const must be positive".into()));
        }
        Ok(Config {
            algebra,
            ramified_primes: raw.algebra.ramified_primes,
            basis,
            amplifier: raw.amplifier,
            planner: raw.planner,
        })
    }

    /// `explicit`, else the file named by [`CONFIG_ENV`], else the shipped
    /// default.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        let path = explicit.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        match path {
            None => Self::parse(DEFAULT_CONFIG),
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read { path, source })?;
                Self::parse(&text)
            }
        }
    }

    pub fn verify(&self) -> OrderReport {
        verify_order(&self.algebra, &self.basis)
    }

    pub fn order(&self) -> Result<QuaternionOrder, ConfigError> {
        let report = self.verify();
        if !report.is_valid() {
            return Err(ConfigError::Order(report));
        }
        let order =
            QuaternionOrder::new(self.algebra.clone(), self.basis.clone()).map_err(|e| ConfigError::Unusable(e.to_string()))?;
        order.basis_images().map_err(|e| ConfigError::Unusable(e.to_string()))?;
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let c = Config::parse(DEFAULT_CONFIG).unwrap();
        assert!(c.verify().is_valid());
        assert_eq!(c.amplifier.primes, vec![5, 7]);
        let order = c.order().unwrap();
        assert_eq!(order.basis().rows(), supnorm_core::quaternion::default_order().basis().rows());
    }

    #[test]
    fn broken_basis_loads_but_fails_verification() {
        let text = DEFAULT_CONFIG.replace(r#"["0", "1", "0", "0"]"#, r#"["0", "1/2", "0", "0"]"#);
        let c = Config::parse(&text).unwrap();
        assert!(!c.verify().is_valid());
        assert!(matches!(c.order(), Err(ConfigError::Order(_))));
    }

    #[test]
    fn rejects_bad_values() {
        let ramified = DEFAULT_CONFIG.replace("primes = [5, 7]", "primes = [3, 7]");
        assert!(matches!(Config::parse(&ramified), Err(ConfigError::Ramified(3))));
        let zero = DEFAULT_CONFIG.replace(r#"b = "3""#, r#"b = "0""#);
        assert!(matches!(Config::parse(&zero), Err(ConfigError::Algebra(_))));
        let bad_rational = DEFAULT_CONFIG.replace(r#"a = "-1""#, r#"a = "1/0""#);
        assert!(matches!(Config::parse(&bad_rational), Err(ConfigError::Value { .. })));
        assert!(matches!(Config::parse("[algebra"), Err(ConfigError::Syntax(_))));
        let extra = format!("{DEFAULT_CONFIG}\n[extra]\nx = 1\n");
        assert!(Config::parse(&extra).is_err());
    }
}
