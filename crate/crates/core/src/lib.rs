//! Computational ingredients of the amplified pre-trace method for sup-norm
//! bounds on arithmetic hyperbolic surfaces.
//!
//! The crate is organised by subsystem:
//!
//! * [`quaternion`]: exact arithmetic in a rational quaternion algebra and an
//!   order inside it, plus the real splitting embedding.
//! * [`hyperbolic`]: upper half-plane geometry (Möbius action, point-pair
//!   invariant, hyperbolic distance).
//! * [`counting`]: enumeration of order elements of fixed reduced norm that
//!   move a point by a bounded point-pair distance.
//! * [`hecke`]: sphere and Hecke operators on truncated Bruhat–Tits trees,
//!   checked as exact integer identities.
//! * [`amplifier`]: Satake-parametrised Hecke eigenvalues, the amplifier and
//!   its expansion, and the associated sum bounds.
//! * [`window`]: the compactly supported spectral window and kernel envelope.
//! * [`planner`]: the parameter choices and term comparison of the final
//!   amplified bound, carried out in log space.

pub mod amplifier;
pub mod counting;
pub mod hecke;
pub mod hyperbolic;
pub mod logval;
pub mod planner;
pub mod quadrature;
pub mod quaternion;
pub mod window;

pub use logval::LogValue;

/// Trial-division primality test; the primes used here are tiny.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}
