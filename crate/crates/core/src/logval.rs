//! Signed quantities stored as `(sign, ln |value|)`.
//!
//! The planner works with `λ` up to `e^{10⁶}`, far outside `f64` range, so
//! every term is carried in log space and only rendered as a decimal when it
//! fits.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    ln: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, ln: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { sign: 1, ln: 0.0 };

    /// Positive value `e^{ln}`.
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { sign: 1, ln }
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self { sign: if v > 0.0 { 1 } else { -1 }, ln: v.abs().ln() }
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// `ln |value|`; `−∞` for zero.
    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Decimal value when it is representable as a finite `f64`.
    pub fn to_f64(&self) -> Option<f64> {
        if self.sign == 0 {
            return Some(0.0);
        }
        let v = self.ln.exp();
        v.is_finite().then_some(self.sign as f64 * v)
    }

    pub fn mul(&self, o: &LogValue) -> LogValue {
        if self.sign == 0 || o.sign == 0 {
            return Self::ZERO;
        }
        LogValue { sign: self.sign * o.sign, ln: self.ln + o.ln }
    }

    pub fn div(&self, o: &LogValue) -> LogValue {
        assert!(o.sign != 0, "division by zero LogValue");
        if self.sign == 0 {
            return Self::ZERO;
        }
        LogValue { sign: self.sign * o.sign, ln: self.ln - o.ln }
    }

    pub fn powf(&self, e: f64) -> LogValue {
        assert!(self.sign >= 0, "fractional power of a negative LogValue");
        if self.sign == 0 {
            return if e > 0.0 { Self::ZERO } else { Self::ONE };
        }
        LogValue::from_ln(self.ln * e)
    }

    pub fn add(&self, o: &LogValue) -> LogValue {
        if self.sign == 0 {
            return *o;
        }
        if o.sign == 0 {
            return *self;
        }
        let (big, small) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        let r = (small.ln - big.ln).exp();
        if big.sign == small.sign {
            LogValue { sign: big.sign, ln: big.ln + r.ln_1p() }
        } else if r == 1.0 {
            Self::ZERO
        } else {
            LogValue { sign: big.sign, ln: big.ln + (-r).ln_1p() }
        }
    }

    pub fn max(self, o: LogValue) -> LogValue {
        if self.partial_cmp(&o) == Some(Ordering::Less) {
            o
        } else {
            self
        }
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        match self.sign.cmp(&o.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.ln.partial_cmp(&o.ln),
                _ => o.ln.partial_cmp(&self.ln),
            },
            ord => Some(ord),
        }
    }
}

impl Serialize for LogValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LogValue", 3)?;
        st.serialize_field("sign", &self.sign)?;
        st.serialize_field("ln", &if self.sign == 0 { None } else { Some(self.ln) })?;
        st.serialize_field("value", &self.to_f64())?;
        st.end()
    }
}
