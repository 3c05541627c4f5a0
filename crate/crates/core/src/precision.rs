//! Working-precision configuration.
//!
//! Precision is given in decimal digits of mantissa. The binary precision
//! handed to MPFR is `ceil(digits * log2(10))` bits, so every scalar created
//! through a context carries at least `digits` decimal digits.

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};

pub const MIN_DIGITS: u32 = 32;
pub const DEFAULT_DIGITS: u32 = 4096;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

#[derive(Debug, Clone)]
pub struct PrecisionContext {
    digits: u32,
    bits: u32,
    eps_machine: Float,
    check_tolerance: Float,
}

impl PrecisionContext {
    pub fn new(digits: u32) -> Result<Self> {
        if digits < MIN_DIGITS {
            return Err(Error::InvalidPrecision { digits });
        }
        let bits = (f64::from(digits) * LOG2_10).ceil() as u32;
        let eps_machine = pow10(bits, -i64::from(digits));
        let check_tolerance = pow10(bits, -i64::from(digits / 2));
        Ok(Self {
            digits,
            bits,
            eps_machine,
            check_tolerance,
        })
    }

    /// Replaces the identity-test tolerance (default `10^(-digits/2)`).
    pub fn with_check_tolerance(mut self, tol: Float) -> Self {
        self.check_tolerance = Float::with_val(self.bits, tol);
        self
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Binary precision of every scalar created under this context.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `10^(-digits)`.
    pub fn eps_machine(&self) -> &Float {
        &self.eps_machine
    }

    pub fn check_tolerance(&self) -> &Float {
        &self.check_tolerance
    }

    /// Looser tolerance for comparisons against the quadrature oracle,
    /// `10^(-digits/8)`.
    pub fn oracle_tolerance(&self) -> Float {
        self.pow10(-i64::from(self.digits / 8))
    }

    pub fn zero(&self) -> Float {
        Float::new(self.bits)
    }

    pub fn int(&self, v: i64) -> Float {
        Float::with_val(self.bits, v)
    }

    /// Converts an `f64` through its shortest round-trip decimal form, so
    /// `113.3` becomes the working-precision value of 113.3 rather than the
    /// nearest double.
    pub fn from_f64(&self, v: f64) -> Float {
        parse_decimal(&format!("{v:e}"), self.bits).expect("f64 display is a valid decimal")
    }

    pub fn parse(&self, s: &str) -> Result<Float> {
        parse_decimal(s, self.bits)
    }

    /// `10^exp` at working precision.
    pub fn pow10(&self, exp: i64) -> Float {
        pow10(self.bits, exp)
    }

    /// `10^exp` for a real exponent.
    pub fn pow10_real(&self, exp: &Float) -> Float {
        let ten = Float::with_val(self.bits, 10);
        Float::with_val(self.bits, ten.pow(exp))
    }
}

fn pow10(bits: u32, exp: i64) -> Float {
    let ten = Float::with_val(bits, 10);
    // rug's integer power on Float rounds once, so this is the correctly
    // rounded value of the decimal power.
    Float::with_val(bits, ten.pow(exp as i32))
}

/// Parses a decimal string at the given binary precision.
pub fn parse_decimal(s: &str, bits: u32) -> Result<Float> {
    let parsed = Float::parse(s.trim()).map_err(|_| Error::Parse {
        input: s.to_string(),
    })?;
    Ok(Float::with_val(bits, parsed))
}

/// Decimal representation with enough digits to round-trip exactly at the
/// value's own precision.
pub fn to_decimal_string(x: &Float) -> String {
    x.to_string_radix(10, None)
}

/// Decimal representation truncated to `digits` significant digits.
pub fn to_decimal_digits(x: &Float, digits: usize) -> String {
    x.to_string_radix(10, Some(digits))
}
