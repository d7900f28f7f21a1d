//! Shared integer semantics.
//!
//! Every program variable holds a signed `W`-bit value. Expressions are
//! evaluated exactly (no wraparound); a value that does not fit in `W` bits
//! when it is stored into a variable is an overflow. The interpreter traps on
//! it and the solver encodes the same range restriction, so concrete runs and
//! formulas always agree.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Concrete input vector: parameter name to value.
pub type Inputs = BTreeMap<String, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Width(u32);

impl Width {
    pub const MIN_BITS: u32 = 2;
    pub const MAX_BITS: u32 = 32;
    pub const W8: Width = Width(8);
    pub const W32: Width = Width(32);

    pub fn new(bits: u32) -> Result<Width, WidthError> {
        if (Self::MIN_BITS..=Self::MAX_BITS).contains(&bits) {
            Ok(Width(bits))
        } else {
            Err(WidthError(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn min_value(self) -> i64 {
        -(1i64 << (self.0 - 1))
    }

    pub fn max_value(self) -> i64 {
        (1i64 << (self.0 - 1)) - 1
    }

    pub fn contains(self, v: i128) -> bool {
        v >= self.min_value() as i128 && v <= self.max_value() as i128
    }
}

impl Default for Width {
    fn default() -> Self {
        Width::W32
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u32> for Width {
    type Error = WidthError;
    fn try_from(bits: u32) -> Result<Self, Self::Error> {
        Width::new(bits)
    }
}

impl From<Width> for u32 {
    fn from(w: Width) -> u32 {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("integer width {0} is outside the supported range 2..=32")]
pub struct WidthError(pub u32);

/// Number of bits needed to hold `v` in two's complement.
pub fn signed_bits(v: i128) -> u32 {
    if v >= 0 {
        129 - v.leading_zeros()
    } else {
        129 - (!v).leading_zeros()
    }
    .max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(Width::W8.min_value(), -128);
        assert_eq!(Width::W8.max_value(), 127);
        assert!(Width::W8.contains(127) && !Width::W8.contains(128));
        assert!(Width::new(1).is_err() && Width::new(33).is_err());
    }

    #[test]
    fn signed_bit_counts() {
        assert_eq!(signed_bits(0), 1);
        assert_eq!(signed_bits(-1), 1);
        assert_eq!(signed_bits(1), 2);
        assert_eq!(signed_bits(127), 8);
        assert_eq!(signed_bits(-128), 8);
        assert_eq!(signed_bits(128), 9);
    }
}
