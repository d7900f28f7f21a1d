use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Soft-clause weight. `Top` stands for a weight larger than the sum of all
/// finite weights in the instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Weight {
    Finite(BigRational),
    Top,
}

impl Weight {
    pub fn one() -> Weight {
        Weight::Finite(BigRational::one())
    }

    pub fn finite(num: i64, den: i64) -> Weight {
        Weight::Finite(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Weight::Top)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(r) => write!(f, "{r}"),
            Weight::Top => write!(f, "top"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad weight `{0}`: expected `top`, an integer or `num/den` with positive value")]
pub struct WeightParseError(pub String);

impl FromStr for Weight {
    type Err = WeightParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "top" {
            return Ok(Weight::Top);
        }
        let bad = || WeightParseError(s.to_string());
        let r = match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.parse().map_err(|_| bad())?;
                let d: BigInt = d.parse().map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                BigRational::new(n, d)
            }
            None => BigRational::from_integer(s.parse().map_err(|_| bad())?),
        };
        if r <= BigRational::zero() {
            return Err(bad());
        }
        Ok(Weight::Finite(r))
    }
}

/// Total weight of a set of clauses. Any number of top-weight clauses
/// outweighs every finite sum, so sums compare by top count first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cost {
    pub tops: usize,
    pub finite: BigRational,
}

impl Cost {
    pub fn zero() -> Cost {
        Cost { tops: 0, finite: BigRational::zero() }
    }

    pub fn add(&mut self, w: &Weight) {
        match w {
            Weight::Top => self.tops += 1,
            Weight::Finite(r) => self.finite += r,
        }
    }

    pub fn of<'a>(weights: impl IntoIterator<Item = &'a Weight>) -> Cost {
        let mut c = Cost::zero();
        for w in weights {
            c.add(w);
        }
        c
    }

    /// Numeric value once top is fixed to `top_value`.
    pub fn resolve(&self, top_value: &BigRational) -> BigRational {
        &self.finite + top_value * BigRational::from_integer(BigInt::from(self.tops))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tops {
            0 => write!(f, "{}", self.finite),
            n => write!(f, "{n} top + {}", self.finite),
        }
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.tops.cmp(&other.tops).then_with(|| self.finite.cmp(&other.finite))
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Concrete value for `Top` in an instance: one more than the sum of its
/// finite weights.
pub fn top_value<'a>(weights: impl IntoIterator<Item = &'a Weight>) -> BigRational {
    let mut sum = BigRational::one();
    for w in weights {
        if let Weight::Finite(r) = w {
            sum += r;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        for s in ["top", "2", "5/2", "1/3"] {
            assert_eq!(s.parse::<Weight>().unwrap().to_string(), s);
        }
        assert_eq!("4/2".parse::<Weight>().unwrap(), Weight::finite(2, 1));
        for bad in ["0", "-1", "1/0", "x", ""] {
            assert!(bad.parse::<Weight>().is_err(), "{bad}");
        }
    }

    #[test]
    fn top_dominates_finite_sums() {
        let big = Cost::of(&[Weight::finite(1000, 1), Weight::finite(1000, 1)]);
        let top = Cost::of(&[Weight::Top]);
        assert!(top > big);
        let t = top_value(&[Weight::finite(1000, 1), Weight::finite(1000, 1), Weight::Top]);
        assert!(top.resolve(&t) > big.resolve(&t));
    }
}
