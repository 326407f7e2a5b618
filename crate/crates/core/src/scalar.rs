//! Weight scalars for finite distributions.
//!
//! Exact rationals are the default everywhere semantic equality matters;
//! floats are accepted for empirical frequencies.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, One, ToPrimitive, Zero};

pub trait Weight: Num + Clone + PartialOrd + Debug {
    /// Whether `self` should count as a total mass of one.
    fn is_unit_mass(&self) -> bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn approx(&self) -> f64;

    /// Exact scalars render as `p/q`; floats use their shortest decimal.
    fn render(&self) -> String;
}

impl Weight for BigRational {
    fn is_unit_mass(&self) -> bool {
        self.is_one()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

impl Weight for Ratio<i64> {
    fn is_unit_mass(&self) -> bool {
        self.is_one()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

macro_rules! float_weight {
    ($t:ty, $eps:expr) => {
        impl Weight for $t {
            fn is_unit_mass(&self) -> bool {
                (*self - 1.0).abs() <= $eps
            }

            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn approx(&self) -> f64 {
                *self as f64
            }

            fn render(&self) -> String {
                self.to_string()
            }
        }
    };
}

float_weight!(f64, 1e-9);
float_weight!(f32, 1e-5);

/// Parses `p/q`, a decimal like `0.25`, or an integer, exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if int.is_empty() || frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let whole: BigInt = format!("{int}{frac}").parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Some(BigRational::new(whole, scale));
    }
    text.parse::<BigInt>().ok().map(BigRational::from_integer)
}
