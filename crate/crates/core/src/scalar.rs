//! Numeric scalar abstraction.
//!
//! Everything downstream of the parser (compilation, projection, planning,
//! decompilation, world enumeration) is written against [`Scalar`], so the
//! same algebra runs over binary floating point or over exact rationals.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

/// A field-like number type usable as a probability or a reward.
pub trait Scalar: Num + Clone + PartialOrd + Debug + Display + Send + Sync + 'static {
    /// Whether arithmetic on this type is exact.
    const EXACT: bool;

    /// Lift a literal value into this scalar type.
    ///
    /// Exact types read the shortest decimal expansion of `value`, so a
    /// source literal such as `0.9` becomes exactly `9/10`.
    fn from_real(value: f64) -> Self;

    /// Lossy conversion back to `f64`.
    fn as_f64(&self) -> f64;

    /// Sum a sequence of values. Floating point types use compensated
    /// summation.
    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }

    /// Whether two values should be treated as equal when breaking ties
    /// between candidate actions.
    fn ties(a: &Self, b: &Self) -> bool {
        a == b
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }
}

/// Neumaier's variant of Kahan summation.
fn compensated_sum<T, I>(items: I) -> T
where
    T: num_traits::Float,
    I: IntoIterator<Item = T>,
{
    let mut sum = T::zero();
    let mut carry = T::zero();
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry = carry + ((sum - t) + x);
        } else {
            carry = carry + ((x - t) + sum);
        }
        sum = t;
    }
    sum + carry
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_real(value: f64) -> Self {
                value as $t
            }

            fn as_f64(&self) -> f64 {
                *self as f64
            }

            fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
                compensated_sum(items)
            }

            fn ties(a: &Self, b: &Self) -> bool {
                let scale = a.abs().max(b.abs()).max(1.0);
                (a - b).abs() <= scale * (<$t>::EPSILON * 64.0)
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_real(value: f64) -> Self {
        assert!(value.is_finite(), "cannot represent {value} exactly");
        decimal_to_rational(&format!("{value}"))
    }

    fn as_f64(&self) -> f64 {
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                // Very large components: scale down before dividing.
                let shift = self.denom().bits().max(self.numer().bits()).saturating_sub(1000);
                let n = (self.numer() >> shift).to_f64().unwrap_or(f64::NAN);
                let d = (self.denom() >> shift).to_f64().unwrap_or(f64::NAN);
                n / d
            }
        }
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }
}

/// Parse a plain decimal string (`-12.0625`, `3`, `0.9`) into a rational.
fn decimal_to_rational(text: &str) -> BigRational {
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{whole}{frac}")
        .parse()
        .expect("Display for f64 yields plain decimal digits");
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(numer, denom);
    if negative {
        -value
    } else {
        value
    }
}
