//! Exact rational scalars.
//!
//! [`Rat`] wraps `num_rational::BigRational` so the rest of the crate gets a
//! small, stable surface: total ordering, parsing from `"p/q"` / integer /
//! decimal strings, and serde as a rational string.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Rat {
        let d = denom.into();
        assert!(!d.is_zero(), "zero denominator");
        Rat(BigRational::new(numer.into(), d))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Rat {
        Rat(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Rat {
        Rat(BigRational::zero())
    }

    pub fn one() -> Rat {
        Rat(BigRational::one())
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i64) -> Rat {
        let p = BigInt::one() << k.unsigned_abs();
        if k >= 0 {
            Rat::from_int(p)
        } else {
            Rat::new(1, p)
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn signum(&self) -> i32 {
        match self.0.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rat(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn half(&self) -> Rat {
        self / &Rat::from_int(2)
    }

    pub fn midpoint(a: &Rat, b: &Rat) -> Rat {
        (a + b).half()
    }

    pub fn min_of<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
        if a <= b {
            a
        } else {
            b
        }
    }

    pub fn max_of<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
        if a >= b {
            a
        } else {
            b
        }
    }

    /// Bit length of the denominator; used by [`DenominatorGuard`].
    pub fn denom_bits(&self) -> u64 {
        self.0.denom().bits()
    }

    /// Exact square root when both numerator and denominator are perfect
    /// squares, `None` otherwise (or for negative input).
    pub fn sqrt_exact(&self) -> Option<Rat> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer();
        let d = self.denom();
        let rn = n.sqrt();
        let rd = d.sqrt();
        if &(&rn * &rn) == n && &(&rd * &rd) == d {
            Some(Rat::new(rn, rd))
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| {
            // Extreme magnitudes: fall back to scaled integer division.
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }

    /// Decimal rendering with `digits` significant digits. Only used for CSV
    /// export; everything else stays rational.
    pub fn to_decimal(&self, digits: usize) -> String {
        let x = self.to_f64();
        if x == 0.0 || !x.is_finite() {
            return if x == 0.0 { "0".into() } else { x.to_string() };
        }
        let digits = digits.max(1);
        let exp = x.abs().log10().floor() as i64;
        if !(-6..=15).contains(&exp) {
            return format!("{:.*e}", digits - 1, x);
        }
        let decimals = (digits as i64 - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }

    /// Largest power-of-two exponent `k` such that `2^-k` still divides the
    /// denominator, i.e. whether the value is dyadic, and with how many bits.
    pub fn dyadic_bits(&self) -> Option<u64> {
        let d = self.denom();
        let tz = d.trailing_zeros().unwrap_or(0);
        if (d >> tz) == BigInt::one() {
            Some(tz)
        } else {
            None
        }
    }

    /// The rational with the smallest denominator in the closed interval
    /// `[lo, hi]` (Stern–Brocot descent).
    pub fn simplest_between(lo: &Rat, hi: &Rat) -> Rat {
        assert!(lo <= hi, "empty interval");
        if lo.signum() <= 0 && hi.signum() >= 0 {
            return Rat::zero();
        }
        if hi.is_negative() {
            return -Rat::simplest_between(&-hi, &-lo);
        }
        simplest_positive(lo, hi)
    }

    /// Smallest-denominator dyadic in `[lo, hi]`, if one with at most
    /// `max_bits` bits exists.
    pub fn simplest_dyadic_between(lo: &Rat, hi: &Rat, max_bits: u64) -> Option<Rat> {
        assert!(lo <= hi, "empty interval");
        for k in 0..=max_bits {
            let scale = Rat::pow2(k as i64);
            let n = (lo * &scale).ceil();
            let cand = Rat::from_int(n) / &scale;
            if &cand <= hi {
                return Some(cand);
            }
        }
        None
    }
}

fn simplest_positive(lo: &Rat, hi: &Rat) -> Rat {
    // Continued-fraction construction of the simplest rational in [lo, hi]
    // with 0 < lo <= hi.
    let fl = lo.floor();
    let fl_r = Rat::from_int(fl.clone());
    if &fl_r == lo {
        return fl_r;
    }
    let next = Rat::from_int(&fl + 1);
    if &next <= hi {
        return next;
    }
    // Both in (fl, fl+1): recurse on reciprocals of fractional parts.
    let lo_frac = lo - &fl_r;
    let hi_frac = hi - &fl_r;
    let inner = simplest_positive(&hi_frac.recip(), &lo_frac.recip());
    fl_r + inner.recip()
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rat {
    type Err = Error;

    /// Accepts `"p/q"`, integers and finite decimals such as `"-0.125"`.
    fn from_str(s: &str) -> Result<Rat> {
        let s = s.trim();
        let bad = || Error::Malformed(format!("not a rational number: {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Malformed(format!("zero denominator in {s:?}")));
            }
            return Ok(Rat::new(n, d));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let neg = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let whole: BigInt = if int_digits.is_empty() {
                BigInt::zero()
            } else {
                int_digits.parse().map_err(|_| bad())?
            };
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            let frac_n: BigInt = frac.parse().map_err(|_| bad())?;
            let mut r = Rat::new(whole * &scale + frac_n, scale);
            if neg {
                r = -r;
            }
            return Ok(r);
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Rat::from_int(n))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Int(i64),
        }
        match Repr::deserialize(d)? {
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Int(i) => Ok(Rat::from_int(i)),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat($trait::$method(self.0, rhs.0))
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat($trait::$method(self.0, &rhs.0))
            }
        }
        impl<'a> $trait<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat($trait::$method(&self.0, rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                Rat($trait::$method(&self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Rat> for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rat> for Rat {
    fn mul_assign(&mut self, rhs: &Rat) {
        self.0 *= &rhs.0;
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |a, b| a + b)
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Rat {
        Rat::from_int(n)
    }
}

impl From<i32> for Rat {
    fn from(n: i32) -> Rat {
        Rat::from_int(n)
    }
}

impl From<BigInt> for Rat {
    fn from(n: BigInt) -> Rat {
        Rat::from_int(n)
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Rat {
        Rat(r)
    }
}

/// Shorthand for literals in tests and examples: `rat(3, 4)`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

/// Least common multiple of denominators, used for cell alignment.
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Optional cap on denominator size. Tower refinement multiplies
/// denominators; this turns runaway growth into a clean error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenominatorGuard {
    pub max_bits: Option<u64>,
}

impl DenominatorGuard {
    pub const ENV_VAR: &'static str = "COBOUNDARY_MAX_DENOM_BITS";

    pub fn unlimited() -> Self {
        DenominatorGuard { max_bits: None }
    }

    pub fn with_max_bits(bits: u64) -> Self {
        DenominatorGuard { max_bits: Some(bits) }
    }

    /// Reads the limit from `COBOUNDARY_MAX_DENOM_BITS` (unset or empty means
    /// unlimited).
    pub fn from_env() -> Result<Self> {
        match std::env::var(Self::ENV_VAR) {
            Ok(v) if !v.trim().is_empty() => {
                let bits = v
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Malformed(format!("{} must be an integer, got {v:?}", Self::ENV_VAR)))?;
                Ok(Self::with_max_bits(bits))
            }
            _ => Ok(Self::unlimited()),
        }
    }

    pub fn check(&self, what: &str, r: &Rat) -> Result<()> {
        match self.max_bits {
            Some(max) if r.denom_bits() > max => Err(Error::Resource(format!(
                "{what}: denominator has {} bits, limit is {max}",
                r.denom_bits()
            ))),
            _ => Ok(()),
        }
    }
}
