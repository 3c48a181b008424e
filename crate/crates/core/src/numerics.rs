//! Exact arithmetic: dyadic rationals in `[0, 1]` and nonnegative rational weights.
//!
//! Every point of the Thompson action and every breakpoint of a piecewise-linear
//! map is a [`Dyadic`]. Affine maps `t ↦ 2^a·t + b` are the only arithmetic the
//! maps need, so that is the only arithmetic offered here.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default bound on dyadic exponents.
pub const DEFAULT_EXPONENT_LIMIT: u32 = 1_000_000;

static EXPONENT_LIMIT: AtomicU32 = AtomicU32::new(DEFAULT_EXPONENT_LIMIT);

/// Current exponent limit. Any normalized dyadic with a larger exponent is an error.
pub fn exponent_limit() -> u32 {
    EXPONENT_LIMIT.load(AtomicOrdering::Relaxed)
}

/// Set the process-wide exponent limit; returns the previous value.
pub fn set_exponent_limit(limit: u32) -> u32 {
    EXPONENT_LIMIT.swap(limit, AtomicOrdering::Relaxed)
}

fn check_exp(exp: u64) -> Result<u32> {
    let limit = exponent_limit();
    if exp > limit as u64 {
        return Err(Error::ExponentLimit { exp, limit });
    }
    Ok(exp as u32)
}

/// A dyadic rational `num / 2^exp` confined to `[0, 1]`, stored in lowest terms.
///
/// Equal values have identical fields, so the derived `Hash`/`Eq` are value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigUint,
    exp: u32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { num: BigUint::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { num: BigUint::one(), exp: 0 }
    }

    /// `num / 2^exp` in canonical form; fails when the value is outside `[0, 1]`.
    pub fn new(num: impl Into<BigInt>, exp: u32) -> Result<Self> {
        let num: BigInt = num.into();
        match num.sign() {
            Sign::Minus => Err(Error::OutOfRange(format!("{num}/2^{exp}"))),
            _ => Self::from_parts(num.magnitude().clone(), exp as u64),
        }
    }

    /// Shorthand for small literals; panics on invalid input. Intended for tests and constants.
    pub fn from_u64(num: u64, exp: u32) -> Self {
        Self::new(num, exp).expect("valid dyadic literal")
    }

    /// `1 - 2^(-m)`.
    pub fn one_minus_pow2(m: u32) -> Result<Self> {
        let exp = check_exp(m as u64)?;
        let num = (BigUint::one() << exp) - BigUint::one();
        Self::from_parts(num, exp as u64)
    }

    fn from_parts(mut num: BigUint, exp: u64) -> Result<Self> {
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let tz = num.trailing_zeros().unwrap_or(0);
        let shift = tz.min(exp);
        num >>= shift;
        let exp = exp - shift;
        // reduced: exp == 0 means an integer, otherwise num is odd and must be < 2^exp
        let in_range = if exp == 0 { num.is_one() } else { num.bits() <= exp };
        if !in_range {
            return Err(Error::OutOfRange(format!("{num}/2^{exp}")));
        }
        let exp = check_exp(exp)?;
        Ok(Dyadic { num, exp })
    }

    pub fn num(&self) -> &BigUint {
        &self.num
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.exp == 0 && self.num.is_one()
    }

    /// Strictly inside `(0, 1)`.
    pub fn is_interior(&self) -> bool {
        self.exp > 0
    }

    pub fn to_signed(&self) -> SignedDyadic {
        SignedDyadic { num: BigInt::from(self.num.clone()), exp: self.exp }
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.num.to_f64().unwrap_or(f64::INFINITY);
        n * (-(self.exp as f64)).exp2()
    }

    /// Exact value `2^slope_log2 · self + offset`, which must land in `[0, 1]`.
    pub fn affine(&self, slope_log2: i64, offset: &SignedDyadic) -> Result<Dyadic> {
        let scaled = self.to_signed().mul_pow2(slope_log2)?;
        scaled.add(offset)?.to_unit()
    }

    /// Midpoint of `self` and `other`.
    pub fn midpoint(&self, other: &Dyadic) -> Result<Dyadic> {
        self.to_signed().add(&other.to_signed())?.mul_pow2(-1)?.to_unit()
    }

    /// `self - other` as a signed dyadic.
    pub fn sub(&self, other: &Dyadic) -> Result<SignedDyadic> {
        self.to_signed().sub(&other.to_signed())
    }
}

/// Normalize `num / 2^exp` into a canonical [`Dyadic`].
pub fn dyadic_normalize(num: impl Into<BigInt>, exp: u32) -> Result<Dyadic> {
    Dyadic::new(num, exp)
}

/// `2^slope_log2 · t + offset`.
pub fn dyadic_affine(t: &Dyadic, slope_log2: i64, offset: &SignedDyadic) -> Result<Dyadic> {
    t.affine(slope_log2, offset)
}

pub fn dyadic_compare(a: &Dyadic, b: &Dyadic) -> Ordering {
    a.cmp(b)
}

fn cmp_scaled(a: &BigUint, ea: u32, b: &BigUint, eb: u32) -> Ordering {
    if ea == eb {
        return a.cmp(b);
    }
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        _ => {}
    }
    // magnitude lies in [2^(bits-1-exp), 2^(bits-exp))
    let ma = a.bits() as i64 - ea as i64;
    let mb = b.bits() as i64 - eb as i64;
    if ma != mb {
        return ma.cmp(&mb);
    }
    if ea < eb {
        (a << (eb - ea)).cmp(b)
    } else {
        a.cmp(&(b << (ea - eb)))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_scaled(&self.num, self.exp, &other.num, other.exp)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, BigUint::one() << self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_pow2_denominator(den: &str) -> Result<u32> {
    let den = den.trim();
    if let Some(k) = den.strip_prefix("2^") {
        return k.trim().parse::<u32>().map_err(|e| Error::Parse(format!("bad exponent {k:?}: {e}")));
    }
    let q: BigUint = den.parse().map_err(|_| Error::Parse(format!("bad denominator {den:?}")))?;
    if q.is_zero() || q.count_ones() != 1 {
        return Err(Error::Parse(format!("denominator {den} is not a power of two")));
    }
    Ok(q.trailing_zeros().unwrap_or(0) as u32)
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `p/q` with `q` a power of two, `p/2^k`, or a bare `0`/`1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, exp) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), parse_pow2_denominator(q)?),
            None => (s, 0),
        };
        let num: BigInt = num.parse().map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        Dyadic::new(num, exp)
    }
}

/// Unbounded signed dyadic `num / 2^exp`, used for offsets of affine pieces.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignedDyadic {
    num: BigInt,
    exp: u32,
}

impl SignedDyadic {
    pub fn new(num: impl Into<BigInt>, exp: u32) -> Result<Self> {
        Self::from_parts(num.into(), exp as u64)
    }

    pub fn zero() -> Self {
        SignedDyadic { num: BigInt::zero(), exp: 0 }
    }

    fn from_parts(mut num: BigInt, exp: u64) -> Result<Self> {
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let tz = num.trailing_zeros().unwrap_or(0);
        let shift = tz.min(exp);
        num >>= shift;
        let exp = check_exp(exp - shift)?;
        Ok(SignedDyadic { num, exp })
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn neg(&self) -> SignedDyadic {
        SignedDyadic { num: -self.num.clone(), exp: self.exp }
    }

    /// `2^k · self`.
    pub fn mul_pow2(&self, k: i64) -> Result<SignedDyadic> {
        if self.num.is_zero() {
            return Ok(Self::zero());
        }
        let e = self.exp as i64 - k;
        if e >= 0 {
            check_exp(e as u64)?;
            Ok(SignedDyadic { num: self.num.clone(), exp: e as u32 })
        } else {
            Ok(SignedDyadic { num: &self.num << ((-e) as u64), exp: 0 })
        }
    }

    pub fn add(&self, other: &SignedDyadic) -> Result<SignedDyadic> {
        let e = self.exp.max(other.exp);
        let a = &self.num << (e - self.exp);
        let b = &other.num << (e - other.exp);
        Self::from_parts(a + b, e as u64)
    }

    pub fn sub(&self, other: &SignedDyadic) -> Result<SignedDyadic> {
        self.add(&other.neg())
    }

    /// `Some(k)` when the value is exactly `2^k`.
    pub fn log2_if_power(&self) -> Option<i64> {
        if self.num.sign() != Sign::Plus || !self.num.magnitude().is_one() {
            return None;
        }
        Some(-(self.exp as i64))
    }

    pub fn to_unit(&self) -> Result<Dyadic> {
        match self.num.sign() {
            Sign::Minus => Err(Error::OutOfRange(self.to_string())),
            _ => Dyadic::from_parts(self.num.magnitude().clone(), self.exp as u64),
        }
    }
}

impl Ord for SignedDyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.num.sign(), other.num.sign()) {
            (Sign::Minus, Sign::Minus) => {
                cmp_scaled(other.num.magnitude(), other.exp, self.num.magnitude(), self.exp)
            }
            (Sign::Minus, _) => Ordering::Less,
            (_, Sign::Minus) => Ordering::Greater,
            _ => cmp_scaled(self.num.magnitude(), self.exp, other.num.magnitude(), other.exp),
        }
    }
}

impl PartialOrd for SignedDyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SignedDyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, BigUint::one() << self.exp)
    }
}

impl fmt::Debug for SignedDyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Exact nonnegative rational weight in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactWeight(Ratio<BigUint>);

impl ExactWeight {
    pub fn new(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::InvalidWeight("zero denominator".into()));
        }
        Ok(ExactWeight(Ratio::new(num.into(), den)))
    }

    pub fn ratio(num: u64, den: u64) -> Self {
        Self::new(num, den).expect("nonzero denominator")
    }

    pub fn numer(&self) -> &BigUint {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigUint {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &Ratio<BigUint> {
        &self.0
    }

    pub fn pow(&self, e: u32) -> Self {
        ExactWeight(num_traits::pow(self.0.clone(), e as usize))
    }

    /// `1 - self`; fails when `self > 1`.
    pub fn complement(&self) -> Result<Self> {
        let one = Ratio::one();
        if self.0 > one {
            return Err(Error::InvalidWeight(format!("{self} exceeds 1")));
        }
        Ok(ExactWeight(one - &self.0))
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        (self.0 >= other.0).then(|| ExactWeight(&self.0 - &other.0))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.0.is_zero() {
            return Err(Error::InvalidWeight("division by zero".into()));
        }
        Ok(ExactWeight(&self.0 / &other.0))
    }
}

impl fmt::Display for ExactWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for ExactWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExactWeight {
    type Err = Error;

    /// `num/den`, an integer, or a finite decimal such as `0.125`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad weight {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: BigUint = p.trim().parse().map_err(|_| bad())?;
            let q: BigUint = q.trim().parse().map_err(|_| bad())?;
            return ExactWeight::new(p, q);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.chars().any(|c| !c.is_ascii_digit()) || int.chars().any(|c| !c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let num: BigUint = if digits.is_empty() { return Err(bad()) } else { digits.parse().map_err(|_| bad())? };
        let den = num_traits::pow(BigUint::from(10u32), frac.len());
        ExactWeight::new(num, den)
    }
}

/// Arithmetic needed by measures and distributions; implemented for exact rationals
/// and for `f64`.
pub trait Weight: Clone + Send + Sync + PartialOrd + fmt::Debug + fmt::Display + 'static {
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: u64, den: u64) -> Self;
    fn from_exact(w: &ExactWeight) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn abs_diff(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn to_csv(&self) -> String;
}

impl Weight for ExactWeight {
    const EXACT: bool = true;

    fn zero() -> Self {
        ExactWeight(Ratio::zero())
    }
    fn one() -> Self {
        ExactWeight(Ratio::one())
    }
    fn from_ratio(num: u64, den: u64) -> Self {
        ExactWeight::ratio(num, den)
    }
    fn from_exact(w: &ExactWeight) -> Self {
        w.clone()
    }
    fn add(&self, other: &Self) -> Self {
        ExactWeight(&self.0 + &other.0)
    }
    fn add_assign(&mut self, other: &Self) {
        self.0 += &other.0;
    }
    fn mul(&self, other: &Self) -> Self {
        ExactWeight(&self.0 * &other.0)
    }
    fn abs_diff(&self, other: &Self) -> Self {
        if self.0 >= other.0 {
            ExactWeight(&self.0 - &other.0)
        } else {
            ExactWeight(&other.0 - &self.0)
        }
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }
    fn to_csv(&self) -> String {
        self.to_string()
    }
}

fn ratio_to_f64(r: &Ratio<BigUint>) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    if n.is_zero() {
        return 0.0;
    }
    // keep 64 significant bits of the quotient
    let shift = d.bits() as i64 - n.bits() as i64 + 64;
    let q = if shift >= 0 { (n << shift as u64) / d } else { n / (d << (-shift) as u64) };
    q.to_f64().unwrap_or(f64::INFINITY) * (-(shift as f64)).exp2()
}

impl Weight for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
    fn from_exact(w: &ExactWeight) -> Self {
        w.to_f64()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn abs_diff(&self, other: &Self) -> Self {
        (self - other).abs()
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_csv(&self) -> String {
        format!("{self:e}")
    }
}

/// Sum helper usable with any [`Weight`].
pub struct WeightSum<W: Weight>(pub W);

impl<'a, W: Weight> Sum<&'a W> for WeightSum<W> {
    fn sum<I: Iterator<Item = &'a W>>(iter: I) -> Self {
        let mut acc = W::zero();
        for w in iter {
            acc.add_assign(w);
        }
        WeightSum(acc)
    }
}

pub fn total<'a, W: Weight>(iter: impl IntoIterator<Item = &'a W>) -> W {
    let WeightSum(w) = iter.into_iter().sum();
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn normalize_examples() {
        let half = dyadic_normalize(2, 2).unwrap();
        assert_eq!(half, d("1/2"));
        assert_eq!((half.num().clone(), half.exp()), (BigUint::from(1u32), 1));
        let z = dyadic_normalize(0, 8).unwrap();
        assert_eq!((z.num().clone(), z.exp()), (BigUint::zero(), 0));
        let t = dyadic_normalize(3, 3).unwrap();
        assert_eq!((t.num().clone(), t.exp()), (BigUint::from(3u32), 3));
        assert_eq!(dyadic_normalize(8, 3).unwrap(), Dyadic::one());
    }

    #[test]
    fn normalize_rejects_out_of_range() {
        assert!(matches!(dyadic_normalize(9, 3), Err(Error::OutOfRange(_))));
        assert!(matches!(dyadic_normalize(-1, 3), Err(Error::OutOfRange(_))));
        assert!(matches!(dyadic_normalize(3, 1), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn affine_examples() {
        let minus_one = SignedDyadic::new(-1, 0).unwrap();
        assert_eq!(dyadic_affine(&d("7/8"), 1, &minus_one).unwrap(), d("3/4"));
        assert_eq!(dyadic_affine(&d("1/2"), -1, &SignedDyadic::zero()).unwrap(), d("1/4"));
        assert_eq!(dyadic_affine(&d("31/32"), 1, &minus_one).unwrap(), d("15/16"));
        assert!(matches!(dyadic_affine(&d("1/4"), 1, &minus_one), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn compare_examples() {
        assert_eq!(dyadic_compare(&d("1/2"), &d("3/4")), Ordering::Less);
        assert_eq!(dyadic_compare(&d("3/8"), &d("3/8")), Ordering::Equal);
        assert_eq!(dyadic_compare(&d("15/16"), &d("7/8")), Ordering::Greater);
        assert_eq!(dyadic_compare(&Dyadic::zero(), &d("1/1024")), Ordering::Less);
        assert_eq!(dyadic_compare(&Dyadic::one(), &d("1023/1024")), Ordering::Greater);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(d("3/2^3"), d("3/8"));
        assert_eq!(d("0/1"), Dyadic::zero());
        assert_eq!(d("1/1"), Dyadic::one());
        assert!("1/3".parse::<Dyadic>().is_err());
        assert!("5/4".parse::<Dyadic>().is_err());
        assert_eq!(d("6/8").to_string(), "3/4");
    }

    #[test]
    fn exponent_limit_is_enforced() {
        assert!(matches!(Dyadic::one_minus_pow2(DEFAULT_EXPONENT_LIMIT + 1), Err(Error::ExponentLimit { .. })));
        assert!(Dyadic::one_minus_pow2(200).is_ok());
    }

    #[test]
    fn weights_parse_and_print() {
        let w: ExactWeight = "2/4".parse().unwrap();
        assert_eq!(w.to_string(), "1/2");
        let w: ExactWeight = "0.125".parse().unwrap();
        assert_eq!(w, ExactWeight::ratio(1, 8));
        assert!("1/0".parse::<ExactWeight>().is_err());
        assert!("-1/2".parse::<ExactWeight>().is_err());
        assert_eq!(ExactWeight::ratio(1, 3).abs_diff(&ExactWeight::ratio(1, 2)), ExactWeight::ratio(1, 6));
        assert!((ExactWeight::ratio(1, 3).to_f64() - 1.0 / 3.0).abs() < 1e-16);
    }
}
