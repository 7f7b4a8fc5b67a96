//! Arbitrary-precision real and complex floating-point numbers.
//!
//! Reals are MPFR numbers (through `rug`) rounded to nearest, so the basic
//! real operations `+ - * / sqrt` are correctly rounded (at most half an ulp
//! from the exact result). Complex operations are composed from those and are
//! accurate to a few ulps of the larger component.
//!
//! Every value carries its [`Precision`]. Binary operations require equal
//! precisions on both sides; the operator impls panic on a mismatch while the
//! named functions ([`add`], [`sub`], [`mul`], [`div`]) return
//! [`NumericError::PrecisionMismatch`]. NaN never leaves this module: the
//! fallible operations convert a non-finite backend result into an error.
//!
//! The backend's multiplication is GMP's, which switches to an FFT above a
//! few hundred thousand bits; below that it runs in the Karatsuba/Toom range.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{OnceLock, RwLock};

use rug::float::Constant;
use rug::{Float, Integer};
use thiserror::Error;

/// Smallest supported mantissa size.
pub const MIN_PRECISION_BITS: u32 = 53;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("precision must be at least {MIN_PRECISION_BITS} bits, got {0}")]
    InvalidPrecision(u32),
    #[error("precision mismatch: {left} bits vs {right} bits")]
    PrecisionMismatch { left: u32, right: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result in {0}")]
    NonFinite(&'static str),
    #[error("exponent overflow in {0}")]
    Overflow(&'static str),
    #[error("AGM did not converge after {0} iterations")]
    AgmNoConvergence(u32),
    #[error("AGM of a zero argument")]
    AgmZeroArgument,
}

pub type Result<T, E = NumericError> = std::result::Result<T, E>;

/// Number of mantissa bits, at least [`MIN_PRECISION_BITS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision(u32);

impl Precision {
    pub fn new(bits: u32) -> Result<Self> {
        if bits < MIN_PRECISION_BITS {
            return Err(NumericError::InvalidPrecision(bits));
        }
        Ok(Precision(bits))
    }

    /// Like [`Precision::new`] but raises `bits` to the minimum instead of failing.
    pub fn at_least(bits: u32) -> Self {
        Precision(bits.max(MIN_PRECISION_BITS))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn plus(self, extra: u32) -> Self {
        Precision(self.0 + extra)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

fn check_same(left: u32, right: u32) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(NumericError::PrecisionMismatch { left, right })
    }
}

fn assert_same(left: u32, right: u32) {
    if let Err(e) = check_same(left, right) {
        panic!("{e}");
    }
}

fn finite(value: Float, op: &'static str) -> Result<Float> {
    if value.is_nan() {
        Err(NumericError::NonFinite(op))
    } else if value.is_infinite() {
        Err(NumericError::Overflow(op))
    } else {
        Ok(value)
    }
}

/// Real floating-point number at a fixed precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigReal {
    value: Float,
}

impl BigReal {
    pub fn zero(prec: Precision) -> Self {
        BigReal {
            value: Float::new(prec.0),
        }
    }

    pub fn one(prec: Precision) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: Precision) -> Self {
        BigReal {
            value: Float::with_val(prec.0, v),
        }
    }

    pub fn from_u64(v: u64, prec: Precision) -> Self {
        BigReal {
            value: Float::with_val(prec.0, v),
        }
    }

    pub fn from_f64(v: f64, prec: Precision) -> Self {
        assert!(v.is_finite(), "non-finite f64 {v}");
        BigReal {
            value: Float::with_val(prec.0, v),
        }
    }

    pub fn from_integer(v: &Integer, prec: Precision) -> Self {
        BigReal {
            value: Float::with_val(prec.0, v),
        }
    }

    /// Parses a decimal literal such as `"5.441398092702653551"`.
    pub fn parse_decimal(s: &str, prec: Precision) -> Option<Self> {
        let parsed = Float::parse(s).ok()?;
        Some(BigReal {
            value: Float::with_val(prec.0, parsed),
        })
    }

    pub(crate) fn from_float(value: Float) -> Self {
        debug_assert!(value.prec() >= MIN_PRECISION_BITS);
        BigReal { value }
    }

    pub fn as_float(&self) -> &Float {
        &self.value
    }

    pub fn into_float(self) -> Float {
        self.value
    }

    pub fn prec(&self) -> Precision {
        Precision(self.value.prec())
    }

    /// Rounds (or zero-extends) to another precision.
    pub fn with_prec(&self, prec: Precision) -> Self {
        BigReal {
            value: Float::with_val(prec.0, &self.value),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.value.is_sign_negative() && !self.value.is_zero()
    }

    pub fn abs(&self) -> Self {
        BigReal {
            value: self.value.clone().abs(),
        }
    }

    pub fn square(&self) -> Self {
        BigReal {
            value: self.value.clone().square(),
        }
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.is_sign_negative() {
            return Err(NumericError::NonFinite("sqrt of a negative real"));
        }
        Ok(BigReal {
            value: self.value.clone().sqrt(),
        })
    }

    pub fn ln(&self) -> Result<Self> {
        if self.value.is_zero() || self.is_sign_negative() {
            return Err(NumericError::NonFinite("log of a non-positive real"));
        }
        Ok(BigReal {
            value: self.value.clone().ln(),
        })
    }

    pub fn exp(&self) -> Result<Self> {
        Ok(BigReal {
            value: finite(self.value.clone().exp(), "exp")?,
        })
    }

    pub fn recip(&self) -> Result<Self> {
        if self.value.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        Ok(BigReal {
            value: self.value.clone().recip(),
        })
    }

    pub fn div(&self, other: &BigReal) -> Result<Self> {
        check_same(self.value.prec(), other.value.prec())?;
        if other.value.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        Ok(BigReal {
            value: Float::with_val(self.value.prec(), &self.value / &other.value),
        })
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        BigReal {
            value: Float::with_val(self.value.prec(), &self.value * k),
        }
    }

    pub fn div_u64(&self, k: u64) -> Self {
        assert!(k != 0, "division by zero");
        BigReal {
            value: Float::with_val(self.value.prec(), &self.value / k),
        }
    }

    /// Multiplies by `2^e`; exact.
    pub fn mul_pow2(&self, e: i32) -> Self {
        let mut value = self.value.clone();
        value <<= e;
        BigReal { value }
    }

    pub fn ceil_to_integer(&self) -> Integer {
        self.value
            .clone()
            .ceil()
            .to_integer()
            .expect("finite by construction")
    }

    /// Nearest integer and the signed distance `self - nearest`.
    pub fn round_to_integer(&self) -> (Integer, BigReal) {
        let nearest = self.value.clone().round();
        let frac = Float::with_val(self.value.prec(), &self.value - &nearest);
        (
            nearest.to_integer().expect("finite by construction"),
            BigReal { value: frac },
        )
    }

    /// Binary exponent `e` with `2^(e-1) <= |self| < 2^e`, or `None` for zero.
    pub fn exponent(&self) -> Option<i32> {
        self.value.get_exp()
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        self.value.to_string_radix(10, Some(digits))
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.value, self.value.prec())
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.value, f)
    }
}

macro_rules! real_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                assert_same(self.value.prec(), rhs.value.prec());
                BigReal { value: Float::with_val(self.value.prec(), &self.value $op &rhs.value) }
            }
        }
    };
}

real_binop!(Add, add, +);
real_binop!(Sub, sub, -);
real_binop!(Mul, mul, *);

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal {
            value: -self.value.clone(),
        }
    }
}

/// Complex floating-point number; both parts share one precision.
#[derive(Clone, PartialEq)]
pub struct BigComplex {
    re: Float,
    im: Float,
}

impl BigComplex {
    pub fn new(re: BigReal, im: BigReal) -> Result<Self> {
        check_same(re.value.prec(), im.value.prec())?;
        Ok(BigComplex {
            re: re.value,
            im: im.value,
        })
    }

    pub fn from_real(re: BigReal) -> Self {
        let prec = re.value.prec();
        BigComplex {
            re: re.value,
            im: Float::new(prec),
        }
    }

    pub fn zero(prec: Precision) -> Self {
        BigComplex {
            re: Float::new(prec.0),
            im: Float::new(prec.0),
        }
    }

    pub fn one(prec: Precision) -> Self {
        Self::from_i64(1, 0, prec)
    }

    pub fn i(prec: Precision) -> Self {
        Self::from_i64(0, 1, prec)
    }

    pub fn from_i64(re: i64, im: i64, prec: Precision) -> Self {
        BigComplex {
            re: Float::with_val(prec.0, re),
            im: Float::with_val(prec.0, im),
        }
    }

    pub fn from_f64(re: f64, im: f64, prec: Precision) -> Self {
        assert!(re.is_finite() && im.is_finite(), "non-finite f64 input");
        BigComplex {
            re: Float::with_val(prec.0, re),
            im: Float::with_val(prec.0, im),
        }
    }

    pub fn from_integer(re: &Integer, prec: Precision) -> Self {
        BigComplex {
            re: Float::with_val(prec.0, re),
            im: Float::new(prec.0),
        }
    }

    pub(crate) fn from_floats(re: Float, im: Float) -> Self {
        assert_same(re.prec(), im.prec());
        BigComplex { re, im }
    }

    pub fn prec(&self) -> Precision {
        Precision(self.re.prec())
    }

    pub fn re(&self) -> BigReal {
        BigReal {
            value: self.re.clone(),
        }
    }

    pub fn im(&self) -> BigReal {
        BigReal {
            value: self.im.clone(),
        }
    }

    pub fn re_float(&self) -> &Float {
        &self.re
    }

    pub fn im_float(&self) -> &Float {
        &self.im
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn with_prec(&self, prec: Precision) -> Self {
        BigComplex {
            re: Float::with_val(prec.0, &self.re),
            im: Float::with_val(prec.0, &self.im),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        BigComplex {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// `|z|^2`.
    pub fn norm_sqr(&self) -> BigReal {
        let p = self.re.prec();
        let mut n = Float::with_val(p, self.re.square_ref());
        n += Float::with_val(p, self.im.square_ref());
        BigReal { value: n }
    }

    pub fn abs(&self) -> BigReal {
        BigReal {
            value: Float::with_val(self.re.prec(), self.re.hypot_ref(&self.im)),
        }
    }

    pub fn square(&self) -> Self {
        let p = self.re.prec();
        let re =
            Float::with_val(p, self.re.square_ref()) - Float::with_val(p, self.im.square_ref());
        let mut im = Float::with_val(p, &self.re * &self.im);
        im <<= 1;
        BigComplex { re, im }
    }

    pub fn mul_real(&self, r: &BigReal) -> Self {
        assert_same(self.re.prec(), r.value.prec());
        let p = self.re.prec();
        BigComplex {
            re: Float::with_val(p, &self.re * &r.value),
            im: Float::with_val(p, &self.im * &r.value),
        }
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        let p = self.re.prec();
        BigComplex {
            re: Float::with_val(p, &self.re * k),
            im: Float::with_val(p, &self.im * k),
        }
    }

    pub fn div_u64(&self, k: u64) -> Self {
        assert!(k != 0, "division by zero");
        let p = self.re.prec();
        BigComplex {
            re: Float::with_val(p, &self.re / k),
            im: Float::with_val(p, &self.im / k),
        }
    }

    /// Multiplies by `2^e`; exact.
    pub fn mul_pow2(&self, e: i32) -> Self {
        let mut z = self.clone();
        z.re <<= e;
        z.im <<= e;
        z
    }

    /// Multiplies by `i`; exact.
    pub fn mul_i(&self) -> Self {
        BigComplex {
            re: -self.im.clone(),
            im: self.re.clone(),
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        let n = self.norm_sqr().value;
        Ok(BigComplex {
            re: Float::with_val(n.prec(), &self.re / &n),
            im: -Float::with_val(n.prec(), &self.im / &n),
        })
    }

    pub fn pow_u64(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = BigComplex::one(self.prec());
        while e > 0 {
            if e & 1 == 1 {
                acc *= &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        acc
    }

    pub fn add_real(&self, r: &BigReal) -> Self {
        assert_same(self.re.prec(), r.value.prec());
        BigComplex {
            re: Float::with_val(self.re.prec(), &self.re + &r.value),
            im: self.im.clone(),
        }
    }

    pub fn add_i64(&self, k: i64) -> Self {
        BigComplex {
            re: Float::with_val(self.re.prec(), &self.re + k),
            im: self.im.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        BigComplex {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Largest binary exponent among the two parts; `None` for zero.
    pub fn exponent(&self) -> Option<i32> {
        match (self.re.get_exp(), self.im.get_exp()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn to_decimal(&self, digits: usize) -> String {
        format!(
            "({} {} {}i)",
            self.re.to_string_radix(10, Some(digits)),
            if self.im.is_sign_negative() { "-" } else { "+" },
            self.im.clone().abs().to_string_radix(10, Some(digits))
        )
    }
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.to_decimal(20), self.re.prec())
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(self.re.prec() as usize * 3 / 10 + 1))
    }
}

impl Add<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn add(self, rhs: &BigComplex) -> BigComplex {
        assert_same(self.re.prec(), rhs.re.prec());
        let p = self.re.prec();
        BigComplex {
            re: Float::with_val(p, &self.re + &rhs.re),
            im: Float::with_val(p, &self.im + &rhs.im),
        }
    }
}

impl Sub<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn sub(self, rhs: &BigComplex) -> BigComplex {
        assert_same(self.re.prec(), rhs.re.prec());
        let p = self.re.prec();
        BigComplex {
            re: Float::with_val(p, &self.re - &rhs.re),
            im: Float::with_val(p, &self.im - &rhs.im),
        }
    }
}

impl Mul<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: &BigComplex) -> BigComplex {
        assert_same(self.re.prec(), rhs.re.prec());
        let p = self.re.prec();
        let ac = Float::with_val(p, &self.re * &rhs.re);
        let bd = Float::with_val(p, &self.im * &rhs.im);
        let ad = Float::with_val(p, &self.re * &rhs.im);
        let bc = Float::with_val(p, &self.im * &rhs.re);
        BigComplex {
            re: ac - bd,
            im: ad + bc,
        }
    }
}

impl AddAssign<&BigComplex> for BigComplex {
    fn add_assign(&mut self, rhs: &BigComplex) {
        assert_same(self.re.prec(), rhs.re.prec());
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&BigComplex> for BigComplex {
    fn sub_assign(&mut self, rhs: &BigComplex) {
        assert_same(self.re.prec(), rhs.re.prec());
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&BigComplex> for BigComplex {
    fn mul_assign(&mut self, rhs: &BigComplex) {
        *self = &*self * rhs;
    }
}

impl Neg for &BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex::neg(self)
    }
}

pub fn add(a: &BigComplex, b: &BigComplex) -> Result<BigComplex> {
    check_same(a.re.prec(), b.re.prec())?;
    Ok(a + b)
}

pub fn sub(a: &BigComplex, b: &BigComplex) -> Result<BigComplex> {
    check_same(a.re.prec(), b.re.prec())?;
    Ok(a - b)
}

pub fn mul(a: &BigComplex, b: &BigComplex) -> Result<BigComplex> {
    check_same(a.re.prec(), b.re.prec())?;
    Ok(a * b)
}

pub fn div(a: &BigComplex, b: &BigComplex) -> Result<BigComplex> {
    check_same(a.re.prec(), b.re.prec())?;
    if b.is_zero() {
        return Err(NumericError::DivisionByZero);
    }
    let p = a.re.prec();
    let n = b.norm_sqr().value;
    // (a.re + i a.im)(b.re - i b.im) / |b|^2
    let re = Float::with_val(p, &a.re * &b.re) + Float::with_val(p, &a.im * &b.im);
    let im = Float::with_val(p, &a.im * &b.re) - Float::with_val(p, &a.re * &b.im);
    Ok(BigComplex {
        re: finite(Float::with_val(p, &re / &n), "complex division")?,
        im: finite(Float::with_val(p, &im / &n), "complex division")?,
    })
}

/// Principal square root: non-negative real part, and non-negative imaginary
/// part when the real part is zero.
pub fn csqrt(a: &BigComplex) -> BigComplex {
    let p = a.re.prec();
    if a.is_zero() {
        return BigComplex::zero(Precision(p));
    }
    let modulus = Float::with_val(p, a.re.hypot_ref(&a.im));
    if !a.re.is_sign_negative() || a.re.is_zero() {
        // c = sqrt((a + |z|)/2), sqrt(z) = c + i b/(2c)
        let mut c = Float::with_val(p, &a.re + &modulus);
        c >>= 1;
        c.sqrt_mut();
        let mut im = Float::with_val(p, &a.im / &c);
        im >>= 1;
        BigComplex { re: c, im }
    } else {
        let mut d = Float::with_val(p, &modulus - &a.re);
        d >>= 1;
        d.sqrt_mut();
        let mut re = Float::with_val(p, &a.im / &d);
        re >>= 1;
        re.abs_mut();
        let im = if a.im.is_sign_negative() && !a.im.is_zero() {
            -d
        } else {
            d
        };
        BigComplex { re, im }
    }
}

/// `exp(re) * (cos(im) + i sin(im))`. MPFR reduces trigonometric arguments
/// exactly, so `im` is not range limited; `re` must stay inside the
/// backend's exponent range.
pub fn cexp(a: &BigComplex) -> Result<BigComplex> {
    let p = a.re.prec();
    let scale = finite(a.re.clone().exp(), "exp")?;
    let (sin, cos) = a.im.clone().sin_cos(Float::new(p));
    Ok(BigComplex {
        re: Float::with_val(p, &scale * &cos),
        im: Float::with_val(p, &scale * &sin),
    })
}

static PI_CACHE: OnceLock<RwLock<HashMap<u32, Float>>> = OnceLock::new();

/// π correctly rounded to `prec`, cached per precision.
pub fn pi_const(prec: Precision) -> BigReal {
    let cache = PI_CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(v) = cache.read().expect("pi cache poisoned").get(&prec.0) {
        return BigReal { value: v.clone() };
    }
    let v = Float::with_val(prec.0, Constant::Pi);
    cache
        .write()
        .expect("pi cache poisoned")
        .entry(prec.0)
        .or_insert_with(|| v.clone());
    BigReal { value: v }
}

pub fn ln2_const(prec: Precision) -> BigReal {
    BigReal {
        value: Float::with_val(prec.0, Constant::Log2),
    }
}

pub fn euler_gamma(prec: Precision) -> BigReal {
    BigReal {
        value: Float::with_val(prec.0, Constant::Euler),
    }
}

/// Arithmetic-geometric mean with the "good" square root at each step: the
/// candidate `g` closer to the arithmetic mean, ties going to `Re g >= 0`.
/// Stops once `|a_n - b_n| <= 2^(4 - prec) |a_n|`.
pub fn agm(a: &BigComplex, b: &BigComplex) -> Result<BigComplex> {
    check_same(a.re.prec(), b.re.prec())?;
    if a.is_zero() || b.is_zero() {
        return Err(NumericError::AgmZeroArgument);
    }
    let p = a.re.prec();
    let max_iter = 4 * (32 - p.leading_zeros()) + 64;
    let mut x = a.clone();
    let mut y = b.clone();
    for _ in 0..max_iter {
        let diff = (&x - &y).norm_sqr().value;
        let mut thresh = x.norm_sqr().value;
        thresh <<= 2 * (4 - p as i32);
        if diff <= thresh {
            return Ok(x);
        }
        let mean = (&x + &y).mul_pow2(-1);
        let g = csqrt(&(&x * &y));
        let dm = (&mean - &g).norm_sqr().value;
        let dp = (&mean + &g).norm_sqr().value;
        let geo = match dm.partial_cmp(&dp) {
            Some(Ordering::Less) => g,
            Some(Ordering::Greater) => g.neg(),
            _ => {
                if g.re.is_sign_negative() && !g.re.is_zero() {
                    g.neg()
                } else {
                    g
                }
            }
        };
        x = mean;
        y = geo;
        if x.is_zero() {
            return Err(NumericError::NonFinite("agm"));
        }
    }
    Err(NumericError::AgmNoConvergence(max_iter))
}
