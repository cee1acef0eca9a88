//! Coefficient fields.
//!
//! Every algebraic routine in the crate is generic over [`Scalar`]. Three
//! fields implement it: exact Gaussian rationals [`GaussRational`], arbitrary
//! precision complex floats [`BigComplex`], and plain [`Complex64`].

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as IntSign};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Precision used when a [`BigComplex`] is created without an explicit one.
pub const DEFAULT_PRECISION: usize = 128;

const RM: RoundingMode = RoundingMode::ToEven;

/// A commutative field of coefficients.
pub trait Scalar: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_gauss(q: &GaussRational) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse, `None` for zero.
    fn recip(&self) -> Option<Self>;
    fn to_c64(&self) -> Complex64;
    /// Whether equality tests in this field are exact.
    fn is_exact() -> bool;

    fn from_i64(n: i64) -> Self {
        Self::from_gauss(&GaussRational::from_int(n))
    }

    fn div(&self, rhs: &Self) -> Option<Self> {
        rhs.recip().map(|r| self.mul(&r))
    }

    fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Modulus as an `f64`, used for pivoting and tolerances.
    fn modulus(&self) -> f64 {
        self.to_c64().norm()
    }
}

// ---------------------------------------------------------------------------
// Gaussian rationals
// ---------------------------------------------------------------------------

/// An exact element `re + im·i` of `Q(i)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as a Gaussian rational")]
pub struct ParseScalarError(pub String);

impl GaussRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRational { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        GaussRational::real(BigRational::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        GaussRational::real(BigRational::new(num.into(), den.into()))
    }

    pub fn real(re: BigRational) -> Self {
        GaussRational { re, im: BigRational::zero() }
    }

    pub fn complex(re: (i64, i64), im: (i64, i64)) -> Self {
        GaussRational {
            re: BigRational::new(re.0.into(), re.1.into()),
            im: BigRational::new(im.0.into(), im.1.into()),
        }
    }

    pub fn i() -> Self {
        GaussRational { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRational { re: self.re.clone(), im: -self.im.clone() }
    }

    /// `re² + im²`.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Principal square root when it lies in `Q(i)`.
    ///
    /// The principal branch has positive real part, or zero real part and
    /// non-negative imaginary part.
    pub fn sqrt(&self) -> Option<Self> {
        if self.im.is_zero() {
            if self.re.is_negative() {
                let r = rational_sqrt(&-self.re.clone())?;
                return Some(GaussRational { re: BigRational::zero(), im: r });
            }
            return rational_sqrt(&self.re).map(GaussRational::real);
        }
        let r = rational_sqrt(&self.norm_sqr())?;
        let two = BigRational::from_integer(2.into());
        let x = rational_sqrt(&((&self.re + &r) / &two))?;
        let y = &self.im / (&two * &x);
        Some(GaussRational { re: x, im: y })
    }
}

fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = int_sqrt(q.numer())?;
    let d = int_sqrt(q.denom())?;
    Some(BigRational::new(n, d))
}

fn int_sqrt(n: &BigInt) -> Option<BigInt> {
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

fn fmt_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `p`, `p/q`, or a decimal literal such as `-1.25e-3` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, ParseScalarError> {
    let err = || ParseScalarError(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(p) => (&t[..p], t[p + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(&digits).map_err(|_| err())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let q = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(q)
}

impl FromStr for GaussRational {
    type Err = ParseScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let err = || ParseScalarError(s.to_string());
        let Some(body) = t.strip_suffix('i') else {
            return Ok(GaussRational::real(parse_rational(&t)?));
        };
        // split at the last sign that is not a leading sign or an exponent sign
        let bytes = body.as_bytes();
        let mut split = None;
        for p in (1..bytes.len()).rev() {
            if (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E') {
                split = Some(p);
                break;
            }
        }
        let (re, im) = match split {
            Some(p) => (parse_rational(&body[..p])?, &body[p..]),
            None => (BigRational::zero(), body),
        };
        let im = match im {
            "" | "+" => BigRational::one(),
            "-" => -BigRational::one(),
            other => parse_rational(other).map_err(|_| err())?,
        };
        Ok(GaussRational { re, im })
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", fmt_rational(&self.re));
        }
        let im = fmt_rational(&self.im);
        if self.re.is_zero() {
            return write!(f, "{im}i");
        }
        let sign = if self.im.is_negative() { "" } else { "+" };
        write!(f, "{}{sign}{im}i", fmt_rational(&self.re))
    }
}

impl Serialize for GaussRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GaussRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Scalar for GaussRational {
    fn zero() -> Self {
        GaussRational { re: BigRational::zero(), im: BigRational::zero() }
    }

    fn one() -> Self {
        GaussRational::from_int(1)
    }

    fn from_gauss(q: &GaussRational) -> Self {
        q.clone()
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(&self, rhs: &Self) -> Self {
        GaussRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }

    fn sub(&self, rhs: &Self) -> Self {
        GaussRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }

    fn mul(&self, rhs: &Self) -> Self {
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussRational::real(&self.re * &rhs.re);
        }
        GaussRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }

    fn neg(&self) -> Self {
        GaussRational { re: -self.re.clone(), im: -self.im.clone() }
    }

    fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(GaussRational::real(self.re.recip()));
        }
        let n = self.norm_sqr();
        Some(GaussRational { re: &self.re / &n, im: -(&self.im / &n) })
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn is_exact() -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// Arbitrary precision complex floats
// ---------------------------------------------------------------------------

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

/// A complex number with `BigFloat` parts and an explicit working precision
/// in bits. Binary operations run at the larger precision of the operands.
#[derive(Clone, Debug)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
    prec: usize,
}

fn bigint_to_float(n: &BigInt, p: usize) -> BigFloat {
    let (sign, digits) = n.to_u64_digits();
    let work = p.max(64 * (digits.len() + 1));
    let base = BigFloat::from_f64(18446744073709551616.0, work);
    let mut acc = BigFloat::from_u64(0, work);
    for d in digits.iter().rev() {
        acc = acc.mul(&base, work, RM).add(&BigFloat::from_u64(*d, work), work, RM);
    }
    if sign == IntSign::Minus {
        acc = acc.neg();
    }
    acc
}

/// Rounds an exact rational to a `BigFloat` of precision `p`.
pub fn rational_to_float(q: &BigRational, p: usize) -> BigFloat {
    if q.is_zero() {
        return BigFloat::from_u64(0, p);
    }
    let n = bigint_to_float(q.numer(), p);
    let d = bigint_to_float(q.denom(), p);
    n.div(&d, p, RM)
}

/// Nearest `f64` of a `BigFloat` (truncating the mantissa to 64 bits).
pub fn float_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf() {
        return if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let Some((m, _, sign, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *m.last().unwrap_or(&0) as f64 / 18446744073709551616.0;
    // two-step scaling keeps subnormal and large exponents from overflowing powi
    let half = e / 2;
    let v = top * 2f64.powi(half) * 2f64.powi(e - half);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// Parses a decimal literal at precision `p`.
pub fn parse_float(s: &str, p: usize) -> Option<BigFloat> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    let v = CONSTS.with(|cc| BigFloat::parse(t, Radix::Dec, p, RM, &mut cc.borrow_mut()));
    (!v.is_nan()).then_some(v)
}

/// Full precision decimal rendering.
pub fn format_float(x: &BigFloat) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    CONSTS
        .with(|cc| x.format(Radix::Dec, RM, &mut cc.borrow_mut()))
        .map(|t| t.replace(".e", "e"))
        .unwrap_or_else(|_| "NaN".to_string())
}

impl BigComplex {
    pub fn new(re: BigFloat, im: BigFloat, prec: usize) -> Self {
        BigComplex { re, im, prec }
    }

    pub fn from_f64(re: f64, im: f64, prec: usize) -> Self {
        BigComplex { re: BigFloat::from_f64(re, prec), im: BigFloat::from_f64(im, prec), prec }
    }

    pub fn from_gauss_prec(q: &GaussRational, prec: usize) -> Self {
        BigComplex { re: rational_to_float(&q.re, prec), im: rational_to_float(&q.im, prec), prec }
    }

    pub fn zero_prec(prec: usize) -> Self {
        BigComplex::from_f64(0.0, 0.0, prec)
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    /// Rounds both parts to precision `p`.
    pub fn with_precision(&self, p: usize) -> Self {
        let mut re = self.re.clone();
        let mut im = self.im.clone();
        let _ = re.set_precision(p, RM);
        let _ = im.set_precision(p, RM);
        BigComplex { re, im, prec: p }
    }

    pub fn norm_sqr(&self) -> BigFloat {
        let p = self.prec;
        self.re.mul(&self.re, p, RM).add(&self.im.mul(&self.im, p, RM), p, RM)
    }

    pub fn is_finite(&self) -> bool {
        !(self.re.is_nan() || self.im.is_nan() || self.re.is_inf() || self.im.is_inf())
    }

    /// Parses `a`, `a+bi`, `bi` with decimal parts.
    pub fn parse(s: &str, prec: usize) -> Option<Self> {
        let q: GaussRational = s.parse().ok()?;
        Some(BigComplex::from_gauss_prec(&q, prec))
    }
}

impl PartialEq for BigComplex {
    fn eq(&self, other: &Self) -> bool {
        self.re.cmp(&other.re) == Some(0) && self.im.cmp(&other.im) == Some(0)
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_float(&self.re))?;
        if !self.im.is_zero() {
            let im = format_float(&self.im);
            if im.starts_with('-') {
                write!(f, "{im}i")?;
            } else {
                write!(f, "+{im}i")?;
            }
        }
        Ok(())
    }
}

impl Scalar for BigComplex {
    fn zero() -> Self {
        BigComplex::zero_prec(DEFAULT_PRECISION)
    }

    fn one() -> Self {
        BigComplex::from_f64(1.0, 0.0, DEFAULT_PRECISION)
    }

    fn from_gauss(q: &GaussRational) -> Self {
        BigComplex::from_gauss_prec(q, DEFAULT_PRECISION)
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(&self, rhs: &Self) -> Self {
        let p = self.prec.max(rhs.prec);
        BigComplex { re: self.re.add(&rhs.re, p, RM), im: self.im.add(&rhs.im, p, RM), prec: p }
    }

    fn sub(&self, rhs: &Self) -> Self {
        let p = self.prec.max(rhs.prec);
        BigComplex { re: self.re.sub(&rhs.re, p, RM), im: self.im.sub(&rhs.im, p, RM), prec: p }
    }

    fn mul(&self, rhs: &Self) -> Self {
        let p = self.prec.max(rhs.prec);
        if self.im.is_zero() && rhs.im.is_zero() {
            return BigComplex { re: self.re.mul(&rhs.re, p, RM), im: BigFloat::from_u64(0, p), prec: p };
        }
        let re = self.re.mul(&rhs.re, p, RM).sub(&self.im.mul(&rhs.im, p, RM), p, RM);
        let im = self.re.mul(&rhs.im, p, RM).add(&self.im.mul(&rhs.re, p, RM), p, RM);
        BigComplex { re, im, prec: p }
    }

    fn neg(&self) -> Self {
        BigComplex { re: self.re.neg(), im: self.im.neg(), prec: self.prec }
    }

    fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let p = self.prec;
        let n = self.norm_sqr();
        Some(BigComplex { re: self.re.div(&n, p, RM), im: self.im.neg().div(&n, p, RM), prec: p })
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(float_to_f64(&self.re), float_to_f64(&self.im))
    }

    fn is_exact() -> bool {
        false
    }
}

// ---------------------------------------------------------------------------
// f64 complex
// ---------------------------------------------------------------------------

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn from_gauss(q: &GaussRational) -> Self {
        q.to_c64()
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn recip(&self) -> Option<Self> {
        (!Scalar::is_zero(self)).then(|| Complex64::new(1.0, 0.0) / self)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn is_exact() -> bool {
        false
    }
}
