//! Coefficient arithmetic: exact Gaussian rationals and arbitrary-precision
//! complex floats behind one `Scalar` type.
//!
//! Every series coefficient in the engine is a `Scalar`. The exact backend is
//! the field Q(i) represented by two reduced `BigRational`s; the float backend
//! is a complex number of `BigFloat`s at a caller-chosen precision (>= 128
//! bits, default 256). Mixing backends in one operation is an error, never a
//! silent coercion.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Mutex;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as IntSign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::error::AlgebraError;

/// Default float-backend precision in bits.
pub const DEFAULT_PRECISION_BITS: usize = 256;
/// Minimum accepted float-backend precision in bits.
pub const MIN_PRECISION_BITS: usize = 128;

const RM: RoundingMode = RoundingMode::ToEven;

static CONSTS: Lazy<Mutex<Consts>> =
    Lazy::new(|| Mutex::new(Consts::new().expect("constants cache")));

/// Arithmetic backend tag carried by scalars, polynomials and series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Exact Gaussian rationals Q(i).
    Exact,
    /// Arbitrary-precision complex floats with the given mantissa bits.
    Float(usize),
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Exact => write!(f, "exact"),
            Backend::Float(p) => write!(f, "float({p})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Exact Gaussian rationals
// ---------------------------------------------------------------------------

/// An element of Q(i): `re + im * I` with reduced rational parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        GaussianRational::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        GaussianRational::new(BigRational::one(), BigRational::zero())
    }

    pub fn i() -> Self {
        GaussianRational::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        GaussianRational::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        GaussianRational::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    pub fn from_parts(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> Self {
        GaussianRational::new(
            BigRational::new(BigInt::from(re_num), BigInt::from(re_den)),
            BigRational::new(BigInt::from(im_num), BigInt::from(im_den)),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        GaussianRational::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &Self) -> Self {
        GaussianRational::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn neg(&self) -> Self {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        GaussianRational::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), -self.im.clone())
    }

    /// Squared modulus, a non-negative rational.
    pub fn abs2(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let n = self.abs2();
        Ok(GaussianRational::new(&self.re / &n, -&self.im / &n))
    }

    pub fn div(&self, o: &Self) -> Result<Self, AlgebraError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, mut k: u32) -> Self {
        let mut acc = GaussianRational::one();
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// Exact square root in Q(i) if it exists, else `NeedsRadical`.
    ///
    /// The principal branch is chosen: Re > 0, or Re = 0 and Im >= 0.
    pub fn sqrt(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Ok(GaussianRational::zero());
        }
        if self.im.is_zero() {
            return if self.re.is_negative() {
                let root = rational_sqrt(&(-self.re.clone())).ok_or(AlgebraError::NeedsRadical)?;
                Ok(GaussianRational::new(BigRational::zero(), root))
            } else {
                let root = rational_sqrt(&self.re).ok_or(AlgebraError::NeedsRadical)?;
                Ok(GaussianRational::new(root, BigRational::zero()))
            };
        }
        // sqrt(a + bi) = x + yi with x^2 = (a + |c|)/2, y = b / (2x).
        let m = rational_sqrt(&self.abs2()).ok_or(AlgebraError::NeedsRadical)?;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let x2 = (&self.re + &m) * &half;
        let x = rational_sqrt(&x2).ok_or(AlgebraError::NeedsRadical)?;
        if x.is_zero() {
            return Err(AlgebraError::NeedsRadical);
        }
        let y = &self.im / (&x * BigRational::from_integer(BigInt::from(2)));
        Ok(GaussianRational::new(x, y))
    }

    /// Exact k-th root when it exists in Q(i) (k in 1..=4), else `NeedsRadical`.
    pub fn kth_root(&self, k: u32) -> Result<Self, AlgebraError> {
        match k {
            1 => Ok(self.clone()),
            2 => self.sqrt(),
            4 => {
                let s = self.sqrt()?;
                s.sqrt()
            }
            3 => {
                // Only rational real cube roots are attempted exactly.
                if !self.im.is_zero() {
                    return Err(AlgebraError::NeedsRadical);
                }
                let root = rational_nth_root(&self.re, 3).ok_or(AlgebraError::NeedsRadical)?;
                Ok(GaussianRational::new(root, BigRational::zero()))
            }
            _ => Err(AlgebraError::NeedsRadical),
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Exact rational square root of a non-negative rational, if one exists.
fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let num = integer_sqrt_exact(q.numer())?;
    let den = integer_sqrt_exact(q.denom())?;
    Some(BigRational::new(num, den))
}

fn integer_sqrt_exact(n: &BigInt) -> Option<BigInt> {
    if n.sign() == IntSign::Minus {
        return None;
    }
    let r = n.sqrt();
    if &(&r * &r) == n {
        Some(r)
    } else {
        None
    }
}

/// Exact rational k-th root (odd k accepts negatives), if one exists.
fn rational_nth_root(q: &BigRational, k: u32) -> Option<BigRational> {
    let num = integer_nth_root_exact(q.numer(), k)?;
    let den = integer_nth_root_exact(q.denom(), k)?;
    Some(BigRational::new(num, den))
}

fn integer_nth_root_exact(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.sign() == IntSign::Minus {
        if k % 2 == 0 {
            return None;
        }
        return integer_nth_root_exact(&-n, k).map(|r| -r);
    }
    let r = n.nth_root(k);
    if &num_traits::pow(r.clone(), k as usize) == n {
        Some(r)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Arbitrary-precision complex floats
// ---------------------------------------------------------------------------

/// A complex number of `BigFloat`s at a fixed working precision.
#[derive(Debug, Clone)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
    pub prec: usize,
}

impl BigComplex {
    pub fn zero(prec: usize) -> Self {
        BigComplex { re: BigFloat::new(prec), im: BigFloat::new(prec), prec }
    }

    pub fn from_f64(re: f64, im: f64, prec: usize) -> Self {
        BigComplex { re: BigFloat::from_f64(re, prec), im: BigFloat::from_f64(im, prec), prec }
    }

    pub fn from_rational(q: &GaussianRational, prec: usize) -> Self {
        BigComplex {
            re: rational_to_bigfloat(&q.re, prec),
            im: rational_to_bigfloat(&q.im, prec),
            prec,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn join(a: usize, b: usize) -> usize {
        a.max(b)
    }

    pub fn add(&self, o: &Self) -> Self {
        let p = Self::join(self.prec, o.prec);
        BigComplex { re: self.re.add(&o.re, p, RM), im: self.im.add(&o.im, p, RM), prec: p }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let p = Self::join(self.prec, o.prec);
        BigComplex { re: self.re.sub(&o.re, p, RM), im: self.im.sub(&o.im, p, RM), prec: p }
    }

    pub fn neg(&self) -> Self {
        BigComplex { re: self.re.neg(), im: self.im.neg(), prec: self.prec }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = Self::join(self.prec, o.prec);
        let re = self.re.mul(&o.re, p, RM).sub(&self.im.mul(&o.im, p, RM), p, RM);
        let im = self.re.mul(&o.im, p, RM).add(&self.im.mul(&o.re, p, RM), p, RM);
        BigComplex { re, im, prec: p }
    }

    pub fn conj(&self) -> Self {
        BigComplex { re: self.re.clone(), im: self.im.neg(), prec: self.prec }
    }

    pub fn abs2(&self) -> BigFloat {
        let p = self.prec;
        self.re.mul(&self.re, p, RM).add(&self.im.mul(&self.im, p, RM), p, RM)
    }

    pub fn inv(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let p = self.prec;
        let n = self.abs2();
        Ok(BigComplex { re: self.re.div(&n, p, RM), im: self.im.neg().div(&n, p, RM), prec: p })
    }

    pub fn div(&self, o: &Self) -> Result<Self, AlgebraError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (bigfloat_to_f64(&self.re), bigfloat_to_f64(&self.im))
    }

    /// Principal complex square root.
    pub fn sqrt(&self) -> Result<Self, AlgebraError> {
        self.kth_root(2)
    }

    /// Principal k-th root: an f64 seed on the principal branch refined by
    /// complex Newton iteration at full precision.
    pub fn kth_root(&self, k: u32) -> Result<Self, AlgebraError> {
        if k == 0 {
            return Err(AlgebraError::DivisionByZero);
        }
        if k == 1 {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(BigComplex::zero(self.prec));
        }
        let p = self.prec;
        // Principal branch seed in f64 via polar form; rescale to dodge
        // overflow for extreme exponents.
        let er = self.re.exponent().unwrap_or(0) as i64;
        let ei = self.im.exponent().unwrap_or(0) as i64;
        let emax = er.max(ei);
        // Work on self / 2^(k*floor(emax/k)) so the seed is O(1).
        let shift = (emax.div_euclid(k as i64)) * k as i64;
        let mut scaled = self.clone();
        scaled.re = shift_exponent(&scaled.re, -shift);
        scaled.im = shift_exponent(&scaled.im, -shift);
        let (sr, si) = scaled.to_f64();
        let r = sr.hypot(si);
        let theta = si.atan2(sr);
        let root_r = r.powf(1.0 / k as f64);
        let root_t = theta / k as f64;
        let mut x = BigComplex::from_f64(root_r * root_t.cos(), root_r * root_t.sin(), p);
        // Newton: x <- x - (x^k - c) / (k x^(k-1)); doubles accuracy per step.
        let kf = BigComplex::from_f64(k as f64, 0.0, p);
        let steps = (p as f64).log2().ceil() as usize + 3;
        for _ in 0..steps {
            let xk1 = powi_complex(&x, k - 1);
            let xk = xk1.mul(&x);
            let num = xk.sub(&scaled);
            let den = kf.mul(&xk1);
            x = x.sub(&num.div(&den)?);
        }
        x.re = shift_exponent(&x.re, shift / k as i64);
        x.im = shift_exponent(&x.im, shift / k as i64);
        Ok(x)
    }
}

fn powi_complex(x: &BigComplex, mut k: u32) -> BigComplex {
    let mut acc = BigComplex::from_f64(1.0, 0.0, x.prec);
    let mut base = x.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.mul(&base);
        }
        base = base.mul(&base);
        k >>= 1;
    }
    acc
}

fn shift_exponent(x: &BigFloat, by: i64) -> BigFloat {
    if x.is_zero() || by == 0 {
        return x.clone();
    }
    let mut y = x.clone();
    let e = y.exponent().expect("finite float") as i64;
    y.set_exponent((e + by) as astro_float::Exponent);
    y
}

/// Convert a `BigInt` to a `BigFloat` exactly (then rounded to `prec`).
fn bigint_to_bigfloat(n: &BigInt, prec: usize) -> BigFloat {
    let (sign, digits) = n.to_u64_digits();
    let work = prec + 64;
    let mut acc = BigFloat::new(work);
    let base = {
        // 2^64 as a BigFloat.
        let mut b = BigFloat::from_u8(1, work);
        b.set_exponent(65);
        b
    };
    for d in digits.iter().rev() {
        acc = acc.mul(&base, work, RM).add(&BigFloat::from_u64(*d, work), work, RM);
    }
    if sign == IntSign::Minus {
        acc = acc.neg();
    }
    let mut out = acc;
    out.set_precision(prec, RM).expect("precision");
    out
}

fn rational_to_bigfloat(q: &BigRational, prec: usize) -> BigFloat {
    let work = prec + 64;
    let num = bigint_to_bigfloat(q.numer(), work);
    let den = bigint_to_bigfloat(q.denom(), work);
    let mut out = num.div(&den, work, RM);
    out.set_precision(prec, RM).expect("precision");
    out
}

/// Best-effort conversion to f64 (used only for root seeds and display aid).
pub fn bigfloat_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *words.last().unwrap_or(&0);
    let mag = (top as f64 / 2f64.powi(64)) * 2f64.powi(exp);
    if sign == Sign::Neg {
        -mag
    } else {
        mag
    }
}

// ---------------------------------------------------------------------------
// Unified scalar
// ---------------------------------------------------------------------------

/// A coefficient: exact Gaussian rational or arbitrary-precision complex float.
#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(GaussianRational),
    Float(BigComplex),
}

/// Exact-backend scalar alias.
pub type ExactScalar = GaussianRational;
/// Float-backend scalar alias.
pub type FloatScalar = BigComplex;

impl Scalar {
    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Exact(_) => Backend::Exact,
            Scalar::Float(c) => Backend::Float(c.prec),
        }
    }

    pub fn zero(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussianRational::zero()),
            Backend::Float(p) => Scalar::Float(BigComplex::zero(p)),
        }
    }

    pub fn one(backend: Backend) -> Self {
        Scalar::from_exact(&GaussianRational::one(), backend)
    }

    pub fn i(backend: Backend) -> Self {
        Scalar::from_exact(&GaussianRational::i(), backend)
    }

    pub fn from_int(n: i64, backend: Backend) -> Self {
        Scalar::from_exact(&GaussianRational::from_int(n), backend)
    }

    /// Embed an exact Gaussian rational into the requested backend.
    pub fn from_exact(q: &GaussianRational, backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(q.clone()),
            Backend::Float(p) => Scalar::Float(BigComplex::from_rational(q, p)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Float(c) => c.is_zero(),
        }
    }

    /// Zero test that, on the float backend, treats round-off residue at the
    /// far bottom of the working precision as zero.
    pub fn is_effectively_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Float(c) => {
                if c.is_zero() {
                    return true;
                }
                let cut = -((c.prec as i64) / 2);
                let re_small =
                    c.re.is_zero() || (c.re.exponent().unwrap_or(0) as i64) < cut;
                let im_small =
                    c.im.is_zero() || (c.im.exponent().unwrap_or(0) as i64) < cut;
                re_small && im_small
            }
        }
    }

    fn pair<'a>(
        &'a self,
        o: &'a Scalar,
    ) -> Result<(&'a GaussianRational, &'a GaussianRational), AlgebraError> {
        match (self, o) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok((a, b)),
            _ => Err(AlgebraError::BackendMismatch(
                self.backend().to_string(),
                o.backend().to_string(),
            )),
        }
    }

    pub fn try_add(&self, o: &Scalar) -> Result<Scalar, AlgebraError> {
        match (self, o) {
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a.add(b))),
            _ => {
                let (a, b) = self.pair(o)?;
                Ok(Scalar::Exact(a.add(b)))
            }
        }
    }

    pub fn try_sub(&self, o: &Scalar) -> Result<Scalar, AlgebraError> {
        match (self, o) {
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a.sub(b))),
            _ => {
                let (a, b) = self.pair(o)?;
                Ok(Scalar::Exact(a.sub(b)))
            }
        }
    }

    pub fn try_mul(&self, o: &Scalar) -> Result<Scalar, AlgebraError> {
        match (self, o) {
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a.mul(b))),
            _ => {
                let (a, b) = self.pair(o)?;
                Ok(Scalar::Exact(a.mul(b)))
            }
        }
    }

    pub fn try_div(&self, o: &Scalar) -> Result<Scalar, AlgebraError> {
        match (self, o) {
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a.div(b)?)),
            _ => {
                let (a, b) = self.pair(o)?;
                Ok(Scalar::Exact(a.div(b)?))
            }
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.neg()),
            Scalar::Float(c) => Scalar::Float(c.neg()),
        }
    }

    pub fn conj(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.conj()),
            Scalar::Float(c) => Scalar::Float(c.conj()),
        }
    }

    pub fn inv(&self) -> Result<Scalar, AlgebraError> {
        match self {
            Scalar::Exact(q) => Ok(Scalar::Exact(q.inv()?)),
            Scalar::Float(c) => Ok(Scalar::Float(c.inv()?)),
        }
    }

    pub fn sqrt(&self) -> Result<Scalar, AlgebraError> {
        self.kth_root(2)
    }

    /// Principal k-th root; `NeedsRadical` on the exact backend when the root
    /// leaves Q(i).
    pub fn kth_root(&self, k: u32) -> Result<Scalar, AlgebraError> {
        match self {
            Scalar::Exact(q) => Ok(Scalar::Exact(q.kth_root(k)?)),
            Scalar::Float(c) => Ok(Scalar::Float(c.kth_root(k)?)),
        }
    }

    /// Real part as a scalar of the same backend.
    pub fn re_part(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => {
                Scalar::Exact(GaussianRational::new(q.re.clone(), BigRational::zero()))
            }
            Scalar::Float(c) => Scalar::Float(BigComplex {
                re: c.re.clone(),
                im: BigFloat::new(c.prec),
                prec: c.prec,
            }),
        }
    }

    /// Imaginary part (as a real scalar) of the same backend.
    pub fn im_part(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => {
                Scalar::Exact(GaussianRational::new(q.im.clone(), BigRational::zero()))
            }
            Scalar::Float(c) => Scalar::Float(BigComplex {
                re: c.im.clone(),
                im: BigFloat::new(c.prec),
                prec: c.prec,
            }),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_real(),
            Scalar::Float(c) => c.im.is_zero(),
        }
    }

    /// True if the scalar is real-valued and strictly positive.
    pub fn is_positive_real(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_real() && q.re.is_positive(),
            Scalar::Float(c) => c.im.is_zero() && c.re.is_positive(),
        }
    }

    pub fn abs2(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => {
                Scalar::Exact(GaussianRational::new(q.abs2(), BigRational::zero()))
            }
            Scalar::Float(c) => Scalar::Float(BigComplex {
                re: c.abs2(),
                im: BigFloat::new(c.prec),
                prec: c.prec,
            }),
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        match self {
            Scalar::Exact(q) => q.to_f64(),
            Scalar::Float(c) => c.to_f64(),
        }
    }

    /// Exact Gaussian-rational view, if this is an exact scalar.
    pub fn as_exact(&self) -> Option<&GaussianRational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Float(_) => None,
        }
    }

    /// |self - other| <= 2^exp (per component), across matching backends.
    pub fn approx_eq_pow2(&self, o: &Scalar, exp: i64) -> bool {
        match (self, o) {
            (Scalar::Exact(a), Scalar::Exact(b)) => {
                let d = a.sub(b);
                let bound = pow2_rational(exp);
                d.re.abs() <= bound && d.im.abs() <= bound
            }
            (Scalar::Float(a), Scalar::Float(b)) => {
                let d = a.sub(b);
                let small = |x: &BigFloat| {
                    x.is_zero() || (x.exponent().unwrap_or(astro_float::EXPONENT_MAX) as i64) <= exp
                };
                small(&d.re) && small(&d.im)
            }
            _ => false,
        }
    }
}

fn pow2_rational(exp: i64) -> BigRational {
    let two = BigInt::from(2);
    if exp >= 0 {
        BigRational::from_integer(num_traits::pow(two, exp as usize))
    } else {
        BigRational::new(BigInt::one(), num_traits::pow(two, (-exp) as usize))
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => {
                a.re.cmp(&b.re) == Some(0) && a.im.cmp(&b.im) == Some(0)
            }
            _ => false,
        }
    }
}

// Canonical text rendering: `a/b` or `a/b+c/d*I` (minus signs folded in).
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => {
                let rat = |x: &BigRational| {
                    if x.denom().is_one() {
                        format!("{}", x.numer())
                    } else {
                        format!("{}/{}", x.numer(), x.denom())
                    }
                };
                if q.im.is_zero() {
                    write!(f, "{}", rat(&q.re))
                } else if q.re.is_zero() {
                    write!(f, "{}*I", rat(&q.im))
                } else if q.im.is_negative() {
                    write!(f, "{}-{}*I", rat(&q.re), rat(&(-q.im.clone())))
                } else {
                    write!(f, "{}+{}*I", rat(&q.re), rat(&q.im))
                }
            }
            Scalar::Float(c) => {
                let mut cc = CONSTS.lock().expect("constants lock");
                let mut s = |x: &BigFloat| {
                    x.format(astro_float::Radix::Dec, RM, &mut cc)
                        .unwrap_or_else(|_| "NaN".into())
                };
                if c.im.is_zero() {
                    write!(f, "{}", s(&c.re))
                } else {
                    let re = s(&c.re);
                    let im = s(&c.im);
                    if im.starts_with('-') {
                        write!(f, "{}-{}*I", re, &im[1..])
                    } else {
                        write!(f, "{}+{}*I", re, im)
                    }
                }
            }
        }
    }
}

/// Ordering helper for float pivot selection: compares |a|^2 with |b|^2.
pub fn abs2_cmp(a: &Scalar, b: &Scalar) -> Ordering {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => x.abs2().cmp(&y.abs2()),
        (Scalar::Float(x), Scalar::Float(y)) => match x.abs2().cmp(&y.abs2()) {
            Some(c) => c.cmp(&0),
            None => Ordering::Equal,
        },
        _ => Ordering::Equal,
    }
}
