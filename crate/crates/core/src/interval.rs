//! Outward-rounded interval arithmetic on `f64`.
//!
//! Rounding is done without touching the FPU rounding mode: every operation
//! computes the round-to-nearest result together with its exact error term
//! (TwoSum, FMA residuals) and steps one ulp outward only when the error has
//! the wrong sign. Exact results therefore stay exact.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Magnitudes below this are treated as possibly inexact (FMA residuals are
/// not guaranteed to be representable in the subnormal range).
const TINY: f64 = 1.0e-290;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
pub(crate) fn next_up(x: f64) -> f64 {
    x.next_up()
}

#[inline]
pub(crate) fn next_down(x: f64) -> f64 {
    x.next_down()
}

#[inline]
fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return if s == f64::INFINITY && a.is_finite() && b.is_finite() { f64::MAX } else { s };
    }
    if e < 0.0 {
        next_down(s)
    } else {
        s
    }
}

#[inline]
fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return if s == f64::NEG_INFINITY && a.is_finite() && b.is_finite() { f64::MIN } else { s };
    }
    if e > 0.0 {
        next_up(s)
    } else {
        s
    }
}

#[inline]
fn mul_dir(a: f64, b: f64, up: bool) -> f64 {
    let p = a * b;
    if p == 0.0 {
        // a or b is zero, or the product underflowed.
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        let neg = (a < 0.0) != (b < 0.0);
        return match (up, neg) {
            (true, false) => f64::from_bits(1),
            (false, true) => -f64::from_bits(1),
            _ => 0.0,
        };
    }
    if !p.is_finite() {
        if a.is_finite() && b.is_finite() {
            return if p > 0.0 {
                if up {
                    f64::INFINITY
                } else {
                    f64::MAX
                }
            } else if up {
                f64::MIN
            } else {
                f64::NEG_INFINITY
            };
        }
        return p;
    }
    if p.abs() < TINY {
        return if up { next_up(p) } else { next_down(p) };
    }
    let e = a.mul_add(b, -p);
    if up {
        if e > 0.0 {
            next_up(p)
        } else {
            p
        }
    } else if e < 0.0 {
        next_down(p)
    } else {
        p
    }
}

#[inline]
fn div_dir(a: f64, b: f64, up: bool) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        if a.is_finite() && b.is_finite() && b != 0.0 {
            return if q > 0.0 {
                if up {
                    f64::INFINITY
                } else {
                    f64::MAX
                }
            } else if up {
                f64::MIN
            } else {
                f64::NEG_INFINITY
            };
        }
        return q;
    }
    if q == 0.0 && a != 0.0 || q.abs() < TINY && q != 0.0 {
        return if up { next_up(q) } else { next_down(q) };
    }
    if q == 0.0 {
        return 0.0;
    }
    // r = a - q*b exactly; the sign of the true quotient error is sign(r/b).
    let r = (-q).mul_add(b, a);
    let s = if b > 0.0 { r } else { -r };
    if up {
        if s > 0.0 {
            next_up(q)
        } else {
            q
        }
    } else if s < 0.0 {
        next_down(q)
    } else {
        q
    }
}

#[inline]
fn sqrt_dir(x: f64, up: bool) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    if x < TINY {
        return if up { next_up(s) } else { next_down(s).max(0.0) };
    }
    let r = (-s).mul_add(s, x);
    if up {
        if r > 0.0 {
            next_up(s)
        } else {
            s
        }
    } else if r < 0.0 {
        next_down(s)
    } else {
        s
    }
}

/// Upper bound on `a + b`.
#[inline]
pub fn add_ru(a: f64, b: f64) -> f64 {
    add_up(a, b)
}

/// Upper bound on `a * b`.
#[inline]
pub fn mul_ru(a: f64, b: f64) -> f64 {
    mul_dir(a, b, true)
}

/// Upper bound on `a / b`.
#[inline]
pub fn div_ru(a: f64, b: f64) -> f64 {
    div_dir(a, b, true)
}

/// Lower bound on `a / b`.
#[inline]
pub fn div_rd(a: f64, b: f64) -> f64 {
    div_dir(a, b, false)
}

/// Lower bound on `a * b`.
#[inline]
pub fn mul_rd(a: f64, b: f64) -> f64 {
    mul_dir(a, b, false)
}

/// Upper bound on `sqrt(x)` for `x >= 0`.
#[inline]
pub fn sqrt_ru(x: f64) -> f64 {
    sqrt_dir(x, true)
}

/// Lower bound on `sqrt(x)` for `x >= 0`.
#[inline]
pub fn sqrt_rd(x: f64) -> f64 {
    sqrt_dir(x, false)
}

/// Lower bound on `a + b`.
#[inline]
pub fn add_rd(a: f64, b: f64) -> f64 {
    add_down(a, b)
}

/// Upper bound on `|re + i im|`.
#[inline]
pub fn cabs_ru(re: f64, im: f64) -> f64 {
    if im == 0.0 {
        return re.abs();
    }
    if re == 0.0 {
        return im.abs();
    }
    sqrt_dir(add_up(mul_dir(re, re, true), mul_dir(im, im, true)), true)
}

/// Lower bound on `|re + i im|`.
#[inline]
pub fn cabs_rd(re: f64, im: f64) -> f64 {
    if im == 0.0 {
        return re.abs();
    }
    if re == 0.0 {
        return im.abs();
    }
    sqrt_dir(add_down(mul_dir(re, re, false), mul_dir(im, im, false)), false)
}

/// Lower bound on `a - b`.
#[inline]
pub fn sub_rd(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

/// Closed interval `[lo, hi]` of reals.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.lo, self.hi).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (lo, hi) = <(f64, f64)>::deserialize(d)?;
        Interval::try_new(lo, hi).ok_or_else(|| serde::de::Error::custom(format!("not an interval: [{lo}, {hi}]")))
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    /// The distinguished empty interval. Arithmetic never produces it.
    pub const EMPTY: Interval = Interval { lo: f64::NAN, hi: f64::NAN };

    /// Panics if `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn try_new(lo: f64, hi: f64) -> Option<Self> {
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// `[c - r, c + r]` rounded outward.
    pub fn midrad(c: f64, r: f64) -> Self {
        debug_assert!(r >= 0.0);
        Interval { lo: add_down(c, -r), hi: add_up(c, r) }
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        Interval { lo: -r, hi: r }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_nan()
    }

    /// Float midpoint (not guaranteed to be the exact midpoint).
    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on the radius around [`Interval::mid`].
    pub fn rad(&self) -> f64 {
        let m = self.mid();
        add_up(self.hi, -m).max(add_up(m, -self.lo))
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    /// `max |x|` over the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// `min |x|` over the interval.
    pub fn mig(&self) -> f64 {
        if self.lo <= 0.0 && self.hi >= 0.0 {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn interior_of(&self, other: &Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::try_new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Interval widened by `[-r, r]`, rounded outward.
    pub fn inflate(&self, r: f64) -> Interval {
        Interval { lo: add_down(self.lo, -r), hi: add_up(self.hi, r) }
    }

    pub fn abs(&self) -> Interval {
        Interval { lo: self.mig(), hi: self.mag() }
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        Interval { lo: mul_dir(a.lo, a.lo, false), hi: mul_dir(a.hi, a.hi, true) }
    }

    pub fn powi(&self, n: u32) -> Interval {
        let mut acc = Interval::ONE;
        for _ in 0..n {
            acc = acc * *self;
        }
        if n.is_multiple_of(2) && n > 0 {
            // Even powers are non-negative.
            acc.lo = acc.lo.max(0.0);
        }
        acc
    }

    pub fn try_div(self, rhs: Interval) -> Result<Interval, Error> {
        if rhs.contains_zero() {
            return Err(Error::DivisionByZeroInterval);
        }
        let cands_lo = [div_dir(self.lo, rhs.lo, false), div_dir(self.lo, rhs.hi, false), div_dir(self.hi, rhs.lo, false), div_dir(self.hi, rhs.hi, false)];
        let cands_hi = [div_dir(self.lo, rhs.lo, true), div_dir(self.lo, rhs.hi, true), div_dir(self.hi, rhs.lo, true), div_dir(self.hi, rhs.hi, true)];
        Ok(Interval { lo: cands_lo.iter().cloned().fold(f64::INFINITY, f64::min), hi: cands_hi.iter().cloned().fold(f64::NEG_INFINITY, f64::max) })
    }

    /// `1 / self`.
    pub fn recip(self) -> Result<Interval, Error> {
        Interval::ONE.try_div(self)
    }

    /// Square root. Lower bounds in `[-1e-13, 0)` are clamped to zero.
    pub fn sqrt(self) -> Result<Interval, Error> {
        let mut lo = self.lo;
        if lo < 0.0 {
            if lo >= -SQRT_CLAMP {
                lo = 0.0;
            } else {
                return Err(Error::DomainError("sqrt of negative interval"));
            }
        }
        if self.hi < 0.0 {
            return Err(Error::DomainError("sqrt of negative interval"));
        }
        Ok(Interval { lo: sqrt_dir(lo, false), hi: sqrt_dir(self.hi, true) })
    }

    /// Enclosure of `sin` over the interval.
    pub fn sin(self) -> Interval {
        // sin attains +1 at pi/2 + 2 pi n and -1 at -pi/2 + 2 pi n.
        let half_pi = pi() * Interval::point(0.5);
        periodic_enclosure(self, |x| x.sin(), half_pi, -half_pi)
    }

    /// Enclosure of `cos` over the interval.
    pub fn cos(self) -> Interval {
        periodic_enclosure(self, |x| x.cos(), Interval::ZERO, pi())
    }

    /// Enclosure of `acos`; the argument must lie in `[-1, 1]`.
    pub fn acos(self) -> Result<Interval, Error> {
        if self.lo < -1.0 || self.hi > 1.0 {
            return Err(Error::DomainError("acos argument outside [-1, 1]"));
        }
        let p = pi();
        let lo = if self.hi == 1.0 { 0.0 } else { widen_down(self.hi.acos(), LIBM_ULPS).max(0.0) };
        let hi = if self.lo == -1.0 { p.hi } else { widen_up(self.lo.acos(), LIBM_ULPS).min(p.hi) };
        Ok(Interval { lo, hi })
    }

    pub fn min_with(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.min(other.hi) }
    }

    pub fn max_with(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Parse a decimal string, rounding outward to the nearest enclosing floats.
    pub fn parse_decimal(s: &str) -> Result<Interval, Error> {
        crate::decimal::parse_outward(s)
    }

    /// Parse a `[lo, hi]` pair of decimal strings (each rounded outward).
    pub fn parse_pair(lo: &str, hi: &str) -> Result<Interval, Error> {
        let a = crate::decimal::parse_outward(lo)?;
        let b = crate::decimal::parse_outward(hi)?;
        Interval::try_new(a.lo, b.hi).ok_or(Error::Parse(format!("[{lo}, {hi}]")))
    }

    /// Exact decimal strings of both endpoints.
    pub fn to_decimal_pair(&self) -> (String, String) {
        (crate::decimal::exact_decimal(self.lo), crate::decimal::exact_decimal(self.hi))
    }
}

/// Tolerance below zero accepted by [`Interval::sqrt`].
pub const SQRT_CLAMP: f64 = 1.0e-13;

/// Ulp slack allowed for libm transcendental functions.
const LIBM_ULPS: u32 = 2;

fn widen_up(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = next_up(x);
    }
    x
}

fn widen_down(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = next_down(x);
    }
    x
}

/// Enclosure of a 2pi-periodic function with a unique max at `xmax + 2pi n`
/// and min at `xmin + 2pi n`, values in [-1, 1].
fn periodic_enclosure(x: Interval, f: impl Fn(f64) -> f64, xmax: Interval, xmin: Interval) -> Interval {
    let full = Interval { lo: -1.0, hi: 1.0 };
    if !x.lo.is_finite() || !x.hi.is_finite() {
        return full;
    }
    let two_pi = pi() * Interval::point(2.0);
    if x.width() >= two_pi.lo {
        return full;
    }
    let a = f(x.lo);
    let b = f(x.hi);
    let mut lo = widen_down(a.min(b), LIBM_ULPS).max(-1.0);
    let mut hi = widen_up(a.max(b), LIBM_ULPS).min(1.0);
    if hits_lattice(x, xmax, two_pi) {
        hi = 1.0;
    }
    if hits_lattice(x, xmin, two_pi) {
        lo = -1.0;
    }
    Interval { lo, hi }
}

/// Conservatively: does `x` possibly contain `c + 2 pi n` for some integer n?
fn hits_lattice(x: Interval, c: Interval, two_pi: Interval) -> bool {
    let lo_n = ((x - c).lo / two_pi.hi).floor() - 1.0;
    let hi_n = ((x - c).hi / two_pi.lo).ceil() + 1.0;
    let mut n = lo_n;
    while n <= hi_n {
        let p = c + two_pi * Interval::point(n);
        if p.hi >= x.lo && p.lo <= x.hi {
            return true;
        }
        n += 1.0;
    }
    false
}

/// Enclosure of pi.
pub fn pi() -> Interval {
    // f64 PI is below the true value by ~1.2e-16, so [PI, next_up(PI)] holds pi.
    Interval { lo: std::f64::consts::PI, hi: next_up(std::f64::consts::PI) }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: add_down(self.lo, rhs.lo), hi: add_up(self.hi, rhs.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, rhs: Interval) -> Interval {
        Interval { lo: add_down(self.lo, -rhs.hi), hi: add_up(self.hi, -rhs.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    #[inline]
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        if a >= 0.0 && c >= 0.0 {
            return Interval { lo: mul_dir(a, c, false), hi: mul_dir(b, d, true) };
        }
        if self.is_point() && rhs.is_point() {
            return Interval { lo: mul_dir(a, c, false), hi: mul_dir(a, c, true) };
        }
        let lo = mul_dir(a, c, false).min(mul_dir(a, d, false)).min(mul_dir(b, c, false)).min(mul_dir(b, d, false));
        let hi = mul_dir(a, c, true).max(mul_dir(a, d, true)).max(mul_dir(b, c, true)).max(mul_dir(b, d, true));
        Interval { lo, hi }
    }
}

impl std::ops::Div for Interval {
    type Output = Interval;
    /// Panics when the divisor contains zero; use [`Interval::try_div`] to handle that case.
    fn div(self, rhs: Interval) -> Interval {
        self.try_div(rhs).expect("interval division by an interval containing zero")
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Rectangular complex interval `re + i im`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectComplex {
    pub re: Interval,
    pub im: Interval,
}

impl RectComplex {
    pub const ZERO: RectComplex = RectComplex { re: Interval::ZERO, im: Interval::ZERO };
    pub const ONE: RectComplex = RectComplex { re: Interval::ONE, im: Interval::ZERO };

    pub fn new(re: Interval, im: Interval) -> Self {
        RectComplex { re, im }
    }

    pub const fn point(re: f64, im: f64) -> Self {
        RectComplex { re: Interval::point(re), im: Interval::point(im) }
    }

    pub fn real(re: Interval) -> Self {
        RectComplex { re, im: Interval::ZERO }
    }

    pub fn conj(&self) -> Self {
        RectComplex { re: self.re, im: -self.im }
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> Self {
        RectComplex { re: -self.im, im: self.re }
    }

    pub fn scale(&self, s: Interval) -> Self {
        RectComplex { re: self.re * s, im: self.im * s }
    }

    pub fn contains(&self, re: f64, im: f64) -> bool {
        self.re.contains(re) && self.im.contains(im)
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0, 0.0)
    }

    pub fn subset_of(&self, other: &RectComplex) -> bool {
        self.re.subset_of(&other.re) && self.im.subset_of(&other.im)
    }

    pub fn hull(&self, other: &RectComplex) -> RectComplex {
        RectComplex { re: self.re.hull(&other.re), im: self.im.hull(&other.im) }
    }

    pub fn inflate(&self, r: f64) -> RectComplex {
        RectComplex { re: self.re.inflate(r), im: self.im.inflate(r) }
    }

    /// Enclosure of `|z|^2`.
    pub fn norm_sqr(&self) -> Interval {
        self.re.sqr() + self.im.sqr()
    }

    /// Upper bound for `sup |w|` over members `w`.
    pub fn abs_upper(&self) -> f64 {
        let r = self.re.mag();
        let i = self.im.mag();
        if i == 0.0 {
            return r;
        }
        if r == 0.0 {
            return i;
        }
        let sq = Interval::point(r).sqr() + Interval::point(i).sqr();
        sq.sqrt().map(|s| s.hi()).unwrap_or(f64::INFINITY)
    }

    /// Lower bound for `inf |w|` over members `w`.
    pub fn abs_lower(&self) -> f64 {
        let r = self.re.mig();
        let i = self.im.mig();
        let sq = Interval::point(r).sqr() + Interval::point(i).sqr();
        sq.sqrt().map(|s| s.lo()).unwrap_or(0.0)
    }

    pub fn try_div(self, rhs: RectComplex) -> Result<RectComplex, Error> {
        let den = rhs.norm_sqr();
        if den.lo() <= 0.0 {
            return Err(Error::DivisionByZeroInterval);
        }
        let num = self * rhs.conj();
        Ok(RectComplex { re: num.re.try_div(den)?, im: num.im.try_div(den)? })
    }

    pub fn mid(&self) -> (f64, f64) {
        (self.re.mid(), self.im.mid())
    }
}

impl Add for RectComplex {
    type Output = RectComplex;
    #[inline]
    fn add(self, rhs: RectComplex) -> RectComplex {
        RectComplex { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for RectComplex {
    type Output = RectComplex;
    #[inline]
    fn sub(self, rhs: RectComplex) -> RectComplex {
        RectComplex { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Neg for RectComplex {
    type Output = RectComplex;
    fn neg(self) -> RectComplex {
        RectComplex { re: -self.re, im: -self.im }
    }
}

impl Mul for RectComplex {
    type Output = RectComplex;
    #[inline]
    fn mul(self, rhs: RectComplex) -> RectComplex {
        RectComplex { re: self.re * rhs.re - self.im * rhs.im, im: self.re * rhs.im + self.im * rhs.re }
    }
}

impl std::ops::Div for RectComplex {
    type Output = RectComplex;
    /// Panics when the divisor may vanish; use [`RectComplex::try_div`] otherwise.
    fn div(self, rhs: RectComplex) -> RectComplex {
        self.try_div(rhs).expect("complex interval division by an interval containing zero")
    }
}

impl From<Interval> for RectComplex {
    fn from(x: Interval) -> Self {
        RectComplex::real(x)
    }
}

impl fmt::Debug for RectComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} + i{:?}", self.re, self.im)
    }
}

/// Upper bound for a finite sum of non-negative floats, whatever the summation
/// error. `n` is the number of rounding steps that produced `s`.
pub fn sum_bound(s: f64, n: usize) -> f64 {
    let g = (n as f64 + 4.0) * f64::EPSILON;
    add_up(mul_dir(s, 1.0 + g, true), (n as f64 + 1.0) * 1.0e-300)
}

/// `gamma_n = n u / (1 - n u)` rounded up, with `u = 2^-53`.
pub fn gamma(n: usize) -> f64 {
    let nu = mul_dir(n as f64, f64::EPSILON * 0.5, true);
    div_dir(nu, add_down(1.0, -nu), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_sum_is_exact() {
        let r = Interval::new(1.0, 2.0) + Interval::new(3.0, 4.0);
        assert_eq!((r.lo(), r.hi()), (4.0, 6.0));
    }

    #[test]
    fn sign_cases_of_product() {
        let r = Interval::new(1.0, 2.0) * Interval::new(-1.0, 1.0);
        assert_eq!((r.lo(), r.hi()), (-2.0, 2.0));
        let r = Interval::new(-3.0, -1.0) * Interval::new(-2.0, 5.0);
        assert_eq!((r.lo(), r.hi()), (-15.0, 6.0));
    }

    #[test]
    fn division_by_zero_interval() {
        let r = Interval::ONE.try_div(Interval::new(-1.0, 1.0));
        assert!(matches!(r, Err(Error::DivisionByZeroInterval)));
    }

    #[test]
    fn one_third_is_enclosed() {
        let r = Interval::ONE.try_div(Interval::point(3.0)).unwrap();
        assert!(r.lo() < r.hi());
        assert_eq!(next_up(r.lo()), r.hi());
        assert!(r.lo() * 3.0 <= 1.0 && r.hi() * 3.0 >= 1.0);
    }

    #[test]
    fn tenth_is_two_floats_wide() {
        let r = Interval::point(1.0) / Interval::point(10.0);
        assert!(r.contains(0.1));
        assert_eq!(next_up(r.lo()), r.hi());
    }

    #[test]
    fn abs_upper_examples() {
        assert_eq!(RectComplex::ZERO.abs_upper(), 0.0);
        let z = RectComplex::point(3.0, 4.0);
        let a = z.abs_upper();
        assert!(a >= 5.0 && a <= next_up(5.0));
    }

    #[test]
    fn elementary_functions() {
        let s = Interval::ZERO.sin();
        assert!(s.contains(0.0) && s.width() <= 1e-15);
        assert!(Interval::ONE.acos().unwrap().contains(0.0));
        let h = (pi() * Interval::point(0.5)).sin();
        assert!(h.contains(1.0));
        assert!(Interval::new(-2.0, 0.5).acos().is_err());
        let c = Interval::new(-0.1, 0.1).cos();
        assert_eq!(c.hi(), 1.0);
        let s = Interval::new(1.0, 7.0).sin();
        assert_eq!((s.lo(), s.hi()), (-1.0, 1.0));
    }

    #[test]
    fn sqrt_clamps_tiny_negative_lower_bound() {
        let r = Interval::new(-1e-14, 4.0).sqrt().unwrap();
        assert_eq!(r.lo(), 0.0);
        assert_eq!(r.hi(), 2.0);
        assert!(Interval::new(-1e-3, 4.0).sqrt().is_err());
    }

    #[test]
    fn complex_division_contains_quotient() {
        let a = RectComplex::point(1.0, 2.0);
        let b = RectComplex::point(3.0, -1.0);
        let q = a / b;
        // (1+2i)/(3-i) = (1+7i)/10
        assert!(q.re.contains(0.1) && q.im.contains(0.7));
        assert!(a.try_div(RectComplex::ZERO).is_err());
    }

    #[test]
    fn pi_encloses_pi() {
        let p = pi();
        assert!(p.lo() <= std::f64::consts::PI && p.hi() > p.lo());
    }

    #[test]
    fn gamma_is_small_and_positive() {
        let g = gamma(100);
        assert!(g > 100.0 * 1.1e-16 && g < 100.0 * 1.2e-16);
    }
}
