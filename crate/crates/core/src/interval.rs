//! Closed intervals with outward-rounded arithmetic.
//!
//! Endpoints are MPFR floats. Every operation rounds the lower endpoint
//! toward −∞ and the upper endpoint toward +∞, so the result always encloses
//! the exact image of the operands. The upper endpoint may be +∞, which is how
//! divergent or unbounded quantities are represented.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use rug::float::{Round, Special};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Default significand width for interval endpoints.
pub const DEFAULT_PRECISION: u32 = 64;

static WORKING_PRECISION: AtomicU32 = AtomicU32::new(DEFAULT_PRECISION);

/// Significand bits used by operations that do not take an explicit precision.
pub fn working_precision() -> u32 {
    WORKING_PRECISION.load(AtomicOrdering::Relaxed)
}

/// Sets the process-wide working precision. Values are clamped to
/// `[rug::float::prec_min(), rug::float::prec_max()]`, and anything below
/// 24 bits is raised to 24.
pub fn set_working_precision(bits: u32) {
    let bits = bits.clamp(24, rug::float::prec_max().min(1 << 20));
    WORKING_PRECISION.store(bits, AtomicOrdering::Relaxed);
}

/// A closed interval `[lo, hi]` of extended reals.
#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

fn down<T>(prec: u32, val: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Down).0
}

fn up<T>(prec: u32, val: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, val, Round::Up).0
}

fn nan_to(f: Float, fallback: Special) -> Float {
    if f.is_nan() {
        Float::with_val(f.prec(), fallback)
    } else {
        f
    }
}

impl Interval {
    /// Builds `[lo, hi]`. Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(!lo.is_nan() && !hi.is_nan(), "NaN interval endpoint");
        assert!(lo <= hi, "interval endpoints out of order: {lo} > {hi}");
        Interval { lo, hi }
    }

    pub fn point(x: Float) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    /// The degenerate interval at an `f64`, exact since `prec >= 53`.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        Self::point(Float::with_val(prec.max(53), x))
    }

    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        Interval {
            lo: down(prec, n),
            hi: up(prec, n),
        }
    }

    /// Smallest representable interval containing the rational `r`.
    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        Interval {
            lo: down(prec, r),
            hi: up(prec, r),
        }
    }

    /// Interval with rational endpoints in either order.
    pub fn from_rational_bracket(a: &Rational, b: &Rational, prec: u32) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Interval {
            lo: down(prec, a),
            hi: up(prec, b),
        }
    }

    /// `[lo, +∞]`.
    pub fn unbounded_above(lo: Float) -> Self {
        let prec = lo.prec();
        Interval {
            lo,
            hi: Float::with_val(prec, Special::Infinity),
        }
    }

    pub fn entire(prec: u32) -> Self {
        Interval {
            lo: Float::with_val(prec, Special::NegInfinity),
            hi: Float::with_val(prec, Special::Infinity),
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    /// Lower endpoint rounded down to `f64`.
    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    /// Upper endpoint rounded up to `f64`.
    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn mid(&self) -> Float {
        let prec = self.prec();
        if !self.hi.is_finite() || !self.lo.is_finite() {
            return if self.hi.is_finite() {
                self.hi.clone()
            } else {
                self.lo.clone()
            };
        }
        let sum = Float::with_val(prec + 1, &self.lo + &self.hi);
        Float::with_val(prec, sum / 2u32)
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    /// Upper bound on `hi − lo`.
    pub fn width(&self) -> Float {
        up(self.prec(), &self.hi - &self.lo)
    }

    /// Upper bound on `max(|lo − c|, |hi − c|)` where `c` is the midpoint.
    pub fn radius(&self) -> Float {
        let c = self.mid();
        let a = up(self.prec(), &c - &self.lo);
        let b = up(self.prec(), &self.hi - &c);
        a.max(&b)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: &Float) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && self.hi >= x
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// True when every point of `self` is strictly below every point of `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(&other.lo),
            hi: self.hi.clone().max(&other.hi),
        }
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.clone().max(&other.lo);
        let hi = self.hi.clone().min(&other.hi);
        (lo <= hi).then(|| Interval { lo, hi })
    }

    /// Re-rounds both endpoints outward to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Interval {
        Interval {
            lo: down(prec, &self.lo),
            hi: up(prec, &self.hi),
        }
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            -self
        } else {
            let m = Float::with_val(self.prec(), -&self.lo).max(&self.hi);
            Interval {
                lo: Float::with_val(self.prec(), 0),
                hi: m,
            }
        }
    }

    /// `1/x`; the entire line if the interval straddles zero.
    pub fn recip(&self) -> Interval {
        let prec = self.prec();
        if self.contains_zero() {
            return Interval::entire(prec);
        }
        Interval {
            lo: down(prec, self.hi.recip_ref()),
            hi: up(prec, self.lo.recip_ref()),
        }
    }

    /// Natural logarithm of a nonnegative interval (`ln 0 = −∞`).
    pub fn ln(&self) -> Interval {
        assert!(self.lo >= 0, "ln of interval with negative part");
        let prec = self.prec();
        Interval {
            lo: down(prec, self.lo.ln_ref()),
            hi: up(prec, self.hi.ln_ref()),
        }
    }

    pub fn sqrt(&self) -> Interval {
        assert!(self.lo >= 0, "sqrt of interval with negative part");
        let prec = self.prec();
        Interval {
            lo: down(prec, self.lo.sqrt_ref()),
            hi: up(prec, self.hi.sqrt_ref()),
        }
    }

    /// `x^a` for a nonnegative interval and a real exponent.
    pub fn pow_f64(&self, a: f64) -> Interval {
        assert!(self.lo >= 0, "power of interval with negative part");
        let prec = self.prec();
        let e = Float::with_val(prec.max(53), a);
        let lo_p = |r| Float::with_val_round(prec, (&self.lo).pow(&e), r).0;
        let hi_p = |r| Float::with_val_round(prec, (&self.hi).pow(&e), r).0;
        if a >= 0.0 {
            Interval {
                lo: lo_p(Round::Down),
                hi: hi_p(Round::Up),
            }
        } else {
            Interval {
                lo: hi_p(Round::Down),
                hi: lo_p(Round::Up),
            }
        }
    }

    /// Clamps the lower endpoint at zero; for quantities known to be nonnegative.
    pub fn clamp_nonneg(self) -> Interval {
        if self.lo < 0 {
            let prec = self.prec();
            Interval {
                lo: Float::with_val(prec, 0),
                hi: self.hi.max(&Float::with_val(prec, 0)),
            }
        } else {
            self
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo.to_f64_round(Round::Down), self.hi.to_f64_round(Round::Up))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.16e}, {:.16e}]", self.lo_f64(), self.hi_f64())
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: Float::with_val(self.hi.prec(), -&self.hi),
            hi: Float::with_val(self.lo.prec(), -&self.lo),
        }
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, rhs: &Interval) -> Interval {
        let prec = self.prec().max(rhs.prec());
        Interval {
            lo: nan_to(down(prec, &self.lo + &rhs.lo), Special::NegInfinity),
            hi: nan_to(up(prec, &self.hi + &rhs.hi), Special::Infinity),
        }
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, rhs: &Interval) -> Interval {
        let prec = self.prec().max(rhs.prec());
        Interval {
            lo: nan_to(down(prec, &self.lo - &rhs.hi), Special::NegInfinity),
            hi: nan_to(up(prec, &self.hi - &rhs.lo), Special::Infinity),
        }
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, rhs: &Interval) -> Interval {
        let prec = self.prec().max(rhs.prec());
        // Nonnegative operands are the common case in this crate.
        if self.lo >= 0 && rhs.lo >= 0 {
            return Interval {
                lo: nan_to(down(prec, &self.lo * &rhs.lo), Special::Zero),
                hi: nan_to(up(prec, &self.hi * &rhs.hi), Special::Infinity),
            };
        }
        let pairs = [
            (&self.lo, &rhs.lo),
            (&self.lo, &rhs.hi),
            (&self.hi, &rhs.lo),
            (&self.hi, &rhs.hi),
        ];
        let mut lo = Float::with_val(prec, Special::Infinity);
        let mut hi = Float::with_val(prec, Special::NegInfinity);
        for (a, b) in pairs {
            let l = down(prec, a * b);
            let h = up(prec, a * b);
            if l.is_nan() || h.is_nan() {
                // 0 · ∞
                lo = lo.min(&Float::with_val(prec, 0));
                hi = hi.max(&Float::with_val(prec, 0));
                continue;
            }
            lo = lo.min(&l);
            hi = hi.max(&h);
        }
        Interval { lo, hi }
    }
}

impl Div for &Interval {
    type Output = Interval;
    fn div(self, rhs: &Interval) -> Interval {
        self * &rhs.recip()
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Interval> for Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval { (&self).$m(&rhs) }
        }
        impl $tr<&Interval> for Interval {
            type Output = Interval;
            fn $m(self, rhs: &Interval) -> Interval { (&self).$m(rhs) }
        }
        impl $tr<Interval> for &Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        -&self
    }
}
