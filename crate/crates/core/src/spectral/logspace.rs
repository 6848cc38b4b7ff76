//! Certified arithmetic on positive reals far beyond the range of `f64`.
//!
//! A [`Tower`] of height `h` with bounds `[lo, hi]` encloses the real interval
//! `[E^h(lo), E^h(hi)]`, where `E(x) = 2^x`. Every operation rounds outward,
//! so the true value always stays inside the enclosure. [`LogSpaceInteger`]
//! keeps integers exact for as long as they fit in a few thousand bits and
//! falls back to exact powers of two, then to towers.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{AnnulusError, Result};

/// Top-level bounds above `2^LIFT_EXPONENT` move one level up the tower.
const LIFT_EXPONENT: i32 = 1000;
/// A tower whose top bound is at most this drops one level.
const LOWER_BOUND: f64 = 1000.0;
/// Exact integers are kept while they have at most this many bits.
pub const EXACT_BITS: u64 = 4096;

fn next_down(x: f64) -> f64 {
    x.next_down()
}

fn next_up(x: f64) -> f64 {
    x.next_up()
}

pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err < 0.0 {
        next_down(s)
    } else {
        s
    }
}

pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err > 0.0 {
        next_up(s)
    } else {
        s
    }
}

pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if a.mul_add(b, -p) < 0.0 {
        next_down(p)
    } else {
        p
    }
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if a.mul_add(b, -p) > 0.0 {
        next_up(p)
    } else {
        p
    }
}

fn is_power_of_two(x: f64) -> bool {
    x > 0.0 && x.is_normal() && (x.to_bits() & ((1u64 << 52) - 1)) == 0
}

/// Library `exp2`/`log2`/`ln` are faithful to within an ulp; two steps of
/// outward rounding cover them.
fn widen_down(x: f64) -> f64 {
    next_down(next_down(x))
}

fn widen_up(x: f64) -> f64 {
    next_up(next_up(x))
}

fn exp2_down(x: f64) -> f64 {
    if x.fract() == 0.0 && x.abs() <= 1000.0 {
        x.exp2()
    } else {
        widen_down(x.exp2()).max(0.0)
    }
}

fn exp2_up(x: f64) -> f64 {
    if x.fract() == 0.0 && x.abs() <= 1000.0 {
        x.exp2()
    } else {
        widen_up(x.exp2())
    }
}

fn log2_down(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if is_power_of_two(x) {
        x.log2()
    } else {
        widen_down(x.log2())
    }
}

fn log2_up(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if is_power_of_two(x) {
        x.log2()
    } else {
        widen_up(x.log2())
    }
}

/// Outward enclosure `[lo, hi]` of `f(x)` for a library function `f`.
pub fn enclose(value: f64) -> (f64, f64) {
    (widen_down(value), widen_up(value))
}

/// Enclosure of `ln 2`.
pub fn ln2() -> (f64, f64) {
    enclose(std::f64::consts::LN_2)
}

/// Enclosure of `ln π`.
pub fn ln_pi() -> (f64, f64) {
    enclose(std::f64::consts::PI.ln())
}

/// Enclosure of a positive real `x` with `[lo, hi] ⊃ [E^h(lo), E^h(hi)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub height: u32,
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Display for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.height == 0 {
            write!(f, "[{:e}, {:e}]", self.lo, self.hi)
        } else {
            write!(f, "E^{}[{}, {}]", self.height, self.lo, self.hi)
        }
    }
}

impl Tower {
    pub fn interval(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Tower { height: 0, lo, hi }.normalized()
    }

    pub fn exact(x: f64) -> Self {
        Self::interval(x, x)
    }

    pub fn from_biguint(x: &BigUint) -> Self {
        let bits = x.bits();
        if bits <= 53 {
            return Self::exact(x.to_f64().expect("fits"));
        }
        if bits <= LIFT_EXPONENT as u64 {
            // to_f64 rounds to nearest; one ulp either way encloses.
            let f = x.to_f64().expect("fits");
            return Self::interval(next_down(f), next_up(f));
        }
        let shift = bits - 64;
        let top = (x >> shift).to_u64().expect("64 bits");
        let base = shift as f64;
        let lo = add_down(base, log2_down(top as f64));
        let hi = add_up(base, log2_up(top as f64 + 1.0));
        Tower {
            height: 1,
            lo,
            hi,
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        while self.hi > 2f64.powi(LIFT_EXPONENT) && self.lo > 0.0 {
            self = Tower {
                height: self.height + 1,
                lo: log2_down(self.lo),
                hi: log2_up(self.hi),
            };
        }
        while self.height >= 1 && self.hi <= LOWER_BOUND {
            self = Tower {
                height: self.height - 1,
                lo: exp2_down(self.lo),
                hi: exp2_up(self.hi),
            };
        }
        self
    }

    /// `2^x`.
    pub fn exp2(&self) -> Self {
        Tower {
            height: self.height + 1,
            lo: self.lo,
            hi: self.hi,
        }
        .normalized()
    }

    /// The degenerate enclosure of the lower endpoint.
    pub fn lower_endpoint(&self) -> Self {
        Tower { hi: self.lo, ..*self }
    }

    /// The degenerate enclosure of the upper endpoint.
    pub fn upper_endpoint(&self) -> Self {
        Tower { lo: self.hi, ..*self }
    }

    /// `log2 x`; the lower bound must be positive at height 0.
    pub fn log2(&self) -> Result<Self> {
        if self.height >= 1 {
            return Ok(Tower {
                height: self.height - 1,
                lo: self.lo,
                hi: self.hi,
            }
            .normalized());
        }
        if !(self.lo > 0.0) {
            return Err(AnnulusError::PrecisionExhausted {
                k: 0,
                detail: format!("log2 of an interval reaching {:e}", self.lo),
            });
        }
        Ok(Tower::interval(log2_down(self.lo), log2_up(self.hi)))
    }

    /// Lower bound on the value as an `f64` (`f64::MAX` when larger).
    pub fn lower_f64(&self) -> f64 {
        match self.height {
            0 => self.lo,
            1 if self.lo < 1023.0 => exp2_down(self.lo),
            _ => f64::MAX,
        }
    }

    /// Upper bound on the value as an `f64` (infinite when larger).
    pub fn upper_f64(&self) -> f64 {
        match self.height {
            0 => self.hi,
            1 if self.hi < 1023.0 => exp2_up(self.hi),
            _ => f64::INFINITY,
        }
    }

    /// `x + d` for `d ∈ [dlo, dhi]`, assuming `x + d > 0` at positive height.
    pub fn add_const(&self, dlo: f64, dhi: f64) -> Result<Self> {
        assert!(dlo <= dhi);
        if self.height == 0 {
            return Ok(Tower::interval(add_down(self.lo, dlo), add_up(self.hi, dhi)));
        }
        let d = dlo.abs().max(dhi.abs());
        if d == 0.0 {
            return Ok(*self);
        }
        // log2(x + d) = log2 x + log2(1 + d/x) with |d/x| ≤ d 2^{-L}.
        let log = self.log2()?;
        let l = log.lower_f64().min(1e300);
        let log_ratio = add_up(log2_up(d), -l);
        let x = if log_ratio < -1070.0 { f64::from_bits(1) } else { exp2_up(log_ratio) };
        if x > 0.5 {
            return Err(AnnulusError::PrecisionExhausted {
                k: 0,
                detail: format!("offset {d:e} is not small against {self}"),
            });
        }
        let off_lo = if dlo >= 0.0 { 0.0 } else { -mul_up(3.0, x) };
        let off_hi = if dhi <= 0.0 { 0.0 } else { mul_up(3.0, x) };
        Ok(log.add_const(off_lo, off_hi)?.exp2())
    }

    /// `c x` for `c ∈ [clo, chi]`, `0 < clo`.
    pub fn mul_const(&self, clo: f64, chi: f64) -> Result<Self> {
        assert!(0.0 < clo && clo <= chi);
        if self.height == 0 {
            let lo = if self.lo >= 0.0 { mul_down(self.lo, clo) } else { mul_down(self.lo, chi) };
            let hi = if self.hi >= 0.0 { mul_up(self.hi, chi) } else { mul_up(self.hi, clo) };
            return Ok(Tower::interval(lo, hi));
        }
        Ok(self.log2()?.add_const(log2_down(clo), log2_up(chi))?.exp2())
    }

    /// `self - other`, for `other` at most half of `self`.
    pub fn sub(&self, other: &Tower) -> Result<Self> {
        if other.height == 0 {
            return self.add_const(-other.hi, -other.lo);
        }
        if self.height == 0 {
            return Err(AnnulusError::PrecisionExhausted {
                k: 0,
                detail: format!("cannot certify {self} - {other} as a positive quantity"),
            });
        }
        // x - y = x (1 - y/x), with y/x ≤ 2^{-gap}.
        let gap = self.log2()?.sub(&other.log2()?)?.lower_f64();
        if !(gap >= 1.0) {
            return Err(AnnulusError::PrecisionExhausted {
                k: 0,
                detail: format!("{other} is not small against {self}"),
            });
        }
        let ratio = if gap > 1070.0 { f64::from_bits(1) } else { exp2_up(-gap) };
        Ok(self.log2()?.add_const(-mul_up(3.0, ratio), 0.0)?.exp2())
    }

    /// `self / other` for positive operands.
    pub fn div(&self, other: &Tower) -> Result<Self> {
        let a = self.log2()?;
        let b = other.log2()?;
        let diff = if b.height == 0 || a.height == 0 {
            if a.height == 0 && b.height == 0 {
                Tower::interval(add_down(a.lo, -b.hi), add_up(a.hi, -b.lo))
            } else {
                a.sub(&b)?
            }
        } else {
            a.sub(&b)?
        };
        Ok(diff.exp2())
    }

    /// Certified comparison; `None` when the enclosures overlap.
    pub fn compare(&self, other: &Tower) -> Option<Ordering> {
        let (mut a, mut b) = (*self, *other);
        loop {
            if a.height == 0 && b.height == 0 {
                return if a.hi < b.lo {
                    Some(Ordering::Less)
                } else if a.lo > b.hi {
                    Some(Ordering::Greater)
                } else if a.lo == a.hi && b.lo == b.hi && a.lo == b.lo {
                    Some(Ordering::Equal)
                } else {
                    None
                };
            }
            // Both sides are positive once one of them sits above height 0.
            if a.height == 0 && a.hi <= 0.0 {
                return Some(Ordering::Less);
            }
            if b.height == 0 && b.hi <= 0.0 {
                return Some(Ordering::Greater);
            }
            let clamp = |t: Tower| {
                if t.height == 0 && t.lo <= 0.0 {
                    Tower { lo: f64::MIN_POSITIVE, ..t }
                } else {
                    t
                }
            };
            a = clamp(a).log2().ok()?;
            b = clamp(b).log2().ok()?;
        }
    }

    pub fn certainly_less(&self, other: &Tower) -> bool {
        self.compare(other) == Some(Ordering::Less)
    }

    pub fn certainly_greater(&self, other: &Tower) -> bool {
        self.compare(other) == Some(Ordering::Greater)
    }
}

/// Nonnegative integer kept exact while it fits, otherwise as an exact power
/// of two, otherwise as a certified tower enclosure.
#[derive(Debug, Clone, PartialEq)]
pub enum LogSpaceInteger {
    Exact(BigUint),
    PowerOfTwo(Box<LogSpaceInteger>),
    Bounded(Tower),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "repr", rename_all = "snake_case")]
enum LogSpaceJson {
    Exact { value: String },
    PowerOfTwo { exponent: Box<LogSpaceJson> },
    Tower { height: u32, lo: f64, hi: f64 },
}

impl From<&LogSpaceInteger> for LogSpaceJson {
    fn from(x: &LogSpaceInteger) -> Self {
        match x {
            LogSpaceInteger::Exact(v) => LogSpaceJson::Exact { value: v.to_string() },
            LogSpaceInteger::PowerOfTwo(e) => LogSpaceJson::PowerOfTwo {
                exponent: Box::new(e.as_ref().into()),
            },
            LogSpaceInteger::Bounded(t) => LogSpaceJson::Tower {
                height: t.height,
                lo: t.lo,
                hi: t.hi,
            },
        }
    }
}

impl TryFrom<LogSpaceJson> for LogSpaceInteger {
    type Error = String;
    fn try_from(j: LogSpaceJson) -> std::result::Result<Self, String> {
        Ok(match j {
            LogSpaceJson::Exact { value } => LogSpaceInteger::Exact(
                value.parse().map_err(|e| format!("bad integer {value:?}: {e}"))?,
            ),
            LogSpaceJson::PowerOfTwo { exponent } => {
                LogSpaceInteger::PowerOfTwo(Box::new((*exponent).try_into()?))
            }
            LogSpaceJson::Tower { height, lo, hi } => {
                LogSpaceInteger::Bounded(Tower { height, lo, hi })
            }
        })
    }
}

impl Serialize for LogSpaceInteger {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LogSpaceJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogSpaceInteger {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        LogSpaceJson::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl LogSpaceInteger {
    pub fn from_u64(x: u64) -> Self {
        LogSpaceInteger::Exact(BigUint::from(x))
    }

    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            LogSpaceInteger::Exact(v) => Some(v),
            _ => None,
        }
    }

    /// Exact value when it fits in `EXACT_BITS`, expanding powers of two.
    pub fn to_exact(&self) -> Option<BigUint> {
        match self {
            LogSpaceInteger::Exact(v) => Some(v.clone()),
            LogSpaceInteger::PowerOfTwo(e) => {
                let e = e.to_exact()?.to_u64()?;
                (e < EXACT_BITS).then(|| BigUint::one() << e)
            }
            LogSpaceInteger::Bounded(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        match self {
            LogSpaceInteger::Exact(_) => true,
            LogSpaceInteger::PowerOfTwo(e) => e.is_exact(),
            LogSpaceInteger::Bounded(_) => false,
        }
    }

    pub fn to_tower(&self) -> Tower {
        match self {
            LogSpaceInteger::Exact(v) => Tower::from_biguint(v),
            LogSpaceInteger::PowerOfTwo(e) => e.to_tower().exp2(),
            LogSpaceInteger::Bounded(t) => *t,
        }
    }

    /// `2^self`.
    pub fn pow2(&self) -> Self {
        match self.to_exact().and_then(|e| e.to_u64()) {
            Some(e) if e < EXACT_BITS => LogSpaceInteger::Exact(BigUint::one() << e),
            _ => match self {
                LogSpaceInteger::Bounded(t) => LogSpaceInteger::Bounded(t.exp2()),
                _ => LogSpaceInteger::PowerOfTwo(Box::new(self.clone())),
            },
        }
    }

    /// `self + c`.
    pub fn add_small(&self, c: u64) -> Result<Self> {
        if let Some(v) = self.to_exact() {
            return Ok(Self::collapse(v + c));
        }
        Ok(LogSpaceInteger::Bounded(self.to_tower().add_const(c as f64, c as f64)?))
    }

    /// `c · self`.
    pub fn mul_small(&self, c: u64) -> Result<Self> {
        if c == 0 {
            return Ok(Self::from_u64(0));
        }
        if let Some(v) = self.to_exact() {
            return Ok(Self::collapse(v * c));
        }
        if c.is_power_of_two() {
            if let LogSpaceInteger::PowerOfTwo(e) = self {
                return Ok(LogSpaceInteger::PowerOfTwo(Box::new(
                    e.add_small(c.trailing_zeros() as u64)?,
                )));
            }
        }
        Ok(LogSpaceInteger::Bounded(self.to_tower().mul_const(c as f64, c as f64)?))
    }

    /// `base^self` for a small base.
    pub fn pow_of(base: u64, exponent: &LogSpaceInteger) -> Result<Self> {
        match base {
            0 => {
                return Ok(Self::from_u64(u64::from(exponent.to_exact().is_some_and(|e| e.is_zero()))))
            }
            1 => return Ok(Self::from_u64(1)),
            _ => {}
        }
        let log2_base = (base as f64).log2();
        if let Some(e) = exponent.to_exact().and_then(|e| e.to_u64()) {
            if (e as f64) * log2_base <= EXACT_BITS as f64 {
                return Ok(LogSpaceInteger::Exact(BigUint::from(base).pow(e as u32)));
            }
        }
        if base.is_power_of_two() {
            return Ok(exponent.mul_small(base.trailing_zeros() as u64)?.pow2());
        }
        let (lo, hi) = enclose(log2_base);
        Ok(LogSpaceInteger::Bounded(exponent.to_tower().mul_const(lo, hi)?.exp2()))
    }

    fn collapse(v: BigUint) -> Self {
        if v.bits() <= EXACT_BITS {
            LogSpaceInteger::Exact(v)
        } else {
            LogSpaceInteger::Bounded(Tower::from_biguint(&v))
        }
    }
}

/// Certifies `a ≥ b·m + c` for nonnegative integers; exact when both are.
pub fn certify_ge_affine(a: &LogSpaceInteger, b: &LogSpaceInteger, m: u64, c: u64) -> Result<bool> {
    if let (Some(x), Some(y)) = (a.to_exact(), b.to_exact()) {
        return Ok(x >= y * m + c);
    }
    let rhs = b.mul_small(m)?.add_small(c)?.to_tower();
    match a.to_tower().compare(&rhs) {
        Some(Ordering::Greater) | Some(Ordering::Equal) => Ok(true),
        Some(Ordering::Less) => Ok(false),
        None => Err(AnnulusError::PrecisionExhausted {
            k: 0,
            detail: format!("cannot separate {} from {}", a.to_tower(), rhs),
        }),
    }
}

/// `a - b` for integers with `b ≤ a/2` (or both exact).
pub fn difference(a: &LogSpaceInteger, b: &LogSpaceInteger) -> Result<LogSpaceInteger> {
    if let (Some(x), Some(y)) = (a.to_exact(), b.to_exact()) {
        if x < y {
            return Err(AnnulusError::InvalidInput("negative difference".into()));
        }
        return Ok(LogSpaceInteger::collapse(x - y));
    }
    Ok(LogSpaceInteger::Bounded(a.to_tower().sub(&b.to_tower())?))
}
