//! Small divisors `|β^k - λ|` for `β = e^{2πiξ}`, `λ = e^{2πir}` with `r`
//! rational. All reductions of `kξ - r` modulo 1 happen in binary fixed point
//! with `bits` fractional bits, starting from the full-precision `ξ` for every
//! `k`, so the divisor `2 sin(π d_k)` (with `d_k` the distance of `kξ - r` to
//! the nearest integer) keeps its relative accuracy until `d_k` approaches
//! the fixed-point resolution.

use std::f64::consts::PI;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AnnulusError, Result};

pub const DEFAULT_BITS: u32 = 256;
pub const MIN_BITS: u32 = 64;

/// A real number given exactly: `(a + b√m)/d` or a finite decimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ExactReal {
    Surd { a: i64, b: i64, m: u64, d: u64 },
    Decimal { digits: String },
}

impl ExactReal {
    /// `√2 - 1`.
    pub fn sqrt2_minus_1() -> Self {
        ExactReal::Surd {
            a: -1,
            b: 1,
            m: 2,
            d: 1,
        }
    }

    /// `floor(x 2^bits)` together with a bound (in units of `2^-bits`) on
    /// the distance to `x 2^bits`.
    pub fn fixed_point(&self, bits: u32) -> Result<(BigInt, u64)> {
        match self {
            ExactReal::Surd { a, b, m, d } => {
                if *d == 0 {
                    return Err(AnnulusError::InvalidInput("surd denominator is zero".into()));
                }
                let scale = BigUint::from(1u8) << bits;
                let root = (BigUint::from(*m) * &scale * &scale).sqrt();
                let num = BigInt::from(*a) * BigInt::from(scale) + BigInt::from(*b) * BigInt::from(root);
                let value = num.div_floor(&BigInt::from(*d));
                Ok((value, b.unsigned_abs() + 1))
            }
            ExactReal::Decimal { digits } => {
                let s = digits.trim();
                let (neg, s) = match s.strip_prefix('-') {
                    Some(rest) => (true, rest),
                    None => (false, s.strip_prefix('+').unwrap_or(s)),
                };
                let (int, frac) = s.split_once('.').unwrap_or((s, ""));
                if int.is_empty() && frac.is_empty()
                    || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
                {
                    return Err(AnnulusError::InvalidInput(format!("not a decimal number: {digits:?}")));
                }
                let mantissa: BigInt = format!("{int}{frac}").parse().unwrap_or_else(|_| BigInt::zero());
                let mantissa = if neg { -mantissa } else { mantissa };
                let den = BigInt::from(10u8).pow(frac.len() as u32);
                Ok(((mantissa << bits).div_floor(&den), 1))
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactReal::Surd { a, b, m, d } => (*a as f64 + *b as f64 * (*m as f64).sqrt()) / *d as f64,
            ExactReal::Decimal { digits } => digits.parse().unwrap_or(f64::NAN),
        }
    }
}

impl FromStr for ExactReal {
    type Err = AnnulusError;

    /// `surd:a,b,m,d` for `(a + b√m)/d`, `sqrt2-1`, or a decimal literal.
    fn from_str(s: &str) -> Result<Self> {
        if s == "sqrt2-1" {
            return Ok(Self::sqrt2_minus_1());
        }
        if let Some(rest) = s.strip_prefix("surd:") {
            let parts: Vec<&str> = rest.split(',').collect();
            let bad = || AnnulusError::InvalidInput(format!("expected surd:a,b,m,d, got {s:?}"));
            if parts.len() != 4 {
                return Err(bad());
            }
            return Ok(ExactReal::Surd {
                a: parts[0].trim().parse().map_err(|_| bad())?,
                b: parts[1].trim().parse().map_err(|_| bad())?,
                m: parts[2].trim().parse().map_err(|_| bad())?,
                d: parts[3].trim().parse().map_err(|_| bad())?,
            });
        }
        let x = ExactReal::Decimal { digits: s.to_string() };
        x.fixed_point(8)?;
        Ok(x)
    }
}

/// `p/q` with `q ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub p: i64,
    pub q: u64,
}

impl FromStr for Rational {
    type Err = AnnulusError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || AnnulusError::InvalidInput(format!("expected p/q, got {s:?}"));
        let (p, q) = s.split_once('/').unwrap_or((s, "1"));
        let r = Rational {
            p: p.trim().parse().map_err(|_| bad())?,
            q: q.trim().parse().map_err(|_| bad())?,
        };
        if r.q == 0 {
            return Err(bad());
        }
        Ok(r)
    }
}

/// Caller-supplied Diophantine data: `|ξ - p/q| ≥ γ/q^τ` for all `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiophantineCertificate {
    pub gamma: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub gamma: f64,
    pub tau: f64,
    /// `c = q0^τ / (4γ)`.
    pub c: f64,
    /// Every sampled `1/|β^k - λ|` stays below `c k^{τ-1}`.
    pub holds: bool,
    /// Indices where the bound fails (first 16).
    pub violations: Vec<u64>,
    /// `max_k |β^k - λ|^{-1} / (c k^{τ-1})`.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub bits: u32,
    pub k_values: Vec<u64>,
    /// `|β^k - λ|^{-1/k}`.
    pub gap_values: Vec<f64>,
    /// `max_{j ≥ k} gap_j` over the sampled range; non-increasing.
    pub envelope: Vec<f64>,
    /// `max_{j ≤ k} gap_j`.
    pub running_max: Vec<f64>,
    /// `[min, max]` of the gap over the last tenth of the range.
    pub limit_bracket: [f64; 2],
    /// Index of the global maximum of the gap.
    pub argmax: u64,
    pub diophantine_bound: Option<BoundComparison>,
}

impl GapProfile {
    /// `(c k^{τ-1})^{1/k}`, the bound on the gap implied by the certificate.
    pub fn bound_at(&self, k: u64) -> Option<f64> {
        self.diophantine_bound
            .as_ref()
            .map(|b| (b.c * (k as f64).powf(b.tau - 1.0)).powf(1.0 / k as f64))
    }

    /// CSV with columns `k,gap,envelope,bound` (bound empty when absent).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,gap,envelope,bound\n");
        for (i, &k) in self.k_values.iter().enumerate() {
            let bound = self.bound_at(k).map(|b| b.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", k, self.gap_values[i], self.envelope[i], bound));
        }
        out
    }
}

/// Distance from `kξ - r` to the nearest integer, in units of `2^-bits`,
/// with its error bound in the same units.
fn distance_units(xi: &BigInt, xi_err: u64, r_fixed: &BigInt, k: u64, one: &BigInt) -> (BigInt, u64) {
    let x = xi * BigInt::from(k) - r_fixed;
    let frac = x.mod_floor(one);
    let other = one - &frac;
    let d = if frac <= other { frac } else { other };
    (d, k * xi_err + 2)
}

/// `|β^k - λ|^{-1/k}` for `k = 1..=K`.
pub fn diophantine_gap_profile(
    xi: &ExactReal,
    r: Rational,
    k_max: u64,
    bits: u32,
    certificate: Option<DiophantineCertificate>,
) -> Result<GapProfile> {
    if k_max < 10 {
        return Err(AnnulusError::InvalidInput(format!("K = {k_max} must be at least 10")));
    }
    if bits < MIN_BITS {
        return Err(AnnulusError::InvalidInput(format!(
            "precision {bits} bits is below the minimum of {MIN_BITS}"
        )));
    }
    if r.p.rem_euclid(r.q as i64) == 0 {
        return Err(AnnulusError::InvalidInput(format!(
            "r = {}/{} is an integer, so λ = 1 lies in the point spectrum",
            r.p, r.q
        )));
    }
    if let Some(c) = certificate {
        if !(c.gamma > 0.0 && c.tau > 2.0) {
            return Err(AnnulusError::InvalidInput(format!(
                "certificate needs γ > 0 and τ > 2, got γ = {}, τ = {}",
                c.gamma, c.tau
            )));
        }
    }
    let (xi_fixed, xi_err) = xi.fixed_point(bits)?;
    let one = BigInt::from_biguint(Sign::Plus, BigUint::from(1u8) << bits);
    let r_fixed = (BigInt::from(r.p) << bits).div_floor(&BigInt::from(r.q));
    let scale = (bits as f64).exp2();

    let divisors: Vec<std::result::Result<f64, AnnulusError>> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let (d, err) = distance_units(&xi_fixed, xi_err, &r_fixed, k, &one);
            // Relative accuracy of d must stay below one f64 ulp.
            let floor = BigInt::from(err) << 53;
            if d.abs() < floor {
                return Err(AnnulusError::PrecisionExhausted {
                    k,
                    detail: format!(
                        "distance of k xi - r to Z is within {} ulps of the {}-bit resolution",
                        err, bits
                    ),
                });
            }
            let dist = d.to_f64().expect("finite") / scale;
            Ok(2.0 * (PI * dist).sin())
        })
        .collect();

    let mut gap_values = Vec::with_capacity(k_max as usize);
    let mut worst_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    let c = certificate.map(|cert| (cert, (r.q as f64).powf(cert.tau) / (4.0 * cert.gamma)));
    for (i, div) in divisors.into_iter().enumerate() {
        let k = i as u64 + 1;
        let div = div?;
        gap_values.push((-div.ln() / k as f64).exp());
        if let Some((cert, c)) = c {
            let ratio = (1.0 / div) / (c * (k as f64).powf(cert.tau - 1.0));
            worst_ratio = worst_ratio.max(ratio);
            if ratio > 1.0 && violations.len() < 16 {
                violations.push(k);
            }
        }
    }

    let n = gap_values.len();
    let mut envelope = gap_values.clone();
    for i in (0..n - 1).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut running_max = gap_values.clone();
    for i in 1..n {
        running_max[i] = running_max[i].max(running_max[i - 1]);
    }
    let tail = &gap_values[n - n / 10..];
    let limit_bracket = [
        tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail.iter().copied().fold(0.0, f64::max),
    ];
    let argmax = gap_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc })
        .0 as u64
        + 1;

    Ok(GapProfile {
        bits,
        k_values: (1..=k_max).collect(),
        gap_values,
        envelope,
        running_max,
        limit_bracket,
        argmax,
        diophantine_bound: c.map(|(cert, c)| BoundComparison {
            gamma: cert.gamma,
            tau: cert.tau,
            c,
            holds: violations.is_empty(),
            violations,
            worst_ratio,
        }),
    })
}
