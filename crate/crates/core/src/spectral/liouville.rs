//! The Liouville rotation `β = exp(iπθ)`, `θ = Σ 1/p_n`, with `p_1 = 1` and
//! `p_{n+1} = 2^{n^{p_n}}`. Writing `p_n = 2^{q_n}`, every statement about the
//! sequence reduces to integer statements about `q_n`, which are checked
//! exactly while the integers fit and in certified log space afterwards.
//!
//! For the resolvent of `T_{1,β}` at `λ = -1` the coefficient of `z^{p_n}` is
//! `c_n = 1/(1 + β^{p_n})`, and `β^{p_n} = -exp(iπΣ_n)` with
//! `Σ_n = Σ_{k>n} p_n/p_k`, so `|1 + β^{p_n}| = 2 sin(πΣ_n/2)`.

use std::f64::consts::PI;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::logspace::{
    add_up, certify_ge_affine, difference, enclose, ln2, ln_pi, LogSpaceInteger, Tower,
};
use crate::error::{AnnulusError, Result};

pub const MAX_TERMS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleChecks {
    /// `q_{n+1} ≥ q_n`, so `p_{n+1}/p_n = 2^{q_{n+1} - q_n}` is an integer.
    pub ratio_integer: bool,
    /// `q_{n+1} - q_n ≥ n - 1`, i.e. `p_{n+1}/p_n ≥ 2^{n-1}`.
    pub ratio_bound: bool,
    /// `ε_n ≤ (1/p_{n+1})(1 + 1/(2^n - 1)) ≤ 2/p_{n+1}`.
    pub eps_bound: bool,
    /// `q_{n+1} ≥ (n+1) q_n`, i.e. `p_{n+1} ≥ p_n^{n+1}`.
    pub power_bound: bool,
    /// `q_{n+1} ≥ n q_n + 1`, so `ε_n ≤ 2/p_{n+1} ≤ 1/p_n^n`.
    pub liouville_bound: bool,
}

impl LiouvilleChecks {
    pub fn all(&self) -> bool {
        self.ratio_integer && self.ratio_bound && self.eps_bound && self.power_bound && self.liouville_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleTerm {
    pub n: usize,
    pub p: LogSpaceInteger,
    pub q: LogSpaceInteger,
    /// Enclosure of `-log2 ε_n` (present when `q_{n+1}` is).
    pub neg_log2_eps: Option<Tower>,
    pub checks: Option<LiouvilleChecks>,
}

/// `log2(1 + 1/(2^n - 1))`, enclosed.
fn tail_factor_log2(n: usize) -> (f64, f64) {
    let t = 1.0 / ((n as f64).exp2() - 1.0);
    enclose(t.ln_1p() / std::f64::consts::LN_2)
}

/// `(q_1, ..., q_count)`.
fn exponents(count: usize) -> Result<Vec<LogSpaceInteger>> {
    let mut q = vec![LogSpaceInteger::from_u64(0)];
    for n in 1..count {
        let p = q[n - 1].pow2();
        q.push(LogSpaceInteger::pow_of(n as u64, &p)?);
    }
    Ok(q)
}

/// `p_1..p_N` with `q_n` and the certified inequalities for `n < N`.
pub fn liouville_sequence(terms: usize) -> Result<Vec<LiouvilleTerm>> {
    if !(2..=MAX_TERMS).contains(&terms) {
        return Err(AnnulusError::InvalidInput(format!(
            "N = {terms} must lie in 2..={MAX_TERMS}"
        )));
    }
    let q = exponents(terms)?;
    let mut out = Vec::with_capacity(terms);
    for n in 1..=terms {
        let qn = &q[n - 1];
        let (neg_log2_eps, checks) = if n < terms {
            let next = &q[n];
            let (flo, fhi) = tail_factor_log2(n);
            let next_t = next.to_tower();
            let eps = next_t.add_const(-fhi, -flo)?;
            let eps = Tower {
                hi: next_t.hi.max(eps.hi),
                ..eps
            };
            let checks = LiouvilleChecks {
                ratio_integer: certify_ge_affine(next, qn, 1, 0)?,
                ratio_bound: certify_ge_affine(next, qn, 1, (n - 1) as u64)?,
                // 1 + 1/(2^n - 1) ≤ 2 exactly when 2^n ≥ 2.
                eps_bound: (1u128 << n.min(64)) >= 2,
                power_bound: certify_ge_affine(next, qn, (n + 1) as u64, 0)?,
                liouville_bound: certify_ge_affine(next, qn, n as u64, 1)?,
            };
            (Some(eps), Some(checks))
        } else {
            (None, None)
        };
        out.push(LiouvilleTerm {
            n,
            p: qn.pow2(),
            q: qn.clone(),
            neg_log2_eps,
            checks,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleGrowth {
    pub n: usize,
    /// Enclosure of `-ln|1 + β^{p_n}|`.
    pub neg_log_divisor: Tower,
    /// Enclosure of `(1/p_n) ln|c_n| = -(1/p_n) ln|1 + β^{p_n}|`.
    pub growth_exponent: Tower,
}

/// Certified bounds on `|1 + β^{p_n}|` and on the growth of `|c_n|^{1/p_n}`.
///
/// For `n = 2`, `Σ_2 = 1/8 + 2 Σ_{k≥4} 1/p_k` and the correction is below
/// `2^{-43046719}`, so `2 sin(π/16)` is enclosed directly. For `n ≥ 3`,
/// `2Σ ≤ 2 sin(πΣ/2) ≤ πΣ` and `p_n/p_{n+1} ≤ Σ ≤ (p_n/p_{n+1})(1 + 1/(2^n - 1))`
/// give `-ln|1 + β^{p_n}| ∈ [(q_{n+1} - q_n) ln 2 - ln π - c, (q_{n+1} - q_n) ln 2 - ln 2]`
/// with `c = ln(1 + 1/(2^n - 1))`.
pub fn liouville_growth(n: usize) -> Result<LiouvilleGrowth> {
    if !(2..MAX_TERMS).contains(&n) {
        return Err(AnnulusError::InvalidInput(format!(
            "n = {n} must lie in 2..{MAX_TERMS}"
        )));
    }
    let q = exponents(n + 1)?;
    if n == 2 {
        // sin is increasing on [0, π/2] and the correction to π/16 is far
        // below one ulp; widen by a few ulps for the library sine and log.
        let d = 2.0 * (PI / 16.0).sin();
        let (lo, hi) = enclose(-d.ln());
        let (lo, hi) = (lo.next_down(), hi.next_up());
        let neg = Tower::interval(lo, hi);
        let growth = neg.mul_const(0.5, 0.5)?;
        return Ok(LiouvilleGrowth {
            n,
            neg_log_divisor: neg,
            growth_exponent: growth,
        });
    }
    let gap = difference(&q[n], &q[n - 1])?.to_tower();
    let (l2lo, l2hi) = ln2();
    let (_, lpi_hi) = ln_pi();
    let t = 1.0 / ((n as f64).exp2() - 1.0);
    let (_, c_hi) = enclose(t.ln_1p());
    let scaled = gap.mul_const(l2lo, l2hi)?;
    let neg = scaled.add_const(-add_up(lpi_hi, c_hi), -l2lo)?;
    let p = q[n - 1].pow2().to_tower();
    let growth = neg.div(&p)?;
    Ok(LiouvilleGrowth {
        n,
        neg_log_divisor: neg,
        growth_exponent: growth,
    })
}

/// `10^n` as an enclosure.
pub fn power_of_ten(n: u32) -> Tower {
    Tower::from_biguint(&BigUint::from(10u32).pow(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn first_terms_exact() {
        let seq = liouville_sequence(5).unwrap();
        let p: Vec<u64> = seq[..3].iter().map(|t| t.p.exact().unwrap().to_u64().unwrap()).collect();
        assert_eq!(p, vec![1, 2, 16]);
        assert_eq!(seq[3].q.exact().unwrap(), &BigUint::from(43046721u64));
        match &seq[3].p {
            LogSpaceInteger::PowerOfTwo(e) => assert_eq!(e.exact().unwrap(), &BigUint::from(43046721u64)),
            other => panic!("{other:?}"),
        }
        // p2/p1 = 2 ≥ 2^0
        assert!(seq[0].checks.as_ref().unwrap().ratio_bound);
    }

    #[test]
    fn recursion_oracle_for_small_terms() {
        // Independent recursion in plain integers: p_{n+1} = 2^(n^p_n).
        let mut p: Vec<u128> = vec![1];
        for n in 1..3u32 {
            let e = (n as u128).pow(p[p.len() - 1] as u32);
            p.push(1u128 << e);
        }
        assert_eq!(p, vec![1, 2, 16]);
        assert_eq!(3u64.pow(16), 43046721);
    }

    #[test]
    fn all_checks_hold_up_to_eight_terms() {
        let seq = liouville_sequence(8).unwrap();
        assert_eq!(seq.len(), 8);
        for t in &seq[..7] {
            assert!(t.checks.as_ref().unwrap().all(), "n = {}: {:?}", t.n, t.checks);
        }
        assert!(seq[7].checks.is_none());
    }

    #[test]
    fn eps_enclosure_for_small_n() {
        // ε_1 = 1/2 + 1/16 + 2^-43046721 + ... so -log2 ε_1 ≈ 0.830.
        let seq = liouville_sequence(3).unwrap();
        let e = seq[0].neg_log2_eps.unwrap();
        let truth = -(0.5f64 + 1.0 / 16.0).log2();
        assert!(e.lo <= truth && truth <= e.hi, "{e:?} vs {truth}");
    }

    #[test]
    fn growth_n2_direct() {
        let g = liouville_growth(2).unwrap();
        let d = 2.0 * (PI / 16.0).sin();
        assert!((d - 0.390_180_644_032_256_5).abs() < 1e-15);
        let expect = -d.ln() / 2.0;
        assert!(g.growth_exponent.lo <= expect && expect <= g.growth_exponent.hi);
        assert!((expect - 0.470_6).abs() < 1e-4);
    }

    #[test]
    fn growth_n3_bracket() {
        let g = liouville_growth(3).unwrap();
        assert_eq!(g.growth_exponent.height, 0);
        let ln2 = std::f64::consts::LN_2;
        let lower = ((43046721.0 - 4.0) * ln2 - PI.ln() - (8.0f64 / 7.0).ln()) / 16.0;
        let upper = ((43046721.0 - 4.0) * ln2 - ln2) / 16.0;
        assert!((g.growth_exponent.lo - lower).abs() < 1e-6 * lower);
        assert!((g.growth_exponent.hi - upper).abs() < 1e-6 * upper);
        assert!(g.growth_exponent.lo > 1.86e6 && g.growth_exponent.lo < 1.87e6);
    }

    #[test]
    fn growth_lower_bounds_increase_past_powers_of_ten() {
        let g: Vec<LiouvilleGrowth> = (2..=5).map(|n| liouville_growth(n).unwrap()).collect();
        for w in g.windows(2) {
            let a = w[0].growth_exponent.lower_endpoint();
            let b = w[1].growth_exponent.lower_endpoint();
            assert!(a.certainly_less(&b), "n = {}: {a} vs {b}", w[0].n);
        }
        for gr in &g[1..] {
            let lower = gr.growth_exponent.lower_endpoint();
            assert!(lower.certainly_greater(&power_of_ten(gr.n as u32)), "n = {}", gr.n);
        }
    }
}
