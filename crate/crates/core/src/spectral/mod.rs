//! Spectra of `T_{α,β}` and `S_{α,β}`, eigenvector residuals, resolvent
//! solves by coefficient division, and the two small-divisor examples.

pub mod diophantine;
pub mod liouville;
pub mod logspace;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{seminorm, AnnulusDomain};
use crate::error::{AnnulusError, Result};
use crate::laurent::LaurentSeries;
use crate::operators::{CompositionKind, OperatorMatrix, WeightedComposition};

pub use diophantine::{
    diophantine_gap_profile, BoundComparison, DiophantineCertificate, ExactReal, GapProfile, Rational,
};
pub use liouville::{liouville_growth, liouville_sequence, LiouvilleGrowth, LiouvilleTerm};
pub use logspace::{LogSpaceInteger, Tower};

/// `β^n = 1` is tested against this tolerance.
pub const PERIOD_TOL: f64 = 1e-12;
/// Largest period searched before declaring `β` aperiodic.
pub const APERIODIC_CUTOFF: u32 = 1_000_000;
pub const DEFAULT_DIV_TOL: f64 = 1e-12;
pub const DEFAULT_VERIFY_TOL: f64 = 1e-10;
/// Slack on the two-sided coefficient bounds of an off-circle resolvent.
pub const BOUND_SLACK: f64 = 1e-14;

/// Number of witness indices emitted per spectral point.
const WITNESSES: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenspaceDimension {
    Infinite,
    Finite(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumKind {
    InversionPair,
    RootOfUnityCycle { order: usize },
    /// `σ_p = {αβ^k : k ∈ Z}`; no `β^m = 1` was found for `m ≤ cutoff`.
    AperiodicOrbit {
        alpha: Complex64,
        beta: Complex64,
        cutoff: u32,
    },
}

/// An eigenvalue with a few eigenvectors, each a list of `(k, c_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: Complex64,
    /// `k` in `λ = αβ^k` for rotations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_index: Option<i64>,
    pub eigenspace_dimension: EigenspaceDimension,
    pub witnesses: Vec<Vec<(i64, Complex64)>>,
}

impl SpectralPoint {
    pub fn witness_series(&self) -> Vec<LaurentSeries> {
        self.witnesses.iter().map(|w| LaurentSeries::from_terms(w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDescription {
    pub kind: SpectrumKind,
    /// The full spectrum for the first two kinds; for an aperiodic orbit the
    /// points `αβ^k` with `|k| ≤ 3` as representatives of `σ_p`.
    pub points: Vec<SpectralPoint>,
}

/// Smallest `m ≤ limit` with `|β^m - 1| < PERIOD_TOL`.
fn smallest_period(beta: Complex64, limit: u32) -> Option<u32> {
    let one = Complex64::new(1.0, 0.0);
    (1..=limit).find(|&m| (beta.powi(m as i32) - one).norm() < PERIOD_TOL)
}

fn rotation_point(op: &WeightedComposition, k: i64, dim: EigenspaceDimension, period: Option<i64>) -> SpectralPoint {
    let one = Complex64::new(1.0, 0.0);
    let witnesses = match period {
        Some(n) => (-1..WITNESSES - 1).map(|l| vec![(k + n * l, one)]).collect(),
        None => vec![vec![(k, one)]],
    };
    SpectralPoint {
        lambda: op.weight(k),
        orbit_index: Some(k),
        eigenspace_dimension: dim,
        witnesses,
    }
}

/// Spectrum and point spectrum of a weighted composition operator.
///
/// For a rotation, `n_root = Some(n)` claims that `n` is the smallest period
/// of `β`, and `None` claims that `β` is not a root of unity; both claims are
/// checked. `n_root` is ignored for inversions.
pub fn spectrum(op: &WeightedComposition, n_root: Option<usize>) -> Result<SpectrumDescription> {
    let alpha = op.alpha();
    let beta = op.beta();
    let one = Complex64::new(1.0, 0.0);
    match op.kind() {
        CompositionKind::Inversion => {
            // S(e_k ± β^k e_{-k}) = ±α (e_k ± β^k e_{-k}), and S e_0 = α e_0.
            let mut plus = vec![vec![(0, one)]];
            let mut minus = Vec::new();
            for k in 1..=WITNESSES {
                let bk = beta.powi(k as i32);
                plus.push(vec![(k, one), (-k, bk)]);
                minus.push(vec![(k, one), (-k, -bk)]);
            }
            Ok(SpectrumDescription {
                kind: SpectrumKind::InversionPair,
                points: vec![
                    SpectralPoint {
                        lambda: alpha,
                        orbit_index: None,
                        eigenspace_dimension: EigenspaceDimension::Infinite,
                        witnesses: plus,
                    },
                    SpectralPoint {
                        lambda: -alpha,
                        orbit_index: None,
                        eigenspace_dimension: EigenspaceDimension::Infinite,
                        witnesses: minus,
                    },
                ],
            })
        }
        CompositionKind::Rotation => match n_root {
            Some(n) => {
                if n == 0 || n > APERIODIC_CUTOFF as usize {
                    return Err(AnnulusError::InvalidInput(format!(
                        "claimed period {n} must lie in 1..={APERIODIC_CUTOFF}"
                    )));
                }
                let defect = (beta.powi(n as i32) - one).norm();
                if defect >= PERIOD_TOL {
                    return Err(AnnulusError::InconsistentPeriodClaim(format!(
                        "|beta^{n} - 1| = {defect:.3e} is not below {PERIOD_TOL:e}"
                    )));
                }
                if let Some(m) = smallest_period(beta, n as u32 - 1) {
                    return Err(AnnulusError::InconsistentPeriodClaim(format!(
                        "beta already has period {m} < {n}"
                    )));
                }
                let points = (0..n as i64)
                    .map(|k| rotation_point(op, k, EigenspaceDimension::Infinite, Some(n as i64)))
                    .collect();
                Ok(SpectrumDescription {
                    kind: SpectrumKind::RootOfUnityCycle { order: n },
                    points,
                })
            }
            None => {
                if let Some(m) = smallest_period(beta, APERIODIC_CUTOFF) {
                    return Err(AnnulusError::InconsistentPeriodClaim(format!(
                        "beta is claimed aperiodic but beta^{m} = 1 within {PERIOD_TOL:e}"
                    )));
                }
                let points = (-WITNESSES..=WITNESSES)
                    .map(|k| rotation_point(op, k, EigenspaceDimension::Finite(1), None))
                    .collect();
                Ok(SpectrumDescription {
                    kind: SpectrumKind::AperiodicOrbit {
                        alpha,
                        beta,
                        cutoff: APERIODIC_CUTOFF,
                    },
                    points,
                })
            }
        },
    }
}

/// `max |(T^n - α^n Id)_{ij}|` over the trusted block of the degree-`N` model.
pub fn power_identity_defect(op: &WeightedComposition, n: usize, degree: usize) -> Result<f64> {
    let m = OperatorMatrix::from_operator(op, degree);
    let mut power = OperatorMatrix::identity(degree);
    for _ in 0..n {
        power = m.compose(&power)?;
    }
    let target = OperatorMatrix::identity(degree).scaled(op.alpha().powi(n as i32));
    Ok(power.max_trusted_diff(&target))
}

/// `‖op f - λ f‖_{∞,2} / ‖f‖_{∞,2}` on the given domain.
pub fn eigenvector_check(
    op: &WeightedComposition,
    lambda: Complex64,
    f: &LaurentSeries,
    domain: &AnnulusDomain,
) -> Result<f64> {
    if f.is_zero() {
        return Err(AnnulusError::ZeroFunction);
    }
    let image = op.apply(f);
    let n = f.degree();
    let coeffs = image
        .coeffs()
        .iter()
        .zip(f.coeffs())
        .map(|(a, b)| a - lambda * b)
        .collect();
    let inner = image.inner_radius().max(f.inner_radius());
    let outer = image.outer_radius().min(f.outer_radius());
    if inner >= outer {
        return Err(AnnulusError::Domain(format!(
            "f and its image share no annulus ({inner} >= {outer})"
        )));
    }
    let diff = LaurentSeries::new(n, coeffs, inner, outer)?;
    let num = seminorm(&diff, domain, 2)?;
    let den = seminorm(f, domain, 2)?;
    if den == 0.0 {
        return Err(AnnulusError::ZeroFunction);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventConfig {
    pub div_tol: f64,
    pub verify_tol: f64,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        ResolventConfig {
            div_tol: DEFAULT_DIV_TOL,
            verify_tol: DEFAULT_VERIFY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventSolution {
    pub f: LaurentSeries,
    pub min_divisor: f64,
    pub argmin: i64,
    /// `max_k |((T - λ) f)_k - b_k|`.
    pub residual: f64,
    /// Whether `|b_k|/(1+|λ|) ≤ |a_k| ≤ |b_k|/|1-|λ||` was checked (only
    /// when `|λ| ≠ 1`).
    pub bounds_checked: bool,
}

/// Indices `0, 1, -1, 2, -2, ..., N, -N`.
fn divisor_order(n: usize) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=n as i64).flat_map(|k| [k, -k]))
}

/// Solves `(T - λ) f = g` for a rotation `T` by `a_k = b_k / (αβ^k - λ)`.
pub fn resolvent_solve(
    op: &WeightedComposition,
    lambda: Complex64,
    g: &LaurentSeries,
    cfg: &ResolventConfig,
) -> Result<ResolventSolution> {
    if op.kind() != CompositionKind::Rotation {
        return Err(AnnulusError::InvalidInput(
            "resolvent solves are defined for rotation operators only".into(),
        ));
    }
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(AnnulusError::InvalidInput(format!("lambda = {lambda} is not finite")));
    }
    let n = g.degree();
    let mut f = LaurentSeries::zero(n).with_validity(g.inner_radius(), g.outer_radius())?;
    let mut min_divisor = f64::INFINITY;
    let mut argmin = 0;
    for k in divisor_order(n) {
        let d = op.weight(k) - lambda;
        let dn = d.norm();
        if dn <= cfg.div_tol {
            return Err(AnnulusError::SmallDivisor { k, divisor: dn });
        }
        if dn < min_divisor {
            min_divisor = dn;
            argmin = k;
        }
        f.set(k, g.coeff(k) / d);
    }

    let residual = divisor_order(n)
        .map(|k| ((op.weight(k) - lambda) * f.coeff(k) - g.coeff(k)).norm())
        .fold(0.0, f64::max);
    if !(residual < cfg.verify_tol) {
        return Err(AnnulusError::Verification(format!(
            "(T - lambda) f differs from g by {residual:.3e}"
        )));
    }

    let modulus = lambda.norm();
    let bounds_checked = (modulus - 1.0).abs() > cfg.div_tol;
    if bounds_checked {
        for k in divisor_order(n) {
            let b = g.coeff(k).norm();
            let a = f.coeff(k).norm();
            let lower = b / (1.0 + modulus);
            let upper = b / (1.0 - modulus).abs();
            if a < lower * (1.0 - BOUND_SLACK) || a > upper * (1.0 + BOUND_SLACK) {
                return Err(AnnulusError::Verification(format!(
                    "|a_{k}| = {a:e} lies outside [{lower:e}, {upper:e}]"
                )));
            }
        }
    }

    Ok(ResolventSolution {
        f,
        min_divisor,
        argmin,
        residual,
        bounds_checked,
    })
}
