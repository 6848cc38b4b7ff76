//! Winding numbers, logarithms on annuli, and the factorization
//! `f(z) = z^n g0(z) / conj(g0(1/z̄))` of functions unimodular on the unit
//! circle, with `g0` zero-free on the closed unit disc.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AnnulusError, Result};
use crate::laurent::{default_samples, LaurentSeries, DEFAULT_DYNAMIC_RANGE};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorConfig {
    /// `|f|` must stay above this on every contour.
    pub vanish_tol: f64,
    /// Largest distance of the winding integral from an integer.
    pub round_tol: f64,
    /// Largest allowed `sup_T ||f| - 1|`.
    pub uni_tol: f64,
    /// Relative reconstruction tolerance on the test circles.
    pub residual_tol: f64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            vanish_tol: 1e-8,
            round_tol: 1e-3,
            uni_tol: 1e-8,
            residual_tol: 1e-8,
        }
    }
}

const MAX_CONTOUR_SAMPLES: usize = 1 << 16;

fn contour_samples(f: &LaurentSeries) -> usize {
    default_samples(f.degree() + 1).max(256)
}

/// Smallest sampled `|f|` on `r T`.
pub fn min_modulus(f: &LaurentSeries, r: f64) -> Result<f64> {
    let s = f.sample(r, contour_samples(f))?;
    Ok(s.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min))
}

/// `(1/2πi) ∮ f'/f` over `r T` with the default tolerances.
pub fn winding_number(f: &LaurentSeries, r: f64) -> Result<i64> {
    winding_number_with(f, r, &FactorConfig::default())
}

/// Trapezoidal rule on `r T`: the mean of `z f'(z) / f(z)` over equispaced
/// samples, rounded to the nearest integer. The sample count is raised
/// (up to `2^16`) while the mean is not yet within `round_tol` of an integer,
/// since a zero close to the contour slows the convergence.
pub fn winding_number_with(f: &LaurentSeries, r: f64, cfg: &FactorConfig) -> Result<i64> {
    f.check_radius(r)?;
    let mut m = contour_samples(f);
    loop {
        let values = f.sample_unchecked(r, m);
        let min = values.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if !(min > cfg.vanish_tol) {
            return Err(AnnulusError::NearZeroOnContour {
                radius: r,
                min_modulus: min,
            });
        }
        let numer = f.sample_log_derivative_numerator(r, m);
        let sum: Complex64 = numer
            .values
            .iter()
            .zip(&values.values)
            .map(|(n, v)| n / v)
            .sum();
        let value = sum.re / m as f64;
        let rounded = value.round();
        if (value - rounded).abs() <= cfg.round_tol && sum.im.abs() / m as f64 <= cfg.round_tol {
            return Ok(rounded as i64);
        }
        if m >= MAX_CONTOUR_SAMPLES {
            return Err(AnnulusError::NonIntegerWinding {
                radius: r,
                value,
                tolerance: cfg.round_tol,
            });
        }
        m = (4 * m).min(MAX_CONTOUR_SAMPLES);
    }
}

/// Radii `s^t`, `t ∈ {±7/8, ±1/2, ±1/4, 0}`, probing `{1/s < |z| < s}`.
fn radius_grid(s: f64) -> Vec<f64> {
    [-0.875, -0.5, -0.25, 0.0, 0.25, 0.5, 0.875]
        .iter()
        .map(|&t| s.powf(t))
        .collect()
}

/// Checks that `g` has no zeros in `{1/s < |z| < s}` and returns its winding
/// number.
pub fn check_nonvanishing(g: &LaurentSeries, s: f64, cfg: &FactorConfig) -> Result<i64> {
    if !(s > 1.0) {
        return Err(AnnulusError::InvalidInput(format!("s = {s} must exceed 1")));
    }
    let mut windings = Vec::new();
    for r in radius_grid(s) {
        if !g.contains_radius(r) {
            return Err(AnnulusError::Domain(format!(
                "radius {r} of the annulus s = {s} lies outside the validity ({}, {})",
                g.inner_radius(),
                g.outer_radius()
            )));
        }
        let w = winding_number_with(g, r, cfg).map_err(|e| AnnulusError::VanishingInAnnulus {
            s,
            detail: e.to_string(),
        })?;
        windings.push((r, w));
    }
    if windings.iter().any(|&(_, w)| w != windings[0].1) {
        return Err(AnnulusError::WindingMismatch { windings });
    }
    Ok(windings[0].1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusLog {
    pub winding: i64,
    pub h: LaurentSeries,
    /// `sup |g - z^n exp(h)| / sup |g|` over the test circles.
    pub residual: f64,
}

/// Circles `{1, √s, 1/√s}` used to verify reconstructions.
fn test_circles(s: f64) -> [f64; 3] {
    [1.0, s.sqrt(), 1.0 / s.sqrt()]
}

/// Writes `g(z) = z^n exp(h(z))` on `{1/s < |z| < s}`.
///
/// `h` is recovered from `z h' = z q'/q` with `q = g / z^n`, sampled on the
/// unit circle; the constant is fixed so that `h(1)` is the principal
/// logarithm of `g(1)`.
pub fn annulus_log(g: &LaurentSeries, s: f64, cfg: &FactorConfig) -> Result<AnnulusLog> {
    let n = check_nonvanishing(g, s, cfg)?;
    let q = g.shifted(-n);
    let degree = q.degree();
    let m = default_samples(degree);
    let values = q.sample_unchecked(1.0, m);
    let mut numer = q.sample_log_derivative_numerator(1.0, m);
    for (a, v) in numer.values.iter_mut().zip(&values.values) {
        *a /= v;
    }
    let zh = LaurentSeries::from_circle_samples(&numer, degree, g.inner_radius(), g.outer_radius())?;
    let mut h = LaurentSeries::zero(degree);
    for (k, c) in zh.terms() {
        if k != 0 {
            h.set(k, c / k as f64);
        }
    }
    let tail: Complex64 = h.terms().map(|(_, c)| c).sum();
    h.set(0, g.eval(ONE)?.ln() - tail);
    let inner = g.inner_radius().max(1.0 / s);
    let outer = g.outer_radius().min(s);
    let h = h.with_validity(inner, outer)?;

    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for r in test_circles(s) {
        let gs = g.sample(r, m)?;
        let hs = h.sample(r, m)?;
        for (j, (gv, hv)) in gs.values.iter().zip(&hs.values).enumerate() {
            let z = gs.point(j);
            worst = worst.max((gv - z.powi(n as i32) * hv.exp()).norm());
            scale = scale.max(gv.norm());
        }
    }
    let residual = worst / scale;
    if !(residual < cfg.residual_tol) {
        return Err(AnnulusError::Verification(format!(
            "z^{n} exp(h) misses g by {residual:e} (relative) on the test circles"
        )));
    }
    Ok(AnnulusLog {
        winding: n,
        h,
        residual,
    })
}

/// `h = h_plus + h_minus` with `h_plus` on indices `k ≥ 0` (constant
/// included) and `h_minus` on `k < 0`.
pub fn laurent_split(h: &LaurentSeries) -> (LaurentSeries, LaurentSeries) {
    let mut plus = h.clone();
    let mut minus = h.clone();
    for (k, _) in h.terms() {
        if k < 0 {
            plus.set(k, ZERO);
        } else {
            minus.set(k, ZERO);
        }
    }
    (plus, minus)
}

/// `z ↦ conj(g(1/z̄))`: coefficient `a_k` becomes `conj(a_k)` at index `-k`.
pub fn reflect(g: &LaurentSeries) -> LaurentSeries {
    let n = g.degree();
    let coeffs = g.coeffs().iter().rev().map(|c| c.conj()).collect();
    LaurentSeries::new(n, coeffs, 1.0 / g.outer_radius(), 1.0 / g.inner_radius())
        .expect("reflection preserves validity")
}

/// `sup_T ||f| - 1|` on samples.
pub fn unimodularity_defect(f: &LaurentSeries) -> Result<f64> {
    let s = f.sample(1.0, contour_samples(f).max(1024))?;
    Ok(s.values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResult {
    pub winding: i64,
    pub s: f64,
    pub g0: LaurentSeries,
    /// `sup_T |f - z^n g0 / g0*|`.
    pub residual: f64,
    /// Largest relative reconstruction error over the test circles.
    pub relative_residual: f64,
    pub unimodularity_defect: f64,
}

/// Search grid `s_j = R^{1 - j/16}`, `j = 0..=14`.
pub fn s_grid(r: f64) -> Vec<f64> {
    (0..=14).map(|j| r.powf(1.0 - j as f64 / 16.0)).collect()
}

/// Factors a function unimodular on `T` as `z^n g0(z) / conj(g0(1/z̄))`.
///
/// With `h = h_plus + h_minus` the logarithm of `f / z^n`, unimodularity makes
/// `h_0` purely imaginary and `h_{-k} = -conj(h_k)`. Taking
/// `g0 = exp(h_plus - h_0/2)` splits the constant evenly between `g0` and its
/// reflection, so the quotient reproduces `exp(h)` exactly.
pub fn factor_unimodular(
    f: &LaurentSeries,
    s_hint: Option<f64>,
    cfg: &FactorConfig,
) -> Result<FactorizationResult> {
    let defect = unimodularity_defect(f)?;
    if !(defect < cfg.uni_tol) {
        return Err(AnnulusError::NotUnimodular { defect });
    }
    let s = match s_hint {
        Some(s) => {
            check_nonvanishing(f, s, cfg)?;
            s
        }
        None => {
            let r = f.outer_radius().min(1.0 / f.inner_radius());
            s_grid(r)
                .into_iter()
                .find(|&s| check_nonvanishing(f, s, cfg).is_ok())
                .ok_or(AnnulusError::NoNonvanishingAnnulus)?
        }
    };
    let log = annulus_log(f, s, cfg)?;
    let n = log.winding;
    let (mut plus, _) = laurent_split(&log.h);
    let h0 = plus.coeff(0);
    plus.set(0, h0 - h0 / 2.0);
    let degree = plus.degree();
    let g0 = plus
        .with_validity(1.0 / crate::laurent::POLYNOMIAL_EXTENT, s)?
        .exp_one_sided(degree)?;

    // Outer check: winding 0 on T and no zeros on a radius grid or at 0.
    if winding_number_with(&g0, 1.0, cfg)? != 0 {
        return Err(AnnulusError::Verification("g0 winds around 0 on T".into()));
    }
    let mut min = g0.coeff(0).norm();
    for r in [1.0, 0.75, 0.5, 0.25] {
        min = min.min(min_modulus(&g0, r)?);
    }
    if !(min > cfg.vanish_tol) {
        return Err(AnnulusError::Verification(format!(
            "g0 nearly vanishes in the closed unit disc (min modulus {min:e})"
        )));
    }

    let reflected = reflect(&g0);
    let m = default_samples(degree).max(contour_samples(f));
    // Absolute error on T, where |f| = 1, and relative error on every circle.
    let mut residual: f64 = 0.0;
    let mut relative_residual: f64 = 0.0;
    for r in test_circles(s) {
        let fs = f.sample(r, m)?;
        let gs = g0.sample(r, m)?;
        let rs = reflected.sample(r, m)?;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..m {
            let z = fs.point(j);
            let rebuilt = z.powi(n as i32) * gs.values[j] / rs.values[j];
            worst = worst.max((fs.values[j] - rebuilt).norm());
            scale = scale.max(fs.values[j].norm());
        }
        if r == 1.0 {
            residual = worst;
        }
        relative_residual = relative_residual.max(worst / scale);
    }
    if !(residual < cfg.residual_tol && relative_residual < cfg.residual_tol) {
        return Err(AnnulusError::Verification(format!(
            "reconstruction misses f by {residual:e} on T and {relative_residual:e} (relative) on the test circles"
        )));
    }
    Ok(FactorizationResult {
        winding: n,
        s,
        g0,
        residual,
        relative_residual,
        unimodularity_defect: defect,
    })
}

/// `z^n exp(p(z) - conj(p(1/z̄)))`, unimodular on `T`, recovered to degree
/// `degree` on the validity `(1/r, r)`.
pub fn synthesize_unimodular(p: &LaurentSeries, n: i64, degree: usize, r: f64) -> Result<LaurentSeries> {
    let h = p.sub(&reflect(p))?.with_validity(1.0 / r, r)?;
    let m = default_samples(degree);
    let samples = h.sample(1.0, m)?;
    let mut values = samples.clone();
    for (j, v) in values.values.iter_mut().enumerate() {
        *v = samples.point(j).powi(n as i32) * v.exp();
    }
    let coeffs = crate::laurent::recover_coefficients(&values, degree, DEFAULT_DYNAMIC_RANGE)?;
    LaurentSeries::new(degree, coeffs, 1.0 / r, r)
}

/// Blaschke factor `(z - a)/(1 - conj(a) z)` as a series of degree `degree`,
/// valid on `(1/r, r)` with `|a| < 1/r` and `r < 1/|a|`.
pub fn blaschke(a: Complex64, degree: usize, r: f64) -> Result<LaurentSeries> {
    if !(a.norm() * r < 1.0) {
        return Err(AnnulusError::InvalidInput(format!(
            "validity radius {r} must stay below 1/|a| = {}",
            1.0 / a.norm()
        )));
    }
    // (z - a) Σ (conj(a) z)^k
    let mut s = LaurentSeries::zero(degree);
    let mut pow = ONE;
    for k in 0..=degree as i64 {
        let prev = if k == 0 { ZERO } else { pow / a.conj() };
        let term = if k == 0 { -a } else { prev - a * pow };
        s.set(k, term);
        pow *= a.conj();
        if a.conj() == ZERO {
            s.set(1, ONE);
            break;
        }
    }
    s.with_validity(1.0 / r, r)
}
