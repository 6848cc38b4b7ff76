//! Annulus geometry, the exhaustion seminorms `||f||_{inf,n}` and the two
//! Fréchet distances built from them.
//!
//! `K_n = {R_n^{-1} <= |z| <= R_n}` with `R_n = R^{1 - 1/n}`, so `K_1` is the
//! unit circle and the `K_n` increase to the open annulus. By the maximum
//! modulus principle the sup over `K_n` is attained on its two boundary
//! circles, which is how [`seminorm`] computes it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AnnulusError, Result};
use crate::laurent::{default_samples, LaurentSeries};

/// Outer radius used when nothing else is configured.
pub const DEFAULT_R: f64 = 2.0;

/// Default number of terms kept in the Fréchet distance series.
pub const DEFAULT_K_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDomain {
    #[serde(rename = "R")]
    r: f64,
}

impl Default for AnnulusDomain {
    fn default() -> Self {
        AnnulusDomain { r: DEFAULT_R }
    }
}

impl AnnulusDomain {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 1.0 && r.is_finite()) {
            return Err(AnnulusError::InvalidInput(format!(
                "outer radius must satisfy R > 1, got {r}"
            )));
        }
        Ok(AnnulusDomain { r })
    }

    pub fn outer_radius(&self) -> f64 {
        self.r
    }

    pub fn inner_radius(&self) -> f64 {
        1.0 / self.r
    }

    pub fn level(&self, n: usize) -> Result<ExhaustionLevel> {
        Ok(ExhaustionLevel {
            n,
            radius: exhaustion_radius(self, n)?,
        })
    }
}

/// The compact `K_n`, stored through its outer radius `R_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionLevel {
    pub n: usize,
    pub radius: f64,
}

impl ExhaustionLevel {
    /// The boundary circles of `K_n`; a single circle for `n = 1`.
    pub fn boundary_radii(&self) -> Vec<f64> {
        if self.n == 1 {
            vec![1.0]
        } else {
            vec![1.0 / self.radius, self.radius]
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let m = z.norm();
        m <= self.radius && m >= 1.0 / self.radius
    }
}

/// `R_n = R^{1 - 1/n}`.
pub fn exhaustion_radius(domain: &AnnulusDomain, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(AnnulusError::InvalidInput(
            "exhaustion levels start at n = 1".into(),
        ));
    }
    if n == 1 {
        return Ok(1.0);
    }
    Ok(domain.r.powf(1.0 - 1.0 / n as f64))
}

/// Sampling and refinement knobs for sups over circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupConfig {
    /// Samples per circle; `None` picks [`default_samples`] from the degree.
    pub samples: Option<usize>,
    /// Golden-section iterations around each candidate peak.
    pub refine_iterations: usize,
    /// Maximum number of sampled local maxima that get refined.
    pub max_peaks: usize,
}

impl Default for SupConfig {
    fn default() -> Self {
        SupConfig {
            samples: None,
            refine_iterations: 40,
            max_peaks: 16,
        }
    }
}

impl SupConfig {
    pub fn sample_count(&self, degree: usize) -> usize {
        self.samples.unwrap_or_else(|| default_samples(degree).max(64))
    }
}

/// Sup of `|f|` on one circle together with the evidence behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleSup {
    pub radius: f64,
    /// Refined sup estimate.
    pub value: f64,
    /// Angle at which `value` is attained.
    pub argmax: f64,
    /// `|f|` at the uniform sample angles.
    pub moduli: Vec<f64>,
    /// Lipschitz bound on how far the sampled maximum can sit below the true
    /// sup: `(pi / M) r max|f'|`. The refined value closes most of this gap;
    /// the bound is reported, not added.
    pub sampling_gap: f64,
    /// Width of the final golden-section bracket.
    pub refine_width: f64,
}

impl CircleSup {
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.moduli.len() as f64
    }

    pub fn sample_max(&self) -> f64 {
        self.moduli.iter().cloned().fold(0.0, f64::max)
    }
}

/// Samples `|f|` on `r T`, then refines the largest sampled local maxima by
/// golden-section search.
pub fn circle_sup(f: &LaurentSeries, r: f64, cfg: &SupConfig) -> Result<CircleSup> {
    f.check_radius(r)?;
    let m = cfg.sample_count(f.degree());
    let samples = f.sample_unchecked(r, m);
    let moduli: Vec<f64> = samples.values.iter().map(|v| v.norm()).collect();
    let deriv = f.sample_log_derivative_numerator(r, m);
    let max_dfdz = deriv.values.iter().map(|v| v.norm()).fold(0.0, f64::max) / r;
    let h = 2.0 * PI / m as f64;

    let sample_max = moduli.iter().cloned().fold(0.0, f64::max);
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&j| {
            let prev = moduli[(j + m - 1) % m];
            let next = moduli[(j + 1) % m];
            moduli[j] >= prev && moduli[j] >= next && moduli[j] >= 0.9 * sample_max
        })
        .collect();
    peaks.sort_by(|&a, &b| moduli[b].total_cmp(&moduli[a]).then(a.cmp(&b)));
    peaks.truncate(cfg.max_peaks.max(1));

    let mut best = (sample_max, 0.0);
    if let Some(j) = moduli.iter().position(|&v| v == sample_max) {
        best.1 = samples.angle(j);
    }
    let mut width = 2.0 * h;
    let modulus_at = |theta: f64| f.eval_unchecked(Complex64::from_polar(r, theta)).norm();
    for &j in &peaks {
        let theta = samples.angle(j);
        let (val, arg, w) = golden_max(modulus_at, theta - h, theta + h, cfg.refine_iterations);
        width = w;
        if val > best.0 {
            best = (val, arg.rem_euclid(2.0 * PI));
        }
    }

    Ok(CircleSup {
        radius: r,
        value: best.0,
        argmax: best.1,
        moduli,
        sampling_gap: PI / m as f64 * r * max_dfdz,
        refine_width: width,
    })
}

/// Golden-section search for a maximum on `[lo, hi]`. Returns
/// `(value, argument, final bracket width)`.
pub(crate) fn golden_max<G: Fn(f64) -> f64>(
    g: G,
    lo: f64,
    hi: f64,
    iterations: usize,
) -> (f64, f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..iterations {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    if gc > gd {
        (gc, c, b - a)
    } else {
        (gd, d, b - a)
    }
}

/// Sup over `K_n` with the circle where it is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub n: usize,
    pub value: f64,
    pub attained_radius: f64,
    pub argmax: f64,
    pub sampling_gap: f64,
}

pub fn seminorm_detail(
    f: &LaurentSeries,
    domain: &AnnulusDomain,
    n: usize,
    cfg: &SupConfig,
) -> Result<SeminormEstimate> {
    let level = domain.level(n)?;
    if !(f.inner_radius() < 1.0 / level.radius && level.radius < f.outer_radius()) {
        return Err(AnnulusError::Domain(format!(
            "K_{} (radius {}) exceeds the validity annulus ({}, {})",
            n,
            level.radius,
            f.inner_radius(),
            f.outer_radius()
        )));
    }
    let mut best: Option<SeminormEstimate> = None;
    for r in level.boundary_radii() {
        let sup = circle_sup(f, r, cfg)?;
        if best.as_ref().map_or(true, |b| sup.value > b.value) {
            best = Some(SeminormEstimate {
                n,
                value: sup.value,
                attained_radius: r,
                argmax: sup.argmax,
                sampling_gap: sup.sampling_gap,
            });
        }
    }
    Ok(best.expect("at least one boundary circle"))
}

/// `||f||_{inf,n} = sup_{K_n} |f|`.
pub fn seminorm(f: &LaurentSeries, domain: &AnnulusDomain, n: usize) -> Result<f64> {
    Ok(seminorm_detail(f, domain, n, &SupConfig::default())?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricVariant {
    /// `sum 2^-k min(1, ||x - y||_k)`
    Bounded,
    /// `sum 2^-k ||x - y||_k / (1 + ||x - y||_k)`
    Ratio,
}

impl std::str::FromStr for MetricVariant {
    type Err = AnnulusError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded" => Ok(MetricVariant::Bounded),
            "ratio" => Ok(MetricVariant::Ratio),
            other => Err(AnnulusError::InvalidInput(format!(
                "unknown metric variant '{other}' (expected bounded or ratio)"
            ))),
        }
    }
}

/// Partial sum of a Fréchet distance. The true distance lies in
/// `[value, value + tail_bound]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetDistance {
    pub variant: MetricVariant,
    pub k_max: usize,
    pub value: f64,
    pub tail_bound: f64,
    pub seminorms: Vec<f64>,
}

pub fn frechet_distance(
    f: &LaurentSeries,
    g: &LaurentSeries,
    domain: &AnnulusDomain,
    variant: MetricVariant,
    k_max: usize,
) -> Result<FrechetDistance> {
    if k_max == 0 {
        return Err(AnnulusError::InvalidInput("k_max must be at least 1".into()));
    }
    let diff = f.sub(g)?;
    let mut value = 0.0;
    let mut seminorms = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let s = seminorm(&diff, domain, k)?;
        let term = match variant {
            MetricVariant::Bounded => s.min(1.0),
            MetricVariant::Ratio => s / (1.0 + s),
        };
        value += term * 0.5f64.powi(k as i32);
        seminorms.push(s);
    }
    Ok(FrechetDistance {
        variant,
        k_max,
        value,
        tail_bound: 0.5f64.powi(k_max as i32),
        seminorms,
    })
}
