//! Truncated Laurent series on annuli.
//!
//! A [`LaurentSeries`] stores the dense two-sided coefficient vector
//! `a_{-N}, ..., a_N` of `f(z) = sum a_k z^k` together with the open annulus
//! `inner < |z| < outer` on which evaluation is meaningful. Everything else in
//! the crate is built on the operations here: Horner evaluation, convolution,
//! differentiation and the FFT bridge between coefficients and uniform samples
//! on a circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{AnnulusError, Result};

/// Default truncation order.
pub const DEFAULT_DEGREE: usize = 64;

/// Coefficients smaller than this after a recovery are set to exactly zero.
pub const SNAP_THRESHOLD: f64 = 1e-14;

/// Largest `r^N` (or `r^-N`) accepted when dividing DFT bins back to
/// coefficients.
pub const DEFAULT_DYNAMIC_RANGE: f64 = 1e12;

/// Validity radius assigned to exact Laurent polynomials, which are
/// holomorphic on the whole punctured plane.
pub const POLYNOMIAL_EXTENT: f64 = 1e4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Samples per circle for a series of degree `n`: four-fold oversampling of
/// the `2n + 1` coefficients, rounded up to a power of two.
pub fn default_samples(degree: usize) -> usize {
    (4 * (2 * degree + 1)).next_power_of_two().max(16)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSeries {
    degree: usize,
    coeffs: Vec<Complex64>,
    inner: f64,
    outer: f64,
}

/// Uniform samples `f(r e^{2 pi i j / M})`, `j = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleSamples {
    pub radius: f64,
    pub values: Vec<Complex64>,
}

impl CircleSamples {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Angle of sample `j`.
    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.values.len() as f64
    }

    /// Point `r e^{i theta_j}` of sample `j`.
    pub fn point(&self, j: usize) -> Complex64 {
        Complex64::from_polar(self.radius, self.angle(j))
    }

    /// Samples an arbitrary function on `r T`.
    pub fn from_fn<F: Fn(Complex64) -> Complex64>(radius: f64, count: usize, f: F) -> Self {
        let values = (0..count)
            .map(|j| f(Complex64::from_polar(radius, 2.0 * PI * j as f64 / count as f64)))
            .collect();
        CircleSamples { radius, values }
    }
}

impl LaurentSeries {
    /// Builds a series from `2N + 1` coefficients ordered `k = -N..=N`.
    pub fn new(degree: usize, coeffs: Vec<Complex64>, inner: f64, outer: f64) -> Result<Self> {
        if coeffs.len() != 2 * degree + 1 {
            return Err(AnnulusError::InvalidInput(format!(
                "expected {} coefficients for N = {}, got {}",
                2 * degree + 1,
                degree,
                coeffs.len()
            )));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(AnnulusError::InvalidInput(format!(
                "coefficient at index {} is not finite",
                k as i64 - degree as i64
            )));
        }
        check_annulus(inner, outer)?;
        Ok(LaurentSeries {
            degree,
            coeffs,
            inner,
            outer,
        })
    }

    /// Laurent polynomial from explicit coefficients, valid on the default
    /// polynomial annulus.
    pub fn from_coeffs(degree: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        Self::new(degree, coeffs, 1.0 / POLYNOMIAL_EXTENT, POLYNOMIAL_EXTENT)
    }

    pub fn zero(degree: usize) -> Self {
        LaurentSeries {
            degree,
            coeffs: vec![ZERO; 2 * degree + 1],
            inner: 1.0 / POLYNOMIAL_EXTENT,
            outer: POLYNOMIAL_EXTENT,
        }
    }

    /// `c z^k`.
    pub fn monomial(k: i64, c: Complex64) -> Self {
        let mut s = Self::zero(k.unsigned_abs() as usize);
        s.set(k, c);
        s
    }

    /// `z^k`, the basis element `e_k`.
    pub fn basis(k: i64) -> Self {
        Self::monomial(k, Complex64::new(1.0, 0.0))
    }

    /// Sum of `c z^k` over the given terms; repeated indices accumulate.
    pub fn from_terms(terms: &[(i64, Complex64)]) -> Self {
        let degree = terms
            .iter()
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut s = Self::zero(degree);
        for &(k, c) in terms {
            let idx = s.index(k);
            s.coeffs[idx] += c;
        }
        s
    }

    /// Same coefficients, different validity annulus.
    pub fn with_validity(mut self, inner: f64, outer: f64) -> Result<Self> {
        check_annulus(inner, outer)?;
        self.inner = inner;
        self.outer = outer;
        Ok(self)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer
    }

    /// Coefficients ordered `k = -N..=N`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn index(&self, k: i64) -> usize {
        (k + self.degree as i64) as usize
    }

    /// `a_k`, zero outside the stored range.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.degree {
            ZERO
        } else {
            self.coeffs[self.index(k)]
        }
    }

    /// Sets `a_k`, widening the truncation if needed.
    pub fn set(&mut self, k: i64, c: Complex64) {
        let need = k.unsigned_abs() as usize;
        if need > self.degree {
            *self = self.resized(need);
        }
        let idx = self.index(k);
        self.coeffs[idx] = c;
    }

    /// Iterator over `(k, a_k)`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.degree as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - n, c))
    }

    /// Whether `|z|` lies in the open validity annulus.
    pub fn contains_radius(&self, r: f64) -> bool {
        r > self.inner && r < self.outer
    }

    pub fn check_radius(&self, r: f64) -> Result<()> {
        if self.contains_radius(r) {
            Ok(())
        } else {
            Err(AnnulusError::Domain(format!(
                "radius {} outside validity annulus ({}, {})",
                r, self.inner, self.outer
            )))
        }
    }

    /// `f(z)` by two-sided Horner: ascending powers at `z`, negative powers at
    /// `1/z`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.check_radius(z.norm())?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let n = self.degree;
        let mut pos = ZERO;
        for c in self.coeffs[n..].iter().rev() {
            pos = pos * z + c;
        }
        if n == 0 {
            return pos;
        }
        let w = z.inv();
        let mut neg = ZERO;
        for c in self.coeffs[..n].iter() {
            neg = (neg + c) * w;
        }
        pos + neg
    }

    /// Copy truncated or zero-padded to degree `degree`.
    pub fn resized(&self, degree: usize) -> Self {
        let mut out = vec![ZERO; 2 * degree + 1];
        let keep = self.degree.min(degree) as i64;
        for k in -keep..=keep {
            out[(k + degree as i64) as usize] = self.coeff(k);
        }
        LaurentSeries {
            degree,
            coeffs: out,
            inner: self.inner,
            outer: self.outer,
        }
    }

    /// Multiplies by `z^n`; the degree grows by `|n|` so nothing is lost.
    pub fn shifted(&self, n: i64) -> Self {
        let degree = self.degree + n.unsigned_abs() as usize;
        let mut out = Self::zero(degree);
        out.inner = self.inner;
        out.outer = self.outer;
        for (k, c) in self.terms() {
            let idx = out.index(k + n);
            out.coeffs[idx] = c;
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        LaurentSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            ..self.clone()
        }
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        let (inner, outer) = intersect(self, other)?;
        let degree = self.degree.max(other.degree);
        let n = degree as i64;
        let coeffs = (-n..=n)
            .map(|k| self.coeff(k) + other.coeff(k) * sign)
            .collect();
        Ok(LaurentSeries {
            degree,
            coeffs,
            inner,
            outer,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    /// Coefficient convolution. Degree `N_f + N_g`, validity the intersection.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let (inner, outer) = intersect(self, other)?;
        let degree = self.degree + other.degree;
        let mut coeffs = vec![ZERO; 2 * degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Ok(LaurentSeries {
            degree,
            coeffs,
            inner,
            outer,
        })
    }

    /// `f'`: `k a_k` moves to index `k - 1`; degree `N + 1`.
    pub fn differentiate(&self) -> Self {
        let degree = self.degree + 1;
        let mut out = Self::zero(degree);
        out.inner = self.inner;
        out.outer = self.outer;
        for (k, c) in self.terms() {
            if k != 0 {
                let idx = out.index(k - 1);
                out.coeffs[idx] = c * k as f64;
            }
        }
        out
    }

    /// Antiderivative of a series whose `z^-1` coefficient is (numerically)
    /// zero; the constant term is set to `constant`. Returns the dropped
    /// residue alongside.
    pub fn antiderivative(&self, constant: Complex64) -> (Self, Complex64) {
        let degree = self.degree + 1;
        let mut out = Self::zero(degree);
        out.inner = self.inner;
        out.outer = self.outer;
        let mut residue = ZERO;
        for (k, c) in self.terms() {
            if k == -1 {
                residue = c;
            } else {
                let idx = out.index(k + 1);
                out.coeffs[idx] = c / (k + 1) as f64;
            }
        }
        let idx = out.index(0);
        out.coeffs[idx] = constant;
        (out, residue)
    }

    /// Zeroes every coefficient with modulus below `threshold`.
    pub fn snapped(&self, threshold: f64) -> Self {
        LaurentSeries {
            coeffs: self
                .coeffs
                .iter()
                .map(|&c| if c.norm() < threshold { ZERO } else { c })
                .collect(),
            ..self.clone()
        }
    }

    /// Indices whose coefficient modulus exceeds `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<i64> {
        self.terms()
            .filter(|(_, c)| c.norm() > threshold)
            .map(|(k, _)| k)
            .collect()
    }

    /// `Some((n, c))` when exactly one coefficient exceeds `threshold`.
    pub fn as_monomial(&self, threshold: f64) -> Option<(i64, Complex64)> {
        match self.support(threshold).as_slice() {
            [k] => Some((*k, self.coeff(*k))),
            _ => None,
        }
    }

    /// Largest coefficientwise difference over the union of index ranges.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let n = self.degree.max(other.degree) as i64;
        (-n..=n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Uniform samples of the truncated series on `r T` via one FFT. Exact for
    /// any `count`: coefficients are folded modulo `count` first.
    pub fn sample(&self, r: f64, count: usize) -> Result<CircleSamples> {
        self.check_radius(r)?;
        Ok(self.sample_unchecked(r, count))
    }

    pub(crate) fn sample_unchecked(&self, r: f64, count: usize) -> CircleSamples {
        let weighted: Vec<(i64, Complex64)> = self
            .terms()
            .map(|(k, c)| (k, c * r.powi(k as i32)))
            .collect();
        CircleSamples {
            radius: r,
            values: synthesize(&weighted, count),
        }
    }

    /// Samples of `z f'(z)` on `r T`, the integrand of the winding integral.
    pub(crate) fn sample_log_derivative_numerator(&self, r: f64, count: usize) -> CircleSamples {
        let weighted: Vec<(i64, Complex64)> = self
            .terms()
            .map(|(k, c)| (k, c * (k as f64) * r.powi(k as i32)))
            .collect();
        CircleSamples {
            radius: r,
            values: synthesize(&weighted, count),
        }
    }

    /// Recovers a series of degree `degree` from samples on one circle.
    pub fn from_circle_samples(
        samples: &CircleSamples,
        degree: usize,
        inner: f64,
        outer: f64,
    ) -> Result<Self> {
        let coeffs = recover_coefficients(samples, degree, DEFAULT_DYNAMIC_RANGE)?;
        Self::new(degree, coeffs, inner, outer)
    }

    /// Series of `g(f(z))` obtained by sampling `f` on `r T`, applying `g`
    /// pointwise and recovering `degree` coefficients. Used for functions of a
    /// two-sided series that have no finite convolution formula (`exp`,
    /// reciprocal).
    pub fn map_on_circle<G: Fn(Complex64) -> Complex64>(
        &self,
        g: G,
        r: f64,
        degree: usize,
        count: usize,
    ) -> Result<Self> {
        let mut samples = self.sample(r, count)?;
        for v in samples.values.iter_mut() {
            *v = g(*v);
        }
        Self::from_circle_samples(&samples, degree, self.inner, self.outer)
    }

    /// `exp(f)` for a one-sided series (no negative powers), through the
    /// recurrence `(k+1) y_{k+1} = sum_j (j+1) f_{j+1} y_{k-j}` that follows
    /// from `y' = f' y`.
    pub fn exp_one_sided(&self, degree: usize) -> Result<Self> {
        if let Some((k, _)) = self.terms().find(|&(k, c)| k < 0 && c != ZERO) {
            return Err(AnnulusError::InvalidInput(format!(
                "exp_one_sided needs a power series, found a nonzero coefficient at index {k}"
            )));
        }
        let fp: Vec<Complex64> = (0..=degree as i64)
            .map(|j| self.coeff(j + 1) * (j + 1) as f64)
            .collect();
        let mut y = vec![ZERO; degree + 1];
        y[0] = self.coeff(0).exp();
        for k in 0..degree {
            let mut acc = ZERO;
            for j in 0..=k {
                acc += fp[j] * y[k - j];
            }
            y[k + 1] = acc / (k + 1) as f64;
        }
        let mut coeffs = vec![ZERO; degree];
        coeffs.extend(y);
        Self::new(degree, coeffs, self.inner, self.outer)
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            degree: self.degree,
            inner: self.inner,
            outer: self.outer,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_json(json: &SeriesJson) -> Result<Self> {
        let coeffs = json
            .coeffs
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Self::new(json.degree, coeffs, json.inner, json.outer)
    }
}

/// On-disk form of a series: `{"N", "inner", "outer", "coeffs": [[re, im], ...]}`
/// with coefficients ordered `k = -N..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    #[serde(rename = "N")]
    pub degree: usize,
    pub inner: f64,
    pub outer: f64,
    pub coeffs: Vec<[f64; 2]>,
}

impl Serialize for LaurentSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = SeriesJson::deserialize(d)?;
        LaurentSeries::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// Complex number uniform in the disc of radius `scale`.
pub fn random_in_disc<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Complex64 {
    let rho = scale * rng.gen::<f64>().sqrt();
    Complex64::from_polar(rho, 2.0 * PI * rng.gen::<f64>())
}

/// Laurent polynomial of degree `degree` with every coefficient uniform in the
/// disc of radius `scale`.
pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, degree: usize, scale: f64) -> LaurentSeries {
    let coeffs = (0..2 * degree + 1).map(|_| random_in_disc(rng, scale)).collect();
    LaurentSeries {
        degree,
        coeffs,
        inner: 1.0 / POLYNOMIAL_EXTENT,
        outer: POLYNOMIAL_EXTENT,
    }
}

fn check_annulus(inner: f64, outer: f64) -> Result<()> {
    if !(inner > 0.0 && inner < 1.0 && outer > 1.0 && outer.is_finite()) {
        return Err(AnnulusError::InvalidInput(format!(
            "validity annulus needs 0 < inner < 1 < outer < inf, got ({inner}, {outer})"
        )));
    }
    Ok(())
}

fn intersect(a: &LaurentSeries, b: &LaurentSeries) -> Result<(f64, f64)> {
    let inner = a.inner.max(b.inner);
    let outer = a.outer.min(b.outer);
    if inner >= outer {
        return Err(AnnulusError::Domain(format!(
            "validity annuli ({}, {}) and ({}, {}) do not intersect",
            a.inner, a.outer, b.inner, b.outer
        )));
    }
    Ok((inner, outer))
}

/// `values_j = sum_k c_k w^{jk}` with `w = e^{2 pi i / count}`.
fn synthesize(weighted: &[(i64, Complex64)], count: usize) -> Vec<Complex64> {
    let mut buf = vec![ZERO; count];
    let m = count as i64;
    for &(k, c) in weighted {
        buf[k.rem_euclid(m) as usize] += c;
    }
    let fft = FftPlanner::new().plan_fft_inverse(count);
    fft.process(&mut buf);
    buf
}

/// `a_k r^k` is the `k`-th discrete Fourier coefficient of the samples; the
/// division by `r^k` is refused when it would amplify beyond `dynamic_range`.
pub fn recover_coefficients(
    samples: &CircleSamples,
    degree: usize,
    dynamic_range: f64,
) -> Result<Vec<Complex64>> {
    let m = samples.values.len();
    if m < 2 * (2 * degree + 1) {
        return Err(AnnulusError::InvalidInput(format!(
            "{} samples cannot resolve degree {} (need at least {})",
            m,
            degree,
            2 * (2 * degree + 1)
        )));
    }
    let r = samples.radius;
    let range = r.powi(degree as i32).max(r.powi(-(degree as i32)));
    if !(range <= dynamic_range) {
        return Err(AnnulusError::IllConditioned {
            radius: r,
            degree,
            range,
            bound: dynamic_range,
        });
    }
    let mut buf = samples.values.clone();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    let n = degree as i64;
    Ok((-n..=n)
        .map(|k| {
            let c = buf[k.rem_euclid(m as i64) as usize] * scale / r.powi(k as i32);
            if c.norm() < SNAP_THRESHOLD {
                ZERO
            } else {
                c
            }
        })
        .collect())
}
