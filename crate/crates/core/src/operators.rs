//! Weighted composition operators `T_{α,β} f(z) = α f(βz)` and
//! `S_{α,β} f(z) = α f(β/z)`, finite matrix models of general operators on
//! `Hol(A)`, the composition-operator test `T e_n = (T e_1)^n`, the isometry
//! classifier, and the Cayley-conjugated half-plane isometries.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{seminorm, AnnulusDomain};
use crate::error::{AnnulusError, Result};
use crate::factorization::{min_modulus, winding_number};
use crate::laurent::{default_samples, random_in_disc, random_polynomial, LaurentSeries};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Allowed drift of `|α|`, `|β|` from 1.
pub const UNIMODULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositionKind {
    Rotation,
    Inversion,
}

impl std::str::FromStr for CompositionKind {
    type Err = AnnulusError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotation" | "T" => Ok(CompositionKind::Rotation),
            "inversion" | "S" => Ok(CompositionKind::Inversion),
            other => Err(AnnulusError::InvalidInput(format!(
                "unknown operator kind {other:?} (expected rotation or inversion)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedComposition {
    kind: CompositionKind,
    alpha: Complex64,
    beta: Complex64,
}

fn check_unimodular(name: &str, c: Complex64) -> Result<()> {
    if !c.re.is_finite() || !c.im.is_finite() || (c.norm() - 1.0).abs() >= UNIMODULAR_TOL {
        return Err(AnnulusError::InvalidInput(format!(
            "{name} = {c} is not unimodular (|{name}| = {})",
            c.norm()
        )));
    }
    Ok(())
}

impl WeightedComposition {
    pub fn new(kind: CompositionKind, alpha: Complex64, beta: Complex64) -> Result<Self> {
        check_unimodular("alpha", alpha)?;
        check_unimodular("beta", beta)?;
        Ok(WeightedComposition { kind, alpha, beta })
    }

    pub fn rotation(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(CompositionKind::Rotation, alpha, beta)
    }

    pub fn inversion(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(CompositionKind::Inversion, alpha, beta)
    }

    pub fn kind(&self) -> CompositionKind {
        self.kind
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// `α β^k`, the weight picked up by `e_k`.
    pub fn weight(&self, k: i64) -> Complex64 {
        self.alpha * self.beta.powi(k as i32)
    }

    /// Index that `e_k` is sent to.
    pub fn target(&self, k: i64) -> i64 {
        match self.kind {
            CompositionKind::Rotation => k,
            CompositionKind::Inversion => -k,
        }
    }

    /// Exact coefficient map; rotations keep the validity annulus, inversions
    /// reflect it through the unit circle.
    pub fn apply(&self, f: &LaurentSeries) -> LaurentSeries {
        let n = f.degree();
        let mut coeffs = vec![ZERO; 2 * n + 1];
        for (k, a) in f.terms() {
            coeffs[(self.target(k) + n as i64) as usize] = self.weight(k) * a;
        }
        let (inner, outer) = match self.kind {
            CompositionKind::Rotation => (f.inner_radius(), f.outer_radius()),
            CompositionKind::Inversion => (1.0 / f.outer_radius(), 1.0 / f.inner_radius()),
        };
        LaurentSeries::new(n, coeffs, inner, outer).expect("coefficient map preserves validity")
    }
}

/// Operator on coefficient vectors indexed `-N..=N`, stored row-major; column
/// `j` is the image of `e_{j-N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    degree: usize,
    entries: Vec<Complex64>,
    trusted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(rename = "N")]
    pub degree: usize,
    pub entries: Vec<[f64; 2]>,
    #[serde(rename = "N_trust", default, skip_serializing_if = "Option::is_none")]
    pub trusted: Option<usize>,
}

impl OperatorMatrix {
    pub fn new(degree: usize, entries: Vec<Complex64>) -> Result<Self> {
        let dim = 2 * degree + 1;
        if entries.len() != dim * dim {
            return Err(AnnulusError::InvalidInput(format!(
                "matrix for N = {degree} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(AnnulusError::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(OperatorMatrix {
            degree,
            entries,
            trusted: degree / 2,
        })
    }

    /// Trust the matrix on inputs of degree at most `trusted` (< N).
    pub fn with_trusted(mut self, trusted: usize) -> Result<Self> {
        if trusted >= self.degree.max(1) {
            return Err(AnnulusError::InvalidInput(format!(
                "N_trust = {trusted} must be below N = {}",
                self.degree
            )));
        }
        self.trusted = trusted;
        Ok(self)
    }

    /// Matrix whose column for `e_k` is `column(k)`, truncated to `-N..=N`.
    pub fn from_columns<F: Fn(i64) -> LaurentSeries>(degree: usize, column: F) -> Self {
        let dim = 2 * degree + 1;
        let n = degree as i64;
        let mut entries = vec![ZERO; dim * dim];
        for j in 0..dim {
            let image = column(j as i64 - n);
            for (k, c) in image.terms() {
                if k.abs() <= n {
                    entries[(k + n) as usize * dim + j] = c;
                }
            }
        }
        OperatorMatrix {
            degree,
            entries,
            trusted: degree / 2,
        }
    }

    pub fn from_operator(op: &WeightedComposition, degree: usize) -> Self {
        Self::from_columns(degree, |k| op.apply(&LaurentSeries::basis(k)))
    }

    pub fn identity(degree: usize) -> Self {
        Self::from_columns(degree, LaurentSeries::basis)
    }

    /// `f ↦ f'`.
    pub fn differentiation(degree: usize) -> Self {
        Self::from_columns(degree, |k| LaurentSeries::monomial(k - 1, Complex64::new(k as f64, 0.0)))
    }

    /// `f(z) ↦ f(βz)` for an arbitrary (not necessarily unimodular) `β`.
    pub fn dilation(degree: usize, beta: Complex64) -> Self {
        Self::from_columns(degree, |k| LaurentSeries::monomial(k, beta.powi(k as i32)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        OperatorMatrix {
            degree: self.degree,
            entries: self.entries.iter().map(|e| e * c).collect(),
            trusted: self.trusted,
        }
    }

    /// Adds `eps` times an entrywise perturbation uniform in the unit disc.
    pub fn perturbed(&self, eps: f64, rng: &mut ChaCha8Rng) -> Self {
        OperatorMatrix {
            degree: self.degree,
            entries: self
                .entries
                .iter()
                .map(|e| e + random_in_disc(rng, eps))
                .collect(),
            trusted: self.trusted,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn trusted(&self) -> usize {
        self.trusted
    }

    pub fn dim(&self) -> usize {
        2 * self.degree + 1
    }

    /// Entry mapping the coefficient of `e_col` to the coefficient of `e_row`.
    pub fn entry(&self, row: i64, col: i64) -> Complex64 {
        let n = self.degree as i64;
        self.entries[(row + n) as usize * self.dim() + (col + n) as usize]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Image of `e_k` as a series of degree `N` on `validity`.
    pub fn column(&self, k: i64, validity: (f64, f64)) -> Result<LaurentSeries> {
        let n = self.degree as i64;
        if k.abs() > n {
            return Err(AnnulusError::InvalidInput(format!(
                "basis index {k} outside the matrix range ±{n}"
            )));
        }
        let coeffs = (-n..=n).map(|row| self.entry(row, k)).collect();
        LaurentSeries::new(self.degree, coeffs, validity.0, validity.1)
    }

    /// `M f`; `f` must fit in the matrix range. The result is placed on the
    /// symmetric annulus contained in the validity of `f`.
    pub fn apply(&self, f: &LaurentSeries) -> Result<LaurentSeries> {
        let n = self.degree as i64;
        if let Some((k, _)) = f.terms().find(|&(k, c)| k.abs() > n && c != ZERO) {
            return Err(AnnulusError::InvalidInput(format!(
                "input has a nonzero coefficient at index {k}, beyond the matrix range ±{n}"
            )));
        }
        let dim = self.dim();
        let x: Vec<Complex64> = (-n..=n).map(|k| f.coeff(k)).collect();
        let y: Vec<Complex64> = (0..dim)
            .map(|i| {
                self.entries[i * dim..(i + 1) * dim]
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        let r = f.outer_radius().min(1.0 / f.inner_radius());
        LaurentSeries::new(self.degree, y, 1.0 / r, r)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.degree != other.degree {
            return Err(AnnulusError::InvalidInput(format!(
                "cannot compose matrices with N = {} and N = {}",
                self.degree, other.degree
            )));
        }
        let dim = self.dim();
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            for l in 0..dim {
                let a = self.entries[i * dim + l];
                if a == ZERO {
                    continue;
                }
                for j in 0..dim {
                    entries[i * dim + j] += a * other.entries[l * dim + j];
                }
            }
        }
        Ok(OperatorMatrix {
            degree: self.degree,
            entries,
            trusted: self.trusted.min(other.trusted),
        })
    }

    pub fn max_entry_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry difference restricted to columns `|k| ≤ N_trust`.
    pub fn max_trusted_diff(&self, other: &Self) -> f64 {
        let n = self.degree as i64;
        let t = self.trusted.min(other.trusted) as i64;
        let mut worst: f64 = 0.0;
        for row in -n..=n {
            for col in -t..=t {
                worst = worst.max((self.entry(row, col) - other.entry(row, col)).norm());
            }
        }
        worst
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            degree: self.degree,
            entries: self.entries.iter().map(|c| [c.re, c.im]).collect(),
            trusted: (self.trusted != self.degree / 2).then_some(self.trusted),
        }
    }

    pub fn from_json(json: &MatrixJson) -> Result<Self> {
        let entries = json.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        let m = Self::new(json.degree, entries)?;
        match json.trusted {
            Some(t) => m.with_trusted(t),
            None => Ok(m),
        }
    }
}

impl Serialize for OperatorMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        OperatorMatrix::from_json(&json).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CompositionVerdict {
    Yes { symbol: LaurentSeries },
    No { n: i64, deviation: f64 },
}

/// Checks whether `M` acts as `f ↦ f ∘ φ` with `φ = M e_1`.
///
/// Positive powers are checked first (`n = 2..n_max`), then `n = -1..-n_max`
/// through `1/φ`, and finally `M e_0 = e_0`. A failure reports the first
/// offending `n` and the coefficient deviation, which counts any part of
/// `φ^n` falling outside the matrix range.
pub fn composition_operator_test(
    m: &OperatorMatrix,
    domain: &AnnulusDomain,
    n_max: usize,
    tol: f64,
) -> Result<CompositionVerdict> {
    if n_max > m.trusted() {
        return Err(AnnulusError::InvalidInput(format!(
            "n_max = {n_max} exceeds N_trust = {}",
            m.trusted()
        )));
    }
    let r = domain.outer_radius();
    let validity = (1.0 / r, r);
    let phi = m.column(1, validity)?;

    let deviation = |power: &LaurentSeries, k: i64| -> Result<f64> {
        let col = m.column(k, validity)?;
        let nd = m.degree() as i64;
        let mut worst: f64 = 0.0;
        for (j, c) in power.terms() {
            let target = if j.abs() <= nd { col.coeff(j) } else { ZERO };
            worst = worst.max((c - target).norm());
        }
        for j in -nd..=nd {
            if j.unsigned_abs() as usize > power.degree() {
                worst = worst.max(col.coeff(j).norm());
            }
        }
        Ok(worst)
    };

    let mut power = phi.clone();
    for n in 2..=n_max as i64 {
        power = power.multiply(&phi)?;
        let d = deviation(&power, n)?;
        if d > tol {
            return Ok(CompositionVerdict::No { n, deviation: d });
        }
    }

    if n_max >= 1 {
        let inverse = reciprocal(&phi, domain)?;
        let mut power = inverse.clone();
        for n in 1..=n_max as i64 {
            if n > 1 {
                power = power.multiply(&inverse)?;
            }
            let d = deviation(&power, -n)?;
            if d > tol {
                return Ok(CompositionVerdict::No { n: -n, deviation: d });
            }
        }
    }

    let d = deviation(&LaurentSeries::basis(0), 0)?;
    if d > tol {
        return Ok(CompositionVerdict::No { n: 0, deviation: d });
    }
    Ok(CompositionVerdict::Yes { symbol: phi.snapped(tol) })
}

/// Radii where the symbol must be free of zeros before `1/φ` is formed.
fn reciprocal(phi: &LaurentSeries, domain: &AnnulusDomain) -> Result<LaurentSeries> {
    let rho = domain.outer_radius().powf(7.0 / 8.0);
    let radii = [1.0 / rho, 1.0, rho];
    let mut windings = Vec::new();
    for &r in &radii {
        let mm = min_modulus(phi, r)?;
        if mm <= 1e-8 {
            return Err(AnnulusError::SymbolNotInvertible {
                radius: r,
                min_modulus: mm,
            });
        }
        let w = winding_number(phi, r).map_err(|_| AnnulusError::SymbolNotInvertible {
            radius: r,
            min_modulus: mm,
        })?;
        windings.push(w);
    }
    if windings.iter().any(|&w| w != windings[0]) {
        return Err(AnnulusError::SymbolNotInvertible {
            radius: 1.0,
            min_modulus: min_modulus(phi, 1.0)?,
        });
    }
    let degree = phi.degree();
    phi.map_on_circle(|v| ONE / v, 1.0, degree, default_samples(degree))?
        .with_validity(1.0 / rho, rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig {
    pub n_levels: usize,
    pub probes: usize,
    /// Absolute tolerance on structural coefficients and relative tolerance on
    /// seminorm ratios.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            n_levels: 6,
            probes: 8,
            tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClassificationWitness {
    /// `‖M f‖_{∞,n} ≠ ‖f‖_{∞,n}` for the probe `f`.
    Seminorm {
        probe: LaurentSeries,
        level: usize,
        image_norm: f64,
        norm: f64,
    },
    /// The image of `e_k` deviates from the predicted form.
    Structural { k: i64, deviation: f64, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ClassificationResult {
    Rotation { alpha: [f64; 2], beta: [f64; 2] },
    Inversion { alpha: [f64; 2], beta: [f64; 2] },
    NotIsometry { witness: ClassificationWitness },
}

impl ClassificationResult {
    /// The recovered operator for a positive verdict.
    pub fn operator(&self) -> Option<WeightedComposition> {
        let c = |v: &[f64; 2]| Complex64::new(v[0], v[1]);
        match self {
            ClassificationResult::Rotation { alpha, beta } => {
                WeightedComposition::rotation(c(alpha), c(beta)).ok()
            }
            ClassificationResult::Inversion { alpha, beta } => {
                WeightedComposition::inversion(c(alpha), c(beta)).ok()
            }
            ClassificationResult::NotIsometry { .. } => None,
        }
    }
}

fn not_isometry(witness: ClassificationWitness) -> Result<ClassificationResult> {
    Ok(ClassificationResult::NotIsometry { witness })
}

/// Decides whether `M` is `T_{α,β}` or `S_{α,β}` on its trusted range.
///
/// 1. `M e_0` must be a unimodular constant `α`.
/// 2. `M e_1` must be `c e_1` or `c e_{-1}` with `|c| = 1`; this fixes the
///    kind and `β = c/α`.
/// 3. `M e_k = α β^k e_{±k}` for every `|k| ≤ N_trust`.
/// 4. Seminorms `n = 1..n_levels` are preserved on seeded random probes.
pub fn isometry_classify(
    m: &OperatorMatrix,
    domain: &AnnulusDomain,
    cfg: &ClassifyConfig,
) -> Result<ClassificationResult> {
    if m.trusted() < 4 {
        return Err(AnnulusError::Truncation {
            trusted: m.trusted(),
            required: 4,
        });
    }
    if cfg.n_levels < 4 {
        return Err(AnnulusError::InvalidInput(format!(
            "n_levels = {} but at least 4 levels are required",
            cfg.n_levels
        )));
    }
    let r = domain.outer_radius();
    let validity = (1.0 / r, r);
    let tol = cfg.tol;

    // Step 1.
    let f0 = m.column(0, validity)?;
    let norm0 = seminorm(&f0, domain, 1)?;
    if (norm0 - 1.0).abs() > tol {
        return not_isometry(ClassificationWitness::Seminorm {
            probe: LaurentSeries::basis(0),
            level: 1,
            image_norm: norm0,
            norm: 1.0,
        });
    }
    let alpha = f0.coeff(0);
    let off = f0.terms().filter(|&(k, _)| k != 0).map(|(_, c)| c.norm()).fold(0.0, f64::max);
    if off > tol || (alpha.norm() - 1.0).abs() > tol {
        return not_isometry(ClassificationWitness::Structural {
            k: 0,
            deviation: off.max((alpha.norm() - 1.0).abs()),
            detail: "image of e_0 is not a unimodular constant".into(),
        });
    }

    // Step 2.
    let f1 = m.column(1, validity)?;
    let support = f1.support(tol);
    let kind = match support.as_slice() {
        [1] => CompositionKind::Rotation,
        [-1] => CompositionKind::Inversion,
        s if s.contains(&1) && s.contains(&-1) => {
            return not_isometry(ClassificationWitness::Structural {
                k: 1,
                deviation: f1.coeff(1).norm().min(f1.coeff(-1).norm()),
                detail: "image of e_1 mixes e_1 and e_-1".into(),
            })
        }
        _ => {
            let main = f1.coeff(1).norm().max(f1.coeff(-1).norm());
            let rest = f1
                .terms()
                .filter(|&(k, _)| k.abs() != 1)
                .map(|(_, c)| c.norm())
                .fold(0.0, f64::max);
            return not_isometry(ClassificationWitness::Structural {
                k: 1,
                deviation: if main > tol { rest } else { 1.0 },
                detail: format!("image of e_1 has support {support:?}"),
            });
        }
    };
    let target = if kind == CompositionKind::Rotation { 1 } else { -1 };
    let c1 = f1.coeff(target);
    if (c1.norm() - 1.0).abs() > tol {
        return not_isometry(ClassificationWitness::Structural {
            k: 1,
            deviation: (c1.norm() - 1.0).abs(),
            detail: format!("coefficient of e_1's image has modulus {}", c1.norm()),
        });
    }
    let beta = c1 / alpha;
    let op = WeightedComposition {
        kind,
        alpha: alpha / alpha.norm(),
        beta: beta / beta.norm(),
    };

    // Step 3.
    let t = m.trusted() as i64;
    for k in (0..=t).flat_map(|k| if k == 0 { vec![0] } else { vec![k, -k] }) {
        let col = m.column(k, validity)?;
        let mut predicted = LaurentSeries::zero(m.degree());
        predicted.set(op.target(k), alpha * beta.powi(k as i32));
        let d = col.max_coeff_diff(&predicted);
        if d > tol {
            return not_isometry(ClassificationWitness::Structural {
                k,
                deviation: d,
                detail: format!("image of e_{k} differs from alpha beta^k e_{}", op.target(k)),
            });
        }
    }

    // Step 4.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let probes: Vec<LaurentSeries> = (0..cfg.probes)
        .map(|i| {
            let degree = 1 + (i % m.trusted());
            random_polynomial(&mut rng, degree, 1.0)
        })
        .collect();
    let failure = probes
        .par_iter()
        .map(|probe| -> Result<Option<ClassificationWitness>> {
            let image = m.apply(probe)?;
            for level in 1..=cfg.n_levels {
                let norm = seminorm(probe, domain, level)?;
                let image_norm = seminorm(&image, domain, level)?;
                if (image_norm - norm).abs() > tol * norm {
                    return Ok(Some(ClassificationWitness::Seminorm {
                        probe: probe.clone(),
                        level,
                        image_norm,
                        norm,
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .next();
    if let Some(w) = failure {
        return not_isometry(w);
    }

    let a = [alpha.re, alpha.im];
    let b = [beta.re, beta.im];
    Ok(match kind {
        CompositionKind::Rotation => ClassificationResult::Rotation { alpha: a, beta: b },
        CompositionKind::Inversion => ClassificationResult::Inversion { alpha: a, beta: b },
    })
}

/// Cayley transform `τ(z) = (1+z)/(1-z)` from the unit disc onto the right
/// half-plane.
pub fn cayley(z: Complex64) -> Complex64 {
    (ONE + z) / (ONE - z)
}

pub fn cayley_inverse(w: Complex64) -> Complex64 {
    (w - ONE) / (w + ONE)
}

/// `α F(τ(β τ⁻¹(w)))`, the half-plane isometry conjugate to `T_{α,β}`.
pub fn cayley_conjugate_eval<F: Fn(Complex64) -> Complex64>(
    alpha: Complex64,
    beta: Complex64,
    f: F,
    w: Complex64,
) -> Result<Complex64> {
    check_unimodular("alpha", alpha)?;
    check_unimodular("beta", beta)?;
    if !(w.re > 0.0) || !w.im.is_finite() {
        return Err(AnnulusError::Domain(format!(
            "w = {w} is not in the right half-plane"
        )));
    }
    let u = beta * cayley_inverse(w);
    if u.norm() >= 1.0 {
        return Err(AnnulusError::Domain(format!(
            "rotated preimage {u} left the unit disc"
        )));
    }
    Ok(alpha * f(cayley(u)))
}
