//! Three-circle analysis: circle maximum profiles `M(r)`, the Hadamard
//! log-convexity residual, the structure of the maximal set on a circle, and
//! the test for functions mapping three circles into themselves.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{circle_sup, golden_max, CircleSup, SupConfig};
use crate::error::{AnnulusError, Result};
use crate::laurent::{LaurentSeries, SNAP_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub sup: SupConfig,
    /// Relative distance to the sup that still counts as "attaining" it.
    pub tol_max: f64,
    /// Largest number of separate arcs a finite maximal set may have.
    pub cluster_cap: usize,
    /// Largest arc width, in sample spacings, for a finite maximal set.
    pub w_max_spacings: f64,
    /// `|residual|` below which Hadamard equality is considered.
    pub tol_eq: f64,
    /// Coefficients below this count as zero in monomial detection.
    pub snap: f64,
    /// Relative tolerance on `||f(z)| - r|` in the three-circle test.
    pub rotation_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            sup: SupConfig::default(),
            tol_max: 1e-6,
            cluster_cap: 64,
            w_max_spacings: 3.0,
            tol_eq: 1e-8,
            snap: SNAP_THRESHOLD,
            rotation_tol: 1e-9,
        }
    }
}

/// `M(r)` and the angles where it is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleProfile {
    pub radius: f64,
    pub sup: f64,
    /// Every sample angle when `|f|` is constant on the circle, otherwise one
    /// refined angle per near-maximal arc.
    pub argmax_points: Vec<f64>,
    pub full_circle: bool,
    pub sampling_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaxSetKind {
    FullCircle,
    Finite { points: Vec<f64> },
    Indeterminate { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxSetVerdict {
    #[serde(flatten)]
    pub kind: MaxSetKind,
    pub radius: f64,
    pub rho: f64,
    /// Fraction of samples within `tol_max` of the sup.
    pub evidence: f64,
    pub samples: usize,
}

/// An arc of near-maximal samples (possibly a single refined point).
#[derive(Debug, Clone, PartialEq)]
struct Arc {
    center: f64,
    width: f64,
}

struct NearMax {
    sup: CircleSup,
    rho: f64,
    fraction: f64,
    arcs: Vec<Arc>,
}

fn near_max(f: &LaurentSeries, r: f64, cfg: &AnalysisConfig) -> Result<NearMax> {
    let sup = circle_sup(f, r, &cfg.sup)?;
    let m = sup.moduli.len();
    let h = sup.spacing();
    let rho = sup.value;
    let threshold = rho * (1.0 - cfg.tol_max);
    let near: Vec<bool> = sup.moduli.iter().map(|&v| v >= threshold).collect();
    let count = near.iter().filter(|&&b| b).count();
    let fraction = count as f64 / m as f64;
    if count == m {
        return Ok(NearMax {
            sup,
            rho,
            fraction,
            arcs: Vec::new(),
        });
    }

    // Circular runs of near-maximal samples, starting after a gap.
    let start = near.iter().position(|&b| !b).expect("not every sample is near");
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut j = 0;
    while j < m {
        let idx = (start + j) % m;
        if near[idx] {
            let first = idx;
            let mut len = 0;
            while j < m && near[(start + j) % m] {
                len += 1;
                j += 1;
            }
            runs.push((first, len));
        } else {
            j += 1;
        }
    }

    // Refine sampled local maxima that could hide a near-maximal peak between
    // samples.
    let slack = sup.sampling_gap.max(rho * cfg.tol_max);
    let modulus_at = |theta: f64| f.eval_unchecked(Complex64::from_polar(r, theta)).norm();
    let mut peaks: Vec<f64> = Vec::new();
    for i in 0..m {
        let v = sup.moduli[i];
        let prev = sup.moduli[(i + m - 1) % m];
        let next = sup.moduli[(i + 1) % m];
        if v >= prev && v >= next && v >= rho - slack {
            let theta = 2.0 * PI * i as f64 / m as f64;
            let (val, arg, _) = golden_max(modulus_at, theta - h, theta + h, cfg.sup.refine_iterations);
            if val >= threshold {
                peaks.push(arg.rem_euclid(2.0 * PI));
            }
        }
        if peaks.len() > 4 * cfg.cluster_cap {
            break;
        }
    }

    let mut arcs: Vec<Arc> = runs
        .iter()
        .map(|&(first, len)| Arc {
            center: (first as f64 + (len as f64 - 1.0) / 2.0) * h,
            width: (len as f64 - 1.0) * h,
        })
        .collect();
    for p in peaks {
        let hit = arcs.iter_mut().find(|a| {
            let lo = a.center - a.width / 2.0 - h;
            let d = (p - lo).rem_euclid(2.0 * PI);
            d <= a.width + 2.0 * h
        });
        match hit {
            Some(a) if a.width == 0.0 => a.center = p,
            Some(_) => {}
            None => arcs.push(Arc {
                center: p,
                width: 0.0,
            }),
        }
    }
    for a in arcs.iter_mut() {
        a.center = a.center.rem_euclid(2.0 * PI);
    }
    arcs.sort_by(|a, b| a.center.total_cmp(&b.center));
    Ok(NearMax {
        sup,
        rho,
        fraction,
        arcs,
    })
}

pub fn circle_profile(f: &LaurentSeries, r: f64, cfg: &AnalysisConfig) -> Result<CircleProfile> {
    let nm = near_max(f, r, cfg)?;
    let full = nm.fraction == 1.0;
    let argmax_points = if full {
        let m = nm.sup.moduli.len();
        (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
    } else {
        nm.arcs.iter().map(|a| a.center).collect()
    };
    Ok(CircleProfile {
        radius: r,
        sup: nm.rho,
        argmax_points,
        full_circle: full,
        sampling_gap: nm.sup.sampling_gap,
    })
}

/// Classifies `{xi in rT : |f(xi)| = M(r)}` as the full circle, a finite set,
/// or indeterminate at the current resolution.
pub fn max_modulus_set(f: &LaurentSeries, r: f64, cfg: &AnalysisConfig) -> Result<MaxSetVerdict> {
    if f.is_zero() {
        return Err(AnnulusError::Undefined(
            "maximal set of the zero function".into(),
        ));
    }
    let nm = near_max(f, r, cfg)?;
    let samples = nm.sup.moduli.len();
    if nm.rho == 0.0 {
        return Err(AnnulusError::Undefined(format!(
            "f vanishes identically on |z| = {r}"
        )));
    }
    let kind = if nm.fraction == 1.0 {
        MaxSetKind::FullCircle
    } else {
        let h = nm.sup.spacing();
        let too_wide = nm
            .arcs
            .iter()
            .find(|a| a.width > cfg.w_max_spacings * h + 1e-12);
        if nm.arcs.len() > cfg.cluster_cap {
            MaxSetKind::Indeterminate {
                reason: format!(
                    "{} near-maximal arcs exceed the cap of {}",
                    nm.arcs.len(),
                    cfg.cluster_cap
                ),
            }
        } else if let Some(a) = too_wide {
            MaxSetKind::Indeterminate {
                reason: format!(
                    "near-maximal arc of width {:.3e} rad around {:.6} is wider than {} sample spacings",
                    a.width, a.center, cfg.w_max_spacings
                ),
            }
        } else if nm.arcs.is_empty() {
            MaxSetKind::Indeterminate {
                reason: "no near-maximal sample or refined peak".into(),
            }
        } else {
            MaxSetKind::Finite {
                points: nm.arcs.iter().map(|a| a.center).collect(),
            }
        }
    };
    Ok(MaxSetVerdict {
        kind,
        radius: r,
        rho: nm.rho,
        evidence: nm.fraction,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HadamardCheck {
    pub radii: [f64; 3],
    pub sups: [f64; 3],
    /// RHS minus LHS of the three-circle inequality; nonnegative up to
    /// rounding.
    pub residual: f64,
    pub equality_flag: bool,
    /// `|residual| < tol_eq`, independently of the coefficient test.
    pub residual_small: bool,
    /// `(n, c)` when `f = c z^n` at the snap threshold.
    pub monomial: Option<(i64, [f64; 2])>,
}

fn check_ordered(f: &LaurentSeries, radii: [f64; 3]) -> Result<()> {
    for &r in &radii {
        f.check_radius(r)?;
    }
    if !(radii[0] < radii[1] && radii[1] < radii[2]) {
        return Err(AnnulusError::Domain(format!(
            "radii must be strictly increasing, got {radii:?}"
        )));
    }
    Ok(())
}

/// `log(r3/r2) log M(r1) + log(r2/r1) log M(r3) - log(r3/r1) log M(r2)`.
///
/// Equality holds exactly for `f = c z^n`; the flag requires both a residual
/// below `tol_eq` and a single nonzero coefficient.
pub fn hadamard_residual(
    f: &LaurentSeries,
    r1: f64,
    r2: f64,
    r3: f64,
    cfg: &AnalysisConfig,
) -> Result<HadamardCheck> {
    let radii = [r1, r2, r3];
    check_ordered(f, radii)?;
    let mut sups = [0.0; 3];
    for (s, &r) in sups.iter_mut().zip(&radii) {
        *s = circle_sup(f, r, &cfg.sup)?.value;
        if *s == 0.0 {
            return Err(AnnulusError::Undefined(format!(
                "M({r}) = 0, so f vanishes identically"
            )));
        }
    }
    let residual = (r3 / r2).ln() * sups[0].ln() + (r2 / r1).ln() * sups[2].ln()
        - (r3 / r1).ln() * sups[1].ln();
    let residual_small = residual.abs() < cfg.tol_eq;
    let monomial = f.as_monomial(cfg.snap).map(|(n, c)| (n, [c.re, c.im]));
    Ok(HadamardCheck {
        radii,
        sups,
        residual,
        equality_flag: residual_small && monomial.is_some(),
        residual_small,
        monomial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RotationWitness {
    /// A sample `z` on circle `circle` (1-based) with `|f(z)| != r`.
    Circle {
        circle: usize,
        radius: f64,
        z: [f64; 2],
        modulus: f64,
    },
    /// The circles are preserved yet `f` is not `c z` with `|c| = 1`.
    Structure { support: Vec<i64>, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RotationVerdict {
    IsRotation { c: [f64; 2] },
    No { witness: RotationWitness },
}

/// Checks `f(r_j T) ⊂ r_j T` on samples of three circles and, when it holds,
/// confirms `f = c z` with `|c| = 1` from the coefficients.
pub fn three_circle_rotation_test(
    f: &LaurentSeries,
    r1: f64,
    r2: f64,
    r3: f64,
    cfg: &AnalysisConfig,
) -> Result<RotationVerdict> {
    let radii = [r1, r2, r3];
    check_ordered(f, radii)?;
    let m = cfg.sup.sample_count(f.degree());
    for (j, &r) in radii.iter().enumerate() {
        let samples = f.sample_unchecked(r, m);
        for (i, v) in samples.values.iter().enumerate() {
            let modulus = v.norm();
            if (modulus - r).abs() > cfg.rotation_tol * r {
                let z = samples.point(i);
                return Ok(RotationVerdict::No {
                    witness: RotationWitness::Circle {
                        circle: j + 1,
                        radius: r,
                        z: [z.re, z.im],
                        modulus,
                    },
                });
            }
        }
    }
    let support = f.support(cfg.snap);
    match f.as_monomial(cfg.snap) {
        Some((1, c)) if (c.norm() - 1.0).abs() < cfg.rotation_tol => {
            Ok(RotationVerdict::IsRotation { c: [c.re, c.im] })
        }
        _ => Ok(RotationVerdict::No {
            witness: RotationWitness::Structure {
                support,
                detail: "circle images preserved on samples but f is not c z".into(),
            },
        }),
    }
}

/// CSV of `(r, M(r))` with log columns, for plotting log-convexity.
pub fn profile_csv(f: &LaurentSeries, radii: &[f64], cfg: &AnalysisConfig) -> Result<String> {
    let mut out = String::from("radius,sup_modulus,log_radius,log_sup\n");
    for &r in radii {
        let m = circle_sup(f, r, &cfg.sup)?.value;
        out.push_str(&format!("{},{},{},{}\n", r, m, r.ln(), m.ln()));
    }
    Ok(out)
}
