//! Deterministic fixture corpus. All randomness comes from one ChaCha8
//! stream seeded by `--seed`, and every file is hashed into `manifest.json`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{write_atomic, RunConfig};
use crate::error::{AnnulusError, Result};
use crate::factorization::{blaschke, synthesize_unimodular};
use crate::laurent::{random_polynomial, CircleSamples, LaurentSeries};
use crate::operators::{OperatorMatrix, WeightedComposition};

pub const RANDOM_SERIES: usize = 8;
pub const RANDOM_OPERATORS: usize = 3;
pub const PERTURBATIONS: usize = 4;
pub const SYNTHESIZED: usize = 4;
pub const PERTURBATION_EPS: f64 = 1e-3;
pub const DILATION_MODULUS: f64 = 0.9;
/// Degree of the recovered `exp(z - 1/z)`; `J_k(2)` is below `1e-35` there.
pub const EXP_DEGREE: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub kind: &'static str,
    pub label: &'static str,
    pub params: Value,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub seed: u64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    pub entries: Vec<ManifestEntry>,
}

struct Writer<'a> {
    dir: &'a Path,
    entries: Vec<ManifestEntry>,
}

impl Writer<'_> {
    fn put<T: Serialize>(&mut self, rel: &str, kind: &'static str, label: &'static str, params: Value, v: &T) -> Result<()> {
        let mut text = serde_json::to_string(v).expect("fixture serializes");
        text.push('\n');
        write_atomic(&self.dir.join(rel), text.as_bytes())?;
        self.entries.push(ManifestEntry {
            path: rel.to_string(),
            kind,
            label,
            params,
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        });
        Ok(())
    }
}

fn unimodular<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>())
}

/// `exp(z - 1/z)` recovered from samples on the circle of radius `r`.
pub fn exp_z_minus_inv_z(r: f64, degree: usize, validity: (f64, f64)) -> Result<LaurentSeries> {
    let samples = CircleSamples::from_fn(r, 4 * (2 * degree + 1).next_power_of_two(), |z| (z - 1.0 / z).exp());
    LaurentSeries::from_circle_samples(&samples, degree, validity.0, validity.1)
}

/// Writes the corpus into `dir` and returns its manifest.
pub fn write_corpus(dir: &Path, cfg: &RunConfig) -> Result<Manifest> {
    std::fs::create_dir_all(dir.join("series"))?;
    std::fs::create_dir_all(dir.join("matrices"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let degree = cfg.degree();
    let mut w = Writer {
        dir,
        entries: Vec::new(),
    };

    for i in 0..RANDOM_SERIES {
        let f = random_polynomial(&mut rng, 6, 1.0);
        w.put(&format!("series/random_{i:02}.json"), "series", "random", json!({ "degree": 6 }), &f)?;
    }
    for k in [-2i64, 1, 3] {
        let f = LaurentSeries::basis(k);
        w.put(&format!("series/monomial_{k}.json"), "series", "monomial", json!({ "k": k }), &f)?;
    }

    let b = blaschke(Complex64::new(0.5, 0.0), 128, 1.5)?;
    w.put("series/blaschke.json", "series", "unimodular", json!({ "a": 0.5, "winding": 1 }), &b)?;

    let r = cfg.r;
    let e1 = exp_z_minus_inv_z(1.0, EXP_DEGREE, (1.0 / r, r))?;
    let e2 = exp_z_minus_inv_z(r.sqrt(), EXP_DEGREE, (1.0 / r, r))?;
    w.put(
        "series/exp_z_minus_inv_z.json",
        "series",
        "unimodular",
        json!({ "winding": 0, "two_circle_agreement": e1.max_coeff_diff(&e2) }),
        &e1,
    )?;

    for i in 0..SYNTHESIZED {
        let n: i64 = rng.gen_range(-2..=2);
        let p = random_polynomial(&mut rng, 3, 0.3);
        let f = synthesize_unimodular(&p, n, 256, 1.25)?;
        w.put(&format!("series/synth_{i:02}.json"), "series", "unimodular", json!({ "winding": n }), &f)?;
    }

    let t = WeightedComposition::rotation(Complex64::new(0.0, 1.0), Complex64::from_polar(1.0, PI / 4.0))?;
    let params = |op: &WeightedComposition| json!({ "alpha": op.alpha(), "beta": op.beta() });
    w.put("matrices/t_rot.json", "matrix", "rotation", params(&t), &OperatorMatrix::from_operator(&t, degree))?;
    let mut ops = Vec::new();
    for i in 0..RANDOM_OPERATORS {
        let op = WeightedComposition::rotation(unimodular(&mut rng), unimodular(&mut rng))?;
        w.put(&format!("matrices/rotation_{i:02}.json"), "matrix", "rotation", params(&op), &OperatorMatrix::from_operator(&op, degree))?;
        ops.push(op);
    }
    for i in 0..RANDOM_OPERATORS {
        let op = WeightedComposition::inversion(unimodular(&mut rng), unimodular(&mut rng))?;
        w.put(&format!("matrices/inversion_{i:02}.json"), "matrix", "inversion", params(&op), &OperatorMatrix::from_operator(&op, degree))?;
        ops.push(op);
    }
    for i in 0..PERTURBATIONS {
        let op = ops[i % ops.len()];
        let m = OperatorMatrix::from_operator(&op, degree).perturbed(PERTURBATION_EPS, &mut rng);
        w.put(
            &format!("matrices/perturbed_{i:02}.json"),
            "matrix",
            "not_isometry",
            json!({ "base": params(&op), "eps": PERTURBATION_EPS }),
            &m,
        )?;
    }
    let beta = Complex64::from_polar(DILATION_MODULUS, 2.0 * PI * rng.gen::<f64>());
    w.put("matrices/dilation.json", "matrix", "not_isometry", json!({ "beta": beta }), &OperatorMatrix::dilation(degree, beta))?;
    w.put("matrices/differentiation.json", "matrix", "not_composition", json!({}), &OperatorMatrix::differentiation(degree))?;

    let manifest = Manifest {
        seed: cfg.seed,
        r,
        degree,
        entries: w.entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&dir.join("manifest.json"), text.as_bytes())?;
    Ok(manifest)
}

/// Reads a manifest back as loosely typed JSON.
pub fn read_manifest(dir: &Path) -> Result<Value> {
    let bytes = std::fs::read(dir.join("manifest.json"))?;
    serde_json::from_slice(&bytes).map_err(|e| AnnulusError::InvalidInput(format!("manifest: {e}")))
}
