//! Command-line front end. Every command produces one JSON report
//! `{command, config, inputs_digest, result, diagnostics, elapsed_ms}`,
//! written atomically to `--out` or printed to stdout.

pub mod corpus;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    hadamard_residual, max_modulus_set, three_circle_rotation_test, AnalysisConfig, MaxSetKind,
};
use crate::domain::{frechet_distance, seminorm_detail, AnnulusDomain, MetricVariant, SupConfig};
use crate::error::{AnnulusError, Result};
use crate::factorization::{factor_unimodular, min_modulus, winding_number_with, FactorConfig};
use crate::laurent::{LaurentSeries, DEFAULT_DEGREE};
use crate::operators::{
    composition_operator_test, isometry_classify, ClassifyConfig, CompositionKind, OperatorMatrix,
    WeightedComposition,
};
use crate::spectral::{
    self, diophantine, liouville, DiophantineCertificate, ExactReal, Rational, ResolventConfig,
};

pub const MIN_DEGREE: usize = 8;
pub const DEFAULT_COMP_TOL: f64 = 1e-9;

/// Tolerance names accepted by `--tol`.
pub const TOLERANCE_NAMES: &[&str] = &[
    "tol_max",
    "tol_eq",
    "rotation_tol",
    "snap",
    "vanish_tol",
    "round_tol",
    "uni_tol",
    "residual_tol",
    "classify_tol",
    "comp_tol",
    "div_tol",
    "verify_tol",
];

#[derive(Debug, Parser)]
#[command(name = "annulus", version, about = "Holomorphic functions on symmetric annuli")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Outer radius of the annulus {1/R < |z| < R}.
    #[arg(id = "R", long = "R", global = true, default_value_t = 2.0)]
    pub r: f64,
    /// Truncation degree for objects built by the command (term count for
    /// `liouville`).
    #[arg(id = "N", long = "N", global = true)]
    pub n: Option<usize>,
    /// Binary precision for the Diophantine profile.
    #[arg(long, global = true, default_value_t = diophantine::DEFAULT_BITS)]
    pub bits: u32,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    /// Report path (output directory for `corpus`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record elapsed_ms as 0 so reruns are byte-identical.
    #[arg(long, global = true)]
    pub reproducible: bool,
}

#[derive(Debug, Args)]
pub struct OpArgs {
    #[arg(long, default_value = "rotation")]
    pub kind: CompositionKind,
    /// `re,im`, `exp:THETA` for e^{i THETA}, or `turns:T` for e^{2 pi i T}.
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Seminorms ||f||_{inf,n} over the exhaustion.
    Seminorm {
        #[arg(long)]
        series: PathBuf,
        /// A single level; all levels 1..=6 by default.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Frechet distance between two series.
    Metric {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long, default_value = "bounded")]
        variant: String,
        #[arg(long, default_value_t = crate::domain::DEFAULT_K_MAX)]
        k_max: usize,
    },
    /// Three-circle residual log M(r2) against the interpolation bound.
    Hadamard {
        #[arg(long)]
        series: PathBuf,
        /// `r1,r2,r3`; defaults to R^{-1/2},1,R^{1/2}.
        #[arg(long)]
        radii: Option<String>,
    },
    /// Maximal-modulus set on one circle.
    Maxset {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Whether f maps three circles into themselves as a rotation.
    RotationTest {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        radii: Option<String>,
    },
    /// Classify an operator matrix as T, S, or not an isometry.
    Classify {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Check whether a matrix acts as a composition operator.
    Comptest {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Factor a unimodular function as z^n g0 / g0*.
    Factorize {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Winding number on a circle.
    Winding {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Spectrum of T or S with eigenvector witnesses.
    Spectrum {
        #[command(flatten)]
        op: OpArgs,
        /// Smallest period of beta; omit to claim beta is not a root of unity.
        #[arg(long)]
        n_root: Option<usize>,
    },
    /// Solve (T - lambda) f = g.
    Resolvent {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        series: PathBuf,
    },
    /// Relative residual of a candidate eigenpair.
    Eigencheck {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        series: PathBuf,
    },
    /// Small-divisor profile |beta^k - lambda|^{-1/k}.
    Diophantine {
        /// `sqrt2-1`, `surd:a,b,m,d` for (a + b sqrt m)/d, or a decimal.
        #[arg(long, default_value = "sqrt2-1", allow_hyphen_values = true)]
        xi: String,
        /// Rational p/q.
        #[arg(long, default_value = "1/3", allow_hyphen_values = true)]
        r: String,
        #[arg(long = "K", default_value_t = 100_000)]
        k: u64,
        #[arg(long, requires = "tau")]
        gamma: Option<f64>,
        #[arg(long, requires = "gamma")]
        tau: Option<f64>,
        /// Write the profile as CSV (k,gap,envelope,bound).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Liouville sequence p_n = 2^{q_n} and certified growth bounds.
    Liouville,
    /// Write the deterministic fixture corpus into --out.
    Corpus,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Seminorm { .. } => "seminorm",
            Command::Metric { .. } => "metric",
            Command::Hadamard { .. } => "hadamard",
            Command::Maxset { .. } => "maxset",
            Command::RotationTest { .. } => "rotation-test",
            Command::Classify { .. } => "classify",
            Command::Comptest { .. } => "comptest",
            Command::Factorize { .. } => "factorize",
            Command::Winding { .. } => "winding",
            Command::Spectrum { .. } => "spectrum",
            Command::Resolvent { .. } => "resolvent",
            Command::Eigencheck { .. } => "eigencheck",
            Command::Diophantine { .. } => "diophantine",
            Command::Liouville => "liouville",
            Command::Corpus => "corpus",
        }
    }
}

/// Validated global settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub precision_bits: u32,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(g: &GlobalArgs, command: &Command) -> Result<Self> {
        if !(g.r > 1.0 && g.r.is_finite()) {
            return Err(AnnulusError::InvalidInput(format!("R = {} must be finite and > 1", g.r)));
        }
        if let Some(n) = g.n {
            if !matches!(command, Command::Liouville) && n < MIN_DEGREE {
                return Err(AnnulusError::InvalidInput(format!("N = {n} must be at least {MIN_DEGREE}")));
            }
        }
        if g.bits < diophantine::MIN_BITS {
            return Err(AnnulusError::InvalidInput(format!(
                "bits = {} must be at least {}",
                g.bits,
                diophantine::MIN_BITS
            )));
        }
        let mut tolerances = BTreeMap::new();
        for item in &g.tol {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| AnnulusError::InvalidInput(format!("--tol expects NAME=VALUE, got {item:?}")))?;
            if !TOLERANCE_NAMES.contains(&name) {
                return Err(AnnulusError::InvalidInput(format!(
                    "unknown tolerance {name:?}; known: {}",
                    TOLERANCE_NAMES.join(", ")
                )));
            }
            let v: f64 = value
                .parse()
                .map_err(|_| AnnulusError::InvalidInput(format!("tolerance {name} = {value:?} is not a number")))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(AnnulusError::InvalidInput(format!("tolerance {name} must be positive")));
            }
            tolerances.insert(name.to_string(), v);
        }
        Ok(RunConfig {
            r: g.r,
            n: g.n,
            precision_bits: g.bits,
            seed: g.seed,
            tolerances,
            output_path: g.out.clone(),
        })
    }

    pub fn degree(&self) -> usize {
        self.n.unwrap_or(DEFAULT_DEGREE)
    }

    pub fn domain(&self) -> AnnulusDomain {
        AnnulusDomain::new(self.r).expect("R validated")
    }

    fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn analysis(&self) -> AnalysisConfig {
        let d = AnalysisConfig::default();
        AnalysisConfig {
            tol_max: self.tol("tol_max", d.tol_max),
            tol_eq: self.tol("tol_eq", d.tol_eq),
            rotation_tol: self.tol("rotation_tol", d.rotation_tol),
            snap: self.tol("snap", d.snap),
            ..d
        }
    }

    pub fn factor(&self) -> FactorConfig {
        let d = FactorConfig::default();
        FactorConfig {
            vanish_tol: self.tol("vanish_tol", d.vanish_tol),
            round_tol: self.tol("round_tol", d.round_tol),
            uni_tol: self.tol("uni_tol", d.uni_tol),
            residual_tol: self.tol("residual_tol", d.residual_tol),
        }
    }

    pub fn classify(&self) -> ClassifyConfig {
        let d = ClassifyConfig::default();
        ClassifyConfig {
            tol: self.tol("classify_tol", d.tol),
            seed: self.seed,
            ..d
        }
    }

    pub fn resolvent(&self) -> ResolventConfig {
        let d = ResolventConfig::default();
        ResolventConfig {
            div_tol: self.tol("div_tol", d.div_tol),
            verify_tol: self.tol("verify_tol", d.verify_tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub status: &'static str,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub inputs_digest: String,
    pub result: Value,
    pub diagnostics: Diagnostics,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Inputs in the order they are read, hashed into `inputs_digest`.
#[derive(Default)]
struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    fn add(&mut self, name: &str, bytes: &[u8]) {
        self.hasher.update((name.len() as u64).to_le_bytes());
        self.hasher.update(name.as_bytes());
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    fn param(&mut self, name: &str, value: &str) {
        self.add(name, value.as_bytes());
    }

    fn file(&mut self, name: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path)
            .map_err(|e| AnnulusError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        self.add(name, &bytes);
        Ok(bytes)
    }

    fn series(&mut self, name: &str, path: &Path) -> Result<LaurentSeries> {
        let bytes = self.file(name, path)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| AnnulusError::InvalidInput(format!("{}: not a Laurent series: {e}", path.display())))
    }

    fn matrix(&mut self, name: &str, path: &Path) -> Result<OperatorMatrix> {
        let bytes = self.file(name, path)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| AnnulusError::InvalidInput(format!("{}: not an operator matrix: {e}", path.display())))
    }

    fn digest(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

/// `re,im`, `re`, `exp:THETA` or `turns:T`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || AnnulusError::InvalidInput(format!("cannot parse complex number {s:?}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let z = if let Some(t) = s.strip_prefix("exp:") {
        Complex64::from_polar(1.0, num(t)?)
    } else if let Some(t) = s.strip_prefix("turns:") {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * num(t)?)
    } else if let Some((re, im)) = s.split_once(',') {
        Complex64::new(num(re)?, num(im)?)
    } else {
        Complex64::new(num(s)?, 0.0)
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(bad());
    }
    Ok(z)
}

fn parse_radii(s: Option<&str>, r: f64) -> Result<[f64; 3]> {
    match s {
        None => Ok([1.0 / r.sqrt(), 1.0, r.sqrt()]),
        Some(s) => {
            let v: Vec<f64> = s
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| AnnulusError::InvalidInput(format!("cannot parse radii {s:?}")))?;
            <[f64; 3]>::try_from(v)
                .map_err(|_| AnnulusError::InvalidInput(format!("expected three radii, got {s:?}")))
        }
    }
}

fn operator(inputs: &mut Inputs, op: &OpArgs) -> Result<WeightedComposition> {
    inputs.param("kind", &format!("{:?}", op.kind));
    inputs.param("alpha", &op.alpha);
    inputs.param("beta", &op.beta);
    WeightedComposition::new(op.kind, parse_complex(&op.alpha)?, parse_complex(&op.beta)?)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

/// Output of a command before it is wrapped into a report.
struct Outcome {
    result: Value,
    notes: Vec<String>,
    /// Exit code for a completed run whose verdict is not certified.
    exit_code: i32,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome {
            result,
            notes: Vec::new(),
            exit_code: 0,
        }
    }
}

fn dispatch(command: &Command, cfg: &RunConfig, inputs: &mut Inputs) -> Result<Outcome> {
    let domain = cfg.domain();
    match command {
        Command::Seminorm { series, level } => {
            let f = inputs.series("series", series)?;
            let levels: Vec<usize> = match level {
                Some(n) => vec![*n],
                None => (1..=6).collect(),
            };
            let est = levels
                .iter()
                .map(|&n| seminorm_detail(&f, &domain, n, &SupConfig::default()))
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::ok(json!({ "seminorms": est })))
        }
        Command::Metric { f, g, variant, k_max } => {
            let a = inputs.series("f", f)?;
            let b = inputs.series("g", g)?;
            inputs.param("variant", variant);
            let variant = match variant.as_str() {
                "bounded" => MetricVariant::Bounded,
                "ratio" => MetricVariant::Ratio,
                other => {
                    return Err(AnnulusError::InvalidInput(format!(
                        "unknown metric variant {other:?} (expected bounded or ratio)"
                    )))
                }
            };
            Ok(Outcome::ok(to_value(&frechet_distance(&a, &b, &domain, variant, *k_max)?)))
        }
        Command::Hadamard { series, radii } => {
            let f = inputs.series("series", series)?;
            let [r1, r2, r3] = parse_radii(radii.as_deref(), cfg.r)?;
            Ok(Outcome::ok(to_value(&hadamard_residual(&f, r1, r2, r3, &cfg.analysis())?)))
        }
        Command::Maxset { series, radius } => {
            let f = inputs.series("series", series)?;
            let verdict = max_modulus_set(&f, *radius, &cfg.analysis())?;
            let mut out = Outcome::ok(to_value(&verdict));
            if let MaxSetKind::Indeterminate { reason } = &verdict.kind {
                out.notes.push(format!("maximal set indeterminate: {reason}"));
                out.exit_code = AnnulusError::Indeterminate(reason.clone()).exit_code();
            }
            Ok(out)
        }
        Command::RotationTest { series, radii } => {
            let f = inputs.series("series", series)?;
            let [r1, r2, r3] = parse_radii(radii.as_deref(), cfg.r)?;
            Ok(Outcome::ok(to_value(&three_circle_rotation_test(&f, r1, r2, r3, &cfg.analysis())?)))
        }
        Command::Classify { matrix } => {
            let m = inputs.matrix("matrix", matrix)?;
            Ok(Outcome::ok(to_value(&isometry_classify(&m, &domain, &cfg.classify())?)))
        }
        Command::Comptest { matrix, n_max } => {
            let m = inputs.matrix("matrix", matrix)?;
            let n_max = n_max.unwrap_or(m.trusted().min(8));
            let tol = cfg.tol("comp_tol", DEFAULT_COMP_TOL);
            Ok(Outcome::ok(to_value(&composition_operator_test(&m, &domain, n_max, tol)?)))
        }
        Command::Factorize { series, s } => {
            let f = inputs.series("series", series)?;
            if let Some(s) = s {
                inputs.param("s", &s.to_string());
            }
            Ok(Outcome::ok(to_value(&factor_unimodular(&f, *s, &cfg.factor())?)))
        }
        Command::Winding { series, radius } => {
            let f = inputs.series("series", series)?;
            let w = winding_number_with(&f, *radius, &cfg.factor())?;
            Ok(Outcome::ok(json!({
                "radius": radius,
                "winding": w,
                "min_modulus": min_modulus(&f, *radius)?,
            })))
        }
        Command::Spectrum { op, n_root } => {
            let t = operator(inputs, op)?;
            if let Some(n) = n_root {
                inputs.param("n_root", &n.to_string());
            }
            let description = spectral::spectrum(&t, *n_root)?;
            let mut max_residual: f64 = 0.0;
            for p in &description.points {
                for w in p.witness_series() {
                    max_residual = max_residual.max(spectral::eigenvector_check(&t, p.lambda, &w, &domain)?);
                }
            }
            if !(max_residual < spectral::DEFAULT_VERIFY_TOL) {
                return Err(AnnulusError::Verification(format!(
                    "eigenpair residual {max_residual:e} is not below {:e}",
                    spectral::DEFAULT_VERIFY_TOL
                )));
            }
            let power = match description.kind {
                spectral::SpectrumKind::InversionPair => Some(2),
                spectral::SpectrumKind::RootOfUnityCycle { order } => Some(order),
                spectral::SpectrumKind::AperiodicOrbit { .. } => None,
            };
            let identity = match power {
                Some(n) => {
                    let defect = spectral::power_identity_defect(&t, n, cfg.degree())?;
                    Some(json!({ "power": n, "degree": cfg.degree(), "defect": defect }))
                }
                None => None,
            };
            Ok(Outcome::ok(json!({
                "spectrum": description,
                "max_eigen_residual": max_residual,
                "power_identity": identity,
            })))
        }
        Command::Resolvent { op, lambda, series } => {
            let t = operator(inputs, op)?;
            inputs.param("lambda", lambda);
            let g = inputs.series("series", series)?;
            let sol = spectral::resolvent_solve(&t, parse_complex(lambda)?, &g, &cfg.resolvent())?;
            Ok(Outcome::ok(to_value(&sol)))
        }
        Command::Eigencheck { op, lambda, series } => {
            let t = operator(inputs, op)?;
            inputs.param("lambda", lambda);
            let f = inputs.series("series", series)?;
            let residual = spectral::eigenvector_check(&t, parse_complex(lambda)?, &f, &domain)?;
            Ok(Outcome::ok(json!({ "residual": residual })))
        }
        Command::Diophantine { xi, r, k, gamma, tau, csv } => {
            inputs.param("xi", xi);
            inputs.param("r", r);
            inputs.param("K", &k.to_string());
            let xi: ExactReal = xi.parse()?;
            let r: Rational = r.parse()?;
            let certificate = match (gamma, tau) {
                (Some(gamma), Some(tau)) => {
                    inputs.param("gamma", &gamma.to_string());
                    inputs.param("tau", &tau.to_string());
                    Some(DiophantineCertificate { gamma: *gamma, tau: *tau })
                }
                _ => None,
            };
            let p = spectral::diophantine_gap_profile(&xi, r, *k, cfg.precision_bits, certificate)?;
            let mut notes = Vec::new();
            if let Some(path) = csv {
                write_atomic(path, p.to_csv().as_bytes())?;
                notes.push(format!("profile written to {}", path.display()));
            }
            let last = p.gap_values.len() - 1;
            let out = Outcome {
                result: json!({
                    "xi": xi,
                    "r": r,
                    "K": k,
                    "bits": p.bits,
                    "final_gap": p.gap_values[last],
                    "max_gap": p.envelope[0],
                    "argmax": p.argmax,
                    "final_envelope": p.envelope[last],
                    "limit_bracket": p.limit_bracket,
                    "diophantine_bound": p.diophantine_bound,
                }),
                notes,
                exit_code: 0,
            };
            Ok(out)
        }
        Command::Liouville => {
            let terms = cfg.n.unwrap_or(5);
            inputs.param("terms", &terms.to_string());
            let seq = liouville::liouville_sequence(terms)?;
            let growth = (2..terms.min(liouville::MAX_TERMS))
                .map(liouville::liouville_growth)
                .collect::<Result<Vec<_>>>()?;
            let certified = seq.iter().all(|t| t.checks.as_ref().map_or(true, |c| c.all()));
            let mut out = Outcome::ok(json!({
                "terms": seq,
                "growth": growth,
                "all_checks_hold": certified,
            }));
            if !certified {
                out.notes.push("some Liouville inequality could not be certified".into());
                out.exit_code = 3;
            }
            Ok(out)
        }
        Command::Corpus => {
            let dir = cfg
                .output_path
                .as_ref()
                .ok_or_else(|| AnnulusError::InvalidInput("corpus needs --out DIR".into()))?;
            let manifest = corpus::write_corpus(dir, cfg)?;
            Ok(Outcome::ok(to_value(&manifest)))
        }
    }
}

/// Runs one parsed command and assembles its report.
pub fn execute(cli: &Cli) -> (Report, i32) {
    let start = Instant::now();
    let mut inputs = Inputs::default();
    let parsed = RunConfig::from_args(&cli.global, &cli.command);
    let config = match &parsed {
        Ok(cfg) => to_value(cfg),
        Err(_) => Value::Null,
    };
    let outcome = parsed.and_then(|cfg| dispatch(&cli.command, &cfg, &mut inputs));
    let (result, diagnostics) = match outcome {
        Ok(o) => (
            o.result,
            Diagnostics {
                status: if o.exit_code == 0 { "ok" } else { "uncertified" },
                exit_code: o.exit_code,
                error: None,
                notes: o.notes,
            },
        ),
        Err(e) => (
            Value::Null,
            Diagnostics {
                status: "error",
                exit_code: e.exit_code(),
                error: Some(ErrorInfo {
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                }),
                notes: Vec::new(),
            },
        ),
    };
    let elapsed_ms = if cli.global.reproducible {
        0
    } else {
        start.elapsed().as_millis() as u64
    };
    let code = diagnostics.exit_code;
    let report = Report {
        command: cli.command.name().to_string(),
        config,
        inputs_digest: inputs.digest(),
        result,
        diagnostics,
        elapsed_ms,
    };
    (report, code)
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| AnnulusError::Io(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        AnnulusError::from(e)
    })
}

/// Parses arguments, runs the command and emits the report; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (report, code) = execute(&cli);
    let text = report.to_json_string();
    let target = match cli.command {
        Command::Corpus => None,
        _ => cli.global.out.as_deref(),
    };
    match target {
        Some(path) => {
            if let Err(e) = write_atomic(path, text.as_bytes()) {
                eprintln!("annulus: {e}");
                return 1;
            }
        }
        None => print!("{text}"),
    }
    if let Some(err) = &report.diagnostics.error {
        eprintln!("annulus {}: {}", report.command, err.message);
    }
    code
}
