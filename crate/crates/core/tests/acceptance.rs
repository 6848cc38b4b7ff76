//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use annulus::analysis::{hadamard_residual, AnalysisConfig};
use annulus::cli::corpus::exp_z_minus_inv_z;
use annulus::domain::{seminorm, AnnulusDomain};
use annulus::factorization::{blaschke, factor_unimodular, synthesize_unimodular, FactorConfig};
use annulus::laurent::{random_in_disc, random_polynomial, LaurentSeries};
use annulus::operators::{
    composition_operator_test, isometry_classify, ClassificationResult, ClassifyConfig, CompositionKind,
    CompositionVerdict, OperatorMatrix, WeightedComposition,
};
use annulus::spectral::{
    diophantine_gap_profile, eigenvector_check, liouville_growth, liouville_sequence, power_identity_defect,
    resolvent_solve, spectrum, ExactReal, LogSpaceInteger, Rational, ResolventConfig, SpectrumKind,
};
use num_bigint::BigUint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Values from an independent 80-digit mpmath evaluation of
/// `|β^k - λ|^{-1/k}`, `ξ = √2 - 1`, `r = 1/3`, `k = 1..=100000`.
const ORACLE_FINAL_GAP: f64 = 1.0000193944956066;
const ORACLE_MAX_GAP: f64 = 1.9891204949205752;
const ORACLE_ARGMAX: u64 = 1;
const ORACLE_TAIL_BRACKET: [f64; 2] = [0.9999923036242886, 1.00009903688877];

type Outcome = std::result::Result<String, String>;

fn unimodular(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn seminorm_exactness() -> Outcome {
    let domain = AnnulusDomain::new(2.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in -8i64..=8 {
        for n in 1..=6usize {
            // The sup of |z^k| sits on the outer circle for k >= 0 and on the
            // inner circle for k < 0, so the closed form uses |k|.
            let expect = 2f64.powf(k.abs() as f64 * (1.0 - 1.0 / n as f64));
            let got = seminorm(&LaurentSeries::basis(k), &domain, n).map_err(|e| e.to_string())?;
            worst = worst.max((got - expect).abs() / expect);
        }
    }
    check(worst < 1e-9, format!("max relative error {worst:.2e} over 102 cases"))
}

fn isometry_suite() -> Outcome {
    let domain = AnnulusDomain::default();
    let results: Vec<(usize, f64)> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
            let degree = rng.gen_range(1..=16);
            let f = random_polynomial(&mut rng, degree, 1.0);
            let norms: Vec<f64> = (1..=6).map(|n| seminorm(&f, &domain, n).unwrap()).collect();
            let mut failures = 0;
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let (a, b) = (unimodular(&mut rng), unimodular(&mut rng));
                for kind in [CompositionKind::Rotation, CompositionKind::Inversion] {
                    let image = WeightedComposition::new(kind, a, b).unwrap().apply(&f);
                    for n in 1..=6 {
                        let rel = (seminorm(&image, &domain, n).unwrap() - norms[n - 1]).abs() / norms[n - 1];
                        worst = worst.max(rel);
                        if !(rel < 1e-9) {
                            failures += 1;
                        }
                    }
                }
            }
            (failures, worst)
        })
        .collect();
    let failures: usize = results.iter().map(|r| r.0).sum();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    check(failures == 0, format!("{failures} failures in 120000 comparisons, max relative deviation {worst:.2e}"))
}

fn classifier() -> Outcome {
    let degree = 32;
    let domain = AnnulusDomain::default();
    let cfg = ClassifyConfig::default();
    let outcomes: Vec<(bool, bool, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + i);
            let kind = if i % 2 == 0 { CompositionKind::Rotation } else { CompositionKind::Inversion };
            let op = WeightedComposition::new(kind, unimodular(&mut rng), unimodular(&mut rng)).unwrap();
            let m = OperatorMatrix::from_operator(&op, degree);
            let (recovered, err) = match isometry_classify(&m, &domain, &cfg).unwrap() {
                r @ (ClassificationResult::Rotation { .. } | ClassificationResult::Inversion { .. }) => {
                    let got = r.operator().unwrap();
                    let err = (got.alpha() - op.alpha()).norm().max((got.beta() - op.beta()).norm());
                    (got.kind() == kind && err < 1e-10, err)
                }
                _ => (false, f64::INFINITY),
            };
            let perturbed = m.perturbed(1e-3, &mut rng);
            let rejected = matches!(
                isometry_classify(&perturbed, &domain, &cfg).unwrap(),
                ClassificationResult::NotIsometry { .. }
            );
            (recovered, rejected, err)
        })
        .collect();
    let recovered = outcomes.iter().filter(|o| o.0).count();
    let rejected = outcomes.iter().filter(|o| o.1).count();
    let worst = outcomes.iter().map(|o| o.2).fold(0.0, f64::max);
    let dilation = OperatorMatrix::dilation(degree, Complex64::from_polar(0.9, 0.4));
    let dilation_rejected = matches!(
        isometry_classify(&dilation, &domain, &cfg).map_err(|e| e.to_string())?,
        ClassificationResult::NotIsometry { .. }
    );
    let diff = OperatorMatrix::differentiation(degree);
    let diff_fails = matches!(
        composition_operator_test(&diff, &domain, 8, 1e-9).map_err(|e| e.to_string())?,
        CompositionVerdict::No { n: 2, .. }
    );
    check(
        recovered == 100 && rejected == 100 && dilation_rejected && diff_fails,
        format!(
            "recovered {recovered}/100 (max error {worst:.1e}), rejected {rejected}/100 perturbations, dilation rejected: {dilation_rejected}, differentiation fails at n = 2: {diff_fails}"
        ),
    )
}

fn hadamard() -> Outcome {
    let cfg = AnalysisConfig::default();
    let rows: Vec<(f64, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(9000 + i);
            let degree = rng.gen_range(0..=16usize);
            let f = if i % 5 == 0 {
                LaurentSeries::monomial(rng.gen_range(-(degree as i64)..=degree as i64), random_in_disc(&mut rng, 2.0) + 0.01)
            } else {
                random_polynomial(&mut rng, degree, 1.0)
            };
            let radii = loop {
                let mut r: Vec<f64> = (0..3).map(|_| 0.5 + 1.5 * rng.gen::<f64>()).collect();
                r.sort_by(f64::total_cmp);
                if r[1] - r[0] > 1e-3 && r[2] - r[1] > 1e-3 && r[0] > 0.5 && r[2] < 2.0 {
                    break r;
                }
            };
            let h = hadamard_residual(&f, radii[0], radii[1], radii[2], &cfg).unwrap();
            let monomial = f.support(0.0).len() == 1;
            (h.residual, h.equality_flag == monomial)
        })
        .collect();
    let min = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let wrong = rows.iter().filter(|r| !r.1).count();
    check(min >= -1e-9 && wrong == 0, format!("min residual {min:.2e}, {wrong} equality misclassifications in 1000 cases"))
}

fn factorization() -> Outcome {
    let cfg = FactorConfig::default();
    let rows: Vec<(bool, f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(20000 + i);
            let n: i64 = rng.gen_range(-5..=5);
            let degree = rng.gen_range(1..=8usize);
            let mut p = random_polynomial(&mut rng, degree, 0.3);
            for k in -(degree as i64)..0 {
                p.set(k, Complex64::new(0.0, 0.0));
            }
            p.set(0, Complex64::new(0.0, p.coeff(0).im));
            let f = synthesize_unimodular(&p, n, 256, 1.25).unwrap();
            match factor_unimodular(&f, None, &cfg) {
                Ok(r) => {
                    let expected = p.resized(40).exp_one_sided(40).unwrap();
                    let coeff_err = (0..=40).map(|k| (r.g0.coeff(k) - expected.coeff(k)).norm()).fold(0.0, f64::max);
                    (r.winding == n, r.residual, coeff_err)
                }
                Err(_) => (false, f64::INFINITY, f64::INFINITY),
            }
        })
        .collect();
    let exact = rows.iter().filter(|r| r.0).count();
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst_g0 = rows.iter().map(|r| r.2).fold(0.0, f64::max);

    let b = blaschke(Complex64::new(0.5, 0.0), 128, 1.5).map_err(|e| e.to_string())?;
    let rb = factor_unimodular(&b, None, &cfg).map_err(|e| e.to_string())?;
    let c0 = rb.g0.coeff(0);
    let blaschke_err = (0..=40).map(|k| (rb.g0.coeff(k) / c0 - 0.5f64.powi(k as i32)).norm()).fold(0.0, f64::max);

    let e = exp_z_minus_inv_z(1.0, 32, (0.5, 2.0)).map_err(|e| e.to_string())?;
    let re = factor_unimodular(&e, None, &cfg).map_err(|e| e.to_string())?;
    let mut fact = 1.0;
    let mut exp_err: f64 = 0.0;
    for k in 0..=20i64 {
        if k > 0 {
            fact *= k as f64;
        }
        exp_err = exp_err.max((re.g0.coeff(k) - 1.0 / fact).norm());
    }
    let ok = exact == 200
        && worst < 1e-8
        && worst_g0 < 1e-8
        && rb.winding == 1
        && blaschke_err < 1e-8
        && re.winding == 0
        && exp_err < 1e-8;
    check(
        ok,
        format!(
            "{exact}/200 windings exact, max residual on T {worst:.1e}, max g0 error {worst_g0:.1e}; Blaschke (n = {}, error {blaschke_err:.1e}); exp(z - 1/z) (n = {}, error {exp_err:.1e})",
            rb.winding, re.winding
        ),
    )
}

fn spectral_identities() -> Outcome {
    let domain = AnnulusDomain::default();
    let rcfg = ResolventConfig::default();
    let mut worst_identity: f64 = 0.0;
    let mut worst_eigen: f64 = 0.0;
    let mut worst_resolvent: f64 = 0.0;
    let mut bound_failures = 0;
    let mut solves = 0;
    for i in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(30000 + i);
        let alpha = unimodular(&mut rng);
        let (op, claim, power) = match i % 3 {
            0 => (WeightedComposition::inversion(alpha, unimodular(&mut rng)).unwrap(), None, Some(2)),
            1 => {
                let order = rng.gen_range(1..=12usize);
                let beta = Complex64::from_polar(1.0, 2.0 * PI / order as f64);
                (WeightedComposition::rotation(alpha, beta).unwrap(), Some(order), Some(order))
            }
            _ => (WeightedComposition::rotation(alpha, unimodular(&mut rng)).unwrap(), None, None),
        };
        if let Some(n) = power {
            worst_identity = worst_identity.max(power_identity_defect(&op, n, 32).map_err(|e| e.to_string())?);
        }
        let desc = spectrum(&op, claim).map_err(|e| e.to_string())?;
        if op.kind() == CompositionKind::Inversion {
            assert!(matches!(desc.kind, SpectrumKind::InversionPair));
        }
        for p in &desc.points {
            for w in p.witness_series() {
                worst_eigen = worst_eigen.max(eigenvector_check(&op, p.lambda, &w, &domain).map_err(|e| e.to_string())?);
            }
        }
        if op.kind() == CompositionKind::Rotation {
            for _ in 0..5 {
                let g = random_polynomial(&mut rng, 12, 1.0);
                let m = if rng.gen::<bool>() { 0.05 + 0.9 * rng.gen::<f64>() } else { 1.05 + 4.0 * rng.gen::<f64>() };
                let lambda = Complex64::from_polar(m, 2.0 * PI * rng.gen::<f64>());
                let sol = resolvent_solve(&op, lambda, &g, &rcfg).map_err(|e| e.to_string())?;
                solves += 1;
                worst_resolvent = worst_resolvent.max(sol.residual);
                for k in -12i64..=12 {
                    let (a, b) = (sol.f.coeff(k).norm(), g.coeff(k).norm());
                    let lower = b / (1.0 + m);
                    let upper = b / (1.0 - m).abs();
                    if a < lower * (1.0 - 1e-14) || a > upper * (1.0 + 1e-14) {
                        bound_failures += 1;
                    }
                }
            }
        }
    }
    check(
        worst_identity < 1e-12 && worst_eigen < 1e-10 && worst_resolvent < 1e-10 && bound_failures == 0,
        format!(
            "power identities {worst_identity:.1e}, eigen residuals {worst_eigen:.1e}, {solves} resolvent solves with residual {worst_resolvent:.1e} and {bound_failures} bound violations"
        ),
    )
}

fn diophantine() -> Outcome {
    let start = Instant::now();
    let p = diophantine_gap_profile(&ExactReal::sqrt2_minus_1(), Rational { p: 1, q: 3 }, 100_000, 256, None)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let finite = p.envelope.iter().all(|v| v.is_finite() && *v > 0.0);
    let am = p.argmax as usize - 1;
    let nonincreasing = p.envelope[am..].windows(2).all(|w| w[0] >= w[1]);
    let contains_one = p.limit_bracket[0] <= 1.0 && 1.0 <= p.limit_bracket[1];
    let last = *p.gap_values.last().unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let oracle = rel(last, ORACLE_FINAL_GAP) < 1e-12
        && rel(p.envelope[0], ORACLE_MAX_GAP) < 1e-12
        && p.argmax == ORACLE_ARGMAX
        && rel(p.limit_bracket[0], ORACLE_TAIL_BRACKET[0]) < 1e-12
        && rel(p.limit_bracket[1], ORACLE_TAIL_BRACKET[1]) < 1e-12;
    check(
        finite && nonincreasing && contains_one && oracle && secs < 300.0,
        format!(
            "final gap {last:.16}, max {:.16} at k = {}, limit bracket [{:.10}, {:.10}], oracle agreement: {oracle}, {secs:.1}s",
            p.envelope[0], p.argmax, p.limit_bracket[0], p.limit_bracket[1]
        ),
    )
}

fn liouville() -> Outcome {
    let seq = liouville_sequence(8).map_err(|e| e.to_string())?;
    let small: Vec<Option<&BigUint>> = seq[..3].iter().map(|t| t.p.exact()).collect();
    let exact = small == [Some(&BigUint::from(1u8)), Some(&BigUint::from(2u8)), Some(&BigUint::from(16u8))]
        && seq[3].q.exact() == Some(&BigUint::from(43046721u64))
        && matches!(&seq[3].p, LogSpaceInteger::PowerOfTwo(e) if e.exact() == Some(&BigUint::from(43046721u64)));
    let checks = seq.iter().filter_map(|t| t.checks.as_ref()).all(|c| c.all());
    let growth: Vec<_> = (2..=5).map(liouville_growth).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let lowers: Vec<_> = growth.iter().map(|g| g.growth_exponent.lower_endpoint()).collect();
    let increasing = lowers.windows(2).all(|w| w[0].certainly_less(&w[1]));
    let beyond = (1..4).all(|i| lowers[i].certainly_greater(&annulus::spectral::liouville::power_of_ten(i as u32 + 2)));
    check(
        exact && checks && increasing && beyond,
        format!(
            "exact terms: {exact}, inequalities for n = 1..7: {checks}, lower bounds increasing: {increasing}, above 10^n for n = 3..5: {beyond} (n = 3 lower bound {:.6e})",
            lowers[1].lower_f64()
        ),
    )
}

fn run_bin(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_annulus")).args(args).output().expect("binary runs");
    out.stdout
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let d = dir.to_str().unwrap();
        let mut outputs = vec![run_bin(&["--seed", "42", "--N", "16", "--reproducible", "--out", d, "corpus"])];
        let m = format!("{d}/matrices/perturbed_00.json");
        let s = format!("{d}/series/synth_00.json");
        let r = format!("{d}/series/random_00.json");
        for args in [
            vec!["--reproducible", "classify", "--matrix", m.as_str()],
            vec!["--reproducible", "factorize", "--series", s.as_str()],
            vec!["--reproducible", "seminorm", "--series", r.as_str()],
            vec!["--reproducible", "hadamard", "--series", r.as_str()],
            vec!["--reproducible", "liouville", "--N", "6"],
            vec!["--reproducible", "diophantine", "--K", "5000"],
            vec!["--reproducible", "spectrum", "--beta", "0,1", "--n-root", "4"],
        ] {
            outputs.push(run_bin(&args));
        }
        trees.push(read_tree(&dir));
        reports.push(outputs);
    }
    let tree_equal = trees[0] == trees[1] && !trees[0].is_empty();
    // Report bodies embed the corpus paths, which differ between the two
    // runs; compare them with the directory name normalised.
    let normalise = |bytes: &Vec<u8>, run: &str| {
        String::from_utf8_lossy(bytes).replace(&tmp.path().join(run).display().to_string(), "DIR")
    };
    let reports_equal = reports[0].iter().zip(&reports[1]).all(|(a, b)| normalise(a, "a") == normalise(b, "b"))
        && reports[0].iter().all(|r| !r.is_empty());
    check(
        tree_equal && reports_equal,
        format!("{} corpus files identical: {tree_equal}; {} reports identical: {reports_equal}", trees[0].len(), reports[0].len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("seminorm exactness", seminorm_exactness),
        ("isometry suite", isometry_suite),
        ("classifier completeness and soundness", classifier),
        ("Hadamard three-circle residual", hadamard),
        ("factorization round trip", factorization),
        ("spectral identities", spectral_identities),
        ("Diophantine profile", diophantine),
        ("Liouville certificates", liouville),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
