use std::f64::consts::PI;

use annulus::analysis::{hadamard_residual, max_modulus_set, three_circle_rotation_test, AnalysisConfig, MaxSetKind, RotationVerdict};
use annulus::domain::{frechet_distance, seminorm, AnnulusDomain, MetricVariant};
use annulus::factorization::{factor_unimodular, reflect, synthesize_unimodular, unimodularity_defect, winding_number, FactorConfig};
use annulus::laurent::{random_in_disc, random_polynomial, LaurentSeries};
use annulus::operators::{composition_operator_test, CompositionVerdict, OperatorMatrix, WeightedComposition};
use annulus::spectral::{eigenvector_check, resolvent_solve, spectrum, ResolventConfig};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unimodular(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>())
}

fn rel_diff(a: &LaurentSeries, b: &LaurentSeries) -> f64 {
    a.max_coeff_diff(b) / a.max_coeff_norm().max(b.max_coeff_norm()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sample_recover_round_trip(seed in any::<u64>(), degree in 1usize..=32, on_r2 in any::<bool>()) {
        let f = random_polynomial(&mut rng(seed), degree, 1.0);
        let r = if on_r2 { 2f64.sqrt() } else { 1.0 };
        let s = f.sample(r, annulus::laurent::default_samples(degree)).unwrap();
        let back = LaurentSeries::from_circle_samples(&s, degree, f.inner_radius(), f.outer_radius()).unwrap();
        // f64 samples on rT hold a_{-N} only to about 2^-52 r^{2N} relative to
        // max |a_k|, so the 1e-9 target applies while r^{2N} stays below 1e6.
        let conditioning = r.powi(2 * degree as i32);
        let bound = if conditioning <= 1e6 { 1e-9 } else { 1e-9 * conditioning / 1e6 };
        prop_assert!(rel_diff(&f, &back) < bound, "error {} vs bound {}", rel_diff(&f, &back), bound);
    }

    #[test]
    fn multiplication_laws(seed in any::<u64>(), n1 in 0usize..=16, n2 in 0usize..=16, n3 in 0usize..=16) {
        let mut g = rng(seed);
        let a = random_polynomial(&mut g, n1, 1.0);
        let b = random_polynomial(&mut g, n2, 1.0);
        let c = random_polynomial(&mut g, n3, 1.0);
        let ab = a.multiply(&b).unwrap();
        prop_assert!(ab.max_coeff_diff(&b.multiply(&a).unwrap()) < 1e-10);
        let left = ab.multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert!(left.max_coeff_diff(&right) < 1e-10);

        let z = Complex64::from_polar(0.5 + 1.5 * g.gen::<f64>(), 2.0 * PI * g.gen::<f64>());
        let lhs = ab.eval(z).unwrap();
        let rhs = a.eval(z).unwrap() * b.eval(z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1e-300) + 1e-300);

        let leibniz = a.differentiate().multiply(&b).unwrap().add(&a.multiply(&b.differentiate()).unwrap()).unwrap();
        prop_assert!(ab.differentiate().max_coeff_diff(&leibniz) < 1e-10);
    }

    #[test]
    fn seminorm_monotone_and_homogeneous(seed in any::<u64>(), degree in 0usize..=12) {
        let mut g = rng(seed);
        let f = random_polynomial(&mut g, degree, 1.0);
        let c = random_in_disc(&mut g, 3.0);
        let domain = AnnulusDomain::default();
        let mut prev = 0.0;
        for n in 1..=8 {
            let s = seminorm(&f, &domain, n).unwrap();
            prop_assert!(prev <= s + 1e-10, "n = {}: {} > {}", n, prev, s);
            prev = s;
            if n <= 4 && c.norm() > 1e-3 {
                let sc = seminorm(&f.scale(c), &domain, n).unwrap();
                prop_assert!((sc - c.norm() * s).abs() <= 1e-10 * c.norm() * s);
            }
        }
    }

    #[test]
    fn metrics_symmetric_and_triangular(seed in any::<u64>(), bounded in any::<bool>()) {
        let mut g = rng(seed);
        let domain = AnnulusDomain::default();
        let variant = if bounded { MetricVariant::Bounded } else { MetricVariant::Ratio };
        let scale = [0.01, 0.3, 3.0][g.gen_range(0..3)];
        let f = random_polynomial(&mut g, 5, scale);
        let h = random_polynomial(&mut g, 5, scale);
        let k = random_polynomial(&mut g, 5, scale);
        let d = |x: &LaurentSeries, y: &LaurentSeries| frechet_distance(x, y, &domain, variant, 12).unwrap().value;
        prop_assert!((d(&f, &h) - d(&h, &f)).abs() < 1e-12);
        prop_assert!(d(&f, &k) <= d(&f, &h) + d(&h, &k) + 1e-12);
    }

    #[test]
    fn hadamard_residual_nonnegative(seed in any::<u64>(), degree in 0usize..=16, monomial in any::<bool>()) {
        let mut g = rng(seed);
        let f = if monomial {
            LaurentSeries::monomial(g.gen_range(-(degree as i64)..=degree as i64), random_in_disc(&mut g, 2.0) + 0.01)
        } else {
            random_polynomial(&mut g, degree, 1.0)
        };
        let mut radii: Vec<f64> = (0..3).map(|_| 0.55 + 1.4 * g.gen::<f64>()).collect();
        radii.sort_by(f64::total_cmp);
        prop_assume!(radii[1] - radii[0] > 1e-3 && radii[2] - radii[1] > 1e-3);
        let cfg = AnalysisConfig::default();
        let h = hadamard_residual(&f, radii[0], radii[1], radii[2], &cfg).unwrap();
        prop_assert!(h.residual >= -1e-9, "{:?}", h);
        prop_assert_eq!(h.equality_flag, f.support(0.0).len() == 1);
    }

    #[test]
    fn rotation_verdict_is_reverified(seed in any::<u64>(), rotation in any::<bool>()) {
        let mut g = rng(seed);
        let f = if rotation {
            LaurentSeries::monomial(1, unimodular(&mut g))
        } else {
            let mut p = random_polynomial(&mut g, 3, 0.2);
            p.set(1, unimodular(&mut g));
            p
        };
        let cfg = AnalysisConfig::default();
        match three_circle_rotation_test(&f, 0.6, 1.0, 1.6, &cfg).unwrap() {
            RotationVerdict::IsRotation { c } => {
                prop_assert!(rotation);
                prop_assert_eq!(f.support(0.0), vec![1]);
                prop_assert!((Complex64::new(c[0], c[1]).norm() - 1.0).abs() < 1e-9);
            }
            RotationVerdict::No { .. } => prop_assert!(!rotation),
        }
        let full = matches!(max_modulus_set(&f, 1.0, &cfg).unwrap().kind, MaxSetKind::FullCircle);
        prop_assert_eq!(full, rotation);
    }

    #[test]
    fn weighted_compositions_are_isometries(seed in any::<u64>(), degree in 0usize..=16, inversion in any::<bool>()) {
        let mut g = rng(seed);
        let f = random_polynomial(&mut g, degree, 1.0);
        let (alpha, beta) = (unimodular(&mut g), unimodular(&mut g));
        let op = if inversion { WeightedComposition::inversion(alpha, beta) } else { WeightedComposition::rotation(alpha, beta) }.unwrap();
        let image = op.apply(&f);
        let domain = AnnulusDomain::default();
        for n in 1..=6 {
            let a = seminorm(&f, &domain, n).unwrap();
            let b = seminorm(&image, &domain, n).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a, "n = {}: {} vs {}", n, a, b);
        }
    }

    #[test]
    fn group_laws(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (a1, b1, a2, b2) = (unimodular(&mut g), unimodular(&mut g), unimodular(&mut g), unimodular(&mut g));
        let n = 10;
        let m = |op: WeightedComposition| OperatorMatrix::from_operator(&op, n);
        let t1 = m(WeightedComposition::rotation(a1, b1).unwrap());
        let t2 = m(WeightedComposition::rotation(a2, b2).unwrap());
        let t12 = m(WeightedComposition::rotation(a1 * a2, b1 * b2).unwrap());
        prop_assert!(t1.compose(&t2).unwrap().max_entry_diff(&t12) < 1e-12);
        let s = m(WeightedComposition::inversion(a1, b1).unwrap());
        prop_assert!(s.compose(&s).unwrap().max_entry_diff(&OperatorMatrix::identity(n).scaled(a1 * a1)) < 1e-12);
    }

    #[test]
    fn unweighted_rotation_passes_composition_test(seed in any::<u64>()) {
        let beta = unimodular(&mut rng(seed));
        let op = WeightedComposition::rotation(Complex64::new(1.0, 0.0), beta).unwrap();
        let m = OperatorMatrix::from_operator(&op, 16);
        match composition_operator_test(&m, &AnnulusDomain::default(), 8, 1e-9).unwrap() {
            CompositionVerdict::Yes { symbol } => {
                prop_assert!(symbol.max_coeff_diff(&LaurentSeries::monomial(1, beta)) < 1e-12);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn winding_is_additive(seed in any::<u64>(), a in -4i64..=4, b in -4i64..=4) {
        let mut g = rng(seed);
        // c z^a (1 + q) with sum |q_k| < 1 winds exactly a times around 0 on T.
        let mut make = |k: i64| {
            let mut q = random_polynomial(&mut g, 3, 1.0);
            let total: f64 = q.coeffs().iter().map(|c| c.norm()).sum();
            q = q.scale(Complex64::new(0.6 / total, 0.0));
            let one = LaurentSeries::basis(0).resized(3);
            LaurentSeries::monomial(k, unimodular(&mut g)).multiply(&one.add(&q).unwrap()).unwrap()
        };
        let f = make(a);
        let h = make(b);
        let wf = winding_number(&f, 1.0).unwrap();
        let wh = winding_number(&h, 1.0).unwrap();
        prop_assert_eq!((wf, wh), (a, b));
        prop_assert_eq!(winding_number(&f.multiply(&h).unwrap(), 1.0).unwrap(), wf + wh);
    }

    #[test]
    fn reflect_is_an_involution(seed in any::<u64>(), degree in 0usize..=16) {
        let f = random_polynomial(&mut rng(seed), degree, 1.0);
        prop_assert_eq!(reflect(&reflect(&f)), f);
    }

    #[test]
    fn resolvent_verifies(seed in any::<u64>(), degree in 0usize..=16, off_circle in any::<bool>()) {
        let mut g = rng(seed);
        let op = WeightedComposition::rotation(unimodular(&mut g), unimodular(&mut g)).unwrap();
        let b = random_polynomial(&mut g, degree, 1.0);
        let lambda = if off_circle {
            let m = if g.gen::<bool>() { 0.05 + 0.9 * g.gen::<f64>() } else { 1.1 + 3.0 * g.gen::<f64>() };
            Complex64::from_polar(m, 2.0 * PI * g.gen::<f64>())
        } else {
            unimodular(&mut g)
        };
        match resolvent_solve(&op, lambda, &b, &ResolventConfig::default()) {
            Ok(sol) => {
                for k in -(degree as i64)..=degree as i64 {
                    let back = (op.weight(k) - lambda) * sol.f.coeff(k);
                    prop_assert!((back - b.coeff(k)).norm() < 1e-10);
                }
                prop_assert_eq!(sol.bounds_checked, off_circle);
            }
            Err(e) => prop_assert!(matches!(e, annulus::AnnulusError::SmallDivisor { .. }), "{:?}", e),
        }
    }

    #[test]
    fn emitted_eigenpairs_have_small_residual(seed in any::<u64>(), inversion in any::<bool>(), order in 1usize..=12) {
        let mut g = rng(seed);
        let alpha = unimodular(&mut g);
        let (op, claim) = if inversion {
            (WeightedComposition::inversion(alpha, unimodular(&mut g)).unwrap(), None)
        } else {
            // A primitive root of unity of the given order.
            let beta = Complex64::from_polar(1.0, 2.0 * PI / order as f64);
            (WeightedComposition::rotation(alpha, beta).unwrap(), Some(order))
        };
        let desc = spectrum(&op, claim).unwrap();
        let domain = AnnulusDomain::default();
        for p in &desc.points {
            prop_assert!((p.lambda.norm() - 1.0).abs() < 1e-12);
            for w in p.witness_series() {
                prop_assert!(eigenvector_check(&op, p.lambda, &w, &domain).unwrap() < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn factorization_round_trip(seed in any::<u64>(), n in -5i64..=5) {
        let mut g = rng(seed);
        let mut p = random_polynomial(&mut g, 8, 0.3);
        for k in -8..0 {
            p.set(k, Complex64::new(0.0, 0.0));
        }
        p.set(0, Complex64::new(0.0, p.coeff(0).im));
        let f = synthesize_unimodular(&p, n, 256, 1.25).unwrap();
        prop_assert!(unimodularity_defect(&f).unwrap() < 1e-10);
        let r = factor_unimodular(&f, None, &FactorConfig::default()).unwrap();
        prop_assert_eq!(r.winding, n);
        prop_assert!(r.residual < 1e-8);
        let expected = p.resized(40).exp_one_sided(40).unwrap();
        for k in 0..=40 {
            prop_assert!((r.g0.coeff(k) - expected.coeff(k)).norm() < 1e-8);
        }
    }
}
