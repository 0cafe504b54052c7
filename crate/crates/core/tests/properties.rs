//! Property tests for the structural invariants: norm axioms, series-route
//! agreement, measure refinement consistency and the ultrametric.

use num_complex::Complex64;
use proptest::prelude::*;

use ruelle_core::potential::{banach_norm, TabulatedFunction, ThetaProfile};
use ruelle_core::shift::{metric_distance, Point, TransitionMatrix, Word};
use ruelle_core::transfer::{build_matrix, spectrum, DEFAULT_CLUSTER_TOL};
use ruelle_core::zeta::{zeta_coeffs_from_determinant, zeta_coeffs_from_orbits};

fn full2() -> TransitionMatrix {
    TransitionMatrix::new(&[vec![1, 1], vec![1, 1]]).unwrap()
}

fn golden() -> TransitionMatrix {
    TransitionMatrix::new(&[vec![1, 1], vec![1, 0]]).unwrap()
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len).prop_map(|v| {
        v.into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect()
    })
}

/// Test oracle: coefficients of exp(sum a_k z^k) by direct power-series
/// exponentiation (sum of truncated polynomial powers over factorials),
/// exact through the truncation degree since a has no constant term.
fn exp_series_oracle(a: &[Complex64], degree: usize) -> Vec<Complex64> {
    let mut result = vec![Complex64::default(); degree + 1];
    result[0] = Complex64::new(1.0, 0.0);
    let mut power = result.clone();
    let mut factorial = 1.0f64;
    for j in 1..=degree {
        // power <- power * a, truncated
        let mut next = vec![Complex64::default(); degree + 1];
        for (i, &p) in power.iter().enumerate() {
            for (k, &c) in a.iter().enumerate() {
                if i + k < degree {
                    next[i + k + 1] += p * c;
                }
            }
        }
        power = next;
        factorial *= j as f64;
        for (r, &p) in result.iter_mut().zip(power.iter()) {
            *r += p / factorial;
        }
    }
    result
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn banach_norm_is_a_norm(
        depth in 1usize..=3,
        seed in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16),
        alpha_re in -2.0..2.0f64,
        alpha_im in -2.0..2.0f64,
    ) {
        let a = full2();
        let words = a.enumerate_words(depth, 100).unwrap();
        let take = |offset: usize| -> TabulatedFunction {
            let values: Vec<Complex64> = (0..words.len())
                .map(|i| {
                    let (re, im) = seed[(offset + i) % seed.len()];
                    Complex64::new(re, im)
                })
                .collect();
            TabulatedFunction::new(depth, words.clone(), values).unwrap()
        };
        let f = take(0);
        let g = take(7);
        let theta = ThetaProfile::geometric(1.0, 0.5).unwrap();
        let nf = banach_norm(&f, &theta).unwrap();
        let ng = banach_norm(&g, &theta).unwrap();
        let nsum = banach_norm(&f.add(&g, &a).unwrap(), &theta).unwrap();
        prop_assert!(nsum <= nf + ng + 1e-12);

        let alpha = Complex64::new(alpha_re, alpha_im);
        let nscaled = banach_norm(&f.scale(alpha), &theta).unwrap();
        prop_assert!((nscaled - alpha.norm() * nf).abs() <= 1e-12 * (1.0 + nf));
    }

    #[test]
    fn newton_matches_direct_exponentiation(
        zs in proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..=8),
    ) {
        let orbit_sums: Vec<Complex64> =
            zs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let newton = zeta_coeffs_from_orbits(&orbit_sums);
        let degree = orbit_sums.len();
        let log_coeffs: Vec<Complex64> = orbit_sums
            .iter()
            .enumerate()
            .map(|(q, z)| -z / (q + 1) as f64)
            .collect();
        let direct = exp_series_oracle(&log_coeffs, degree);
        for (n, d) in newton.iter().zip(direct.iter()) {
            prop_assert!(
                (n - d).norm() <= 1e-10 * n.norm().max(1.0),
                "newton {n:?} vs direct {d:?}"
            );
        }
    }

    #[test]
    fn determinant_series_matches_eigen_product(
        values in complex_vec(4),
        degree in 3usize..=8,
    ) {
        // values scaled into a band that keeps e^f well-conditioned
        let a = full2();
        let words = a.enumerate_words(2, 100).unwrap();
        let table = TabulatedFunction::new(
            2,
            words,
            values.iter().map(|v| 0.4 * v).collect(),
        )
        .unwrap();
        let tm = build_matrix(&table, &a).unwrap();
        let coeffs = zeta_coeffs_from_determinant(&tm, degree);
        let spec = spectrum(&tm, DEFAULT_CLUSTER_TOL).unwrap();
        // expand prod (1 - lambda z) over the full spectrum with multiplicity
        let mut expanded = vec![Complex64::default(); degree + 1];
        expanded[0] = Complex64::new(1.0, 0.0);
        for lambda in spec.expanded() {
            for k in (1..=degree).rev() {
                let prev = expanded[k - 1];
                expanded[k] -= lambda * prev;
            }
        }
        for (c, e) in coeffs.iter().zip(expanded.iter()) {
            prop_assert!(
                (c - e).norm() <= 1e-8 * c.norm().max(1.0),
                "determinant route {c:?} vs eigenvalue product {e:?}"
            );
        }
        prop_assert_eq!(spec.multiplicities().iter().sum::<usize>(), tm.dim());
    }

    #[test]
    fn parry_masses_refine_consistently(
        pick in 0usize..1000,
        depth in 1usize..=6,
        shift in 0usize..=1,
    ) {
        let a = if shift == 0 { full2() } else { golden() };
        let mu = ruelle_core::shift::MarkovMeasure::parry(&a);
        let words = a.enumerate_words(depth, 100_000).unwrap();
        let w = &words[pick % words.len()];
        let mass = mu.cylinder_mass(w);
        prop_assert!(mass > 0.0);
        let refined: f64 = (0..a.n())
            .filter(|&s| a.entry(w[w.len() - 1], s as u8))
            .map(|s| {
                let mut child = w.symbols().to_vec();
                child.push(s as u8);
                mu.cylinder_mass(&child)
            })
            .sum();
        prop_assert!((mass - refined).abs() <= 1e-12 * mass);
    }

    #[test]
    fn metric_is_an_ultrametric(
        px in proptest::collection::vec(0u8..2, 0..4),
        py in proptest::collection::vec(0u8..2, 0..4),
        pz in proptest::collection::vec(0u8..2, 0..4),
        cx in proptest::collection::vec(0u8..2, 1..4),
        cy in proptest::collection::vec(0u8..2, 1..4),
        cz in proptest::collection::vec(0u8..2, 1..4),
        theta in 0.1..0.9f64,
    ) {
        let point = |p: &[u8], c: &[u8]| {
            Point::new(Word::new(p.to_vec()), Word::new(c.to_vec())).unwrap()
        };
        let x = point(&px, &cx);
        let y = point(&py, &cy);
        let z = point(&pz, &cz);
        let dxy = metric_distance(&x, &y, theta).unwrap();
        let dyx = metric_distance(&y, &x, theta).unwrap();
        let dyz = metric_distance(&y, &z, theta).unwrap();
        let dxz = metric_distance(&x, &z, theta).unwrap();
        prop_assert_eq!(dxy, dyx);
        prop_assert!(dxz <= dxy.max(dyz) + 1e-15);
        prop_assert_eq!(dxy == 0.0, x.seq_eq(&y));
    }
}
