use cavity_core::model::{block_coefficients, build_generator, SystemConfig};
use cavity_core::quartic::{char_coeffs, companion_roots, pairing_distance, solve_quartic, QuarticCoeffs};
use cavity_core::Matrix4c;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

/// Quartic coefficients written out by hand in terms of the block parameters
/// `k`, `g1`, `g2`, the detuning and the modulation frequency. They describe
/// the polynomial whose roots are `i E` for the eigenvalues `E` of the block
/// generator.
fn expanded_coefficients(k: [Complex64; 4], g1: f64, g2: f64, dl: f64, w: f64) -> [Complex64; 4] {
    let i = Complex64::new(0.0, 1.0);
    let [k1, k2, k3, k4] = k;
    let sum = k1 + k2 + k3 + k4;
    let b = -i * sum;
    let c = dl * dl + 2.0 * g1 * g1 + 2.0 * g2 * g2 + dl * k1
        - k1 * k2
        - k1 * k3
        - k2 * k3
        - dl * k4
        - k1 * k4
        - k2 * k4
        - k3 * k4
        - 2.0 * dl * w
        - w * k1
        + w * k4
        + w * w;
    let d = -i
        * (dl * k2 + dl * k1 * k2 + dl * dl * k3 + dl * k1 * k3
            - k1 * k2 * k3
            - dl * k2 * k4
            - k1 * k2 * k4
            - dl * k3 * k4
            - k1 * k3 * k4
            - k2 * k3 * k4
            + g1 * g1 * sum
            + g2 * g2 * sum
            - (k2 + k3) * (2.0 * dl + k1 - k4) * w
            + w * w * (k2 + k3));
    let e = g1.powi(4) + (g2 * g2 - k2 * (dl + k1 - w)) * (g2 * g2 + k3 * (dl - k4 - w))
        - g1 * g1 * (2.0 * g2 * g2 + dl * (k3 - k2) + k3 * (k1 - w) + k2 * (k4 + w));
    [b, c, d, e]
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

#[test]
fn generic_coefficients_match_expanded_formulas() {
    let i = Complex64::new(0.0, 1.0);
    let mut cfg = SystemConfig::resonant(0.1, 10.0, 1);
    cfg.gamma_field = [1e-3; 2];
    for (varpi, (n1, n2)) in [(0.0, (10, 10)), (PI, (10, 10)), (PI, (4, 19))] {
        cfg.varpi = varpi;
        let co = block_coefficients(&cfg, n1, n2).unwrap();
        let q = char_coeffs(&build_generator(&co));
        let [b, c, d, e] = expanded_coefficients(co.k, co.g1, co.g2, co.detuning, varpi);
        // substituting x = i E maps one polynomial onto the other
        assert!(rel(b, i * q.b) < 1e-10, "b: {b} vs {}", i * q.b);
        assert!(rel(c, -q.c) < 1e-10, "c: {c} vs {}", -q.c);
        assert!(rel(d, -i * q.d) < 1e-10, "d: {d} vs {}", -i * q.d);
        assert!(rel(e, q.e) < 1e-10, "e: {e} vs {}", q.e);
    }
}

fn random_symmetric(rng: &mut impl Rng) -> Matrix4c {
    let mut m = Matrix4c::zeros();
    for r in 0..4 {
        for c in r..4 {
            let z = loop {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if z.norm() <= 1.0 {
                    break z;
                }
            };
            m[(r, c)] = z;
            m[(c, r)] = z;
        }
    }
    m
}

#[test]
fn random_symmetric_matrices() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let mut worst_pair: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for _ in 0..1000 {
        let m = random_symmetric(&mut rng);
        let coeffs = char_coeffs(&m);
        let closed = solve_quartic(&coeffs);
        let companion = companion_roots(&coeffs);
        worst_residual = worst_residual.max(closed.max_residual());
        worst_pair = worst_pair.max(pairing_distance(&closed.roots, &companion.roots).0);
    }
    assert!(worst_residual < 1e-9, "{worst_residual:e}");
    assert!(worst_pair < 1e-8, "{worst_pair:e}");
}

#[test]
fn roots_are_eigenvalues() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for _ in 0..50 {
        let m = random_symmetric(&mut rng);
        let roots = solve_quartic(&char_coeffs(&m)).roots;
        let eig = m.eigenvalues().map(|v| [v[0], v[1], v[2], v[3]]);
        let schur = match eig {
            Some(e) => e,
            None => {
                let s = m.schur().eigenvalues().unwrap();
                [s[0], s[1], s[2], s[3]]
            }
        };
        assert!(pairing_distance(&roots, &schur).0 < 1e-7);
    }
}

fn symmetric_strategy() -> impl Strategy<Value = Matrix4c> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 10).prop_map(|v| {
        let mut m = Matrix4c::zeros();
        let mut it = v.into_iter();
        for r in 0..4 {
            for c in r..4 {
                let (re, im) = it.next().unwrap();
                m[(r, c)] = Complex64::new(re, im);
                m[(c, r)] = Complex64::new(re, im);
            }
        }
        m
    })
}

proptest! {
    #[test]
    fn vieta_relations_hold(m in symmetric_strategy()) {
        let q = char_coeffs(&m);
        let r = solve_quartic(&q).roots;
        let sum: Complex64 = r.iter().sum();
        let product: Complex64 = r.iter().product();
        let scale = 1.0 + q.b.norm();
        prop_assert!((sum + q.b).norm() < 1e-9 * scale);
        prop_assert!((product - q.e).norm() < 1e-9 * (1.0 + q.e.norm() + r.iter().map(|z| z.norm()).product::<f64>()));
    }

    #[test]
    fn real_coefficient_roots_come_in_conjugate_pairs(b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0, e in -3.0f64..3.0) {
        let q = QuarticCoeffs::from_real(b, c, d, e);
        let roots = solve_quartic(&q).roots;
        let conj = roots.map(|z| z.conj());
        prop_assert!(pairing_distance(&roots, &conj).0 < 1e-6);
    }
}
