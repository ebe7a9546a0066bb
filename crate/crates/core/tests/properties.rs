//! Randomised identities and serialization round trips.

use aw_harness::harness::{harness_params, time_domains, ProcessParams};
use aw_harness::qseries::{qbinomial, qpoch_finite, qpoch_infinite, QBase, TruncationPolicy};
use aw_harness::simulate::{sample_path, Trajectory};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // (z; q)_n = Σ_k [n k]_q (-1)^k q^{k(k-1)/2} z^k
    #[test]
    fn finite_q_binomial_theorem(z in -1.5f64..1.5, q in -0.9f64..0.9, n in 0usize..12) {
        let qb = QBase::new(q).unwrap();
        let (mut sum, mut scale) = (0.0, 0.0);
        for k in 0..=n {
            let t = qbinomial(n, k, qb).unwrap() * (-1f64).powi(k as i32) * q.powi((k * k.saturating_sub(1) / 2) as i32) * z.powi(k as i32);
            sum += t;
            scale += t.abs();
        }
        let lhs = qpoch_finite(c(z), qb, n).re;
        prop_assert!((lhs - sum).abs() <= 1e-13 * scale.max(1.0), "{lhs} vs {sum}");
    }

    #[test]
    fn q_pascal(q in -0.9f64..0.9, n in 1usize..20, k in 1usize..20) {
        prop_assume!(k < n);
        let qb = QBase::new(q).unwrap();
        let lhs = qbinomial(n, k, qb).unwrap();
        let rhs = qbinomial(n - 1, k - 1, qb).unwrap() + q.powi(k as i32) * qbinomial(n - 1, k, qb).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn infinite_product_splits(re in -2.0f64..2.0, im in -2.0f64..2.0, q in -0.9f64..0.9, n in 0usize..15) {
        let (qb, pol) = (QBase::new(q).unwrap(), TruncationPolicy::default());
        let a = Complex64::new(re, im);
        let whole = qpoch_infinite(a, qb, &pol).unwrap();
        let split = qpoch_finite(a, qb, n) * qpoch_infinite(a * q.powi(n as i32), qb, &pol).unwrap();
        prop_assert!((whole - split).norm() <= 1e-12 * whole.norm().max(1.0));
    }

    #[test]
    fn admissible_params_survive_json(a in -2.0f64..2.0, b in -2.0f64..2.0, cc in -2.0f64..2.0, d in -2.0f64..2.0, q in -0.95f64..0.95) {
        let Ok(p) = ProcessParams::real(a, b, cc, d, q) else { return Ok(()) };
        harness_params(&p).unwrap();
        time_domains(&p).unwrap();
        let back: ProcessParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn complex_params_and_trajectories_round_trip() {
    let p = ProcessParams::new(
        Complex64::new(0.3, 0.4),
        Complex64::new(0.3, -0.4),
        c(0.5),
        c(-0.2),
        0.6,
    )
    .unwrap();
    let text = serde_json::to_string(&p).unwrap();
    assert_eq!(serde_json::from_str::<ProcessParams>(&text).unwrap(), p);

    let tr = sample_path(&p, &[0.2, 0.7, 1.1], 9).unwrap();
    let back: Trajectory = serde_json::from_str(&serde_json::to_string(&tr).unwrap()).unwrap();
    assert_eq!(back, tr);
}
