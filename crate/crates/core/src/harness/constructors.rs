//! Explicit `(A, B, C, D, q)` for four families of prescribed greeks.

use num_complex::Complex64;

use super::{validate, ProcessParams};
use crate::error::{Error, Result};
use crate::qseries::QBase;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::HypothesisViolated(what.to_string()))
    }
}

/// `±√x` as a complex number: `i√|x|` for negative `x`.
fn csqrt(x: f64) -> Complex64 {
    if x >= 0.0 {
        re(x.sqrt())
    } else {
        Complex64::new(0.0, (-x).sqrt())
    }
}

fn finish(a: Complex64, b: Complex64, c: Complex64, d: Complex64, q: f64) -> Result<ProcessParams> {
    let q =
        QBase::new(q).map_err(|_| Error::HypothesisViolated(format!("-1 < q < 1 (q = {q})")))?;
    validate(a, b, c, d, q)
}

/// `η = 0`, `σ = 0`.
pub fn q_meixner(theta: f64, tau: f64, gamma: f64) -> Result<ProcessParams> {
    require(gamma > -1.0 && gamma < 1.0, "-1 < γ < 1")?;
    let q = gamma;
    let s = 2.0 * (1.0 - q).sqrt();
    let root = csqrt(theta * theta - 4.0 * tau);
    let c = (re(-theta) + root) / s;
    let d = (re(-theta) - root) / s;
    finish(re(0.0), re(0.0), c, d, q)
}

/// `σ = 0`, `τ = 0`.
pub fn bi_poisson(eta: f64, theta: f64, gamma: f64) -> Result<ProcessParams> {
    require(gamma > -1.0 && gamma < 1.0, "-1 < γ < 1")?;
    require(1.0 + eta * theta > gamma.max(0.0), "1 + ηθ > max{γ, 0}")?;
    let q = gamma;
    let r = (eta * theta + 1.0 - q).sqrt();
    finish(re(0.0), re(-eta / r), re(0.0), re(-theta / r), q)
}

/// `q = 0`, `γ = -στ`.
pub fn free_harness(eta: f64, theta: f64, sigma: f64, tau: f64) -> Result<ProcessParams> {
    let st = sigma * tau;
    require((0.0..1.0).contains(&st), "0 <= στ < 1")?;
    require(2.0 + eta * theta + 2.0 * st >= 0.0, "2 + ηθ + 2στ >= 0")?;
    let alpha = (eta + theta * sigma) / (1.0 - st);
    let beta = (eta * tau + theta) / (1.0 - st);
    require(1.0 + alpha * beta > 0.0, "1 + αβ > 0")?;
    let den = 2.0 * (1.0 + alpha * beta).sqrt();
    // α - βσ = η and β - ατ = θ exactly; the differences cancel badly as στ → 1
    let ra = csqrt(eta * eta - 4.0 * sigma);
    let rc = csqrt(theta * theta - 4.0 * tau);
    let a = -(re(alpha + beta * sigma) - ra) / den;
    let b = -(re(alpha + beta * sigma) + ra) / den;
    let c = -(re(beta + alpha * tau) - rc) / den;
    let d = -(re(beta + alpha * tau) + rc) / den;
    finish(a, b, c, d, 0.0)
}

/// `η = 0`, `θ = 0`.
pub fn purely_quadratic(sigma: f64, tau: f64, gamma: f64) -> Result<ProcessParams> {
    require(sigma > 0.0 && tau > 0.0, "σ > 0 and τ > 0")?;
    let st = sigma * tau;
    require(st < 1.0, "στ < 1")?;
    require(
        gamma > -1.0 && gamma < 1.0 - 2.0 * st.sqrt(),
        "-1 < γ < 1 - 2√(στ)",
    )?;
    let q = 4.0 * (gamma + st) / (1.0 + gamma + ((1.0 - gamma).powi(2) - 4.0 * st).sqrt()).powi(2);
    let base = (1.0 - q) + ((1.0 - q).powi(2) + 4.0 * q * st).sqrt();
    let a = Complex64::new(0.0, (2.0 * sigma).sqrt() / base.sqrt());
    let c = Complex64::new(0.0, (2.0 * tau).sqrt() / base.sqrt());
    finish(a, -a, c, -c, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{harness_params, HarnessParams};

    fn close(g: &HarnessParams, want: [f64; 5]) {
        let got = [g.eta, g.theta, g.sigma, g.tau, g.gamma];
        for (x, y) in got.iter().zip(want) {
            assert!((x - y).abs() < 1e-10, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn q_meixner_branches() {
        let p = q_meixner(0.1, 0.2, 0.3).unwrap();
        assert!(p.c.im != 0.0 && (p.c - p.d.conj()).norm() < 1e-15);
        close(&harness_params(&p).unwrap(), [0.0, 0.1, 0.0, 0.2, 0.3]);
        let p = q_meixner(1.0, -0.5, -0.2).unwrap();
        close(&harness_params(&p).unwrap(), [0.0, 1.0, 0.0, -0.5, -0.2]);
        // τ >= 0 gives T_0 = 0
        let td = crate::harness::time_domains(&q_meixner(0.3, 0.1, 0.5).unwrap()).unwrap();
        assert_eq!(td.j.0, 0.0);
        let td = crate::harness::time_domains(&q_meixner(0.3, -0.1, 0.5).unwrap()).unwrap();
        assert!((td.j.0 - 0.1 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn bi_poisson_bd() {
        let (eta, theta, gamma) = (0.7, 1.2, 0.4);
        let p = bi_poisson(eta, theta, gamma).unwrap();
        let bd = (p.b * p.d).re;
        assert!((bd - eta * theta / (eta * theta + 1.0 - gamma)).abs() < 1e-14 && bd < 1.0);
        close(&harness_params(&p).unwrap(), [eta, theta, 0.0, 0.0, gamma]);
        assert!(matches!(
            bi_poisson(-2.0, 1.0, 0.0),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn free_harness_round_trip() {
        for &(eta, theta, sigma, tau) in &[
            (0.3, -0.4, 0.2, 0.5),
            (1.0, 1.0, 0.0, 0.0),
            (-0.5, 0.2, 2.0, 0.3),
        ] {
            let p = free_harness(eta, theta, sigma, tau).unwrap();
            let g = harness_params(&p).unwrap();
            close(&g, [eta, theta, sigma, tau, -sigma * tau]);
        }
    }

    #[test]
    fn purely_quadratic_round_trip() {
        let p = purely_quadratic(0.1, 0.1, 0.0).unwrap();
        assert!(p.a.re == 0.0 && p.b == -p.a && p.c == -p.d);
        close(&harness_params(&p).unwrap(), [0.0, 0.0, 0.1, 0.1, 0.0]);
        close(
            &harness_params(&purely_quadratic(0.5, 0.8, -0.6).unwrap()).unwrap(),
            [0.0, 0.0, 0.5, 0.8, -0.6],
        );
        assert!(purely_quadratic(0.5, 0.5, 0.2).is_err());
    }
}
