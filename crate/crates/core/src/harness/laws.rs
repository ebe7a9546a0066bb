use num_complex::Complex64;

use super::ProcessParams;
use crate::askey_wilson::{measure, AWMeasure, AWParams};
use crate::error::{Error, Result};
use crate::qseries::{real_part, TruncationPolicy};

/// How a kernel is anchored at the earlier time: a point of `[-1, 1]` in the
/// continuous part, or an atom `(u + 1/u)/2` given by its root `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelStart {
    Continuous(f64),
    Atom(f64),
}

impl KernelStart {
    /// Anchor at an arbitrary real point: continuous inside `[-1, 1]`,
    /// otherwise through the root `x + √(x² - 1)`.
    pub fn from_point(x: f64) -> Self {
        if x.abs() <= 1.0 {
            KernelStart::Continuous(x)
        } else {
            KernelStart::Atom(x + (x * x - 1.0).sqrt())
        }
    }

    /// `(m e^{iθ_x}, m e^{-iθ_x})`, or `(m u, m/u)` for an atom.
    pub fn pair(self, m: f64) -> (Complex64, Complex64) {
        match self {
            KernelStart::Continuous(x) => {
                let x = x.clamp(-1.0, 1.0);
                let e = Complex64::new(x, (1.0 - x * x).sqrt());
                (e * m, e.conj() * m)
            }
            KernelStart::Atom(u) => (Complex64::new(m * u, 0.0), Complex64::new(m / u, 0.0)),
        }
    }
}

/// AW parameters of `π_t`: `(A√t, B√t, C/√t, D/√t)`.
pub fn marginal_params(p: &ProcessParams, t: f64) -> AWParams {
    let r = t.sqrt();
    AWParams::new_unchecked(p.a * r, p.b * r, p.c / r, p.d / r, p.q)
}

/// The law of `Y_t`.
pub fn marginal(p: &ProcessParams, t: f64) -> Result<AWMeasure> {
    let td = super::time_domains(p)?;
    if !td.contains_i(t) {
        return Err(Error::Domain(format!(
            "t = {t} outside I = ({}, {})",
            td.i.0, td.i.1
        )));
    }
    measure(&marginal_params(p, t), &TruncationPolicy::default())
}

/// AW parameters of `P_{s,t}(x, ·)`: `(A√t, B√t)` and the start pair scaled by `√(s/t)`.
pub fn kernel_params(p: &ProcessParams, s: f64, t: f64, start: KernelStart) -> AWParams {
    let r = t.sqrt();
    let (c, d) = start.pair((s / t).sqrt());
    AWParams::new_unchecked(p.a * r, p.b * r, c, d, p.q)
}

/// Locate `x` in the support of `π_s`.
pub fn locate(m: &AWMeasure, x: f64) -> Result<KernelStart> {
    if let Some(a) = m
        .atoms
        .iter()
        .filter(|a| a.mass > 0.0)
        .find(|a| (a.location - x).abs() <= 1e-9 * a.location.abs().max(1.0))
    {
        return Ok(KernelStart::Atom(a.root));
    }
    if m.has_continuous && x.abs() <= 1.0 {
        return Ok(KernelStart::Continuous(x));
    }
    Err(Error::UnsupportedPoint(x))
}

/// The transition law `P_{s,t}(x, ·)`.
pub fn transition(p: &ProcessParams, s: f64, t: f64, x: f64) -> Result<AWMeasure> {
    if !(s < t) {
        return Err(Error::Domain(format!(
            "transition needs s < t, got s = {s}, t = {t}"
        )));
    }
    let td = super::time_domains(p)?;
    if !td.contains_i(s) || !td.contains_i(t) {
        return Err(Error::Domain(format!(
            "s = {s}, t = {t} must lie in I = ({}, {})",
            td.i.0, td.i.1
        )));
    }
    let start = locate(&marginal(p, s)?, x)?;
    measure(&kernel_params(p, s, t, start), &TruncationPolicy::default())
}

fn nonzero(v: f64, what: &str) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        Err(Error::Singular(format!("{what} vanishes")))
    } else {
        Ok(v)
    }
}

fn pi_factor(p: &ProcessParams) -> Result<f64> {
    let big_p = p.abcd();
    let q = p.qv();
    let den = nonzero(
        (1.0 - big_p).powi(2) * (1.0 - q * big_p),
        "(1-ABCD)²(1-qABCD)",
    )?;
    Ok((1.0 - q) * p.pi()? / den)
}

/// `E(Y_t)`.
pub fn e_y(p: &ProcessParams, t: f64) -> Result<f64> {
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let num = real_part(
        (a + b - a * b * (c + d)) * t + c + d - c * d * (a + b),
        "E(Y_t) numerator",
    )?;
    Ok(num / nonzero(2.0 * t.sqrt() * (1.0 - p.abcd()), "2√t(1-ABCD)")?)
}

/// `Var(Y_t)`.
pub fn var_y(p: &ProcessParams, t: f64) -> Result<f64> {
    Ok(pi_factor(p)? * (t - p.cd()) * (1.0 - p.ab() * t) / nonzero(4.0 * t, "t")?)
}

/// `Cov(Y_s, Y_t)`; symmetric in its time arguments.
pub fn cov_y(p: &ProcessParams, s: f64, t: f64) -> Result<f64> {
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    Ok(pi_factor(p)? * (s - p.cd()) * (1.0 - p.ab() * t) / nonzero(4.0 * (s * t).sqrt(), "st")?)
}

/// `E(Y_t | Y_s = x)`.
pub fn cond_e_y(p: &ProcessParams, s: f64, t: f64, x: f64) -> Result<f64> {
    let apb = real_part(p.a + p.b, "A+B")?;
    let ab = p.ab();
    let den = nonzero(2.0 * t.sqrt() * (1.0 - ab * s), "2√t(1-ABs)")?;
    Ok((apb * (t - s) + 2.0 * (1.0 - ab * t) * s.sqrt() * x) / den)
}

/// `Var(Y_t | Y_s = x)`.
pub fn cond_var_y(p: &ProcessParams, s: f64, t: f64, x: f64) -> Result<f64> {
    let ab = p.ab();
    let q = p.qv();
    let rs = s.sqrt();
    let one = Complex64::new(1.0, 0.0);
    let quad = real_part(
        (one + p.a * p.a * s - p.a * (2.0 * rs * x)) * (one + p.b * p.b * s - p.b * (2.0 * rs * x)),
        "conditional variance factor",
    )?;
    let den = nonzero(
        4.0 * t * (1.0 - ab * s).powi(2) * (1.0 - q * ab * s),
        "4t(1-ABs)²(1-qABs)",
    )?;
    Ok((1.0 - q) * (t - s) * (1.0 - ab * t) * quad / den)
}

/// `E(Y_t | Y_s = x, Y_u = z)`.
pub fn bicond_e_y(s: f64, t: f64, u: f64, x: f64, z: f64) -> Result<f64> {
    let den = nonzero(t.sqrt() * (u - s), "√t(u-s)")?;
    Ok(((u - t) * s.sqrt() * x + (t - s) * u.sqrt() * z) / den)
}

/// `Var(Y_t | Y_s = x, Y_u = z)`; free of `A, B, C, D`.
pub fn bicond_var_y(q: f64, s: f64, t: f64, u: f64, x: f64, z: f64) -> Result<f64> {
    let den = nonzero(t * (u - q * s), "t(u-qs)")?;
    let (rs, ru) = (s.sqrt(), u.sqrt());
    let inner = 0.25 - (u * rs * x - s * ru * z) * (ru * z - rs * x) / (u - s).powi(2);
    Ok((1.0 - q) * (u - t) * (t - s) / den * inner)
}

/// AW parameters of the law of `Y_t` given `Y_s` and `Y_u`.
pub fn bicond_params(
    p: &ProcessParams,
    s: f64,
    t: f64,
    u: f64,
    past: KernelStart,
    future: KernelStart,
) -> AWParams {
    let (a, b) = future.pair((t / u).sqrt());
    let (c, d) = past.pair((s / t).sqrt());
    AWParams::new_unchecked(a, b, c, d, p.q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed() -> ProcessParams {
        // real D with D² above part of I produces atoms u_j(t)
        ProcessParams::real(0.3, -0.5, 0.2, 1.6, 0.4).unwrap()
    }

    fn small() -> ProcessParams {
        let z = Complex64::from_polar(0.5, 0.9);
        ProcessParams::new(
            Complex64::new(0.4, 0.0),
            Complex64::new(-0.3, 0.0),
            z,
            z.conj(),
            -0.35,
        )
        .unwrap()
    }

    #[test]
    fn small_parameters_are_continuous() {
        let m = marginal(&small(), 1.0).unwrap();
        assert!(m.atoms.iter().all(|a| a.mass == 0.0));
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_moments_match_closed_forms() {
        for p in [small(), mixed()] {
            let td = super::super::time_domains(&p).unwrap();
            for &t in &[0.6, 1.0, 1.7] {
                if !td.contains_i(t) {
                    continue;
                }
                let m = marginal(&p, t).unwrap();
                let mean = m.moment(1);
                assert!((mean - e_y(&p, t).unwrap()).abs() < 1e-10, "{p:?} t = {t}");
                assert!((m.moment(2) - mean * mean - var_y(&p, t).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn atoms_appear_for_large_d() {
        let p = mixed();
        let m = marginal(&p, 0.5).unwrap();
        assert!(m.atoms.iter().any(|a| a.mass > 0.0));
        assert!((m.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kernel_moments_match_closed_forms() {
        let p = mixed();
        let (s, t) = (0.5, 1.3);
        let ms = marginal(&p, s).unwrap();
        let mut xs = vec![-0.7, 0.1, 0.95];
        xs.extend(ms.atom_locations());
        for x in xs {
            let k = transition(&p, s, t, x).unwrap();
            assert!((k.total_mass() - 1.0).abs() < 1e-10);
            let mean = k.moment(1);
            assert!(
                (mean - cond_e_y(&p, s, t, x).unwrap()).abs() < 1e-10,
                "x = {x}"
            );
            assert!((k.moment(2) - mean * mean - cond_var_y(&p, s, t, x).unwrap()).abs() < 1e-10);
        }
        assert!(matches!(
            transition(&p, s, t, 5.0),
            Err(Error::UnsupportedPoint(_))
        ));
    }

    #[test]
    fn continuous_kernel_pair_has_modulus() {
        let p = small();
        let k = kernel_params(&p, 0.4, 0.9, KernelStart::Continuous(0.3));
        let [_, _, c, d] = k.as_array();
        assert!((c.norm() - (0.4f64 / 0.9).sqrt()).abs() < 1e-15);
        assert!((c - d.conj()).norm() < 1e-15);
    }

    #[test]
    fn covariance_at_equal_times_is_variance() {
        let p = small();
        assert!((cov_y(&p, 0.8, 0.8).unwrap() - var_y(&p, 0.8).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn covariance_via_conditioning() {
        let p = mixed();
        let (s, t) = (0.5, 1.3);
        let m = marginal(&p, s).unwrap();
        let exy = m.expect(|x| x * cond_e_y(&p, s, t, x).unwrap());
        let cov = exy - e_y(&p, s).unwrap() * e_y(&p, t).unwrap();
        assert!((cov - cov_y(&p, s, t).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn two_sided_law_moments() {
        let p = small();
        let q = p.qv();
        let (s, t, u) = (0.3, 0.7, 1.5);
        for &(x, z) in &[(0.2, -0.4), (-0.9, 0.9), (0.5, 0.5)] {
            let bp = bicond_params(
                &p,
                s,
                t,
                u,
                KernelStart::Continuous(x),
                KernelStart::Continuous(z),
            );
            let m = measure(&bp, &TruncationPolicy::default()).unwrap();
            assert!((m.total_mass() - 1.0).abs() < 1e-10);
            let mean = m.moment(1);
            assert!((mean - bicond_e_y(s, t, u, x, z).unwrap()).abs() < 1e-10);
            let v = bicond_var_y(q, s, t, u, x, z).unwrap();
            assert!(v >= 0.0);
            assert!((m.moment(2) - mean * mean - v).abs() < 1e-10);
        }
    }

    #[test]
    fn outside_domain_rejected() {
        let p = ProcessParams::real(0.5, 0.9, 0.3, 0.4, 0.5).unwrap();
        assert!(marginal(&p, 0.05).is_err());
    }
}
