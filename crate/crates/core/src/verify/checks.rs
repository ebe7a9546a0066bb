//! Residuals of individual identities. Every function returns a nonnegative
//! number (absolute or relative, as documented); thresholds live in the runner.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::askey_wilson::{measure, AWMeasure, AWParams};
use crate::error::{Error, Result};
use crate::harness::{
    bicond_e_y, bicond_params, bicond_var_y, harness_params, kernel_params, locate, marginal,
    time_domains, HarnessParams, KernelStart, ProcessParams,
};
use crate::qseries::{
    phi_partial, qbinomial, qpoch_finite, qpoch_infinite, qpoch_multi, Order, QBase,
    TruncationPolicy,
};
use crate::quad::{integrate, QuadOptions};
use crate::simulate::{bridge_endpoints, Endpoint};

fn rel(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// `(α)_{M+L}` against `(q^M α)_L (α)_M`, relative.
pub fn poch_shift(alpha: Complex64, q: QBase, m: usize, l: usize) -> f64 {
    let lhs = qpoch_finite(alpha, q, m + l);
    let rhs = qpoch_finite(alpha * q.get().powi(m as i32), q, l) * qpoch_finite(alpha, q, m);
    rel(lhs, rhs)
}

/// `(α)_M` against `(-α)^M q^{M(M-1)/2} (q/(q^M α))_M`, relative.
pub fn poch_inversion(alpha: Complex64, q: QBase, m: usize) -> f64 {
    let qv = q.get();
    let lhs = qpoch_finite(alpha, q, m);
    let rhs = (-alpha).powi(m as i32)
        * qv.powi((m * (m.max(1) - 1) / 2) as i32)
        * qpoch_finite(qv / (qv.powi(m as i32) * alpha), q, m);
    rel(lhs, rhs)
}

/// `(a)_∞ / (1 - a)` against `(aq)_∞`, relative.
pub fn poch_infinite_shift(a: Complex64, q: QBase, policy: &TruncationPolicy) -> Result<f64> {
    let lhs = qpoch_infinite(a, q, policy)? / (1.0 - a);
    Ok(rel(lhs, qpoch_infinite(a * q.get(), q, policy)?))
}

/// `[N k]_q` against `[N N-k]_q`, relative.
pub fn qbinomial_symmetry(n: usize, k: usize, q: QBase) -> Result<f64> {
    let (x, y) = (qbinomial(n, k, q)?, qbinomial(n, n - k, q)?);
    Ok((x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
}

/// `|∫ density + Σ atoms - 1|`.
pub fn normalization(m: &AWMeasure) -> f64 {
    (m.total_mass() - 1.0).abs()
}

/// Closed-form mean and variance against quadrature (absolute, larger of the two).
pub fn moments(m: &AWMeasure) -> Result<f64> {
    let mean = m.moment(1);
    let var = m.expect(|x| (x - mean) * (x - mean));
    Ok((mean - m.params.mean()?)
        .abs()
        .max((var - m.params.variance()?).abs()))
}

/// `max_{n≠k≤n_max} |∫ w_n w_k dν| / √(∫ w_n² ∫ w_k²)` for the monic `w_n`
/// (`w̄_n` is normalised at `(a + 1/a)/2`, which is badly scaled for small `a`).
pub fn orthogonality(m: &AWMeasure, n_max: usize) -> Result<f64> {
    let p = &m.params;
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); n_max + 1]; n_max + 1];
    for (i, row) in gram.iter_mut().enumerate() {
        for (j, g) in row.iter_mut().enumerate().skip(i) {
            *g = m.expect(|x: f64| {
                let a = p.eval_monic(i, x).unwrap_or(Complex64::new(f64::NAN, 0.0));
                let b = p.eval_monic(j, x).unwrap_or(Complex64::new(f64::NAN, 0.0));
                a * b.conj()
            });
        }
    }
    let mut worst = 0.0f64;
    for i in 0..=n_max {
        for j in i + 1..=n_max {
            let scale = (gram[i][i].norm() * gram[j][j].norm()).sqrt();
            let r = gram[i][j].norm() / scale;
            worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
        }
    }
    Ok(worst)
}

/// `(γ-1)² - 4στ` against `(1-ABCD)²(1-q)²/(1-qABCD)²`.
pub fn discriminant_identity(p: &ProcessParams) -> Result<f64> {
    let g = harness_params(p)?;
    let (big_p, q) = (p.abcd(), p.qv());
    let want = ((1.0 - big_p) * (1.0 - q) / (1.0 - q * big_p)).powi(2);
    Ok((g.discriminant() - want).abs())
}

/// `J` from the greeks, from the original parameters, and as `h(I)`.
pub fn time_domain_agreement(p: &ProcessParams) -> Result<f64> {
    let td = time_domains(p)?;
    let g = harness_params(p)?.time_domain();
    let o = p.j_from_original();
    let d = |a: f64, b: f64| {
        if a.is_infinite() || b.is_infinite() {
            if a == b {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (a - b).abs() / a.abs().max(1.0)
        }
    };
    Ok(d(td.j.0, g.0)
        .max(d(td.j.1, g.1))
        .max(d(td.j.0, o.0))
        .max(d(td.j.1, o.1)))
}

pub fn greeks_distance(g: &HarnessParams, want: [f64; 5]) -> f64 {
    [g.eta, g.theta, g.sigma, g.tau, g.gamma]
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn nan_on_err(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-11,
        max_intervals: 400,
    }
}

/// Density of the continuous part of `ν(·; p)` at `y`, 0 when there is none.
fn density_at(p: &AWParams, y: f64) -> Result<f64> {
    let m = measure(p, &TruncationPolicy::default())?;
    if m.has_continuous {
        m.density(y)
    } else {
        Ok(0.0)
    }
}

/// `∫ f(x; am, bm, c, d) f(y; a, b, m e^{iθ_x}, m e^{-iθ_x}) dx` against
/// `f(y; a, b, cm, dm)`, absolute, maximised over `ys`.
pub fn projection_identity(p: &AWParams, m: f64, ys: &[f64]) -> Result<f64> {
    let (a, b, c, d, q) = (p.a, p.b, p.c, p.d, p.q);
    if !(m.abs() < 1.0) {
        return Err(Error::Domain(format!("|m| < 1 needed, got {m}")));
    }
    let outer = measure(
        &AWParams::new(a * m, b * m, c, d, q)?,
        &TruncationPolicy::default(),
    )?;
    let target = measure(
        &AWParams::new(a, b, c * m, d * m, q)?,
        &TruncationPolicy::default(),
    )?;
    let mut worst = 0.0f64;
    for &y in ys {
        let lhs = integrate(
            |th: f64| {
                let e = Complex64::from_polar(m, th);
                outer.theta_density(th)
                    * nan_on_err(density_at(
                        &AWParams::new_unchecked(a, b, e, e.conj(), q),
                        y,
                    ))
            },
            0.0,
            PI,
            &quad_opts(),
        )
        .value;
        let r = (lhs - target.density(y)?).abs();
        worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    Ok(worst)
}

/// Mass that `P_{s,t}(start, ·)` puts on the point `v`.
fn kernel_atom_mass(p: &ProcessParams, s: f64, t: f64, start: KernelStart, v: f64) -> Result<f64> {
    let k = measure(&kernel_params(p, s, t, start), &TruncationPolicy::default())?;
    Ok(k.atoms
        .iter()
        .filter(|a| (a.location - v).abs() <= 1e-9 * v.abs().max(1.0))
        .map(|a| a.mass)
        .sum())
}

/// `π_t = ∫ P_{s,t}(x, ·) π_s(dx)`: densities on `ys` and the masses of the
/// atoms of `π_t`; absolute, maximised.
pub fn chapman_kolmogorov(p: &ProcessParams, s: f64, t: f64, ys: &[f64]) -> Result<f64> {
    let ms = marginal(p, s)?;
    let mt = marginal(p, t)?;
    let mix = |f: &dyn Fn(KernelStart) -> Result<f64>| -> Result<f64> {
        let mut acc = if ms.has_continuous {
            integrate(
                |th: f64| ms.theta_density(th) * nan_on_err(f(KernelStart::Continuous(th.cos()))),
                0.0,
                PI,
                &quad_opts(),
            )
            .value
        } else {
            0.0
        };
        for a in ms.atoms.iter().filter(|a| a.mass > 0.0) {
            acc += a.mass * f(KernelStart::Atom(a.root))?;
        }
        Ok(acc)
    };
    let mut worst = 0.0f64;
    if mt.has_continuous {
        for &y in ys {
            let rhs = mix(&|start| density_at(&kernel_params(p, s, t, start), y))?;
            worst = worst.max((mt.density(y)? - rhs).abs());
        }
    }
    for at in mt.atoms.iter().filter(|a| a.mass > 0.0) {
        let rhs = mix(&|start| kernel_atom_mass(p, s, t, start, at.location))?;
        worst = worst.max((at.mass - rhs).abs());
    }
    Ok(if worst.is_nan() { f64::INFINITY } else { worst })
}

/// Mean and variance of the two-sided law against the closed forms.
pub fn bicond_moments(p: &ProcessParams, s: f64, t: f64, u: f64, x: f64, z: f64) -> Result<f64> {
    let past = locate(&marginal(p, s)?, x)?;
    let future = locate(&marginal(p, u)?, z)?;
    let law = measure(
        &bicond_params(p, s, t, u, past, future),
        &TruncationPolicy::default(),
    )?;
    let mean = law.moment(1);
    let var = law.expect(|y| (y - mean) * (y - mean));
    let dm = (mean - bicond_e_y(s, t, u, x, z)?).abs();
    let dv = (var - bicond_var_y(p.qv(), s, t, u, x, z)?).abs();
    Ok(dm.max(dv))
}

/// Left-end law of `Z` for `CD < 0`, `q > 0`: `|Σ masses - 1|`, the same total
/// through the two `₂φ₁` sums, and the most negative mass.
pub fn bridge_mass(p: &ProcessParams) -> Result<(f64, f64, f64)> {
    let e = bridge_endpoints(p)?;
    let Endpoint::Discrete { law, .. } = e.left else {
        return Err(Error::Domain("left end is deterministic (CD >= 0)".into()));
    };
    let total = law.total();
    let neg = law.atoms.iter().map(|a| a.1).fold(0.0f64, f64::min).abs();
    let q = p.q;
    let pol = TruncationPolicy::default();
    let (c, d) = (p.c, p.d);
    let big_p = Complex64::new(p.abcd(), 0.0);
    let terms = (law.atoms.len() + 50).max(200);
    let mut phi = Complex64::new(0.0, 0.0);
    for (x, y) in [(c, d), (d, c)] {
        let pre = qpoch_multi(&[p.a * y, p.b * y], q, Order::Infinite, &pol)?
            / qpoch_multi(&[y / x, big_p], q, Order::Infinite, &pol)?;
        phi += pre
            * phi_partial(
                &[p.a * x, p.b * x],
                &[q.get() * x / y],
                q,
                Complex64::new(q.get(), 0.0),
                terms,
            )?;
    }
    Ok((
        (total - 1.0).abs(),
        (phi.re - 1.0).abs().max(phi.im.abs()),
        neg,
    ))
}
