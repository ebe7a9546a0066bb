//! Orthogonal martingale polynomials `r_n(x; t)`, the Jacobi decomposition
//! `J_t = t·x + y`, its q-commutation identities, the auxiliary family `Q_n`
//! and the connection coefficients `b_{n,k}`.
//!
//! Jacobi coefficients are kept for `r̂_n = r_n / A^n` (or `r_n` itself when
//! `A = 0`): a diagonal rescaling that leaves every identity intact and is
//! finite as `A → 0`. They are complex because `A` may be.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::askey_wilson::AWParams;
use crate::error::{Error, Result};
use crate::harness::{kernel_params, marginal, marginal_params, KernelStart, ProcessParams};
use crate::qseries::{qbinomial, qpoch_finite, TruncationPolicy};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest residual of one identity over `n ≤ n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity: String,
    pub n_max: usize,
    pub max_residual: f64,
    pub argmax_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ProcessParams>,
}

impl ResidualReport {
    pub fn new(identity: impl Into<String>, n_max: usize, params: Option<ProcessParams>) -> Self {
        ResidualReport {
            identity: identity.into(),
            n_max,
            max_residual: 0.0,
            argmax_n: 0,
            params,
        }
    }

    /// Record a residual at level `n`; NaN counts as infinite.
    pub fn push(&mut self, n: usize, r: f64) {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > self.max_residual {
            self.max_residual = r;
            self.argmax_n = n;
        }
    }

    pub fn merge(&mut self, other: &ResidualReport) {
        if other.max_residual > self.max_residual {
            self.max_residual = other.max_residual;
            self.argmax_n = other.argmax_n;
        }
    }
}

fn time_check(p: &ProcessParams, ts: &[f64]) -> Result<()> {
    let td = crate::harness::time_domains(p)?;
    for &t in ts {
        if !td.contains_i(t) {
            return Err(Error::Domain(format!(
                "t = {t} outside I = ({}, {})",
                td.i.0, td.i.1
            )));
        }
    }
    Ok(())
}

/// `p_n(y; t)`: `w̄_n` of the marginal parameters, or `(2√t)^n w_n` when
/// `A = 0`, which is the `A → 0` limit of `w̄_n / A^n`.
pub fn p_poly(n: usize, y: f64, t: f64, p: &ProcessParams) -> Result<Complex64> {
    let m = marginal_params(p, t);
    if p.a.norm() != 0.0 {
        m.eval_bar(n, y)
    } else {
        Ok(m.eval_monic(n, y)? * (2.0 * t.sqrt()).powi(n as i32))
    }
}

/// `r_n(x; t) = p_n(√(1-q) x / (2√t); t)`.
pub fn r_poly(n: usize, x: f64, t: f64, p: &ProcessParams) -> Result<Complex64> {
    p_poly(n, (1.0 - p.qv()).sqrt() * x / (2.0 * t.sqrt()), t, p)
}

/// Ratio `r_n / r̂_n`.
pub fn hat_scale(p: &ProcessParams, n: usize) -> Complex64 {
    if p.a.norm() != 0.0 {
        p.a.powi(n as i32)
    } else {
        ONE
    }
}

/// Coefficients of `x r̂_n = (α_n t + β_n) r̂_{n+1} + (γ_n t + δ_n) r̂_n + (ε_n t + φ_n) r̂_{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiCoeffs {
    #[serde(with = "crate::cplx::vec")]
    pub alpha: Vec<Complex64>,
    #[serde(with = "crate::cplx::vec")]
    pub beta: Vec<Complex64>,
    #[serde(with = "crate::cplx::vec")]
    pub gamma: Vec<Complex64>,
    #[serde(with = "crate::cplx::vec")]
    pub delta: Vec<Complex64>,
    #[serde(with = "crate::cplx::vec")]
    pub epsilon: Vec<Complex64>,
    #[serde(with = "crate::cplx::vec")]
    pub phi: Vec<Complex64>,
}

fn nz(z: Complex64, what: &str) -> Result<Complex64> {
    if z.norm() == 0.0 || !z.is_finite() {
        Err(Error::Singular(format!("{what} vanishes")))
    } else {
        Ok(z)
    }
}

/// The six coefficient sequences for `n = 0..=n_max`.
pub fn jacobi_coeffs(p: &ProcessParams, n_max: usize) -> Result<JacobiCoeffs> {
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let q = p.q;
    let sq = (1.0 - q.get()).sqrt();
    let big_p = a * b * c * d;
    let (ab, cd) = (a * b, c * d);
    let e3 = b * c * d;
    let mut out = JacobiCoeffs {
        alpha: Vec::with_capacity(n_max + 1),
        beta: Vec::with_capacity(n_max + 1),
        gamma: Vec::with_capacity(n_max + 1),
        delta: Vec::with_capacity(n_max + 1),
        epsilon: Vec::with_capacity(n_max + 1),
        phi: Vec::with_capacity(n_max + 1),
    };
    for n in 0..=n_max {
        let m = n as i32;
        let qn = q.pow(m);
        let (beta, eps, delta_main) = if n == 0 {
            let den = nz(sq * (ONE - big_p), "1 - ABCD")?;
            let beta = (ONE - a * c) * (ONE - a * d) / den;
            (beta, ZERO, (c + d - a * c * d - e3) / den)
        } else {
            let q1m = q.pow(m - 1);
            let (q2, q2m, q2mm) = (q.pow(2 * m), q.pow(2 * m - 1), q.pow(2 * m - 2));
            let dn = nz(
                sq * (ONE - big_p * q2) * (ONE - big_p * q2m),
                "β_n denominator",
            )?;
            let beta = (ONE - big_p * q1m) * (ONE - a * c * qn) * (ONE - a * d * qn) / dn;
            let eps = (ONE - b * c * q1m) * (ONE - b * d * q1m) * (1.0 - qn)
                / nz(
                    sq * (ONE - big_p * q2mm) * (ONE - big_p * q2m),
                    "ε_n denominator",
                )?;
            // (1 - √(1-q) β̂_n)/A with the A cancelled by hand
            let g = -e3 * (q2 + q2m) + a * e3 * e3 * q.pow(4 * m - 1) + (c + d) * qn - a * cd * q2
                + e3 * q1m
                - e3 * q1m * a * (c + d) * qn
                + e3 * q1m * a * a * cd * q2;
            (beta, eps, g / dn)
        };
        let alpha = -ab * qn * beta;
        let phi = if n == 0 {
            ZERO
        } else {
            -cd * q.pow(m - 1) * eps
        };
        // γ_n = A/√(1-q) - α_n - ε_n and δ_n = 1/(A√(1-q)) - β_n - φ_n in unscaled form
        let gamma = a / sq + b * qn * beta - a * eps;
        let delta = delta_main - a * phi;
        out.alpha.push(alpha);
        out.beta.push(beta);
        out.gamma.push(gamma);
        out.delta.push(delta);
        out.epsilon.push(eps);
        out.phi.push(phi);
    }
    Ok(out)
}

fn at(v: &[Complex64], n: isize) -> Complex64 {
    if n < 0 {
        ZERO
    } else {
        v.get(n as usize).copied().unwrap_or(ZERO)
    }
}

/// Residuals of the five coefficient identities equivalent to `xy - q yx = I`,
/// each scaled by `1 + Σ|terms|`.
pub fn q_commutation_residuals(j: &JacobiCoeffs, q: f64, n_max: usize) -> ResidualReport {
    let mut rep = ResidualReport::new("q-commutation", n_max, None);
    let (al, be, ga, de, ep, ph) = (&j.alpha, &j.beta, &j.gamma, &j.delta, &j.epsilon, &j.phi);
    for n in 0..=n_max as isize {
        let f = |v: &Vec<Complex64>, k: isize| at(v, k);
        let rows: [(Vec<Complex64>, Vec<Complex64>, f64); 5] = [
            (
                vec![f(al, n) * f(be, n - 1)],
                vec![f(al, n - 1) * f(be, n)],
                0.0,
            ),
            (
                vec![f(be, n) * f(ga, n + 1), f(al, n) * f(de, n)],
                vec![f(be, n) * f(ga, n), f(al, n) * f(de, n + 1)],
                0.0,
            ),
            (
                vec![
                    f(ga, n) * f(de, n),
                    f(be, n) * f(ep, n + 1),
                    f(al, n - 1) * f(ph, n),
                ],
                vec![
                    f(ga, n) * f(de, n),
                    f(be, n - 1) * f(ep, n),
                    f(al, n) * f(ph, n + 1),
                ],
                1.0,
            ),
            (
                vec![f(de, n) * f(ep, n), f(ga, n - 1) * f(ph, n)],
                vec![f(de, n - 1) * f(ep, n), f(ga, n) * f(ph, n)],
                0.0,
            ),
            (
                vec![f(ep, n) * f(ph, n + 1)],
                vec![f(ep, n + 1) * f(ph, n)],
                0.0,
            ),
        ];
        for (lhs, rhs, constant) in rows {
            let l: Complex64 = lhs.iter().sum();
            let r: Complex64 = rhs.iter().sum::<Complex64>() * q + constant;
            let scale = 1.0 + lhs.iter().chain(rhs.iter()).map(|z| z.norm()).sum::<f64>();
            rep.push(n as usize, (l - r).norm() / scale);
        }
    }
    rep
}

pub fn check_q_commutation(p: &ProcessParams, n_max: usize) -> Result<ResidualReport> {
    let j = jacobi_coeffs(p, n_max + 1)?;
    let mut rep = q_commutation_residuals(&j, p.qv(), n_max);
    rep.params = Some(*p);
    Ok(rep)
}

/// Truncated tridiagonal operator; `sub[k]` sits at `(k+1, k)`, `sup[k]` at `(k, k+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    pub size: usize,
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub sup: Vec<Complex64>,
}

impl BandedOperator {
    /// `J_t` in the convention `x r(x) = r(x) J_t` on row vectors.
    pub fn jacobi(j: &JacobiCoeffs, t: f64, size: usize) -> Result<Self> {
        if j.alpha.len() < size {
            return Err(Error::Domain(format!(
                "need {size} coefficients, have {}",
                j.alpha.len()
            )));
        }
        Ok(BandedOperator {
            size,
            sub: (0..size - 1).map(|k| j.alpha[k] * t + j.beta[k]).collect(),
            diag: (0..size).map(|k| j.gamma[k] * t + j.delta[k]).collect(),
            sup: (1..size).map(|k| j.epsilon[k] * t + j.phi[k]).collect(),
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![ZERO; self.size]; self.size];
        for k in 0..self.size {
            m[k][k] = self.diag[k];
            if k + 1 < self.size {
                m[k + 1][k] = self.sub[k];
                m[k][k + 1] = self.sup[k];
            }
        }
        m
    }
}

fn matmul(x: &[Vec<Complex64>], y: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = x.len();
    let mut out = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for k in 0..n {
            if x[i][k] == ZERO {
                continue;
            }
            for j in 0..n {
                out[i][j] += x[i][k] * y[k][j];
            }
        }
    }
    out
}

/// Three-time identity for `J_t²` on a truncation of `size ≥ n_max + 3`,
/// compared on the leading `(n_max + 1)` block; rows are scaled by
/// `1 + ‖row of J_t²‖`.
pub fn matrix_identity_residual(
    p: &ProcessParams,
    s: f64,
    t: f64,
    u: f64,
    n_max: usize,
    size: usize,
) -> Result<ResidualReport> {
    if size < n_max + 3 {
        return Err(Error::Domain(format!("truncation {size} < n_max + 3")));
    }
    let q = p.qv();
    let j = jacobi_coeffs(p, size)?;
    let js = BandedOperator::jacobi(&j, s, size)?.to_dense();
    let jt = BandedOperator::jacobi(&j, t, size)?.to_dense();
    let ju = BandedOperator::jacobi(&j, u, size)?.to_dense();
    let lhs = matmul(&jt, &jt);
    let (ss, su, uu) = (matmul(&js, &js), matmul(&js, &ju), matmul(&ju, &ju));
    let den = (u - s) * (u - q * s);
    let k1 = (u - t) * (u - q * t) / den;
    let k2 = (q + 1.0) * (t - s) * (u - t) / den;
    let k3 = (t - s) * (t - q * s) / den;
    let k4 = (t - s) * (u - t) / (u - q * s);
    let mut rep = ResidualReport::new("three-time matrix identity", n_max, Some(*p));
    for i in 0..=n_max {
        let mut num = 0.0;
        let mut scale = 0.0;
        for c in 0..=n_max {
            let id = if i == c { k4 } else { 0.0 };
            let rhs = ss[i][c] * k1 + su[i][c] * k2 + uu[i][c] * k3 + id;
            num += (lhs[i][c] - rhs).norm_sqr();
            scale += lhs[i][c].norm_sqr();
        }
        rep.push(i, num.sqrt() / (1.0 + scale.sqrt()));
    }
    Ok(rep)
}

pub fn check_matrix_identity(
    p: &ProcessParams,
    s: f64,
    t: f64,
    u: f64,
    n_max: usize,
) -> Result<ResidualReport> {
    if !(s <= t && t <= u && s < u) {
        return Err(Error::Domain(format!(
            "need s <= t <= u, got {s}, {t}, {u}"
        )));
    }
    time_check(p, &[s, t, u])?;
    matrix_identity_residual(p, s, t, u, n_max, n_max + 3)
}

fn kernel_for(p: &ProcessParams, x: f64, t: f64, s: f64) -> Result<AWParams> {
    if p.a.norm() == 0.0 {
        return Err(Error::Unsupported("Q_n and b_{n,k} need A != 0".into()));
    }
    Ok(kernel_params(p, s, t, KernelStart::from_point(x)))
}

/// `Ā_n` and `C̄_n` of the `Q_n` recurrence for kernel parameters `k`.
fn q_rec_coeffs(k: &AWParams, n: usize) -> Result<(Complex64, Complex64)> {
    let [a, b, c, d] = k.as_array();
    let q = k.q;
    let pp = k.abcd();
    let m = n as i32;
    let qn = q.pow(m);
    let abar = if n == 0 {
        (ONE - a * b) / nz(a * (ONE - pp), "a(1 - abcd)")?
    } else {
        (ONE - pp * q.pow(m - 1)) * (ONE - a * b * qn)
            / nz(
                a * (ONE - pp * q.pow(2 * m - 1)) * (ONE - pp * q.pow(2 * m)),
                "Ā_n denominator",
            )?
    };
    let cbar = if n == 0 {
        ZERO
    } else {
        let qm = q.pow(m - 1);
        let mut num = a * (1.0 - qn);
        for z in [a * c, a * d, b * c, b * d, c * d] {
            num *= ONE - z * qm;
        }
        num / nz(
            (ONE - pp * q.pow(2 * m - 2)) * (ONE - pp * q.pow(2 * m - 1)),
            "C̄_n denominator",
        )?
    };
    Ok((abar, cbar))
}

/// `Q_n(y; x, t, s)` by its three-term recurrence (defined for every real `x`).
pub fn q_n(n: usize, y: f64, x: f64, t: f64, s: f64, p: &ProcessParams) -> Result<Complex64> {
    let k = kernel_for(p, x, t, s)?;
    let mut prev = ZERO;
    let mut cur = ONE;
    for j in 0..n {
        let (abar, cbar) = q_rec_coeffs(&k, j)?;
        let mid = k.monic_b(j)? * 2.0;
        let next = ((2.0 * y - mid) * cur - cbar * prev) / nz(abar, "Ā_n")?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `b_{n,0..=n}(x, s)` with `Q_n(y; x, t, s) = Σ_k b_{n,k} p_k(y; t)`.
///
/// Computed by basis change at `t = s`. The terminating sum
/// ([`connection_coeffs_closed`]) alternates with terms of size `|q|^{-nj}`
/// and loses roughly `n² log₁₀(1/|q|)/4` digits, so it serves as a low-degree
/// cross-check only.
pub fn connection_coeffs(n: usize, x: f64, s: f64, p: &ProcessParams) -> Result<Vec<Complex64>> {
    connection_coeffs_recurrence(n, x, s, s, p)
}

/// Terminating-sum form, with the prefactor `(aγ, aδ)_n / (aγ, aδ)_k` folded
/// into the summand so that atomic `x` creates no removable poles.
pub fn connection_coeffs_closed(
    n: usize,
    x: f64,
    s: f64,
    p: &ProcessParams,
) -> Result<Vec<Complex64>> {
    if p.a.norm() == 0.0 {
        return Err(Error::Unsupported("Q_n and b_{n,k} need A != 0".into()));
    }
    let q = p.q;
    let qv = q.get();
    if qv == 0.0 {
        return Err(Error::Unsupported("terminating sum needs q != 0".into()));
    }
    let (g, dl) = KernelStart::from_point(x).pair(1.0);
    let ag = p.a * s.sqrt() * g;
    let adl = p.a * s.sqrt() * dl;
    let big_p = p.a * p.b * p.c * p.d;
    let r = p.a * p.b * s;
    let (ac, ad) = (p.a * p.c, p.a * p.d);
    let qc = |z: Complex64, m: usize| qpoch_finite(z, q, m);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let kk = k as i32;
        let ni = n as i32;
        let head = qbinomial(n, k, q)?
            * qv.powi(kk * (kk - ni))
            * qc(r * q.pow(ni - 1), k)
            * qc(ac, k)
            * qc(ad, k)
            / nz(qc(big_p * q.pow(kk - 1), k), "(q^{k-1}ABCD)_k")?;
        let upper = [
            Complex64::new(q.pow(kk - ni), 0.0),
            r * q.pow(ni + kk - 1),
            ac * q.pow(kk),
            ad * q.pow(kk),
        ];
        let low = big_p * q.pow(2 * kk);
        let mut sum = ZERO;
        let mut term = ONE; // (upper)_j / (q, low)_j q^j
        for j in 0..=(n - k) {
            if j > 0 {
                let qj = q.pow(j as i32 - 1);
                let mut num = Complex64::new(qv, 0.0);
                for &u in &upper {
                    num *= ONE - u * qj;
                }
                let den = nz((1.0 - qv * qj) * (ONE - low * qj), "4φ3 lower parameter")?;
                term *= num / den;
            }
            let tail = qc(ag * q.pow(kk + j as i32), n - k - j)
                * qc(adl * q.pow(kk + j as i32), n - k - j);
            sum += term * tail;
        }
        out.push(head * sum);
    }
    Ok(out)
}

/// Basis change by recurrence: expand `Q_n(·; x, t, s)` in `{p_k(·; t)}`.
/// Exact for every `q`, including `q = 0`.
pub fn connection_coeffs_recurrence(
    n: usize,
    x: f64,
    s: f64,
    t: f64,
    p: &ProcessParams,
) -> Result<Vec<Complex64>> {
    let k = kernel_for(p, x, t, s)?;
    let m = marginal_params(p, t);
    // 2y p_j = A_j p_{j+1} + mid_j p_j + C_j p_{j-1}
    let mut ma = Vec::with_capacity(n);
    let mut mm = Vec::with_capacity(n);
    let mut mc = Vec::with_capacity(n);
    for j in 0..n {
        ma.push(m.recurrence_a(j)?);
        mm.push(m.monic_b(j)? * 2.0);
        mc.push(m.recurrence_c(j)?);
    }
    let times_2y = |v: &[Complex64]| {
        let mut out = vec![ZERO; v.len() + 1];
        for (j, &cj) in v.iter().enumerate() {
            out[j + 1] += cj * ma[j];
            out[j] += cj * mm[j];
            if j > 0 {
                out[j - 1] += cj * mc[j];
            }
        }
        out
    };
    let mut prev: Vec<Complex64> = vec![];
    let mut cur = vec![ONE];
    for j in 0..n {
        let (abar, cbar) = q_rec_coeffs(&k, j)?;
        let mid = k.monic_b(j)? * 2.0;
        let mut next = times_2y(&cur);
        for (i, &c) in cur.iter().enumerate() {
            next[i] -= c * mid;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= c * cbar;
        }
        let inv = nz(abar, "Ā_n")?.inv();
        for z in next.iter_mut() {
            *z *= inv;
        }
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `∫ p_n(y; t) P_{s,t}(x, dy) = p_n(x; s)` for `n ≤ n_max`; residuals are
/// scaled by `max(1, |p_n(x; s)|)`.
pub fn check_projection(
    p: &ProcessParams,
    s: f64,
    t: f64,
    x: f64,
    n_max: usize,
) -> Result<ResidualReport> {
    if !(s < t) {
        return Err(Error::Domain(format!(
            "projection needs s < t, got {s}, {t}"
        )));
    }
    time_check(p, &[s, t])?;
    let start = crate::harness::locate(&marginal(p, s)?, x)?;
    let kernel =
        crate::askey_wilson::measure(&kernel_params(p, s, t, start), &TruncationPolicy::default())?;
    let mut rep = ResidualReport::new("projection", n_max, Some(*p));
    for n in 0..=n_max {
        let lhs = kernel.expect(|y| p_poly(n, y, t, p).unwrap_or(Complex64::new(f64::NAN, 0.0)));
        let rhs = p_poly(n, x, s, p)?;
        rep.push(n, (lhs - rhs).norm() / rhs.norm().max(1.0));
    }
    Ok(rep)
}

/// `E(r_n(Z_t; t) | Z_s = z) = r_n(z; s)`: the projection identity in `Z` units.
pub fn check_martingale(
    p: &ProcessParams,
    s: f64,
    t: f64,
    z: f64,
    n_max: usize,
) -> Result<ResidualReport> {
    let y = p.y_from_z(s, z);
    let mut rep = check_projection(p, s, t, y, n_max)?;
    rep.identity = "martingale".into();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn params() -> Vec<ProcessParams> {
        let z = Complex64::from_polar(0.6, 0.8);
        vec![
            ProcessParams::real(0.4, -0.3, 0.5, 0.2, 0.5).unwrap(),
            ProcessParams::real(0.0, 0.0, 0.0, 0.0, 0.3).unwrap(),
            ProcessParams::real(0.0, 0.7, -0.4, 0.3, -0.45).unwrap(),
            ProcessParams::new(z, z.conj(), re(0.3), re(-0.6), 0.65).unwrap(),
            ProcessParams::new(re(0.5), re(0.2), z, z.conj(), 0.0).unwrap(),
            ProcessParams::real(0.3, -0.5, 0.2, 1.6, 0.4).unwrap(),
        ]
    }

    #[test]
    fn r_zero_is_one() {
        for p in params() {
            assert_eq!(r_poly(0, 0.7, 1.0, &p).unwrap(), ONE);
        }
    }

    #[test]
    fn jacobi_reproduces_recurrence() {
        for p in params() {
            let j = jacobi_coeffs(&p, 10).unwrap();
            for &(x, t) in &[
                (0.3, 0.8),
                (-1.2, 1.4),
                (0.9, 0.6),
                (2.0, 1.1),
                (-0.4, 0.95),
            ] {
                let r: Vec<Complex64> = (0..=11)
                    .map(|n| r_poly(n, x, t, &p).unwrap() / hat_scale(&p, n))
                    .collect();
                for n in 0..=10 {
                    let prev = if n == 0 { ZERO } else { r[n - 1] };
                    let rhs = (j.alpha[n] * t + j.beta[n]) * r[n + 1]
                        + (j.gamma[n] * t + j.delta[n]) * r[n]
                        + (j.epsilon[n] * t + j.phi[n]) * prev;
                    let err = (r[n] * x - rhs).norm() / (1.0 + r[n].norm() * x.abs());
                    assert!(err < 1e-10, "{p:?} n = {n} x = {x} t = {t}: {err}");
                }
            }
        }
    }

    #[test]
    fn alpha_beta_ratio() {
        let p = ProcessParams::real(0.4, -0.3, 0.5, 0.2, 0.5).unwrap();
        let j = jacobi_coeffs(&p, 20).unwrap();
        for n in 0..=20 {
            let want = -p.ab() * 0.5f64.powi(n as i32);
            assert!((j.alpha[n] / j.beta[n] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_parameters_give_q_hermite() {
        let p = ProcessParams::real(0.0, 0.0, 0.0, 0.0, 0.3).unwrap();
        let j = jacobi_coeffs(&p, 8).unwrap();
        for n in 0..=8 {
            assert_eq!(j.alpha[n], ZERO);
            assert_eq!(j.phi[n], ZERO);
            assert_eq!(j.gamma[n], ZERO);
            assert_eq!(j.delta[n], ZERO);
        }
    }

    #[test]
    fn q_commutation_holds() {
        for p in params() {
            let rep = check_q_commutation(&p, 30).unwrap();
            assert!(rep.max_residual < 1e-12, "{rep:?}");
        }
    }

    #[test]
    fn q_commutation_detects_perturbation() {
        let p = params()[0];
        let mut j = jacobi_coeffs(&p, 31).unwrap();
        j.delta[7] += 1e-6;
        assert!(q_commutation_residuals(&j, p.qv(), 30).max_residual >= 1e-7);
    }

    #[test]
    fn matrix_identity_holds() {
        for p in params() {
            let rep = check_matrix_identity(&p, 0.6, 0.9, 1.4, 25).unwrap();
            assert!(rep.max_residual < 1e-11, "{rep:?}");
            let a = matrix_identity_residual(&p, 0.6, 0.9, 1.4, 25, 28).unwrap();
            let b = matrix_identity_residual(&p, 0.6, 0.9, 1.4, 25, 40).unwrap();
            assert!((a.max_residual - b.max_residual).abs() < 1e-12);
        }
        let p = params()[0];
        assert!(
            check_matrix_identity(&p, 0.8, 0.8, 1.2, 10)
                .unwrap()
                .max_residual
                < 1e-14
        );
    }

    #[test]
    fn rescaling_by_b_swaps_the_distinguished_parameter() {
        let p = ProcessParams::real(0.4, -0.3, 0.5, 0.2, 0.5).unwrap();
        let swapped = ProcessParams::new_unchecked(p.b, p.a, p.c, p.d, p.q);
        for n in 0..6 {
            let q = p.q;
            let want =
                p.a.powi(n as i32) * qpoch_finite(p.b * p.c, q, n) * qpoch_finite(p.b * p.d, q, n)
                    / (p.b.powi(n as i32)
                        * qpoch_finite(p.a * p.c, q, n)
                        * qpoch_finite(p.a * p.d, q, n));
            for &(x, t) in &[(0.4, 0.7), (1.3, 1.5)] {
                let ratio = r_poly(n, x, t, &p).unwrap() / r_poly(n, x, t, &swapped).unwrap();
                assert!(
                    (ratio - want).norm() < 1e-10 * want.norm().max(1.0),
                    "n = {n}"
                );
            }
        }
    }

    #[test]
    fn q_vanishes_at_start() {
        let p = params()[0];
        assert_eq!(q_n(0, 0.2, 0.4, 1.0, 0.7, &p).unwrap(), ONE);
        for n in 1..6 {
            for &x in &[0.4, -0.8, 1.7] {
                assert!(
                    q_n(n, x, x, 0.7, 0.7, &p).unwrap().norm() < 1e-12,
                    "n = {n} x = {x}"
                );
            }
        }
    }

    #[test]
    fn q_orthogonal_under_kernel() {
        let p = params()[0];
        let (s, t, x) = (0.6, 1.2, 0.35);
        let k = crate::harness::transition(&p, s, t, x).unwrap();
        for n in 0..5 {
            for m in 0..n {
                let v =
                    k.expect(|y| q_n(n, y, x, t, s, &p).unwrap() * q_n(m, y, x, t, s, &p).unwrap());
                assert!(v.norm() < 1e-10, "{n}, {m}: {v}");
            }
        }
    }

    #[test]
    fn connection_closed_form_matches_recurrence() {
        for p in [params()[0], params()[3], params()[5]] {
            for &x in &[0.35, -0.9, 1.4] {
                for n in 0..=5 {
                    let a = connection_coeffs_closed(n, x, 0.6, &p).unwrap();
                    let b = connection_coeffs_recurrence(n, x, 0.6, 1.1, &p).unwrap();
                    let c = connection_coeffs_recurrence(n, x, 0.6, 0.9, &p).unwrap();
                    for k in 0..=n {
                        let sc = b[k].norm().max(1.0);
                        // the terminating sum cancels ~|q|^{-n²/4}
                        assert!(
                            (a[k] - b[k]).norm() < 1e-7 * sc,
                            "{p:?} x = {x} n = {n} k = {k}: {} vs {}",
                            a[k],
                            b[k]
                        );
                        assert!((c[k] - b[k]).norm() < 1e-10 * sc);
                    }
                }
            }
        }
    }

    #[test]
    fn leading_connection_coefficient() {
        // b_{n,n} = (q^{n-1} ABs, AC, AD)_n / (q^{n-1} ABCD)_n, free of x
        let p = params()[0];
        let q = p.q;
        let s = 0.6;
        for n in 1..=12 {
            let ni = n as i32;
            let want = qpoch_finite(p.a * p.b * s * q.pow(ni - 1), q, n)
                * qpoch_finite(p.a * p.c, q, n)
                * qpoch_finite(p.a * p.d, q, n)
                / qpoch_finite(p.a * p.b * p.c * p.d * q.pow(ni - 1), q, n);
            for &x in &[0.2, 1.5] {
                let b = connection_coeffs(n, x, s, &p).unwrap();
                assert!((b[n] - want).norm() < 1e-10 * want.norm().max(1.0));
                assert!(b[n].norm() > 0.0);
            }
        }
    }

    #[test]
    fn connection_reconstructs_q() {
        let p = params()[4];
        let (s, t, x) = (0.5, 1.3, -0.2);
        for n in 0..=6 {
            let b = connection_coeffs(n, x, s, &p).unwrap();
            for &y in &[-0.7, 0.1, 0.9, 1.3, -2.0] {
                let sum: Complex64 = (0..=n).map(|k| b[k] * p_poly(k, y, t, &p).unwrap()).sum();
                let want = q_n(n, y, x, t, s, &p).unwrap();
                assert!((sum - want).norm() < 1e-9 * want.norm().max(1.0));
            }
            let zero: Complex64 = (0..=n).map(|k| b[k] * p_poly(k, x, s, &p).unwrap()).sum();
            assert!(n == 0 || zero.norm() < 1e-9 * b[n].norm().max(1.0));
        }
    }

    #[test]
    fn projection_continuous_and_atomic() {
        let p = params()[0];
        for &x in &[-0.6, 0.2, 0.9] {
            let rep = check_projection(&p, 0.5, 1.2, x, 8).unwrap();
            assert!(rep.max_residual < 1e-8, "{rep:?}");
        }
        let p = params()[5];
        let ms = marginal(&p, 0.5).unwrap();
        for x in ms.atom_locations() {
            let rep = check_projection(&p, 0.5, 1.2, x, 8).unwrap();
            assert!(rep.max_residual < 1e-8, "{rep:?}");
        }
    }

    #[test]
    fn orthogonality_of_r() {
        let p = params()[3];
        let t = 1.0;
        let m = marginal(&p, t).unwrap();
        let sq = (1.0 - p.qv()).sqrt();
        for n in 1..=8 {
            for k in 0..n {
                let v = m.expect(|y| {
                    let z = 2.0 * t.sqrt() * y / sq;
                    r_poly(n, z, t, &p).unwrap() * r_poly(k, z, t, &p).unwrap()
                });
                assert!(v.norm() < 1e-7, "{n}, {k}: {v}");
            }
        }
    }
}
