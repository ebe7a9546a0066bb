//! q-Pochhammer symbols, q-binomials and partial basic hypergeometric sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Factors `1 - a q^j` this close to zero are treated as exact zeros, so that
/// products such as `(q^{-n}; q)_k` terminate structurally despite rounding.
pub const ZERO_SNAP: f64 = 1e-13;

/// Imaginary parts below `REALIZE_EPS * |z|` are rounding dust.
pub const REALIZE_EPS: f64 = 1e-10;

/// The base `q`, strictly inside `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QBase(f64);

impl QBase {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q > -1.0 && q < 1.0 {
            Ok(QBase(q))
        } else {
            domain(format!("q = {q} is outside (-1, 1)"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `q^n` for possibly negative `n`.
    #[inline]
    pub fn pow(self, n: i32) -> f64 {
        self.0.powi(n)
    }
}

impl TryFrom<f64> for QBase {
    type Error = Error;
    fn try_from(q: f64) -> Result<Self> {
        QBase::new(q)
    }
}

impl From<QBase> for f64 {
    fn from(q: QBase) -> f64 {
        q.0
    }
}

/// When to stop an infinite product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            tol: 1e-15,
            max_terms: 10_000,
        }
    }
}

impl TruncationPolicy {
    pub fn new(tol: f64, max_terms: usize) -> Result<Self> {
        if !(tol > 0.0) || max_terms == 0 {
            return domain("truncation policy needs tol > 0 and max_terms >= 1");
        }
        Ok(TruncationPolicy { tol, max_terms })
    }
}

/// Collapse `z` to a real number when its imaginary part is dust.
pub fn realize(z: Complex64, eps: f64) -> Option<f64> {
    if z.im == 0.0 || z.im.abs() <= eps * z.norm() {
        Some(z.re)
    } else {
        None
    }
}

/// Like [`realize`] with the default epsilon, but an error when the value is
/// genuinely complex.
pub fn real_part(z: Complex64, what: &str) -> Result<f64> {
    realize(z, REALIZE_EPS).ok_or_else(|| Error::Domain(format!("{what} = {z} is not real")))
}

/// Complex product with a separately tracked power-of-two exponent, so long
/// products can leave the f64 range without losing the mantissa.
#[derive(Debug, Clone, Copy)]
pub struct ScaledProduct {
    mant: Complex64,
    exp2: i64,
}

impl Default for ScaledProduct {
    fn default() -> Self {
        ScaledProduct::one()
    }
}

impl ScaledProduct {
    const HI: f64 = 1e300;
    const LO: f64 = 1e-300;

    pub fn one() -> Self {
        ScaledProduct {
            mant: Complex64::new(1.0, 0.0),
            exp2: 0,
        }
    }

    #[inline]
    pub fn mul(&mut self, f: Complex64) {
        self.mant *= f;
        let m = self.mant.norm();
        if m != 0.0 && m.is_finite() && !(Self::LO..=Self::HI).contains(&m) {
            let e = m.log2().floor() as i64;
            self.mant *= 2f64.powi(-(e as i32));
            self.exp2 += e;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant == Complex64::new(0.0, 0.0)
    }

    /// Natural log of the modulus.
    pub fn ln_norm(&self) -> f64 {
        self.mant.norm().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    pub fn value(&self) -> Complex64 {
        if self.exp2 == 0 {
            return self.mant;
        }
        // split to avoid overflowing powi on the way
        let mut v = self.mant;
        let mut e = self.exp2;
        while e != 0 {
            let step = e.clamp(-1000, 1000);
            v *= 2f64.powi(step as i32);
            e -= step;
        }
        v
    }
}

#[inline]
fn snapped(f: Complex64) -> Complex64 {
    if f.norm() <= ZERO_SNAP {
        Complex64::new(0.0, 0.0)
    } else {
        f
    }
}

/// `(a; q)_n`.
pub fn qpoch_finite(a: Complex64, q: QBase, n: usize) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut acc = ScaledProduct::one();
    let mut term = a;
    for _ in 0..n {
        let f = snapped(1.0 - term);
        if f.norm() == 0.0 {
            return f;
        }
        acc.mul(f);
        term *= q.get();
    }
    acc.value()
}

/// Real-argument `(a; q)_n`.
pub fn qpoch_finite_real(a: f64, q: QBase, n: usize) -> f64 {
    qpoch_finite(Complex64::new(a, 0.0), q, n).re
}

/// `(a; q)_∞`, stopping once the remaining tail is below `policy.tol`.
pub fn qpoch_infinite(a: Complex64, q: QBase, policy: &TruncationPolicy) -> Result<Complex64> {
    let qv = q.get();
    let bound = policy.tol * (1.0 - qv.abs());
    let mut acc = ScaledProduct::one();
    let mut term = a;
    for _ in 0..policy.max_terms {
        if term.norm() < bound {
            return Ok(acc.value());
        }
        let f = snapped(1.0 - term);
        if f.norm() == 0.0 {
            return Ok(f);
        }
        acc.mul(f);
        term *= qv;
    }
    if term.norm() < bound {
        return Ok(acc.value());
    }
    Err(Error::NonConvergent {
        terms: policy.max_terms,
        last: term.norm(),
    })
}

pub fn qpoch_infinite_real(a: f64, q: QBase, policy: &TruncationPolicy) -> Result<f64> {
    Ok(qpoch_infinite(Complex64::new(a, 0.0), q, policy)?.re)
}

/// Length of a multi-symbol product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Finite(usize),
    Infinite,
}

/// `(a_1, ..., a_l; q)_n`, the product of the individual symbols.
pub fn qpoch_multi(
    args: &[Complex64],
    q: QBase,
    n: Order,
    policy: &TruncationPolicy,
) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    for &a in args {
        acc *= match n {
            Order::Finite(n) => qpoch_finite(a, q, n),
            Order::Infinite => qpoch_infinite(a, q, policy)?,
        };
    }
    Ok(acc)
}

/// Gaussian binomial `[N choose k]_q`.
pub fn qbinomial(n: usize, k: usize, q: QBase) -> Result<f64> {
    if k > n {
        return domain(format!("q-binomial needs k <= N, got k = {k}, N = {n}"));
    }
    let m = k.min(n - k);
    let qv = q.get();
    let mut acc = 1.0;
    for j in 1..=m {
        acc *= (1.0 - qv.powi((n - m + j) as i32)) / (1.0 - qv.powi(j as i32));
    }
    Ok(acc)
}

/// Partial sum `Σ_{k<terms} (a_1..a_r)_k / (q, b_1..b_s)_k z^k` of the basic
/// hypergeometric series. An upper parameter hitting `q^{-m}` terminates the
/// sum; a lower one is a pole.
pub fn phi_partial(
    upper: &[Complex64],
    lower: &[Complex64],
    q: QBase,
    z: Complex64,
    terms: usize,
) -> Result<Complex64> {
    if terms == 0 {
        return domain("phi_partial needs at least one term");
    }
    let qv = q.get();
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut qk1 = 1.0; // q^{k-1}
    for k in 1..terms {
        let mut num = z;
        for &a in upper {
            let f = snapped(1.0 - a * qk1);
            if f.norm() == 0.0 {
                return Ok(sum);
            }
            num *= f;
        }
        let mut den = Complex64::new(1.0 - qv.powi(k as i32), 0.0);
        for &b in lower {
            let f = snapped(1.0 - b * qk1);
            if f.norm() == 0.0 {
                return domain(format!("lower parameter {b} is a pole at term {k}"));
            }
            den *= f;
        }
        term *= num / den;
        sum += term;
        qk1 *= qv;
    }
    Ok(sum)
}
