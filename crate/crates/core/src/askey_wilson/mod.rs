//! Askey–Wilson polynomials and their orthogonality laws.

mod discrete;
mod measure;

pub use discrete::{discrete_pmf, discrete_pmf_unchecked};
pub use measure::{atoms, measure, AWMeasure, Atom, ThetaWeight};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qseries::{realize, QBase, REALIZE_EPS};

const PARAM_REAL_EPS: f64 = 1e-12;
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[inline]
pub(crate) fn is_real(z: Complex64) -> bool {
    z.im == 0.0 || z.im.abs() <= PARAM_REAL_EPS * z.norm().max(1.0)
}

/// The quadruple `(a, b, c, d)` with base `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AWParams {
    #[serde(with = "crate::cplx")]
    pub a: Complex64,
    #[serde(with = "crate::cplx")]
    pub b: Complex64,
    #[serde(with = "crate::cplx")]
    pub c: Complex64,
    #[serde(with = "crate::cplx")]
    pub d: Complex64,
    pub q: QBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FavardCase {
    I,
    II,
    III,
    IV,
    V,
    VI,
    Inadmissible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FavardReport {
    pub m1: usize,
    pub m2: usize,
    pub case: FavardCase,
    /// Number of atoms when the law is finitely supported.
    pub n_atoms_cap: Option<usize>,
}

impl FavardReport {
    pub fn admissible(&self) -> bool {
        !matches!(self.case, FavardCase::IV | FavardCase::Inadmissible)
    }
}

fn check_denominator(z: Complex64, what: &str) -> Result<Complex64> {
    if z.norm() < 1e-14 {
        Err(Error::Singular(format!("{what} vanishes")))
    } else {
        Ok(z)
    }
}

impl AWParams {
    /// Validated constructor: parameters real or closed under conjugation,
    /// `abcd` and `q abcd` real and below one.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64, q: QBase) -> Result<Self> {
        let p = AWParams { a, b, c, d, q };
        let v = [a, b, c, d];
        let mut used = [false; 4];
        for i in 0..4 {
            if is_real(v[i]) || used[i] {
                continue;
            }
            let partner = (0..4).find(|&j| {
                j != i && !used[j] && (v[j] - v[i].conj()).norm() <= 1e-12 * v[i].norm().max(1.0)
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => {
                    return Err(Error::Inadmissible(vec![format!(
                        "parameter {} has no conjugate partner",
                        v[i]
                    )]))
                }
            }
        }
        let mut bad = Vec::new();
        match realize(p.abcd(), REALIZE_EPS) {
            Some(x) if x < 1.0 && q.get() * x < 1.0 => {}
            Some(x) if x >= 1.0 => bad.push("abcd".to_string()),
            Some(_) => bad.push("q*abcd".to_string()),
            None => bad.push("abcd (not real)".to_string()),
        }
        if bad.is_empty() {
            Ok(p)
        } else {
            Err(Error::Inadmissible(bad))
        }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64, q: f64) -> Result<Self> {
        let c64 = |x| Complex64::new(x, 0.0);
        AWParams::new(c64(a), c64(b), c64(c), c64(d), QBase::new(q)?)
    }

    /// No structural checks; for internally generated kernels whose
    /// admissibility follows from the process construction.
    pub(crate) fn new_unchecked(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
        q: QBase,
    ) -> Self {
        AWParams { a, b, c, d, q }
    }

    pub fn as_array(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn abcd(&self) -> Complex64 {
        self.a * self.b * self.c * self.d
    }

    /// `ab, ac, ad, bc, bd, cd` with their names.
    pub fn pair_products(&self) -> [(&'static str, Complex64); 6] {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        [
            ("ab", a * b),
            ("ac", a * c),
            ("ad", a * d),
            ("bc", b * c),
            ("bd", b * d),
            ("cd", c * d),
        ]
    }

    /// `A_n` of the three-term recurrence.
    pub fn recurrence_a(&self, n: usize) -> Result<Complex64> {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        if a.norm() == 0.0 {
            return Err(Error::Singular("A_n needs a != 0".into()));
        }
        let q = self.q;
        let p = self.abcd();
        let qn = q.pow(n as i32);
        if n == 0 {
            let den = check_denominator(a * (ONE - p), "1 - abcd")?;
            return Ok((ONE - a * b) * (ONE - a * c) * (ONE - a * d) / den);
        }
        let num = (ONE - p * q.pow(n as i32 - 1))
            * (ONE - a * b * qn)
            * (ONE - a * c * qn)
            * (ONE - a * d * qn);
        let den = a * (ONE - p * q.pow(2 * n as i32 - 1)) * (ONE - p * q.pow(2 * n as i32));
        Ok(num / check_denominator(den, "A_n denominator")?)
    }

    /// `C_n` of the three-term recurrence; `C_0 = 0`.
    pub fn recurrence_c(&self, n: usize) -> Result<Complex64> {
        if n == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let q = self.q;
        let p = self.abcd();
        let qm = q.pow(n as i32 - 1);
        let num = a
            * (1.0 - q.pow(n as i32))
            * (ONE - b * c * qm)
            * (ONE - b * d * qm)
            * (ONE - c * d * qm);
        let den = (ONE - p * q.pow(2 * n as i32 - 2)) * (ONE - p * q.pow(2 * n as i32 - 1));
        Ok(num / check_denominator(den, "C_n denominator")?)
    }

    /// Diagonal coefficient `b_n = (a + 1/a - A_n - C_n)/2` of the monic
    /// recurrence `x w_n = w_{n+1} + b_n w_n + λ_n w_{n-1}`, with the `1/a`
    /// cancelled by hand so that `a = 0` is allowed.
    pub fn monic_b(&self, n: usize) -> Result<Complex64> {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let p = self.abcd();
        if n == 0 {
            let num = a + b + c + d - a * b * c - a * b * d - a * c * d - b * c * d;
            return Ok(num / check_denominator(2.0 * (ONE - p), "1 - abcd")?);
        }
        let q = self.q;
        let n = n as i32;
        let e1 = b + c + d;
        let e2 = b * c + b * d + c * d;
        let e3 = b * c * d;
        let (q1, q2, q3, q4) = (q.pow(n), q.pow(2 * n), q.pow(3 * n), q.pow(4 * n - 1));
        let (q1m, q2m, q3m) = (q.pow(n - 1), q.pow(2 * n - 1), q.pow(3 * n - 1));
        // (D - (1 - P q^{n-1})(1 - ab q^n)(1 - ac q^n)(1 - ad q^n)) / a
        let g = e1 * q1 + e3 * q1m - e3 * (q2m + q2) - a * e2 * q2 - a * e1 * e3 * q2m
            + a * e3 * e3 * q4
            + a * a * e3 * q3
            + a * a * e2 * e3 * q3m
            - a * a * a * e3 * e3 * q4;
        let den = (ONE - p * q2m) * (ONE - p * q2);
        let g = g / check_denominator(den, "A_n denominator")?;
        Ok(0.5 * (a + g - self.recurrence_c(n as usize)?))
    }

    /// Off-diagonal coefficient `λ_n = A_{n-1} C_n / 4` (n ≥ 1), written in its
    /// symmetric form.
    pub fn monic_lambda(&self, n: usize) -> Result<Complex64> {
        if n == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let q = self.q;
        let p = self.abcd();
        let pairs = self.pair_products();
        let m = n as i32;
        let qm = q.pow(m - 1);
        let mut num = Complex64::new(0.25 * (1.0 - q.pow(m)), 0.0);
        for (_, x) in pairs {
            num *= ONE - x * qm;
        }
        let den = if n == 1 {
            (ONE - p) * (ONE - p) * (ONE - p * q.get())
        } else {
            num *= ONE - p * q.pow(m - 2);
            (ONE - p * q.pow(2 * m - 3))
                * (ONE - p * q.pow(2 * m - 2)).powi(2)
                * (ONE - p * q.pow(2 * m - 1))
        };
        Ok(num / check_denominator(den, "λ_n denominator")?)
    }

    /// `w̄_n(x)`.
    ///
    /// Forward recurrence with a running error bound. When `C_k ≫ A_k` the
    /// recurrence amplifies rounding by `∏ C_k/A_k` (w̄_n is then close to the
    /// minimal solution), which is exactly the situation at the atoms
    /// `x_j = (a q^j + 1/(a q^j))/2`; there the ₄φ₃ terminates after `j + 1`
    /// terms and whichever evaluation has the smaller bound is returned.
    pub fn eval_bar(&self, n: usize, x: f64) -> Result<Complex64> {
        let (rec, rec_err) = self.eval_bar_recurrence(n, x)?;
        if rec_err > 1e-14 * rec.norm().max(1.0) {
            if let Some(j) = self.a_lattice_index(x) {
                let (sum, sum_err) = self.eval_bar_lattice(n, j);
                if sum_err < rec_err {
                    return Ok(sum);
                }
            }
        }
        Ok(rec)
    }

    fn eval_bar_recurrence(&self, n: usize, x: f64) -> Result<(Complex64, f64)> {
        let a = self.a;
        if a.norm() == 0.0 {
            return Err(Error::Singular("w̄_n needs a != 0".into()));
        }
        let shift = 2.0 * x - (a + a.inv());
        let shift_abs = 2.0 * x.abs() + a.norm() + a.inv().norm();
        let mut prev = Complex64::new(0.0, 0.0);
        let mut cur = ONE;
        let (mut e_prev, mut e_cur) = (0.0, 0.0);
        for k in 0..n {
            let ak = self.recurrence_a(k)?;
            let ck = self.recurrence_c(k)?;
            if ak.norm() == 0.0 {
                return Err(Error::Singular(format!(
                    "A_{k} = 0: the family stops at degree {k}"
                )));
            }
            let g = shift + ak + ck;
            let next = (g * cur - ck * prev) / ak;
            // propagated + local rounding (coefficients carry a few ulps each)
            let local = f64::EPSILON
                * (4.0 * (shift_abs + ak.norm() + ck.norm()) * cur.norm()
                    + 4.0 * ck.norm() * prev.norm())
                / ak.norm()
                + 4.0 * f64::EPSILON * next.norm();
            let e_next = (g.norm() * e_cur + ck.norm() * e_prev) / ak.norm() + local;
            prev = cur;
            cur = next;
            e_prev = e_cur;
            e_cur = e_next;
        }
        Ok((cur, e_cur))
    }

    /// `j` with `x = (a q^j + 1/(a q^j))/2` for real `a`, `|a q^j| > 1`.
    fn a_lattice_index(&self, x: f64) -> Option<usize> {
        if !is_real(self.a) || x.abs() <= 1.0 {
            return None;
        }
        let u = x + x.signum() * (x * x - 1.0).sqrt();
        let q = self.q.get();
        let mut aq = self.a.re;
        for j in 0..=10_000 {
            if aq.abs() < 1.0 {
                break;
            }
            if (aq - u).abs() <= 1e-12 * u.abs() {
                return Some(j);
            }
            aq *= q;
        }
        None
    }

    /// Terminating ₄φ₃ `Σ_k (q^{-n}, abcd q^{n-1}, a u, a/u)_k / (q, ab, ac, ad)_k q^k`
    /// at `u = a q^j`, with a rounding bound.
    fn eval_bar_lattice(&self, n: usize, j: usize) -> (Complex64, f64) {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let q = self.q;
        let p = self.abcd();
        let mut term = ONE;
        let mut sum = ONE;
        let mut bound = 6.0 * f64::EPSILON;
        for k in 0..n.min(j) {
            let qk = q.pow(k as i32);
            let num = (ONE - q.pow(k as i32 - n as i32))
                * (ONE - p * q.pow(n as i32 - 1 + k as i32))
                * (ONE - a * a * q.pow((j + k) as i32))
                * (1.0 - q.pow(k as i32 - j as i32));
            let den = (1.0 - q.pow(k as i32 + 1))
                * (ONE - a * b * qk)
                * (ONE - a * c * qk)
                * (ONE - a * d * qk);
            term *= num / den * q.get();
            sum += term;
            bound += (12.0 * (k + 1) as f64 + 6.0) * f64::EPSILON * term.norm();
        }
        (sum, bound)
    }

    /// Monic `w_n(x)`.
    pub fn eval_monic(&self, n: usize, x: f64) -> Result<Complex64> {
        let mut prev = Complex64::new(0.0, 0.0);
        let mut cur = ONE;
        for k in 0..n {
            let next = (x - self.monic_b(k)?) * cur - self.monic_lambda(k)? * prev;
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// Closed-form mean of the orthogonality law.
    pub fn mean(&self) -> Result<f64> {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let p = self.abcd();
        let num = a + b + c + d - a * b * c - a * b * d - a * c * d - b * c * d;
        crate::qseries::real_part(
            num / check_denominator(2.0 * (ONE - p), "1 - abcd")?,
            "mean",
        )
    }

    /// Closed-form variance of the orthogonality law.
    pub fn variance(&self) -> Result<f64> {
        let v = self.monic_lambda(1)?;
        crate::qseries::real_part(v, "variance")
    }

    /// Favard case analysis.
    pub fn classify(&self) -> FavardReport {
        classify(self)
    }
}

fn in_forbidden(z: Complex64) -> bool {
    is_real(z) && z.re >= 1.0 - 1e-12
}

/// Exponent `N >= 0` with `x = q^{-N}` (relative 1e-9), if any.
fn inverse_power(x: f64, q: f64) -> Option<usize> {
    if !(x > 0.0) || q == 0.0 || q.abs() >= 1.0 {
        return None;
    }
    let n = (x.ln() / (1.0 / q.abs()).ln()).round();
    if !(0.0..=10_000.0).contains(&n) {
        return None;
    }
    let n = n as i32;
    let target = q.powi(-n);
    if (target - x).abs() <= 1e-9 * x.abs() {
        Some(n as usize)
    } else {
        None
    }
}

/// Smallest (by modulus) of the flagged products; ties go to the first.
fn smaller(vals: &[(&'static str, Complex64)], flagged: &[bool]) -> Option<f64> {
    let mut best: Option<Complex64> = None;
    for (i, (_, v)) in vals.iter().enumerate() {
        if flagged[i] && best.is_none_or(|b| v.norm() < b.norm()) {
            best = Some(*v);
        }
    }
    best.map(|b| b.re)
}

/// Sort an admissible parameter set into the cases of the Favard analysis.
pub fn classify(p: &AWParams) -> FavardReport {
    let q = p.q.get();
    let prods = p.pair_products();
    let f1: Vec<bool> = prods.iter().map(|(_, z)| in_forbidden(*z)).collect();
    let qprods: Vec<(&'static str, Complex64)> = prods.iter().map(|(n, z)| (*n, *z * q)).collect();
    let f2: Vec<bool> = qprods.iter().map(|(_, z)| in_forbidden(*z)).collect();
    let m1 = f1.iter().filter(|&&b| b).count();
    let m2 = f2.iter().filter(|&&b| b).count();
    let report = |case, cap| FavardReport {
        m1,
        m2,
        case,
        n_atoms_cap: cap,
    };
    let inadmissible = report(FavardCase::Inadmissible, None);

    match realize(p.abcd(), REALIZE_EPS) {
        Some(x) if x < 1.0 && q * x < 1.0 => {}
        _ => return inadmissible,
    }

    if q >= 0.0 {
        match m1 {
            0 => report(FavardCase::I, None),
            2 => {
                if q == 0.0 {
                    return report(FavardCase::III, None);
                }
                match smaller(&prods, &f1).and_then(|x| inverse_power(x, q)) {
                    Some(n) => report(FavardCase::III, Some(n + 1)),
                    None => inadmissible,
                }
            }
            _ => inadmissible,
        }
    } else {
        match (m1, m2) {
            (0, 0) => report(FavardCase::II, None),
            (a, b) if a * b > 0 => report(FavardCase::IV, None),
            (2, 0) => match smaller(&prods, &f1).and_then(|x| inverse_power(x, q)) {
                Some(n) if n % 2 == 0 => report(FavardCase::V, Some(n + 1)),
                _ => inadmissible,
            },
            (0, 2) => match smaller(&qprods, &f2).and_then(|x| inverse_power(x, q)) {
                Some(n) if n % 2 == 0 => report(FavardCase::VI, Some(n + 2)),
                _ => inadmissible,
            },
            _ => inadmissible,
        }
    }
}
