//! Process parameters `(A, B, C, D, q)`, the harness dictionary
//! `(η, θ, σ, τ, γ)`, time domains, laws of the auxiliary process `Y` and
//! the maps `Y → Z → X`.

mod constructors;
mod gl2;
mod laws;

pub use constructors::{bi_poisson, free_harness, purely_quadratic, q_meixner};
pub use gl2::{gl2_action, CovarianceLaw, Gl2};
pub use laws::{
    bicond_e_y, bicond_params, bicond_var_y, cond_e_y, cond_var_y, cov_y, e_y, kernel_params,
    locate, marginal, marginal_params, transition, var_y, KernelStart,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::askey_wilson::is_real;
use crate::error::{Error, Result};
use crate::qseries::{real_part, realize, QBase, REALIZE_EPS};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `(A, B, C, D, q)`: real, or with `(A, B)` and/or `(C, D)` conjugate pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    #[serde(rename = "A", with = "crate::cplx")]
    pub a: Complex64,
    #[serde(rename = "B", with = "crate::cplx")]
    pub b: Complex64,
    #[serde(rename = "C", with = "crate::cplx")]
    pub c: Complex64,
    #[serde(rename = "D", with = "crate::cplx")]
    pub d: Complex64,
    pub q: QBase,
}

/// The five constants of the conditional variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessParams {
    pub eta: f64,
    pub theta: f64,
    pub sigma: f64,
    pub tau: f64,
    pub gamma: f64,
}

impl HarnessParams {
    pub fn new(eta: f64, theta: f64, sigma: f64, tau: f64, gamma: f64) -> Result<Self> {
        let g = HarnessParams {
            eta,
            theta,
            sigma,
            tau,
            gamma,
        };
        if g.discriminant() > 0.0 {
            Ok(g)
        } else {
            Err(Error::HypothesisViolated("(γ - 1)² > 4στ".into()))
        }
    }

    /// `(γ - 1)² - 4στ`.
    pub fn discriminant(&self) -> f64 {
        (self.gamma - 1.0).powi(2) - 4.0 * self.sigma * self.tau
    }

    /// `(T_0, T_1)` from the greeks alone.
    pub fn time_domain(&self) -> (f64, f64) {
        let g = self.gamma - 1.0;
        let s = self.discriminant().sqrt();
        // (g + S)/(2σ) rewritten without the 0/0 at σ = 0; g < 0 < S - g
        let t0 = 0f64.max(-2.0 * self.tau / (s - g)).max(-self.tau);
        let inv_t1 = 0f64.max(-2.0 * self.sigma / (s - g)).max(-self.sigma);
        (
            t0,
            if inv_t1 == 0.0 {
                f64::INFINITY
            } else {
                1.0 / inv_t1
            },
        )
    }

    /// Conditional variance `Var(X_t | X_s = x, X_u = z)` of a harness with
    /// these constants.
    pub fn conditional_variance(&self, s: f64, t: f64, u: f64, x: f64, z: f64) -> f64 {
        let k = (u - t) * (t - s) / (u * (1.0 + self.sigma * s) + self.tau - self.gamma * s);
        let dz = z - x;
        let p = (u * x - s * z) / (u - s);
        let qd = dz / (u - s);
        k * (1.0 + self.eta * p + self.theta * qd + self.sigma * p * p + self.tau * qd * qd
            - (1.0 - self.gamma) * qd * p)
    }
}

/// Open time intervals: `i` for `Y` and `Z`, `j` for `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeDomain {
    pub i: (f64, f64),
    pub j: (f64, f64),
}

impl TimeDomain {
    pub fn contains_i(&self, t: f64) -> bool {
        t > self.i.0 && t < self.i.1
    }
    pub fn contains_j(&self, t: f64) -> bool {
        t > self.j.0 && t < self.j.1
    }
}

fn forbidden(z: Complex64) -> bool {
    is_real(z) && z.re >= 1.0
}

/// Check the hypotheses on `(A, B, C, D, q)` and name every violation.
pub fn validate(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
    q: QBase,
) -> Result<ProcessParams> {
    let mut bad = Vec::new();
    let pair_ok = |x: Complex64, y: Complex64| {
        (is_real(x) && is_real(y)) || (y - x.conj()).norm() <= 1e-12 * x.norm().max(1.0)
    };
    if !pair_ok(a, b) {
        bad.push("A, B neither real nor a conjugate pair".to_string());
    }
    if !pair_ok(c, d) {
        bad.push("C, D neither real nor a conjugate pair".to_string());
    }
    let p = a * b * c * d;
    match realize(p, REALIZE_EPS) {
        Some(x) => {
            if x >= 1.0 {
                bad.push(format!("ABCD = {x} >= 1"));
            }
            if q.get() * x >= 1.0 {
                bad.push(format!("qABCD = {} >= 1", q.get() * x));
            }
        }
        None => bad.push("ABCD not real".to_string()),
    }
    let qv = q.get();
    let named = [("AC", a * c), ("AD", a * d), ("BC", b * c), ("BD", b * d)];
    for (n, z) in named {
        if forbidden(z) {
            bad.push(format!("{n} = {} in [1, ∞)", z.re));
        }
    }
    for (n, z) in named {
        if forbidden(z * qv) {
            bad.push(format!("q{n} = {} in [1, ∞)", (z * qv).re));
        }
    }
    if bad.is_empty() {
        Ok(ProcessParams { a, b, c, d, q })
    } else {
        Err(Error::Inadmissible(bad))
    }
}

impl ProcessParams {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64, q: f64) -> Result<Self> {
        validate(a, b, c, d, QBase::new(q)?)
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64, q: f64) -> Result<Self> {
        let z = |x| Complex64::new(x, 0.0);
        validate(z(a), z(b), z(c), z(d), QBase::new(q)?)
    }

    /// Skip the product conditions; used for the finite-state regime, whose
    /// parameters deliberately put two products in `[1, ∞)`.
    pub fn new_unchecked(a: Complex64, b: Complex64, c: Complex64, d: Complex64, q: QBase) -> Self {
        ProcessParams { a, b, c, d, q }
    }

    /// Re-run [`validate`] on deserialized values.
    pub fn validated(self) -> Result<Self> {
        validate(self.a, self.b, self.c, self.d, self.q)
    }

    pub fn ab(&self) -> f64 {
        (self.a * self.b).re
    }
    pub fn cd(&self) -> f64 {
        (self.c * self.d).re
    }
    pub fn abcd(&self) -> f64 {
        (self.a * self.b * self.c * self.d).re
    }
    pub fn qv(&self) -> f64 {
        self.q.get()
    }

    /// `(1 - AC)(1 - AD)(1 - BC)(1 - BD)`, real for admissible parameters.
    pub fn pi(&self) -> Result<f64> {
        let v = (ONE - self.a * self.c)
            * (ONE - self.a * self.d)
            * (ONE - self.b * self.c)
            * (ONE - self.b * self.d);
        real_part(v, "(1-AC)(1-AD)(1-BC)(1-BD)")
    }

    /// The Möbius map `h(x) = (x - CD)/(1 - AB x)` from `Y`-time to `X`-time.
    pub fn mobius_h(&self, x: f64) -> Result<f64> {
        let den = 1.0 - self.ab() * x;
        if den == 0.0 {
            return Err(Error::Singular(format!("h has a pole at x = {x}")));
        }
        Ok((x - self.cd()) / den)
    }

    /// Inverse `T(t) = (t + CD)/(1 + AB t)`.
    pub fn mobius_t(&self, t: f64) -> Result<f64> {
        let den = 1.0 + self.ab() * t;
        if den == 0.0 {
            return Err(Error::Singular(format!("T has a pole at t = {t}")));
        }
        Ok((t + self.cd()) / den)
    }

    /// `h` extended to the endpoints of `I` (including `∞` and the pole).
    fn h_endpoint(&self, x: f64) -> f64 {
        let ab = self.ab();
        if x.is_infinite() {
            return if ab == 0.0 { f64::INFINITY } else { -1.0 / ab };
        }
        let den = 1.0 - ab * x;
        if den.abs() <= 1e-15 * x.abs().max(1.0) {
            f64::INFINITY
        } else {
            (x - self.cd()) / den
        }
    }

    /// `J` from the closed forms in terms of `(A, B, C, D, q)`.
    pub fn j_from_original(&self) -> (f64, f64) {
        let (ab, cd, p, q) = (self.ab(), self.cd(), self.abcd(), self.qv());
        let t0 = 0f64.max(-cd).max(-cd * (1.0 - q) / (1.0 - q * p));
        let inv = 0f64.max(-ab).max(-ab * (1.0 - q) / (1.0 - q * p));
        (t0, if inv == 0.0 { f64::INFINITY } else { 1.0 / inv })
    }

    /// `Z_t = 2√t Y_t / √(1-q)`.
    pub fn z_from_y(&self, t: f64, y: f64) -> f64 {
        2.0 * t.sqrt() * y / (1.0 - self.qv()).sqrt()
    }

    pub fn y_from_z(&self, t: f64, z: f64) -> f64 {
        z * (1.0 - self.qv()).sqrt() / (2.0 * t.sqrt())
    }

    /// `X_t` from `Z_{T(t)}`, for `t` in `J`.
    pub fn x_from_z(&self, t: f64, z: f64) -> Result<f64> {
        let pi = self.pi()?;
        if !(pi > 0.0) {
            return Err(Error::Singular(
                "X normalization (1-AC)(1-AD)(1-BC)(1-BD) <= 0".into(),
            ));
        }
        let sq = (1.0 - self.qv()).sqrt();
        let shift = real_part((self.a + self.b) * t + self.c + self.d, "A+B, C+D")?;
        Ok(
            ((1.0 + self.ab() * t) * z - shift / sq) * (1.0 - self.qv() * self.abcd()).sqrt()
                / pi.sqrt(),
        )
    }

    /// Inverse of [`Self::x_from_z`].
    pub fn z_from_x(&self, t: f64, x: f64) -> Result<f64> {
        let pi = self.pi()?;
        let sq = (1.0 - self.qv()).sqrt();
        let shift = real_part((self.a + self.b) * t + self.c + self.d, "A+B, C+D")?;
        let den = 1.0 + self.ab() * t;
        if den == 0.0 {
            return Err(Error::Singular("1 + ABt = 0".into()));
        }
        Ok((x * pi.sqrt() / (1.0 - self.qv() * self.abcd()).sqrt() + shift / sq) / den)
    }
}

/// `(η, θ, σ, τ, γ)` of the harness built from `p`.
pub fn harness_params(p: &ProcessParams) -> Result<HarnessParams> {
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let q = p.qv();
    let big_p = p.abcd();
    let pi = p.pi()?;
    let one_qp = 1.0 - q * big_p;
    if !(pi > 0.0) || !(one_qp > 0.0) {
        return Err(Error::Singular(
            "harness denominators must be positive".into(),
        ));
    }
    let root = (pi * one_qp).sqrt();
    let sq = (1.0 - q).sqrt();
    let eta = -real_part(
        (a + b) * (1.0 + big_p) - 2.0 * a * b * (c + d),
        "η numerator",
    )? * sq
        / root;
    let theta = -real_part(
        (c + d) * (1.0 + big_p) - 2.0 * c * d * (a + b),
        "θ numerator",
    )? * sq
        / root;
    Ok(HarnessParams {
        eta,
        theta,
        sigma: p.ab() * (1.0 - q) / one_qp,
        tau: p.cd() * (1.0 - q) / one_qp,
        gamma: (q - big_p) / one_qp,
    })
}

/// `I` and `J = h(I)`.
pub fn time_domains(p: &ProcessParams) -> Result<TimeDomain> {
    let (ab, cd, q) = (p.ab(), p.cd(), p.qv());
    let i0 = 0f64.max(cd).max(q * cd);
    let m = 0f64.max(ab).max(q * ab);
    let i1 = if m == 0.0 { f64::INFINITY } else { 1.0 / m };
    if !(i0 < i1) {
        return Err(Error::EmptyDomain(i0, i1));
    }
    Ok(TimeDomain {
        i: (i0, i1),
        j: (p.h_endpoint(i0), p.h_endpoint(i1)),
    })
}
