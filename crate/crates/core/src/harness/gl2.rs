//! The right action of `GL₂(ℝ)` on processes, `Y_t = (ct + d) X_{T(t)}` with
//! `T(t) = (at + b)/(ct + d)`, realised on covariance functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gl2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Gl2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Gl2 { a, b, c, d };
        if m.det() == 0.0 || !m.det().is_finite() {
            return Err(Error::Domain("singular matrix".into()));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Gl2 {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product `self × rhs`.
    pub fn mul(&self, rhs: &Gl2) -> Gl2 {
        Gl2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn inverse(&self) -> Gl2 {
        let k = 1.0 / self.det();
        Gl2 {
            a: self.d * k,
            b: -self.b * k,
            c: -self.c * k,
            d: self.a * k,
        }
    }

    pub fn mobius(&self, t: f64) -> f64 {
        (self.a * t + self.b) / (self.c * t + self.d)
    }

    /// Inverse map `T^{-1}` at a finite point.
    fn preimage(&self, y: f64) -> f64 {
        (self.d * y - self.b) / (self.a - self.c * y)
    }
}

type CovFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A covariance function together with its open time domain.
#[derive(Clone)]
pub struct CovarianceLaw {
    cov: Arc<CovFn>,
    pub domain: (f64, f64),
}

impl fmt::Debug for CovarianceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CovarianceLaw")
            .field("domain", &self.domain)
            .finish()
    }
}

impl CovarianceLaw {
    pub fn new(domain: (f64, f64), cov: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        CovarianceLaw {
            cov: Arc::new(cov),
            domain,
        }
    }

    /// `E(X_s X_t) = min(s, t)` on `(0, ∞)`.
    pub fn brownian() -> Self {
        Self::new((0.0, f64::INFINITY), f64::min)
    }

    pub fn cov(&self, s: f64, t: f64) -> Result<f64> {
        for x in [s, t] {
            if !(x > self.domain.0 && x < self.domain.1) {
                return Err(Error::Domain(format!(
                    "time {x} outside ({}, {})",
                    self.domain.0, self.domain.1
                )));
            }
        }
        Ok((self.cov)(s, t))
    }
}

/// Covariance of `A(X)`: `(cs + d)(ct + d) E(X_{T(s)} X_{T(t)})`, on the
/// preimage of the domain of `X` under the increasing map `T`.
pub fn gl2_action(m: &Gl2, law: &CovarianceLaw) -> Result<CovarianceLaw> {
    if !(m.det() > 0.0) {
        return Err(Error::Domain(
            "the induced Möbius map must be increasing (det > 0)".into(),
        ));
    }
    let (lo, hi) = law.domain;
    // T maps each branch off the pole increasingly onto an interval; prefer the
    // branch to the right of the pole when both meet the domain
    let (l, h) = if m.c == 0.0 {
        // affine: (d y - b)/a keeps infinities intact
        ((m.d * lo - m.b) / m.a, (m.d * hi - m.b) / m.a)
    } else {
        let pole = -m.d / m.c;
        let asym = m.a / m.c;
        let (rl, rh) = (lo, hi.min(asym));
        let (ll, lh) = (lo.max(asym), hi);
        if rl < rh {
            (
                if rl == f64::NEG_INFINITY {
                    pole
                } else {
                    m.preimage(rl)
                },
                if rh == asym {
                    f64::INFINITY
                } else {
                    m.preimage(rh)
                },
            )
        } else if ll < lh {
            (
                if ll == asym {
                    f64::NEG_INFINITY
                } else {
                    m.preimage(ll)
                },
                if lh == f64::INFINITY {
                    pole
                } else {
                    m.preimage(lh)
                },
            )
        } else {
            return Err(Error::Domain(format!("no time maps into ({lo}, {hi})")));
        }
    };
    if !(l < h) {
        return Err(Error::Domain(format!("preimage of ({lo}, {hi}) is empty")));
    }
    let inner = law.cov.clone();
    let m = *m;
    Ok(CovarianceLaw::new((l, h), move |s, t| {
        (m.c * s + m.d) * (m.c * t + m.d) * inner(m.mobius(s), m.mobius(t))
    }))
}
