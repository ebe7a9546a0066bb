//! Laws of `Z` at the finite ends of `I`, extended by `L₂`-continuity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{marginal_params, time_domains, ProcessParams};
use crate::qseries::{qpoch_multi, real_part, Order, TruncationPolicy};

/// A finitely supported law: `(location, mass)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeLaw {
    pub atoms: Vec<(f64, f64)>,
}

impl BridgeLaw {
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(x, m)| x * m).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Endpoint {
    Deterministic { time: f64, value: f64 },
    Discrete { time: f64, law: BridgeLaw },
}

impl Endpoint {
    pub fn time(&self) -> f64 {
        match self {
            Endpoint::Deterministic { time, .. } | Endpoint::Discrete { time, .. } => *time,
        }
    }
}

/// `right` is `None` when `I` is unbounded above (`AB < 0`, `q ≥ 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeEndpoints {
    pub left: Endpoint,
    pub right: Option<Endpoint>,
}

pub fn bridge_endpoints(p: &ProcessParams) -> Result<BridgeEndpoints> {
    let (ab, cd, q) = (p.ab(), p.cd(), p.qv());
    if ab == 0.0 {
        return Err(Error::Domain("bridge endpoints need AB != 0".into()));
    }
    let td = time_domains(p)?;
    let sq = (1.0 - q).sqrt();
    let (s0, s1) = td.i;

    let left = if cd >= 0.0 {
        Endpoint::Deterministic {
            time: s0,
            value: real_part(p.c + p.d, "C + D")? / sq,
        }
    } else if q >= 0.0 {
        // at q = 0 the geometric families collapse to their first atoms
        Endpoint::Discrete {
            time: s0,
            law: geometric_law(p, &TruncationPolicy::default())?,
        }
    } else {
        Endpoint::Discrete {
            time: s0,
            law: two_point(p, s0)?,
        }
    };

    let right = if ab > 0.0 {
        Some(Endpoint::Deterministic {
            time: s1,
            value: real_part((p.a + p.b) / (p.a * p.b), "1/A + 1/B")? / sq,
        })
    } else if q < 0.0 {
        Some(Endpoint::Discrete {
            time: s1,
            law: two_point(p, s1)?,
        })
    } else {
        None
    };
    Ok(BridgeEndpoints { left, right })
}

/// `Z_0` for `CD < 0`, `q ≥ 0`: atoms `q^k C/√(1-q)` and `q^k D/√(1-q)`.
fn geometric_law(p: &ProcessParams, policy: &TruncationPolicy) -> Result<BridgeLaw> {
    let (c, d) = (real_part(p.c, "C")?, real_part(p.d, "D")?);
    let q = p.q;
    let qv = q.get();
    let sq = (1.0 - qv).sqrt();
    let big_p = Complex64::new(p.abcd(), 0.0);
    let mut atoms = Vec::new();
    for (x, y) in [(c, d), (d, c)] {
        let (xc, yc) = (Complex64::new(x, 0.0), Complex64::new(y, 0.0));
        let top = qpoch_multi(&[p.a * yc, p.b * yc], q, Order::Infinite, policy)?;
        let bot = qpoch_multi(&[yc / xc, big_p], q, Order::Infinite, policy)?;
        if bot.norm() == 0.0 {
            return Err(Error::Singular("bridge mass prefactor has a pole".into()));
        }
        let mut term = top / bot;
        let m = (p.a * x)
            .norm()
            .max((p.b * x).norm())
            .max((x / y).abs())
            .max(1.0);
        let mut qk = 1.0;
        for k in 0usize.. {
            if k > 0 {
                let qp = qk; // q^{k-1}
                qk *= qv;
                term *= (1.0 - p.a * x * qp) * (1.0 - p.b * x * qp) * qv
                    / ((1.0 - qk) * (1.0 - qk * x / y));
            }
            atoms.push((qk * x / sq, real_part(term, "bridge mass")?));
            if qv == 0.0 {
                break;
            }
            // later ratios are at most ρ = q(1+ε)²/((1-q^{k+1})(1-ε)), ε = m q^k;
            // a small term alone is not enough, the masses may still be growing
            let eps = m * qk;
            let rho = qv * (1.0 + eps).powi(2) / ((1.0 - qk * qv) * (1.0 - eps));
            if eps < 1.0 && rho < 1.0 && term.norm() * rho / (1.0 - rho) < policy.tol * 1e-3 {
                break;
            }
            if k >= policy.max_terms {
                return Err(Error::NonConvergent {
                    terms: k,
                    last: term.norm(),
                });
            }
        }
    }
    Ok(BridgeLaw { atoms })
}

/// Two-point law at an end where `q·cd = 1` or `q·ab = 1`: the Gauss rule of
/// the monic recurrence, which stops at degree 2 (`λ_2 = 0`).
fn two_point(p: &ProcessParams, t: f64) -> Result<BridgeLaw> {
    let aw = marginal_params(p, t);
    let b0 = real_part(aw.monic_b(0)?, "b_0")?;
    let b1 = real_part(aw.monic_b(1)?, "b_1")?;
    let l1 = real_part(aw.monic_lambda(1)?, "λ_1")?;
    if !(l1 > 0.0) {
        return Err(Error::Singular(format!("λ_1 = {l1} at the two-point end")));
    }
    let mid = 0.5 * (b0 + b1);
    let rad = (0.25 * (b0 - b1).powi(2) + l1).sqrt();
    let scale = 2.0 * t.sqrt() / (1.0 - p.qv()).sqrt();
    let atoms = [mid - rad, mid + rad]
        .into_iter()
        .map(|y| (y * scale, l1 / (l1 + (y - b0).powi(2))))
        .collect();
    Ok(BridgeLaw { atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{e_y, marginal, var_y};

    #[test]
    fn deterministic_ends() {
        let p = ProcessParams::real(0.5, 0.4, 0.3, 0.2, 0.3).unwrap();
        let e = bridge_endpoints(&p).unwrap();
        let sq = 0.7f64.sqrt();
        match e.left {
            Endpoint::Deterministic { time, value } => {
                assert!((time - 0.06).abs() < 1e-15 && (value - 0.5 / sq).abs() < 1e-14);
                assert!(var_y(&p, time).unwrap().abs() < 1e-15);
                assert!((p.z_from_y(time, e_y(&p, time).unwrap()) - value).abs() < 1e-12);
            }
            _ => panic!(),
        }
        match e.right.unwrap() {
            Endpoint::Deterministic { time, value } => {
                assert!((time - 5.0).abs() < 1e-12 && (value - (2.0 + 2.5) / sq).abs() < 1e-12);
                assert!((p.z_from_y(time, e_y(&p, time).unwrap()) - value).abs() < 1e-12);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn geometric_families_sum_to_one() {
        for &(a, b, c, d, q) in &[
            (0.5, 0.3, 0.8, -0.6, 0.5),
            (0.2, -0.4, 0.9, -0.3, 0.8),
            (0.6, 0.1, -0.5, 0.7, 0.1),
        ] {
            let p = ProcessParams::real(a, b, c, d, q).unwrap();
            let e = bridge_endpoints(&p).unwrap();
            let Endpoint::Discrete { time, law } = &e.left else {
                panic!()
            };
            assert_eq!(*time, 0.0);
            assert!((law.total() - 1.0).abs() < 1e-12, "{}", law.total());
            assert!(law.atoms.iter().all(|a| a.1 >= 0.0));
            // first two moments are the t → 0 limits of those of Z_t
            let sq = (1.0 - q).sqrt();
            let mean = (c + d - c * d * (a + b)) / ((1.0 - a * b * c * d) * sq);
            assert!((law.mean() - mean).abs() < 1e-12);
            let var: f64 = law.atoms.iter().map(|(z, w)| w * (z - mean).powi(2)).sum();
            let t = 1e-13;
            let want = 4.0 * t * var_y(&p, t).unwrap() / (1.0 - q);
            assert!((var - want).abs() < 1e-10, "{var} vs {want}");
        }
        // the D family starts ~1e-21 and grows ×20 per step before decaying
        let p = ProcessParams::real(
            0.6282243971092555,
            0.5688305457442849,
            0.8857507023089565,
            -0.6728780836383113,
            0.9480634119797434,
        )
        .unwrap();
        let Endpoint::Discrete { law, .. } = bridge_endpoints(&p).unwrap().left else {
            panic!()
        };
        assert!((law.total() - 1.0).abs() < 1e-12, "{}", law.total());
        // conjugate A, B
        let p = ProcessParams::new(
            Complex64::new(0.3, 0.4),
            Complex64::new(0.3, -0.4),
            Complex64::new(0.7, 0.0),
            Complex64::new(-0.5, 0.0),
            0.6,
        )
        .unwrap();
        let Endpoint::Discrete { law, .. } = bridge_endpoints(&p).unwrap().left else {
            panic!()
        };
        assert!((law.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_zero_two_atoms() {
        let p = ProcessParams::real(0.5, 0.3, 0.8, -0.6, 0.0).unwrap();
        let Endpoint::Discrete { law, .. } = bridge_endpoints(&p).unwrap().left else {
            panic!()
        };
        assert_eq!(law.atoms.len(), 2);
        assert!((law.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_point_ends_for_negative_q() {
        let p = ProcessParams::real(0.5, -0.4, 0.6, -0.5, -0.5).unwrap();
        let e = bridge_endpoints(&p).unwrap();
        for end in [e.left, e.right.unwrap()] {
            let Endpoint::Discrete { time, law } = end else {
                panic!()
            };
            assert_eq!(law.atoms.len(), 2);
            assert!((law.total() - 1.0).abs() < 1e-12);
            // the marginal just inside I puts almost all mass near the two points
            let td = time_domains(&p).unwrap();
            let inside = if time == td.i.0 {
                time * (1.0 + 1e-7)
            } else {
                time * (1.0 - 1e-7)
            };
            let m = marginal(&p, inside).unwrap();
            let near: f64 = law
                .atoms
                .iter()
                .map(|&(z, _)| {
                    let y = p.y_from_z(inside, z);
                    m.expect(|x| if (x - y).abs() < 0.02 { 1.0 } else { 0.0 })
                })
                .sum();
            assert!(near > 0.99, "mass near the two points: {near}");
            // same mean and variance as the marginal in the limit
            let mean = p.z_from_y(time, e_y(&p, time).unwrap());
            assert!((law.mean() - mean).abs() < 1e-10);
            let var: f64 = law.atoms.iter().map(|(z, w)| w * (z - mean).powi(2)).sum();
            let want = var_y(&p, time).unwrap() * 4.0 * time / 1.5;
            assert!((var - want).abs() < 1e-10, "{var} vs {want}");
        }
    }

    #[test]
    fn unbounded_right_and_ab_zero() {
        let p = ProcessParams::real(0.5, -0.4, 0.6, 0.5, 0.3).unwrap();
        assert!(bridge_endpoints(&p).unwrap().right.is_none());
        let p = ProcessParams::real(0.0, 0.4, 0.6, 0.5, 0.3).unwrap();
        assert!(matches!(bridge_endpoints(&p), Err(Error::Domain(_))));
    }
}
