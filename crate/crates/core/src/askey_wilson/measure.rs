use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{is_real, AWParams, FavardReport};
use crate::error::{domain, Error, Result};
use crate::qseries::{
    qpoch_finite, qpoch_infinite, qpoch_multi, real_part, Order, TruncationPolicy, ZERO_SNAP,
};
use crate::quad::{integrate, QuadOptions, QuadValue};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A point mass. `root` is the parameter power `p q^j` whose Joukowski image
/// `(root + 1/root)/2` is the location; kernels started from this atom use it
/// to avoid re-solving for `root`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
    pub root: f64,
}

/// Product `∏_j (1 - 2 p q^j x + p² q^{2j})` stored as coefficient pairs.
#[derive(Debug, Clone)]
enum Factor {
    Real(Vec<(f64, f64)>),
    /// `|∏_j (1 - 2 p q^j x + p² q^{2j})|²` for a conjugate pair `(p, p̄)`.
    Pair(Vec<(Complex64, Complex64)>),
    Complex(Vec<(Complex64, Complex64)>),
}

fn coeffs(p: Complex64, q: f64, policy: &TruncationPolicy) -> Result<Vec<(Complex64, Complex64)>> {
    let bound = policy.tol * (1.0 - q.abs());
    let mut out = Vec::new();
    let mut t = p;
    while t.norm() >= bound {
        if out.len() >= policy.max_terms {
            return Err(Error::NonConvergent {
                terms: policy.max_terms,
                last: t.norm(),
            });
        }
        out.push((2.0 * t, t * t));
        t *= q;
    }
    Ok(out)
}

impl Factor {
    #[inline]
    fn eval(&self, x: f64) -> Complex64 {
        match self {
            Factor::Real(v) => {
                let mut acc = 1.0;
                for &(l, s) in v {
                    acc *= 1.0 - l * x + s;
                }
                Complex64::new(acc, 0.0)
            }
            Factor::Pair(v) => {
                let mut acc = ONE;
                for &(l, s) in v {
                    acc *= ONE - l * x + s;
                }
                Complex64::new(acc.norm_sqr(), 0.0)
            }
            Factor::Complex(v) => {
                let mut acc = ONE;
                for &(l, s) in v {
                    acc *= ONE - l * x + s;
                }
                acc
            }
        }
    }
}

/// The Askey–Wilson weight in the angle variable,
/// `g(θ) = K |(e^{2iθ})_∞|² / ∏_p |(p e^{iθ})_∞|²`, so that
/// `∫_0^π g(θ) dθ` is the mass of the continuous part.
#[derive(Debug, Clone)]
pub struct ThetaWeight {
    k: f64,
    num: Vec<(f64, f64)>,
    factors: Vec<Factor>,
}

impl ThetaWeight {
    pub fn new(p: &AWParams, k: f64, policy: &TruncationPolicy) -> Result<Self> {
        let q = p.q.get();
        let bound = policy.tol * (1.0 - q.abs());
        let mut num = Vec::new();
        let mut t = q;
        while t.abs() >= bound {
            num.push((2.0 * t, t * t));
            t *= q;
        }
        let v = p.as_array();
        let mut used = [false; 4];
        let mut factors = Vec::new();
        for i in 0..4 {
            if used[i] {
                continue;
            }
            used[i] = true;
            if v[i].norm() == 0.0 {
                continue;
            }
            if is_real(v[i]) {
                let c = coeffs(Complex64::new(v[i].re, 0.0), q, policy)?;
                factors.push(Factor::Real(
                    c.into_iter().map(|(l, s)| (l.re, s.re)).collect(),
                ));
                continue;
            }
            let partner =
                (0..4).find(|&j| !used[j] && (v[j] - v[i].conj()).norm() <= 1e-12 * v[i].norm());
            let c = coeffs(v[i], q, policy)?;
            match partner {
                Some(j) => {
                    used[j] = true;
                    factors.push(Factor::Pair(c));
                }
                None => factors.push(Factor::Complex(c)),
            }
        }
        Ok(ThetaWeight { k, num, factors })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Weight without the constant `K`.
    #[inline]
    pub fn shape(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let c2 = 2.0 * c * c - 1.0;
        let mut top = 4.0 * s * s;
        for &(l, sq) in &self.num {
            top *= 1.0 - l * c2 + sq;
        }
        let mut bot = ONE;
        for f in &self.factors {
            bot *= f.eval(c);
        }
        top / bot.re
    }

    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        if self.k == 0.0 {
            return 0.0;
        }
        self.k * self.shape(theta)
    }
}

/// Normalizing constant `(q, ab, ac, ad, bc, bd, cd)_∞ / (2π (abcd)_∞)`.
pub fn normalizing_constant(p: &AWParams, policy: &TruncationPolicy) -> Result<f64> {
    let q = p.q;
    let mut args = vec![Complex64::new(q.get(), 0.0)];
    args.extend(p.pair_products().iter().map(|(_, z)| *z));
    let top = qpoch_multi(&args, q, Order::Infinite, policy)?;
    let bot = qpoch_infinite(p.abcd(), q, policy)?;
    if bot.norm() == 0.0 {
        return Err(Error::Singular("(abcd; q)_∞ vanishes".into()));
    }
    real_part(top / (2.0 * PI * bot), "K")
}

/// Atoms of the law: one family per real parameter of modulus above one.
/// Masses use the form with `(q/(abcd))^j` cancelled against the
/// `(ab, ac, ad)_j / (qa/b, qa/c, qa/d)_j` factors, i.e.
/// `p_j = p_0 q^j a^{-j} (a²)_j (1 - a² q^{2j}) / ((q)_j (1 - a²))
///        · ∏_{e ∈ {b,c,d}} ∏_{i<j} (1 - a e q^i) / (e - a q^{i+1})`,
/// which stays finite when some of `b, c, d` vanish.
pub fn atoms(p: &AWParams, policy: &TruncationPolicy) -> Result<Vec<Atom>> {
    let q = p.q;
    let qv = q.get();
    let v = p.as_array();
    let mut out: Vec<Atom> = Vec::new();
    for i in 0..4 {
        if !is_real(v[i]) || v[i].re.abs() <= 1.0 - 1e-12 {
            continue;
        }
        let a = v[i].re;
        let others: Vec<Complex64> = (0..4).filter(|&j| j != i).map(|j| v[j]).collect();
        let (b, c, d) = (others[0], others[1], others[2]);
        let ac = Complex64::new(a, 0.0);
        let p0 = {
            let top = qpoch_multi(
                &[Complex64::new(1.0 / (a * a), 0.0), b * c, b * d, c * d],
                q,
                Order::Infinite,
                policy,
            )?;
            let bot = qpoch_multi(
                &[b / ac, c / ac, d / ac, p.abcd()],
                q,
                Order::Infinite,
                policy,
            )?;
            if top.norm() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else if bot.norm() == 0.0 {
                return Err(Error::Singular(format!(
                    "atom family of {a}: p_0 has a pole"
                )));
            } else {
                top / bot
            }
        };
        let mut j = 0usize;
        loop {
            let root = a * qv.powi(j as i32);
            if root.abs() < 1.0 - 1e-12 || (j > 0 && qv == 0.0) {
                break;
            }
            let location = 0.5 * (root + 1.0 / root);
            let mass = if (root.abs() - 1.0).abs() <= 1e-12 {
                0.0
            } else {
                atom_mass(a, [b, c, d], j, p0, q)?
            };
            let boundary = (root.abs() - 1.0).abs() <= 1e-12;
            if (mass != 0.0 || boundary)
                && !out.iter().any(|x| (x.location - location).abs() <= 1e-12)
            {
                out.push(Atom {
                    location,
                    mass,
                    root,
                });
            }
            j += 1;
            if j > policy.max_terms {
                return Err(Error::NonConvergent {
                    terms: j,
                    last: root.abs(),
                });
            }
        }
    }
    Ok(out)
}

fn atom_mass(
    a: f64,
    others: [Complex64; 3],
    j: usize,
    p0: Complex64,
    q: crate::qseries::QBase,
) -> Result<f64> {
    if p0.norm() == 0.0 {
        return Ok(0.0);
    }
    let qv = q.get();
    let ac = Complex64::new(a, 0.0);
    let mut m = p0 * qv.powi(j as i32) * a.powi(-(j as i32));
    m *= qpoch_finite(ac * ac, q, j) * (1.0 - a * a * qv.powi(2 * j as i32))
        / (qpoch_finite(Complex64::new(qv, 0.0), q, j) * (1.0 - a * a));
    for e in others {
        for i in 0..j {
            let qi = qv.powi(i as i32);
            let top = ONE - ac * e * qi;
            if top.norm() <= ZERO_SNAP {
                return Ok(0.0);
            }
            let bot = e - ac * qi * qv;
            if bot.norm() <= ZERO_SNAP * a.abs() {
                return Err(Error::Singular(format!("atom mass pole at j = {j}")));
            }
            m *= top / bot;
        }
    }
    real_part(m, "atom mass")
}

/// A (possibly mixed) Askey–Wilson law.
#[derive(Debug, Clone)]
pub struct AWMeasure {
    pub params: AWParams,
    pub k: f64,
    pub atoms: Vec<Atom>,
    pub has_continuous: bool,
    pub report: FavardReport,
    weight: ThetaWeight,
    quad: QuadOptions,
}

/// Assemble the orthogonality law of `p`.
pub fn measure(p: &AWParams, policy: &TruncationPolicy) -> Result<AWMeasure> {
    let report = p.classify();
    if !report.admissible() {
        return Err(Error::Inadmissible(vec![format!(
            "Favard case {:?} (m1 = {}, m2 = {})",
            report.case, report.m1, report.m2
        )]));
    }
    let finite = report.n_atoms_cap.is_some();
    let k = if finite {
        0.0
    } else {
        normalizing_constant(p, policy)?
    };
    let atoms = atoms(p, policy)?;
    if let Some(cap) = report.n_atoms_cap {
        let n = atoms.iter().filter(|a| a.mass > 0.0).count();
        if n > cap {
            return Err(Error::Singular(format!(
                "{n} atoms exceed the finite-support cap {cap}"
            )));
        }
    }
    Ok(AWMeasure {
        params: *p,
        k,
        has_continuous: !finite,
        weight: ThetaWeight::new(p, k, policy)?,
        atoms,
        report,
        quad: QuadOptions::default(),
    })
}

impl AWMeasure {
    pub fn with_quad(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    pub fn weight(&self) -> &ThetaWeight {
        &self.weight
    }

    /// Density of the continuous part at `x ∈ (-1, 1)`.
    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x.abs() < 1.0) {
            return domain(format!("density needs |x| < 1, got {x}"));
        }
        let th = x.acos();
        Ok(self.weight.eval(th) / (1.0 - x * x).sqrt())
    }

    /// Density of the continuous part in the angle `θ = arccos x`.
    #[inline]
    pub fn theta_density(&self, theta: f64) -> f64 {
        self.weight.eval(theta)
    }

    /// `∫ f dν` over the continuous part only.
    pub fn expect_continuous<T: QuadValue, F: Fn(f64) -> T>(&self, f: F) -> T {
        if !self.has_continuous {
            return T::zero();
        }
        integrate(
            |th: f64| f(th.cos()) * self.weight.eval(th),
            0.0,
            PI,
            &self.quad,
        )
        .value
    }

    /// `∫ f dν`, continuous part plus atoms.
    pub fn expect<T: QuadValue, F: Fn(f64) -> T>(&self, f: F) -> T {
        let mut acc = self.expect_continuous(&f);
        for a in &self.atoms {
            if a.mass != 0.0 {
                acc = acc + f(a.location) * a.mass;
            }
        }
        acc
    }

    pub fn continuous_mass(&self) -> f64 {
        self.expect_continuous(|_| 1.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.expect(|x| x.powi(k))
    }

    /// Points of the support that carry mass, in increasing order (finite laws).
    pub fn atom_locations(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .atoms
            .iter()
            .filter(|a| a.mass > 0.0)
            .map(|a| a.location)
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn semicircle() {
        let p = AWParams::real(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let m = measure(&p, &pol()).unwrap();
        assert!((m.k - 1.0 / (2.0 * PI)).abs() < 1e-15);
        for &x in &[-0.9, -0.3, 0.0, 0.5, 0.99] {
            let want = 2.0 / PI * (1.0f64 - x * x).sqrt();
            assert!((m.density(x).unwrap() - want).abs() < 1e-14);
        }
        assert!(m.density(1.0).is_err());
    }

    #[test]
    fn normalization_and_moments() {
        let p = AWParams::real(0.4, 0.3, -0.2, 0.1, 0.5).unwrap();
        let m = measure(&p, &pol()).unwrap();
        assert!(m.atoms.is_empty());
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        let mean = m.moment(1);
        assert!((mean - p.mean().unwrap()).abs() < 1e-12);
        let var = m.moment(2) - mean * mean;
        assert!((var - p.variance().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_density_for_pm_pairs() {
        let p = AWParams::real(0.6, -0.6, 0.3, -0.3, 0.2).unwrap();
        let m = measure(&p, &pol()).unwrap();
        for &x in &[0.1, 0.45, 0.8] {
            assert!((m.density(x).unwrap() - m.density(-x).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn mixed_law_mass() {
        for &(a, q) in &[(1.8, 0.5), (-2.5, -0.4), (3.0, 0.0), (1.3, 0.8)] {
            let p = AWParams::real(a, 0.2, -0.3, 0.25, q).unwrap();
            let m = measure(&p, &pol()).unwrap();
            assert!(!m.atoms.is_empty());
            assert!(
                (m.total_mass() - 1.0).abs() < 1e-10,
                "a = {a}, q = {q}: {}",
                m.total_mass()
            );
        }
    }

    #[test]
    fn atom_masses_with_zero_parameters() {
        // b = c = d = 0 exercises the pre-cancelled mass formula
        let p = AWParams::real(2.0, 0.0, 0.0, 0.0, 0.5).unwrap();
        let m = measure(&p, &pol()).unwrap();
        assert_eq!(m.atoms.len(), 2);
        assert!((m.total_mass() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn conjugate_pair_law() {
        let z = Complex64::from_polar(0.7, 1.1);
        let p = AWParams::new(
            z,
            z.conj(),
            Complex64::new(0.3, 0.0),
            Complex64::new(-0.5, 0.0),
            crate::qseries::QBase::new(-0.3).unwrap(),
        )
        .unwrap();
        let m = measure(&p, &pol()).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        let mean = m.moment(1);
        assert!((mean - p.mean().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn finite_case_has_no_density() {
        // ad = q^{-3}, bd > ad: four atoms from the family of d
        let p = AWParams::real(0.5, 1.2, 0.01, 16.0, 0.5).unwrap();
        let m = measure(&p, &pol()).unwrap();
        assert!(!m.has_continuous);
        assert_eq!(m.k, 0.0);
        assert_eq!(m.atom_locations().len(), 4);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }
}
