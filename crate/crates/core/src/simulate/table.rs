//! Inverse-CDF sampling of Askey–Wilson laws: atoms by mass, the continuous
//! part through a monotone cubic table of the cumulative mass in `θ = arccos x`.

use std::f64::consts::PI;

use rand::Rng;

use crate::askey_wilson::{AWMeasure, Atom};
use crate::error::{Error, Result};

/// Cells of the θ-grid (nodes = cells + 1).
pub const GRID_CELLS: usize = 2048;

#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    h: f64,
    dens: Vec<f64>,
    cum: Vec<f64>,
}

impl InverseCdfTable {
    /// From density values at the uniform nodes `θ_k = kπ/(n-1)`.
    pub fn from_density(dens: Vec<f64>) -> Result<Self> {
        let n = dens.len();
        if n < 4 {
            return Err(Error::Domain(format!("need at least 4 nodes, got {n}")));
        }
        if let Some(v) = dens.iter().find(|v| !v.is_finite()) {
            return Err(Error::Singular(format!("density value {v} on the θ-grid")));
        }
        let dens: Vec<f64> = dens.into_iter().map(|v| v.max(0.0)).collect();
        let h = PI / (n - 1) as f64;
        let mut cum = Vec::with_capacity(n);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..n - 1 {
            let f = &dens;
            // cubic through four neighbours inside, quadratic at the two ends
            let cell = if i == 0 {
                (5.0 * f[0] + 8.0 * f[1] - f[2]) * h / 12.0
            } else if i == n - 2 {
                (-f[n - 3] + 8.0 * f[n - 2] + 5.0 * f[n - 1]) * h / 12.0
            } else {
                (-f[i - 1] + 13.0 * (f[i] + f[i + 1]) - f[i + 2]) * h / 24.0
            };
            acc += cell.max(0.0);
            cum.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Singular(
                "continuous part carries no mass on the θ-grid".into(),
            ));
        }
        Ok(InverseCdfTable { h, dens, cum })
    }

    /// Tabulate `g` on `GRID_CELLS + 1` nodes.
    pub fn build(g: impl Fn(f64) -> f64) -> Result<Self> {
        let h = PI / GRID_CELLS as f64;
        Self::from_density((0..=GRID_CELLS).map(|k| g(k as f64 * h)).collect())
    }

    pub fn nodes(&self) -> usize {
        self.dens.len()
    }

    /// Tabulated mass `∫_0^π g`.
    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Fritsch–Carlson limited end slopes of cell `i`.
    fn slopes(&self, i: usize) -> (f64, f64) {
        let delta = (self.cum[i + 1] - self.cum[i]) / self.h;
        if delta <= 0.0 {
            return (0.0, 0.0);
        }
        let (a, b) = (self.dens[i] / delta, self.dens[i + 1] / delta);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            (tau * a * delta, tau * b * delta)
        } else {
            (self.dens[i], self.dens[i + 1])
        }
    }

    fn hermite(&self, i: usize, m: (f64, f64), s: f64) -> f64 {
        let (s2, s3) = (s * s, s * s * s);
        let (f0, f1) = (self.cum[i], self.cum[i + 1]);
        (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * self.h * m.0
            + (3.0 * s2 - 2.0 * s3) * f1
            + (s3 - s2) * self.h * m.1
    }

    fn hermite_slope(&self, i: usize, m: (f64, f64), s: f64) -> f64 {
        let (f0, f1) = (self.cum[i], self.cum[i + 1]);
        6.0 * (s * s - s) * (f0 - f1)
            + (3.0 * s * s - 4.0 * s + 1.0) * self.h * m.0
            + (3.0 * s * s - 2.0 * s) * self.h * m.1
    }

    /// Normalized cumulative mass at angle `θ`.
    pub fn cdf(&self, theta: f64) -> f64 {
        let n = self.dens.len();
        let r = (theta / self.h).clamp(0.0, (n - 1) as f64);
        let i = (r.floor() as usize).min(n - 2);
        let m = self.slopes(i);
        self.hermite(i, m, r - i as f64) / self.total()
    }

    /// Angle with normalized cumulative mass `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.dens.len();
        let target = u.clamp(0.0, 1.0) * self.total();
        let i = self.cum.partition_point(|&c| c <= target).clamp(1, n - 1) - 1;
        let (f0, f1) = (self.cum[i], self.cum[i + 1]);
        if f1 <= f0 {
            return i as f64 * self.h;
        }
        let m = self.slopes(i);
        // safeguarded Newton on the monotone cubic
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut s = ((target - f0) / (f1 - f0)).clamp(0.0, 1.0);
        for _ in 0..60 {
            let g = self.hermite(i, m, s) - target;
            if g.abs() <= 1e-15 * (f1 - f0) {
                break;
            }
            if g > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let d = self.hermite_slope(i, m, s);
            let next = if d > 0.0 { s - g / d } else { f64::NAN };
            s = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-16 {
                break;
            }
        }
        (i as f64 + s) * self.h
    }
}

/// One draw: the value, and the atom root when it landed on an atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub value: f64,
    pub root: Option<f64>,
}

/// Atoms selected by mass, the rest from an inverse-CDF table.
#[derive(Debug, Clone)]
pub struct MeasureSampler {
    atoms: Vec<Atom>,
    cum: Vec<f64>,
    table: Option<InverseCdfTable>,
}

impl MeasureSampler {
    pub fn new(m: &AWMeasure) -> Result<Self> {
        let table = if m.has_continuous {
            Some(InverseCdfTable::build(|th| m.theta_density(th))?)
        } else {
            None
        };
        Self::from_parts(m.atoms.clone(), table)
    }

    /// With no table the atoms are renormalized to a probability vector.
    pub fn from_parts(atoms: Vec<Atom>, table: Option<InverseCdfTable>) -> Result<Self> {
        let atoms: Vec<Atom> = atoms.into_iter().filter(|a| a.mass > 0.0).collect();
        let mut cum = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.mass;
            cum.push(acc);
        }
        if table.is_none() {
            if !(acc > 0.0) {
                return Err(Error::Singular(
                    "law with neither atoms nor a continuous part".into(),
                ));
            }
            cum.iter_mut().for_each(|c| *c /= acc);
        }
        Ok(MeasureSampler { atoms, cum, table })
    }

    pub fn atom_mass(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn table(&self) -> Option<&InverseCdfTable> {
        self.table.as_ref()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        draw_mixed(&self.atoms, &self.cum, self.table.as_ref(), rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw(rng).value
    }
}

pub(crate) fn draw_mixed<R: Rng + ?Sized>(
    atoms: &[Atom],
    cum: &[f64],
    table: Option<&InverseCdfTable>,
    rng: &mut R,
) -> Draw {
    if !atoms.is_empty() {
        let u: f64 = rng.random();
        let k = cum.partition_point(|&c| c <= u);
        if k < atoms.len() || table.is_none() {
            let a = &atoms[k.min(atoms.len() - 1)];
            return Draw {
                value: a.location,
                root: Some(a.root),
            };
        }
    }
    let th = table.expect("continuous part").quantile(rng.random());
    Draw {
        value: th.cos(),
        root: None,
    }
}

/// One draw from `m` (builds a fresh table; reuse [`MeasureSampler`] for many).
pub fn sample_measure<R: Rng + ?Sized>(m: &AWMeasure, rng: &mut R) -> Result<f64> {
    Ok(MeasureSampler::new(m)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::askey_wilson::{measure, AWParams};
    use crate::qseries::TruncationPolicy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn law(a: f64, b: f64, c: f64, d: f64, q: f64) -> AWMeasure {
        measure(
            &AWParams::real(a, b, c, d, q).unwrap(),
            &TruncationPolicy::default(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_and_monotone() {
        let m = law(0.5, -0.3, 0.2, 0.7, 0.4);
        let t = MeasureSampler::new(&m).unwrap();
        let tab = t.table().unwrap();
        assert!((tab.total() - m.continuous_mass()).abs() < 1e-9);
        let mut prev = -1.0;
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            let th = tab.quantile(u);
            assert!(th >= prev);
            prev = th;
            assert!((tab.cdf(th) - u).abs() < 1e-8, "u = {u}");
        }
    }

    #[test]
    fn single_atom_always() {
        // finite law on one point: ad = 1 (N = 0), ab > 1
        let m = law(2.0, 0.7, 0.2, 0.5, 0.3);
        assert!(!m.has_continuous);
        let s = MeasureSampler::new(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(s.sample(&mut rng), 1.25);
        }
    }

    #[test]
    fn zero_parameters_symmetric() {
        let m = law(0.0, 0.0, 0.0, 0.0, 0.0);
        let s = MeasureSampler::new(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * (var / n as f64).sqrt(), "mean {mean}");
        // semicircle on [-1, 1]: variance 1/4
        let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        let se = ((m4 - var * var) / n as f64).sqrt();
        assert!((var - 0.25).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn mixed_law_moments() {
        let m = law(1.6, 0.3, -0.4, 0.2, 0.5);
        assert!(m.has_continuous && !m.atoms.is_empty());
        let s = MeasureSampler::new(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let want_mean = m.params.mean().unwrap();
        let want_var = m.params.variance().unwrap();
        assert!(
            (mean - want_mean).abs() < 3.0 * (want_var / n as f64).sqrt(),
            "{mean} vs {want_mean}"
        );
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let se = ((m4 - var * var) / n as f64).sqrt();
        assert!((var - want_var).abs() < 3.0 * se, "{var} vs {want_var}");
    }
}
