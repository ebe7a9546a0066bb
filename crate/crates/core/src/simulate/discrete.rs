//! The finite-state process: `N + 1` curves `y_k(t) = (A√t q^k + 1/(A√t q^k))/2`
//! with finite Askey–Wilson marginals and lower-triangular transitions.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::paths::{path_rng, Trajectory};
use crate::askey_wilson::discrete_pmf_unchecked;
use crate::error::{Error, Result};
use crate::harness::ProcessParams;
use crate::par::{map_range, Exec};
use crate::qseries::QBase;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteProcessSpec {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub q: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl DiscreteProcessSpec {
    /// `D = 1/(A q^N)`.
    pub fn d(&self) -> f64 {
        1.0 / (self.a * self.q.powi(self.n as i32))
    }

    /// `(A, B, C, D, q)`; not admissible for [`crate::harness::validate`] since `AD = q^{-N}`.
    pub fn params(&self) -> Result<ProcessParams> {
        let r = |x: f64| Complex64::new(x, 0.0);
        Ok(ProcessParams::new_unchecked(
            r(self.a),
            r(self.b),
            r(self.c),
            r(self.d()),
            QBase::new(self.q)?,
        ))
    }

    /// The hypotheses of the finite construction, after relabelling so that
    /// `A < B` and `AD = q^{-N}` is the smaller of the two large products.
    pub fn check(&self) -> Result<()> {
        let (a, b, c, q, n) = (self.a, self.b, self.c, self.q, self.n);
        let d = self.d();
        let first = [
            (a > 0.0 && b > 0.0 && c > 0.0, "A, B, C > 0"),
            (q > 0.0 && q < 1.0, "0 < q < 1"),
        ];
        let rest = [
            (a < b, "A < B"),
            (a * b * c * d < 1.0, "ABCD < 1"),
            (a * c < 1.0, "AC < 1"),
            (b * c < 1.0, "BC < 1"),
            (a * q.powi(n as i32) > 1.0, "A q^N > 1"),
        ];
        for group in [&first[..], &rest[..]] {
            let bad: Vec<&str> = group
                .iter()
                .filter(|(ok, _)| !ok)
                .map(|(_, w)| *w)
                .collect();
            if !bad.is_empty() {
                return Err(Error::HypothesisViolated(bad.join(", ")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteProcess {
    spec: DiscreteProcessSpec,
    q: QBase,
}

pub fn discrete_process(spec: DiscreteProcessSpec) -> Result<DiscreteProcess> {
    spec.check()?;
    Ok(DiscreteProcess {
        spec,
        q: QBase::new(spec.q)?,
    })
}

impl DiscreteProcess {
    pub fn spec(&self) -> &DiscreteProcessSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// `I = (C/(q^N A), 1/(AB))`.
    pub fn time_domain(&self) -> (f64, f64) {
        let s = &self.spec;
        (s.c / (s.q.powi(s.n as i32) * s.a), 1.0 / (s.a * s.b))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.time_domain();
        if t > lo && t < hi {
            Ok(())
        } else {
            Err(Error::Domain(format!("t = {t} outside I = ({lo}, {hi})")))
        }
    }

    pub fn y(&self, k: usize, t: f64) -> f64 {
        let r = self.spec.a * t.sqrt() * self.spec.q.powi(k as i32);
        0.5 * (r + 1.0 / r)
    }

    pub fn support(&self, t: f64) -> Vec<f64> {
        (0..=self.n()).map(|k| self.y(k, t)).collect()
    }

    /// Degenerate values at the two ends of `I`: `y_N` on the left, `y_0` on the right.
    pub fn endpoint_values(&self) -> (f64, f64) {
        let s = &self.spec;
        let l = s.q.powi(s.n as i32) * s.a * s.c;
        (
            (1.0 + l) / (2.0 * l.sqrt()),
            (s.a + s.b) / (2.0 * (s.a * s.b).sqrt()),
        )
    }

    fn pmf(&self, k: usize, n: usize, a: f64, b: f64, c: f64) -> Result<f64> {
        discrete_pmf_unchecked(k, n, a, b, c, self.q)
    }

    /// `π_t(y_k(t)) = p_{k,N}(A√t, B√t, C/√t)`.
    pub fn marginal_k(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let r = t.sqrt();
        let s = &self.spec;
        (0..=s.n)
            .map(|k| self.pmf(k, s.n, s.a * r, s.b * r, s.c / r))
            .collect()
    }

    /// `P[k][j] = P_{s,t,y_k(s)}(y_j(t)) = p_{j,k}(A√t, B√t, q^k A s/√t)`, zero for `j > k`.
    pub fn transition_jk(&self, s: f64, t: f64) -> Result<Vec<Vec<f64>>> {
        self.check_time(s)?;
        self.check_time(t)?;
        if !(s < t) {
            return Err(Error::Domain(format!("need s < t, got {s}, {t}")));
        }
        let sp = &self.spec;
        let r = t.sqrt();
        (0..=sp.n)
            .map(|k| {
                let c = sp.q.powi(k as i32) * sp.a * s / r;
                let mut row = vec![0.0; sp.n + 1];
                for (j, v) in row.iter_mut().enumerate().take(k + 1) {
                    *v = self.pmf(j, k, sp.a * r, sp.b * r, c)?;
                }
                Ok(row)
            })
            .collect()
    }

    /// `P(Y_t = y_j(t) | Y_s = y_k(s), Y_u = y_i(u))` over `j`, from the closed
    /// form `p_{j-i,k-i}(q^i A√t, √t/(q^i A u), q^k A s/√t)`; zero outside `i ≤ j ≤ k`.
    pub fn bicond(&self, s: f64, t: f64, u: f64, i: usize, k: usize) -> Result<Vec<f64>> {
        for x in [s, t, u] {
            self.check_time(x)?;
        }
        if !(s < t && t < u) || i > k || k > self.n() {
            return Err(Error::Domain(format!(
                "need s < t < u and i <= k <= N (i = {i}, k = {k})"
            )));
        }
        let sp = &self.spec;
        let (qi, r) = (sp.q.powi(i as i32), t.sqrt());
        let (a, b, c) = (
            qi * sp.a * r,
            r / (qi * sp.a * u),
            sp.q.powi(k as i32) * sp.a * s / r,
        );
        let mut out = vec![0.0; sp.n + 1];
        for (j, v) in out.iter_mut().enumerate().take(k + 1).skip(i) {
            *v = self.pmf(j - i, k - i, a, b, c)?;
        }
        Ok(out)
    }

    /// The same law by Bayes from the one-sided transitions.
    pub fn bicond_bayes(&self, s: f64, t: f64, u: f64, i: usize, k: usize) -> Result<Vec<f64>> {
        let (pst, ptu, psu) = (
            self.transition_jk(s, t)?,
            self.transition_jk(t, u)?,
            self.transition_jk(s, u)?,
        );
        let den = psu[k][i];
        if den == 0.0 {
            return Err(Error::UnsupportedPoint(self.y(i, u)));
        }
        Ok((0..=self.n())
            .map(|j| ptu[j][i] * pst[k][j] / den)
            .collect())
    }

    /// `max_j |π_t(j) - Σ_k P_{s,t,k}(j) π_s(k)|`.
    pub fn ck_marginal_residual(&self, s: f64, t: f64) -> Result<f64> {
        let (ps, pt, tr) = (
            self.marginal_k(s)?,
            self.marginal_k(t)?,
            self.transition_jk(s, t)?,
        );
        Ok((0..=self.n())
            .map(|j| (pt[j] - (0..=self.n()).map(|k| tr[k][j] * ps[k]).sum::<f64>()).abs())
            .fold(0.0, f64::max))
    }

    /// `max_{k,i} |P_{s,u,k}(i) - Σ_j P_{t,u,j}(i) P_{s,t,k}(j)|`.
    pub fn ck_transition_residual(&self, s: f64, t: f64, u: f64) -> Result<f64> {
        let (pst, ptu, psu) = (
            self.transition_jk(s, t)?,
            self.transition_jk(t, u)?,
            self.transition_jk(s, u)?,
        );
        let n = self.n();
        let mut worst = 0.0f64;
        for k in 0..=n {
            for i in 0..=n {
                let rhs: f64 = (0..=n).map(|j| ptu[j][i] * pst[k][j]).sum();
                worst = worst.max((psu[k][i] - rhs).abs());
            }
        }
        Ok(worst)
    }

    /// Curve indices along `grid`.
    pub fn sample_indices<R: Rng + ?Sized>(&self, grid: &[f64], rng: &mut R) -> Result<Vec<usize>> {
        if grid.is_empty() {
            return Err(Error::Domain("empty time grid".into()));
        }
        let mut out = Vec::with_capacity(grid.len());
        let mut k = pick(&self.marginal_k(grid[0])?, rng.random());
        out.push(k);
        for w in grid.windows(2) {
            k = pick(&self.transition_jk(w[0], w[1])?[k], rng.random());
            out.push(k);
        }
        Ok(out)
    }

    /// Index paths `0..n`, one rng stream each; the kernels are tabulated once.
    pub fn sample_index_paths(
        &self,
        grid: &[f64],
        n: usize,
        seed: u64,
        exec: Exec,
    ) -> Result<Vec<Vec<usize>>> {
        if grid.is_empty() {
            return Err(Error::Domain("empty time grid".into()));
        }
        let first = self.marginal_k(grid[0])?;
        let steps: Vec<Vec<Vec<f64>>> = grid
            .windows(2)
            .map(|w| self.transition_jk(w[0], w[1]))
            .collect::<Result<_>>()?;
        Ok(map_range(n, exec, |id| {
            let mut rng = path_rng(seed, id as u64);
            let mut k = pick(&first, rng.random());
            let mut v = Vec::with_capacity(grid.len());
            v.push(k);
            for st in &steps {
                k = pick(&st[k], rng.random());
                v.push(k);
            }
            v
        }))
    }

    pub fn trajectory(&self, grid: &[f64], idx: &[usize], seed: u64, path_id: u64) -> Trajectory {
        Trajectory {
            times: grid.to_vec(),
            values: grid.iter().zip(idx).map(|(&t, &k)| self.y(k, t)).collect(),
            seed,
            path_id,
        }
    }
}

/// Inverse CDF of a probability vector.
fn pick(p: &[f64], u: f64) -> usize {
    let total: f64 = p.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in p.iter().enumerate() {
        if w > 0.0 {
            last = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last
}

/// `|p_{j,N}(a, b, mc) - Σ_k p_{j,k}(a, b, q^k m² a) p_{k,N}(ma, mb, c)|`.
pub fn discrete_ck_residual(
    j: usize,
    n: usize,
    a: f64,
    b: f64,
    c: f64,
    m: f64,
    q: QBase,
) -> Result<f64> {
    let qv = q.get();
    let lhs = discrete_pmf_unchecked(j, n, a, b, m * c, q)?;
    let mut rhs = 0.0;
    for k in j..=n {
        rhs += discrete_pmf_unchecked(j, k, a, b, qv.powi(k as i32) * m * m * a, q)?
            * discrete_pmf_unchecked(k, n, m * a, m * b, c, q)?;
    }
    Ok((lhs - rhs).abs())
}
