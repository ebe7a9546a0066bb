//! Monte Carlo checks of the harness conditional moments on a three-point grid.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::paths::PathSampler;
use crate::error::{Error, Result};
use crate::harness::{harness_params, time_domains, HarnessParams, ProcessParams};
use crate::par::Exec;

pub const MIN_PATHS: usize = 10_000;
pub const VAR_BINS: usize = 10;
pub const MIN_CELL: usize = 50;

/// A point estimate with its standard error and the value it should match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub target: f64,
}

impl Estimate {
    /// Signed deviation in standard errors (0 when both the gap and `se` vanish).
    pub fn z(&self) -> f64 {
        let gap = self.value - self.target;
        if gap == 0.0 {
            0.0
        } else {
            gap / self.se
        }
    }

    pub fn within(&self, k: f64) -> bool {
        self.z().abs() <= k
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondMeanCoeffs {
    pub intercept: Estimate,
    /// Coefficient of `X_s`; target `(u - t)/(u - s)`.
    pub past: Estimate,
    /// Coefficient of `X_u`; target `(t - s)/(u - s)`.
    pub future: Estimate,
}

/// Mean squared residual in one `(X_s, X_u)` cell against the average of the
/// quadratic form over the same samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarCell {
    pub bin_s: usize,
    pub bin_u: usize,
    pub n: usize,
    pub estimate: Estimate,
}

/// Greeks read off a regression of squared residuals on the quadratic form's monomials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreekFit {
    pub eta: Estimate,
    pub theta: Estimate,
    pub sigma: Estimate,
    pub tau: Estimate,
    pub gamma: Estimate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConditionalReport {
    /// `X`-times.
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub paths: usize,
    pub seed: u64,
    pub cond_mean_coeffs: CondMeanCoeffs,
    pub cov_st: Estimate,
    pub cov_tu: Estimate,
    pub cond_var_curve: Vec<VarCell>,
    pub fitted: Option<GreekFit>,
}

impl McConditionalReport {
    /// Every scalar estimate, with a label.
    pub fn estimates(&self) -> Vec<(String, Estimate)> {
        let mut v = vec![
            (
                "cond_mean.intercept".to_string(),
                self.cond_mean_coeffs.intercept,
            ),
            ("cond_mean.past".to_string(), self.cond_mean_coeffs.past),
            ("cond_mean.future".to_string(), self.cond_mean_coeffs.future),
            ("cov(s,t)".to_string(), self.cov_st),
            ("cov(t,u)".to_string(), self.cov_tu),
        ];
        if let Some(f) = &self.fitted {
            for (n, e) in [
                ("eta", f.eta),
                ("theta", f.theta),
                ("sigma", f.sigma),
                ("tau", f.tau),
                ("gamma", f.gamma),
            ] {
                v.push((format!("fit.{n}"), e));
            }
        }
        v
    }

    /// Fraction of variance cells within `k` standard errors.
    pub fn var_cells_within(&self, k: f64) -> f64 {
        if self.cond_var_curve.is_empty() {
            return 1.0;
        }
        let ok = self
            .cond_var_curve
            .iter()
            .filter(|c| c.estimate.within(k))
            .count();
        ok as f64 / self.cond_var_curve.len() as f64
    }
}

/// OLS coefficients and their heteroskedasticity-robust (HC0) covariance.
fn ols(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (n, k) = (rows.len(), rows[0].len());
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let xtx_inv = (x.transpose() * &x)
        .try_inverse()
        .ok_or_else(|| Error::Singular("regression design is rank deficient".into()))?;
    let beta = &xtx_inv * x.transpose() * yv;
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let r = y[i] - (0..k).map(|j| rows[i][j] * beta[j]).sum::<f64>();
        for a in 0..k {
            for b in 0..k {
                meat[(a, b)] += rows[i][a] * rows[i][b] * r * r;
            }
        }
    }
    Ok((beta.iter().copied().collect(), &xtx_inv * meat * &xtx_inv))
}

fn std_errors(cov: &DMatrix<f64>) -> Vec<f64> {
    (0..cov.nrows())
        .map(|j| cov[(j, j)].max(0.0).sqrt())
        .collect()
}

/// Sample covariance with the standard error of the mean of centred products.
fn covariance(a: &[f64], b: &[f64], target: f64) -> Estimate {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let c = prods.iter().sum::<f64>() / (n - 1.0);
    let v = prods.iter().map(|p| (p - c).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: c,
        se: (v / n).sqrt(),
        target,
    }
}

/// Bin index of each sample by rank, `bins` equal-count classes.
fn rank_bins(v: &[f64], bins: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0; v.len()];
    for (r, &i) in idx.iter().enumerate() {
        out[i] = r * bins / v.len();
    }
    out
}

fn greek_fit(
    g: &HarnessParams,
    s: f64,
    u: f64,
    xs: &[f64],
    xu: &[f64],
    r2: &[f64],
) -> Result<GreekFit> {
    let w = u - s;
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .zip(xu)
        .map(|(&x, &z)| {
            let pp = (u * x - s * z) / w;
            let dq = (z - x) / w;
            vec![1.0, pp, pp * pp, dq, dq * dq, dq * pp]
        })
        .collect();
    let (c, cov) = ols(&rows, r2)?;
    let ratio = |j: usize, sign: f64, shift: f64, target: f64| {
        let v = c[j] / c[0];
        // gradient of c_j/c_0 in (c_0, c_j)
        let (g0, gj) = (-c[j] / (c[0] * c[0]), 1.0 / c[0]);
        let var = g0 * g0 * cov[(0, 0)] + 2.0 * g0 * gj * cov[(0, j)] + gj * gj * cov[(j, j)];
        Estimate {
            value: shift + sign * v,
            se: var.max(0.0).sqrt(),
            target,
        }
    };
    Ok(GreekFit {
        eta: ratio(1, 1.0, 0.0, g.eta),
        sigma: ratio(2, 1.0, 0.0, g.sigma),
        theta: ratio(3, 1.0, 0.0, g.theta),
        tau: ratio(4, 1.0, 0.0, g.tau),
        // coefficient of dq·pp is -(1 - γ)
        gamma: ratio(5, 1.0, 1.0, g.gamma),
    })
}

/// Regression of `X_t` on `(1, X_s, X_u)`, `Cov(X_s, X_t)`, `Cov(X_t, X_u)`,
/// and the binned conditional variance, from `paths` simulated paths.
/// `s <= t < u` are `X`-times in `J`; `s = t` is the degenerate check.
pub fn mc_conditional(
    p: &ProcessParams,
    s: f64,
    t: f64,
    u: f64,
    paths: usize,
    seed: u64,
    exec: Exec,
) -> Result<McConditionalReport> {
    if paths < MIN_PATHS {
        return Err(Error::InsufficientPaths {
            needed: MIN_PATHS,
            got: paths,
        });
    }
    if !(s <= t && t < u) {
        return Err(Error::Domain(format!("need s <= t < u, got {s}, {t}, {u}")));
    }
    let td = time_domains(p)?;
    for x in [s, t, u] {
        if !td.contains_j(x) {
            return Err(Error::Domain(format!(
                "{x} outside J = ({}, {})",
                td.j.0, td.j.1
            )));
        }
    }
    let g = harness_params(p)?;
    let degenerate = s == t;
    let ytimes: Vec<f64> = if degenerate {
        vec![s, u]
    } else {
        vec![s, t, u]
    }
    .into_iter()
    .map(|x| p.mobius_t(x))
    .collect::<Result<_>>()?;
    let sampler = PathSampler::new(p, &ytimes)?;
    let trajs = sampler.paths(paths, seed, exec)?;
    let (mut xs, mut xt, mut xu) = (
        Vec::with_capacity(paths),
        Vec::with_capacity(paths),
        Vec::with_capacity(paths),
    );
    for tr in &trajs {
        let v = tr.x_values(p)?;
        xs.push(v[0]);
        xt.push(if degenerate { v[0] } else { v[1] });
        xu.push(*v.last().unwrap());
    }

    let w = u - s;
    let (cp, cf) = ((u - t) / w, (t - s) / w);
    let rows: Vec<Vec<f64>> = xs.iter().zip(&xu).map(|(&a, &b)| vec![1.0, a, b]).collect();
    let (beta, cov) = ols(&rows, &xt)?;
    let se = std_errors(&cov);
    let est = |j: usize, target: f64| Estimate {
        value: beta[j],
        se: se[j],
        target,
    };
    let cond_mean_coeffs = CondMeanCoeffs {
        intercept: est(0, 0.0),
        past: est(1, cp),
        future: est(2, cf),
    };

    // squared residuals against the exact linear predictor
    let r2: Vec<f64> = (0..paths)
        .map(|i| (xt[i] - cp * xs[i] - cf * xu[i]).powi(2))
        .collect();
    let bs = rank_bins(&xs, VAR_BINS);
    let bu = rank_bins(&xu, VAR_BINS);
    let mut cells = Vec::new();
    for i in 0..VAR_BINS {
        for j in 0..VAR_BINS {
            let members: Vec<usize> = (0..paths).filter(|&k| bs[k] == i && bu[k] == j).collect();
            if members.len() < MIN_CELL {
                continue;
            }
            let n = members.len() as f64;
            let m = members.iter().map(|&k| r2[k]).sum::<f64>() / n;
            let v = members.iter().map(|&k| (r2[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
            let target = if degenerate {
                0.0
            } else {
                members
                    .iter()
                    .map(|&k| g.conditional_variance(s, t, u, xs[k], xu[k]))
                    .sum::<f64>()
                    / n
            };
            cells.push(VarCell {
                bin_s: i,
                bin_u: j,
                n: members.len(),
                estimate: Estimate {
                    value: m,
                    se: (v / n).sqrt(),
                    target,
                },
            });
        }
    }
    let fitted = if degenerate {
        None
    } else {
        Some(greek_fit(&g, s, u, &xs, &xu, &r2)?)
    };

    Ok(McConditionalReport {
        s,
        t,
        u,
        paths,
        seed,
        cond_mean_coeffs,
        cov_st: covariance(&xs, &xt, s.min(t)),
        cov_tu: covariance(&xt, &xu, t.min(u)),
        cond_var_curve: cells,
        fitted,
    })
}
