//! Randomised identity suites. Each check draws its cases from a documented
//! admissible box, evaluates a residual per case and compares the worst one
//! with a threshold. Errors count as failed cases with an infinite residual.
//!
//! Parameter boxes:
//! - AW laws (`measure`): each of `(a, b)`, `(c, d)` is a conjugate pair of
//!   modulus `< 0.95` with probability 1/3, otherwise two reals in
//!   `(-1.3, 1.3)`; `q ∈ (-0.9, 0.9)`; draws without a continuous part or
//!   failing the Favard analysis are rejected.
//! - Processes: the same shape with reals in `(-0.8, 0.8)`, pairs of modulus
//!   `< 0.8`, and with probability 0.15 one real replaced by `±(1.05, 2)`;
//!   `q ∈ (-0.9, 0.9)`; rejected unless `validate` accepts.
//! - Finite processes: `q ∈ [0.5, 0.95]`, `1 ≤ N ≤ 12`, `A = q^{-N}(1 + U)`,
//!   `B = A(1 + U)`, `C = 0.9 U q^N / B` with `U ~ (0.05, 1)`. Projections
//!   conditioned on atoms additionally require `q^{-N} <= 32`.
//! - Times are drawn in the middle 60% of `I` (of `(lo, lo + 2)` when `I` is
//!   unbounded above).

mod checks;

pub use checks::*;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::askey_wilson::{measure, AWMeasure, AWParams};
use crate::error::{Error, Result};
use crate::harness::{
    bi_poisson, free_harness, harness_params, marginal, purely_quadratic, q_meixner, time_domains,
    ProcessParams,
};
use crate::martingale::{check_matrix_identity, check_projection, check_q_commutation};
use crate::par::{map_range, Exec};
use crate::qseries::{QBase, TruncationPolicy};
use crate::simulate::{
    discrete_ck_residual, discrete_process, path_rng, DiscreteProcess, DiscreteProcessSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Qseries,
    Measure,
    Markov,
    Martingale,
    Discrete,
    Bridge,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Qseries,
        Suite::Measure,
        Suite::Markov,
        Suite::Martingale,
        Suite::Discrete,
        Suite::Bridge,
    ];

    fn name(self) -> &'static str {
        match self {
            Suite::Qseries => "qseries",
            Suite::Measure => "measure",
            Suite::Markov => "markov",
            Suite::Martingale => "martingale",
            Suite::Discrete => "discrete",
            Suite::Bridge => "bridge",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Replaces every sweep size when set.
    pub sweep: Option<usize>,
    /// Replaces every threshold when set.
    pub tol: Option<f64>,
    #[serde(skip)]
    pub exec: Exec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub passed: bool,
    pub seconds: f64,
    /// First few failing cases.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.suites.iter().find_map(|s| s.check(name))
    }
}

pub fn run(suite: Suite, cfg: &VerifyConfig) -> VerifyReport {
    let suites: Vec<SuiteReport> = match suite {
        Suite::All => Suite::EACH.iter().map(|&s| run_suite(s, cfg)).collect(),
        s => vec![run_suite(s, cfg)],
    };
    VerifyReport {
        seed: cfg.seed,
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> SuiteReport {
    let checks = match suite {
        Suite::Qseries => qseries_suite(cfg),
        Suite::Measure => measure_suite(cfg),
        Suite::Markov => markov_suite(cfg),
        Suite::Martingale => martingale_suite(cfg),
        Suite::Discrete => discrete_suite(cfg),
        Suite::Bridge => bridge_suite(cfg),
        Suite::All => return run(Suite::All, cfg).suites.remove(0),
    };
    SuiteReport {
        suite,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

// ---- machinery ----

/// FNV-1a, so that every check has its own stream family.
fn tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn case_rng(cfg: &VerifyConfig, stream: &str, i: usize) -> ChaCha8Rng {
    path_rng(cfg.seed ^ tag(stream), i as u64)
}

/// Evaluate `f` on cases `0..n` (each with its own generator) and aggregate.
fn run_check<F>(
    cfg: &VerifyConfig,
    name: &str,
    stream: &str,
    n: usize,
    threshold: f64,
    f: F,
) -> Check
where
    F: Fn(&mut ChaCha8Rng, usize) -> Result<f64> + Sync,
{
    let n = cfg.sweep.unwrap_or(n).max(1);
    let threshold = cfg.tol.unwrap_or(threshold);
    let start = Instant::now();
    let results = map_range(n, cfg.exec, |i| f(&mut case_rng(cfg, stream, i), i));
    let mut max_residual = 0.0f64;
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let r = match r {
            Ok(r) if r.is_nan() => Err(Error::Singular("NaN residual".into())),
            r => r,
        };
        let (v, note) = match r {
            Ok(v) => (
                v,
                (v > threshold).then(|| format!("case {i}: residual {v:e}")),
            ),
            Err(e) => (f64::INFINITY, Some(format!("case {i}: {e}"))),
        };
        max_residual = max_residual.max(v);
        if let Some(s) = note {
            if failures.len() < 5 {
                failures.push(s);
            }
        }
    }
    Check {
        name: name.to_string(),
        cases: n,
        max_residual,
        threshold,
        passed: max_residual <= threshold,
        seconds: start.elapsed().as_secs_f64(),
        failures,
    }
}

fn uni(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn reject<T>(what: &str, mut draw: impl FnMut() -> Option<T>) -> Result<T> {
    for _ in 0..10_000 {
        if let Some(x) = draw() {
            return Ok(x);
        }
    }
    Err(Error::Domain(format!(
        "no admissible {what} in 10000 draws"
    )))
}

fn pair(rng: &mut ChaCha8Rng, real_box: f64, pair_mod: f64, large: bool) -> (Complex64, Complex64) {
    if rng.random::<f64>() < 1.0 / 3.0 {
        let z = Complex64::from_polar(uni(rng, 0.0, pair_mod), uni(rng, 0.0, std::f64::consts::PI));
        return (z, z.conj());
    }
    let mut x = uni(rng, -real_box, real_box);
    let y = uni(rng, -real_box, real_box);
    if large && rng.random::<f64>() < 0.15 {
        x = uni(rng, 1.05, 2.0).copysign(x);
    }
    (re(x), re(y))
}

fn aw_draw(rng: &mut ChaCha8Rng) -> Result<AWMeasure> {
    reject("AW law", || {
        let (a, b) = pair(rng, 1.3, 0.95, false);
        let (c, d) = pair(rng, 1.3, 0.95, false);
        let q = QBase::new(uni(rng, -0.9, 0.9)).ok()?;
        let p = AWParams::new(a, b, c, d, q).ok()?;
        measure(&p, &TruncationPolicy::default())
            .ok()
            .filter(|m| m.has_continuous)
    })
}

fn small_aw_draw(rng: &mut ChaCha8Rng) -> Result<AWParams> {
    reject("small AW law", || {
        let (a, b) = pair(rng, 0.8, 0.8, false);
        let (c, d) = pair(rng, 0.8, 0.8, false);
        AWParams::new(a, b, c, d, QBase::new(uni(rng, -0.9, 0.9)).ok()?).ok()
    })
}

fn process_draw(rng: &mut ChaCha8Rng) -> Result<ProcessParams> {
    reject("process", || {
        let (a, b) = pair(rng, 0.8, 0.8, true);
        let (c, d) = pair(rng, 0.8, 0.8, true);
        ProcessParams::new(a, b, c, d, uni(rng, -0.9, 0.9)).ok()
    })
}

/// `k` increasing times in the middle of `I`.
fn times(p: &ProcessParams, rng: &mut ChaCha8Rng, k: usize) -> Result<Vec<f64>> {
    let (lo, hi) = time_domains(p)?.i;
    let hi = if hi.is_finite() { hi } else { lo + 2.0 };
    let mut ts: Vec<f64> = (0..k)
        .map(|_| lo + (hi - lo) * uni(rng, 0.2, 0.8))
        .collect();
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("coincident times".into()));
    }
    Ok(ts)
}

fn discrete_spec_draw(rng: &mut ChaCha8Rng) -> Result<DiscreteProcess> {
    reject("finite process", || {
        let q = uni(rng, 0.5, 0.95);
        let n = rng.random_range(1..=12usize);
        let a = q.powi(-(n as i32)) * (1.0 + uni(rng, 0.05, 1.0));
        let b = a * (1.0 + uni(rng, 0.05, 1.0));
        let c = 0.9 * uni(rng, 0.05, 1.0) * q.powi(n as i32) / b;
        discrete_process(DiscreteProcessSpec { a, b, c, q, n }).ok()
    })
}

fn discrete_times(dp: &DiscreteProcess, rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let (lo, hi) = dp.time_domain();
    let mut ts: Vec<f64> = (0..k)
        .map(|_| lo + (hi - lo) * uni(rng, 0.05, 0.95))
        .collect();
    ts.sort_by(f64::total_cmp);
    ts
}

/// The finite process used for atom-conditioned projections.
pub const REFERENCE_FINITE: DiscreteProcessSpec = DiscreteProcessSpec {
    a: 20.0,
    b: 25.0,
    c: 0.001,
    q: 0.7,
    n: 8,
};

// ---- suites ----

fn qseries_suite(cfg: &VerifyConfig) -> Vec<Check> {
    let draw_q = |rng: &mut ChaCha8Rng| {
        let q = uni(rng, 0.05, 0.95);
        QBase::new(if rng.random::<bool>() { q } else { -q })
    };
    vec![
        run_check(
            cfg,
            "poch_shift_inversion",
            "poch",
            1000,
            1e-12,
            |rng, _| {
                let alpha = Complex64::from_polar(
                    uni(rng, 0.05, 3.0),
                    uni(rng, -std::f64::consts::PI, std::f64::consts::PI),
                );
                let q = draw_q(rng)?;
                let (m, l) = (rng.random_range(0..=15usize), rng.random_range(0..=15usize));
                Ok(poch_shift(alpha, q, m, l).max(poch_inversion(alpha, q, m)))
            },
        ),
        run_check(
            cfg,
            "poch_infinite_shift",
            "poch_inf",
            200,
            1e-11,
            |rng, _| {
                let a = Complex64::from_polar(
                    uni(rng, 0.0, 2.0),
                    uni(rng, -std::f64::consts::PI, std::f64::consts::PI),
                );
                poch_infinite_shift(a, draw_q(rng)?, &TruncationPolicy::default())
            },
        ),
        run_check(cfg, "qbinomial_symmetry", "qbin", 200, 1e-12, |rng, _| {
            let n = rng.random_range(0..=30usize);
            qbinomial_symmetry(n, rng.random_range(0..=n), draw_q(rng)?)
        }),
    ]
}

fn measure_suite(cfg: &VerifyConfig) -> Vec<Check> {
    vec![
        run_check(cfg, "normalization", "aw", 50, 1e-8, |rng, _| {
            Ok(normalization(&aw_draw(rng)?))
        }),
        run_check(cfg, "moments_vs_quadrature", "aw", 50, 1e-8, |rng, _| {
            moments(&aw_draw(rng)?)
        }),
        run_check(cfg, "zero_params_moments", "zero", 19, 1e-12, |_, i| {
            let q = -0.9 + 0.1 * i as f64;
            let p = AWParams::real(0.0, 0.0, 0.0, 0.0, q)?;
            let m = measure(&p, &TruncationPolicy::default())?;
            let want = (1.0 - q) / 4.0;
            let quad = m.moment(1).abs().max((m.moment(2) - want).abs());
            Ok(p.mean()?.abs().max((p.variance()? - want).abs()).max(quad))
        }),
        run_check(cfg, "orthogonality", "aw", 10, 1e-8, |rng, _| {
            orthogonality(&aw_draw(rng)?, 5)
        }),
        run_check(
            cfg,
            "finite_pmf_normalization",
            "fin",
            200,
            1e-12,
            |rng, _| {
                let dp = discrete_spec_draw(rng)?;
                let t = discrete_times(&dp, rng, 1)[0];
                Ok((dp.marginal_k(t)?.iter().sum::<f64>() - 1.0).abs())
            },
        ),
    ]
}

fn markov_suite(cfg: &VerifyConfig) -> Vec<Check> {
    let ys16: Vec<f64> = (0..16)
        .map(|k| ((k as f64 + 0.5) * std::f64::consts::PI / 16.0).cos())
        .collect();
    let ys64: Vec<f64> = (0..64)
        .map(|k| ((k as f64 + 0.5) * std::f64::consts::PI / 64.0).cos())
        .collect();
    let mut out = vec![
        run_check(
            cfg,
            "projection_density_identity",
            "proj",
            10,
            1e-7,
            |rng, _| {
                let p = small_aw_draw(rng)?;
                projection_identity(&p, uni(rng, 0.1, 0.9), &ys64)
            },
        ),
        run_check(cfg, "chapman_kolmogorov", "ck", 10, 1e-6, |rng, _| {
            let p = process_draw(rng)?;
            let ts = times(&p, rng, 2)?;
            chapman_kolmogorov(&p, ts[0], ts[1], &ys16)
        }),
        run_check(cfg, "two_sided_moments", "bicond", 10, 1e-7, |rng, _| {
            let p = process_draw(rng)?;
            let ts = times(&p, rng, 3)?;
            let ms = marginal(&p, ts[0])?;
            let x = match ms.atom_locations().as_slice() {
                [first, ..] if rng.random::<bool>() => *first,
                _ => uni(rng, -0.95, 0.95),
            };
            bicond_moments(&p, ts[0], ts[1], ts[2], x, uni(rng, -0.95, 0.95))
        }),
        run_check(cfg, "discriminant", "proc", 50, 1e-10, |rng, _| {
            discriminant_identity(&process_draw(rng)?)
        }),
        run_check(cfg, "time_domains", "proc", 50, 1e-10, |rng, _| {
            time_domain_agreement(&process_draw(rng)?)
        }),
    ];
    // constructors: inputs inside each stated hypothesis; a refusal there is a failure
    type Ctor = fn(&mut ChaCha8Rng) -> Option<Result<(ProcessParams, [f64; 5])>>;
    let families: [(&str, Ctor); 4] = [
        ("constructor_q_meixner", |rng| {
            let (th, ta, g) = (
                uni(rng, -2.0, 2.0),
                uni(rng, -1.0, 1.0),
                uni(rng, -0.95, 0.95),
            );
            Some(q_meixner(th, ta, g).map(|p| (p, [0.0, th, 0.0, ta, g])))
        }),
        ("constructor_bi_poisson", |rng| {
            let (e, th, g) = (
                uni(rng, -2.0, 2.0),
                uni(rng, -2.0, 2.0),
                uni(rng, -0.95, 0.95),
            );
            (1.0 + e * th > g.max(0.0))
                .then(|| bi_poisson(e, th, g).map(|p| (p, [e, th, 0.0, 0.0, g])))
        }),
        ("constructor_free_harness", |rng| {
            let (e, th, s, ta) = (
                uni(rng, -2.0, 2.0),
                uni(rng, -2.0, 2.0),
                uni(rng, -1.0, 2.0),
                uni(rng, -1.0, 2.0),
            );
            let st = s * ta;
            let (al, be) = ((e + th * s) / (1.0 - st), (e * ta + th) / (1.0 - st));
            // the greeks are ill-conditioned in (A, B, C, D) as στ → 1: the
            // η, θ numerators are O((1 - στ)²) differences of O(1) terms
            let ok =
                (0.0..0.99).contains(&st) && 2.0 + e * th + 2.0 * st >= 0.0 && 1.0 + al * be > 0.0;
            ok.then(|| free_harness(e, th, s, ta).map(|p| (p, [e, th, s, ta, -st])))
        }),
        ("constructor_purely_quadratic", |rng| {
            let (s, ta) = (uni(rng, 0.0, 2.0), uni(rng, 0.0, 2.0));
            let g = uni(rng, -1.0, 1.0 - 2.0 * (s * ta).sqrt());
            (s > 0.0 && ta > 0.0 && s * ta < 1.0 && g > -1.0)
                .then(|| purely_quadratic(s, ta, g).map(|p| (p, [0.0, 0.0, s, ta, g])))
        }),
    ];
    for (name, ctor) in families {
        out.push(run_check(cfg, name, name, 100, 1e-10, |rng, _| {
            let (p, want) = reject("constructor input", || ctor(rng))??;
            p.validated()?;
            Ok(greeks_distance(&harness_params(&p)?, want))
        }));
    }
    out
}

fn martingale_suite(cfg: &VerifyConfig) -> Vec<Check> {
    vec![
        run_check(cfg, "q_commutation", "qcomm", 20, 1e-11, |rng, _| {
            Ok(check_q_commutation(&process_draw(rng)?, 30)?.max_residual)
        }),
        run_check(cfg, "matrix_identity", "qcomm", 20, 1e-11, |rng, _| {
            let p = process_draw(rng)?;
            let ts = times(&p, rng, 3)?;
            Ok(check_matrix_identity(&p, ts[0], ts[1], ts[2], 30)?.max_residual)
        }),
        run_check(cfg, "projection_continuous", "mproj", 10, 1e-8, |rng, _| {
            let p = process_draw(rng)?;
            let ts = times(&p, rng, 2)?;
            let ms = marginal(&p, ts[0])?;
            let mut xs: Vec<f64> = (0..5).map(|_| uni(rng, -0.95, 0.95)).collect();
            xs.extend(ms.atom_locations());
            xs.iter()
                .map(|&x| Ok(check_projection(&p, ts[0], ts[1], x, 8)?.max_residual))
                .try_fold(0.0f64, |a, r: Result<f64>| Ok(a.max(r?)))
        }),
        run_check(cfg, "projection_finite_atoms", "mfin", 6, 1e-8, |rng, i| {
            // p_n is evaluated in double precision at atoms spread over a factor
            // q^{-N}; beyond q^{-N} ≈ 32 the values at the top atoms are far below
            // the rounding level of the recurrence, so the extra specs stay below it
            let dp = if i == 0 {
                discrete_process(REFERENCE_FINITE)?
            } else {
                reject("well-conditioned finite process", || {
                    discrete_spec_draw(rng)
                        .ok()
                        .filter(|d| d.spec().q.powi(-(d.n() as i32)) <= 32.0)
                })?
            };
            let p = dp.spec().params()?;
            let ts = discrete_times(&dp, rng, 2);
            let n_max = dp.n().min(8);
            dp.support(ts[0])
                .iter()
                .map(|&x| Ok(check_projection(&p, ts[0], ts[1], x, n_max)?.max_residual))
                .try_fold(0.0f64, |a, r: Result<f64>| Ok(a.max(r?)))
        }),
    ]
}

fn discrete_suite(cfg: &VerifyConfig) -> Vec<Check> {
    vec![
        run_check(cfg, "ck_lemma", "cklemma", 1000, 1e-12, |rng, _| {
            let dp = discrete_spec_draw(rng)?;
            let ts = discrete_times(&dp, rng, 2);
            let (s, t) = (ts[0], ts[1]);
            let sp = dp.spec();
            let (a, b, c, m) = (
                sp.a * t.sqrt(),
                sp.b * t.sqrt(),
                sp.c / s.sqrt(),
                (s / t).sqrt(),
            );
            let q = QBase::new(sp.q)?;
            (0..=sp.n)
                .map(|j| discrete_ck_residual(j, sp.n, a, b, c, m, q))
                .try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
        }),
        run_check(cfg, "ck_exact", "ckexact", 10, 1e-12, |rng, _| {
            let dp = discrete_spec_draw(rng)?;
            let ts = discrete_times(&dp, rng, 3);
            Ok(dp
                .ck_marginal_residual(ts[0], ts[1])?
                .max(dp.ck_transition_residual(ts[0], ts[1], ts[2])?))
        }),
        run_check(
            cfg,
            "two_sided_closed_form",
            "bayes",
            10,
            1e-12,
            |rng, _| {
                let dp = discrete_spec_draw(rng)?;
                let ts = discrete_times(&dp, rng, 3);
                let mut worst = 0.0f64;
                for i in 0..=dp.n() {
                    for k in i..=dp.n() {
                        let x = dp.bicond(ts[0], ts[1], ts[2], i, k)?;
                        let y = dp.bicond_bayes(ts[0], ts[1], ts[2], i, k)?;
                        worst = x
                            .iter()
                            .zip(&y)
                            .map(|(u, v)| (u - v).abs())
                            .fold(worst, f64::max);
                    }
                }
                Ok(worst)
            },
        ),
    ]
}

fn bridge_suite(cfg: &VerifyConfig) -> Vec<Check> {
    vec![run_check(
        cfg,
        "bridge_mass",
        "bridge",
        20,
        1e-9,
        |rng, _| {
            let p = reject("bridge process", || {
                let (a, b) = pair(rng, 0.9, 0.9, false);
                let (c, d) = (uni(rng, 0.05, 0.9), -uni(rng, 0.05, 0.9));
                ProcessParams::new(a, b, re(c), re(d), uni(rng, 0.05, 0.95))
                    .ok()
                    .filter(|p| p.ab() != 0.0)
            })?;
            let (total, phi, neg) = bridge_mass(&p)?;
            Ok(total.max(phi).max(neg))
        },
    )]
}
