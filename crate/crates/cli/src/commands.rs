use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use aw_harness::askey_wilson::{AWParams, Atom, FavardReport};
use aw_harness::harness::{
    bi_poisson, free_harness, harness_params, marginal, purely_quadratic, q_meixner, time_domains,
    transition, validate as validate_params, HarnessParams, ProcessParams, TimeDomain,
};
use aw_harness::par::Exec;
use aw_harness::simulate::{Estimate, PathSampler};
use aw_harness::verify::{self, Suite, VerifyConfig};
use aw_harness::Error as CoreError;

use crate::output::{config_hash, csv_preamble, sink, write_json, Envelope};
use crate::{CliError, Family, Format, LawCmd, ParamsArg, ParamsCmd, SampleCmd, VerifyCmd};

type Res<T> = Result<T, CliError>;

/// Inline JSON when the argument looks like an object, otherwise a file path.
fn read_params(arg: &str) -> Res<ProcessParams> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::Input(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("params: {e}")))
}

fn load_params(arg: &str) -> Res<ProcessParams> {
    Ok(read_params(arg)?.validated()?)
}

/// Hash of the command's arguments with the params string replaced by the
/// parsed values, so that formatting of the input does not matter.
fn hash_of<A: Serialize>(command: &str, args: &A, p: Option<&ProcessParams>) -> String {
    let mut v = serde_json::to_value(args).expect("args serialize");
    if let (Some(p), Value::Object(m)) = (p, &mut v) {
        m.insert(
            "params".into(),
            serde_json::to_value(p).expect("params serialize"),
        );
    }
    config_hash(&json!({ "command": command, "args": v }))
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

#[derive(Serialize)]
struct Admissible {
    admissible: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    violations: Vec<String>,
    params: ProcessParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    greeks: Option<HarnessParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_domains: Option<TimeDomain>,
}

pub fn validate(a: &ParamsArg) -> Res<()> {
    let raw = read_params(&a.params)?;
    let hash = hash_of("validate", a, Some(&raw));
    let (report, rejected) = match validate_params(raw.a, raw.b, raw.c, raw.d, raw.q) {
        Ok(p) => (
            Admissible {
                admissible: true,
                violations: vec![],
                params: p,
                greeks: Some(harness_params(&p)?),
                time_domains: Some(time_domains(&p)?),
            },
            false,
        ),
        Err(CoreError::Inadmissible(v)) => (
            Admissible {
                admissible: false,
                violations: v,
                params: raw,
                greeks: None,
                time_domains: None,
            },
            true,
        ),
        Err(e) => return Err(e.into()),
    };
    write_json(
        a.out.as_deref(),
        &Envelope::new("validate", hash, None, report),
    )?;
    if rejected {
        Err(CliError::Rejected)
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct Translation {
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<Family>,
    params: ProcessParams,
    greeks: HarnessParams,
    time_domains: TimeDomain,
}

pub fn params(a: &ParamsCmd) -> Res<()> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| CliError::Input(format!("--{name} is required for this family")))
    };
    let p = match (a.from_greek, &a.params) {
        (Some(f), _) => match f {
            Family::QMeixner => q_meixner(
                need(a.theta, "theta")?,
                need(a.tau, "tau")?,
                need(a.gamma, "gamma")?,
            )?,
            Family::BiPoisson => bi_poisson(
                need(a.eta, "eta")?,
                need(a.theta, "theta")?,
                need(a.gamma, "gamma")?,
            )?,
            Family::Free => free_harness(
                need(a.eta, "eta")?,
                need(a.theta, "theta")?,
                need(a.sigma, "sigma")?,
                need(a.tau, "tau")?,
            )?,
            Family::PurelyQuadratic => purely_quadratic(
                need(a.sigma, "sigma")?,
                need(a.tau, "tau")?,
                need(a.gamma, "gamma")?,
            )?,
        },
        (None, Some(s)) => load_params(s)?,
        (None, None) => return Err(CliError::Input("give --params or --from-greek".into())),
    };
    let hash = hash_of("params", a, a.params.as_ref().map(|_| &p));
    let t = Translation {
        family: a.from_greek,
        params: p,
        greeks: harness_params(&p)?,
        time_domains: time_domains(&p)?,
    };
    Ok(write_json(
        a.out.as_deref(),
        &Envelope::new("params", hash, None, t),
    )?)
}

#[derive(Serialize)]
struct LawReport {
    kind: &'static str,
    t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    aw_params: AWParams,
    favard: FavardReport,
    /// Normalising constant of the continuous part (0 when there is none).
    k: f64,
    atoms: Vec<Atom>,
    continuous_mass: f64,
    mean: f64,
    variance: f64,
    mean_closed_form: f64,
    variance_closed_form: f64,
    density: Vec<[f64; 2]>,
}

pub fn law(a: &LawCmd) -> Res<()> {
    let p = load_params(&a.params)?;
    let hash = hash_of("law", a, Some(&p));
    let (kind, m) = match (a.s, a.x) {
        (Some(s), Some(x)) => ("transition", transition(&p, s, a.t, x)?),
        _ => ("marginal", marginal(&p, a.t)?),
    };
    let mean = m.moment(1);
    let mut density = Vec::new();
    if m.has_continuous {
        for k in (0..a.points).rev() {
            let y = ((k as f64 + 0.5) * PI / a.points as f64).cos();
            density.push([y, m.density(y)?]);
        }
    }
    let atoms: Vec<Atom> = m.atoms.iter().copied().filter(|x| x.mass > 0.0).collect();
    let report = LawReport {
        kind,
        t: a.t,
        s: a.s,
        x: a.x,
        aw_params: m.params,
        favard: m.report,
        k: m.k,
        continuous_mass: m.continuous_mass(),
        variance: m.expect(|y| (y - mean) * (y - mean)),
        mean,
        mean_closed_form: m.params.mean()?,
        variance_closed_form: m.params.variance()?,
        atoms,
        density,
    };
    match a.format {
        Format::Json => Ok(write_json(
            a.out.as_deref(),
            &Envelope::new("law", hash, None, report),
        )?),
        Format::Csv => {
            let mut out = sink(a.out.as_deref())?;
            out.write_all(csv_preamble("law", &hash, None).as_bytes())?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["kind", "y", "value"])?;
            for [y, d] in &report.density {
                w.serialize(("density", y, d))?;
            }
            for at in &report.atoms {
                w.serialize(("atom", at.location, at.mass))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CovCell {
    /// X-times.
    s: f64,
    t: f64,
    estimate: Estimate,
    z: f64,
}

#[derive(Serialize)]
struct Summary {
    paths: usize,
    x_times: Vec<f64>,
    mean: Vec<Estimate>,
    cov: Vec<CovCell>,
}

/// Sample moments of `X` against `E X_t = 0`, `E X_s X_t = min(s, t)`.
fn summarize(xs: &[Vec<f64>], x_times: &[f64]) -> Summary {
    let n = xs.len() as f64;
    let col = |i: usize| xs.iter().map(move |r| r[i]);
    let mean_se = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (m, (var / n).sqrt())
    };
    let mut mean = Vec::new();
    let mut cov = Vec::new();
    for i in 0..x_times.len() {
        let (m, se) = mean_se(&col(i).collect::<Vec<_>>());
        mean.push(Estimate {
            value: m,
            se,
            target: 0.0,
        });
        for j in i..x_times.len() {
            let prods: Vec<f64> = col(i).zip(col(j)).map(|(a, b)| a * b).collect();
            let (m, se) = mean_se(&prods);
            let e = Estimate {
                value: m,
                se,
                target: x_times[i].min(x_times[j]),
            };
            cov.push(CovCell {
                s: x_times[i],
                t: x_times[j],
                z: e.z(),
                estimate: e,
            });
        }
    }
    Summary {
        paths: xs.len(),
        x_times: x_times.to_vec(),
        mean,
        cov,
    }
}

pub fn sample(a: &SampleCmd) -> Res<()> {
    let p = load_params(&a.params)?;
    let hash = hash_of("sample", a, Some(&p));
    let sampler = PathSampler::new(&p, &a.grid)?;
    let paths = sampler.paths(a.paths, a.seed, exec(a.sequential))?;
    if a.summary {
        let xs = paths
            .iter()
            .map(|t| t.x_values(&p))
            .collect::<Result<Vec<_>, _>>()?;
        let x_times = a
            .grid
            .iter()
            .map(|&t| p.mobius_h(t))
            .collect::<Result<Vec<_>, _>>()?;
        let s = summarize(&xs, &x_times);
        return Ok(write_json(
            a.out.as_deref(),
            &Envelope::new("sample", hash, Some(a.seed), s),
        )?);
    }
    match a.format {
        Format::Json => Ok(write_json(
            a.out.as_deref(),
            &Envelope::new("sample", hash, Some(a.seed), &paths),
        )?),
        Format::Csv => {
            let mut out = sink(a.out.as_deref())?;
            out.write_all(csv_preamble("sample", &hash, Some(a.seed)).as_bytes())?;
            let mut w = csv::Writer::from_writer(out);
            for t in &paths {
                for row in t.rows(&p)? {
                    w.serialize(row)?;
                }
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn verify(a: &VerifyCmd) -> Res<()> {
    let suite: Suite = a.suite.parse()?;
    let cfg = VerifyConfig {
        seed: a.seed,
        sweep: a.sweep,
        tol: a.tol,
        exec: exec(a.sequential),
    };
    let hash = hash_of("verify", a, None);
    let report = verify::run(suite, &cfg);
    for s in &report.suites {
        for c in &s.checks {
            eprintln!(
                "{:<11} {:<30} {:>6} cases  max {:<10.3e} <= {:<8.1e} {}",
                s.suite,
                c.name,
                c.cases,
                c.max_residual,
                c.threshold,
                if c.passed { "ok" } else { "FAIL" }
            );
        }
    }
    let passed = report.passed;
    write_json(
        a.out.as_deref(),
        &Envelope::new("verify", hash, Some(a.seed), report),
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}
