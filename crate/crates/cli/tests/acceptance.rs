//! One line per acceptance criterion, at the stated tolerances. Runs without
//! the libtest harness so the lines are printed even when everything passes;
//! exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use aw_harness::harness::ProcessParams;
use aw_harness::par::Exec;
use aw_harness::simulate::mc_conditional;
use aw_harness::verify::{run_suite, Check, Suite, SuiteReport, VerifyConfig};

struct Line {
    id: usize,
    pass: bool,
    text: String,
}

fn get<'a>(r: &'a SuiteReport, name: &str) -> &'a Check {
    r.check(name)
        .unwrap_or_else(|| panic!("missing check {name}"))
}

fn describe(c: &Check) -> String {
    format!(
        "{} max {:.2e} <= {:.0e} over {} cases",
        c.name, c.max_residual, c.threshold, c.cases
    )
}

fn all_of(id: usize, what: &str, checks: &[&Check], extra: Option<(bool, String)>) -> Line {
    let mut pass = checks.iter().all(|c| c.passed);
    let mut parts: Vec<String> = checks.iter().map(|c| describe(c)).collect();
    if let Some((ok, s)) = extra {
        pass &= ok;
        parts.push(s);
    }
    Line {
        id,
        pass,
        text: format!("{what}: {}", parts.join("; ")),
    }
}

fn sample_csv(seed: u64, path: &std::path::Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_aw-harness"))
        .args([
            "sample",
            "--params",
            r#"{"A":0.4,"B":-0.3,"C":0.5,"D":0.2,"q":0.5}"#,
        ])
        .args([
            "--grid",
            "0.5,1,2",
            "--paths",
            "200",
            "--seed",
            &seed.to_string(),
        ])
        .arg("--out")
        .arg(path)
        .status()
        .expect("run aw-harness");
    assert!(status.success());
    std::fs::read(path).unwrap()
}

fn main() -> ExitCode {
    let cfg = VerifyConfig {
        seed: 20240601,
        ..Default::default()
    };
    let timed = |s: Suite| {
        let t0 = Instant::now();
        let r = run_suite(s, &cfg);
        (r, t0.elapsed().as_secs_f64())
    };
    let (qs, _) = timed(Suite::Qseries);
    let (ms, _) = timed(Suite::Measure);
    let (mk, _) = timed(Suite::Markov);
    let (mt, _) = timed(Suite::Martingale);
    let (ds, _) = timed(Suite::Discrete);
    let (br, _) = timed(Suite::Bridge);

    let mut lines = Vec::new();

    let c = get(&qs, "poch_shift_inversion");
    lines.push(all_of(
        1,
        "q-series shift/inversion",
        &[c],
        Some((c.seconds < 5.0, format!("{:.2} s < 5 s", c.seconds))),
    ));

    let c = get(&ms, "normalization");
    lines.push(all_of(
        2,
        "normalization",
        &[c],
        Some((c.seconds < 30.0, format!("{:.2} s < 30 s", c.seconds))),
    ));

    lines.push(all_of(
        3,
        "closed-form moments",
        &[
            get(&ms, "moments_vs_quadrature"),
            get(&ms, "zero_params_moments"),
        ],
        None,
    ));

    lines.push(all_of(
        4,
        "density projection identity (64-point grid)",
        &[get(&mk, "projection_density_identity")],
        None,
    ));

    lines.push(all_of(
        5,
        "Chapman-Kolmogorov",
        &[get(&mk, "chapman_kolmogorov"), get(&ds, "ck_exact")],
        None,
    ));

    let fin = get(&mt, "projection_finite_atoms");
    let atoms = aw_harness::simulate::discrete_process(aw_harness::verify::REFERENCE_FINITE)
        .unwrap()
        .n()
        + 1;
    lines.push(all_of(
        6,
        "martingale projection n <= 8",
        &[get(&mt, "projection_continuous"), fin],
        Some((
            atoms >= 3,
            format!("{atoms} atomic conditioning points in the reference finite process"),
        )),
    ));

    let (qc, mi) = (get(&mt, "q_commutation"), get(&mt, "matrix_identity"));
    let secs = qc.seconds + mi.seconds;
    lines.push(all_of(
        7,
        "q-commutation n <= 30",
        &[qc, mi],
        Some((secs < 10.0, format!("{secs:.2} s < 10 s"))),
    ));

    let ctors: Vec<&Check> = [
        "constructor_q_meixner",
        "constructor_bi_poisson",
        "constructor_free_harness",
        "constructor_purely_quadratic",
    ]
    .iter()
    .map(|n| get(&mk, n))
    .collect();
    lines.push(all_of(
        8,
        "constructor round-trips",
        &ctors,
        Some((
            true,
            "free-harness inputs drawn with στ < 0.99 (the greeks are ill-conditioned in A..D as στ → 1)".into(),
        )),
    ));

    {
        let p = ProcessParams::real(0.4, -0.3, 0.5, 0.2, 0.45).unwrap();
        let t0 = Instant::now();
        let r = mc_conditional(&p, 0.5, 1.0, 1.5, 100_000, 7, Exec::Parallel);
        let secs = t0.elapsed().as_secs_f64();
        let (pass, text) = match r {
            Ok(r) => {
                let picked = [
                    ("past", r.cond_mean_coeffs.past),
                    ("future", r.cond_mean_coeffs.future),
                    ("cov(s,t)", r.cov_st),
                    ("cov(t,u)", r.cov_tu),
                ];
                let ok = picked.iter().all(|(_, e)| e.within(3.0)) && secs < 120.0;
                let desc: Vec<String> = picked
                    .iter()
                    .map(|(n, e)| {
                        format!(
                            "{n} {:.4}±{:.4} vs {:.4} ({:.2}σ)",
                            e.value,
                            e.se,
                            e.target,
                            e.z()
                        )
                    })
                    .collect();
                (
                    ok,
                    format!(
                        "{} paths: {}; {secs:.1} s < 120 s",
                        r.paths,
                        desc.join(", ")
                    ),
                )
            }
            Err(e) => (false, format!("error: {e}")),
        };
        lines.push(Line {
            id: 9,
            pass,
            text: format!("Monte Carlo harness checks: {text}"),
        });
    }

    lines.push(all_of(
        10,
        "finite Chapman-Kolmogorov lemma",
        &[get(&ds, "ck_lemma")],
        None,
    ));

    lines.push(all_of(11, "bridge mass", &[get(&br, "bridge_mass")], None));

    {
        let dir = tempfile::tempdir().unwrap();
        let a = sample_csv(99, &dir.path().join("a.csv"));
        let b = sample_csv(99, &dir.path().join("b.csv"));
        let c = sample_csv(100, &dir.path().join("c.csv"));
        let rows = a.iter().filter(|&&x| x == b'\n').count();
        lines.push(Line {
            id: 12,
            pass: a == b && a != c && rows == 3 + 600,
            text: format!(
                "determinism: seed 99 twice {} ({} bytes), seed 100 {}",
                if a == b { "bit-identical" } else { "DIFFERENT" },
                a.len(),
                if a != c { "differs" } else { "IDENTICAL" }
            ),
        });
    }

    for l in &lines {
        println!(
            "criterion {:>2}: {} — {}",
            l.id,
            if l.pass { "PASS" } else { "FAIL" },
            l.text
        );
    }
    assert_eq!(lines.len(), 12);
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    if failed.is_empty() {
        println!("acceptance: all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
