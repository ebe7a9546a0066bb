use super::{AWParams, FavardCase};
use crate::error::{domain, Result};
use crate::qseries::{qbinomial, qpoch_finite_real, QBase};

/// The finite Askey–Wilson law on `N + 1` points: probability of
/// `x_k = (a q^k + 1/(a q^k))/2` for parameters `(a, b, c, 1/(a q^N))`.
///
/// Admissibility is checked through the Favard analysis of that quadruple
/// (finite case with `N + 1` atoms).
pub fn discrete_pmf(k: usize, n: usize, a: f64, b: f64, c: f64, q: QBase) -> Result<f64> {
    if k > n {
        return domain(format!("discrete pmf needs k <= N, got k = {k}, N = {n}"));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let qv = q.get();
    if !(qv > 0.0) || a == 0.0 || b == 0.0 || c == 0.0 {
        return domain("discrete pmf needs 0 < q < 1 and nonzero a, b, c");
    }
    let d = 1.0 / (a * qv.powi(n as i32));
    let ok = AWParams::real(a, b, c, d, qv)
        .map(|p| p.classify())
        .map(|r| r.case == FavardCase::III && r.n_atoms_cap == Some(n + 1))
        .unwrap_or(false);
    if !ok {
        return domain(format!(
            "(a, b, c) = ({a}, {b}, {c}) with N = {n}, q = {qv} is not a finite Askey-Wilson law"
        ));
    }
    discrete_pmf_unchecked(k, n, a, b, c, q)
}

/// The raw closed form, without the admissibility check.
pub fn discrete_pmf_unchecked(k: usize, n: usize, a: f64, b: f64, c: f64, q: QBase) -> Result<f64> {
    if k > n {
        return domain(format!("discrete pmf needs k <= N, got k = {k}, N = {n}"));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let qv = q.get();
    let qk = qv.powi(k as i32);
    let m = n - k;
    let num = qbinomial(n, k, q)?
        * qpoch_finite_real(qk * qv * a / b, q, m)
        * qpoch_finite_real(qk * qv * a / c, q, m)
        * qpoch_finite_real(a * b, q, k)
        * qpoch_finite_real(a * c, q, k)
        * (1.0 - qk * qk * a * a)
        * qv.powi((k * (k + 1) / 2) as i32);
    let den = qpoch_finite_real(qk * a * a, q, n + 1)
        * qpoch_finite_real(qv / (b * c), q, n)
        * (-b * c).powi(k as i32);
    if den == 0.0 {
        return Err(crate::error::Error::Singular(
            "discrete pmf denominator vanishes".into(),
        ));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::askey_wilson::measure;
    use crate::qseries::TruncationPolicy;

    fn admissible(q: f64, n: usize) -> (f64, f64, f64) {
        // ab < 1 < ad = q^{-N} < bd, all other products below one
        let a = 0.6;
        let b = 1.4;
        let qn = q.powi(n as i32);
        let c = 0.5 * (a * qn).min(qn / b);
        (a, b, c)
    }

    #[test]
    fn single_point() {
        assert_eq!(
            discrete_pmf(0, 0, 2.0, 3.0, 0.1, QBase::new(0.5).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn sums_to_one_and_nonnegative() {
        for &q in &[0.2, 0.5, 0.8] {
            let qb = QBase::new(q).unwrap();
            for n in 1..=12 {
                let (a, b, c) = admissible(q, n);
                let mut s = 0.0;
                for k in 0..=n {
                    let p = discrete_pmf(k, n, a, b, c, qb).unwrap();
                    assert!(p >= 0.0, "p_{k},{n} = {p}");
                    s += p;
                }
                assert!((s - 1.0).abs() < 1e-12, "q = {q}, N = {n}: {s}");
            }
        }
    }

    #[test]
    fn agrees_with_atom_masses() {
        let q = 0.6;
        let n = 4;
        let (a, b, c) = admissible(q, n);
        let d = 1.0 / (a * q.powi(n as i32));
        let m = measure(
            &AWParams::real(a, b, c, d, q).unwrap(),
            &TruncationPolicy::default(),
        )
        .unwrap();
        let qb = QBase::new(q).unwrap();
        for k in 0..=n {
            let x = 0.5 * (a * q.powi(k as i32) + 1.0 / (a * q.powi(k as i32)));
            let atom = m
                .atoms
                .iter()
                .find(|t| (t.location - x).abs() < 1e-9)
                .unwrap();
            let p = discrete_pmf(k, n, a, b, c, qb).unwrap();
            assert!(
                (atom.mass - p).abs() < 1e-12,
                "k = {k}: {} vs {p}",
                atom.mass
            );
        }
    }

    #[test]
    fn rejects_inadmissible() {
        let qb = QBase::new(0.5).unwrap();
        // ab, ad and bd all exceed one
        assert!(discrete_pmf(0, 2, 1.5, 3.0, 0.01, qb).is_err());
        assert!(discrete_pmf(3, 2, 8.0, 10.0, 0.01, qb).is_err());
    }
}
