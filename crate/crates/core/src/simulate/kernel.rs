//! Transition sampling from a point of the continuous part.
//!
//! For a step `s → t` the kernel from `x = cos θ_x` has parameters
//! `(A√t, B√t, m e^{iθ_x}, m e^{-iθ_x})`, `m = √(s/t)`, and θ-weight
//! `base(θ) · g(θ + θ_x) · g(θ - θ_x)` with
//! `base = |(e^{2iθ})_∞|² / |(A√t e^{iθ}, B√t e^{iθ})_∞|²` and
//! `g(φ) = 1/|(m e^{iφ})_∞|²`. Both are tabulated once per step; `θ ± θ_x`
//! share one fractional offset on the grid, so each node costs two 4-point
//! interpolations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::table::{draw_mixed, Draw, InverseCdfTable, GRID_CELLS};
use crate::askey_wilson::{atoms, AWParams, Atom, ThetaWeight};
use crate::error::Result;
use crate::harness::{kernel_params, KernelStart, ProcessParams};
use crate::qseries::TruncationPolicy;

const PAD: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct StepKernel {
    p: ProcessParams,
    s: f64,
    t: f64,
    h: f64,
    base: Vec<f64>,
    /// `g` at `φ = (i - N - PAD) h`.
    g: Vec<f64>,
    may_have_atoms: bool,
}

impl StepKernel {
    pub(crate) fn new(p: &ProcessParams, s: f64, t: f64) -> Result<Self> {
        let policy = TruncationPolicy::default();
        let n = GRID_CELLS;
        let h = PI / n as f64;
        let r = t.sqrt();
        let zero = Complex64::new(0.0, 0.0);
        let ab = AWParams::new_unchecked(p.a * r, p.b * r, zero, zero, p.q);
        let w = ThetaWeight::new(&ab, 1.0, &policy)?;
        let base = (0..=n).map(|k| w.shape(k as f64 * h)).collect();

        let m = (s / t).sqrt();
        let q = p.qv();
        let mut terms = Vec::new();
        let mut mq = m;
        while mq.abs() >= policy.tol * (1.0 - q.abs()) && terms.len() < policy.max_terms {
            terms.push((2.0 * mq, mq * mq));
            mq *= q;
            if q == 0.0 {
                break;
            }
        }
        let g = (0..3 * n + 2 * PAD + 1)
            .map(|i| {
                let c = ((i as f64 - (n + PAD) as f64) * h).cos();
                1.0 / terms
                    .iter()
                    .fold(1.0, |acc, &(l, sq)| acc * (1.0 - l * c + sq))
            })
            .collect();
        let real_big = |z: Complex64| z.im == 0.0 && (z.re * r).abs() > 1.0;
        Ok(StepKernel {
            p: *p,
            s,
            t,
            h,
            base,
            g,
            may_have_atoms: real_big(p.a) || real_big(p.b),
        })
    }

    /// Unnormalized θ-weight of the kernel from `x ∈ [-1, 1]` at the grid nodes.
    pub(crate) fn weights(&self, x: f64) -> Vec<f64> {
        let n = GRID_CELLS;
        let r = x.clamp(-1.0, 1.0).acos() / self.h;
        let mut j = r.floor() as usize;
        if j >= n {
            j = n - 1;
        }
        let wp = lagrange4(r - j as f64);
        let wm = lagrange4(1.0 + j as f64 - r);
        let off = n + PAD;
        let g = &self.g;
        (0..=n)
            .map(|k| {
                // nodes k+j-1 ..= k+j+2 and k-j-2 ..= k-j+1, shifted by `off`
                let ip = off + k + j - 1;
                let im = off + k - j - 2;
                let gp = wp[0] * g[ip] + wp[1] * g[ip + 1] + wp[2] * g[ip + 2] + wp[3] * g[ip + 3];
                let gm = wm[0] * g[im] + wm[1] * g[im + 1] + wm[2] * g[im + 2] + wm[3] * g[im + 3];
                self.base[k] * gp * gm
            })
            .collect()
    }

    /// Atoms of the kernel (from the `A√t`, `B√t` families only).
    pub(crate) fn atoms(&self, x: f64) -> Result<Vec<Atom>> {
        if !self.may_have_atoms {
            return Ok(Vec::new());
        }
        let kp = kernel_params(&self.p, self.s, self.t, KernelStart::Continuous(x));
        atoms(&kp, &TruncationPolicy::default())
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<Draw> {
        let table = InverseCdfTable::from_density(self.weights(x))?;
        let at = self.atoms(x)?;
        let at: Vec<Atom> = at.into_iter().filter(|a| a.mass > 0.0).collect();
        let mut cum = Vec::with_capacity(at.len());
        let mut acc = 0.0;
        for a in &at {
            acc += a.mass;
            cum.push(acc);
        }
        Ok(draw_mixed(&at, &cum, Some(&table), rng))
    }
}

/// Cubic Lagrange weights on nodes `-1, 0, 1, 2` at `f ∈ [0, 1]`.
#[inline]
fn lagrange4(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}
