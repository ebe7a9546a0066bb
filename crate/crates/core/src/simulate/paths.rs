//! Sequential path simulation: `π_{t_1}` then `P_{t_i, t_{i+1}}`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::StepKernel;
use super::table::{Draw, MeasureSampler};
use crate::askey_wilson::measure;
use crate::error::{Error, Result};
use crate::harness::{kernel_params, marginal, time_domains, KernelStart, ProcessParams};
use crate::par::{map_range, Exec};
use crate::qseries::TruncationPolicy;

/// A sampled `Y` path on a grid of `Y`-times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    /// Stream of the master seed that produced this path.
    pub path_id: u64,
}

/// One exported row: `Y`-time, and `Y`, `Z`, `X` at the matching times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub path_id: u64,
    pub t: f64,
    pub y: f64,
    pub z: f64,
    pub x: f64,
}

impl Trajectory {
    /// `z = Z_t`, `x = X_{h(t)}`.
    pub fn rows(&self, p: &ProcessParams) -> Result<Vec<PathRow>> {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, &y)| {
                let z = p.z_from_y(t, y);
                let x = p.x_from_z(p.mobius_h(t)?, z)?;
                Ok(PathRow {
                    path_id: self.path_id,
                    t,
                    y,
                    z,
                    x,
                })
            })
            .collect()
    }

    /// `X` values at `X`-times `h(t_i)`.
    pub fn x_values(&self, p: &ProcessParams) -> Result<Vec<f64>> {
        Ok(self.rows(p)?.into_iter().map(|r| r.x).collect())
    }
}

/// The rng of path `path_id`: ChaCha8 keyed by the master seed, one stream per path.
pub fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}

type AtomKey = (usize, u64);

/// Precomputed marginal sampler and step kernels for a fixed grid.
#[derive(Debug)]
pub struct PathSampler {
    p: ProcessParams,
    grid: Vec<f64>,
    first: MeasureSampler,
    steps: Vec<StepKernel>,
    /// Kernels from atoms, built once per (step, root).
    atom_cache: RwLock<HashMap<AtomKey, Arc<MeasureSampler>>>,
}

impl PathSampler {
    pub fn new(p: &ProcessParams, grid: &[f64]) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Domain("empty time grid".into()));
        }
        let td = time_domains(p)?;
        for w in grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Domain(format!(
                    "grid must increase strictly: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &t in grid {
            if !td.contains_i(t) {
                return Err(Error::Domain(format!(
                    "t = {t} outside I = ({}, {})",
                    td.i.0, td.i.1
                )));
            }
        }
        let first = MeasureSampler::new(&marginal(p, grid[0])?)?;
        let steps = grid
            .windows(2)
            .map(|w| StepKernel::new(p, w[0], w[1]))
            .collect::<Result<_>>()?;
        Ok(PathSampler {
            p: *p,
            grid: grid.to_vec(),
            first,
            steps,
            atom_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn params(&self) -> &ProcessParams {
        &self.p
    }

    fn atom_kernel(&self, step: usize, root: f64) -> Result<Arc<MeasureSampler>> {
        let key = (step, root.to_bits());
        if let Some(k) = self.atom_cache.read().unwrap().get(&key) {
            return Ok(k.clone());
        }
        let mut cache = self.atom_cache.write().unwrap();
        if let Some(k) = cache.get(&key) {
            return Ok(k.clone());
        }
        let (s, t) = (self.grid[step], self.grid[step + 1]);
        let kp = kernel_params(&self.p, s, t, KernelStart::Atom(root));
        let k = Arc::new(MeasureSampler::new(&measure(
            &kp,
            &TruncationPolicy::default(),
        )?)?);
        cache.insert(key, k.clone());
        Ok(k)
    }

    /// `Y` values along the grid.
    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut cur: Draw = self.first.draw(rng);
        out.push(cur.value);
        for (i, k) in self.steps.iter().enumerate() {
            cur = match cur.root {
                Some(root) => self.atom_kernel(i, root)?.draw(rng),
                None => k.draw(cur.value, rng)?,
            };
            out.push(cur.value);
        }
        Ok(out)
    }

    pub fn path(&self, seed: u64, path_id: u64) -> Result<Trajectory> {
        let values = self.sample_values(&mut path_rng(seed, path_id))?;
        Ok(Trajectory {
            times: self.grid.clone(),
            values,
            seed,
            path_id,
        })
    }

    /// Paths `0..n`; identical output under either execution mode.
    pub fn paths(&self, n: usize, seed: u64, exec: Exec) -> Result<Vec<Trajectory>> {
        map_range(n, exec, |i| self.path(seed, i as u64))
            .into_iter()
            .collect()
    }
}

/// A single path (stream 0 of `seed`).
pub fn sample_path(p: &ProcessParams, grid: &[f64], seed: u64) -> Result<Trajectory> {
    PathSampler::new(p, grid)?.path(seed, 0)
}

pub fn sample_paths(
    p: &ProcessParams,
    grid: &[f64],
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<Trajectory>> {
    PathSampler::new(p, grid)?.paths(n, seed, exec)
}
