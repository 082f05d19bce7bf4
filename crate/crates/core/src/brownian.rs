//! Seeded Brownian increments on a dyadic fine grid.
//!
//! Path `j` is drawn from its own ChaCha8 stream (key = base seed, stream id =
//! `j`), so it depends on nothing but `(seed, j)`. Uniforms on the open unit
//! interval are mapped to Gaussians through the inverse normal CDF, one
//! uniform per draw.
//!
//! Every fine increment is rounded to an integer multiple of a power of two
//! `q` chosen so that partial sums of a path stay exactly representable.
//! Coarsening therefore sums exactly, and every coarsening route (direct,
//! nested, or via `B(T)`) agrees bit for bit. The rounding is below
//! `1e-12 · √dt_fine`.

use std::io::{Read, Write};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::erf::erfc_inv;

use crate::error::{Result, SdeError};

/// Largest table (in values) that [`BrownianTable::generate`] materializes;
/// bigger tables regenerate paths on demand.
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianTable {
    base_seed: u64,
    n_paths: usize,
    n_fine: usize,
    dt_fine: f64,
    quantum: f64,
    data: Option<Vec<f64>>,
}

/// Standard normal quantile.
#[inline]
pub fn normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

#[inline]
fn open_uniform(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn quantum_for(horizon: f64) -> f64 {
    // exact while |B(t)| < 2^53 q, i.e. far beyond 64 standard deviations
    let e = (64.0 * horizon.sqrt()).log2().ceil() as i32 - 53;
    2f64.powi(e)
}

impl BrownianTable {
    /// Table over `[0, horizon]` with fine step `2^{-m_fine}`.
    pub fn generate(base_seed: u64, n_paths: usize, horizon: f64, m_fine: u32) -> Result<Self> {
        Self::generate_with_budget(base_seed, n_paths, horizon, m_fine, DEFAULT_MEMORY_BUDGET)
    }

    pub fn generate_with_budget(
        base_seed: u64,
        n_paths: usize,
        horizon: f64,
        m_fine: u32,
        budget: usize,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SdeError::invalid("T", format!("horizon must be finite and > 0, got {horizon}")));
        }
        if m_fine > 40 {
            return Err(SdeError::invalid("m_fine", format!("fine level {m_fine} too deep")));
        }
        let dt_fine = 2f64.powi(-(m_fine as i32));
        let steps = horizon / dt_fine;
        if steps.fract() != 0.0 {
            return Err(SdeError::invalid(
                "T",
                format!("horizon {horizon} is not a multiple of the fine step 2^-{m_fine}"),
            ));
        }
        let mut table = Self {
            base_seed,
            n_paths,
            n_fine: steps as usize,
            dt_fine,
            quantum: quantum_for(horizon),
            data: None,
        };
        if let Some(total) = n_paths.checked_mul(table.n_fine) {
            if total <= budget {
                let mut data = vec![0.0; total];
                for (j, chunk) in data.chunks_exact_mut(table.n_fine.max(1)).enumerate().take(n_paths) {
                    table.fill_path(j, chunk);
                }
                table.data = Some(data);
            }
        }
        Ok(table)
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn dt_fine(&self) -> f64 {
        self.dt_fine
    }

    pub fn horizon(&self) -> f64 {
        self.n_fine as f64 * self.dt_fine
    }

    pub fn is_materialized(&self) -> bool {
        self.data.is_some()
    }

    /// Write the increments of path `j` into `out` (length `n_fine`).
    pub fn fill_path(&self, j: usize, out: &mut [f64]) {
        assert_eq!(out.len(), self.n_fine, "output buffer must hold n_fine increments");
        if let Some(data) = &self.data {
            out.copy_from_slice(&data[j * self.n_fine..(j + 1) * self.n_fine]);
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(j as u64);
        let sd = self.dt_fine.sqrt();
        let q = self.quantum;
        for v in out.iter_mut() {
            let z = normal_quantile(open_uniform(rng.next_u64()));
            *v = (z * sd / q).round() * q;
        }
    }

    /// Increments of path `j`.
    pub fn path(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_fine];
        self.fill_path(j, &mut v);
        v
    }

    /// Binary dump: little-endian `seed: u64, n_paths: u64, n_fine: u64,
    /// dt_fine: f64`, then `n_paths · n_fine` increments as `f64`.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.base_seed.to_le_bytes())?;
        w.write_all(&(self.n_paths as u64).to_le_bytes())?;
        w.write_all(&(self.n_fine as u64).to_le_bytes())?;
        w.write_all(&self.dt_fine.to_le_bytes())?;
        let mut buf = vec![0.0; self.n_fine];
        for j in 0..self.n_paths {
            self.fill_path(j, &mut buf);
            for v in &buf {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Load a dump written by [`BrownianTable::write_to`]; the result is
    /// always materialized.
    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let base_seed = u64::from_le_bytes(next(&mut r)?);
        let n_paths = u64::from_le_bytes(next(&mut r)?) as usize;
        let n_fine = u64::from_le_bytes(next(&mut r)?) as usize;
        let dt_fine = f64::from_le_bytes(next(&mut r)?);
        if !(dt_fine > 0.0) {
            return Err(SdeError::invalid("dt_fine", format!("corrupt header: dt_fine = {dt_fine}")));
        }
        let total = n_paths
            .checked_mul(n_fine)
            .ok_or_else(|| SdeError::invalid("n_paths", "corrupt header: table size overflows"))?;
        let mut data = Vec::with_capacity(total);
        for _ in 0..total {
            data.push(f64::from_le_bytes(next(&mut r)?));
        }
        Ok(Self {
            base_seed,
            n_paths,
            n_fine,
            dt_fine,
            quantum: quantum_for(n_fine as f64 * dt_fine),
            data: Some(data),
        })
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sum consecutive blocks of `factor` increments.
pub fn coarsen(increments: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 || !increments.len().is_multiple_of(factor) {
        return Err(SdeError::NotDivisible {
            len: increments.len(),
            factor,
        });
    }
    Ok(increments.chunks_exact(factor).map(compensated_sum).collect())
}

/// Like [`coarsen`], writing into a reusable buffer.
pub fn coarsen_into(increments: &[f64], factor: usize, out: &mut Vec<f64>) -> Result<()> {
    if factor == 0 || !increments.len().is_multiple_of(factor) {
        return Err(SdeError::NotDivisible {
            len: increments.len(),
            factor,
        });
    }
    out.clear();
    out.extend(increments.chunks_exact(factor).map(compensated_sum));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_path() {
        let t = BrownianTable::generate(42, 4, 2.0, 6).unwrap();
        assert_eq!(t.n_fine(), 128);
        assert_eq!(t.horizon(), 2.0);
        let again = BrownianTable::generate(42, 4, 2.0, 6).unwrap();
        assert_eq!(t.path(3), again.path(3));
        assert_ne!(t.path(2), t.path(3));
        let other = BrownianTable::generate(43, 4, 2.0, 6).unwrap();
        assert_ne!(t.path(0), other.path(0));
    }

    #[test]
    fn path_does_not_depend_on_table_size_or_materialization() {
        let small = BrownianTable::generate(7, 3, 1.0, 5).unwrap();
        let big = BrownianTable::generate_with_budget(7, 1000, 1.0, 5, 0).unwrap();
        assert!(small.is_materialized());
        assert!(!big.is_materialized());
        for j in 0..3 {
            assert_eq!(small.path(j), big.path(j));
        }
    }

    #[test]
    fn rejects_bad_horizon() {
        assert!(BrownianTable::generate(1, 1, 0.0, 4).is_err());
        assert!(BrownianTable::generate(1, 1, 0.3, 4).is_err());
    }

    #[test]
    fn coarsen_examples() {
        let x = [0.5, -0.25, 1.0, 2.0];
        assert_eq!(coarsen(&x, 4).unwrap(), vec![3.25]);
        assert_eq!(coarsen(&x, 1).unwrap(), x.to_vec());
        assert_eq!(coarsen(&x, 2).unwrap(), vec![0.25, 3.0]);
        assert!(matches!(coarsen(&x, 3), Err(SdeError::NotDivisible { len: 4, factor: 3 })));
        assert!(coarsen(&x, 0).is_err());
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(&v), 2.0);
    }

    #[test]
    fn dump_round_trip() {
        let t = BrownianTable::generate_with_budget(9, 5, 1.0, 4, 0).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 5 * 16 * 8);
        assert_eq!(&buf[0..8], &9u64.to_le_bytes());
        let back = BrownianTable::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.n_paths(), 5);
        assert_eq!(back.dt_fine(), 1.0 / 16.0);
        for j in 0..5 {
            assert_eq!(back.path(j), t.path(j));
        }
        assert!(BrownianTable::read_from(&buf[..20]).is_err());
    }

    #[test]
    fn quantile_symmetry() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.1) + normal_quantile(0.9)).abs() < 1e-14);
    }
}
