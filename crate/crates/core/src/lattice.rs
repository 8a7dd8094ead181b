//! Exact convolution powers of lattice-supported atomic measures.
//!
//! Every constructor in this laboratory produces atoms on a product lattice
//! `gx Z x gy Z` (the arithmetic-progression example is literally built on
//! one, and sums of lattice points stay on the lattice). Convolution powers
//! are then integer-indexed arrays, and the mollified L^2 norm
//! `||(sigma^n)_delta||_2^2 = sum_{p,q} m_p m_q delta^-2 Phi(|p-q|/delta)`
//! reduces to a short-range lattice correlation: only offsets within the
//! autocorrelation reach `2 rho delta` contribute. No spatial grid at the
//! mollification scale is ever built, which is what keeps the fine-delta
//! scaling runs inside memory.

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft::{fft2, next_fft_size};
use crate::mollifier::MollifierSpec;
use crate::parabola::AtomicMeasure;

/// Atoms with exact integer lattice coordinates.
#[derive(Debug, Clone)]
pub struct LatticeMeasure {
    pub gx: f64,
    pub gy: f64,
    pub atoms: Vec<(i64, i64, f64)>,
}

/// Budget for the dense convolution array (f64 cells).
const DENSE_CELL_BUDGET: usize = 1 << 24;

impl LatticeMeasure {
    /// Detect a common product lattice (within 1e-9 of the minimal gaps).
    pub fn from_atomic(m: &AtomicMeasure) -> Option<Self> {
        let gx = detect_base(m.atoms().iter().map(|&(p, _)| p[0]))?;
        let gy = detect_base(m.atoms().iter().map(|&(p, _)| p[1]))?;
        let mut atoms = Vec::with_capacity(m.len());
        for &(p, w) in m.atoms() {
            let jx = (p[0] / gx).round();
            let jy = (p[1] / gy).round();
            if (p[0] / gx - jx).abs() > 1e-7 || (p[1] / gy - jy).abs() > 1e-7 {
                return None;
            }
            atoms.push((jx as i64, jy as i64, w));
        }
        Some(LatticeMeasure { gx, gy, atoms })
    }

    fn x_range(&self) -> (i64, i64) {
        let min = self.atoms.iter().map(|a| a.0).min().unwrap();
        let max = self.atoms.iter().map(|a| a.0).max().unwrap();
        (min, max)
    }

    fn y_range(&self) -> (i64, i64) {
        let min = self.atoms.iter().map(|a| a.1).min().unwrap();
        let max = self.atoms.iter().map(|a| a.1).max().unwrap();
        (min, max)
    }

    /// `||(sigma^n)_delta||_2^2`, exact up to the tabulated autocorrelation.
    pub fn conv_power_mollified_l2_sq(&self, n: u32, delta: f64) -> Result<f64> {
        if n < 1 {
            return Err(Error::ParamOutOfRange("n must be >= 1".into()));
        }
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        let nf = n as i64;
        let nx = ((x1 - x0) * nf + 1) as usize;
        let ny = ((y1 - y0) * nf + 1) as usize;
        let cells = nx.saturating_mul(ny);
        if cells <= DENSE_CELL_BUDGET {
            let dense = self.dense_power(n, nx, ny)?;
            Ok(self.correlate_dense(&dense, nx, ny, delta))
        } else {
            self.streamed_l2(n, delta)
        }
    }

    /// Dense n-fold convolution as masses on the shifted lattice
    /// (index (i, j) = lattice point (n x0 + i, n y0 + j)).
    fn dense_power(&self, n: u32, nx: usize, ny: usize) -> Result<Vec<f64>> {
        let (x0, y0) = (self.x_range().0, self.y_range().0);
        let px = next_fft_size(nx);
        let py = next_fft_size(ny);
        if px.saturating_mul(py) > DENSE_CELL_BUDGET {
            return Err(Error::BudgetExceeded(format!("{} FFT cells", px * py)));
        }
        let mut buf = vec![Complex64::default(); px * py];
        for &(jx, jy, w) in &self.atoms {
            // place relative to (x0, y0); wrap is safe because the final
            // support fits the period
            let ix = (jx - x0).rem_euclid(px as i64) as usize;
            let iy = (jy - y0).rem_euclid(py as i64) as usize;
            buf[iy * px + ix] += Complex64::new(w, 0.0);
        }
        fft2(&mut buf, px, py, FftDirection::Forward);
        for v in buf.iter_mut() {
            *v = v.powi(n as i32);
        }
        fft2(&mut buf, px, py, FftDirection::Inverse);
        let scale = 1.0 / (px * py) as f64;
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                out[j * nx + i] = (buf[j * px + i].re * scale).max(0.0);
            }
        }
        Ok(out)
    }

    /// Short-range lattice correlation of a dense mass array against the
    /// mollifier autocorrelation kernel.
    fn correlate_dense(&self, dense: &[f64], nx: usize, ny: usize, delta: f64) -> f64 {
        let kernel = self.kernel(delta);
        let inv2 = 1.0 / (delta * delta);
        let mut acc = 0.0;
        for (w, row) in kernel.iter().enumerate() {
            let ry = (row.len() as i64 - 1) / 2;
            for (t, &phi) in row.iter().enumerate() {
                let dy = t as i64 - ry;
                if phi == 0.0 {
                    continue;
                }
                // ordered pairs: offset (w, dy) with w > 0 counted twice,
                // w = 0 enumerated over all dy (both signs present in row)
                let weight = if w == 0 { 1.0 } else { 2.0 };
                let mut cross = 0.0;
                for j in 0..ny {
                    let j2 = j as i64 + dy;
                    if j2 < 0 || j2 >= ny as i64 {
                        continue;
                    }
                    let row_a = &dense[j * nx..(j + 1) * nx];
                    let row_b = &dense[j2 as usize * nx..(j2 as usize + 1) * nx];
                    let lim = nx - w;
                    for i in 0..lim {
                        cross += row_a[i + w] * row_b[i];
                    }
                }
                acc += weight * phi * inv2 * cross;
            }
        }
        acc
    }

    /// Phi values on lattice offsets within the autocorrelation reach:
    /// kernel[w][t] = Phi(|(w gx, (t - ry) gy)| / delta).
    fn kernel(&self, delta: f64) -> Vec<Vec<f64>> {
        let spec = MollifierSpec::standard();
        let reach = 2.0 * spec.outer_radius * delta;
        let wmax = (reach / self.gx).floor() as usize;
        let mut kernel = Vec::with_capacity(wmax + 1);
        for w in 0..=wmax {
            let dx = w as f64 * self.gx;
            let rest = (reach * reach - dx * dx).max(0.0).sqrt();
            let ry = (rest / self.gy).floor() as i64;
            let mut row = vec![0.0; (2 * ry + 1) as usize];
            for (t, slot) in row.iter_mut().enumerate() {
                let dy = (t as i64 - ry) as f64 * self.gy;
                let d = (dx * dx + dy * dy).sqrt();
                *slot = spec.autocorrelation_fast(d / delta);
            }
            kernel.push(row);
        }
        kernel
    }

    /// Sparse per-column representation of the n-fold power: columns indexed
    /// by `x - n x0`, entries `(y - n y0, mass)` sorted by y.
    fn sparse_power_columns(&self, n: u32, budget: usize) -> Result<Vec<Vec<(i64, f64)>>> {
        let (x0, x1) = self.x_range();
        let (y0, _) = self.y_range();
        let mut cols: Vec<Vec<(i64, f64)>> = vec![Vec::new(); (x1 - x0 + 1) as usize];
        for &(jx, jy, w) in &self.atoms {
            cols[(jx - x0) as usize].push((jy - y0, w));
        }
        for c in &mut cols {
            c.sort_unstable_by_key(|e| e.0);
        }
        for step in 1..n {
            let pf = step as i64;
            let out_len = ((x1 - x0) * (pf + 1) + 1) as usize;
            let mut next: Vec<Vec<(i64, f64)>> = vec![Vec::new(); out_len];
            let mut total = 0usize;
            for (ci, col) in cols.iter().enumerate() {
                if col.is_empty() {
                    continue;
                }
                for &(jx, jy, w) in &self.atoms {
                    let ko = ci as i64 + (jx - x0);
                    let dst = &mut next[ko as usize];
                    for &(y, pv) in col {
                        dst.push((y + (jy - y0), w * pv));
                    }
                }
            }
            for c in &mut next {
                c.sort_unstable_by_key(|e| e.0);
                c.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
                total += c.len();
            }
            if total > budget {
                return Err(Error::BudgetExceeded(format!(
                    "{total} sparse power sites at step {step}"
                )));
            }
            cols = next;
        }
        Ok(cols)
    }

    /// Column-streamed norm for powers whose dense array would not fit:
    /// the (n-1)-fold power is kept as sparse columns, the final columns are
    /// emitted one at a time against a ring buffer.
    fn streamed_l2(&self, n: u32, delta: f64) -> Result<f64> {
        if n < 2 {
            return Err(Error::BudgetExceeded("single power exceeds dense budget".into()));
        }
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        let prev = self.sparse_power_columns(n - 1, DENSE_CELL_BUDGET)?;
        let nf = n as i64;
        let nx = ((x1 - x0) * nf + 1) as usize;
        let ny = ((y1 - y0) * nf + 1) as usize;

        let kernel = self.kernel(delta);
        let wmax = kernel.len() - 1;
        let inv2 = 1.0 / (delta * delta);

        // dense ring buffer of the trailing columns plus their support lists
        let mut ring: Vec<Vec<f64>> = vec![vec![0.0; ny]; wmax + 1];
        let mut ring_touch: Vec<Vec<u32>> = vec![Vec::new(); wmax + 1];
        let mut acc = 0.0;
        let mut col = vec![0.0; ny];
        let mut touched: Vec<u32> = Vec::new();
        for k in 0..nx {
            for &t in &touched {
                col[t as usize] = 0.0;
            }
            touched.clear();
            // column k of sigma^n = sum over atoms of prev columns shifted
            for &(jx, jy, w) in &self.atoms {
                let pk = k as i64 - (jx - x0);
                if pk < 0 || pk >= prev.len() as i64 {
                    continue;
                }
                let shift = jy - y0;
                for &(y, pv) in &prev[pk as usize] {
                    let out = (y + shift) as usize;
                    if col[out] == 0.0 {
                        touched.push(out as u32);
                    }
                    col[out] += w * pv;
                }
            }
            touched.sort_unstable();
            // correlate with itself (w = 0) and the ring (w = 1..=wmax)
            for (w, row) in kernel.iter().enumerate() {
                let ry = (row.len() as i64 - 1) / 2;
                let (other, _other_touch): (&[f64], &[u32]) = if w == 0 {
                    (&col, &touched)
                } else if w <= k {
                    let slot = (k - w) % (wmax + 1);
                    (&ring[slot], &ring_touch[slot])
                } else {
                    continue;
                };
                let weight = if w == 0 { 1.0 } else { 2.0 };
                for &tj in &touched {
                    let a = col[tj as usize];
                    let lo = (tj as i64 - ry).max(0);
                    let hi = (tj as i64 + ry).min(ny as i64 - 1);
                    for j2 in lo..=hi {
                        let b = other[j2 as usize];
                        if b == 0.0 {
                            continue;
                        }
                        let phi = row[(j2 - tj as i64 + ry) as usize];
                        acc += weight * phi * inv2 * a * b;
                    }
                }
            }
            if wmax > 0 {
                let slot = k % (wmax + 1);
                for &t in &ring_touch[slot] {
                    ring[slot][t as usize] = 0.0;
                }
                for &t in &touched {
                    ring[slot][t as usize] = col[t as usize];
                }
                ring_touch[slot].clear();
                ring_touch[slot].extend_from_slice(&touched);
            }
        }
        Ok(acc)
    }
}

fn detect_base(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sorted: Vec<f64> = values.collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut base = f64::INFINITY;
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap > 1e-12 {
            base = base.min(gap);
        }
    }
    if base.is_finite() {
        Some(base)
    } else {
        Some(1.0)
    }
}
