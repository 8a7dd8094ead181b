//! Thin 2D FFT layer over rustfft with plan reuse.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (len, dir == FftDirection::Forward);
    let mut guard = cache.lock().unwrap();
    guard
        .entry(key)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            match dir {
                FftDirection::Forward => planner.plan_fft_forward(len),
                FftDirection::Inverse => planner.plan_fft_inverse(len),
            }
        })
        .clone()
}

/// Smallest 5-smooth-ish size (2^a * 3^b, b <= 2) >= n. Keeps rustfft on its
/// fast mixed-radix paths without padding to the next power of two.
pub fn next_fft_size(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p = 1usize;
    while p < best {
        for m in [p, 3 * p, 9 * p] {
            if m >= n && m < best {
                best = m;
            }
        }
        p <<= 1;
    }
    best
}

/// In-place 2D FFT on a row-major nx-by-ny array (rows of length nx).
pub fn fft2(data: &mut [Complex64], nx: usize, ny: usize, dir: FftDirection) {
    assert_eq!(data.len(), nx * ny);
    let row_fft = plan(nx, dir);
    let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(nx) {
        row_fft.process_with_scratch(row, &mut scratch);
    }
    // columns via transpose, FFT rows, transpose back
    let col_fft = plan(ny, dir);
    let mut t = vec![Complex64::default(); nx * ny];
    transpose(data, &mut t, nx, ny);
    let mut scratch = vec![Complex64::default(); col_fft.get_inplace_scratch_len()];
    for row in t.chunks_exact_mut(ny) {
        col_fft.process_with_scratch(row, &mut scratch);
    }
    transpose(&t, data, ny, nx);
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], nx: usize, ny: usize) {
    const BLOCK: usize = 32;
    for by in (0..ny).step_by(BLOCK) {
        for bx in (0..nx).step_by(BLOCK) {
            for y in by..(by + BLOCK).min(ny) {
                for x in bx..(bx + BLOCK).min(nx) {
                    dst[x * ny + y] = src[y * nx + x];
                }
            }
        }
    }
}

/// Forward 1D FFT in place.
pub fn fft1(data: &mut [Complex64], dir: FftDirection) {
    let f = plan(data.len(), dir);
    let mut scratch = vec![Complex64::default(); f.get_inplace_scratch_len()];
    f.process_with_scratch(data, &mut scratch);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(next_fft_size(1000), 1024);
        assert_eq!(next_fft_size(1537), 2048);
        assert_eq!(next_fft_size(1536), 1536);
        assert_eq!(next_fft_size(100), 128);
        assert_eq!(next_fft_size(97), 128);
        assert_eq!(next_fft_size(70), 72);
    }

    #[test]
    fn roundtrip_2d() {
        let (nx, ny) = (12, 9);
        let mut data: Vec<Complex64> =
            (0..nx * ny).map(|i| Complex64::new(i as f64, (i * 7 % 13) as f64)).collect();
        let orig = data.clone();
        fft2(&mut data, nx, ny, FftDirection::Forward);
        fft2(&mut data, nx, ny, FftDirection::Inverse);
        let scale = (nx * ny) as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }
}
