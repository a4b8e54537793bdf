//! Square 2D FFTs on row-major buffers, built on `rustfft`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

pub(crate) fn transpose(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n * n);
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, n);
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, n);
}

/// Unnormalized forward transform.
pub fn forward(data: &mut [Complex64], n: usize) {
    fft2(data, n, false);
}

/// Inverse transform including the `1/n²` factor, so `inverse(forward(x)) == x`.
pub fn inverse(data: &mut [Complex64], n: usize) {
    fft2(data, n, true);
    let scale = 1.0 / (n * n) as f64;
    data.iter_mut().for_each(|v| *v *= scale);
}

/// FFT frequency of bin `k` for `n` samples at spacing `pitch` (cycles per meter).
pub fn frequency(k: usize, n: usize, pitch: f64) -> f64 {
    let k = if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    };
    k / (n as f64 * pitch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_restores_input() {
        let n = 16;
        let mut data: Vec<Complex64> = (0..n * n)
            .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let orig = data.clone();
        forward(&mut data, n);
        inverse(&mut data, n);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn frequencies_follow_fft_ordering() {
        assert_eq!(frequency(0, 8, 1.0), 0.0);
        assert_eq!(frequency(3, 8, 1.0), 3.0 / 8.0);
        assert_eq!(frequency(4, 8, 1.0), -4.0 / 8.0);
        assert_eq!(frequency(7, 8, 0.5), -1.0 / 4.0);
    }
}
