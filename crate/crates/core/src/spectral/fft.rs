//! In-place iterative radix-2 FFT for power-of-two lengths.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math::sincos;

/// Precomputed twiddles and bit-reversal permutation for one transform length.
#[derive(Debug, Clone)]
pub struct Radix2 {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2 {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "radix-2 length must be a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let (s, c) = sincos(-2.0 * PI * k as f64 / n as f64);
                Complex64::new(c, s)
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| i.reverse_bits() >> (usize::BITS - bits))
            .collect();
        Self { n, twiddles, bitrev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized transform; `inverse` flips the sign of the exponent.
    pub fn process(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.n);
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.n {
            let stride = self.n / (2 * half);
            for start in (0..self.n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let w = if inverse { w.conj() } else { w };
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }

    /// Transform of an `n × n` row-major array: rows first, then columns.
    pub fn process_2d(&self, data: &mut [Complex64], inverse: bool, scratch: &mut Vec<Complex64>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        for row in data.chunks_exact_mut(n) {
            self.process(row, inverse);
        }
        scratch.clear();
        scratch.resize(n, Complex64::new(0.0, 0.0));
        for col in 0..n {
            for row in 0..n {
                scratch[row] = data[row * n + col];
            }
            self.process(scratch, inverse);
            for row in 0..n {
                data[row * n + col] = scratch[row];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, &v)| {
                    let (s, c) = sincos(-2.0 * PI * (j * k) as f64 / n as f64);
                    acc + v * Complex64::new(c, s)
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[2usize, 4, 8, 16, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
                .collect();
            let mut y = x.clone();
            Radix2::new(n).process(&mut y, false);
            let expected = naive_dft(&x);
            for (a, b) in y.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-12 * n as f64);
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let n = 32;
        let plan = Radix2::new(n);
        let x: Vec<Complex64> = (0..n).map(|j| Complex64::new(j as f64, -(j as f64).sqrt())).collect();
        let mut y = x.clone();
        plan.process(&mut y, false);
        plan.process(&mut y, true);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn delta_transforms_to_constant() {
        let plan = Radix2::new(8);
        let mut x = vec![Complex64::new(0.0, 0.0); 8];
        x[0] = Complex64::new(1.0, 0.0);
        plan.process(&mut x, false);
        assert!(x.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }
}
