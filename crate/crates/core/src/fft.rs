//! Radix-2 complex FFT with precomputed twiddles.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::{Error, Result};

/// Power-of-two FFT plan. Both directions are unnormalized.
#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(alloc::format!(
                "FFT length {n} is not a power of two"
            )));
        }
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        // Computed directly rather than by recurrence to keep twiddles exact to 1 ulp.
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(Self { n, twiddles, rev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `X_k = Σ_j x_j e^{-2πi jk/n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// `x_j = Σ_k X_k e^{+2πi jk/n}` (no 1/n factor).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n, "FFT buffer length");
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Signed FFT-order index: `0, 1, …, n/2-1, -n/2, …, -1`.
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Applies `f` to each column of a row-major `rows × cols` array.
pub(crate) fn for_each_column(
    values: &mut [Complex64],
    rows: usize,
    cols: usize,
    mut f: impl FnMut(usize, &mut [Complex64]),
) {
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            buf[r] = values[r * cols + c];
        }
        f(c, &mut buf);
        for r in 0..rows {
            values[r * cols + c] = buf[r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| {
                        x[j] * Complex64::from_polar(1.0, sign * 2.0 * PI * (j * k) as f64 / n as f64)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1usize, 2, 4, 8, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
                .collect();
            let mut y = x.clone();
            let plan = Fft::new(n).unwrap();
            plan.forward(&mut y);
            for (a, b) in y.iter().zip(naive(&x, -1.0)) {
                assert!((a - b).norm() < 1e-12, "n={n}");
            }
            plan.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a / n as f64 - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Fft::new(12).is_err());
        assert!(Fft::new(0).is_err());
    }

    #[test]
    fn columns_visit_every_column() {
        let mut v = vec![Complex64::new(1.0, 0.0); 6];
        for_each_column(&mut v, 2, 3, |c, col| {
            for x in col.iter_mut() {
                *x *= c as f64;
            }
        });
        assert_eq!(v[5].re, 2.0);
        assert_eq!(v[3].re, 0.0);
    }
}
