//! Dense complex matrices: products, hermitian eigendecomposition, real solves.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Square row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::ShapeMismatch { expected: (n, n), found: (data.len(), 1) });
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.n + c] = v;
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = Self::zeros(n);
        for r in 0..n {
            let row = &mut out.data[r * n..(r + 1) * n];
            for k in 0..n {
                let a = self.data[r * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · other†` without forming the adjoint.
    pub fn matmul_adjoint(&self, other: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = Self::zeros(n);
        for r in 0..n {
            let a = &self.data[r * n..(r + 1) * n];
            for c in 0..n {
                let b = &other.data[c * n..(c + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    acc += x * y.conj();
                }
                out.data[r * n + c] = acc;
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|A - A†|` entry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut d: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                d = d.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        d
    }
}

/// Eigenpairs of a hermitian matrix, eigenvalues ascending,
/// eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.vectors.n).map(|r| self.vectors.get(r, k)).collect()
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.n;
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let s = f(self.values[c]);
            for r in 0..n {
                scaled.data[r * n + c] *= s;
            }
        }
        scaled.matmul_adjoint(&self.vectors)
    }
}

/// Cyclic Jacobi diagonalization. Only the hermitian part of `a` is used.
pub fn hermitian_eigen(a: &CMatrix) -> HermitianEigen {
    let n = a.n;
    let mut m = a.clone();
    for r in 0..n {
        for c in r..n {
            let h = (m.get(r, c) + m.get(c, r).conj()) * 0.5;
            m.set(r, c, h);
            m.set(c, r, h.conj());
        }
    }
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    off += m.get(r, c).norm_sqr();
                }
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on columns p, q.
                let up = phase.conj();
                for k in 0..n {
                    let akp = m.data[k * n + p];
                    let akq = m.data[k * n + q];
                    m.data[k * n + p] = akp * c - akq * up * s;
                    m.data[k * n + q] = akp * s + akq * up * c;
                }
                for k in 0..n {
                    let apk = m.data[p * n + k];
                    let aqk = m.data[q * n + k];
                    m.data[p * n + k] = apk * c - aqk * phase * s;
                    m.data[q * n + k] = apk * s + aqk * phase * c;
                }
                m.data[p * n + q] = Complex64::new(0.0, 0.0);
                m.data[q * n + p] = Complex64::new(0.0, 0.0);
                m.data[p * n + p].im = 0.0;
                m.data[q * n + q].im = 0.0;
                for k in 0..n {
                    let vkp = v.data[k * n + p];
                    let vkq = v.data[k * n + q];
                    v.data[k * n + p] = vkp * c - vkq * up * s;
                    v.data[k * n + q] = vkp * s + vkq * up * c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).re.total_cmp(&m.get(j, j).re));
    let values = order.iter().map(|&i| m.get(i, i).re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vectors.data[r * n + new_c] = v.data[r * n + old_c];
        }
    }
    HermitianEigen { values, vectors }
}

/// Solves the symmetric positive definite system `a x = b` (row-major `a`).
pub fn cholesky_solve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::ShapeMismatch { expected: (n, n), found: (a.len(), 1) });
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::Singular);
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}
