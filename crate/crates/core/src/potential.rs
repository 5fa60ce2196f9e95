//! External potentials `V(x)`.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::grid::{spectral_derivative, Axes, Axis, Field2D, Grid};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Free,
    /// `V = a + b x + (c/2) x²`.
    Harmonic { a: f64, b: f64, c: f64 },
    /// `V = (c/2) x² + (λ/8) x⁴`.
    Quartic { c: f64, lambda: f64 },
    /// Samples on the phase-space z rows of a grid; must be periodic and smooth.
    Tabulated(Table),
}

/// Tabulated potential with spectral derivatives up to third order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    z_min: f64,
    dz: f64,
    derivs: [Vec<f64>; 4],
}

impl Potential {
    pub fn harmonic(a: f64, b: f64, c: f64) -> Self {
        Potential::Harmonic { a, b, c }
    }

    pub fn quartic(c: f64, lambda: f64) -> Self {
        Potential::Quartic { c, lambda }
    }

    /// `values[i]` is `V(z_i)` on the `n_z` rows of `grid`.
    pub fn tabulated(grid: &Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n_z() {
            return Err(Error::ShapeMismatch { expected: (grid.n_z(), 1), found: (values.len(), 1) });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tabulated potential has non-finite values".into()));
        }
        // Reuse the z-axis derivative by broadcasting the table over p columns.
        let field = Field2D::new(
            *grid,
            Axes::ZP,
            values
                .iter()
                .flat_map(|&v| core::iter::repeat_n(Complex64::new(v, 0.0), grid.n_p()))
                .collect(),
        )?;
        let column = |f: &Field2D| -> Vec<f64> { (0..grid.n_z()).map(|i| f.at(i, 0).re).collect() };
        let d1 = spectral_derivative(&field, Axis::Z, 1)?.field;
        let d2 = spectral_derivative(&field, Axis::Z, 2)?.field;
        let d3 = spectral_derivative(&field, Axis::Z, 3)?.field;
        Ok(Potential::Tabulated(Table {
            z_min: grid.x_min(),
            dz: grid.dz(),
            derivs: [values.to_vec(), column(&d1), column(&d2), column(&d3)],
        }))
    }

    /// `V^{(order)}(x)`; `order ≤ 3`.
    pub fn derivative(&self, x: f64, order: u8) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { a, b, c } => match order {
                0 => a + b * x + 0.5 * c * x * x,
                1 => b + c * x,
                2 => *c,
                _ => 0.0,
            },
            Potential::Quartic { c, lambda } => match order {
                0 => 0.5 * c * x * x + 0.125 * lambda * x * x * x * x,
                1 => c * x + 0.5 * lambda * x * x * x,
                2 => c + 1.5 * lambda * x * x,
                3 => 3.0 * lambda * x,
                _ => 0.0,
            },
            Potential::Tabulated(t) => t.eval(x, order.min(3) as usize),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    pub fn force_gradient(&self, x: f64) -> f64 {
        self.derivative(x, 1)
    }

    /// True if `V''' ≡ 0`, so the Liouville and Weyl laws coincide.
    pub fn is_at_most_quadratic(&self) -> bool {
        matches!(self, Potential::Free | Potential::Harmonic { .. })
            || matches!(self, Potential::Quartic { lambda, .. } if *lambda == 0.0)
    }
}

impl Table {
    /// Periodic linear interpolation; exact on the tabulation points.
    fn eval(&self, x: f64, order: usize) -> f64 {
        let v = &self.derivs[order];
        let n = v.len();
        let s = (x - self.z_min) / self.dz;
        let i0 = libm::floor(s);
        let t = s - i0;
        let i0 = (i0 as i64).rem_euclid(n as i64) as usize;
        let i1 = (i0 + 1) % n;
        if t == 0.0 {
            v[i0]
        } else {
            (1.0 - t) * v[i0] + t * v[i1]
        }
    }
}
