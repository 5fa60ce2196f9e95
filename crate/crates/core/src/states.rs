//! State types and state constructors.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::grid::{Axes, Field2D, Grid};
use crate::linalg::{hermitian_eigen, CMatrix, HermitianEigen};
use crate::{Error, Result};

/// Tolerance on `|∫ψ² - 1|` accepted by constructors that renormalize.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Real amplitude `ψ(z, p)` on the phase-space grid, row-major `n_z × n_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalWaveFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl ClassicalWaveFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let (r, c) = Field2D::shape_of(&grid, Axes::ZP);
        if values.len() != r * c {
            return Err(Error::ShapeMismatch { expected: (r, c), found: (values.len(), 1) });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("classical wave function has non-finite samples".into()));
        }
        Ok(Self { grid, values })
    }

    /// Accepts a (z,p) field whose imaginary part is below `1e-9` of its peak.
    pub fn from_field(f: &Field2D) -> Result<Self> {
        if f.axes() != Axes::ZP {
            return Err(Error::AxisMismatch(format!("expected (z,p) field, got {:?}", f.axes())));
        }
        let frac = f.imag_fraction();
        if frac > 1e-9 {
            return Err(Error::NotReal { imag_fraction: frac });
        }
        Self::new(*f.grid(), f.real_parts())
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Field2D::from_fn(grid, Axes::ZP, |z, p| Complex64::new(f(z, p), 0.0)).real_parts();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_p() + j]
    }
    pub fn to_field(&self) -> Field2D {
        Field2D::from_real(self.grid, Axes::ZP, &self.values).expect("shape checked at construction")
    }
    pub fn weight(&self) -> f64 {
        self.grid.dz() * self.grid.dp() / (2.0 * PI)
    }

    /// `∫ ψ² dz dp/2π`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.weight()
    }

    /// Scaled to unit norm. Errors on the zero field.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::NotNormalized { integral: n });
        }
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    /// `w = ψ²`.
    pub fn density(&self) -> Vec<f64> {
        density_from_wavefunction(self)
    }

    /// `L²` distance with the phase-space measure.
    pub fn distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            * self.weight().sqrt()
    }
}

/// Two-point field `ψ̃(x, y)` on the `n_x × n_x` lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionBasisWaveFunction {
    field: Field2D,
}

impl PositionBasisWaveFunction {
    /// Accepts an (x,y) field hermitian to `1e-9` of its peak.
    pub fn new(field: Field2D) -> Result<Self> {
        let peak = field.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let defect = field.hermitian_defect()?;
        if defect > 1e-9 * peak.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { field })
    }

    /// No hermiticity requirement (complex `ψ` in the phase extension).
    pub fn general(field: Field2D) -> Result<Self> {
        if field.axes() != Axes::XY {
            return Err(Error::AxisMismatch(format!("expected (x,y) field, got {:?}", field.axes())));
        }
        Ok(Self { field })
    }

    pub fn field(&self) -> &Field2D {
        &self.field
    }
    pub fn into_field(self) -> Field2D {
        self.field
    }
    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }
    pub fn norm_sqr(&self) -> f64 {
        self.field.norm_sqr()
    }
    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_vec(self.grid().n_x(), self.field.values().to_vec()).expect("square field")
    }
}

/// Basis of a [`DensityMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Entries `ρ(x_a, x_b)`, measure `dx`.
    Position,
    /// Entries `ρ̃(k_a, k_b)` in FFT order, measure `dk/2π`.
    Momentum,
}

/// Hermitian, unit-trace operator kernel on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    grid: Grid,
    basis: Basis,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity (`1e-10` of the peak) and unit trace (`1e-9`).
    pub fn new(grid: Grid, basis: Basis, matrix: CMatrix) -> Result<Self> {
        if matrix.dim() != grid.n_x() {
            return Err(Error::ShapeMismatch {
                expected: (grid.n_x(), grid.n_x()),
                found: (matrix.dim(), matrix.dim()),
            });
        }
        let peak = matrix.as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let defect = matrix.hermitian_defect();
        if defect > 1e-10 * peak.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian { defect });
        }
        let rho = Self { grid, basis, matrix };
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { integral: tr });
        }
        Ok(rho)
    }

    pub(crate) fn unchecked(grid: Grid, basis: Basis, matrix: CMatrix) -> Self {
        Self { grid, basis, matrix }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &QuantumWaveFunction) -> Self {
        let n = psi.grid.n_x();
        let mut m = CMatrix::zeros(n);
        for a in 0..n {
            for b in 0..n {
                m.set(a, b, psi.values[a] * psi.values[b].conj());
            }
        }
        Self { grid: psi.grid, basis: Basis::Position, matrix: m }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn basis(&self) -> Basis {
        self.basis
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Measure per index: `dx` or `dk/2π`.
    pub fn spacing(&self) -> f64 {
        match self.basis {
            Basis::Position => self.grid.dx(),
            Basis::Momentum => self.grid.dp() / (2.0 * PI),
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re * self.spacing()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        let s = self.spacing();
        self.matrix.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>() * s * s
    }

    /// Operator eigenpairs; eigenvalues are probabilities summing to the trace.
    pub fn eigen(&self) -> HermitianEigen {
        let mut e = hermitian_eigen(&self.matrix);
        let s = self.spacing();
        e.values.iter_mut().for_each(|v| *v *= s);
        e
    }

    /// Errors if an operator eigenvalue is below `-1e-8`.
    pub fn check_positive(&self) -> Result<HermitianEigen> {
        let e = self.eigen();
        let min = e.values.first().copied().unwrap_or(0.0);
        if min < -1e-8 {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(e)
    }

    /// Diagonal as a probability density over the basis coordinate.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.matrix.get(a, a).re).collect()
    }

    /// `ρ̃(k,k') = Σ e^{-ikx} ρ(x,x') e^{ik'x'} dx²`.
    pub fn to_momentum_basis(&self) -> Result<Self> {
        if self.basis != Basis::Position {
            return Err(Error::Unsupported("already in momentum basis".into()));
        }
        let n = self.dim();
        let g = self.grid;
        let mut f = CMatrix::zeros(n);
        for m in 0..n {
            for a in 0..n {
                f.set(m, a, Complex64::from_polar(g.dx(), -g.k_lattice(m) * g.x(a)));
            }
        }
        let out = f.matmul(&self.matrix).matmul_adjoint(&f);
        Ok(Self { grid: g, basis: Basis::Momentum, matrix: out })
    }

    /// Frobenius distance with the basis measure.
    pub fn distance(&self, other: &Self) -> f64 {
        let s = self.spacing();
        self.matrix
            .as_slice()
            .iter()
            .zip(other.matrix.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * s
    }
}

/// Real function `ρ̄_w(z, p)` on the phase-space grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerFunction {
    grid: Grid,
    values: Vec<f64>,
}

/// Result of [`WignerFunction::validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerReport {
    pub integral: f64,
    /// `∫ max(-W, 0)`; nonzero marks a non-classical state.
    pub negative_mass: f64,
}

impl WignerFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let (r, c) = Field2D::shape_of(&grid, Axes::ZP);
        if values.len() != r * c {
            return Err(Error::ShapeMismatch { expected: (r, c), found: (values.len(), 1) });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_p() + j]
    }
    pub fn weight(&self) -> f64 {
        self.grid.dz() * self.grid.dp() / (2.0 * PI)
    }
    pub fn to_field(&self) -> Field2D {
        Field2D::from_real(self.grid, Axes::ZP, &self.values).expect("shape checked at construction")
    }

    /// Checks `∫W = 1` to `1e-8` and reports negativity.
    pub fn validate(&self) -> Result<WignerReport> {
        let w = self.weight();
        let integral = self.values.iter().sum::<f64>() * w;
        let negative_mass = self.values.iter().map(|v| (-v).max(0.0)).sum::<f64>() * w;
        if (integral - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { integral });
        }
        Ok(WignerReport { integral, negative_mass })
    }
}

/// Pure state `ψ_Q(x)` on the position lattice, `Σ|ψ|² dx = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumWaveFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl QuantumWaveFunction {
    /// Renormalizes; errors on the zero vector or wrong length.
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_x() {
            return Err(Error::ShapeMismatch { expected: (grid.n_x(), 1), found: (values.len(), 1) });
        }
        let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { integral: norm });
        }
        let s = 1.0 / norm.sqrt();
        Ok(Self { grid, values: values.into_iter().map(|v| v * s).collect() })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, (0..grid.n_x()).map(|a| f(grid.x(a))).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.dx()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Probability within `n_x/16` points of either edge.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.values.len();
        let b = (n / 16).max(1);
        let edge: f64 = self.values[..b].iter().chain(&self.values[n - b..]).map(|v| v.norm_sqr()).sum();
        edge * self.grid.dx()
    }
}

/// Upper bound on the probability a Gaussian packet leaves the window,
/// in position, in momentum, or in separation.
pub fn gaussian_boundary_mass(grid: &Grid, x_bar: f64, p_bar: f64, dx: f64, dp: f64) -> f64 {
    // Tail of a normal density with standard deviation s beyond the interval [lo, hi].
    let tail = |mean: f64, s: f64, lo: f64, hi: f64| {
        0.5 * libm::erfc((mean - lo) / (s * core::f64::consts::SQRT_2))
            + 0.5 * libm::erfc((hi - mean) / (s * core::f64::consts::SQRT_2))
    };
    let x_hi = grid.x_min() + grid.length();
    let z_tail = tail(x_bar, dx, grid.x_min(), x_hi);
    let p_tail = tail(p_bar, dp, -grid.p_max(), grid.p_max());
    // |ψ̃|² ∝ exp(-2 Δp² r²): separation std 1/(2Δp).
    let r_tail = tail(0.0, 0.5 / dp, -0.5 * grid.length(), 0.5 * grid.length());
    // Quantum transform widths.
    let wx = (dx * dx + 1.0 / (16.0 * dp * dp)).sqrt();
    let wp = (dp * dp + 1.0 / (16.0 * dx * dx)).sqrt();
    let q_tail = tail(x_bar, wx, grid.x_min(), x_hi) + tail(p_bar, wp, -grid.p_max(), grid.p_max());
    // Off-diagonal coherence of ρ: |ρ(x, x')|² ∝ exp(-Δ̃p² (x-x')²).
    let c_tail = tail(0.0, core::f64::consts::FRAC_1_SQRT_2 / wp, -0.5 * grid.length(), 0.5 * grid.length());
    z_tail + p_tail + r_tail + q_tail + c_tail
}

/// Minimal-form Gaussian packet
/// `ψ = (Δx Δp)^{-1/2} exp(-(z-x̄)²/4Δx²) exp(-(p-p̄)²/4Δp²)`, renormalized on the grid.
/// Errors if a width is below one grid spacing or the packet is not contained
/// in the window (boundary mass above `1e-8`).
pub fn gaussian_packet(grid: &Grid, x_bar: f64, p_bar: f64, delta_x: f64, delta_p: f64) -> Result<ClassicalWaveFunction> {
    if !(delta_x > 0.0 && delta_p > 0.0 && delta_x.is_finite() && delta_p.is_finite()) {
        return Err(Error::InvalidParameter(format!("widths must be positive, got Δx={delta_x}, Δp={delta_p}")));
    }
    if delta_x <= grid.dz() || delta_p <= grid.dp() {
        return Err(Error::InvalidParameter(format!(
            "widths Δx={delta_x}, Δp={delta_p} not resolved by dz={}, dp={}",
            grid.dz(),
            grid.dp()
        )));
    }
    let mass = gaussian_boundary_mass(grid, x_bar, p_bar, delta_x, delta_p);
    if mass > 1e-8 {
        return Err(Error::Unresolved { boundary_mass: mass });
    }
    let pref = 1.0 / (delta_x * delta_p).sqrt();
    ClassicalWaveFunction::from_fn(*grid, |z, p| {
        pref * (-(z - x_bar).powi(2) / (4.0 * delta_x * delta_x) - (p - p_bar).powi(2) / (4.0 * delta_p * delta_p)).exp()
    })
    .normalized()
}

/// `w = ψ²`.
pub fn density_from_wavefunction(psi: &ClassicalWaveFunction) -> Vec<f64> {
    psi.values.iter().map(|v| v * v).collect()
}

/// `ψ = s √w` with an explicit sign field `s ∈ {-1, 0, +1}` (zero where
/// `w` vanishes). `w` must be nonnegative up to `1e-14` of its peak and
/// integrate to `1 ± 1e-6`; the result is renormalized exactly.
pub fn wavefunction_from_density(grid: &Grid, w: &[f64], sign: &[i8]) -> Result<ClassicalWaveFunction> {
    let (r, c) = Field2D::shape_of(grid, Axes::ZP);
    if w.len() != r * c || sign.len() != r * c {
        return Err(Error::ShapeMismatch { expected: (r, c), found: (w.len().min(sign.len()), 1) });
    }
    let peak = w.iter().copied().fold(0.0, f64::max);
    if let Some(bad) = w.iter().copied().find(|&v| v < -1e-14 * peak || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("density has negative or non-finite sample {bad:e}")));
    }
    if sign.iter().any(|s| !(-1..=1).contains(s)) {
        return Err(Error::InvalidParameter("sign field must be -1, 0 or +1".into()));
    }
    let integral = w.iter().sum::<f64>() * grid.dz() * grid.dp() / (2.0 * PI);
    if !(integral > 0.0) || (integral - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { integral });
    }
    let values = w.iter().zip(sign).map(|(&v, &s)| s as f64 * v.max(0.0).sqrt()).collect();
    ClassicalWaveFunction::new(*grid, values)?.normalized()
}

/// Oscillator eigenstate `ψ_n` for `V = m ω² x²/2`, centred at the origin.
pub fn harmonic_eigenstate(grid: &Grid, n: usize, mass: f64, omega: f64) -> Result<QuantumWaveFunction> {
    if !(mass > 0.0 && omega > 0.0) {
        return Err(Error::InvalidParameter("mass and ω must be positive".into()));
    }
    let s = (mass * omega).sqrt();
    let pref = (mass * omega / PI).powf(0.25);
    let psi = QuantumWaveFunction::from_fn(*grid, |x| {
        let xi = s * x;
        let mut prev = 0.0;
        let mut cur = pref * (-0.5 * xi * xi).exp();
        for k in 0..n {
            let next = (2.0 / (k + 1) as f64).sqrt() * xi * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        Complex64::new(cur, 0.0)
    })?;
    let mass_out = psi.boundary_mass();
    if mass_out > 1e-8 {
        return Err(Error::Unresolved { boundary_mass: mass_out });
    }
    Ok(psi)
}

/// Position-space Gaussian `ψ_Q ∝ exp(-(x-x̄)²/4σ²) e^{ip̄x}`.
pub fn gaussian_quantum(grid: &Grid, x_bar: f64, p_bar: f64, sigma: f64) -> Result<QuantumWaveFunction> {
    QuantumWaveFunction::from_fn(*grid, |x| {
        Complex64::from_polar((-(x - x_bar).powi(2) / (4.0 * sigma * sigma)).exp(), p_bar * x)
    })
}

/// Eigendecomposition helper exposed for embeds: `ρ / spacing` as a matrix.
pub(crate) fn operator_sqrt(rho: &DensityMatrix) -> Result<CMatrix> {
    let e = rho.check_positive()?;
    let s = rho.spacing();
    // Matrix Ψ with Ψ Ψ† s = ρ: Ψ = V sqrt(λ_op)/s V† in matrix units.
    // Probabilities below 1e-12 are rounding noise; the square root would
    // amplify them to ~1e-6.
    Ok(e.reconstruct(|l| if l < 1e-12 { 0.0 } else { l.sqrt() / s }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_packet_is_normalized_and_peaked() {
        let g = Grid::centered(128, 24.0).unwrap();
        let psi = gaussian_packet(&g, 0.5, -0.25, 0.7, 0.7).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-14);
        let (imax, _) = psi.values().iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let (i, j) = (imax / g.n_p(), imax % g.n_p());
        assert!((g.z(i) - 0.5).abs() <= g.dz());
        assert!((g.p(j) + 0.25).abs() <= g.dp());
    }

    #[test]
    fn gaussian_packet_rejects_unresolved() {
        let g = Grid::centered(64, 16.0).unwrap();
        assert!(matches!(gaussian_packet(&g, 0.0, 0.0, 0.05, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(gaussian_packet(&g, 6.5, 0.0, 1.0, 1.0), Err(Error::Unresolved { .. })));
        assert!(gaussian_packet(&g, 0.0, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn density_roundtrip_with_sign() {
        let g = Grid::centered(32, 16.0).unwrap();
        let psi = ClassicalWaveFunction::from_fn(g, |z, p| z * (-(z * z) / 2.0 - p * p / 2.0).exp()).normalized().unwrap();
        let w = psi.density();
        let sign: Vec<i8> = psi.values().iter().map(|&v| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 }).collect();
        let back = wavefunction_from_density(&g, &w, &sign).unwrap();
        assert!(back.distance(&psi) < 1e-14);
        let zero = alloc::vec![0.0; w.len()];
        assert!(matches!(wavefunction_from_density(&g, &zero, &sign), Err(Error::NotNormalized { .. })));
        let mut neg = w.clone();
        neg[3] = -0.1;
        assert!(wavefunction_from_density(&g, &neg, &sign).is_err());
    }

    #[test]
    fn eigenstates_are_orthonormal() {
        let g = Grid::centered(128, 20.0).unwrap();
        let states: Vec<_> = (0..5).map(|n| harmonic_eigenstate(&g, n, 1.0, 1.0).unwrap()).collect();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b).norm() - expect).abs() < 1e-12);
            }
        }
        assert!((states[0].values()[64].re - PI.powf(-0.25)).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_checks() {
        let g = Grid::centered(16, 8.0).unwrap();
        let psi = gaussian_quantum(&g, 0.0, 1.0, 0.8).unwrap();
        let rho = DensityMatrix::pure(&psi);
        let checked = DensityMatrix::new(g, Basis::Position, rho.matrix().clone()).unwrap();
        assert!((checked.purity() - 1.0).abs() < 1e-12);
        let e = checked.check_positive().unwrap();
        assert!((e.values.last().unwrap() - 1.0).abs() < 1e-12);
        let mut bad = rho.matrix().clone();
        bad.set(0, 1, Complex64::new(1.0, 0.0));
        assert!(matches!(DensityMatrix::new(g, Basis::Position, bad), Err(Error::NotHermitian { .. })));
        let mut half = rho.matrix().clone();
        half.scale(0.5);
        assert!(matches!(DensityMatrix::new(g, Basis::Position, half), Err(Error::NotNormalized { .. })));
        let k = checked.to_momentum_basis().unwrap();
        assert!((k.trace() - 1.0).abs() < 1e-12);
        assert!((k.purity() - 1.0).abs() < 1e-12);
    }
}
