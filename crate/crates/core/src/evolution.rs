//! Time evolution of classical wave functions.
//!
//! Both laws act on the two-point field `ψ̃(x, y)` by Strang splitting:
//! half a kinetic step `exp(-i(k_x² - k_y²) dt/4m)`, a full potential step,
//! half a kinetic step. The Weyl law `H_W` uses the potential phase
//! `exp(-i(V(x) - V(y)) dt)`, which is exactly `ρ → U ρ U†` for the
//! Schrödinger split step `U`. The Liouville law `H_L` uses
//! `exp(-i V'((x+y)/2)(x-y) dt)`, i.e. a momentum kick `-V'(z) dt` on `w`.
//! Coordinates in the potential phases are raw window coordinates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::fft::{for_each_column, Fft};
use crate::grid::{spectral_derivative, Axes, Axis, Field2D, Grid};
use crate::potential::Potential;
use crate::states::{ClassicalWaveFunction, PositionBasisWaveFunction, QuantumWaveFunction};
use crate::transforms::{inverse_partial_fourier_field, partial_fourier_field};
use crate::{Error, Result};

/// Evolution law for `ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    /// Liouville operator `H_L`: unitary on `ψ`, not on the coarse-grained state.
    Liouville,
    /// Weyl-ordered `H_W = H_Q(x) - H_Q(y)`: preserves purity.
    Weyl,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub law: Law,
    pub dt: f64,
    pub mass: f64,
}

/// Checks `|dt|·p_max/m·(2π/L) < π`.
pub fn check_step(grid: &Grid, dt: f64, mass: f64) -> Result<()> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be finite and nonzero, got {dt}")));
    }
    let phase = dt.abs() * grid.p_max() / mass * (2.0 * core::f64::consts::PI / grid.length());
    if phase >= core::f64::consts::PI {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} advances the lowest mode by {phase:.3} rad per step (limit π)"
        )));
    }
    Ok(())
}

/// Precomputed split-step factors for one law, potential and time step.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: Grid,
    config: EvolutionConfig,
    fft: Fft,
    /// `exp(-i(k_a² - k_b²) τ/2m)/n²` for `τ = dt/2` and `τ = dt`.
    kin_half: Vec<Complex64>,
    kin_full: Vec<Complex64>,
    pot: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: &Grid, potential: &Potential, config: EvolutionConfig) -> Result<Self> {
        check_step(grid, config.dt, config.mass)?;
        let n = grid.n_x();
        let (dt, m) = (config.dt, config.mass);
        let norm = 1.0 / (n * n) as f64;
        let mut kin_half = vec![Complex64::new(0.0, 0.0); n * n];
        let mut kin_full = kin_half.clone();
        let mut pot = kin_half.clone();
        for a in 0..n {
            let ka = grid.k_lattice(a);
            for b in 0..n {
                let kb = grid.k_lattice(b);
                let e = (ka * ka - kb * kb) / (2.0 * m);
                kin_half[a * n + b] = Complex64::from_polar(norm, -e * 0.5 * dt);
                kin_full[a * n + b] = Complex64::from_polar(norm, -e * dt);
                let phase = match config.law {
                    Law::Weyl => potential.value(grid.x(a)) - potential.value(grid.x(b)),
                    Law::Liouville => {
                        let (mid, sep) = grid.raw_mid_sep(a, b);
                        potential.force_gradient(mid) * sep
                    }
                };
                pot[a * n + b] = Complex64::from_polar(1.0, -phase * dt);
            }
        }
        Ok(Self { grid: *grid, config, fft: Fft::new(n)?, kin_half, kin_full, pot })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    fn kinetic(&self, v: &mut [Complex64], factors: &[Complex64]) {
        let n = self.grid.n_x();
        for row in v.chunks_mut(n) {
            self.fft.forward(row);
        }
        for_each_column(v, n, n, |_, col| self.fft.forward(col));
        for (x, f) in v.iter_mut().zip(factors) {
            *x *= f;
        }
        for_each_column(v, n, n, |_, col| self.fft.inverse(col));
        for row in v.chunks_mut(n) {
            self.fft.inverse(row);
        }
    }

    fn potential(&self, v: &mut [Complex64]) {
        for (x, f) in v.iter_mut().zip(&self.pot) {
            *x *= f;
        }
    }

    /// One Strang step of an (x,y) field in place.
    pub fn step(&self, f: &mut Field2D) {
        self.evolve(f, 1);
    }

    /// `n_steps` Strang steps with adjacent half kinetic steps merged.
    pub fn evolve(&self, f: &mut Field2D, n_steps: usize) {
        assert_eq!(f.axes(), Axes::XY, "propagator acts on (x,y) fields");
        assert_eq!(f.grid(), &self.grid, "propagator grid");
        if n_steps == 0 {
            return;
        }
        let v = f.values_mut();
        self.kinetic(v, &self.kin_half);
        for s in 0..n_steps {
            self.potential(v);
            if s + 1 < n_steps {
                self.kinetic(v, &self.kin_full);
            }
        }
        self.kinetic(v, &self.kin_half);
    }
}

fn step_classical(psi: &ClassicalWaveFunction, potential: &Potential, dt: f64, mass: f64, law: Law) -> Result<ClassicalWaveFunction> {
    let prop = Propagator::new(psi.grid(), potential, EvolutionConfig { law, dt, mass })?;
    let mut t = partial_fourier_field(&psi.to_field())?;
    prop.step(&mut t);
    ClassicalWaveFunction::from_field(&inverse_partial_fourier_field(&t)?)
}

/// One step of `i∂_t ψ = H_L ψ`.
pub fn liouville_step(psi: &ClassicalWaveFunction, potential: &Potential, dt: f64, mass: f64) -> Result<ClassicalWaveFunction> {
    step_classical(psi, potential, dt, mass, Law::Liouville)
}

/// One step of `i∂_t ψ = H_W ψ`.
pub fn hw_step(psi: &ClassicalWaveFunction, potential: &Potential, dt: f64, mass: f64) -> Result<ClassicalWaveFunction> {
    step_classical(psi, potential, dt, mass, Law::Weyl)
}

/// Split-step propagator for `ψ_Q(x)`.
#[derive(Clone, Debug)]
pub struct SchrodingerPropagator {
    grid: Grid,
    fft: Fft,
    kin_half: Vec<Complex64>,
    kin_full: Vec<Complex64>,
    pot: Vec<Complex64>,
}

impl SchrodingerPropagator {
    pub fn new(grid: &Grid, potential: &Potential, dt: f64, mass: f64) -> Result<Self> {
        check_step(grid, dt, mass)?;
        let n = grid.n_x();
        let norm = 1.0 / n as f64;
        let kin = |tau: f64| -> Vec<Complex64> {
            (0..n)
                .map(|a| {
                    let k = grid.k_lattice(a);
                    Complex64::from_polar(norm, -k * k / (2.0 * mass) * tau)
                })
                .collect()
        };
        let pot = (0..n).map(|a| Complex64::from_polar(1.0, -potential.value(grid.x(a)) * dt)).collect();
        Ok(Self { grid: *grid, fft: Fft::new(n)?, kin_half: kin(0.5 * dt), kin_full: kin(dt), pot })
    }

    fn kinetic(&self, v: &mut [Complex64], f: &[Complex64]) {
        self.fft.forward(v);
        for (x, k) in v.iter_mut().zip(f) {
            *x *= k;
        }
        self.fft.inverse(v);
    }

    pub fn evolve(&self, psi: &QuantumWaveFunction, n_steps: usize) -> QuantumWaveFunction {
        assert_eq!(psi.grid(), &self.grid);
        let mut v = psi.values().to_vec();
        if n_steps > 0 {
            self.kinetic(&mut v, &self.kin_half);
            for s in 0..n_steps {
                for (x, p) in v.iter_mut().zip(&self.pot) {
                    *x *= p;
                }
                if s + 1 < n_steps {
                    self.kinetic(&mut v, &self.kin_full);
                }
            }
            self.kinetic(&mut v, &self.kin_half);
        }
        QuantumWaveFunction::new(self.grid, v).expect("unitary step keeps the norm")
    }
}

/// One Strang step of the Schrödinger equation.
pub fn schrodinger_step(psi: &QuantumWaveFunction, potential: &Potential, dt: f64, mass: f64) -> Result<QuantumWaveFunction> {
    Ok(SchrodingerPropagator::new(psi.grid(), potential, dt, mass)?.evolve(psi, 1))
}

/// Truncation of the Moyal bracket.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoyalOrder {
    /// `-(p/m)∂_z W + V'∂_p W`.
    First,
    /// First order plus `-(1/24) V''' ∂_p³ W`.
    Third,
    /// All orders, evaluated in (x,y) with the `H_W` generator.
    Exact,
}

/// `∂_t W` under the Weyl law, truncated at `order`.
pub fn moyal_rhs(w: &Field2D, potential: &Potential, mass: f64, order: MoyalOrder) -> Result<Field2D> {
    crate::grid::expect_axes(w, Axes::ZP)?;
    let g = *w.grid();
    if order == MoyalOrder::Exact {
        let rho = partial_fourier_field(w)?;
        let n = g.n_x();
        let dxx = spectral_derivative(&rho, Axis::X, 2)?.field;
        let dyy = spectral_derivative(&rho, Axis::Y, 2)?.field;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        let i = Complex64::new(0.0, 1.0);
        for a in 0..n {
            let va = potential.value(g.x(a));
            for b in 0..n {
                let idx = a * n + b;
                let kin = (dxx.values()[idx] - dyy.values()[idx]) * (i / (2.0 * mass));
                let pot = -i * (va - potential.value(g.x(b))) * rho.values()[idx];
                out[idx] = kin + pot;
            }
        }
        return inverse_partial_fourier_field(&Field2D::new(g, Axes::XY, out)?);
    }
    let dz = spectral_derivative(w, Axis::Z, 1)?.field;
    let dp = spectral_derivative(w, Axis::P, 1)?.field;
    let dp3 = if order == MoyalOrder::Third { Some(spectral_derivative(w, Axis::P, 3)?.field) } else { None };
    let np = g.n_p();
    let mut out = Vec::with_capacity(g.n_z() * np);
    for i in 0..g.n_z() {
        let z = g.z(i);
        let v1 = potential.derivative(z, 1);
        let v3 = potential.derivative(z, 3);
        for j in 0..np {
            let idx = i * np + j;
            let mut r = -g.p(j) / mass * dz.values()[idx] + v1 * dp.values()[idx];
            if let Some(d3) = &dp3 {
                r -= v3 / 24.0 * d3.values()[idx];
            }
            out.push(r);
        }
    }
    Field2D::new(g, Axes::ZP, out)
}

/// `-(p/m)∂_z w + V'(z)∂_p w` for a real density on the (z,p) grid.
pub fn liouville_rhs(grid: &Grid, w: &[f64], potential: &Potential, mass: f64) -> Result<Vec<f64>> {
    let f = Field2D::from_real(*grid, Axes::ZP, w)?;
    Ok(moyal_rhs(&f, potential, mass, MoyalOrder::First)?.real_parts())
}

/// Output of [`quantum_correction_c`].
#[derive(Clone, Debug)]
pub struct Correction {
    pub values: Vec<f64>,
    /// Fraction of samples below the floor, where `C` is set to zero.
    pub masked_fraction: f64,
}

impl Correction {
    /// Masked area above 1%.
    pub fn warn(&self) -> bool {
        self.masked_fraction > 0.01
    }
}

fn quartic_lambda(potential: &Potential) -> Result<f64> {
    match potential {
        Potential::Quartic { lambda, .. } => Ok(*lambda),
        other => Err(Error::Unsupported(format!("quantum correction needs a quartic potential, got {other:?}"))),
    }
}

/// `C[w] = -(λ/8) z (∂³ ln w + (3/2) ∂² ln w ∂ ln w + (1/4)(∂ ln w)³) w`
/// with `p` derivatives. Samples with `w` below `max(1e-300, 1e-10·max w)`
/// are masked: the logarithmic derivatives are not recoverable there.
pub fn quantum_correction_c(grid: &Grid, w: &[f64], potential: &Potential) -> Result<Correction> {
    let lambda = quartic_lambda(potential)?;
    let f = Field2D::from_real(*grid, Axes::ZP, w)?;
    let d1 = spectral_derivative(&f, Axis::P, 1)?.field;
    let d2 = spectral_derivative(&f, Axis::P, 2)?.field;
    let d3 = spectral_derivative(&f, Axis::P, 3)?.field;
    let peak = w.iter().copied().fold(0.0, f64::max);
    let floor = (1e-10 * peak).max(1e-300);
    let np = grid.n_p();
    let mut masked = 0usize;
    let mut values = Vec::with_capacity(w.len());
    for (idx, &wv) in w.iter().enumerate() {
        if wv < floor {
            masked += 1;
            values.push(0.0);
            continue;
        }
        let z = grid.z(idx / np);
        let l1 = d1.values()[idx].re / wv;
        let q2 = d2.values()[idx].re / wv;
        let q3 = d3.values()[idx].re / wv;
        let l2 = q2 - l1 * l1;
        let l3 = q3 - 3.0 * l1 * q2 + 2.0 * l1 * l1 * l1;
        values.push(-lambda / 8.0 * z * (l3 + 1.5 * l2 * l1 + 0.25 * l1 * l1 * l1) * wv);
    }
    Ok(Correction { values, masked_fraction: masked as f64 / w.len().max(1) as f64 })
}

/// Same correction from the amplitude: `-(λ/4) z ψ ∂_p³ ψ`, `ψ = √w`.
pub fn quantum_correction_from_amplitude(psi: &ClassicalWaveFunction, potential: &Potential) -> Result<Vec<f64>> {
    let lambda = quartic_lambda(potential)?;
    let g = psi.grid();
    let d3 = spectral_derivative(&psi.to_field(), Axis::P, 3)?.field;
    let np = g.n_p();
    Ok(psi
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &a)| -lambda / 4.0 * g.z(idx / np) * a * d3.values()[idx].re)
        .collect())
}

/// Evolves a classical wave function `n_steps` times under `law`.
pub fn evolve_classical(
    psi: &ClassicalWaveFunction,
    potential: &Potential,
    config: EvolutionConfig,
    n_steps: usize,
) -> Result<ClassicalWaveFunction> {
    let prop = Propagator::new(psi.grid(), potential, config)?;
    let mut t = partial_fourier_field(&psi.to_field())?;
    prop.evolve(&mut t, n_steps);
    ClassicalWaveFunction::from_field(&inverse_partial_fourier_field(&t)?)
}

/// Evolves a two-point field `n_steps` times under `law`.
pub fn evolve_two_point(
    psi: &PositionBasisWaveFunction,
    potential: &Potential,
    config: EvolutionConfig,
    n_steps: usize,
) -> Result<PositionBasisWaveFunction> {
    let prop = Propagator::new(psi.grid(), potential, config)?;
    let mut f = psi.field().clone();
    prop.evolve(&mut f, n_steps);
    PositionBasisWaveFunction::general(f)
}
