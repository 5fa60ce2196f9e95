//! Complex classical wave functions `ψ = √w e^{iα}`.
//!
//! The phase `α` leaves `w` untouched but changes the coarse graining: it
//! shifts quantum momentum expectations by `∂_z α / 2`, enters the quantum
//! transform and adds `α` terms to the quartic evolution of `w`. Only
//! closed-form evaluators are provided; phased states are not propagated.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::evolution::{liouville_rhs, quantum_correction_c, Correction};
use crate::grid::{spectral_derivative, Axes, Axis, Field2D, Grid};
use crate::potential::Potential;
use crate::states::{ClassicalWaveFunction, PositionBasisWaveFunction, WignerFunction};
use crate::transforms::{coarse_grain, direct_transform, partial_fourier_field, quantum_transform_direct, wigner_of_density};
use crate::{Error, Result};

/// `w ≥ 0` and an unwrapped phase `α` on the (z,p) grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasedClassicalWaveFunction {
    grid: Grid,
    w: Vec<f64>,
    alpha: Vec<f64>,
}

impl PhasedClassicalWaveFunction {
    /// Requires `∫ w = 1` within `1e-8`.
    pub fn new(grid: Grid, w: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        let (r, c) = Field2D::shape_of(&grid, Axes::ZP);
        for v in [&w, &alpha] {
            if v.len() != r * c {
                return Err(Error::ShapeMismatch { expected: (r, c), found: (v.len(), 1) });
            }
        }
        if w.iter().chain(&alpha).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("phased state has non-finite samples".into()));
        }
        if let Some(v) = w.iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidParameter(format!("negative density sample {v}")));
        }
        let integral = w.iter().sum::<f64>() * grid.dz() * grid.dp() / (2.0 * core::f64::consts::PI);
        if (integral - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { integral });
        }
        Ok(Self { grid, w, alpha })
    }

    /// `w = ψ²` with a phase sampled from `alpha(z, p)`.
    pub fn from_real(psi: &ClassicalWaveFunction, alpha: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let g = *psi.grid();
        let a = Field2D::from_fn(g, Axes::ZP, |z, p| Complex64::new(alpha(z, p), 0.0)).real_parts();
        Self::new(g, psi.density(), a)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn density(&self) -> &[f64] {
        &self.w
    }
    pub fn phase(&self) -> &[f64] {
        &self.alpha
    }

    /// `√w e^{iα}` as a complex (z,p) field.
    pub fn amplitude(&self) -> Field2D {
        let v = self.w.iter().zip(&self.alpha).map(|(&w, &a)| Complex64::from_polar(w.sqrt(), a)).collect();
        Field2D::new(self.grid, Axes::ZP, v).expect("shape checked on construction")
    }

    /// Same state with `α + c`.
    pub fn with_phase_offset(&self, c: f64) -> Self {
        Self { grid: self.grid, w: self.w.clone(), alpha: self.alpha.iter().map(|a| a + c).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasedMomentumMoments {
    pub p_first: f64,
    pub p_second: f64,
}

/// `⟨P_Q⟩ = ∫ [p w + ½ Im(ψ* ∂_z ψ)]` and
/// `⟨P_Q²⟩ = ∫ [p² w + p Im(ψ* ∂_z ψ) + ¼ |∂_z ψ|²]`.
///
/// Evaluated on `ψ` so that no division by `w` is needed; `Im(ψ*∂_zψ)` is
/// `w ∂_z α`.
pub fn phased_momentum_moments(state: &PhasedClassicalWaveFunction) -> Result<PhasedMomentumMoments> {
    let g = state.grid;
    let psi = state.amplitude();
    let d = spectral_derivative(&psi, Axis::Z, 1)?.field;
    let np = g.n_p();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (idx, (v, dv)) in psi.values().iter().zip(d.values()).enumerate() {
        let p = g.p(idx % np);
        let w = v.norm_sqr();
        let current = (v.conj() * dv).im;
        m1 += p * w + 0.5 * current;
        m2 += p * p * w + p * current + 0.25 * dv.norm_sqr();
    }
    let weight = psi.weight();
    Ok(PhasedMomentumMoments { p_first: m1 * weight, p_second: m2 * weight })
}

/// Quantum transform of `√w e^{iα}` by partial Fourier, coarse graining and
/// Wigner transform.
pub fn phased_quantum_transform(state: &PhasedClassicalWaveFunction) -> Result<WignerFunction> {
    let two_point = PositionBasisWaveFunction::general(partial_fourier_field(&state.amplitude())?)?;
    wigner_of_density(&coarse_grain(&two_point))
}

/// Direct fourfold sum with the phase inside the kernel; `n_x² ≤ 64²`.
///
/// For `α ≡ 0` this is [`quantum_transform_direct`] of `√w`.
pub fn phased_quantum_transform_direct(state: &PhasedClassicalWaveFunction) -> Result<WignerFunction> {
    let g = state.grid;
    if state.alpha.iter().all(|&a| a == 0.0) {
        let psi = ClassicalWaveFunction::new(g, state.w.iter().map(|w| w.sqrt()).collect())?;
        return quantum_transform_direct(&psi);
    }
    let np = g.n_p();
    let amp = |i: usize, j: usize| Complex64::from_polar(state.w[i * np + j].sqrt(), state.alpha[i * np + j]);
    let f = direct_transform(&g, amp)?;
    WignerFunction::new(g, f.iter().map(|v| v.re).collect())
}

/// Fourth-order finite-difference `∂_p` and `∂_p²` along each row.
///
/// `α` is unwrapped and generally not periodic in `p`, so spectral
/// derivatives do not apply.
fn phase_derivatives(grid: &Grid, alpha: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let np = grid.n_p();
    let h = grid.dp();
    let mut d1 = Vec::with_capacity(alpha.len());
    let mut d2 = Vec::with_capacity(alpha.len());
    for row in alpha.chunks(np) {
        for j in 0..np {
            // Five-point stencil centred where possible, shifted at the edges.
            let c = j.clamp(2, np - 3);
            let s = j as i64 - c as i64;
            let f = |o: i64| row[(c as i64 + o) as usize];
            let (w1, w2) = stencil(s);
            d1.push((-2..=2).map(|o| w1[(o + 2) as usize] * f(o)).sum::<f64>() / h);
            d2.push((-2..=2).map(|o| w2[(o + 2) as usize] * f(o)).sum::<f64>() / (h * h));
        }
    }
    (d1, d2)
}

/// Five-point weights on offsets `-2..=2` for the derivative at offset `s`.
fn stencil(s: i64) -> ([f64; 5], [f64; 5]) {
    match s {
        0 => ([1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0], [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0]),
        -1 => ([-3.0 / 12.0, -10.0 / 12.0, 18.0 / 12.0, -6.0 / 12.0, 1.0 / 12.0], [11.0 / 12.0, -20.0 / 12.0, 6.0 / 12.0, 4.0 / 12.0, -1.0 / 12.0]),
        1 => ([-1.0 / 12.0, 6.0 / 12.0, -18.0 / 12.0, 10.0 / 12.0, 3.0 / 12.0], [-1.0 / 12.0, 4.0 / 12.0, 6.0 / 12.0, -20.0 / 12.0, 11.0 / 12.0]),
        -2 => ([-25.0 / 12.0, 48.0 / 12.0, -36.0 / 12.0, 16.0 / 12.0, -3.0 / 12.0], [35.0 / 12.0, -104.0 / 12.0, 114.0 / 12.0, -56.0 / 12.0, 11.0 / 12.0]),
        2 => ([3.0 / 12.0, -16.0 / 12.0, 36.0 / 12.0, -48.0 / 12.0, 25.0 / 12.0], [11.0 / 12.0, -56.0 / 12.0, 114.0 / 12.0, -104.0 / 12.0, 35.0 / 12.0]),
        _ => unreachable!("offset within the five-point window"),
    }
}

/// `∂_t w` for the quartic law with a phase:
/// `-L̂w + C[w] - (λ/8) z (-3 ∂_p w (∂_p α)² - 6 w ∂_p α ∂_p² α)`.
///
/// `C[w]` is [`quantum_correction_c`] and shares its floor mask; the phase
/// terms are dropped on masked samples as well.
pub fn phased_evolution_rhs(state: &PhasedClassicalWaveFunction, potential: &Potential, mass: f64) -> Result<Correction> {
    let lambda = match potential {
        Potential::Quartic { lambda, .. } => *lambda,
        other => return Err(Error::Unsupported(format!("phased evolution needs a quartic potential, got {other:?}"))),
    };
    let g = state.grid;
    let w = &state.w;
    let mut out = liouville_rhs(&g, w, potential, mass)?;
    let c = quantum_correction_c(&g, w, potential)?;
    let wp = spectral_derivative(&Field2D::from_real(g, Axes::ZP, w)?, Axis::P, 1)?.field;
    let (a1, a2) = phase_derivatives(&g, &state.alpha);
    let peak = w.iter().copied().fold(0.0, f64::max);
    let floor = (1e-10 * peak).max(1e-300);
    let np = g.n_p();
    for (idx, o) in out.iter_mut().enumerate() {
        if w[idx] < floor {
            continue;
        }
        let z = g.z(idx / np);
        let phase = -3.0 * wp.values()[idx].re * a1[idx] * a1[idx] - 6.0 * w[idx] * a1[idx] * a2[idx];
        *o += c.values[idx] - lambda / 8.0 * z * phase;
    }
    Ok(Correction { values: out, masked_fraction: c.masked_fraction })
}
