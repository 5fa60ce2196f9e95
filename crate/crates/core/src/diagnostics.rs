//! Coarse-grained unitarity diagnostics for classical evolution.
//!
//! Under the Liouville law the coarse-grained density matrix obeys a von
//! Neumann equation plus a term `E(x, x')` built from
//! `W(x, y) = V'((x+y)/2)(y - x) + V(x)`. `E` vanishes identically for
//! quadratic potentials. Otherwise the evolution stays unitary only if `E`
//! has the local form `[ε(x) - ε(x')] ρ(x, x')`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::evolution::{EvolutionConfig, Law, Propagator};
use crate::grid::{spectral_derivative, Axes, Axis, Field2D};
use crate::linalg::{cholesky_solve, CMatrix};
use crate::potential::Potential;
use crate::states::{Basis, ClassicalWaveFunction, DensityMatrix, PositionBasisWaveFunction};
use crate::transforms::{coarse_grain, partial_fourier};
use crate::{Error, Result};

/// One sample of [`unitarity_monitor`].
#[derive(Clone, Debug, PartialEq)]
pub struct UnitarityReport {
    pub time: f64,
    /// Hilbert-Schmidt norm `(Σ |E|² dx²)^{1/2}`.
    pub e_norm: f64,
    pub locality_residual: f64,
    pub epsilon_fit: Vec<f64>,
    pub purity: f64,
    /// `|tr ρ(t) - tr ρ(0)|`.
    pub trace_drift: f64,
}

/// `W(x, y)` in raw lattice coordinates.
pub fn coupling_kernel(potential: &Potential, x: f64, y: f64) -> f64 {
    potential.force_gradient(0.5 * (x + y)) * (y - x) + potential.value(x)
}

/// `E(x, x') = Σ_y ψ̃(x, y) ψ̃*(x', y) [W(x, y) - W(x', y)] dx`.
///
/// The output is anti-hermitian with a vanishing diagonal.
pub fn coupling_term_e(psi: &PositionBasisWaveFunction, potential: &Potential) -> CMatrix {
    let g = *psi.grid();
    let n = g.n_x();
    let m = psi.matrix();
    let mut wt = CMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            wt.set(a, b, m.get(a, b) * coupling_kernel(potential, g.x(a), g.x(b)));
        }
    }
    // M ψ̃† - ψ̃ M† with M = W ∘ ψ̃.
    let left = wt.matmul_adjoint(&m);
    let right = m.matmul_adjoint(&wt);
    let mut e = CMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            e.set(a, b, (left.get(a, b) - right.get(a, b)) * g.dx());
        }
        e.set(a, a, Complex64::new(0.0, 0.0));
    }
    e
}

/// Hilbert-Schmidt norm of an operator kernel on the lattice.
pub fn kernel_norm(e: &CMatrix, dx: f64) -> f64 {
    e.frobenius() * dx
}

/// Result of [`locality_fit`].
#[derive(Clone, Debug, PartialEq)]
pub struct LocalityFit {
    /// `ε(x)` with `ε = 0` at the leftmost supported point.
    pub epsilon: Vec<f64>,
    /// `‖E - model‖ / ‖E‖`; zero when `‖E‖ < 1e-12`.
    pub residual: f64,
    /// Lattice points carrying enough weight to determine `ε`.
    pub supported: Vec<bool>,
    /// Set when the normal equations needed a ridge to solve.
    pub ill_conditioned: bool,
}

/// Relative degree below which a lattice point is left out of the fit.
const SUPPORT_THRESHOLD: f64 = 1e-24;

/// Least-squares fit of `E(x, x') ≈ [ε(x) - ε(x')] ρ(x, x')`.
///
/// Minimizes `Σ |E - (ε_a - ε_b) ρ_ab|²`, i.e. the ratio `E/ρ` weighted by
/// `|ρ|²`. The normal equations are the graph Laplacian of `|ρ|²`; the
/// constant mode is pinned by a degree-weighted mean before shifting to the
/// gauge `ε(x₀) = 0`.
pub fn locality_fit(e: &CMatrix, rho: &DensityMatrix) -> Result<LocalityFit> {
    if rho.basis() != Basis::Position {
        return Err(Error::Unsupported("locality fit needs the position basis".into()));
    }
    let n = rho.dim();
    if e.dim() != n {
        return Err(Error::ShapeMismatch { expected: (n, n), found: (e.dim(), e.dim()) });
    }
    let r = rho.matrix();
    let e_norm = e.frobenius();
    let scale = r.as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::Singular);
    }
    // Work with ρ/max|ρ| to keep the Laplacian O(1).
    let q = |a: usize, b: usize| (r.get(a, b) / scale).norm_sqr();
    let degree: Vec<f64> = (0..n).map(|a| (0..n).filter(|&b| b != a).map(|b| q(a, b)).sum()).collect();
    let dmax = degree.iter().copied().fold(0.0, f64::max);
    let supported: Vec<bool> = degree.iter().map(|&d| d > SUPPORT_THRESHOLD * dmax).collect();
    let idx: Vec<usize> = (0..n).filter(|&a| supported[a]).collect();
    let m = idx.len();
    let mut epsilon = vec![0.0; n];
    let mut ill_conditioned = false;
    if m >= 2 {
        let dsum: f64 = idx.iter().map(|&a| degree[a]).sum();
        let mut lap = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for (u, &a) in idx.iter().enumerate() {
            for (v, &b) in idx.iter().enumerate() {
                let pin = degree[a] * degree[b] / dsum;
                lap[u * m + v] = if u == v { degree[a] + pin } else { pin - q(a, b) };
            }
            rhs[u] = (0..n)
                .filter(|&b| b != a)
                .map(|b| ((e.get(a, b) / scale).conj() * (r.get(a, b) / scale)).re)
                .sum();
        }
        let sol = match cholesky_solve(&lap, &rhs) {
            Ok(s) => s,
            Err(_) => {
                ill_conditioned = true;
                let ridge = 1e-12 * degree.iter().copied().fold(0.0, f64::max);
                for u in 0..m {
                    lap[u * m + u] += ridge;
                }
                cholesky_solve(&lap, &rhs)?
            }
        };
        let gauge = sol[0];
        for (u, &a) in idx.iter().enumerate() {
            epsilon[a] = sol[u] - gauge;
        }
    } else {
        ill_conditioned = true;
    }
    let residual = if e_norm < 1e-12 {
        0.0
    } else {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += (e.get(a, b) - r.get(a, b) * (epsilon[a] - epsilon[b])).norm_sqr();
            }
        }
        s.sqrt() / e_norm
    };
    Ok(LocalityFit { epsilon, residual, supported, ill_conditioned })
}

/// Evolves `ψ` under `law` and reports unitarity diagnostics of the
/// coarse-grained state at `t = 0` and every `sample_every` steps.
pub fn unitarity_monitor(
    psi: &ClassicalWaveFunction,
    potential: &Potential,
    law: Law,
    dt: f64,
    mass: f64,
    n_steps: usize,
    sample_every: usize,
) -> Result<Vec<UnitarityReport>> {
    if sample_every == 0 {
        return Err(Error::InvalidParameter("sample_every must be positive".into()));
    }
    let prop = Propagator::new(psi.grid(), potential, EvolutionConfig { law, dt, mass })?;
    let mut field = partial_fourier(psi).into_field();
    let mut reports = Vec::new();
    let mut trace0 = None;
    let mut step = 0;
    loop {
        let two_point = PositionBasisWaveFunction::general(field.clone())?;
        let rho = coarse_grain(&two_point);
        let e = coupling_term_e(&two_point, potential);
        let fit = locality_fit(&e, &rho)?;
        let tr = rho.trace();
        let t0 = *trace0.get_or_insert(tr);
        reports.push(UnitarityReport {
            time: step as f64 * dt,
            e_norm: kernel_norm(&e, psi.grid().dx()),
            locality_residual: fit.residual,
            epsilon_fit: fit.epsilon,
            purity: rho.purity(),
            trace_drift: (tr - t0).abs(),
        });
        if step >= n_steps {
            break;
        }
        let k = sample_every.min(n_steps - step);
        prop.evolve(&mut field, k);
        step += k;
    }
    Ok(reports)
}

/// Output of [`factorization_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factorization {
    pub purity: f64,
    /// Largest operator eigenvalue of the coarse-grained state.
    pub best_rank1_fidelity: f64,
}

impl Factorization {
    pub fn is_pure(&self) -> bool {
        self.purity > 1.0 - 1e-6 && self.best_rank1_fidelity > 1.0 - 1e-6
    }
}

/// Purity and leading eigenvalue of the density matrix of `ψ̃`.
pub fn factorization_check(psi: &PositionBasisWaveFunction) -> Factorization {
    let rho = coarse_grain(psi);
    let e = rho.eigen();
    let top = e.values.last().copied().unwrap_or(0.0);
    Factorization { purity: rho.purity(), best_rank1_fidelity: top / rho.trace() }
}

/// `‖(ρ₊ - ρ₋)/2dt + i[H, ρ₀]‖ · dt`, Hilbert-Schmidt, for
/// `H = P²/2m + V(X)`, from three states a step apart.
pub fn von_neumann_residual(
    rho_prev: &DensityMatrix,
    rho: &DensityMatrix,
    rho_next: &DensityMatrix,
    potential: &Potential,
    mass: f64,
    dt: f64,
) -> Result<f64> {
    let g = *rho.grid();
    let n = g.n_x();
    let field = Field2D::new(g, Axes::XY, rho.matrix().as_slice().to_vec())?;
    let dxx = spectral_derivative(&field, Axis::X, 2)?.field;
    let dyy = spectral_derivative(&field, Axis::Y, 2)?.field;
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            // [H, ρ](x, x') = -(∂_x² - ∂_x'²)ρ/2m + (V(x) - V(x'))ρ
            let comm = -(dxx.at(a, b) - dyy.at(a, b)) / (2.0 * mass)
                + rho.matrix().get(a, b) * (potential.value(g.x(a)) - potential.value(g.x(b)));
            let dot = (rho_next.matrix().get(a, b) - rho_prev.matrix().get(a, b)) / (2.0 * dt);
            s += (dot + Complex64::new(0.0, 1.0) * comm).norm_sqr();
        }
    }
    Ok(s.sqrt() * g.dx() * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::states::{gaussian_packet, harmonic_eigenstate, QuantumWaveFunction};
    use crate::transforms::{mixed_state_embed, pure_state_embed};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_two_point(g: Grid, seed: u64) -> PositionBasisWaveFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = Field2D::from_fn(g, Axes::XY, |x, y| {
            let env = (-(x * x + y * y) / 3.0).exp();
            Complex64::new(env * (1.0 + c[0] * x + c[1] * y + c[2] * x * y), env * (c[3] * x + c[4] * y + c[5] * x * x))
        });
        PositionBasisWaveFunction::general(f).unwrap()
    }

    /// `W(x,y) - W(x',y)` for `V = λx⁴/8` written out by hand.
    fn quartic_difference(lambda: f64, x: f64, xp: f64, y: f64) -> f64 {
        lambda / 16.0 * (2.0 * (x - xp) * y.powi(3) - 2.0 * (x.powi(3) - xp.powi(3)) * y + x.powi(4) - xp.powi(4))
    }

    #[test]
    fn quadratic_potential_has_no_coupling() {
        let g = Grid::centered(32, 12.0).unwrap();
        for seed in 0..4 {
            let psi = random_two_point(g, seed);
            let e = coupling_term_e(&psi, &Potential::harmonic(0.3, -0.2, 1.7));
            let peak = e.as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(peak < 1e-10, "{peak}");
        }
    }

    #[test]
    fn quartic_coupling_matches_direct_sum() {
        let g = Grid::centered(32, 12.0).unwrap();
        let lambda = 0.8;
        let v = Potential::quartic(0.0, lambda);
        let psi = random_two_point(g, 7);
        let e = coupling_term_e(&psi, &v);
        let n = g.n_x();
        let mut err: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    s += psi.field().at(a, c) * psi.field().at(b, c).conj() * quartic_difference(lambda, g.x(a), g.x(b), g.x(c));
                }
                s *= g.dx();
                err = err.max((s - e.get(a, b)).norm());
                peak = peak.max(s.norm());
            }
            assert!(e.get(a, a).norm() < 1e-12);
        }
        assert!(peak > 1e-3 && err < 1e-12 * peak.max(1.0), "{err} {peak}");
        assert!(e.hermitian_defect() > 0.0);
        for a in 0..n {
            for b in 0..n {
                assert!((e.get(a, b) + e.get(b, a).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_state_is_local_with_quartic_epsilon() {
        let g = Grid::centered(64, 16.0).unwrap();
        let lambda = 0.5;
        let q = harmonic_eigenstate(&g, 0, 1.0, 1.0).unwrap();
        let psi = partial_fourier(&pure_state_embed(&q));
        let rho = coarse_grain(&psi);
        let e = coupling_term_e(&psi, &Potential::quartic(0.0, lambda));
        let fit = locality_fit(&e, &rho).unwrap();
        assert!(fit.residual < 1e-8, "{}", fit.residual);
        let c = g.n_x() / 2;
        for a in 0..g.n_x() {
            if rho.matrix().get(a, a).re < 1e-6 * rho.matrix().get(c, c).re {
                continue;
            }
            let expect = lambda / 16.0 * (g.x(a).powi(4) - g.x(c).powi(4));
            let got = fit.epsilon[a] - fit.epsilon[c];
            assert!((got - expect).abs() <= 1e-4 * expect.abs().max(1e-3), "{a}: {got} {expect}");
        }
    }

    #[test]
    fn generic_state_violates_locality() {
        let g = Grid::centered(32, 12.0).unwrap();
        let psi = random_two_point(g, 11);
        let rho = coarse_grain(&psi);
        let e = coupling_term_e(&psi, &Potential::quartic(0.0, 1.0));
        let fit = locality_fit(&e, &rho).unwrap();
        assert!(fit.residual > 0.01, "{}", fit.residual);
    }

    #[test]
    fn quadratic_fit_is_trivial() {
        let g = Grid::centered(32, 12.0).unwrap();
        let psi = random_two_point(g, 3);
        let rho = coarse_grain(&psi);
        let fit = locality_fit(&coupling_term_e(&psi, &Potential::harmonic(0.0, 0.0, 1.0)), &rho).unwrap();
        assert_eq!(fit.residual, 0.0);
        assert!(fit.epsilon.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn mixture_of_eigenstates_has_half_purity() {
        let g = Grid::centered(64, 16.0).unwrap();
        let a = harmonic_eigenstate(&g, 0, 1.0, 1.0).unwrap();
        let b = harmonic_eigenstate(&g, 1, 1.0, 1.0).unwrap();
        let n = g.n_x();
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = (a.values()[i] * a.values()[j].conj() + b.values()[i] * b.values()[j].conj()) * 0.5;
                m.set(i, j, v);
            }
        }
        let rho = DensityMatrix::new(g, Basis::Position, m).unwrap();
        let psi = mixed_state_embed(&rho).unwrap();
        let f = factorization_check(&partial_fourier(&psi));
        assert!((f.purity - 0.5).abs() < 1e-8, "{}", f.purity);
        assert!(!f.is_pure());
        let pure = factorization_check(&partial_fourier(&pure_state_embed(&a)));
        assert!(pure.is_pure());
    }

    #[test]
    fn gaussian_purity_peaks_at_minimal_product() {
        let g = Grid::centered(128, 24.0).unwrap();
        let purity = |dx: f64, dp: f64| factorization_check(&partial_fourier(&gaussian_packet(&g, 0.0, 0.0, dx, dp).unwrap())).purity;
        assert!((purity(0.5, 0.5) - 1.0).abs() < 1e-10);
        assert!((purity(0.8, 0.3125) - 1.0).abs() < 1e-10);
        assert!(purity(0.7, 0.7) < 0.99);
        assert!(purity(1.0, 0.5) < 0.99);
    }

    #[test]
    fn monitor_contrasts_the_laws() {
        let g = Grid::centered(64, 16.0).unwrap();
        let q = QuantumWaveFunction::from_fn(g, |x| Complex64::new((-(x - 1.0).powi(2) / 2.0).exp(), 0.0)).unwrap();
        let psi = pure_state_embed(&q);
        let quartic = Potential::quartic(1.0, 1.0);
        let weyl = unitarity_monitor(&psi, &quartic, Law::Weyl, 0.01, 1.0, 200, 50).unwrap();
        assert_eq!(weyl.len(), 5);
        assert!(weyl.iter().all(|r| (r.purity - 1.0).abs() < 1e-6 && r.trace_drift < 1e-10));
        let liou = unitarity_monitor(&psi, &quartic, Law::Liouville, 0.01, 1.0, 200, 50).unwrap();
        assert!(liou.last().unwrap().purity < 1.0 - 1e-3, "{}", liou.last().unwrap().purity);
        assert!(liou.iter().all(|r| r.trace_drift < 1e-10));
        let harm = unitarity_monitor(&psi, &Potential::harmonic(0.0, 0.0, 1.0), Law::Liouville, 0.01, 1.0, 200, 100).unwrap();
        assert!(harm.iter().all(|r| (r.purity - 1.0).abs() < 1e-6 && r.e_norm < 1e-10));
    }

    #[test]
    fn weyl_law_obeys_von_neumann() {
        let g = Grid::centered(64, 16.0).unwrap();
        let v = Potential::quartic(1.0, 0.5);
        let psi = partial_fourier(&gaussian_packet(&g, 0.5, 0.3, 0.6, 0.6).unwrap());
        let dt = 1e-3;
        let prop = Propagator::new(&g, &v, EvolutionConfig { law: Law::Weyl, dt, mass: 1.0 }).unwrap();
        let mut f = psi.field().clone();
        let mut states = Vec::new();
        for _ in 0..3 {
            states.push(coarse_grain(&PositionBasisWaveFunction::general(f.clone()).unwrap()));
            prop.step(&mut f);
        }
        let res = von_neumann_residual(&states[0], &states[1], &states[2], &v, 1.0, dt).unwrap();
        assert!(res < 1e-6 * (states[1].purity().sqrt()), "{res}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn locality_residual_is_gauge_invariant(seed in 0u64..500, shift in -5.0f64..5.0) {
            let g = Grid::centered(16, 8.0).unwrap();
            let psi = random_two_point(g, seed);
            let rho = coarse_grain(&psi);
            let e = coupling_term_e(&psi, &Potential::quartic(0.0, 1.0));
            let fit = locality_fit(&e, &rho).unwrap();
            let resid = |eps: &[f64]| {
                let mut s = 0.0;
                for a in 0..16 {
                    for b in 0..16 {
                        s += (e.get(a, b) - rho.matrix().get(a, b) * (eps[a] - eps[b])).norm_sqr();
                    }
                }
                s.sqrt() / e.frobenius()
            };
            let shifted: Vec<f64> = fit.epsilon.iter().map(|v| v + shift).collect();
            prop_assert!((resid(&shifted) - fit.residual).abs() < 1e-12);
            prop_assert!((resid(&fit.epsilon) - fit.residual).abs() < 1e-12);
            let eps = &fit.epsilon;
            let mut bumped = eps.to_vec();
            bumped[5] += 1e-3;
            prop_assert!(resid(&bumped) >= fit.residual - 1e-12);
        }
    }
}
