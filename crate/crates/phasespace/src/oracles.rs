//! Named reference computations printed by `phasespace oracle <name>`.
//!
//! Each oracle pits the library against an independent route: a closed
//! form, a brute-force sum or a trajectory ensemble.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use phasespace_core::diagnostics::{coupling_term_e, unitarity_monitor};
use phasespace_core::evolution::{quantum_correction_c, quantum_correction_from_amplitude, EvolutionConfig, Law, Propagator};
use phasespace_core::observables::{
    classical_expectation, energy_pure, fringe_visibility, measurement_correlation, measurement_correlation_operator,
    quantum_dispersion_identity, quantum_expectation, sharpened_position_distribution, MomentRequest,
};
use phasespace_core::phase_ext::{phased_momentum_moments, phased_quantum_transform, PhasedClassicalWaveFunction};
use phasespace_core::states::{gaussian_packet, harmonic_eigenstate, ClassicalWaveFunction, DensityMatrix, QuantumWaveFunction};
use phasespace_core::transforms::{
    inverse_partial_fourier_field, partial_fourier, pure_state_embed, quantum_transform, quantum_transform_direct, wigner_of_density,
};
use phasespace_core::{Complex64, Grid, Potential, Result};

use crate::csvout::Table;
use crate::runner::random_classical;

pub struct Oracle {
    pub name: &'static str,
    pub about: &'static str,
    pub run: fn() -> Result<Table>,
}

pub const ORACLES: &[Oracle] = &[
    Oracle { name: "gaussian-widths", about: "quantum variances of Gaussian packets vs Δ² + 1/(16Δ²)", run: gaussian_widths },
    Oracle { name: "width-products", about: "Δ̃xΔ̃p over a product sweep vs s + 1/(16s)", run: width_products },
    Oracle { name: "pipeline-equivalence", about: "direct fourfold sum vs Fourier/coarse-grain/Wigner pipeline", run: pipeline_equivalence },
    Oracle { name: "characteristics", about: "Liouville grid moments vs a sampled trajectory ensemble", run: characteristics },
    Oracle { name: "quartic-coupling", about: "E(x,x') vs the explicit quartic difference summed directly", run: quartic_coupling },
    Oracle { name: "phase-translation", about: "linear phase 2k₀z: momentum shift and Wigner translation", run: phase_translation },
    Oracle { name: "correction-routes", about: "logarithmic-derivative vs amplitude form of the quartic correction", run: correction_routes },
    Oracle { name: "dispersion-identity", about: "⟨P_Q²⟩ - ⟨p²⟩ - ⟨P_s²⟩/4 on several states", run: dispersion_identity },
    Oracle { name: "oscillator-energies", about: "tr(Hρ) of embedded eigenstates vs n + 1/2", run: oscillator_energies },
    Oracle { name: "measurement-correlation", about: "∫zpW vs ½tr({X,P}ρ) on random pure states", run: measurement_correlations },
    Oracle { name: "sharpened-visibility", about: "fringe visibility of a two-wave state over β", run: sharpened_visibility },
    Oracle { name: "purity-contrast", about: "purity under hw and Liouville evolution, quartic and harmonic", run: purity_contrast },
];

pub fn find(name: &str) -> Option<&'static Oracle> {
    ORACLES.iter().find(|o| o.name == name)
}

fn header(cols: &[&str]) -> Table {
    Table::new(cols.iter().map(|s| s.to_string()).collect())
}

fn moment(s: &str) -> MomentRequest {
    s.parse().expect("static moment")
}

/// Centred quantum variances `(var z, var p)`.
pub fn quantum_variances(psi: &ClassicalWaveFunction) -> (f64, f64) {
    let w = quantum_transform(psi);
    let e = |s: &str| quantum_expectation(&w, &moment(s));
    (e("z^2") - e("z").powi(2), e("p^2") - e("p").powi(2))
}

fn gaussian_widths() -> Result<Table> {
    let g = Grid::centered(256, 32.0)?;
    let mut t = header(&["delta", "var_x", "var_x_theory", "rel_err_x", "var_p", "var_p_theory", "rel_err_p"]);
    for d in [0.35, 0.5, 0.7, 1.0] {
        let (vx, vp) = quantum_variances(&gaussian_packet(&g, 0.0, 0.0, d, d)?);
        let th = d * d + 1.0 / (16.0 * d * d);
        t.push(vec![d, vx, th, (vx - th).abs() / th, vp, th, (vp - th).abs() / th]);
    }
    Ok(t)
}

fn width_products() -> Result<Table> {
    let g = Grid::centered(256, 48.0)?;
    let mut t = header(&["product", "measured", "theory", "abs_err"]);
    for s in [1.0 / 16.0, 0.125, 0.25, 0.5, 1.0f64] {
        let (vx, vp) = quantum_variances(&gaussian_packet(&g, 0.0, 0.0, s.sqrt(), s.sqrt())?);
        let m = (vx * vp).sqrt();
        let th = s + 1.0 / (16.0 * s);
        t.push(vec![s, m, th, (m - th).abs()]);
    }
    Ok(t)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn pipeline_equivalence() -> Result<Table> {
    let mut t = header(&["n_x", "seed", "max_deviation"]);
    for n in [16, 32] {
        let g = Grid::centered(n, n as f64 / 4.0)?;
        for seed in 0..4 {
            let psi = random_classical(&g, seed, 5, 0.8)?;
            let d = quantum_transform_direct(&psi)?;
            let f = quantum_transform(&psi);
            t.push(vec![n as f64, seed as f64, max_abs_diff(d.values(), f.values())]);
        }
    }
    Ok(t)
}

/// Velocity-Verlet trajectories sampled from the Gaussian `w` of a packet.
fn ensemble_moments(v: &Potential, mass: f64, start: (f64, f64, f64, f64), times: &[f64], n: usize, seed: u64) -> Vec<[f64; 3]> {
    let (xb, pb, dx, dp) = start;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nz = Normal::new(xb, dx).expect("positive width");
    let np = Normal::new(pb, dp).expect("positive width");
    let mut pts: Vec<(f64, f64)> = (0..n).map(|_| (nz.sample(&mut rng), np.sample(&mut rng))).collect();
    let h = 1e-3;
    let mut now = 0.0;
    let mut out = Vec::new();
    for &target in times {
        let steps = ((target - now) / h).round() as usize;
        for (z, p) in pts.iter_mut() {
            for _ in 0..steps {
                *p -= 0.5 * h * v.force_gradient(*z);
                *z += h * *p / mass;
                *p -= 0.5 * h * v.force_gradient(*z);
            }
        }
        now += steps as f64 * h;
        let m = n as f64;
        out.push([
            pts.iter().map(|q| q.0).sum::<f64>() / m,
            pts.iter().map(|q| q.1).sum::<f64>() / m,
            pts.iter().map(|q| q.0 * q.0).sum::<f64>() / m,
        ]);
    }
    out
}

fn characteristics() -> Result<Table> {
    let g = Grid::centered(128, 24.0)?;
    let v = Potential::quartic(1.0, 0.5);
    let start = (1.0, 0.5, 0.6, 0.6);
    let psi = gaussian_packet(&g, start.0, start.1, start.2, start.3)?;
    let dt = 1e-3;
    let prop = Propagator::new(&g, &v, EvolutionConfig { law: Law::Liouville, dt, mass: 1.0 })?;
    let times = [0.25, 0.5, 0.75, 1.0];
    let ens = ensemble_moments(&v, 1.0, start, &times, 20000, 7);
    let mut field = partial_fourier(&psi).into_field();
    let mut t = header(&["time", "z_grid", "z_ensemble", "p_grid", "p_ensemble", "z2_grid", "z2_ensemble"]);
    let mut now = 0usize;
    for (k, &time) in times.iter().enumerate() {
        let target = (time / dt).round() as usize;
        prop.evolve(&mut field, target - now);
        now = target;
        let cur = ClassicalWaveFunction::new(g, inverse_partial_fourier_field(&field)?.real_parts())?;
        let e = |s: &str| classical_expectation(&cur, &moment(s));
        t.push(vec![time, e("z"), ens[k][0], e("p"), ens[k][1], e("z^2"), ens[k][2]]);
    }
    Ok(t)
}

fn quartic_coupling() -> Result<Table> {
    let g = Grid::centered(32, 12.0)?;
    let lambda = 1.0;
    let v = Potential::quartic(0.0, lambda);
    let n = g.n_x();
    let mut t = header(&["seed", "e_max", "max_deviation"]);
    for seed in 0..3 {
        let psi = partial_fourier(&random_classical(&g, seed, 4, 1.0)?);
        let e = coupling_term_e(&psi, &v);
        let (mut dev, mut peak) = (0.0f64, 0.0f64);
        for a in 0..n {
            for b in 0..n {
                let (x, xp) = (g.x(a), g.x(b));
                let mut s = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    let y = g.x(c);
                    let diff = lambda / 16.0 * (2.0 * (x - xp) * y.powi(3) - 2.0 * (x.powi(3) - xp.powi(3)) * y + x.powi(4) - xp.powi(4));
                    s += psi.field().at(a, c) * psi.field().at(b, c).conj() * diff;
                }
                s *= g.dx();
                dev = dev.max((s - e.get(a, b)).norm());
                peak = peak.max(s.norm());
            }
        }
        t.push(vec![seed as f64, peak, dev]);
    }
    Ok(t)
}

fn phase_translation() -> Result<Table> {
    let g = Grid::centered(128, 24.0)?;
    let psi = gaussian_packet(&g, 0.3, -0.2, 0.8, 0.6)?;
    let base_state = PhasedClassicalWaveFunction::from_real(&psi, |_, _| 0.0)?;
    let base = phased_momentum_moments(&base_state)?;
    let w0 = phased_quantum_transform(&base_state)?;
    let mut t = header(&["k0", "momentum_shift", "wigner_translation_error"]);
    for m in 1..=4usize {
        let k0 = m as f64 * g.dp();
        let s = PhasedClassicalWaveFunction::from_real(&psi, |z, _| 2.0 * k0 * z)?;
        let shift = phased_momentum_moments(&s)?.p_first - base.p_first;
        let w1 = phased_quantum_transform(&s)?;
        let mut err = 0.0f64;
        for i in 0..g.n_z() {
            for j in m..g.n_p() {
                err = err.max((w1.at(i, j) - w0.at(i, j - m)).abs());
            }
        }
        t.push(vec![k0, shift, err]);
    }
    Ok(t)
}

fn correction_routes() -> Result<Table> {
    let g = Grid::centered(128, 24.0)?;
    let v = Potential::quartic(1.0, 1.0);
    let mut t = header(&["delta_x", "delta_p", "c_max", "bulk_deviation", "masked_fraction"]);
    for (dx, dp) in [(0.7, 0.7), (0.8, 0.6), (1.0, 0.9)] {
        let psi = gaussian_packet(&g, 0.4, 0.1, dx, dp)?;
        let c = quantum_correction_c(&g, &psi.density(), &v)?;
        let a = quantum_correction_from_amplitude(&psi, &v)?;
        let peak = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
        // Deviation on the bulk, where w exceeds 1e-6 of its peak.
        let w = psi.density();
        let wmax = w.iter().copied().fold(0.0, f64::max);
        let dev = c.values.iter().zip(&a).zip(&w).filter(|(_, &w)| w > 1e-6 * wmax).map(|((x, y), _)| (x - y).abs()).fold(0.0, f64::max);
        t.push(vec![dx, dp, peak, dev, c.masked_fraction]);
    }
    Ok(t)
}

fn dispersion_identity() -> Result<Table> {
    let g = Grid::centered(128, 24.0)?;
    let mut t = header(&["state", "quantum", "classical", "statistical", "residual"]);
    let states = [
        ("gaussian", gaussian_packet(&g, 0.5, 0.3, 0.7, 0.5)?),
        ("eigenstate_2", pure_state_embed(&harmonic_eigenstate(&g, 2, 1.0, 1.0)?)),
        ("random", random_classical(&g, 3, 6, 1.0)?),
    ];
    for (label, psi) in states {
        let d = quantum_dispersion_identity(&psi)?;
        t.push_labeled(label, vec![d.quantum, d.classical, d.statistical, d.residual]);
    }
    Ok(t)
}

fn oscillator_energies() -> Result<Table> {
    let g = Grid::centered(128, 20.0)?;
    let v = Potential::harmonic(0.0, 0.0, 1.0);
    let mut t = header(&["n", "energy", "exact"]);
    for n in 0..4 {
        let q = harmonic_eigenstate(&g, n, 1.0, 1.0)?;
        t.push(vec![n as f64, energy_pure(&q, &v, 1.0)?, n as f64 + 0.5]);
    }
    Ok(t)
}

/// Seeded smooth complex state with a quadratic phase.
pub fn random_pure_state(grid: &Grid, seed: u64) -> Result<QuantumWaveFunction> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, s, k, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.6..1.2), rng.gen_range(-1.0..1.0), rng.gen_range(-0.3..0.3));
    let (x1, a1) = (rng.gen_range(-1.5..1.5), rng.gen_range(-0.8..0.8));
    QuantumWaveFunction::from_fn(*grid, |x| {
        let env = (-(x - x0).powi(2) / (4.0 * s * s)).exp() + a1 * (-(x - x1).powi(2) / (2.0 * s * s)).exp();
        Complex64::from_polar(1.0, k * x + c * x * x) * env
    })
}

fn measurement_correlations() -> Result<Table> {
    // The coherence tail of these states needs |r| up to about 16 to fall below 1e-9.
    let g = Grid::centered(256, 32.0)?;
    let mut t = header(&["seed", "wigner", "operator", "abs_diff"]);
    for seed in 0..10 {
        let rho = DensityMatrix::pure(&random_pure_state(&g, seed)?);
        let a = measurement_correlation(&wigner_of_density(&rho)?);
        let b = measurement_correlation_operator(&rho)?;
        t.push(vec![seed as f64, a, b, (a - b).abs()]);
    }
    Ok(t)
}

/// `g(x) cos(k₀x)` with a broad envelope: the two-wave fringe state.
pub fn fringe_state(grid: &Grid, k0: f64) -> Result<QuantumWaveFunction> {
    QuantumWaveFunction::from_fn(*grid, |x| Complex64::new((-(x * x) / 16.0).exp() * (k0 * x).cos(), 0.0))
}

fn sharpened_visibility() -> Result<Table> {
    let g = Grid::centered(128, 32.0)?;
    let k0 = 2.0;
    let q = fringe_state(&g, k0)?;
    let mut t = header(&["beta", "visibility"]);
    for m in 0..=4 {
        let beta = m as f64 * PI / 8.0;
        let d = sharpened_position_distribution(&q, beta)?;
        t.push(vec![beta, fringe_visibility(&g, &d, 2.0 * k0)]);
    }
    Ok(t)
}

fn purity_contrast() -> Result<Table> {
    let g = Grid::centered(64, 16.0)?;
    let q = QuantumWaveFunction::from_fn(g, |x| Complex64::new((-(x - 1.0).powi(2) / 2.0).exp(), 0.0))?;
    let psi = pure_state_embed(&q);
    let quartic = Potential::quartic(1.0, 1.0);
    let harmonic = Potential::harmonic(0.0, 0.0, 1.0);
    let hw = unitarity_monitor(&psi, &quartic, Law::Weyl, 0.01, 1.0, 300, 50)?;
    let li = unitarity_monitor(&psi, &quartic, Law::Liouville, 0.01, 1.0, 300, 50)?;
    let ha = unitarity_monitor(&psi, &harmonic, Law::Liouville, 0.01, 1.0, 300, 50)?;
    let mut t = header(&["time", "purity_hw_quartic", "purity_liouville_quartic", "purity_liouville_harmonic"]);
    for ((a, b), c) in hw.iter().zip(&li).zip(&ha) {
        t.push(vec![a.time, a.purity, b.purity, c.purity]);
    }
    Ok(t)
}
