//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always print; the process
//! exits nonzero if any criterion fails.

use std::error::Error;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use phasespace::oracles::{fringe_state, quantum_variances, random_pure_state};
use phasespace::runner::{random_classical, run};
use phasespace::parse_config;
use phasespace_core::diagnostics::{coupling_term_e, locality_fit, unitarity_monitor};
use phasespace_core::evolution::{hw_step, liouville_step, EvolutionConfig, Law, Propagator, SchrodingerPropagator};
use phasespace_core::observables::{
    energy, fringe_visibility, measurement_correlation, measurement_correlation_operator, quantum_dispersion_identity,
    sharpened_position_distribution,
};
use phasespace_core::states::{
    gaussian_packet, gaussian_quantum, harmonic_eigenstate, ClassicalWaveFunction, DensityMatrix, PositionBasisWaveFunction,
    QuantumWaveFunction,
};
use phasespace_core::transforms::{
    coarse_grain, inverse_partial_fourier_field, partial_fourier, pure_state_embed, quantum_transform, quantum_transform_direct,
    wigner_of_density,
};
use phasespace_core::{Complex64, Field2D, Grid, Potential};

type Outcome = Result<(bool, String), Box<dyn Error>>;

struct Criterion {
    id: u32,
    name: &'static str,
    check: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "gaussian width law", check: width_law },
    Criterion { id: 2, name: "heisenberg minimum", check: heisenberg_minimum },
    Criterion { id: 3, name: "purity at factorization", check: purity_at_factorization },
    Criterion { id: 4, name: "pipeline equivalence", check: pipeline_equivalence },
    Criterion { id: 5, name: "quadratic-potential law equivalence", check: quadratic_law_equivalence },
    Criterion { id: 6, name: "stationary states", check: stationary_states },
    Criterion { id: 7, name: "schrodinger consistency", check: schrodinger_consistency },
    Criterion { id: 8, name: "momentum-dispersion identity", check: dispersion_identity },
    Criterion { id: 9, name: "unitarity contrast", check: unitarity_contrast },
    Criterion { id: 10, name: "locality fit", check: locality },
    Criterion { id: 11, name: "sharpened observables", check: sharpened },
    Criterion { id: 12, name: "measurement correlation", check: correlation },
    Criterion { id: 13, name: "conservation suite", check: conservation },
    Criterion { id: 14, name: "determinism", check: determinism },
];

fn main() -> ExitCode {
    let mut failed = 0;
    for c in CRITERIA {
        let start = std::time::Instant::now();
        let (ok, detail) = match (c.check)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} {:>2} {}: {} ({secs:.1}s)", if ok { "PASS" } else { "FAIL" }, c.id, c.name, detail);
        failed += usize::from(!ok);
    }
    println!("acceptance: {} passed, {} failed", CRITERIA.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn field_state(field: &Field2D) -> Result<ClassicalWaveFunction, Box<dyn Error>> {
    Ok(ClassicalWaveFunction::new(*field.grid(), inverse_partial_fourier_field(field)?.real_parts())?)
}

fn field_rho(field: &Field2D) -> Result<DensityMatrix, Box<dyn Error>> {
    Ok(coarse_grain(&PositionBasisWaveFunction::new(field.clone())?))
}

/// `⟨ψ|ρ|ψ⟩`.
fn overlap(rho: &DensityMatrix, psi: &QuantumWaveFunction) -> f64 {
    let n = rho.dim();
    let v = psi.values();
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            s += v[a].conj() * rho.matrix().get(a, b) * v[b];
        }
    }
    s.re * rho.spacing() * rho.spacing()
}

fn width_law() -> Outcome {
    let g = Grid::centered(256, 32.0)?;
    let mut worst = 0.0f64;
    for d in [0.35, 0.5, 0.7, 1.0] {
        let (vx, vp) = quantum_variances(&gaussian_packet(&g, 0.0, 0.0, d, d)?);
        let th = d * d + 1.0 / (16.0 * d * d);
        worst = worst.max((vx - th).abs() / th).max((vp - th).abs() / th);
    }
    Ok((worst < 1e-5, format!("max relative error {worst:.2e} (tol 1e-5)")))
}

fn heisenberg_minimum() -> Outcome {
    let g = Grid::centered(256, 48.0)?;
    let (mut worst, mut lowest, mut at_quarter) = (0.0f64, f64::INFINITY, 0.0);
    for s in [1.0 / 16.0, 0.125, 0.25, 0.5, 1.0f64] {
        let (vx, vp) = quantum_variances(&gaussian_packet(&g, 0.0, 0.0, s.sqrt(), s.sqrt())?);
        let m = (vx * vp).sqrt();
        worst = worst.max((m - (s + 1.0 / (16.0 * s))).abs());
        lowest = lowest.min(m);
        if s == 0.25 {
            at_quarter = m;
        }
    }
    // Off-diagonal shapes from the width sweep are part of the suite too.
    let g2 = Grid::centered(256, 32.0)?;
    for (dx, dp) in [(0.35, 0.7), (0.7, 0.35), (1.0, 0.5)] {
        let (vx, vp) = quantum_variances(&gaussian_packet(&g2, 0.0, 0.0, dx, dp)?);
        lowest = lowest.min((vx * vp).sqrt());
    }
    let ok = worst < 1e-5 && (at_quarter - 0.5).abs() < 1e-6 && lowest >= 0.5 - 1e-6;
    Ok((ok, format!("max error {worst:.2e}, value at s=1/4 {at_quarter:.12}, lowest {lowest:.12}")))
}

fn purity_at_factorization() -> Outcome {
    let g = Grid::centered(128, 24.0)?;
    let (xb, pb, d) = (0.5, 0.25, 0.5);
    let rho = coarse_grain(&partial_fourier(&gaussian_packet(&g, xb, pb, d, d)?));
    let purity = rho.purity();
    let e = rho.eigen();
    let top = QuantumWaveFunction::new(g, e.vector(g.n_x() - 1))?;
    let closed = QuantumWaveFunction::from_fn(g, |x| {
        Complex64::from_polar((4.0 * d * d / PI).powf(0.25) * (-2.0 * d * d * (x - xb).powi(2)).exp(), pb * x)
    })?;
    let fid = top.fidelity(&closed);
    let ok = (purity - 1.0).abs() < 1e-6 && fid > 1.0 - 1e-6;
    Ok((ok, format!("purity {purity:.12}, fidelity {fid:.12}")))
}

fn pipeline_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for n in [16, 32] {
        let g = Grid::centered(n, n as f64 / 4.0)?;
        for seed in 0..10 {
            let psi = random_classical(&g, 100 + seed, 5, 0.8)?;
            let d = quantum_transform_direct(&psi)?;
            let f = quantum_transform(&psi);
            worst = d.values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
        }
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.2e} over 20 states (tol 1e-10)")))
}

fn quadratic_law_equivalence() -> Outcome {
    let g = Grid::centered(32, 12.0)?;
    let v = Potential::harmonic(0.0, 0.0, 1.0);
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let mut psi = random_classical(&g, 200 + seed, 4, 0.9)?;
        for _ in 0..5 {
            let a = hw_step(&psi, &v, 1e-2, 1.0)?;
            let b = liouville_step(&psi, &v, 1e-2, 1.0)?;
            worst = worst.max(a.distance(&b));
            psi = a;
        }
    }
    Ok((worst < 1e-12, format!("max per-step difference {worst:.2e} (tol 1e-12)")))
}

fn stationary_states() -> Outcome {
    let g = Grid::centered(128, 20.0)?;
    let v = Potential::harmonic(0.0, 0.0, 1.0);
    let prop = Propagator::new(&g, &v, EvolutionConfig { law: Law::Weyl, dt: 1e-3, mass: 1.0 })?;
    let mut worst = 0.0f64;
    for n in 0..3 {
        let psi = pure_state_embed(&harmonic_eigenstate(&g, n, 1.0, 1.0)?);
        let mut field = partial_fourier(&psi).into_field();
        prop.evolve(&mut field, 1000);
        worst = worst.max(field_state(&field)?.distance(&psi));
    }
    Ok((worst < 1e-5, format!("max drift {worst:.2e} after 1000 steps (tol 1e-5)")))
}

fn schrodinger_consistency() -> Outcome {
    let g = Grid::centered(128, 16.0)?;
    let v = Potential::quartic(1.0, 1.0);
    let (dt, steps) = (1e-3, 1000);
    let q0 = gaussian_quantum(&g, 1.0, 0.5, 0.6)?;
    let prop = Propagator::new(&g, &v, EvolutionConfig { law: Law::Weyl, dt, mass: 1.0 })?;
    let mut field = partial_fourier(&pure_state_embed(&q0)).into_field();
    prop.evolve(&mut field, steps);
    let rho = field_rho(&field)?;
    let q1 = SchrodingerPropagator::new(&g, &v, dt, 1.0)?.evolve(&q0, steps);
    let fid = overlap(&rho, &q1);
    Ok((fid > 1.0 - 1e-4, format!("fidelity {fid:.12} at t = 1 (tol 1 - 1e-4)")))
}

fn dispersion_identity() -> Outcome {
    let g = Grid::centered(128, 24.0)?;
    let states = [
        gaussian_packet(&g, 0.5, 0.3, 0.7, 0.5)?,
        pure_state_embed(&harmonic_eigenstate(&g, 2, 1.0, 1.0)?),
        random_classical(&g, 3, 6, 1.0)?,
    ];
    let mut worst = 0.0f64;
    for psi in &states {
        worst = worst.max(quantum_dispersion_identity(psi)?.residual.abs());
    }
    Ok((worst < 1e-8, format!("max residual {worst:.2e} (tol 1e-8)")))
}

fn unitarity_contrast() -> Outcome {
    let g = Grid::centered(64, 16.0)?;
    let q = QuantumWaveFunction::from_fn(g, |x| Complex64::new((-(x - 1.0).powi(2) / 2.0).exp(), 0.0))?;
    let psi = pure_state_embed(&q);
    let quartic = Potential::quartic(1.0, 1.0);
    let harmonic = Potential::harmonic(0.0, 0.0, 1.0);
    let dev = |r: &[phasespace_core::diagnostics::UnitarityReport]| r.iter().map(|s| (s.purity - 1.0).abs()).fold(0.0, f64::max);
    let li = unitarity_monitor(&psi, &quartic, Law::Liouville, 0.01, 1.0, 300, 10)?;
    let hw = unitarity_monitor(&psi, &quartic, Law::Weyl, 0.01, 1.0, 300, 10)?;
    let ha = unitarity_monitor(&psi, &harmonic, Law::Liouville, 0.01, 1.0, 300, 10)?;
    let li_min = li.iter().map(|s| s.purity).fold(f64::INFINITY, f64::min);
    let (hw_dev, ha_dev) = (dev(&hw), dev(&ha));
    let ok = li_min < 0.999 && hw_dev < 1e-6 && ha_dev < 1e-6;
    Ok((ok, format!("Liouville quartic min purity {li_min:.6}, hw deviation {hw_dev:.2e}, harmonic Liouville deviation {ha_dev:.2e}")))
}

fn locality() -> Outcome {
    let g = Grid::centered(64, 16.0)?;
    let lambda = 1.0;
    let q = harmonic_eigenstate(&g, 0, 1.0, 1.0)?;
    let psi = partial_fourier(&pure_state_embed(&q));
    let rho = coarse_grain(&psi);
    let fit = locality_fit(&coupling_term_e(&psi, &Potential::quartic(0.0, lambda)), &rho)?;
    let c = g.n_x() / 2;
    let mut worst = 0.0f64;
    for a in g.n_x() / 4..3 * g.n_x() / 4 {
        if a == c {
            continue;
        }
        let expect = lambda / 16.0 * (g.x(a).powi(4) - g.x(c).powi(4));
        let got = fit.epsilon[a] - fit.epsilon[c];
        worst = worst.max((got - expect).abs() / expect.abs());
    }
    Ok((worst < 1e-3, format!("max relative error {worst:.2e} on the central half (tol 1e-3), fit residual {:.2e}", fit.residual)))
}

fn sharpened() -> Outcome {
    let g = Grid::centered(128, 32.0)?;
    let k0 = 2.0;
    let q = fringe_state(&g, k0)?;
    let n = g.n_x();
    let dens: Vec<f64> = q.values().iter().map(|v| v.norm_sqr()).collect();
    // Classical endpoint as a direct lattice sum over r = 2m·dx with |r| < L/2.
    let mut conv: Vec<f64> = (0..n)
        .map(|a| (0..n / 2).map(|k| dens[(a + k + n - n / 4) % n] * dens[(a + n / 4 + n - k) % n]).sum::<f64>())
        .collect();
    let norm: f64 = conv.iter().sum::<f64>() * g.dx();
    conv.iter_mut().for_each(|v| *v /= norm);
    let p0 = sharpened_position_distribution(&q, 0.0)?;
    let p1 = sharpened_position_distribution(&q, PI / 2.0)?;
    let e0 = p0.iter().zip(&dens).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let e1 = p1.iter().zip(&conv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let vis: Vec<f64> = (0..=4)
        .map(|m| Ok(fringe_visibility(&g, &sharpened_position_distribution(&q, m as f64 * PI / 8.0)?, 2.0 * k0)))
        .collect::<Result<_, phasespace_core::Error>>()?;
    let monotone = vis.windows(2).all(|w| w[1] <= w[0]);
    let ok = e0 < 1e-6 && e1 < 1e-6 && monotone;
    let vis_text: Vec<String> = vis.iter().map(|v| format!("{v:.4}")).collect();
    Ok((ok, format!("endpoint errors {e0:.2e} / {e1:.2e}, visibility [{}]", vis_text.join(", "))))
}

fn correlation() -> Outcome {
    let g = Grid::centered(256, 32.0)?;
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let rho = DensityMatrix::pure(&random_pure_state(&g, seed)?);
        let a = measurement_correlation(&wigner_of_density(&rho)?);
        let b = measurement_correlation_operator(&rho)?;
        worst = worst.max((a - b).abs());
    }
    Ok((worst < 1e-8, format!("max difference {worst:.2e} over 10 states (tol 1e-8)")))
}

fn conservation() -> Outcome {
    let g = Grid::centered(64, 16.0)?;
    let v = Potential::quartic(1.0, 1.0);
    let dt = 1e-3;
    let prop = Propagator::new(&g, &v, EvolutionConfig { law: Law::Weyl, dt, mass: 1.0 })?;
    let mut field = partial_fourier(&gaussian_packet(&g, 1.0, 0.0, 0.5, 0.5)?).into_field();
    let e0 = energy(&field_rho(&field)?, &v, 1.0)?;
    let (mut norm_step, mut e_drift) = (0.0f64, 0.0f64);
    let mut prev = field.norm_sqr();
    for step in 1..=10_000 {
        prop.step(&mut field);
        let now = field.norm_sqr();
        norm_step = norm_step.max((now - prev).abs());
        prev = now;
        if step <= 1000 && step % 100 == 0 {
            e_drift = e_drift.max((energy(&field_rho(&field)?, &v, 1.0)? - e0).abs() / e0.abs());
        }
    }
    let imag = inverse_partial_fourier_field(&field)?.imag_fraction();
    let ok = norm_step < 1e-12 && e_drift < 1e-6 && imag < 1e-10;
    Ok((ok, format!("norm drift/step {norm_step:.2e}, energy drift {e_drift:.2e}, imaginary fraction {imag:.2e}")))
}

fn determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir()?;
    let mut compared = 0;
    let mut names: Vec<_> = fs::read_dir(&configs)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    names.sort();
    for path in &names {
        let text = fs::read_to_string(path)?;
        let mut outs = Vec::new();
        for k in 0..2 {
            let mut cfg = parse_config(&text, &configs)?;
            let dir = tmp.path().join(format!("{}-{k}", path.file_stem().unwrap_or_default().to_string_lossy()));
            cfg.output.directory = dir.clone();
            run(&cfg)?;
            outs.push(dir);
        }
        let mut csvs: Vec<_> = fs::read_dir(&outs[0])?
            .filter_map(|e| e.ok().map(|e| e.file_name()))
            .filter(|n| n.to_string_lossy().ends_with(".csv"))
            .collect();
        csvs.sort();
        for name in csvs {
            if fs::read(outs[0].join(&name))? != fs::read(outs[1].join(&name))? {
                return Ok((false, format!("{} differs for {}", name.to_string_lossy(), path.display())));
            }
            compared += 1;
        }
    }
    let ok = compared > 0;
    Ok((ok, format!("{compared} CSV files byte-identical across {} configs", names.len())))
}
