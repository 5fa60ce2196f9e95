//! Config-driven runs: build the initial state, evolve, sample observables
//! and diagnostics, write CSV artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phasespace_core::diagnostics::{coupling_term_e, kernel_norm, locality_fit};
use phasespace_core::evolution::{EvolutionConfig, Propagator};
use phasespace_core::observables::{
    classical_expectation, classical_marginals, energy, fringe_visibility, measurement_correlation, quantum_dispersion_identity,
    quantum_expectation, sharpened_position_distribution, wigner_marginals, MomentRequest,
};
use phasespace_core::states::{
    gaussian_packet, harmonic_eigenstate, ClassicalWaveFunction, DensityMatrix, PositionBasisWaveFunction, QuantumWaveFunction,
    WignerFunction,
};
use phasespace_core::transforms::{coarse_grain, inverse_partial_fourier_field, partial_fourier, pure_state_embed, quantum_transform, wigner_of_density};
use phasespace_core::{Axes, Field2D, Grid, Potential};

use crate::config::{ConfigError, InitialState, PotentialKind, RunConfig, SweepConfig};
use crate::csvout::Table;
use crate::error::RunError;
use crate::gridfile::{self, GridFile};

/// Imaginary residue of `ψ` above which a run aborts.
const MAX_IMAG_FRACTION: f64 = 1e-6;

/// Grid, potential and initial state of a validated config.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub grid: Grid,
    pub potential: Potential,
    pub psi: ClassicalWaveFunction,
}

fn constraint(what: &str, e: impl std::fmt::Display) -> RunError {
    RunError::Config(ConfigError { line: None, message: format!("{what}: {e}") })
}

/// Seeded smooth real state: `modes` Gaussian bumps with random amplitudes
/// in `[-1, 1]`, centres within `|z| < L/6` and `|p| < p_max/4`.
pub fn random_classical(grid: &Grid, seed: u64, modes: usize, width: f64) -> Result<ClassicalWaveFunction, phasespace_core::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zc = grid.x_min() + 0.5 * grid.length();
    let bumps: Vec<(f64, f64, f64)> = (0..modes)
        .map(|_| {
            let c = rng.gen_range(-1.0..1.0);
            let z = zc + rng.gen_range(-1.0..1.0) * grid.length() / 6.0;
            let p = rng.gen_range(-1.0..1.0) * grid.p_max() / 4.0;
            (c, z, p)
        })
        .collect();
    let s2 = 2.0 * width * width;
    ClassicalWaveFunction::from_fn(*grid, |z, p| {
        bumps.iter().map(|&(c, z0, p0)| c * (-((z - z0).powi(2) + (p - p0).powi(2)) / s2).exp()).sum()
    })
    .normalized()
}

fn read_table(path: &Path, n: usize) -> Result<Vec<f64>, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    let fail = |message: String| RunError::Format { path: path.into(), message };
    let values: Vec<f64> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| l.parse::<f64>().map_err(|_| fail(format!("line {i}: `{l}` is not a number"))))
        .collect::<Result<_, _>>()?;
    if values.len() != n {
        return Err(fail(format!("expected {n} values (one per z row), found {}", values.len())));
    }
    Ok(values)
}

fn same_grid(file: &Grid, cfg: &Grid, path: &Path) -> Result<(), RunError> {
    if file != cfg {
        return Err(constraint(
            &format!("initial state {}", path.display()),
            format!("file grid {file:?} differs from configured grid {cfg:?}"),
        ));
    }
    Ok(())
}

/// Builds everything a run needs; failures here are config errors unless
/// a file cannot be read.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared, RunError> {
    let grid = cfg.grid.grid();
    let potential = match &cfg.potential.kind {
        PotentialKind::Free => Potential::Free,
        PotentialKind::Harmonic { a, b, c } => Potential::harmonic(*a, *b, *c),
        PotentialKind::Quartic { c, lambda } => Potential::quartic(*c, *lambda),
        PotentialKind::Tabulated { file } => {
            Potential::tabulated(&grid, &read_table(file, grid.n_z())?).map_err(|e| constraint("tabulated potential", e))?
        }
    };
    let psi = match &cfg.initial {
        InitialState::Gaussian { x_bar, p_bar, delta_x, delta_p } => {
            gaussian_packet(&grid, *x_bar, *p_bar, *delta_x, *delta_p).map_err(|e| constraint("gaussian initial state", e))?
        }
        InitialState::Eigenstate { n, omega } => {
            let q = harmonic_eigenstate(&grid, *n, cfg.potential.mass, *omega).map_err(|e| constraint("eigenstate", e))?;
            pure_state_embed(&q)
        }
        InitialState::Random { seed, modes, width } => {
            random_classical(&grid, *seed, *modes, *width).map_err(|e| constraint("random initial state", e))?
        }
        InitialState::ClassicalFile { file } => {
            let psi = gridfile::read_classical(file)?;
            same_grid(psi.grid(), &grid, file)?;
            psi
        }
        InitialState::QuantumFile { file } => {
            let q = gridfile::read_quantum(file)?;
            same_grid(q.grid(), &grid, file)?;
            pure_state_embed(&q)
        }
    };
    if let Some(s) = &cfg.sweep {
        for (dx, dp) in sweep_widths(s) {
            gaussian_packet(&grid, s.x_bar, s.p_bar, dx, dp).map_err(|e| constraint("sweep", e))?;
        }
    }
    Ok(Prepared { grid, potential, psi })
}

fn sweep_widths(s: &SweepConfig) -> Vec<(f64, f64)> {
    s.products.iter().map(|&p| ((p * s.ratio).sqrt(), (p / s.ratio).sqrt())).collect()
}

/// Coarse-grained views of one sample.
struct Sample {
    psi: ClassicalWaveFunction,
    imag_fraction: f64,
    rho: DensityMatrix,
    wigner: WignerFunction,
    two_point: PositionBasisWaveFunction,
}

fn sample(field: &Field2D) -> Result<Sample, RunError> {
    let zp = inverse_partial_fourier_field(field)?;
    let imag_fraction = zp.imag_fraction();
    if imag_fraction > MAX_IMAG_FRACTION {
        return Err(phasespace_core::Error::NotReal { imag_fraction }.into());
    }
    let psi = ClassicalWaveFunction::new(*field.grid(), zp.real_parts())?;
    let two_point = PositionBasisWaveFunction::general(field.clone())?;
    let rho = coarse_grain(&two_point);
    let wigner = wigner_of_density(&rho)?;
    Ok(Sample { psi, imag_fraction, rho, wigner, two_point })
}

/// Output files of a finished run.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub samples: usize,
    pub files: Vec<PathBuf>,
}

fn write_table(dir: &Path, name: &str, t: &Table, summary: &mut RunSummary) -> Result<(), RunError> {
    let path = dir.join(name);
    t.write(&path)?;
    summary.files.push(path);
    Ok(())
}

/// Runs a config and writes its CSV artifacts and optional snapshots into
/// the output directory. Does not write the manifest.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let prepared = prepare(cfg)?;
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let mut summary = RunSummary::default();
    let Prepared { grid, potential, psi } = prepared;
    let ev = &cfg.evolution;
    let obs = &cfg.observables;
    let diag = &cfg.diagnostics;
    let mass = cfg.potential.mass;

    if cfg.output.snapshots {
        let path = dir.join("psi_initial.grid");
        gridfile::write(&path, &GridFile::from_field(&psi.to_field(), false))?;
        summary.files.push(path);
    }

    let mut ts_header = vec!["step".to_string(), "time".into(), "norm".into(), "imag_fraction".into()];
    ts_header.extend(obs.moments.iter().map(|m| format!("quantum:{}", m.0)));
    ts_header.extend(obs.classical_moments.iter().map(|m| format!("classical:{}", m.0)));
    if obs.energy {
        ts_header.push("energy".into());
    }
    if obs.dispersion {
        ts_header.push("dispersion_residual".into());
    }
    if obs.correlation {
        ts_header.push("measurement_correlation".into());
    }
    let mut timeseries = Table::new(ts_header);
    let mut dg_header = vec!["step".to_string(), "time".into()];
    if diag.purity {
        dg_header.extend(["purity".into(), "trace_drift".into()]);
    }
    if diag.coupling {
        dg_header.push("e_norm".into());
    }
    if diag.locality {
        dg_header.push("locality_residual".into());
    }
    if diag.factorization {
        dg_header.push("rank1_fidelity".into());
    }
    let with_diagnostics = dg_header.len() > 2;
    let mut diagnostics = Table::new(dg_header);

    let prop = if ev.n_steps > 0 {
        Some(Propagator::new(&grid, &potential, EvolutionConfig { law: ev.law, dt: ev.dt, mass })?)
    } else {
        None
    };
    let mut field = partial_fourier(&psi).into_field();
    let mut step = 0usize;
    let mut trace0 = None;
    let last = loop {
        let s = sample(&field)?;
        let t = step as f64 * ev.dt;
        let mut row = vec![step as f64, t, s.psi.norm_sqr(), s.imag_fraction];
        row.extend(obs.moments.iter().map(|m| quantum_expectation(&s.wigner, &m.1)));
        row.extend(obs.classical_moments.iter().map(|m| classical_expectation(&s.psi, &m.1)));
        if obs.energy {
            row.push(energy(&s.rho, &potential, mass)?);
        }
        if obs.dispersion {
            row.push(quantum_dispersion_identity(&s.psi)?.residual);
        }
        if obs.correlation {
            row.push(measurement_correlation(&s.wigner));
        }
        timeseries.push(row);
        if with_diagnostics {
            let mut row = vec![step as f64, t];
            if diag.purity {
                let tr = s.rho.trace();
                row.extend([s.rho.purity(), (tr - *trace0.get_or_insert(tr)).abs()]);
            }
            if diag.coupling || diag.locality {
                let e = coupling_term_e(&s.two_point, &potential);
                if diag.coupling {
                    row.push(kernel_norm(&e, grid.dx()));
                }
                if diag.locality {
                    row.push(locality_fit(&e, &s.rho)?.residual);
                }
            }
            if diag.factorization {
                let top = s.rho.eigen().values.last().copied().unwrap_or(0.0);
                row.push(top / s.rho.trace());
            }
            diagnostics.push(row);
        }
        summary.samples += 1;
        match &prop {
            Some(p) if step < ev.n_steps => {
                let k = ev.sample_every.min(ev.n_steps - step);
                p.evolve(&mut field, k);
                step += k;
            }
            _ => break s,
        }
    };
    write_table(dir, "timeseries.csv", &timeseries, &mut summary)?;
    if with_diagnostics {
        write_table(dir, "diagnostics.csv", &diagnostics, &mut summary)?;
    }
    if obs.marginals {
        write_table(dir, "marginals.csv", &marginals_table(&grid, &last), &mut summary)?;
    }
    if !obs.sharpened_beta.is_empty() {
        let (dist, vis) = sharpened_tables(&grid, &last, &obs.sharpened_beta, obs.fringe_wavenumber)?;
        write_table(dir, "sharpened.csv", &dist, &mut summary)?;
        if let Some(v) = vis {
            write_table(dir, "visibility.csv", &v, &mut summary)?;
        }
    }
    if let Some(s) = &cfg.sweep {
        write_table(dir, "sweep.csv", &sweep_table(&grid, s)?, &mut summary)?;
    }
    if cfg.output.snapshots {
        let files = [
            ("psi_final.grid", GridFile::from_field(&last.psi.to_field(), false)),
            ("wigner_final.grid", GridFile::from_field(&last.wigner.to_field(), false)),
            ("rho_final.grid", GridFile::from_field(&Field2D::new(grid, Axes::XY, last.rho.matrix().as_slice().to_vec())?, true)),
        ];
        for (name, f) in files {
            let path = dir.join(name);
            gridfile::write(&path, &f)?;
            summary.files.push(path);
        }
    }
    Ok(summary)
}

fn marginals_table(grid: &Grid, s: &Sample) -> Table {
    let c = classical_marginals(&s.psi);
    let q = wigner_marginals(&s.wigner);
    let mut t = Table::new(vec!["axis".into(), "coordinate".into(), "classical".into(), "quantum".into()]);
    for i in 0..grid.n_z() {
        t.push_labeled("z", vec![grid.z(i), c.position[i], q.position[i]]);
    }
    for j in 0..grid.n_p() {
        t.push_labeled("p", vec![grid.p(j), c.momentum[j], q.momentum[j]]);
    }
    t
}

/// Leading eigenvector of a coarse-grained state that must be pure.
fn pure_state(grid: &Grid, rho: &DensityMatrix) -> Result<QuantumWaveFunction, RunError> {
    let purity = rho.purity();
    if purity < 1.0 - 1e-6 {
        return Err(phasespace_core::Error::Unsupported(format!(
            "sharpened distribution needs a pure coarse-grained state, purity is {purity}"
        ))
        .into());
    }
    let e = rho.eigen();
    Ok(QuantumWaveFunction::new(*grid, e.vector(grid.n_x() - 1))?)
}

fn sharpened_tables(grid: &Grid, s: &Sample, betas: &[f64], q: Option<f64>) -> Result<(Table, Option<Table>), RunError> {
    let psi = pure_state(grid, &s.rho)?;
    let dists: Vec<Vec<f64>> = betas.iter().map(|&b| sharpened_position_distribution(&psi, b)).collect::<Result<_, _>>()?;
    let mut header = vec!["x".to_string()];
    header.extend(betas.iter().map(|b| format!("beta={b:?}")));
    let mut t = Table::new(header);
    for a in 0..grid.n_x() {
        let mut row = vec![grid.x(a)];
        row.extend(dists.iter().map(|d| d[a]));
        t.push(row);
    }
    let vis = q.map(|q| {
        let mut v = Table::new(vec!["beta".into(), "visibility".into()]);
        for (b, d) in betas.iter().zip(&dists) {
            v.push(vec![*b, fringe_visibility(grid, d, q)]);
        }
        v
    });
    Ok((t, vis))
}

fn sweep_table(grid: &Grid, s: &SweepConfig) -> Result<Table, RunError> {
    let mut t = Table::new(
        ["product", "delta_x", "delta_p", "var_x", "var_x_theory", "var_p", "var_p_theory", "width_product", "width_product_theory", "purity"]
            .map(String::from)
            .to_vec(),
    );
    let m = |e: &str| e.parse::<MomentRequest>().expect("static moment");
    let (z1, z2, p1, p2) = (m("z"), m("z^2"), m("p"), m("p^2"));
    for (prod, (dx, dp)) in s.products.iter().zip(sweep_widths(s)) {
        let psi = gaussian_packet(grid, s.x_bar, s.p_bar, dx, dp)?;
        let w = quantum_transform(&psi);
        let vx = quantum_expectation(&w, &z2) - quantum_expectation(&w, &z1).powi(2);
        let vp = quantum_expectation(&w, &p2) - quantum_expectation(&w, &p1).powi(2);
        let vx_th = dx * dx + 1.0 / (16.0 * dp * dp);
        let vp_th = dp * dp + 1.0 / (16.0 * dx * dx);
        let purity = coarse_grain(&partial_fourier(&psi)).purity();
        t.push(vec![*prod, dx, dp, vx, vx_th, vp, vp_th, (vx * vp).sqrt(), prod + 1.0 / (16.0 * prod), purity]);
    }
    Ok(t)
}

/// Writes `manifest.txt`: resolved config, version, wall time and status.
pub fn write_manifest(cfg: &RunConfig, version: &str, seconds: f64, outcome: &Result<RunSummary, RunError>) -> Result<PathBuf, RunError> {
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let mut text = String::from("# phasespace run manifest\n");
    text.push_str(&cfg.resolved());
    text.push_str(&format!("\n[manifest]\nversion = {version}\nwall_time_seconds = {seconds:.6}\n"));
    match outcome {
        Ok(s) => {
            text.push_str(&format!("status = ok\nexit_code = 0\nsamples = {}\n", s.samples));
            for f in &s.files {
                text.push_str(&format!("artifact = \"{}\"\n", f.file_name().unwrap_or_default().to_string_lossy()));
            }
        }
        Err(e) => text.push_str(&format!("status = failed\nexit_code = {}\nnote = \"partial run: {}\"\n", e.exit_code(), e.to_string().replace('"', "'"))),
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
    Ok(path)
}

/// `run` followed by the manifest, timing the run.
pub fn run_with_manifest(cfg: &RunConfig, version: &str) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let outcome = run(cfg);
    write_manifest(cfg, version, start.elapsed().as_secs_f64(), &outcome)?;
    outcome
}
