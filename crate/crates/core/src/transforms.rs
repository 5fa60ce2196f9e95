//! Maps between classical wave functions, two-point fields, density
//! matrices and Wigner functions.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::grid::{pair_sources, slot_sources, xy_to_zr, zr_to_xy, Axes, Field2D, Grid, RowTransform};
use crate::linalg::CMatrix;
use crate::states::{
    operator_sqrt, Basis, ClassicalWaveFunction, DensityMatrix, PositionBasisWaveFunction, QuantumWaveFunction,
    WignerFunction,
};
use crate::{Error, Result};

/// Largest `n_x²` accepted by [`quantum_transform_direct`].
pub const DIRECT_LIMIT: usize = 64 * 64;

/// Complex-linear partial Fourier transform of any (z,p) field to (x,y):
/// `f̃(x, y) = Σ_p e^{ip(x-y)} f((x+y)/2, p) dp/2π`.
pub fn partial_fourier_field(f: &Field2D) -> Result<Field2D> {
    crate::grid::expect_axes(f, Axes::ZP)?;
    let rt = RowTransform::new(f.grid());
    let mut zr = f.clone().into_values();
    for (i, row) in zr.chunks_mut(rt.n_p()).enumerate() {
        rt.p_to_r(i, row);
    }
    zr_to_xy(&Field2D::new(*f.grid(), Axes::ZR, zr)?)
}

/// Inverse of [`partial_fourier_field`].
pub fn inverse_partial_fourier_field(f: &Field2D) -> Result<Field2D> {
    let zr = xy_to_zr(f)?;
    let rt = RowTransform::new(f.grid());
    let mut v = zr.into_values();
    for (i, row) in v.chunks_mut(rt.n_p()).enumerate() {
        rt.r_to_p(i, row);
    }
    Field2D::new(*f.grid(), Axes::ZP, v)
}

/// `ψ̃(x, y)` of a classical wave function; hermitian because `ψ` is real.
pub fn partial_fourier(psi: &ClassicalWaveFunction) -> PositionBasisWaveFunction {
    let f = partial_fourier_field(&psi.to_field()).expect("(z,p) field by construction");
    PositionBasisWaveFunction::general(f).expect("(x,y) field by construction")
}

/// `ψ(z, p)` from a hermitian `ψ̃`; the imaginary residue is dropped after
/// checking it is below `1e-9` of the peak.
pub fn inverse_partial_fourier(psi: &PositionBasisWaveFunction) -> Result<ClassicalWaveFunction> {
    ClassicalWaveFunction::from_field(&inverse_partial_fourier_field(psi.field())?)
}

/// `ρ(x, x') = Σ_y ψ̃(x, y) ψ̃*(x', y) dx`.
pub fn coarse_grain(psi: &PositionBasisWaveFunction) -> DensityMatrix {
    let m = psi.matrix();
    let mut rho = m.matmul_adjoint(&m);
    rho.scale(psi.grid().dx());
    DensityMatrix::unchecked(*psi.grid(), Basis::Position, rho)
}

/// `W(z, p) = Σ_u e^{-ipu} ρ(z + u/2, z - u/2) du` on the phase-space grid of
/// the matrix lattice.
pub fn wigner_of_density(rho: &DensityMatrix) -> Result<WignerFunction> {
    if rho.basis() != Basis::Position {
        return Err(Error::Unsupported("Wigner transform needs the position basis".into()));
    }
    let f = Field2D::new(*rho.grid(), Axes::XY, rho.matrix().as_slice().to_vec())?;
    let w = inverse_partial_fourier_field(&f)?;
    WignerFunction::new(*rho.grid(), w.real_parts())
}

/// Fast quantum transform: partial Fourier, coarse grain, Wigner.
pub fn quantum_transform(psi: &ClassicalWaveFunction) -> WignerFunction {
    wigner_of_density(&coarse_grain(&partial_fourier(psi))).expect("position basis by construction")
}

/// Brute-force quantum transform, summed directly over the two momentum
/// shifts and the two position shifts. Limited to `n_x² ≤ 64²`.
pub fn quantum_transform_direct(psi: &ClassicalWaveFunction) -> Result<WignerFunction> {
    let f = direct_transform(psi.grid(), |i, j| Complex64::new(psi.at(i, j), 0.0))?;
    WignerFunction::new(*psi.grid(), f.iter().map(|v| v.re).collect())
}

/// Direct sum for a complex amplitude; `W` is the real part.
pub(crate) fn direct_transform(grid: &Grid, amp: impl Fn(usize, usize) -> Complex64) -> Result<Vec<Complex64>> {
    let g = *grid;
    let n = g.n_x();
    if n * n > DIRECT_LIMIT {
        return Err(Error::TooLarge { points: n * n, limit: DIRECT_LIMIT });
    }
    let (nz, np) = (g.n_z(), g.n_p());
    // kern[(i*np + k)*np + j] = e^{i p_j r_{ik}}
    let mut kern = vec![Complex64::new(0.0, 0.0); nz * np * np];
    for i in 0..nz {
        for k in 0..np {
            for j in 0..np {
                kern[(i * np + k) * np + j] = Complex64::from_polar(1.0, g.p(j) * g.r(i, k));
            }
        }
    }
    let psi: Vec<Complex64> = (0..nz * np).map(|idx| amp(idx / np, idx % np)).collect();
    let ds = g.dp() / (2.0 * PI);
    let (dx, dr) = (g.dx(), g.dr());
    let mut out = vec![Complex64::new(0.0, 0.0); nz * np];
    for i in 0..nz {
        for k in 0..np {
            // ρ-combination feeding slot (i, k).
            let (gsrc, gm) = slot_sources(&g, i, k);
            let mut rho_slot = Complex64::new(0.0, 0.0);
            for &(a, a2, gc) in &gsrc[..gm] {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..n {
                    let (s1, m1) = pair_sources(&g, a, b);
                    let (s2, m2) = pair_sources(&g, a2, b);
                    for &(i1, k1, c1) in &s1[..m1] {
                        for &(i2, k2, c2) in &s2[..m2] {
                            let c = c1 * c2.conj();
                            let k1s = &kern[(i1 * np + k1) * np..(i1 * np + k1 + 1) * np];
                            let k2s = &kern[(i2 * np + k2) * np..(i2 * np + k2 + 1) * np];
                            let r1 = &psi[i1 * np..(i1 + 1) * np];
                            let r2 = &psi[i2 * np..(i2 + 1) * np];
                            let mut s = Complex64::new(0.0, 0.0);
                            for j1 in 0..np {
                                let t = k1s[j1] * r1[j1];
                                for j2 in 0..np {
                                    s += t * (k2s[j2] * r2[j2]).conj();
                                }
                            }
                            acc += c * s;
                        }
                    }
                }
                rho_slot += gc * acc * (dx * ds * ds);
            }
            for j in 0..np {
                let e = kern[(i * np + k) * np + j].conj();
                out[i * np + j] += e * rho_slot * dr;
            }
        }
    }
    Ok(out)
}

/// `ψ(z, p)` whose two-point field is `ψ_Q(x) ψ_Q*(y)`.
pub fn pure_state_embed(psi: &QuantumWaveFunction) -> ClassicalWaveFunction {
    let rho = DensityMatrix::pure(psi);
    let f = Field2D::new(*psi.grid(), Axes::XY, rho.matrix().as_slice().to_vec()).expect("square");
    let w = inverse_partial_fourier_field(&f).expect("(x,y) field");
    ClassicalWaveFunction::new(*psi.grid(), w.real_parts()).expect("finite")
}

/// `ψ(z, p)` whose two-point field is the principal square root of `ρ`.
/// Errors if `ρ` has an eigenvalue below `-1e-8`.
pub fn mixed_state_embed(rho: &DensityMatrix) -> Result<ClassicalWaveFunction> {
    if rho.basis() != Basis::Position {
        return Err(Error::Unsupported("embedding needs the position basis".into()));
    }
    let sigma = operator_sqrt(rho)?;
    let f = Field2D::new(*rho.grid(), Axes::XY, sigma.into_vec())?;
    ClassicalWaveFunction::from_field(&inverse_partial_fourier_field(&f)?)
}

/// `ρ̃(z, z') = Σ_p ψ(z, p) ψ(z', p) dp/2π` on the z rows. The result lives
/// on the lattice with spacing `dz` (`2 n_x` points).
pub fn momentum_trace_coarse_grain(psi: &ClassicalWaveFunction) -> Result<DensityMatrix> {
    let g = psi.grid();
    let fine = Grid::new(g.n_z(), g.x_min(), g.length())?;
    let (nz, np) = (g.n_z(), g.n_p());
    let ds = g.dp() / (2.0 * PI);
    let mut m = CMatrix::zeros(nz);
    for a in 0..nz {
        let ra = &psi.values()[a * np..(a + 1) * np];
        for b in a..nz {
            let rb = &psi.values()[b * np..(b + 1) * np];
            let v: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum::<f64>() * ds;
            m.set(a, b, Complex64::new(v, 0.0));
            m.set(b, a, Complex64::new(v, 0.0));
        }
    }
    Ok(DensityMatrix::unchecked(fine, Basis::Position, m))
}
