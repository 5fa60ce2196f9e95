//! Expectation values, marginals and the sharpened position observable.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;
use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::fft::Fft;
use crate::grid::{spectral_derivative, Axes, Axis, Field2D};
use crate::potential::Potential;
use crate::states::{Basis, ClassicalWaveFunction, DensityMatrix, QuantumWaveFunction, WignerFunction};
use crate::transforms::quantum_transform;
use crate::{Error, Result};

/// Polynomial `Σ c z^a p^b` of total degree at most 4.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentRequest {
    terms: Vec<(f64, u32, u32)>,
}

impl MomentRequest {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.1 + t.2 > 4) {
            return Err(Error::InvalidParameter(format!("moment z^{} p^{} exceeds degree 4", t.1, t.2)));
        }
        if terms.iter().any(|t| !t.0.is_finite()) {
            return Err(Error::InvalidParameter("non-finite moment coefficient".into()));
        }
        Ok(Self { terms })
    }

    pub fn monomial(a: u32, b: u32) -> Result<Self> {
        Self::new(vec![(1.0, a, b)])
    }

    pub fn terms(&self) -> &[(f64, u32, u32)] {
        &self.terms
    }

    pub fn eval(&self, z: f64, p: f64) -> f64 {
        self.terms.iter().map(|&(c, a, b)| c * z.powi(a as i32) * p.powi(b as i32)).sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.1 + t.2).max().unwrap_or(0)
    }
}

impl FromStr for MomentRequest {
    type Err = Error;

    /// Accepts sums of products such as `z^2 + 0.5*p^2 - z*p`; `x` is an
    /// alias for `z`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(format!("moment `{s}`: {msg}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad("empty expression".into()));
        }
        let mut terms = Vec::new();
        let mut start = 0;
        let bytes = compact.as_bytes();
        let mut pieces = Vec::new();
        for (i, &c) in bytes.iter().enumerate() {
            // A sign splits terms unless it follows an exponent marker.
            if (c == b'+' || c == b'-') && i > 0 && !matches!(bytes[i - 1], b'e' | b'E' | b'^' | b'*') {
                pieces.push(&compact[start..i]);
                start = i;
            }
        }
        pieces.push(&compact[start..]);
        for piece in pieces {
            let (sign, body) = match piece.as_bytes().first() {
                Some(b'-') => (-1.0, &piece[1..]),
                Some(b'+') => (1.0, &piece[1..]),
                _ => (1.0, piece),
            };
            if body.is_empty() {
                return Err(bad("dangling sign".into()));
            }
            let (mut c, mut a, mut b) = (sign, 0u32, 0u32);
            for factor in body.split('*') {
                let (base, exp) = match factor.split_once('^') {
                    Some((base, e)) => (base, e.parse::<u32>().map_err(|_| bad(format!("bad exponent `{e}`")))?),
                    None => (factor, 1),
                };
                match base {
                    "z" | "x" => a += exp,
                    "p" => b += exp,
                    num => {
                        let v: f64 = num.parse().map_err(|_| bad(format!("unknown factor `{num}`")))?;
                        c *= v.powi(exp as i32);
                    }
                }
            }
            terms.push((c, a, b));
        }
        Self::new(terms)
    }
}

impl fmt::Display for MomentRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, &(c, a, b)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}")?;
            if a > 0 {
                write!(f, "*z^{a}")?;
            }
            if b > 0 {
                write!(f, "*p^{b}")?;
            }
        }
        Ok(())
    }
}

/// `∫ F(z, p) ψ² dz dp/2π`.
pub fn classical_expectation(psi: &ClassicalWaveFunction, f: &MomentRequest) -> f64 {
    let g = psi.grid();
    let np = g.n_p();
    psi.values()
        .iter()
        .enumerate()
        .map(|(idx, v)| f.eval(g.z(idx / np), g.p(idx % np)) * v * v)
        .sum::<f64>()
        * psi.weight()
}

/// `∫ F(z, p) W dz dp/2π`.
pub fn quantum_expectation(w: &WignerFunction, f: &MomentRequest) -> f64 {
    let g = w.grid();
    let np = g.n_p();
    w.values()
        .iter()
        .enumerate()
        .map(|(idx, v)| f.eval(g.z(idx / np), g.p(idx % np)) * v)
        .sum::<f64>()
        * w.weight()
}

/// Moments of the statistical operators `X_s = i∂_p`, `P_s = -i∂_z`.
/// First moments are reported as `∫ψ∂ψ`, which vanishes for decaying real `ψ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatisticalMoments {
    pub x_first: f64,
    pub p_first: f64,
    /// `⟨X_s²⟩ = ∫ (∂_p ψ)²`.
    pub x_second: f64,
    /// `⟨P_s²⟩ = ∫ (∂_z ψ)²`.
    pub p_second: f64,
}

pub fn statistical_moments(psi: &ClassicalWaveFunction) -> Result<StatisticalMoments> {
    let f = psi.to_field();
    let dz = spectral_derivative(&f, Axis::Z, 1)?.field;
    let dp = spectral_derivative(&f, Axis::P, 1)?.field;
    let w = psi.weight();
    let mut m = StatisticalMoments { x_first: 0.0, p_first: 0.0, x_second: 0.0, p_second: 0.0 };
    for ((v, a), b) in psi.values().iter().zip(dz.values()).zip(dp.values()) {
        m.p_first += v * a.re;
        m.x_first += v * b.re;
        m.p_second += a.re * a.re;
        m.x_second += b.re * b.re;
    }
    m.x_first *= w;
    m.p_first *= w;
    m.x_second *= w;
    m.p_second *= w;
    Ok(m)
}

/// Both sides of `⟨P_Q²⟩ = ⟨p²⟩ + ⟨P_s²⟩/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionIdentity {
    /// `∫ p² W` with `W` the quantum transform.
    pub quantum: f64,
    /// `∫ p² ψ²`.
    pub classical: f64,
    /// `∫ (∂_z ψ)²`.
    pub statistical: f64,
    pub residual: f64,
}

pub fn quantum_dispersion_identity(psi: &ClassicalWaveFunction) -> Result<DispersionIdentity> {
    let p2 = MomentRequest::monomial(0, 2)?;
    let quantum = quantum_expectation(&quantum_transform(psi), &p2);
    let classical = classical_expectation(psi, &p2);
    let statistical = statistical_moments(psi)?.p_second;
    let residual = (quantum - classical - 0.25 * statistical).abs();
    Ok(DispersionIdentity { quantum, classical, statistical, residual })
}

fn position_basis(rho: &DensityMatrix) -> Result<()> {
    if rho.basis() != Basis::Position {
        return Err(Error::Unsupported("expected a position-basis density matrix".into()));
    }
    Ok(())
}

/// `ρ(x, x)`, normalized by `Σ · dx = 1`.
pub fn position_distribution(rho: &DensityMatrix) -> Result<Vec<f64>> {
    position_basis(rho)?;
    Ok(rho.diagonal())
}

/// `(k, ρ̃(k, k))` in ascending `k`, normalized by `Σ · dk/2π = 1`.
pub fn momentum_distribution(rho: &DensityMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    position_basis(rho)?;
    let m = rho.to_momentum_basis()?;
    let g = rho.grid();
    let n = g.n_x();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.k_lattice(a).total_cmp(&g.k_lattice(b)));
    let diag = m.diagonal();
    Ok((order.iter().map(|&a| g.k_lattice(a)).collect(), order.iter().map(|&a| diag[a]).collect()))
}

/// Weyl-ordered operator expectation `tr(F_s(X, P) ρ)` for degree ≤ 2.
pub fn operator_expectation(rho: &DensityMatrix, f: &MomentRequest) -> Result<f64> {
    position_basis(rho)?;
    if f.degree() > 2 {
        return Err(Error::Unsupported("operator moments above degree 2".into()));
    }
    let g = *rho.grid();
    let n = g.n_x();
    let dx = g.dx();
    let diag = rho.diagonal();
    let (ks, pk) = momentum_distribution(rho)?;
    let field = Field2D::new(g, Axes::XY, rho.matrix().as_slice().to_vec())?;
    // (Pρ)(x, x') = -i ∂_x ρ(x, x')
    let d = spectral_derivative(&field, Axis::X, 1)?.field;
    let mut total = 0.0;
    for &(c, a, b) in f.terms() {
        let v = match (a, b) {
            (0, 0) => diag.iter().sum::<f64>() * dx,
            (a, 0) => (0..n).map(|i| g.x(i).powi(a as i32) * diag[i]).sum::<f64>() * dx,
            (0, b) => ks.iter().zip(&pk).map(|(k, v)| k.powi(b as i32) * v).sum::<f64>() * g.dp() / (2.0 * PI),
            (1, 1) => {
                // Re tr(X P ρ)
                (0..n).map(|i| g.x(i) * (Complex64::new(0.0, -1.0) * d.at(i, i)).re).sum::<f64>() * dx
            }
            _ => unreachable!("degree checked"),
        };
        total += c * v;
    }
    Ok(total)
}

/// `tr(H ρ)` with `H = P²/2m + V(X)`.
pub fn energy(rho: &DensityMatrix, potential: &Potential, mass: f64) -> Result<f64> {
    let g = *rho.grid();
    let kin = operator_expectation(rho, &MomentRequest::monomial(0, 2)?)? / (2.0 * mass);
    let diag = position_distribution(rho)?;
    let pot: f64 = diag.iter().enumerate().map(|(a, v)| potential.value(g.x(a)) * v).sum::<f64>() * g.dx();
    Ok(kin + pot)
}

/// Energy of a pure state.
pub fn energy_pure(psi: &QuantumWaveFunction, potential: &Potential, mass: f64) -> Result<f64> {
    energy(&DensityMatrix::pure(psi), potential, mass)
}

/// Marginals of a phase-space density over the (z,p) grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    /// `∫ f dp/2π` on the `n_z` rows.
    pub position: Vec<f64>,
    /// `∫ f dz` on the `n_p` columns.
    pub momentum: Vec<f64>,
}

fn marginals_of(grid: &crate::Grid, values: &[f64]) -> Marginals {
    let (nz, np) = (grid.n_z(), grid.n_p());
    let mut position = vec![0.0; nz];
    let mut momentum = vec![0.0; np];
    for i in 0..nz {
        for j in 0..np {
            let v = values[i * np + j];
            position[i] += v;
            momentum[j] += v;
        }
    }
    position.iter_mut().for_each(|v| *v *= grid.dp() / (2.0 * PI));
    momentum.iter_mut().for_each(|v| *v *= grid.dz());
    Marginals { position, momentum }
}

/// Marginals of `w = ψ²`.
pub fn classical_marginals(psi: &ClassicalWaveFunction) -> Marginals {
    marginals_of(psi.grid(), &psi.density())
}

/// Marginals of a Wigner function.
pub fn wigner_marginals(w: &WignerFunction) -> Marginals {
    marginals_of(w.grid(), w.values())
}

/// `∫ z p W dz dp/2π`.
pub fn measurement_correlation(w: &WignerFunction) -> f64 {
    quantum_expectation(w, &MomentRequest { terms: vec![(1.0, 1, 1)] })
}

/// `½ tr((XP + PX) ρ)`.
pub fn measurement_correlation_operator(rho: &DensityMatrix) -> Result<f64> {
    operator_expectation(rho, &MomentRequest { terms: vec![(1.0, 1, 1)] })
}

/// `p(x) = ∫ dr |ψ(x + (r/2) sin²β)|² |ψ(x - (r/2)(1 + cos²β))|²` on the
/// lattice, with `r` on multiples of `2dx` in `[-L/2, L/2)`, normalized to
/// `Σ p dx = 1`. Off-lattice values of `ψ` use its band-limited (Fourier)
/// interpolant; the Nyquist mode enters as a cosine.
pub fn sharpened_position_distribution(psi: &QuantumWaveFunction, beta: f64) -> Result<Vec<f64>> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter("β must be finite".into()));
    }
    let g = *psi.grid();
    let n = g.n_x();
    let dens: Vec<f64> = psi.values().iter().map(|v| v.norm_sqr()).collect();
    let mut coef = psi.values().to_vec();
    Fft::new(n)?.forward(&mut coef);
    coef.iter_mut().for_each(|c| *c /= n as f64);
    let s2 = beta.sin().powi(2);
    let c2 = beta.cos().powi(2);
    // |ψ|² at fractional lattice index t.
    let at = |t: f64| -> f64 {
        let f = t.floor();
        if t == f {
            return dens[(f as i64).rem_euclid(n as i64) as usize];
        }
        let theta = 2.0 * PI * t / n as f64;
        let mut v = coef[0];
        for j in 1..n / 2 {
            let jt = theta * j as f64;
            v += coef[j] * Complex64::from_polar(1.0, jt) + coef[n - j] * Complex64::from_polar(1.0, -jt);
        }
        v += coef[n / 2] * (theta * (n / 2) as f64).cos();
        v.norm_sqr()
    };
    let half = (n / 2) as i64;
    let mut out = vec![0.0; n];
    for (a, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for m in -half / 2..half / 2 {
            // r = 2 m dx: offsets in lattice units are m sin²β and -m(1 + cos²β).
            let r = 2.0 * m as f64;
            s += at(a as f64 + 0.5 * r * s2) * at(a as f64 - 0.5 * r * (1.0 + c2));
        }
        *o = s;
    }
    let total: f64 = out.iter().sum::<f64>() * g.dx();
    if !(total > 0.0) {
        return Err(Error::NotNormalized { integral: total });
    }
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// `2 |Σ p(x) e^{iqx} dx| / Σ p(x) dx`: fringe contrast at wavenumber `q`.
pub fn fringe_visibility(grid: &crate::Grid, dist: &[f64], q: f64) -> f64 {
    let total: f64 = dist.iter().sum();
    let c: Complex64 = dist.iter().enumerate().map(|(a, &v)| Complex64::from_polar(v, q * grid.x(a))).sum();
    2.0 * c.norm() / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::states::{gaussian_packet, gaussian_quantum, harmonic_eigenstate};
    use crate::transforms::{coarse_grain, partial_fourier, pure_state_embed};
    use proptest::prelude::*;

    #[test]
    fn parse_moments() {
        let m: MomentRequest = "z^2 + 0.5*p^2 - z*p".parse().unwrap();
        assert_eq!(m.terms(), &[(1.0, 2, 0), (0.5, 0, 2), (-1.0, 1, 1)]);
        let m: MomentRequest = "1e-3*x".parse().unwrap();
        assert_eq!(m.terms(), &[(1e-3, 1, 0)]);
        assert!("z^5".parse::<MomentRequest>().is_err());
        assert!("q".parse::<MomentRequest>().is_err());
        assert!("".parse::<MomentRequest>().is_err());
        assert!((m.eval(2.0, 0.0) - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn gaussian_classical_and_quantum_moments() {
        let g = Grid::centered(256, 32.0).unwrap();
        let (xb, pb, dx, dp) = (0.3, -0.4, 0.7, 0.5);
        let psi = gaussian_packet(&g, xb, pb, dx, dp).unwrap();
        let z2 = MomentRequest::monomial(2, 0).unwrap();
        let p2 = MomentRequest::monomial(0, 2).unwrap();
        assert!((classical_expectation(&psi, &z2) - (xb * xb + dx * dx)).abs() < 1e-12);
        assert!((classical_expectation(&psi, &p2) - (pb * pb + dp * dp)).abs() < 1e-12);
        let w = quantum_transform(&psi);
        let wx = dx * dx + 1.0 / (16.0 * dp * dp);
        let wp = dp * dp + 1.0 / (16.0 * dx * dx);
        assert!((quantum_expectation(&w, &z2) - (xb * xb + wx)).abs() < 1e-10);
        assert!((quantum_expectation(&w, &p2) - (pb * pb + wp)).abs() < 1e-10);
        let s = statistical_moments(&psi).unwrap();
        assert!((s.p_second - 1.0 / (4.0 * dx * dx)).abs() < 1e-10);
        assert!((s.x_second - 1.0 / (4.0 * dp * dp)).abs() < 1e-10);
        assert!(s.x_first.abs() < 1e-12 && s.p_first.abs() < 1e-12);
        let id = quantum_dispersion_identity(&psi).unwrap();
        assert!(id.residual < 1e-10);
    }

    #[test]
    fn ground_state_marginals_differ() {
        let g = Grid::centered(128, 16.0).unwrap();
        let q = harmonic_eigenstate(&g, 0, 1.0, 1.0).unwrap();
        let c = pure_state_embed(&q);
        let rho = DensityMatrix::pure(&q);
        let wq = position_distribution(&rho).unwrap();
        let wc = classical_marginals(&c).position;
        let mut diff: f64 = 0.0;
        for a in 0..g.n_x() {
            let x = g.x(a);
            assert!((wq[a] - (-x * x).exp() / PI.sqrt()).abs() < 1e-12);
            // Classical marginal of the embed: sqrt(2/π) e^{-2x²}.
            let expect = (2.0 / PI).sqrt() * (-2.0 * x * x).exp();
            assert!((wc[2 * a] - expect).abs() < 1e-12);
            diff = diff.max((wq[a] - wc[2 * a]).abs());
        }
        assert!(diff > 0.01);
    }

    #[test]
    fn energy_of_eigenstates() {
        let g = Grid::centered(128, 20.0).unwrap();
        let v = Potential::harmonic(0.0, 0.0, 1.0);
        for n in 0..4 {
            let q = harmonic_eigenstate(&g, n, 1.0, 1.0).unwrap();
            assert!((energy_pure(&q, &v, 1.0).unwrap() - (n as f64 + 0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn momentum_distribution_of_boosted_packet() {
        let g = Grid::centered(128, 24.0).unwrap();
        let q = gaussian_quantum(&g, 0.0, 1.2, 0.8).unwrap();
        let (k, pk) = momentum_distribution(&DensityMatrix::pure(&q)).unwrap();
        let norm: f64 = pk.iter().sum::<f64>() * g.dp() / (2.0 * PI);
        assert!((norm - 1.0).abs() < 1e-12);
        let mean: f64 = k.iter().zip(&pk).map(|(k, v)| k * v).sum::<f64>() * g.dp() / (2.0 * PI);
        assert!((mean - 1.2).abs() < 1e-10);
    }

    #[test]
    fn weyl_moments_match_operators() {
        let g = Grid::centered(128, 24.0).unwrap();
        let q = QuantumWaveFunction::from_fn(g, |x| {
            Complex64::from_polar((-(x - 0.5).powi(2) / 1.2).exp(), 0.7 * x + 0.2 * x * x)
        })
        .unwrap();
        let rho = DensityMatrix::pure(&q);
        let w = crate::transforms::wigner_of_density(&rho).unwrap();
        for s in ["z", "p", "z^2", "p^2", "z*p", "1"] {
            let f: MomentRequest = s.parse().unwrap();
            let a = quantum_expectation(&w, &f);
            let b = operator_expectation(&rho, &f).unwrap();
            assert!((a - b).abs() < 1e-9, "{s}: {a} vs {b}");
        }
    }

    #[test]
    fn uncorrelated_packet_correlation() {
        let g = Grid::centered(128, 24.0).unwrap();
        let psi = gaussian_packet(&g, 1.0, -0.7, 0.8, 0.6).unwrap();
        let w = quantum_transform(&psi);
        assert!((measurement_correlation(&w) + 0.7).abs() < 1e-10);
    }

    #[test]
    fn commutator_witness() {
        let g = Grid::centered(128, 24.0).unwrap();
        let q = gaussian_quantum(&g, 0.3, 0.5, 0.9).unwrap();
        let rho = DensityMatrix::pure(&q);
        let field = Field2D::new(g, Axes::XY, rho.matrix().as_slice().to_vec()).unwrap();
        // tr(ρ [X, P]) = Σ_x (x P ρ - P x ρ)(x, x): P acts on the first index.
        let n = g.n_x();
        let d = spectral_derivative(&field, Axis::X, 1).unwrap().field;
        let xr = Field2D::from_fn(g, Axes::XY, |x, _| Complex64::new(x, 0.0));
        let xrho: Vec<Complex64> = xr.values().iter().zip(field.values()).map(|(a, b)| a * b).collect();
        let dx_rho = spectral_derivative(&Field2D::new(g, Axes::XY, xrho).unwrap(), Axis::X, 1).unwrap().field;
        let mi = Complex64::new(0.0, -1.0);
        let tr: Complex64 = (0..n).map(|a| g.x(a) * mi * d.at(a, a) - mi * dx_rho.at(a, a)).sum::<Complex64>() * g.dx();
        assert!((tr - Complex64::new(0.0, 1.0)).norm() < 1e-8);
    }

    #[test]
    fn sharpened_endpoints() {
        let g = Grid::centered(128, 32.0).unwrap();
        let k0 = 2.0;
        let q = QuantumWaveFunction::from_fn(g, |x| Complex64::new((-(x * x) / 16.0).exp() * (k0 * x).cos(), 0.0)).unwrap();
        let p0 = sharpened_position_distribution(&q, 0.0).unwrap();
        for (a, v) in p0.iter().enumerate() {
            assert!((v - q.values()[a].norm_sqr()).abs() < 1e-12, "{a} {v} {}", q.values()[a].norm_sqr());
        }
        let p1 = sharpened_position_distribution(&q, PI / 2.0).unwrap();
        let wc = classical_marginals(&pure_state_embed(&q)).position;
        for (a, v) in p1.iter().enumerate() {
            assert!((v - wc[2 * a]).abs() < 1e-12);
        }
        let v0 = fringe_visibility(&g, &p0, 2.0 * k0);
        let v1 = fringe_visibility(&g, &p1, 2.0 * k0);
        assert!(v0 > 0.99 && v1 < 1e-3, "{v0} {v1}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn uncertainty_product_bounded(xb in -1.0f64..1.0, dx in 0.4f64..1.2, dp in 0.4f64..1.2) {
            let g = Grid::centered(256, 32.0).unwrap();
            let psi = gaussian_packet(&g, xb, 0.2, dx, dp).unwrap();
            let rho = coarse_grain(&partial_fourier(&psi));
            let m = |s: &str| operator_expectation(&rho, &s.parse().unwrap()).unwrap();
            let vx = m("z^2") - m("z").powi(2);
            let vp = m("p^2") - m("p").powi(2);
            prop_assert!((vx * vp).sqrt() >= 0.5 * (1.0 - 1e-6));
        }
    }
}
