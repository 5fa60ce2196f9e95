//! Phase-space and position grids, 2D fields, quadrature and spectral ops.
//!
//! The position lattice has `n_x` points `x_a = x_min + a·dx` on a periodic
//! window of length `L`. The phase-space grid has `n_z = 2 n_x` rows at
//! `z_i = x_min + i·dx/2` and `n_p = n_x/2` momentum columns
//! `p_j = (j - n_p/2)·dp`, `dp = 2π/L`. Row `i` pairs with separations
//! `r = d·dx` where `d ≡ i (mod 2)` and `d ∈ [-n_x/2, n_x/2)`, so
//! `x = z + r/2` and `y = z - r/2` always land on the lattice and every
//! lattice pair `(x, y)` appears exactly once.
//!
//! The separation `d = -n_x/2` (half the window) has two midpoints on the
//! torus. Its pairs `(a, b)` and `(b, a)` sit in rows `i` and `i + n_x`; they
//! are combined by a fixed 2×2 unitary so that real fields map to hermitian
//! ones.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::fft::{for_each_column, signed_index, Fft};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Uniform periodic grid. See the module docs for the layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n_x: usize,
    x_min: f64,
    length: f64,
}

impl Grid {
    /// `n_x` must be a power of two, at least 8.
    pub fn new(n_x: usize, x_min: f64, length: f64) -> Result<Self> {
        if n_x < 8 || !n_x.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_x = {n_x} must be a power of two >= 8"
            )));
        }
        if !(length.is_finite() && length > 0.0) || !x_min.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "window [{x_min}, {x_min} + {length}) is not a finite positive interval"
            )));
        }
        Ok(Self { n_x, x_min, length })
    }

    /// Window centred on the origin.
    pub fn centered(n_x: usize, length: f64) -> Result<Self> {
        Self::new(n_x, -0.5 * length, length)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn dx(&self) -> f64 {
        self.length / self.n_x as f64
    }
    pub fn n_z(&self) -> usize {
        2 * self.n_x
    }
    pub fn dz(&self) -> f64 {
        0.5 * self.dx()
    }
    pub fn n_p(&self) -> usize {
        self.n_x / 2
    }
    pub fn dp(&self) -> f64 {
        2.0 * PI / self.length
    }
    /// Row spacing of separations, `2 dx`.
    pub fn dr(&self) -> f64 {
        2.0 * self.dx()
    }
    /// Half-width of the momentum window of phase-space fields.
    pub fn p_max(&self) -> f64 {
        0.5 * self.n_p() as f64 * self.dp()
    }

    pub fn x(&self, a: usize) -> f64 {
        self.x_min + a as f64 * self.dx()
    }
    pub fn z(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dz()
    }
    pub fn p(&self, j: usize) -> f64 {
        (j as f64 - (self.n_p() / 2) as f64) * self.dp()
    }

    /// Signed separation index `d` of slot `(i, k)`; `r = d·dx`.
    pub fn sep_index(&self, i: usize, k: usize) -> i64 {
        2 * k as i64 - self.n_p() as i64 + (i % 2) as i64
    }
    pub fn r(&self, i: usize, k: usize) -> f64 {
        self.sep_index(i, k) as f64 * self.dx()
    }

    /// Lattice wavenumber in FFT order, `2π m / L`.
    pub fn k_lattice(&self, m: usize) -> f64 {
        signed_index(m, self.n_x) as f64 * self.dp()
    }

    /// Lattice pair `(a, b)` of phase-space slot `(i, k)`.
    pub fn pair_of_slot(&self, i: usize, k: usize) -> (usize, usize) {
        let n = self.n_x as i64;
        let d = self.sep_index(i, k);
        let i = i as i64;
        (((i + d) / 2).rem_euclid(n) as usize, ((i - d) / 2).rem_euclid(n) as usize)
    }

    /// Phase-space slot `(i, k)` of lattice pair `(a, b)`.
    pub fn slot_of_pair(&self, a: usize, b: usize) -> (usize, usize) {
        let n = self.n_x as i64;
        let mut d = (a as i64 - b as i64).rem_euclid(n);
        if d >= n / 2 {
            d -= n;
        }
        let i = (2 * b as i64 + d).rem_euclid(2 * n) as usize;
        let k = ((d + self.n_p() as i64 - (i % 2) as i64) / 2) as usize;
        (i, k)
    }

    /// Slots at separation `-n_x/2`: `k = 0` on even rows.
    pub fn is_nyquist_slot(&self, i: usize, k: usize) -> bool {
        k == 0 && i.is_multiple_of(2)
    }

    /// Boundary pairs `(a, b)` with `|a - b| ≡ n_x/2`.
    pub fn is_nyquist_pair(&self, a: usize, b: usize) -> bool {
        (a + self.n_x - b) % self.n_x == self.n_x / 2
    }

    /// Midpoint and separation of a lattice pair in raw window coordinates.
    pub fn raw_mid_sep(&self, a: usize, b: usize) -> (f64, f64) {
        let (x, y) = (self.x(a), self.x(b));
        (0.5 * (x + y), x - y)
    }
}

/// Coordinate pair of a [`Field2D`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axes {
    /// Phase space `(z, p)`, shape `n_z × n_p`.
    ZP,
    /// Midpoint and separation `(z, r)`, shape `n_z × n_p`.
    ZR,
    /// Position pairs `(x, y)`, shape `n_x × n_x`.
    XY,
}

impl Axes {
    pub fn tag(self) -> u8 {
        match self {
            Axes::ZP => 0,
            Axes::ZR => 1,
            Axes::XY => 2,
        }
    }
    pub fn from_tag(t: u8) -> Option<Self> {
        match t {
            0 => Some(Axes::ZP),
            1 => Some(Axes::ZR),
            2 => Some(Axes::XY),
            _ => None,
        }
    }
}

/// One axis of a field, for derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Z,
    P,
    X,
    Y,
}

/// Complex samples on a grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    grid: Grid,
    axes: Axes,
    values: Vec<Complex64>,
}

impl Field2D {
    pub fn shape_of(grid: &Grid, axes: Axes) -> (usize, usize) {
        match axes {
            Axes::ZP | Axes::ZR => (grid.n_z(), grid.n_p()),
            Axes::XY => (grid.n_x(), grid.n_x()),
        }
    }

    pub fn zeros(grid: Grid, axes: Axes) -> Self {
        let (r, c) = Self::shape_of(&grid, axes);
        Self { grid, axes, values: vec![ZERO; r * c] }
    }

    pub fn new(grid: Grid, axes: Axes, values: Vec<Complex64>) -> Result<Self> {
        let (r, c) = Self::shape_of(&grid, axes);
        if values.len() != r * c {
            return Err(Error::ShapeMismatch { expected: (r, c), found: (values.len(), 1) });
        }
        Ok(Self { grid, axes, values })
    }

    pub fn from_real(grid: Grid, axes: Axes, values: &[f64]) -> Result<Self> {
        Self::new(grid, axes, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(row coordinate, column coordinate)`.
    pub fn from_fn(grid: Grid, axes: Axes, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let (rows, cols) = Self::shape_of(&grid, axes);
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let (u, v) = match axes {
                    Axes::ZP => (grid.z(i), grid.p(j)),
                    Axes::ZR => (grid.z(i), grid.r(i, j)),
                    Axes::XY => (grid.x(i), grid.x(j)),
                };
                values.push(f(u, v));
            }
        }
        Self { grid, axes, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn axes(&self) -> Axes {
        self.axes
    }
    pub fn shape(&self) -> (usize, usize) {
        Self::shape_of(&self.grid, self.axes)
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.values[r * self.shape().1 + c]
    }

    /// Quadrature weight per sample: `dz dp/2π` on (z,p), `dx²` otherwise.
    pub fn weight(&self) -> f64 {
        match self.axes {
            Axes::ZP => self.grid.dz() * self.grid.dp() / (2.0 * PI),
            Axes::ZR | Axes::XY => self.grid.dx() * self.grid.dx(),
        }
    }

    pub fn integrate(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.weight()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.weight()
    }

    /// `max |Im| / max |·|`, zero for the zero field.
    pub fn imag_fraction(&self) -> f64 {
        let mut im: f64 = 0.0;
        let mut all: f64 = 0.0;
        for v in &self.values {
            im = im.max(v.im.abs());
            all = all.max(v.norm());
        }
        if all == 0.0 {
            0.0
        } else {
            im / all
        }
    }

    /// `max |f(x,y) - f(y,x)*|` for (x,y) fields.
    pub fn hermitian_defect(&self) -> Result<f64> {
        if self.axes != Axes::XY {
            return Err(Error::AxisMismatch(format!("hermiticity needs (x,y), got {:?}", self.axes)));
        }
        let n = self.grid.n_x();
        let mut d: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                d = d.max((self.at(a, b) - self.at(b, a).conj()).norm());
            }
        }
        Ok(d)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Sum of `|f|²` weights in rows or columns within 1/16 of the window
    /// edge, relative to the total. For (x,y) fields the separation wrap
    /// `|x - y| ≈ L/2` counts as the edge.
    pub fn boundary_fraction(&self) -> f64 {
        let (rows, cols) = self.shape();
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut edge = 0.0;
        match self.axes {
            Axes::ZP | Axes::ZR => {
                let rb = (rows / 16).max(1);
                let cb = (cols / 16).max(1);
                for i in 0..rows {
                    for j in 0..cols {
                        if i < rb || i >= rows - rb || j < cb || j >= cols - cb {
                            edge += self.values[i * cols + j].norm_sqr();
                        }
                    }
                }
            }
            Axes::XY => {
                let n = rows;
                let b = (n / 16).max(1);
                for a in 0..n {
                    for c in 0..n {
                        let sep = (a + n - c) % n;
                        let near_wrap = sep.abs_diff(n / 2) < b;
                        let near_edge = a < b || a >= n - b || c < b || c >= n - b;
                        if near_wrap || near_edge {
                            edge += self.values[a * n + c].norm_sqr();
                        }
                    }
                }
            }
        }
        edge / total
    }
}

/// Direction of [`axis_fourier`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourierDirection {
    /// `f̃(z, r) = Σ_p e^{ipr} f(z, p) dp/2π`.
    PToR,
    /// `f(z, p) = Σ_r e^{-ipr} f̃(z, r) dr`.
    RToP,
}

/// Per-row FFT plans and twist factors for the p ↔ r transform.
pub(crate) struct RowTransform {
    fft: Fft,
    n_p: usize,
    /// `(-1)^J e^{±iπ J s/n_p}` for parity `s`, indexed `[s][j]`.
    twist_fwd: [Vec<Complex64>; 2],
    twist_inv: [Vec<Complex64>; 2],
    to_r: f64,
    to_p: f64,
}

impl RowTransform {
    pub(crate) fn new(grid: &Grid) -> Self {
        let n_p = grid.n_p();
        let half = (n_p / 2) as i64;
        let make = |s: i64, sign: f64| -> Vec<Complex64> {
            (0..n_p)
                .map(|j| {
                    let jj = j as i64 - half;
                    let sgn = if jj.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    Complex64::from_polar(sgn, sign * PI * (jj * s) as f64 / n_p as f64)
                })
                .collect()
        };
        Self {
            fft: Fft::new(n_p).expect("n_p is a power of two"),
            n_p,
            twist_fwd: [make(0, 1.0), make(1, 1.0)],
            twist_inv: [make(0, -1.0), make(1, -1.0)],
            to_r: grid.dp() / (2.0 * PI),
            to_p: grid.dr(),
        }
    }

    /// In-place row `i`: p samples → r samples.
    pub(crate) fn p_to_r(&self, i: usize, row: &mut [Complex64]) {
        let s = i % 2;
        for (v, t) in row.iter_mut().zip(&self.twist_fwd[s]) {
            *v *= t;
        }
        self.fft.inverse(row);
        for (k, v) in row.iter_mut().enumerate() {
            *v *= if k % 2 == 0 { self.to_r } else { -self.to_r };
        }
    }

    /// In-place row `i`: r samples → p samples.
    pub(crate) fn r_to_p(&self, i: usize, row: &mut [Complex64]) {
        let s = i % 2;
        for (k, v) in row.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
        self.fft.forward(row);
        for (v, t) in row.iter_mut().zip(&self.twist_inv[s]) {
            *v *= t * self.to_p;
        }
    }

    pub(crate) fn n_p(&self) -> usize {
        self.n_p
    }
}

const ALPHA: Complex64 = Complex64 { re: 0.5, im: 0.5 };
const BETA: Complex64 = Complex64 { re: 0.5, im: -0.5 };

/// (z,r) samples to the (x,y) lattice; unitary up to the `dx²` weights.
pub fn zr_to_xy(f: &Field2D) -> Result<Field2D> {
    expect_axes(f, Axes::ZR)?;
    let g = *f.grid();
    let (n, n_p) = (g.n_x(), g.n_p());
    let mut out = vec![ZERO; n * n];
    for i in 0..g.n_z() {
        for k in 0..n_p {
            if g.is_nyquist_slot(i, k) {
                continue;
            }
            let (a, b) = g.pair_of_slot(i, k);
            out[a * n + b] = f.values[i * n_p + k];
        }
    }
    for i in (0..n).step_by(2) {
        let (f1, f2) = (f.values[i * n_p], f.values[(i + n) * n_p]);
        let (a1, b1) = g.pair_of_slot(i, 0);
        let (a2, b2) = g.pair_of_slot(i + n, 0);
        out[a1 * n + b1] = ALPHA * f1 + BETA * f2;
        out[a2 * n + b2] = BETA * f1 + ALPHA * f2;
    }
    Field2D::new(g, Axes::XY, out)
}

/// Inverse of [`zr_to_xy`].
pub fn xy_to_zr(f: &Field2D) -> Result<Field2D> {
    expect_axes(f, Axes::XY)?;
    let g = *f.grid();
    let (n, n_p) = (g.n_x(), g.n_p());
    let mut out = vec![ZERO; g.n_z() * n_p];
    for i in 0..g.n_z() {
        for k in 0..n_p {
            if g.is_nyquist_slot(i, k) {
                continue;
            }
            let (a, b) = g.pair_of_slot(i, k);
            out[i * n_p + k] = f.values[a * n + b];
        }
    }
    for i in (0..n).step_by(2) {
        let (a1, b1) = g.pair_of_slot(i, 0);
        let (a2, b2) = g.pair_of_slot(i + n, 0);
        let (q1, q2) = (f.values[a1 * n + b1], f.values[a2 * n + b2]);
        out[i * n_p] = BETA * q1 + ALPHA * q2;
        out[(i + n) * n_p] = ALPHA * q1 + BETA * q2;
    }
    Field2D::new(g, Axes::ZR, out)
}

/// Coefficients `c` with `f(x,y) = Σ c · f̃(i, k)` for lattice pair `(a, b)`.
/// Used by brute-force evaluators that bypass the FFT path.
pub fn pair_sources(grid: &Grid, a: usize, b: usize) -> ([(usize, usize, Complex64); 2], usize) {
    let (i, k) = grid.slot_of_pair(a, b);
    if !grid.is_nyquist_slot(i, k) {
        return ([(i, k, Complex64::new(1.0, 0.0)), (0, 0, ZERO)], 1);
    }
    let n = grid.n_x();
    let (lo, first) = if i < n { (i, true) } else { (i - n, false) };
    let (c1, c2) = if first { (ALPHA, BETA) } else { (BETA, ALPHA) };
    ([(lo, 0, c1), (lo + n, 0, c2)], 2)
}

/// Coefficients `g` with `f̃(i, k) = Σ g · f(x, y)` over lattice pairs.
pub fn slot_sources(grid: &Grid, i: usize, k: usize) -> ([(usize, usize, Complex64); 2], usize) {
    let (a, b) = grid.pair_of_slot(i, k);
    if !grid.is_nyquist_slot(i, k) {
        return ([(a, b, Complex64::new(1.0, 0.0)), (0, 0, ZERO)], 1);
    }
    let n = grid.n_x();
    let lo = i % n;
    let (a1, b1) = grid.pair_of_slot(lo, 0);
    let (a2, b2) = grid.pair_of_slot(lo + n, 0);
    let (g1, g2) = if i < n { (BETA, ALPHA) } else { (ALPHA, BETA) };
    ([(a1, b1, g1), (a2, b2, g2)], 2)
}

/// Transform along the momentum axis, row by row.
pub fn axis_fourier(f: &Field2D, direction: FourierDirection) -> Result<Field2D> {
    let g = *f.grid();
    let (from, to) = match direction {
        FourierDirection::PToR => (Axes::ZP, Axes::ZR),
        FourierDirection::RToP => (Axes::ZR, Axes::ZP),
    };
    expect_axes(f, from)?;
    let rt = RowTransform::new(&g);
    let n_p = rt.n_p();
    let mut values = f.values.clone();
    for (i, row) in values.chunks_mut(n_p).enumerate() {
        match direction {
            FourierDirection::PToR => rt.p_to_r(i, row),
            FourierDirection::RToP => rt.r_to_p(i, row),
        }
    }
    Field2D::new(g, to, values)
}

/// Spectral derivative with the fraction of spectral weight in the top
/// quarter of modes (large values flag under-resolved input).
#[derive(Clone, Debug)]
pub struct SpectralDerivative {
    pub field: Field2D,
    pub tail_fraction: f64,
}

/// `∂^order` along `axis`. Supported: Z and P on (z,p) fields, X and Y on
/// (x,y) fields. The P derivative is multiplication by `(-ir)^order` in (z,r).
pub fn spectral_derivative(f: &Field2D, axis: Axis, order: u32) -> Result<SpectralDerivative> {
    let g = *f.grid();
    match (f.axes(), axis) {
        (Axes::ZP, Axis::Z) => {
            let (rows, cols) = f.shape();
            let mut values = f.values.clone();
            let fft = Fft::new(rows)?;
            let mut tail = Tail::default();
            let period = g.length();
            for_each_column(&mut values, rows, cols, |_, col| {
                fft.forward(col);
                tail.add(col);
                apply_multiplier(col, rows, period, order);
                fft.inverse(col);
                for v in col.iter_mut() {
                    *v /= rows as f64;
                }
            });
            Ok(SpectralDerivative { field: Field2D::new(g, Axes::ZP, values)?, tail_fraction: tail.fraction() })
        }
        (Axes::ZP, Axis::P) => {
            let rt = RowTransform::new(&g);
            let n_p = rt.n_p();
            let mut values = f.values.clone();
            let mut tail = Tail::default();
            for (i, row) in values.chunks_mut(n_p).enumerate() {
                rt.p_to_r(i, row);
                for (k, v) in row.iter_mut().enumerate() {
                    let w = v.norm_sqr();
                    tail.total += w;
                    if !(n_p / 4..3 * n_p / 4).contains(&k) {
                        tail.high += w;
                    }
                    if order % 2 == 1 && g.is_nyquist_slot(i, k) {
                        *v = ZERO;
                    } else {
                        *v *= Complex64::new(0.0, -g.r(i, k)).powu(order);
                    }
                }
                rt.r_to_p(i, row);
            }
            Ok(SpectralDerivative { field: Field2D::new(g, Axes::ZP, values)?, tail_fraction: tail.fraction() })
        }
        (Axes::XY, Axis::X) | (Axes::XY, Axis::Y) => {
            let n = g.n_x();
            let fft = Fft::new(n)?;
            let mut values = f.values.clone();
            let mut tail = Tail::default();
            let period = g.length();
            let mut line = |buf: &mut [Complex64]| {
                fft.forward(buf);
                tail.add(buf);
                apply_multiplier(buf, n, period, order);
                fft.inverse(buf);
                for v in buf.iter_mut() {
                    *v /= n as f64;
                }
            };
            if axis == Axis::Y {
                for row in values.chunks_mut(n) {
                    line(row);
                }
            } else {
                for_each_column(&mut values, n, n, |_, col| line(col));
            }
            Ok(SpectralDerivative { field: Field2D::new(g, Axes::XY, values)?, tail_fraction: tail.fraction() })
        }
        (axes, axis) => Err(Error::AxisMismatch(format!(
            "derivative along {axis:?} is not defined on {axes:?} fields"
        ))),
    }
}

#[derive(Default)]
struct Tail {
    high: f64,
    total: f64,
}

impl Tail {
    fn add(&mut self, spectrum: &[Complex64]) {
        let n = spectrum.len();
        for (m, v) in spectrum.iter().enumerate() {
            let w = v.norm_sqr();
            self.total += w;
            if signed_index(m, n).unsigned_abs() as usize >= n / 4 {
                self.high += w;
            }
        }
    }
    fn fraction(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.high / self.total
        }
    }
}

/// Multiplies FFT-ordered coefficients by `(iκ)^order`; odd orders drop the
/// unpaired Nyquist mode.
fn apply_multiplier(spec: &mut [Complex64], n: usize, period: f64, order: u32) {
    for (m, v) in spec.iter_mut().enumerate() {
        let s = signed_index(m, n);
        if order % 2 == 1 && s == -(n as i64) / 2 {
            *v = ZERO;
            continue;
        }
        let kappa = 2.0 * PI * s as f64 / period;
        *v *= Complex64::new(0.0, kappa).powu(order);
    }
}

pub(crate) fn expect_axes(f: &Field2D, axes: Axes) -> Result<()> {
    if f.axes() != axes {
        return Err(Error::AxisMismatch(format!("expected {axes:?} field, got {:?}", f.axes())));
    }
    Ok(())
}
