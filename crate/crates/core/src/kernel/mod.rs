//! Operator-valued singular kernels `K(x, y) ∈ L(ℓ²_n)` on `ℝ^d`, their
//! bilinear forms, Calderón–Zygmund constants, the weak boundedness
//! property and the `t(1, ·)`, `t(·, 1)` symbols.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::linalg;
use crate::step::StepFunction;
use crate::value::ValueSpace;

mod quad;
mod report;

pub use quad::{
    cube_mesh, discretized_operator, form, form_matrix, t1_coeff, wbp, Cube, QuadOptions,
    T1Coefficient, WbpReport,
};
pub use report::{
    cz_constants, reconstruct_b, symmetry_check, t1_bound_report, CZReport, Reconstruction, Side,
    SymmetryReport, T1Report, T1ReportOptions,
};

/// Parity of a convolution kernel `K(x, y) = k(x − y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

/// Region where a kernel may be discontinuous: inside the box it is smooth
/// on each dyadic cell of `level` (in each variable separately); outside it
/// is smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub level: usize,
}

/// A matrix-valued kernel `K(x, y)`, `n × n` row-major, defined for `x ≠ y`.
pub trait Kernel: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn n(&self) -> usize;
    /// Hölder exponent `δ ∈ (0, 1]`.
    fn delta(&self) -> f64;
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    /// Unbounded near the diagonal. Bounded kernels are also evaluated on it.
    fn singular(&self) -> bool {
        true
    }

    fn parity(&self) -> Option<Parity> {
        None
    }

    /// A constant `C` with `|K(x,y) − K(z,y)| ≤ C |x−z|^δ / |x−y|^{d+δ}` and
    /// the same in the second variable, whenever `|x−y| > 2|x−z|`.
    fn holder_constant(&self) -> Option<f64> {
        None
    }

    fn breakpoints(&self) -> Option<Breakpoints> {
        None
    }

    /// Bound on `∫_{|y−z|_∞ > radius} |∫ [K(x,y) − K(z,y)] ψ(x) dx| dy` for a
    /// test function supported within distance `r` of `z` with `‖ψ‖₁ = psi_l1`
    /// (and the same with the variables exchanged).
    fn tail_bound(&self, r: f64, psi_l1: f64, radius: f64) -> Option<f64> {
        let c = self.holder_constant()?;
        let d = self.dim() as f64;
        let delta = self.delta();
        if radius < 3.0 * r {
            return None;
        }
        let sphere = match self.dim() {
            1 => 2.0,
            2 => 2.0 * PI,
            3 => 4.0 * PI,
            _ => return None,
        };
        Some(
            c * 2f64.powf(d + delta) * r.powf(delta) * psi_l1 * sphere * radius.powf(-delta)
                / delta,
        )
    }
}

/// `1/(π(x − y))` on `ℝ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HilbertKernel;

impl Kernel for HilbertKernel {
    fn name(&self) -> String {
        "hilbert".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn n(&self) -> usize {
        1
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = 1.0 / (PI * (x[0] - y[0]));
    }
    fn parity(&self) -> Option<Parity> {
        Some(Parity::Odd)
    }
    fn holder_constant(&self) -> Option<f64> {
        Some(2.0 / PI)
    }
}

/// The Beurling–Ahlfors kernel `−1/(π z²)`, `z = x − y ∈ ℂ ≅ ℝ²`, acting on
/// `ℝ²` as multiplication by a complex number.
#[derive(Debug, Clone, Copy, Default)]
pub struct BeurlingAhlforsKernel;

impl Kernel for BeurlingAhlforsKernel {
    fn name(&self) -> String {
        "beurling-ahlfors".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn n(&self) -> usize {
        2
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let (a, b) = (x[0] - y[0], x[1] - y[1]);
        let r2 = a * a + b * b;
        let r4 = PI * r2 * r2;
        let re = -(a * a - b * b) / r4;
        let im = 2.0 * a * b / r4;
        out.copy_from_slice(&[re, -im, im, re]);
    }
    fn parity(&self) -> Option<Parity> {
        Some(Parity::Even)
    }
    fn holder_constant(&self) -> Option<f64> {
        Some(16.0 / PI)
    }
}

/// Even profiles `k` on `ℝ` with `∫ k = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `c/(w√π) · exp(−u²/w²)`.
    Gaussian { c: f64, width: f64 },
    /// `(1 − |u|)_+`, integral 1.
    Bump,
}

impl Profile {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Profile::Gaussian { c, width } => {
                c / (width * PI.sqrt()) * (-(u * u) / (width * width)).exp()
            }
            Profile::Bump => (1.0 - u.abs()).max(0.0),
        }
    }

    pub fn integral(&self) -> f64 {
        match *self {
            Profile::Gaussian { c, .. } => c,
            Profile::Bump => 1.0,
        }
    }

    /// `∫_{|u| > t} |k(u)| du`.
    pub fn outer_mass(&self, t: f64) -> f64 {
        match *self {
            Profile::Gaussian { c, width } => c.abs() * libm::erfc(t.max(0.0) / width),
            Profile::Bump => {
                let s = (1.0 - t.max(0.0)).max(0.0);
                s * s
            }
        }
    }
}

/// `k(x − y)·A` on `ℝ` for an even bounded profile and a fixed matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionKernel {
    pub profile: Profile,
    pub matrix: Vec<f64>,
    pub n: usize,
}

impl ConvolutionKernel {
    pub fn new(profile: Profile, n: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: matrix.len(),
            });
        }
        Ok(ConvolutionKernel { profile, matrix, n })
    }
}

impl Kernel for ConvolutionKernel {
    fn name(&self) -> String {
        "even-convolution".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn n(&self) -> usize {
        self.n
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let k = self.profile.value(x[0] - y[0]);
        out.iter_mut()
            .zip(&self.matrix)
            .for_each(|(o, a)| *o = k * a);
    }
    fn singular(&self) -> bool {
        false
    }
    fn parity(&self) -> Option<Parity> {
        Some(Parity::Even)
    }
    fn tail_bound(&self, r: f64, psi_l1: f64, radius: f64) -> Option<f64> {
        let a = linalg::frobenius_slice(&self.matrix);
        Some(2.0 * a * psi_l1 * self.profile.outer_mass(radius - r))
    }
}

/// `a(x) k(x − y) + k(x − y) a(y)` on `ℝ` (or only the first term when
/// one-sided), with `a` a matrix-valued step function on `[0, 1)`,
/// extended by zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicationKernel {
    pub a: StepFunction,
    pub profile: Profile,
    pub one_sided: bool,
    n: usize,
    a_sup: f64,
}

impl MultiplicationKernel {
    pub fn new(a: StepFunction, profile: Profile, one_sided: bool) -> Result<Self> {
        let n = match *a.space() {
            ValueSpace::Operator { n_in, n_out, .. } if n_in == n_out => n_in,
            ValueSpace::Vector { n: 1, .. } => 1,
            _ => {
                return Err(Error::Unsupported(
                    "the multiplier must be square-matrix valued",
                ))
            }
        };
        if a.grid().dim() != 1 || a.grid().shift().iter().any(|&s| s != 0.0) {
            return Err(Error::Unsupported(
                "multiplication kernels live on the unshifted unit interval",
            ));
        }
        let a_sup = a
            .values()
            .chunks(n * n)
            .map(linalg::frobenius_slice)
            .fold(0.0, f64::max);
        Ok(MultiplicationKernel {
            a,
            profile,
            one_sided,
            n,
            a_sup,
        })
    }

    fn a_at(&self, x: f64) -> Option<&[f64]> {
        if !(0.0..1.0).contains(&x) {
            return None;
        }
        let g = self.a.grid();
        Some(self.a.at(g.locate(&[x], g.levels())))
    }
}

impl Kernel for MultiplicationKernel {
    fn name(&self) -> String {
        if self.one_sided {
            "one-sided-multiplication".into()
        } else {
            "symmetrized-multiplication".into()
        }
    }
    fn dim(&self) -> usize {
        1
    }
    fn n(&self) -> usize {
        self.n
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let k = self.profile.value(x[0] - y[0]);
        out.iter_mut().for_each(|o| *o = 0.0);
        if let Some(ax) = self.a_at(x[0]) {
            out.iter_mut().zip(ax).for_each(|(o, v)| *o += k * v);
        }
        if !self.one_sided {
            if let Some(ay) = self.a_at(y[0]) {
                out.iter_mut().zip(ay).for_each(|(o, v)| *o += k * v);
            }
        }
    }
    fn singular(&self) -> bool {
        false
    }
    fn breakpoints(&self) -> Option<Breakpoints> {
        Some(Breakpoints {
            lo: vec![0.0],
            hi: vec![1.0],
            level: self.a.grid().levels(),
        })
    }
    fn tail_bound(&self, r: f64, psi_l1: f64, radius: f64) -> Option<f64> {
        // Outside the breakpoint box only `a` at the test-function side survives.
        Some(2.0 * self.a_sup * psi_l1 * self.profile.outer_mass(radius - r))
    }
}

/// `α·K`.
pub struct ScaledKernel {
    pub inner: Box<dyn Kernel>,
    pub alpha: f64,
}

impl Kernel for ScaledKernel {
    fn name(&self) -> String {
        let mut s = self.inner.name();
        s.push_str("-scaled");
        s
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn delta(&self) -> f64 {
        self.inner.delta()
    }
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.inner.eval(x, y, out);
        out.iter_mut().for_each(|o| *o *= self.alpha);
    }
    fn singular(&self) -> bool {
        self.inner.singular()
    }
    fn parity(&self) -> Option<Parity> {
        self.inner.parity()
    }
    fn holder_constant(&self) -> Option<f64> {
        self.inner.holder_constant().map(|c| c * self.alpha.abs())
    }
    fn breakpoints(&self) -> Option<Breakpoints> {
        self.inner.breakpoints()
    }
    fn tail_bound(&self, r: f64, psi_l1: f64, radius: f64) -> Option<f64> {
        self.inner
            .tail_bound(r, psi_l1, radius)
            .map(|t| t * self.alpha.abs())
    }
}

/// The zero kernel.
#[derive(Debug, Clone, Copy)]
pub struct ZeroKernel {
    pub dim: usize,
    pub n: usize,
}

impl Kernel for ZeroKernel {
    fn name(&self) -> String {
        "zero".into()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn n(&self) -> usize {
        self.n
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn eval(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
    fn holder_constant(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// A kernel sampled on the product mesh of `[0,1)^d` with `2^level` points
/// per axis (cell centers), looked up by nearest node, zero off the mesh and
/// on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel {
    pub label: String,
    pub dim: usize,
    pub n: usize,
    pub delta: f64,
    pub level: usize,
    /// `[ix][iy][n×n]` with `ix, iy` flattened row-major over the axes
    /// (axis 0 fastest).
    pub values: Vec<f64>,
}

impl SampledKernel {
    pub fn new(
        label: String,
        dim: usize,
        n: usize,
        delta: f64,
        level: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || n == 0 || dim * level > 12 {
            return Err(Error::Config(
                "sampled kernel mesh is empty or too large".into(),
            ));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Config(
                "kernel Hölder exponent must lie in (0, 1]".into(),
            ));
        }
        let points = 1usize << (dim * level);
        let expected = points * points * n * n;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(SampledKernel {
            label,
            dim,
            n,
            delta,
            level,
            values,
        })
    }

    pub fn mesh_points(&self) -> usize {
        1 << self.level
    }

    fn node(&self, x: &[f64]) -> Option<usize> {
        let m = self.mesh_points();
        let mut idx = 0;
        for a in (0..self.dim).rev() {
            if !(0.0..1.0).contains(&x[a]) {
                return None;
            }
            idx = idx * m + ((x[a] * m as f64) as usize).min(m - 1);
        }
        Some(idx)
    }
}

impl Kernel for SampledKernel {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn n(&self) -> usize {
        self.n
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        match (self.node(x), self.node(y)) {
            (Some(i), Some(j)) if i != j => {
                let points = 1usize << (self.dim * self.level);
                let w = self.n * self.n;
                let start = (i * points + j) * w;
                out.copy_from_slice(&self.values[start..start + w]);
            }
            _ => out.iter_mut().for_each(|o| *o = 0.0),
        }
    }
    fn breakpoints(&self) -> Option<Breakpoints> {
        Some(Breakpoints {
            lo: vec![0.0; self.dim],
            hi: vec![1.0; self.dim],
            level: self.level,
        })
    }
    fn tail_bound(&self, _r: f64, _psi_l1: f64, _radius: f64) -> Option<f64> {
        // The far region lies outside the mesh, where the kernel vanishes.
        Some(0.0)
    }
}

/// `K(y, x)`: exchanges the roles of the variables.
pub struct Swapped<'a>(pub &'a dyn Kernel);

impl Kernel for Swapped<'_> {
    fn name(&self) -> String {
        self.0.name()
    }
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn n(&self) -> usize {
        self.0.n()
    }
    fn delta(&self) -> f64 {
        self.0.delta()
    }
    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.0.eval(y, x, out);
    }
    fn singular(&self) -> bool {
        self.0.singular()
    }
    fn parity(&self) -> Option<Parity> {
        self.0.parity()
    }
    fn holder_constant(&self) -> Option<f64> {
        self.0.holder_constant()
    }
    fn breakpoints(&self) -> Option<Breakpoints> {
        self.0.breakpoints()
    }
    fn tail_bound(&self, r: f64, psi_l1: f64, radius: f64) -> Option<f64> {
        self.0.tail_bound(r, psi_l1, radius)
    }
}

/// Kernels act on unshifted grids in `ℝ^d`.
pub(crate) fn check_grid(kernel: &dyn Kernel, grid: &DyadicGrid) -> Result<()> {
    if grid.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: grid.dim(),
        });
    }
    if grid.shift().iter().any(|&s| s != 0.0) {
        return Err(Error::Unsupported(
            "kernel computations need an unshifted grid",
        ));
    }
    Ok(())
}
