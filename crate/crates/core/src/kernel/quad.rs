//! Lattice quadrature for kernel forms.
//!
//! Products of cells are integrated by the midpoint rule on the lattice
//! `h ℤ^d`, `h = 2^{-quad_level}`. On a diagonal cell pair the cell is split
//! into `2^d` half-cells and only distinct half-cell pairs are used, which is
//! a symmetric exclusion of a neighbourhood of the diagonal: for odd kernels
//! the excluded and the retained contributions cancel pairwise, so the
//! principal value is reproduced exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{check_grid, Kernel};
use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::linalg::Matrix;
use crate::martingale::SignMode;
use crate::quadrature::gauss_legendre;
use crate::rbound::{rbound_estimate, OperatorFamily, RBoundOptions};
use crate::step::StepFunction;

/// Largest number of lattice points per cell axis.
const MAX_REFINEMENT_BITS: usize = 12;
const ID_BITS: usize = 21;
const ID_OFFSET: i64 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadOptions {
    /// Absolute lattice level; `0` means `L + 3`.
    pub quad_level: usize,
    /// Tail tolerance for `t(1, ψ)`.
    pub tol: f64,
    /// Minimal outer half-width, in support sides.
    pub r_max_diameters: f64,
    /// Smallest dilation factor of the cutoff cube `χ` (odd).
    pub dilation: usize,
    pub max_shells: usize,
    /// Gauss–Legendre points per axis on far-field cubes.
    pub far_points: usize,
    /// Subdivisions per axis of each far-field cube.
    pub far_split: usize,
    /// Gauss–Legendre points per axis on test-function pieces.
    pub x_points: usize,
    /// Cauchy tolerance for `wbp`.
    pub wbp_tol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            quad_level: 0,
            tol: 1e-6,
            r_max_diameters: 8.0,
            dilation: 3,
            max_shells: 64,
            far_points: 8,
            far_split: 2,
            x_points: 4,
            wbp_tol: 1e-4,
        }
    }
}

impl QuadOptions {
    pub fn with_level(quad_level: usize) -> Self {
        QuadOptions {
            quad_level,
            ..Self::default()
        }
    }

    pub fn level_for(&self, grid: &DyadicGrid) -> usize {
        if self.quad_level == 0 {
            grid.levels() + 3
        } else {
            self.quad_level
        }
    }
}

pub(crate) struct Evaluator<'a> {
    kernel: &'a dyn Kernel,
    d: usize,
    buf: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(kernel: &'a dyn Kernel) -> Self {
        let d = kernel.dim();
        let w = kernel.n() * kernel.n();
        Evaluator {
            kernel,
            d,
            buf: vec![0.0; w],
            xs: vec![0.0; d],
            ys: vec![0.0; d],
        }
    }

    pub(crate) fn eval(&mut self, x: &[f64], y: &[f64]) -> &[f64] {
        self.kernel.eval(x, y, &mut self.buf);
        &self.buf
    }

    fn add(&mut self, x: &[f64], y: &[f64], weight: f64, acc: &mut [f64]) {
        self.kernel.eval(x, y, &mut self.buf);
        acc.iter_mut()
            .zip(&self.buf)
            .for_each(|(a, k)| *a += weight * k);
    }

    /// `∫_{C_x} ∫_{C_y} K` for lattice cells of side `h` around the centers.
    fn cell_pair(
        &mut self,
        x: &[f64],
        y: &[f64],
        h: f64,
        same: bool,
        weight: f64,
        acc: &mut [f64],
    ) {
        let d = self.d;
        if !same {
            self.add(x, y, weight * h.powi(2 * d as i32), acc);
            return;
        }
        let q = 0.25 * h;
        let sub = 1usize << d;
        let w = weight * (0.5 * h).powi(2 * d as i32);
        let singular = self.kernel.singular();
        for a in 0..sub {
            for b in 0..sub {
                if a == b && singular {
                    continue;
                }
                for ax in 0..d {
                    self.xs[ax] = x[ax] + if (a >> ax) & 1 == 1 { q } else { -q };
                    self.ys[ax] = y[ax] + if (b >> ax) & 1 == 1 { q } else { -q };
                }
                let (xs, ys) = (core::mem::take(&mut self.xs), core::mem::take(&mut self.ys));
                self.add(&xs, &ys, w, acc);
                self.xs = xs;
                self.ys = ys;
            }
        }
    }
}

/// Lattice cell centers with identifiers (equal ids ⇔ same lattice cell)
/// and weights.
#[derive(Debug, Clone, Default)]
struct Nodes {
    d: usize,
    ids: Vec<u64>,
    centers: Vec<f64>,
    weights: Vec<f64>,
}

impl Nodes {
    fn new(d: usize) -> Self {
        Nodes {
            d,
            ..Default::default()
        }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    /// Adds the cells `lo + [0, count)^d` of the lattice `origin + h ℤ^d`.
    fn push_box(&mut self, origin: &[f64], h: f64, lo: &[i64], count: usize, weight: f64) {
        let d = self.d;
        let total = count.pow(d as u32);
        let mut idx = vec![0usize; d];
        for t in 0..total {
            let mut rem = t;
            for slot in idx.iter_mut() {
                *slot = rem % count;
                rem /= count;
            }
            let mut id = 0u64;
            for a in (0..d).rev() {
                let p = lo[a] + idx[a] as i64;
                id = (id << ID_BITS) | (p + ID_OFFSET) as u64;
                let _ = a;
            }
            self.ids.push(id);
            for a in 0..d {
                let p = lo[a] + idx[a] as i64;
                self.centers.push(origin[a] + (p as f64 + 0.5) * h);
            }
            self.weights.push(weight);
        }
    }

    fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.d..(i + 1) * self.d]
    }
}

fn pair_sum(ev: &mut Evaluator, xs: &Nodes, ys: &Nodes, h: f64, acc: &mut [f64]) {
    for i in 0..xs.len() {
        let wx = xs.weights[i];
        if wx == 0.0 {
            continue;
        }
        for j in 0..ys.len() {
            let w = wx * ys.weights[j];
            if w == 0.0 {
                continue;
            }
            ev.cell_pair(
                xs.center(i),
                ys.center(j),
                h,
                xs.ids[i] == ys.ids[j],
                w,
                acc,
            );
        }
    }
}

fn refinement(grid: &DyadicGrid, quad_level: usize) -> Result<usize> {
    if quad_level <= grid.levels() {
        return Err(Error::Config(format!(
            "quad_level {} must exceed the finest level {}",
            quad_level,
            grid.levels()
        )));
    }
    let bits = quad_level - grid.levels();
    if bits > MAX_REFINEMENT_BITS {
        return Err(Error::Guard {
            what: "quadrature refinement bits",
            value: bits,
            limit: MAX_REFINEMENT_BITS,
        });
    }
    Ok(bits)
}

/// Lattice nodes of the finest grid cell `fine`, weight `weight`.
fn cell_nodes(grid: &DyadicGrid, fine: usize, bits: usize, weight: f64) -> Nodes {
    let d = grid.dim();
    let m = 1usize << bits;
    let lo: Vec<i64> = grid
        .multi_index(grid.levels(), fine)
        .iter()
        .map(|&i| (i * m) as i64)
        .collect();
    let h = grid.side(grid.levels()) / m as f64;
    let mut nodes = Nodes::new(d);
    nodes.push_box(&vec![0.0; d], h, &lo, m, weight);
    nodes
}

/// `∫_{Q_i} ∫_{Q_j} K(x, y) dy dx` for finest cells `i` (x) and `j` (y).
fn cell_block(
    ev: &mut Evaluator,
    grid: &DyadicGrid,
    cache: &[Nodes],
    i: usize,
    j: usize,
    quad_level: usize,
) -> Vec<f64> {
    let n = ev.kernel.n();
    let mut acc = vec![0.0; n * n];
    let h = 1.0 / (1u64 << quad_level) as f64;
    let _ = grid;
    pair_sum(ev, &cache[i], &cache[j], h, &mut acc);
    acc
}

fn check_disjoint(f: &StepFunction, g: &StepFunction) -> Result<()> {
    let sf = f.support();
    let sg = g.support();
    if sf.iter().any(|c| sg.binary_search(c).is_ok()) {
        return Err(Error::OverlappingSupports);
    }
    Ok(())
}

fn prepare(
    kernel: &dyn Kernel,
    f: &StepFunction,
    g: &StepFunction,
    quad_level: usize,
) -> Result<Vec<Nodes>> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    check_grid(kernel, f.grid())?;
    let bits = refinement(f.grid(), quad_level)?;
    check_disjoint(f, g)?;
    let grid = f.grid();
    Ok((0..grid.fine_count())
        .map(|c| cell_nodes(grid, c, bits, 1.0))
        .collect())
}

/// `t(f, g) = ∬ ⟨K(x,y) f(y), g(x)⟩ dy dx` for `ℝ^n`-valued `f`, `g` with
/// disjoint supports.
pub fn form(
    kernel: &dyn Kernel,
    f: &StepFunction,
    g: &StepFunction,
    quad_level: usize,
) -> Result<f64> {
    let n = kernel.n();
    if f.width() != n || g.width() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.width().max(g.width()),
        });
    }
    let cache = prepare(kernel, f, g, quad_level)?;
    let mut ev = Evaluator::new(kernel);
    let (sf, sg) = (f.support(), g.support());
    let mut total = 0.0;
    let mut kf = vec![0.0; n];
    for &i in &sg {
        for &j in &sf {
            let block = cell_block(&mut ev, f.grid(), &cache, i, j, quad_level);
            crate::linalg::gemv(&block, n, n, f.at(j), &mut kf);
            total += crate::linalg::dot(&kf, g.at(i));
        }
    }
    Ok(total)
}

/// `∬ K(x,y) f(y) g(x) dy dx ∈ ℝ^{n×n}` for scalar `f`, `g` with disjoint
/// supports.
pub fn form_matrix(
    kernel: &dyn Kernel,
    f: &StepFunction,
    g: &StepFunction,
    quad_level: usize,
) -> Result<Matrix> {
    if f.width() != 1 || g.width() != 1 {
        return Err(Error::Unsupported(
            "form_matrix takes scalar test functions",
        ));
    }
    let cache = prepare(kernel, f, g, quad_level)?;
    let n = kernel.n();
    let mut ev = Evaluator::new(kernel);
    let mut acc = vec![0.0; n * n];
    for &i in &g.support() {
        for &j in &f.support() {
            let block = cell_block(&mut ev, f.grid(), &cache, i, j, quad_level);
            let w = f.at(j)[0] * g.at(i)[0];
            acc.iter_mut().zip(&block).for_each(|(a, b)| *a += w * b);
        }
    }
    Ok(Matrix::from_rows(n, n, acc))
}

/// The operator on finest-cell values: block `(i, j)` is
/// `t(1_{Q_j}, 1_{Q_i}) / |Q|`, diagonal blocks in the principal-value sense.
pub fn discretized_operator(
    kernel: &dyn Kernel,
    grid: &DyadicGrid,
    quad_level: usize,
) -> Result<Matrix> {
    check_grid(kernel, grid)?;
    let bits = refinement(grid, quad_level)?;
    let cells = grid.fine_count();
    let n = kernel.n();
    let size = cells * n;
    if size > 1 << 12 {
        return Err(Error::Guard {
            what: "discretized operator size",
            value: size,
            limit: 1 << 12,
        });
    }
    let cache: Vec<Nodes> = (0..cells).map(|c| cell_nodes(grid, c, bits, 1.0)).collect();
    let measure = grid.cell_measure(grid.levels());
    let mut ev = Evaluator::new(kernel);
    let mut m = Matrix::zeros(size, size);
    for i in 0..cells {
        for j in 0..cells {
            let block = cell_block(&mut ev, grid, &cache, i, j, quad_level);
            for r in 0..n {
                for c in 0..n {
                    m.set(i * n + r, j * n + c, block[r * n + c] / measure);
                }
            }
        }
    }
    Ok(m)
}

/// An axis-parallel cube `origin + [0, side)^d` with `side = 2^{-level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub origin: Vec<f64>,
    pub level: usize,
}

impl Cube {
    pub fn side(&self) -> f64 {
        1.0 / (1u64 << self.level) as f64
    }
}

/// All grid cells of levels `0..=L` plus their copies translated by half a
/// side along every axis.
pub fn cube_mesh(grid: &DyadicGrid) -> Vec<Cube> {
    let mut out = Vec::new();
    for k in 0..=grid.levels() {
        for cell in 0..grid.cell_count(k) {
            out.push(Cube {
                origin: grid.unwrapped_origin(k, cell),
                level: k,
            });
        }
    }
    let copies: Vec<Cube> = out
        .iter()
        .map(|c| {
            let half = 0.5 * c.side();
            Cube {
                origin: c.origin.iter().map(|o| o + half).collect(),
                level: c.level,
            }
        })
        .collect();
    out.extend(copies);
    out
}

fn cube_average(ev: &mut Evaluator, cube: &Cube, quad_level: usize) -> Result<Vec<f64>> {
    if quad_level <= cube.level {
        return Err(Error::Config(
            "quad_level must exceed the cube level".into(),
        ));
    }
    let bits = quad_level - cube.level;
    if bits > MAX_REFINEMENT_BITS {
        return Err(Error::Guard {
            what: "quadrature refinement bits",
            value: bits,
            limit: MAX_REFINEMENT_BITS,
        });
    }
    let d = ev.d;
    let m = 1usize << bits;
    let h = cube.side() / m as f64;
    let mut nodes = Nodes::new(d);
    nodes.push_box(&cube.origin, h, &vec![0; d], m, 1.0);
    let n = ev.kernel.n();
    let mut acc = vec![0.0; n * n];
    pair_sum(ev, &nodes, &nodes, h, &mut acc);
    let measure = cube.side().powi(d as i32);
    acc.iter_mut().for_each(|a| *a /= measure);
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WbpReport {
    /// `t(1_Q, 1_Q)/|Q|` at `quad_level + 1`.
    pub values: Vec<Matrix>,
    pub quad_level: usize,
    /// Largest entrywise change between `quad_level` and `quad_level + 1`.
    pub cauchy_gap: f64,
    pub converged: bool,
    pub rbound: f64,
}

/// The weak boundedness family `{t(1_Q, 1_Q)/|Q|}` over a cube mesh and its
/// R-bound (`p = 2`, up to 8 terms).
pub fn wbp(
    kernel: &dyn Kernel,
    mesh: &[Cube],
    quad_level: usize,
    options: &QuadOptions,
) -> Result<WbpReport> {
    if mesh.is_empty() {
        return Err(Error::Config("cube mesh is empty".into()));
    }
    let n = kernel.n();
    let mut ev = Evaluator::new(kernel);
    let mut values = Vec::with_capacity(mesh.len());
    let mut gap = 0.0f64;
    for cube in mesh {
        if cube.origin.len() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                found: cube.origin.len(),
            });
        }
        let coarse = cube_average(&mut ev, cube, quad_level)?;
        let fine = cube_average(&mut ev, cube, quad_level + 1)?;
        gap = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(gap, f64::max);
        values.push(Matrix::from_rows(n, n, fine));
    }
    let family = OperatorFamily::euclidean(values.clone())?;
    let k = family.len().min(8);
    let opts = RBoundOptions {
        restarts: 4,
        iterations: 30,
    };
    let rbound = rbound_estimate(&family, 2.0, k, SignMode::Exact, 0, &opts)?.lower;
    Ok(WbpReport {
        values,
        quad_level: quad_level + 1,
        cauchy_gap: gap,
        converged: gap <= options.wbp_tol,
        rbound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct T1Coefficient {
    /// `t(1, ψ)`.
    pub value: Matrix,
    /// `t(χ, ψ)`.
    pub near: Matrix,
    pub far: Matrix,
    /// Certified bound on the neglected far field.
    pub tail: f64,
    /// Outer half-width of the integrated region.
    pub radius: f64,
    pub shells: usize,
    pub dilation: usize,
}

/// Support cube of a scalar step function: integer lower corner at the
/// finest level and side in finest cells.
fn support_cube(psi: &StepFunction) -> Result<(Vec<usize>, usize)> {
    let grid = psi.grid();
    let support = psi.support();
    if support.is_empty() {
        return Err(Error::Config("test function vanishes".into()));
    }
    let d = grid.dim();
    let mut lo = vec![usize::MAX; d];
    let mut hi = vec![0usize; d];
    for &c in &support {
        for (a, &i) in grid.multi_index(grid.levels(), c).iter().enumerate() {
            lo[a] = lo[a].min(i);
            hi[a] = hi[a].max(i + 1);
        }
    }
    let extent = hi[0] - lo[0];
    if (0..d).any(|a| hi[a] - lo[a] != extent) {
        return Err(Error::Unsupported(
            "test functions must be supported on a cube",
        ));
    }
    Ok((lo, extent))
}

/// Tensor Gauss–Legendre nodes on `lo + [0, side)^d`.
fn tensor_rule(
    lo: &[f64],
    side: f64,
    nodes: &[f64],
    weights: &[f64],
    mut f: impl FnMut(&[f64], f64),
) {
    let d = lo.len();
    let q = nodes.len();
    let total = q.pow(d as u32);
    let mut x = vec![0.0; d];
    for t in 0..total {
        let mut rem = t;
        let mut w = 1.0;
        for a in 0..d {
            let i = rem % q;
            rem /= q;
            x[a] = lo[a] + 0.5 * side * (nodes[i] + 1.0);
            w *= 0.5 * side * weights[i];
        }
        f(&x, w);
    }
}

/// `t(1, ψ) = t(χ, ψ) + ∬ ⟨[K(x,y) − K(z,y)](1 − χ(y)), ψ(x)⟩ dx dy` for a
/// zero-mean scalar `ψ`, `z` the center of its support cube `S` and `χ` the
/// indicator of the concentric cube of side `m·|S|`, `m` the least odd
/// integer `≥ dilation` for which `χ` contains the kernel's breakpoints.
pub fn t1_coeff(
    kernel: &dyn Kernel,
    psi: &StepFunction,
    options: &QuadOptions,
) -> Result<T1Coefficient> {
    let grid = psi.grid();
    check_grid(kernel, grid)?;
    if psi.width() != 1 {
        return Err(Error::Unsupported("test functions are scalar"));
    }
    let quad_level = options.level_for(grid);
    let bits = refinement(grid, quad_level)?;
    let l1: f64 =
        psi.values().iter().map(|v| v.abs()).sum::<f64>() * grid.cell_measure(grid.levels());
    if psi.integral()[0].abs() > 1e-12 * l1.max(1e-300) {
        return Err(Error::Config("test function must have zero mean".into()));
    }
    let d = grid.dim();
    let n = kernel.n();
    let fine = grid.side(grid.levels());
    let (lo, extent) = support_cube(psi)?;
    let s = extent as f64 * fine;
    let z: Vec<f64> = lo
        .iter()
        .map(|&l| (l as f64 + 0.5 * extent as f64) * fine)
        .collect();

    let mut m = options.dilation.max(1) | 1;
    let mut x_level = grid.levels();
    if let Some(bp) = kernel.breakpoints() {
        if bp.level > quad_level {
            return Err(Error::Config(
                "quad_level must resolve the kernel breakpoints".into(),
            ));
        }
        x_level = x_level.max(bp.level);
        let reach = (0..d)
            .map(|a| (z[a] - bp.lo[a]).max(bp.hi[a] - z[a]))
            .fold(0.0, f64::max);
        while 0.5 * m as f64 * s < reach {
            m += 2;
        }
    }

    // Near part on the lattice.
    let h = fine / (1u64 << bits) as f64;
    let per = 1usize << bits;
    let mut xs = Nodes::new(d);
    for c in psi.support() {
        let v = psi.at(c)[0];
        let clo: Vec<i64> = grid
            .multi_index(grid.levels(), c)
            .iter()
            .map(|&i| (i * per) as i64)
            .collect();
        xs.push_box(&vec![0.0; d], h, &clo, per, v);
    }
    let chi_cells = m * extent * per;
    let chi_lo: Vec<i64> = lo
        .iter()
        .map(|&l| (l * per) as i64 - ((m - 1) / 2 * extent * per) as i64)
        .collect();
    let mut ys = Nodes::new(d);
    ys.push_box(&vec![0.0; d], h, &chi_lo, chi_cells, 1.0);
    let mut ev = Evaluator::new(kernel);
    let mut near = vec![0.0; n * n];
    pair_sum(&mut ev, &xs, &ys, h, &mut near);

    // Far part: x by Gauss–Legendre on pieces, y by shells.
    let (gx, wx) = gauss_legendre(options.x_points.max(1));
    let piece_bits = x_level - grid.levels();
    let pieces_per = 1usize << piece_bits;
    let piece = fine / pieces_per as f64;
    let mut x_nodes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in psi.support() {
        let v = psi.at(c)[0];
        let base = grid.unwrapped_origin(grid.levels(), c);
        for t in 0..pieces_per.pow(d as u32) {
            let mut rem = t;
            let plo: Vec<f64> = (0..d)
                .map(|a| {
                    let i = rem % pieces_per;
                    rem /= pieces_per;
                    base[a] + i as f64 * piece
                })
                .collect();
            tensor_rule(&plo, piece, &gx, &wx, |x, w| {
                x_nodes.push((x.to_vec(), w * v))
            });
        }
    }
    let weight_sum: f64 = x_nodes.iter().map(|(_, w)| w).sum();
    let (gy, wy) = gauss_legendre(options.far_points.max(1));
    let split = options.far_split.max(1);
    let r = 0.5 * s * (d as f64).sqrt();
    let target = options.r_max_diameters * s;
    let mut inner = 0.5 * m as f64 * s;
    let mut far = vec![0.0; n * n];
    let mut kz = vec![0.0; n * n];
    let mut shells = 0;
    let tail;
    loop {
        if shells >= options.max_shells {
            return Err(Error::Quadrature(format!(
                "tail bound above {} after {} shells (radius {})",
                options.tol, shells, inner
            )));
        }
        let sub = inner / split as f64;
        for t in 0..4usize.pow(d as u32) {
            let pos: Vec<i64> = (0..d)
                .map(|a| ((t / 4usize.pow(a as u32)) % 4) as i64 - 2)
                .collect();
            if pos.iter().all(|&p| p == -1 || p == 0) {
                continue;
            }
            for u in 0..split.pow(d as u32) {
                let clo: Vec<f64> = (0..d)
                    .map(|a| {
                        z[a] + pos[a] as f64 * inner
                            + ((u / split.pow(a as u32)) % split) as f64 * sub
                    })
                    .collect();
                tensor_rule(&clo, sub, &gy, &wy, |y, w| {
                    kz.copy_from_slice(ev.eval(&z, y));
                    for (x, wxv) in &x_nodes {
                        let k = ev.eval(x, y);
                        far.iter_mut().zip(k).for_each(|(f, kv)| *f += w * wxv * kv);
                    }
                    far.iter_mut()
                        .zip(&kz)
                        .for_each(|(f, kv)| *f -= w * weight_sum * kv);
                });
            }
        }
        inner *= 2.0;
        shells += 1;
        if inner >= target {
            let bound = kernel
                .tail_bound(r, l1, inner)
                .ok_or_else(|| Error::Quadrature("kernel provides no tail bound".into()))?;
            if bound <= options.tol {
                tail = bound;
                break;
            }
        }
    }
    let value: Vec<f64> = near.iter().zip(&far).map(|(a, b)| a + b).collect();
    Ok(T1Coefficient {
        value: Matrix::from_rows(n, n, value),
        near: Matrix::from_rows(n, n, near),
        far: Matrix::from_rows(n, n, far),
        tail,
        radius: inner,
        shells,
        dilation: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::kernel::{
        BeurlingAhlforsKernel, ConvolutionKernel, HilbertKernel, Profile, ZeroKernel,
    };
    use core::f64::consts::PI;

    fn indicator(grid: &DyadicGrid, cells: &[usize]) -> StepFunction {
        let mut v = vec![0.0; grid.fine_count()];
        cells.iter().for_each(|&c| v[c] = 1.0);
        StepFunction::scalar(grid, v).unwrap()
    }

    fn hilbert_rect(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let f = |u: f64| if u == 0.0 { 0.0 } else { u * u.abs().ln() - u };
        -(f(x1 - y1) - f(x1 - y0) - f(x0 - y1) + f(x0 - y0)) / PI
    }

    #[test]
    fn hilbert_worked_example() {
        let g = make_grid(1, 2, &[]).unwrap();
        let f = indicator(&g, &[0]);
        let gg = indicator(&g, &[2]);
        let v = form(&HilbertKernel, &f, &gg, 8).unwrap();
        assert!((v - 0.041637).abs() < 1e-4, "{v}");
        assert!((v - hilbert_rect(0.5, 0.75, 0.0, 0.25)).abs() < 1e-5);
    }

    #[test]
    fn form_rejects_overlap_and_coarse_levels() {
        let g = make_grid(1, 2, &[]).unwrap();
        let f = indicator(&g, &[0, 1]);
        let gg = indicator(&g, &[1]);
        assert_eq!(
            form(&HilbertKernel, &f, &gg, 6),
            Err(Error::OverlappingSupports)
        );
        let gg = indicator(&g, &[3]);
        assert!(form(&HilbertKernel, &f, &gg, 2).is_err());
        let zero = StepFunction::scalar(&g, vec![0.0; 4]).unwrap();
        assert_eq!(form(&HilbertKernel, &zero, &gg, 6).unwrap(), 0.0);
    }

    #[test]
    fn odd_kernel_cancels_on_reflected_pairs() {
        let g = make_grid(1, 3, &[]).unwrap();
        let f = indicator(&g, &[2, 5]);
        let gg = indicator(&g, &[3, 4]);
        assert!(form(&HilbertKernel, &f, &gg, 7).unwrap().abs() < 1e-12);
    }

    #[test]
    fn wbp_values() {
        let g = make_grid(1, 2, &[]).unwrap();
        let mesh = cube_mesh(&g);
        assert_eq!(mesh.len(), 14);
        let opts = QuadOptions::default();
        let rep = wbp(&HilbertKernel, &mesh, 7, &opts).unwrap();
        assert!(rep.values.iter().all(|m| m.data[0].abs() < 1e-10));
        assert!(rep.converged);
        let bump = ConvolutionKernel::new(Profile::Bump, 1, vec![2.0]).unwrap();
        let rep = wbp(&bump, &mesh, 7, &opts).unwrap();
        for (cube, m) in mesh.iter().zip(&rep.values) {
            let s = cube.side();
            assert!((m.data[0] - 2.0 * (s - s * s / 3.0)).abs() < 1e-4);
        }
        assert!(rep.converged);
        assert!((rep.rbound - 2.0 * (2.0 / 3.0)).abs() < 1e-3);
    }

    #[test]
    fn hilbert_t1_vanishes() {
        let g = make_grid(1, 3, &[]).unwrap();
        for h in g.haar_basis().iter().take(4) {
            let psi = StepFunction::scalar(&g, h.values(&g)).unwrap();
            let c = t1_coeff(&HilbertKernel, &psi, &QuadOptions::with_level(9)).unwrap();
            assert!(c.value.data[0].abs() < 1e-6 + c.tail, "{:?}", c);
            assert!(c.tail <= 1e-6);
        }
    }

    #[test]
    fn zero_kernel_and_mean_check() {
        let g = make_grid(1, 2, &[]).unwrap();
        let psi = StepFunction::scalar(&g, vec![1.0, -1.0, 0.0, 0.0]).unwrap();
        let c = t1_coeff(&ZeroKernel { dim: 1, n: 2 }, &psi, &QuadOptions::default()).unwrap();
        assert!(c.value.data.iter().all(|&v| v == 0.0));
        let bad = StepFunction::scalar(&g, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(t1_coeff(&HilbertKernel, &bad, &QuadOptions::default()).is_err());
    }

    #[test]
    fn beurling_ahlfors_t1_is_small() {
        let g = make_grid(2, 1, &[]).unwrap();
        let h = g.haar_basis()[0];
        let psi = StepFunction::scalar(&g, h.values(&g)).unwrap();
        let opts = QuadOptions {
            quad_level: 4,
            tol: 1e-2,
            far_split: 1,
            ..QuadOptions::default()
        };
        let c = t1_coeff(&BeurlingAhlforsKernel, &psi, &opts).unwrap();
        assert!(c.value.data.iter().all(|v| v.abs() < 2e-2), "{:?}", c.value);
    }
}
