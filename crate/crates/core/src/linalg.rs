//! Small dense linear algebra: matrices, Jacobi eigen/SVD solvers, Lanczos
//! for the spectral norm of matrix-free operators, and a nonlinear power
//! method for mixed `L^p(ℓ²)` operator norms.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;

use crate::rng;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shapes");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `y = A x`.
    pub fn gemv_into(&self, x: &[f64], y: &mut [f64]) {
        gemv(&self.data, self.rows, self.cols, x, y);
    }

    /// `x = Aᵀ y`.
    pub fn gemv_t_into(&self, y: &[f64], x: &mut [f64]) {
        gemv_t(&self.data, self.rows, self.cols, y, x);
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `y = A x` for a row-major `rows × cols` slice.
pub fn gemv(a: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    for i in 0..rows {
        let row = &a[i * cols..(i + 1) * cols];
        y[i] = row.iter().zip(x).map(|(p, q)| p * q).sum();
    }
}

/// `y = Aᵀ x` for a row-major `rows × cols` slice.
pub fn gemv_t(a: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    y[..cols].iter_mut().for_each(|v| *v = 0.0);
    for i in 0..rows {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        let row = &a[i * cols..(i + 1) * cols];
        for (yj, &aij) in y.iter_mut().zip(row) {
            *yj += aij * xi;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Frobenius norm of a matrix stored as a flat slice.
pub fn frobenius_slice(a: &[f64]) -> f64 {
    norm2(a)
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigen-decomposition of a symmetric `n × n` matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in descending order and the matching
/// eigenvectors as the columns of a row-major matrix.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    assert_eq!(a.rows, a.cols, "symmetric_eigen needs a square matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += m.get(i, i) * m.get(i, i);
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off <= 1e-32 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(j, j)
            .partial_cmp(&m.get(i, i))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, new, v.get(k, old));
        }
    }
    (values, vectors)
}

/// Thin singular value decomposition by one-sided (Hestenes) Jacobi.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Singular values, descending.
    pub values: Vec<f64>,
    /// Right singular vectors as columns (`cols × k`).
    pub right: Matrix,
}

pub fn svd(a: &Matrix) -> Svd {
    // Work on the orientation with fewer columns.
    let transposed = a.cols > a.rows;
    let work = if transposed { a.transpose() } else { a.clone() };
    let (m, n) = (work.rows, work.cols);
    // Columns of `u` (stored contiguously) are rotated until mutually orthogonal.
    let mut u: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| work.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let total: f64 = work.data.iter().map(|x| x * x).sum();
    // Columns below this squared norm are round-off and left alone.
    let negligible = total * 1e-30;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (up, uq) = (&u[p], &u[q]);
                    (dot(up, up), dot(uq, uq), dot(up, uq))
                };
                if alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= 1e-15 * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = u.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = u.iter().map(|col| norm2(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let right = if transposed {
        // Right singular vectors of A are the normalized columns of U for Aᵀ.
        let mut r = Matrix::zeros(m, n);
        for (new, &old) in order.iter().enumerate() {
            let s = norms[old];
            for i in 0..m {
                r.set(i, new, if s > 0.0 { u[old][i] / s } else { 0.0 });
            }
        }
        r
    } else {
        let mut r = Matrix::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            for i in 0..n {
                r.set(i, new, v[old][i]);
            }
        }
        r
    };
    Svd { values, right }
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

pub fn singular_values(a: &Matrix) -> Vec<f64> {
    svd(a).values
}

/// A linear map between finite-dimensional coordinate spaces, given by its
/// action and the action of its transpose.
pub trait LinearMap {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `x = Aᵀ y`.
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]);
}

impl LinearMap for Matrix {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        gemv(&self.data, self.rows, self.cols, x, y);
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        gemv_t(&self.data, self.rows, self.cols, y, x);
    }
}

/// Materialize any linear map as a dense matrix (column by column).
pub fn to_dense<M: LinearMap + ?Sized>(map: &M) -> Matrix {
    let (r, c) = (map.rows(), map.cols());
    let mut out = Matrix::zeros(r, c);
    let mut e = vec![0.0; c];
    let mut col = vec![0.0; r];
    for j in 0..c {
        e[j] = 1.0;
        map.apply(&e, &mut col);
        for i in 0..r {
            out.data[i * c + j] = col[i];
        }
        e[j] = 0.0;
    }
    out
}

/// Largest singular value of a linear map with a maximizing right vector.
#[derive(Debug, Clone)]
pub struct SpectralNorm {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Residual bound on the top eigenvalue of `AᵀA` (0 for the dense path).
    pub residual: f64,
}

/// Below this many columns the map is materialized and decomposed densely.
pub const DENSE_SPECTRAL_LIMIT: usize = 96;

/// Spectral norm `‖A‖₂→₂`. Small maps are materialized and decomposed by
/// Jacobi SVD; larger ones use Lanczos on `AᵀA` with full
/// reorthogonalization until the top Ritz pair has relative residual below
/// `1e-13`.
pub fn spectral_norm<M: LinearMap + ?Sized>(map: &M) -> SpectralNorm {
    let n = map.cols();
    if n == 0 || map.rows() == 0 {
        return SpectralNorm {
            value: 0.0,
            vector: vec![0.0; n],
            residual: 0.0,
        };
    }
    if n <= DENSE_SPECTRAL_LIMIT {
        let dense = to_dense(map);
        let s = svd(&dense);
        let vector = (0..n).map(|i| s.right.get(i, 0)).collect();
        return SpectralNorm {
            value: s.values[0],
            vector,
            residual: 0.0,
        };
    }
    lanczos_top(map)
}

fn lanczos_top<M: LinearMap + ?Sized>(map: &M) -> SpectralNorm {
    let n = map.cols();
    let max_steps = n.min(160);
    let mut rng = rng::substream(0x5eed, "lanczos", n as u64);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nq = norm2(&q);
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut tmp = vec![0.0; map.rows()];
    let mut w = vec![0.0; n];
    let mut best;
    basis.push(q);
    loop {
        let k = basis.len() - 1;
        map.apply(&basis[k], &mut tmp);
        map.apply_transpose(&tmp, &mut w);
        let alpha = dot(&w, &basis[k]);
        alphas.push(alpha);
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let beta = norm2(&w);
        let steps = basis.len();
        let check = steps == max_steps
            || beta <= 1e-14 * alpha.abs().max(1e-300)
            || steps.is_multiple_of(8);
        if check {
            let t = tridiagonal(&alphas, &betas);
            let (vals, vecs) = symmetric_eigen(&t);
            let theta = vals[0].max(0.0);
            let last = vecs.get(steps - 1, 0);
            let residual = beta * last.abs();
            let mut x = vec![0.0; n];
            for (j, b) in basis.iter().enumerate() {
                let c = vecs.get(j, 0);
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
            }
            best = SpectralNorm {
                value: theta.sqrt(),
                vector: x,
                residual,
            };
            if residual <= 1e-13 * theta.max(1e-300)
                || steps == max_steps
                || beta <= 1e-14 * alpha.abs().max(1e-300)
            {
                break;
            }
        }
        betas.push(beta);
        let next: Vec<f64> = w.iter().map(|v| v / beta).collect();
        basis.push(next);
    }
    best
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> Matrix {
    let m = alphas.len();
    let mut t = Matrix::zeros(m, m);
    for i in 0..m {
        t.set(i, i, alphas[i]);
        if i + 1 < m {
            t.set(i, i + 1, betas[i]);
            t.set(i + 1, i, betas[i]);
        }
    }
    t
}

/// Mixed norm `(Σ_i ‖x_i‖_q^p)^{1/p}` over consecutive blocks of length
/// `block` (`p = ∞` gives the max block norm).
pub fn block_pnorm(x: &[f64], block: usize, p: f64, q: f64) -> f64 {
    let norms = x.chunks(block).map(|c| crate::value::lq_norm(c, q));
    if p.is_infinite() {
        norms.fold(0.0, f64::max)
    } else {
        norms.map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Duality map of the mixed `ℓ^p(ℓ^q)` norm (up to normalization):
/// `x_ij ↦ ‖x_i‖_q^{p-q} |x_ij|^{q-1} sign(x_ij)`.
fn block_duality(x: &[f64], block: usize, p: f64, q: f64, out: &mut [f64]) {
    for (xi, oi) in x.chunks(block).zip(out.chunks_mut(block)) {
        let nrm = crate::value::lq_norm(xi, q);
        if nrm == 0.0 {
            oi.iter_mut().for_each(|o| *o = 0.0);
            continue;
        }
        let scale = nrm.powf(p - q);
        oi.iter_mut()
            .zip(xi)
            .for_each(|(o, v)| *o = scale * v.abs().powf(q - 1.0) * v.signum());
    }
}

/// Lower bound for `‖A‖` on the mixed space `ℓ^p(ℓ^q_block)` (unweighted)
/// by the nonlinear power method from several starts. Returns the best
/// ratio and its maximizer. Exponents must lie in `(1, ∞)`.
pub fn pnorm_power_method<M: LinearMap + ?Sized>(
    map: &M,
    block: usize,
    p: f64,
    q: f64,
    starts: &[Vec<f64>],
    iterations: usize,
) -> (f64, Vec<f64>) {
    let pd = p / (p - 1.0);
    let qd = q / (q - 1.0);
    let n = map.cols();
    let mut best = (0.0, vec![0.0; n]);
    let mut y = vec![0.0; map.rows()];
    let mut jy = vec![0.0; map.rows()];
    let mut z = vec![0.0; n];
    for start in starts {
        let mut x = start.clone();
        let nx = block_pnorm(&x, block, p, q);
        if nx == 0.0 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let mut last = 0.0;
        for _ in 0..iterations {
            map.apply(&x, &mut y);
            let ratio = block_pnorm(&y, block, p, q);
            if ratio > best.0 {
                best = (ratio, x.clone());
            }
            if ratio == 0.0 || (ratio - last).abs() <= 1e-14 * ratio {
                break;
            }
            last = ratio;
            block_duality(&y, block, p, q, &mut jy);
            map.apply_transpose(&jy, &mut z);
            block_duality(&z, block, pd, qd, &mut x);
            let nx = block_pnorm(&x, block, p, q);
            if nx == 0.0 {
                break;
            }
            x.iter_mut().for_each(|v| *v /= nx);
        }
    }
    best
}
