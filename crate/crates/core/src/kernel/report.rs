//! Symbol reconstruction, the symmetry hypothesis and the assembled
//! `β²(C_T + ‖b‖_BMO)` bound.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;

use super::quad::{cube_mesh, discretized_operator, t1_coeff, wbp, QuadOptions, WbpReport};
use super::{check_grid, Kernel, Swapped};
use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::linalg::{self, Matrix};
use crate::martingale::{haar_synthesis, umd_transform_norm, HaarExpansion, SignMode, UmdOptions};
use crate::norms::bmo_nondyadic;
use crate::paraproduct::{operator_norm, NormOptions, Symbol};
use crate::rbound::{rbound_estimate, OperatorFamily, RBoundOptions};
use crate::rng;
use crate::step::StepFunction;
use crate::value::ValueSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `t(1, ·)`.
    Left,
    /// `t(·, 1)`.
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub side: Side,
    pub symbol: Symbol,
    /// `t(1, h_I)` (or `t(h_I, 1)`) in Haar basis order.
    pub coefficients: Vec<Matrix>,
    /// Largest tail bound divided by `‖h_I‖²`.
    pub max_tail: f64,
}

/// `b = Σ_I t(1, h_I) h_I / ‖h_I‖²` (mean zero), or the same with `t(h_I, 1)`
/// computed from the kernel `K(y, x)`.
pub fn reconstruct_b(
    kernel: &dyn Kernel,
    grid: &DyadicGrid,
    side: Side,
    options: &QuadOptions,
) -> Result<Reconstruction> {
    check_grid(kernel, grid)?;
    let swapped = Swapped(kernel);
    let k: &dyn Kernel = match side {
        Side::Left => kernel,
        Side::Right => &swapped,
    };
    let n = kernel.n();
    let basis = grid.haar_basis();
    let mut coefficients = Vec::with_capacity(basis.len());
    let mut flat = Vec::with_capacity(basis.len() * n * n);
    let mut max_tail = 0.0f64;
    for h in &basis {
        let psi = StepFunction::scalar(grid, h.values(grid))?;
        let c = t1_coeff(k, &psi, options)?;
        let norm = h.norm_sq(grid);
        flat.extend(c.value.data.iter().map(|v| v / norm));
        max_tail = max_tail.max(c.tail / norm);
        coefficients.push(c.value);
    }
    let expansion = HaarExpansion {
        width: n * n,
        mean: vec![0.0; n * n],
        coefficients: flat,
    };
    let values = haar_synthesis(grid, &expansion);
    let symbol = Symbol::euclidean(grid, n, n, values)?;
    Ok(Reconstruction {
        side,
        symbol,
        coefficients,
        max_tail,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub pass: bool,
    /// `max_I ‖t(1, h_I) − t(h_I, 1)‖ / ‖h_I‖²` in operator norm.
    pub max_discrepancy: f64,
    pub tol: f64,
    pub slack: f64,
    /// `(b_left + b_right)/2`.
    pub b: Symbol,
    pub left: Reconstruction,
    pub right: Reconstruction,
}

pub fn symmetry_check(
    kernel: &dyn Kernel,
    grid: &DyadicGrid,
    tol: f64,
    options: &QuadOptions,
) -> Result<SymmetryReport> {
    let left = reconstruct_b(kernel, grid, Side::Left, options)?;
    let right = reconstruct_b(kernel, grid, Side::Right, options)?;
    let mut max_discrepancy = 0.0f64;
    for ((h, a), b) in grid
        .haar_basis()
        .iter()
        .zip(&left.coefficients)
        .zip(&right.coefficients)
    {
        let diff = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
        let m = Matrix::from_rows(a.rows, a.cols, diff);
        max_discrepancy = max_discrepancy.max(spectral(&m) / h.norm_sq(grid));
    }
    let slack = left.max_tail + right.max_tail;
    let avg = left
        .symbol
        .function()
        .combine(0.5, right.symbol.function(), 0.5)?;
    let b = Symbol::new(avg)?;
    Ok(SymmetryReport {
        pass: max_discrepancy <= tol + slack,
        max_discrepancy,
        tol,
        slack,
        b,
        left,
        right,
    })
}

fn spectral(m: &Matrix) -> f64 {
    linalg::singular_values(m).first().copied().unwrap_or(0.0)
}

/// R-bounds (`p = 2`) of the sampled kernel families.
#[derive(Debug, Clone, PartialEq)]
pub struct CZReport {
    /// `{|x−y|^d K(x,y)}`.
    pub size_rbound: f64,
    /// `{|x−y|^{d+δ} [K(x,y) − K(z,y)] / |x−z|^δ : |x−y| > 2|x−z|}`.
    pub holder1_rbound: f64,
    /// The same in the second variable.
    pub holder2_rbound: f64,
    /// `{t(1_Q, 1_Q)/|Q|}`.
    pub wbp_rbound: f64,
    pub c_t: f64,
    /// Largest operator norm in each sampled family.
    pub size_sup: f64,
    pub holder1_sup: f64,
    pub holder2_sup: f64,
    pub samples: usize,
    pub seed: u64,
}

impl CZReport {
    pub fn with_wbp(mut self, wbp_rbound: f64) -> Self {
        self.wbp_rbound = wbp_rbound;
        self.c_t = self.size_rbound + self.holder1_rbound + self.holder2_rbound + wbp_rbound;
        self
    }
}

fn unit_direction(r: &mut rng::Rng, d: usize) -> Vec<f64> {
    loop {
        let v = rng::gaussian_vec(r, d);
        let norm = linalg::norm2(&v);
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn family_rbound(ops: Vec<Matrix>, seed: u64) -> Result<f64> {
    let family = OperatorFamily::euclidean(ops)?;
    let k = family.len().min(8);
    let opts = RBoundOptions {
        restarts: 4,
        iterations: 30,
    };
    Ok(rbound_estimate(&family, 2.0, k, SignMode::Exact, seed, &opts)?.lower)
}

/// Samples admissible triples: `x` uniform in `[0,1)^d`, `y = x + r u` with
/// `r` log-uniform in `[10^{-3}, 10]`, and `z` uniform in the ball of radius
/// `|x−y|/2` around `x` (first variable) or `y` (second variable).
pub fn cz_constants(kernel: &dyn Kernel, n_samples: usize, seed: u64) -> Result<CZReport> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    let d = kernel.dim();
    let n = kernel.n();
    let delta = kernel.delta();
    let mut r = rng::substream(seed, "cz-constants", 0);
    let mut ev = super::quad::Evaluator::new(kernel);
    let (mut size, mut h1, mut h2) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n_samples {
        let x: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
        let dist = 10f64.powf(r.random_range(-3.0..1.0));
        let u = unit_direction(&mut r, d);
        let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + dist * b).collect();
        let k_xy = ev.eval(&x, &y).to_vec();
        size.push(Matrix::from_rows(
            n,
            n,
            k_xy.iter().map(|v| v * dist.powi(d as i32)).collect(),
        ));
        for (family, first) in [(&mut h1, true), (&mut h2, false)] {
            let rho = loop {
                let t = r.random::<f64>().powf(1.0 / d as f64) * 0.5 * dist;
                if t > 0.0 && t < 0.5 * dist {
                    break t;
                }
            };
            let v = unit_direction(&mut r, d);
            let base = if first { &x } else { &y };
            let z: Vec<f64> = base.iter().zip(&v).map(|(a, b)| a + rho * b).collect();
            let k_other = if first {
                ev.eval(&z, &y).to_vec()
            } else {
                ev.eval(&x, &z).to_vec()
            };
            let scale = dist.powf(d as f64 + delta) / rho.powf(delta);
            let data = k_xy
                .iter()
                .zip(&k_other)
                .map(|(a, b)| scale * (a - b))
                .collect();
            family.push(Matrix::from_rows(n, n, data));
        }
    }
    let sup = |ops: &[Matrix]| ops.iter().map(spectral).fold(0.0, f64::max);
    let (size_sup, holder1_sup, holder2_sup) = (sup(&size), sup(&h1), sup(&h2));
    let size_rbound = family_rbound(size, seed)?;
    let holder1_rbound = family_rbound(h1, seed)?;
    let holder2_rbound = family_rbound(h2, seed)?;
    Ok(CZReport {
        size_rbound,
        holder1_rbound,
        holder2_rbound,
        wbp_rbound: 0.0,
        c_t: size_rbound + holder1_rbound + holder2_rbound,
        size_sup,
        holder1_sup,
        holder2_sup,
        samples: n_samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct T1ReportOptions {
    pub quad: QuadOptions,
    pub symmetry_tol: f64,
    pub cz_samples: usize,
    pub seed: u64,
    /// Allowed factor between the measured norm and the assembled bound.
    pub scale_factor: f64,
}

impl Default for T1ReportOptions {
    fn default() -> Self {
        T1ReportOptions {
            quad: QuadOptions::default(),
            symmetry_tol: 1e-4,
            cz_samples: 200,
            seed: 0,
            scale_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct T1Report {
    pub cz: CZReport,
    pub wbp: WbpReport,
    pub symmetry_discrepancy: f64,
    pub b_bmo: f64,
    pub beta: f64,
    /// `β²(C_T + ‖b‖_BMO)`.
    pub bound: f64,
    /// Lower bound for the norm of the discretized operator.
    pub measured: f64,
    pub ratio: f64,
    pub scale_factor: f64,
    pub within: bool,
    pub quad_level: usize,
}

/// Checks `t(1,·) = t(·,1)`, assembles `β²(C_T + ‖b‖_BMO)` and compares it with
/// the measured `L^p` norm of the discretized operator.
pub fn t1_bound_report(
    kernel: &dyn Kernel,
    grid: &DyadicGrid,
    p: f64,
    options: &T1ReportOptions,
) -> Result<T1Report> {
    check_grid(kernel, grid)?;
    let quad_level = options.quad.level_for(grid);
    let sym = symmetry_check(kernel, grid, options.symmetry_tol, &options.quad)?;
    if !sym.pass {
        return Err(Error::Hypothesis(format!(
            "t(1,·) and t(·,1) differ by {:.3e} (tolerance {:.3e} + slack {:.3e})",
            sym.max_discrepancy, sym.tol, sym.slack
        )));
    }
    let wbp = wbp(kernel, &cube_mesh(grid), quad_level, &options.quad)?;
    let cz = cz_constants(kernel, options.cz_samples, options.seed)?.with_wbp(wbp.rbound);
    let b_bmo = bmo_nondyadic(sym.b.function(), 3)?;
    let n = kernel.n();
    let space = ValueSpace::euclidean(n);
    let umd = UmdOptions {
        seed: options.seed,
        ..UmdOptions::default()
    };
    let beta = umd_transform_norm(p, &space, grid, &umd)?.estimate;
    let bound = beta * beta * (cz.c_t + b_bmo);
    let matrix = discretized_operator(kernel, grid, quad_level)?;
    let norm_opts = NormOptions {
        seed: options.seed,
        ..NormOptions::default()
    };
    let measured = operator_norm(&matrix, &space, &space, p, &norm_opts)?.lower;
    let ratio = if measured == 0.0 {
        0.0
    } else if bound == 0.0 {
        f64::INFINITY
    } else {
        measured / bound
    };
    Ok(T1Report {
        cz,
        wbp,
        symmetry_discrepancy: sym.max_discrepancy,
        b_bmo,
        beta,
        bound,
        measured,
        ratio,
        scale_factor: options.scale_factor,
        within: measured <= options.scale_factor * bound + 1e-12,
        quad_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::kernel::{HilbertKernel, MultiplicationKernel, Profile, ScaledKernel, ZeroKernel};
    use core::f64::consts::PI;

    #[test]
    fn hilbert_constants() {
        let rep = cz_constants(&HilbertKernel, 100, 3).unwrap();
        assert!((rep.size_rbound - 1.0 / PI).abs() < 1e-12);
        assert!(rep.holder1_sup >= 1.0 / PI && rep.holder1_sup <= 2.0 / PI + 1e-12);
        assert!(rep.holder2_sup >= 1.0 / PI && rep.holder2_sup <= 2.0 / PI + 1e-12);
        let scaled = ScaledKernel {
            inner: alloc::boxed::Box::new(HilbertKernel),
            alpha: -2.0,
        };
        let s = cz_constants(&scaled, 100, 3).unwrap();
        assert!((s.holder1_rbound - 2.0 * rep.holder1_rbound).abs() < 1e-9);
    }

    #[test]
    fn hilbert_symbol_vanishes() {
        let g = make_grid(1, 3, &[]).unwrap();
        let rep = symmetry_check(&HilbertKernel, &g, 1e-4, &QuadOptions::with_level(7)).unwrap();
        assert!(rep.pass);
        assert!(rep.b.values().iter().all(|v| v.abs() < 1e-4));
    }

    #[test]
    fn one_sided_multiplication_breaks_symmetry() {
        let g = make_grid(1, 2, &[]).unwrap();
        let a = StepFunction::new(
            g.clone(),
            ValueSpace::euclidean_operator(1, 1),
            vec![1.0, -1.0, 2.0, 0.5],
        )
        .unwrap();
        let profile = Profile::Gaussian {
            c: 1.0,
            width: 0.25,
        };
        let one = MultiplicationKernel::new(a.clone(), profile, true).unwrap();
        let opts = QuadOptions::with_level(7);
        let rep = symmetry_check(&one, &g, 1e-4, &opts).unwrap();
        assert!(!rep.pass, "{}", rep.max_discrepancy);
        let err = t1_bound_report(
            &one,
            &g,
            2.0,
            &T1ReportOptions {
                quad: opts.clone(),
                ..Default::default()
            },
        );
        assert!(matches!(err, Err(Error::Hypothesis(_))));
        let two = MultiplicationKernel::new(a, profile, false).unwrap();
        assert!(symmetry_check(&two, &g, 1e-4, &opts).unwrap().pass);
    }

    #[test]
    fn zero_and_hilbert_reports() {
        let g = make_grid(1, 3, &[]).unwrap();
        let opts = T1ReportOptions {
            quad: QuadOptions::with_level(7),
            cz_samples: 50,
            ..Default::default()
        };
        let z = t1_bound_report(&ZeroKernel { dim: 1, n: 1 }, &g, 2.0, &opts).unwrap();
        assert_eq!((z.bound, z.measured, z.ratio), (0.0, 0.0, 0.0));
        let h = t1_bound_report(&HilbertKernel, &g, 2.0, &opts).unwrap();
        assert!(h.within);
        assert!(h.measured > 0.5 && h.measured < 1.2, "{}", h.measured);
        assert!(h.b_bmo < 1e-3);
        assert_eq!(h.beta, 1.0);
    }
}
