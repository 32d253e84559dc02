//! Function-space norms on the finite model: `L^p`, dyadic BMO (plain,
//! strong-operator and over shifted grids), dyadic `H¹`, and the `H¹–BMO`
//! pairing.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::linalg::{self, Matrix};
use crate::martingale::{self, raw_lp_norm};
use crate::rng;
use crate::step::StepFunction;
use crate::value::{self, ValueSpace};

/// How a reported norm was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    Exact,
    Sampled,
    Ascent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub method: NormMethod,
    /// Bound on how far `value` may sit below the true supremum (0 when exact,
    /// infinite when nothing is certified).
    pub slack: f64,
    pub evaluations: usize,
}

/// `(Σ_cells |Q| ‖f(Q)‖^p)^{1/p}`, or the largest value norm for `p = ∞`.
pub fn lp_norm(f: &StepFunction, p: f64) -> f64 {
    let grid = f.grid();
    raw_lp_norm(
        f.values(),
        f.width(),
        f.space(),
        p,
        grid.cell_measure(grid.levels()),
    )
}

/// Mean oscillation `⨍_Q ‖b − ⟨b⟩_Q‖` for every cell of levels `0..L`,
/// indexed `[k][cell]`.
pub fn mean_oscillations(b: &StepFunction) -> Vec<Vec<f64>> {
    let grid = b.grid();
    let w = b.width();
    let space = *b.space();
    let mut dev = vec![0.0; w];
    (0..grid.levels())
        .map(|k| {
            let avg = martingale::level_averages(grid, w, b.values(), k);
            (0..grid.cell_count(k))
                .map(|j| {
                    let mean = &avg[j * w..(j + 1) * w];
                    let range = grid.block(k, j);
                    let count = range.len() as f64;
                    range
                        .map(|i| {
                            dev.iter_mut()
                                .zip(b.at(i))
                                .zip(mean)
                                .for_each(|((d, v), m)| *d = v - m);
                            space.norm(&dev)
                        })
                        .sum::<f64>()
                        / count
                })
                .collect()
        })
        .collect()
}

/// Dyadic BMO norm `max_{Q, level < L} ⨍_Q ‖b − ⟨b⟩_Q‖` in the value-space
/// norm (operator norm for symbols). Finest cells never oscillate.
pub fn bmo_dyadic(b: &StepFunction) -> f64 {
    mean_oscillations(b)
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max)
}

/// Settings for [`bmo_so`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmoSoOptions {
    /// Sphere sample size; `None` uses `10^4·n` points for `n ≤ 4` and none above.
    pub sphere_points: Option<usize>,
    /// Random starts for the ascent (coordinate vectors are always used).
    pub ascent_starts: usize,
    pub ascent_iterations: usize,
    pub seed: u64,
}

impl Default for BmoSoOptions {
    fn default() -> Self {
        BmoSoOptions {
            sphere_points: None,
            ascent_starts: 4,
            ascent_iterations: 100,
            seed: 0,
        }
    }
}

/// Columns and rows of an operator-valued (or scalar) step function.
fn operator_shape(space: &ValueSpace) -> Result<(usize, usize)> {
    match *space {
        ValueSpace::Operator {
            n_in,
            q_in,
            n_out,
            q_out,
        } if q_in == 2.0 && q_out == 2.0 => Ok((n_out, n_in)),
        ValueSpace::Vector { n: 1, .. } => Ok((1, 1)),
        _ => Err(Error::Unsupported(
            "strong-operator BMO needs Euclidean operator values",
        )),
    }
}

/// Oscillation matrices `b(t) − ⟨b⟩_Q` for one cell.
struct CellOscillation {
    mats: Vec<f64>,
    count: usize,
}

impl CellOscillation {
    fn value(&self, rows: usize, cols: usize, x: &[f64], tmp: &mut [f64]) -> f64 {
        let w = rows * cols;
        let mut total = 0.0;
        for m in self.mats.chunks(w) {
            linalg::gemv(m, rows, cols, x, tmp);
            total += linalg::norm2(tmp);
        }
        total / self.count as f64
    }

    /// Gradient of the (convex, 1-homogeneous) cell functional at `x`.
    fn gradient(&self, rows: usize, cols: usize, x: &[f64], tmp: &mut [f64], grad: &mut [f64]) {
        let w = rows * cols;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut col = vec![0.0; cols];
        for m in self.mats.chunks(w) {
            linalg::gemv(m, rows, cols, x, tmp);
            let nrm = linalg::norm2(tmp);
            if nrm > 0.0 {
                linalg::gemv_t(m, rows, cols, tmp, &mut col);
                grad.iter_mut().zip(&col).for_each(|(g, c)| *g += c / nrm);
            }
        }
        grad.iter_mut().for_each(|g| *g /= self.count as f64);
    }
}

/// Strong-operator dyadic BMO `sup_{|x|=1} max_Q ⨍_Q ‖(b − ⟨b⟩_Q)x‖`.
///
/// The sphere is sampled (an exact half-circle lattice for `n = 2`, seeded
/// Gaussian directions otherwise), then the best samples and the coordinate
/// vectors are improved by the monotone ascent `x ← ∇φ_Q(x)/‖∇φ_Q(x)‖` on
/// the currently maximal cell. The result is a lower bound; `slack` bounds
/// the gap only when a lattice with known mesh was used.
pub fn bmo_so(b: &StepFunction, options: &BmoSoOptions) -> Result<NormReport> {
    let (rows, cols) = operator_shape(b.space())?;
    let grid = b.grid();
    let w = rows * cols;
    let mut cells: Vec<CellOscillation> = Vec::new();
    for k in 0..grid.levels() {
        let avg = martingale::level_averages(grid, w, b.values(), k);
        for j in 0..grid.cell_count(k) {
            let mean = &avg[j * w..(j + 1) * w];
            let range = grid.block(k, j);
            let count = range.len();
            let mut mats = Vec::with_capacity(count * w);
            for i in range {
                mats.extend(b.at(i).iter().zip(mean).map(|(v, m)| v - m));
            }
            if mats.iter().any(|&v| v != 0.0) {
                cells.push(CellOscillation { mats, count });
            }
        }
    }
    if cells.is_empty() {
        return Ok(NormReport {
            value: 0.0,
            method: NormMethod::Exact,
            slack: 0.0,
            evaluations: 0,
        });
    }
    let mut tmp = vec![0.0; rows];
    let mut evaluations = 0usize;
    let mut phi = |x: &[f64], evals: &mut usize| -> (f64, usize) {
        *evals += 1;
        let mut best = (0.0, 0);
        for (c, cell) in cells.iter().enumerate() {
            let v = cell.value(rows, cols, x, &mut tmp);
            if v > best.0 {
                best = (v, c);
            }
        }
        best
    };
    if cols == 1 {
        let (v, _) = phi(&[1.0], &mut evaluations);
        return Ok(NormReport {
            value: v,
            method: NormMethod::Exact,
            slack: 0.0,
            evaluations,
        });
    }
    let lipschitz = cells
        .iter()
        .map(|c| c.mats.chunks(w).map(linalg::frobenius_slice).sum::<f64>() / c.count as f64)
        .fold(0.0, f64::max);
    let points = options
        .sphere_points
        .unwrap_or(if cols <= 4 { 10_000 * cols } else { 0 });
    let mut best_val = 0.0;
    let mut method = NormMethod::Ascent;
    let mut slack = f64::INFINITY;
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    if points > 0 {
        method = NormMethod::Sampled;
        let mut r = rng::substream(options.seed, "bmo-so-sphere", cols as u64);
        for t in 0..points {
            let x: Vec<f64> = if cols == 2 {
                let theta = core::f64::consts::PI * t as f64 / points as f64;
                vec![theta.cos(), theta.sin()]
            } else {
                let mut g = rng::gaussian_vec(&mut r, cols);
                let n = linalg::norm2(&g);
                g.iter_mut().for_each(|v| *v /= n);
                g
            };
            let (v, _) = phi(&x, &mut evaluations);
            best_val = f64::max(best_val, v);
            if seeds.len() < 4 || v > seeds.last().map_or(0.0, |s| s.0) {
                seeds.push((v, x));
                seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
                seeds.truncate(4);
            }
        }
        if cols == 2 {
            // Every unit vector is within angle π/(2·points) of a lattice point
            // (up to sign), and φ is Lipschitz with the constant above.
            slack = lipschitz * core::f64::consts::PI / (2.0 * points as f64);
        }
    }
    let mut starts: Vec<Vec<f64>> = seeds.into_iter().map(|s| s.1).collect();
    for j in 0..cols {
        let mut e = vec![0.0; cols];
        e[j] = 1.0;
        starts.push(e);
    }
    let mut r = rng::substream(options.seed, "bmo-so-ascent", cols as u64);
    for _ in 0..options.ascent_starts {
        let mut g = rng::gaussian_vec(&mut r, cols);
        let n = linalg::norm2(&g);
        g.iter_mut().for_each(|v| *v /= n);
        starts.push(g);
    }
    let mut grad = vec![0.0; cols];
    let mut tmp2 = vec![0.0; rows];
    for mut x in starts {
        let (mut val, mut cell) = phi(&x, &mut evaluations);
        for _ in 0..options.ascent_iterations {
            cells[cell].gradient(rows, cols, &x, &mut tmp2, &mut grad);
            let n = linalg::norm2(&grad);
            if n == 0.0 {
                break;
            }
            let y: Vec<f64> = grad.iter().map(|g| g / n).collect();
            let (v, c) = phi(&y, &mut evaluations);
            if v <= val * (1.0 + 1e-14) {
                break;
            }
            x = y;
            val = v;
            cell = c;
        }
        if val > best_val {
            best_val = val;
        }
    }
    Ok(NormReport {
        value: best_val,
        method,
        slack,
        evaluations,
    })
}

/// Overlaps of the torus interval `[a, a+len)` with the `m` cells of a
/// uniform partition of `[0,1)`: `(cell, length)` pairs.
fn interval_overlaps(a: f64, len: f64, m: usize) -> Vec<(usize, f64)> {
    let h = 1.0 / m as f64;
    let mut out: Vec<(usize, f64)> = Vec::new();
    let start = grid_floor(a * m as f64);
    let mut t = start;
    loop {
        let lo = t as f64 * h;
        let hi = lo + h;
        let ov = (hi.min(a + len) - lo.max(a)).max(0.0);
        if lo >= a + len {
            break;
        }
        if ov > 0.0 {
            let idx = t.rem_euclid(m as i64) as usize;
            match out.iter_mut().find(|(i, _)| *i == idx) {
                Some(e) => e.1 += ov,
                None => out.push((idx, ov)),
            }
        }
        t += 1;
    }
    out
}

fn grid_floor(x: f64) -> i64 {
    let t = x as i64;
    if (t as f64) > x {
        t - 1
    } else {
        t
    }
}

/// BMO over shifted dyadic grids: the largest mean oscillation of `b` over
/// the cells (levels `0..=L`) of the grids shifted by `j/n_shifts` in each
/// coordinate, `j = 0..n_shifts`. Overlaps with the finest cells of `b`'s
/// grid are integrated exactly. A lower bound for the BMO norm over all cubes.
pub fn bmo_nondyadic(b: &StepFunction, n_shifts: usize) -> Result<f64> {
    if n_shifts == 0 {
        return Err(Error::Config("n_shifts must be at least 1".into()));
    }
    let grid = b.grid();
    let d = grid.dim();
    let levels = grid.levels();
    let m = 1usize << levels;
    let w = b.width();
    let space = *b.space();
    let total_shifts = n_shifts.pow(d as u32);
    let mut best = 0.0f64;
    let mut mean = vec![0.0; w];
    let mut dev = vec![0.0; w];
    // Finest-cell Morton index from per-axis fine indices.
    let fine_of = |idx: &[usize]| grid.morton(levels, idx);
    for s in 0..total_shifts {
        let shift: Vec<f64> = (0..d)
            .map(|a| ((s / n_shifts.pow(a as u32)) % n_shifts) as f64 / n_shifts as f64)
            .collect();
        for k in 0..=levels {
            let side = 1.0 / (1usize << k) as f64;
            let per_axis = 1usize << k;
            for cell in 0..per_axis.pow(d as u32) {
                let axes: Vec<Vec<(usize, f64)>> = (0..d)
                    .map(|a| {
                        let pos = (cell / per_axis.pow(a as u32)) % per_axis;
                        let origin = grid.shift()[a] + shift[a] + pos as f64 * side;
                        interval_overlaps(crate::grid::wrap_unit(origin), side, m)
                    })
                    .collect();
                let mut pieces: Vec<(usize, f64)> = Vec::new();
                let mut counter = vec![0usize; d];
                'outer: loop {
                    let idx: Vec<usize> = (0..d).map(|a| axes[a][counter[a]].0).collect();
                    let wgt: f64 = (0..d).map(|a| axes[a][counter[a]].1).product();
                    pieces.push((fine_of(&idx), wgt));
                    for a in 0..d {
                        counter[a] += 1;
                        if counter[a] < axes[a].len() {
                            continue 'outer;
                        }
                        counter[a] = 0;
                    }
                    break;
                }
                let measure: f64 = pieces.iter().map(|p| p.1).sum();
                mean.iter_mut().for_each(|v| *v = 0.0);
                for &(i, wgt) in &pieces {
                    mean.iter_mut()
                        .zip(b.at(i))
                        .for_each(|(mv, v)| *mv += wgt * v);
                }
                mean.iter_mut().for_each(|v| *v /= measure);
                let osc: f64 = pieces
                    .iter()
                    .map(|&(i, wgt)| {
                        dev.iter_mut()
                            .zip(b.at(i))
                            .zip(&mean)
                            .for_each(|((dv, v), mv)| *dv = v - mv);
                        wgt * space.norm(&dev)
                    })
                    .sum::<f64>()
                    / measure;
                best = best.max(osc);
            }
        }
    }
    Ok(best)
}

/// Dyadic `H¹` norm `‖M_d h‖₁` (nuclear norm for Euclidean tensor values).
pub fn h1_norm(h: &StepFunction) -> f64 {
    let m = martingale::maximal(h);
    lp_norm(&m, 1.0)
}

/// Result of an `H¹–BMO` pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    pub pairing: f64,
    pub bmo: f64,
    pub h1: f64,
    /// `|pairing| / (bmo · h1)`; 0 when both sides vanish, infinite if only
    /// the denominator does.
    pub bound_ratio: f64,
}

fn check_duality_shapes(b: &StepFunction, h: &StepFunction) -> Result<()> {
    b.grid()
        .eq(h.grid())
        .then_some(())
        .ok_or(Error::GridMismatch)?;
    let ok = match (*b.space(), *h.space()) {
        (ValueSpace::Operator { n_in, n_out, .. }, ValueSpace::Tensor { n, m, .. }) => {
            n_in == n && n_out == m
        }
        (ValueSpace::Vector { n: 1, .. }, ValueSpace::Vector { n: 1, .. }) => true,
        (ValueSpace::Vector { n: 1, .. }, ValueSpace::Tensor { n: 1, m: 1, .. }) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: b.width(),
            found: h.width(),
        })
    }
}

/// `⟨b, h⟩ = ∫ trace_pair(b(t), h(t)) dt` for an operator-valued `b` and a
/// tensor-valued `h` (or two scalar functions), with the bound ratio
/// against `‖b‖_{BMO_d} ‖h‖_{H¹_d}`.
pub fn duality_pair(b: &StepFunction, h: &StepFunction) -> Result<DualityReport> {
    check_duality_shapes(b, h)?;
    let grid = b.grid();
    let weight = grid.cell_measure(grid.levels());
    let w = b.width();
    let mut pairing = 0.0;
    for i in 0..grid.fine_count() {
        let bm = Matrix::from_rows(1, w, b.at(i).to_vec());
        let hv = value::TensorValue::from_coefficients(w, 1, h.at(i).to_vec());
        pairing += value::trace_pair(&bm, &hv)?;
    }
    pairing *= weight;
    let bmo = bmo_dyadic(b);
    let h1 = h1_norm(h);
    let denom = bmo * h1;
    let bound_ratio = if denom > 0.0 {
        pairing.abs() / denom
    } else if pairing == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(DualityReport {
        pairing,
        bmo,
        h1,
        bound_ratio,
    })
}

/// The same pairing summed over Haar coefficients:
/// `⟨b⟩⟨h⟩ + Σ_I ⟨c^b_I, c^h_I⟩ ‖h_I‖²`.
pub fn duality_pair_haar(b: &StepFunction, h: &StepFunction) -> Result<f64> {
    check_duality_shapes(b, h)?;
    let grid = b.grid();
    let w = b.width();
    let eb = martingale::haar_analysis(grid, w, b.values());
    let eh = martingale::haar_analysis(grid, w, h.values());
    let mut total = linalg::dot(&eb.mean, &eh.mean);
    for (idx, hf) in grid.haar_basis().iter().enumerate() {
        let cb = &eb.coefficients[idx * w..(idx + 1) * w];
        let ch = &eh.coefficients[idx * w..(idx + 1) * w];
        total += linalg::dot(cb, ch) * hf.norm_sq(grid);
    }
    Ok(total)
}

/// Per-level `E_k` of a grid's finest cells, exposed for reports.
pub fn level_means(grid: &DyadicGrid, f: &StepFunction, k: usize) -> Vec<f64> {
    martingale::level_averages(grid, f.width(), f.values(), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn haar(g: &DyadicGrid) -> StepFunction {
        StepFunction::scalar(g, g.haar_basis()[0].values(g)).unwrap()
    }

    fn diag_h_2h(g: &DyadicGrid) -> StepFunction {
        let h = g.haar_basis()[0].values(g);
        StepFunction::from_fn(g, ValueSpace::euclidean_operator(2, 2), |i, v| {
            v.copy_from_slice(&[h[i], 0.0, 0.0, 2.0 * h[i]]);
        })
    }

    #[test]
    fn lp_examples() {
        let g = make_grid(1, 2, &[]).unwrap();
        let f = StepFunction::scalar(&g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((lp_norm(&f, 2.0) - (7.5f64).sqrt()).abs() < 1e-14);
        assert!((lp_norm(&haar(&g), 2.0) - 1.0).abs() < 1e-15);
        let c = StepFunction::scalar(&g, vec![-3.0; 4]).unwrap();
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_norm(&c, p) - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn bmo_examples() {
        let g = make_grid(1, 2, &[]).unwrap();
        assert_eq!(
            bmo_dyadic(&StepFunction::scalar(&g, vec![5.0; 4]).unwrap()),
            0.0
        );
        assert_eq!(bmo_dyadic(&haar(&g)), 1.0);
        assert!((bmo_dyadic(&diag_h_2h(&g)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bmo_so_examples() {
        let g = make_grid(1, 2, &[]).unwrap();
        let r = bmo_so(&haar(&g), &BmoSoOptions::default()).unwrap();
        assert_eq!(r.value, 1.0);
        let r = bmo_so(&diag_h_2h(&g), &BmoSoOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12, "{}", r.value);
        let h = g.haar_basis()[0].values(&g);
        let e11 = StepFunction::from_fn(&g, ValueSpace::euclidean_operator(2, 2), |i, v| {
            v.copy_from_slice(&[h[i], 0.0, 0.0, 0.0]);
        });
        assert!((bmo_so(&e11, &BmoSoOptions::default()).unwrap().value - 1.0).abs() < 1e-12);
        assert!((bmo_dyadic(&e11) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nondyadic_examples() {
        let g = make_grid(1, 3, &[]).unwrap();
        assert_eq!(
            bmo_nondyadic(&StepFunction::scalar(&g, vec![2.0; 8]).unwrap(), 3).unwrap(),
            0.0
        );
        assert!((bmo_nondyadic(&haar(&g), 1).unwrap() - 1.0).abs() < 1e-12);
        let f = StepFunction::scalar(&g, vec![0.3, -1.0, 2.0, 0.5, 0.0, 1.5, -0.7, 0.2]).unwrap();
        let one = bmo_nondyadic(&f, 1).unwrap();
        assert!((one - bmo_dyadic(&f)).abs() < 1e-12);
        let two = bmo_nondyadic(&f, 2).unwrap();
        let four = bmo_nondyadic(&f, 4).unwrap();
        assert!(one <= two + 1e-15 && two <= four + 1e-15);
        assert!(bmo_nondyadic(&f, 0).is_err());
    }

    #[test]
    fn interval_overlap_wraps() {
        let ov = interval_overlaps(0.875, 0.25, 4);
        let total: f64 = ov.iter().map(|o| o.1).sum();
        assert!((total - 0.25).abs() < 1e-15);
        assert!(ov.iter().any(|o| o.0 == 3) && ov.iter().any(|o| o.0 == 0));
    }

    #[test]
    fn h1_examples() {
        let g = make_grid(1, 2, &[]).unwrap();
        assert!((h1_norm(&haar(&g)) - 1.0).abs() < 1e-15);
        assert!((h1_norm(&StepFunction::scalar(&g, vec![-2.0; 4]).unwrap()) - 2.0).abs() < 1e-15);
        let hv = g.haar_basis()[0].values(&g);
        let t = StepFunction::from_fn(&g, ValueSpace::euclidean_tensor(2, 2), |i, v| {
            v.copy_from_slice(&[hv[i], 0.0, 0.0, 0.0]);
        });
        assert!((h1_norm(&t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duality_examples() {
        let g = make_grid(1, 2, &[]).unwrap();
        let h = haar(&g);
        let r = duality_pair(&h, &h).unwrap();
        assert!((r.pairing - 1.0).abs() < 1e-15 && (r.bound_ratio - 1.0).abs() < 1e-15);
        let c = StepFunction::scalar(&g, vec![4.0; 4]).unwrap();
        let r = duality_pair(&c, &h).unwrap();
        assert_eq!(r.pairing, 0.0);
        assert_eq!(r.bound_ratio, 0.0);
        let f = StepFunction::scalar(&g, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let direct = duality_pair(&f, &c).unwrap().pairing;
        let haar_route = duality_pair_haar(&f, &c).unwrap();
        assert!((direct - haar_route).abs() < 1e-12);
        let t = StepFunction::zeros(&g, ValueSpace::euclidean_tensor(3, 2));
        assert!(duality_pair(&diag_h_2h(&g), &t).is_err());
    }
}
