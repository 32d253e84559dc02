//! Dyadic martingale machinery: conditional expectations `E_k`, martingale
//! differences `D_k`, the cancellative maximal function, random-sign
//! transforms and estimates of the transform (UMD) constant.
//!
//! Differences follow the convention `D_k = E_k − E_{k−1}` for `k ≥ 1` and
//! `D_0 = E_0`, so that `E_k = E_{k−1} + D_k` and `Σ_{k=0}^{L} D_k = Id`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::linalg::{self, LinearMap};
use crate::rng;
use crate::step::StepFunction;
use crate::value::ValueSpace;

/// Largest number of signs enumerated exhaustively.
pub const MAX_EXACT_SIGNS: usize = 20;

/// Largest `L` for which every sign pattern of a transform is enumerated.
pub const MAX_EXACT_TRANSFORM_LEVEL: usize = 12;

/// Cell averages of a finest-level array, for every level `0..=L`.
/// `out[k]` holds `cell_count(k) * width` coordinates.
pub fn pyramid(grid: &DyadicGrid, width: usize, values: &[f64]) -> Vec<Vec<f64>> {
    let levels = grid.levels();
    let children = 1usize << grid.dim();
    let mut out: Vec<Vec<f64>> = vec![Vec::new(); levels + 1];
    out[levels] = values.to_vec();
    for k in (0..levels).rev() {
        let finer = &out[k + 1];
        let mut coarse = vec![0.0; grid.cell_count(k) * width];
        for (j, dst) in coarse.chunks_mut(width).enumerate() {
            for c in 0..children {
                let src = &finer[(j * children + c) * width..(j * children + c + 1) * width];
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
            }
            dst.iter_mut().for_each(|d| *d /= children as f64);
        }
        out[k] = coarse;
    }
    out
}

/// Cell averages of `values` at level `k` only.
pub fn level_averages(grid: &DyadicGrid, width: usize, values: &[f64], k: usize) -> Vec<f64> {
    let count = grid.cell_count(k);
    let block = grid.fine_count() / count;
    let mut out = vec![0.0; count * width];
    for (j, dst) in out.chunks_mut(width).enumerate() {
        for i in j * block..(j + 1) * block {
            dst.iter_mut()
                .zip(&values[i * width..(i + 1) * width])
                .for_each(|(d, s)| *d += s);
        }
        dst.iter_mut().for_each(|d| *d /= block as f64);
    }
    out
}

/// Spread level-`k` cell values down to the finest cells, adding `coef·value`.
pub fn broadcast_add(
    grid: &DyadicGrid,
    width: usize,
    level_values: &[f64],
    k: usize,
    coef: f64,
    out: &mut [f64],
) {
    let shift = grid.dim() * (grid.levels() - k);
    for (i, dst) in out.chunks_mut(width).enumerate() {
        let j = i >> shift;
        dst.iter_mut()
            .zip(&level_values[j * width..(j + 1) * width])
            .for_each(|(d, s)| *d += coef * s);
    }
}

/// `E_k f = Σ_{Q ∈ 𝒟_k} 1_Q ⟨f⟩_Q`.
pub fn expect(f: &StepFunction, k: usize) -> Result<StepFunction> {
    let grid = f.grid();
    grid.check_level(k)?;
    let w = f.width();
    let avg = level_averages(grid, w, f.values(), k);
    let mut out = vec![0.0; f.values().len()];
    broadcast_add(grid, w, &avg, k, 1.0, &mut out);
    StepFunction::new(grid.clone(), *f.space(), out)
}

/// `D_k f = E_k f − E_{k−1} f` for `k ≥ 1`, `D_0 f = E_0 f`.
pub fn diff(f: &StepFunction, k: usize) -> Result<StepFunction> {
    let grid = f.grid();
    grid.check_level(k)?;
    let w = f.width();
    let mut out = vec![0.0; f.values().len()];
    broadcast_add(
        grid,
        w,
        &level_averages(grid, w, f.values(), k),
        k,
        1.0,
        &mut out,
    );
    if k > 0 {
        broadcast_add(
            grid,
            w,
            &level_averages(grid, w, f.values(), k - 1),
            k - 1,
            -1.0,
            &mut out,
        );
    }
    StepFunction::new(grid.clone(), *f.space(), out)
}

/// Cancellative dyadic maximal function `M_d f = sup_k ‖E_k f‖`, a scalar
/// step function.
pub fn maximal(f: &StepFunction) -> StepFunction {
    let grid = f.grid();
    let w = f.width();
    let space = *f.space();
    let pyr = pyramid(grid, w, f.values());
    let norms: Vec<Vec<f64>> = pyr
        .iter()
        .map(|lvl| lvl.chunks(w).map(|v| space.norm(v)).collect())
        .collect();
    let levels = grid.levels();
    let values = (0..grid.fine_count())
        .map(|i| {
            (0..=levels)
                .map(|k| norms[k][grid.ancestor(i, k)])
                .fold(0.0, f64::max)
        })
        .collect();
    StepFunction::new(grid.clone(), ValueSpace::scalar(), values).expect("scalar step function")
}

/// A sequence of signs `±1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Config("signs must be +1 or -1".into()));
        }
        Ok(SignVector(signs))
    }

    pub fn ones(len: usize) -> Self {
        SignVector(vec![1; len])
    }

    /// Signs read off the bits of `pattern` (bit set means `−1`).
    pub fn from_bits(pattern: u64, len: usize) -> Self {
        SignVector(
            (0..len)
                .map(|k| if pattern >> k & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        f64::from(self.0[k])
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }
}

/// Level weights `c_k` with `Σ_k a_k D_k = Σ_k c_k E_k` (`a` has `L+1` entries).
fn telescoped(a: &[f64]) -> Vec<f64> {
    let levels = a.len() - 1;
    (0..=levels)
        .map(|k| if k < levels { a[k] - a[k + 1] } else { a[k] })
        .collect()
}

/// `Σ_k a_k D_k` applied to raw finest-cell values.
pub fn difference_multiplier(
    grid: &DyadicGrid,
    width: usize,
    values: &[f64],
    a: &[f64],
    out: &mut [f64],
) {
    let c = telescoped(a);
    let pyr = pyramid(grid, width, values);
    out.iter_mut().for_each(|o| *o = 0.0);
    for (k, ck) in c.iter().enumerate() {
        if *ck != 0.0 {
            broadcast_add(grid, width, &pyr[k], k, *ck, out);
        }
    }
}

/// `Σ_k ε_k D_k f`. `signs` has `L+1` entries; entry 0 signs the mean block
/// `D_0 = E_0` unless `freeze_mean` is set.
pub fn sign_transform(
    f: &StepFunction,
    signs: &SignVector,
    freeze_mean: bool,
) -> Result<StepFunction> {
    let levels = f.grid().levels();
    if signs.len() != levels + 1 {
        return Err(Error::DimensionMismatch {
            expected: levels + 1,
            found: signs.len(),
        });
    }
    let mut a: Vec<f64> = (0..=levels).map(|k| signs.get(k)).collect();
    if freeze_mean {
        a[0] = 1.0;
    }
    let mut out = vec![0.0; f.values().len()];
    difference_multiplier(f.grid(), f.width(), f.values(), &a, &mut out);
    StepFunction::new(f.grid().clone(), *f.space(), out)
}

/// The transform `Σ_k a_k D_k` as a linear map on finest-cell coordinates.
/// It is self-adjoint for the (uniform) cell weights.
#[derive(Debug, Clone)]
pub struct DifferenceMultiplier {
    pub grid: DyadicGrid,
    pub width: usize,
    pub coefficients: Vec<f64>,
}

impl LinearMap for DifferenceMultiplier {
    fn rows(&self) -> usize {
        self.grid.fine_count() * self.width
    }
    fn cols(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        difference_multiplier(&self.grid, self.width, x, &self.coefficients, y);
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        self.apply(y, x);
    }
}

/// How averages over random signs are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    /// Enumerate all `2^K` patterns.
    Exact,
    /// Seeded Monte Carlo with `samples` draws.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignExpectation {
    pub mean: f64,
    /// Standard error of the mean (0 in exact mode).
    pub std_err: f64,
    pub evaluations: usize,
}

/// `E_ε F(ε)` over `K` independent unbiased signs.
pub fn sign_expectation<F: FnMut(&SignVector) -> f64>(
    mut f: F,
    k: usize,
    mode: SignMode,
) -> Result<SignExpectation> {
    match mode {
        SignMode::Exact => {
            if k > MAX_EXACT_SIGNS {
                return Err(Error::Guard {
                    what: "sign count",
                    value: k,
                    limit: MAX_EXACT_SIGNS,
                });
            }
            let total = 1u64 << k;
            let sum: f64 = (0..total).map(|p| f(&SignVector::from_bits(p, k))).sum();
            Ok(SignExpectation {
                mean: sum / total as f64,
                std_err: 0.0,
                evaluations: total as usize,
            })
        }
        SignMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::Config(
                    "Monte Carlo needs at least two samples".into(),
                ));
            }
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for s in 0..samples {
                let mut r = rng::substream(seed, "signs", s as u64);
                let signs = SignVector(
                    (0..k)
                        .map(|_| if r.random::<bool>() { 1 } else { -1 })
                        .collect(),
                );
                let v = f(&signs);
                sum += v;
                sum_sq += v * v;
            }
            let n = samples as f64;
            let mean = sum / n;
            let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            Ok(SignExpectation {
                mean,
                std_err: (var / n).sqrt(),
                evaluations: samples,
            })
        }
    }
}

/// `L^p` norm of raw finest-cell values with cell measure `weight`.
pub(crate) fn raw_lp_norm(
    values: &[f64],
    width: usize,
    space: &ValueSpace,
    p: f64,
    weight: f64,
) -> f64 {
    let norms = values.chunks(width).map(|v| space.norm(v));
    if p.is_infinite() {
        norms.fold(0.0, f64::max)
    } else {
        (norms.map(|v| v.powf(p)).sum::<f64>() * weight).powf(1.0 / p)
    }
}

/// `(E_ε ‖Σ_k a_k ε_k D_k f‖_{L^p}^s)^{1/s}` with exhaustive sign enumeration
/// over the `L+1` levels; `s = 1` gives the plain expectation of the norm.
pub fn random_sign_norm(f: &StepFunction, a: &[f64], p: f64, s: f64) -> Result<f64> {
    let levels = f.grid().levels();
    if a.len() != levels + 1 {
        return Err(Error::DimensionMismatch {
            expected: levels + 1,
            found: a.len(),
        });
    }
    let weight = f.grid().cell_measure(levels);
    let mut out = vec![0.0; f.values().len()];
    let e = sign_expectation(
        |eps| {
            let coeffs: Vec<f64> = a
                .iter()
                .enumerate()
                .map(|(k, ak)| ak * eps.get(k))
                .collect();
            difference_multiplier(f.grid(), f.width(), f.values(), &coeffs, &mut out);
            raw_lp_norm(&out, f.width(), f.space(), p, weight).powf(s)
        },
        levels + 1,
        SignMode::Exact,
    )?;
    Ok(e.mean.powf(1.0 / s))
}

/// Search settings for transform-norm estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmdOptions {
    pub mode: SignMode,
    /// Random starting functions per sign pattern (deterministic starts are added).
    pub restarts: usize,
    pub iterations: usize,
    /// Leave the mean block unsigned. The supremum is unaffected because
    /// `T_{−ε} = −T_ε`; the flag only matters for individual transforms.
    pub freeze_mean: bool,
    pub seed: u64,
}

impl Default for UmdOptions {
    fn default() -> Self {
        UmdOptions {
            mode: SignMode::Exact,
            restarts: 4,
            iterations: 200,
            freeze_mean: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UmdEstimate {
    /// Lower bound for the transform constant of the finite model.
    pub estimate: f64,
    /// Maximizing signs.
    pub signs: SignVector,
    pub patterns: usize,
    /// Whether each per-pattern norm was computed exactly (`p = 2`, Euclidean).
    pub exact: bool,
}

/// Lower-bound estimate of `β_{p,X}` on the finite model: the largest
/// `L^p(X) → L^p(X)` norm of `Σ_k ε_k D_k` over sign patterns. For `p = 2`
/// and Euclidean `X` each transform norm is computed exactly.
pub fn umd_transform_norm(
    p: f64,
    space: &ValueSpace,
    grid: &DyadicGrid,
    options: &UmdOptions,
) -> Result<UmdEstimate> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(
            "transform exponent must lie in (1, inf)".into(),
        ));
    }
    let (n, q) = match *space {
        ValueSpace::Vector { n, q } => (n, q),
        _ => {
            return Err(Error::Unsupported(
                "transform norms need a vector value space",
            ))
        }
    };
    let levels = grid.levels();
    // ε_0 = +1 without loss of generality.
    let patterns: Vec<u64> = match options.mode {
        SignMode::Exact => {
            if levels > MAX_EXACT_TRANSFORM_LEVEL {
                return Err(Error::Guard {
                    what: "L for exact sign enumeration",
                    value: levels,
                    limit: MAX_EXACT_TRANSFORM_LEVEL,
                });
            }
            (0..(1u64 << levels)).map(|b| b << 1).collect()
        }
        SignMode::MonteCarlo { samples, seed } => {
            let mut r = rng::substream(seed, "umd-patterns", 0);
            (0..samples.max(1))
                .map(|_| (r.random::<u64>() & ((1u64 << levels) - 1)) << 1)
                .collect()
        }
    };
    let euclid_p2 = p == 2.0 && q == 2.0;
    // The transform acts coordinatewise, so Euclidean values reduce to n = 1
    // at p = 2; otherwise the value dimension matters.
    let width = if euclid_p2 { 1 } else { n };
    let total = grid.fine_count() * width;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if !euclid_p2 {
        let mut delta = vec![0.0; total];
        delta[0] = 1.0;
        starts.push(delta);
        starts.push(vec![1.0; total]);
        for h in grid.haar_basis().iter().take(3) {
            let hv = h.values(grid);
            starts.push(
                hv.iter()
                    .flat_map(|&v| core::iter::repeat_n(v, width))
                    .collect(),
            );
        }
        let mut r = rng::substream(options.seed, "umd-starts", 0);
        for _ in 0..options.restarts {
            starts.push((0..total).map(|_| crate::rng::gaussian(&mut r)).collect());
        }
    }
    let mut best = UmdEstimate {
        estimate: 0.0,
        signs: SignVector::ones(levels + 1),
        patterns: patterns.len(),
        exact: euclid_p2,
    };
    for &bits in &patterns {
        let signs = SignVector::from_bits(bits, levels + 1);
        let mut coefficients: Vec<f64> = (0..=levels).map(|k| signs.get(k)).collect();
        if options.freeze_mean {
            coefficients[0] = 1.0;
        }
        let map = DifferenceMultiplier {
            grid: grid.clone(),
            width,
            coefficients,
        };
        let value = if euclid_p2 {
            linalg::spectral_norm(&map).value
        } else {
            linalg::pnorm_power_method(&map, width, p, q, &starts, options.iterations).0
        };
        if value > best.estimate {
            best.estimate = value;
            best.signs = signs;
        }
    }
    Ok(best)
}

/// Outcome of Doob's maximal inequality `‖M_d f‖_p ≤ p′ ‖f‖_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoobCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn doob_check(f: &StepFunction, p: f64) -> Result<DoobCheck> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config("Doob exponent must lie in (1, inf)".into()));
    }
    let weight = f.grid().cell_measure(f.grid().levels());
    let m = maximal(f);
    let lhs = raw_lp_norm(m.values(), 1, &ValueSpace::scalar(), p, weight);
    let rhs = p / (p - 1.0) * raw_lp_norm(f.values(), f.width(), f.space(), p, weight);
    Ok(DoobCheck {
        lhs,
        rhs,
        pass: lhs <= rhs,
    })
}

/// Haar expansion `f = mean + Σ_I c_I h_I` of a step function, with
/// `c_I = ⟨f, h_I⟩/‖h_I‖²` taken coordinatewise. `coefficients` follows the
/// order of [`DyadicGrid::haar_basis`], one block of `width` per function.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarExpansion {
    pub width: usize,
    pub mean: Vec<f64>,
    pub coefficients: Vec<f64>,
}

pub fn haar_analysis(grid: &DyadicGrid, width: usize, values: &[f64]) -> HaarExpansion {
    let pyr = pyramid(grid, width, values);
    let children = 1usize << grid.dim();
    let mut coefficients = Vec::with_capacity((grid.fine_count() - 1) * width);
    for k in 0..grid.levels() {
        for cell in 0..grid.cell_count(k) {
            for sig in 1..children as u32 {
                for c in 0..width {
                    let s: f64 = (0..children)
                        .map(|ch| {
                            let v = pyr[k + 1][(cell * children + ch) * width + c];
                            if (ch as u32 & sig).count_ones().is_multiple_of(2) {
                                v
                            } else {
                                -v
                            }
                        })
                        .sum();
                    coefficients.push(s / children as f64);
                }
            }
        }
    }
    HaarExpansion {
        width,
        mean: pyr[0].clone(),
        coefficients,
    }
}

/// Inverse of [`haar_analysis`].
pub fn haar_synthesis(grid: &DyadicGrid, expansion: &HaarExpansion) -> Vec<f64> {
    let width = expansion.width;
    let children = 1usize << grid.dim();
    let mut level = expansion.mean.clone();
    let mut pos = 0;
    for k in 0..grid.levels() {
        let mut next = vec![0.0; grid.cell_count(k + 1) * width];
        for cell in 0..grid.cell_count(k) {
            for ch in 0..children {
                let dst =
                    &mut next[(cell * children + ch) * width..(cell * children + ch + 1) * width];
                dst.copy_from_slice(&level[cell * width..(cell + 1) * width]);
            }
            for sig in 1..children as u32 {
                let coef = &expansion.coefficients[pos..pos + width];
                pos += width;
                for ch in 0..children {
                    let sign = if (ch as u32 & sig).count_ones().is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    let dst = &mut next
                        [(cell * children + ch) * width..(cell * children + ch + 1) * width];
                    dst.iter_mut().zip(coef).for_each(|(d, c)| *d += sign * c);
                }
            }
        }
        level = next;
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn f1234() -> StepFunction {
        StepFunction::scalar(&make_grid(1, 2, &[]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let f = f1234();
        assert_eq!(expect(&f, 1).unwrap().values(), &[1.5, 1.5, 3.5, 3.5]);
        assert_eq!(expect(&f, 0).unwrap().values(), &[2.5; 4]);
        assert_eq!(expect(&f, 2).unwrap().values(), f.values());
        assert!(expect(&f, 3).is_err());
    }

    #[test]
    fn difference_examples() {
        let f = f1234();
        assert_eq!(diff(&f, 1).unwrap().values(), &[-1.0, -1.0, 1.0, 1.0]);
        let c = StepFunction::scalar(f.grid(), vec![7.0; 4]).unwrap();
        for k in 1..=2 {
            assert!(diff(&c, k).unwrap().values().iter().all(|&v| v == 0.0));
        }
        let mut sum = StepFunction::zeros(f.grid(), ValueSpace::scalar());
        for k in 0..=2 {
            sum = sum.combine(1.0, &diff(&f, k).unwrap(), 1.0).unwrap();
        }
        assert_eq!(sum.values(), f.values());
    }

    #[test]
    fn maximal_examples() {
        let g = make_grid(1, 2, &[]).unwrap();
        let f = StepFunction::scalar(&g, vec![1.0, -3.0, 2.0, 0.0]).unwrap();
        assert_eq!(maximal(&f).values(), &[1.0, 3.0, 2.0, 1.0]);
        let c = StepFunction::scalar(&g, vec![-2.0; 4]).unwrap();
        assert_eq!(maximal(&c).values(), &[2.0; 4]);
        let h = StepFunction::scalar(&g, g.haar_basis()[0].values(&g)).unwrap();
        assert_eq!(maximal(&h).values(), &[1.0; 4]);
    }

    #[test]
    fn sign_transform_examples() {
        let f = f1234();
        assert_eq!(sign_transform(&f, &SignVector::ones(3), false).unwrap(), f);
        let eps = SignVector::new(vec![1, -1, 1]).unwrap();
        assert_eq!(
            sign_transform(&f, &eps, false).unwrap().values(),
            &[3.0, 4.0, 1.0, 2.0]
        );
        let g = f.grid().clone();
        let h = StepFunction::scalar(&g, g.haar_basis()[0].values(&g)).unwrap();
        let out = sign_transform(&h, &eps, false).unwrap();
        assert_eq!(out, h.scale(-1.0));
        // Involution.
        let twice = sign_transform(&sign_transform(&f, &eps, false).unwrap(), &eps, false).unwrap();
        for (a, b) in twice.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(sign_transform(&f, &SignVector::ones(2), false).is_err());
        assert!(SignVector::new(vec![1, 0]).is_err());
    }

    #[test]
    fn frozen_mean_keeps_the_average() {
        let f = f1234();
        let eps = SignVector::new(vec![-1, 1, 1]).unwrap();
        assert_eq!(sign_transform(&f, &eps, true).unwrap(), f);
        let flipped = sign_transform(&f, &eps, false).unwrap();
        assert_eq!(flipped.integral(), vec![-2.5]);
    }

    #[test]
    fn sign_expectation_examples() {
        let e = sign_expectation(|s| s.get(0) * s.get(1), 2, SignMode::Exact).unwrap();
        assert_eq!(e.mean, 0.0);
        let e = sign_expectation(|s| s.get(0) * s.get(0), 1, SignMode::Exact).unwrap();
        assert_eq!(e.mean, 1.0);
        let e = sign_expectation(|s| s.get(0) * s.get(1) * s.get(2), 3, SignMode::Exact).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(sign_expectation(|_| 0.0, 21, SignMode::Exact).is_err());
        let mc = sign_expectation(
            |s| s.get(0) * s.get(1),
            2,
            SignMode::MonteCarlo {
                samples: 4000,
                seed: 3,
            },
        )
        .unwrap();
        assert!(mc.mean.abs() < 5.0 * mc.std_err + 1e-12);
        assert!(mc.std_err > 0.0);
    }

    #[test]
    fn transform_norm_at_two_is_one() {
        let g = make_grid(1, 4, &[]).unwrap();
        let est =
            umd_transform_norm(2.0, &ValueSpace::euclidean(3), &g, &UmdOptions::default()).unwrap();
        assert!((est.estimate - 1.0).abs() < 1e-12);
        assert!(est.exact);
        let est =
            umd_transform_norm(2.0, &ValueSpace::scalar(), &g, &UmdOptions::default()).unwrap();
        assert!((est.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transform_norm_at_four_respects_the_scalar_constant() {
        let g = make_grid(1, 6, &[]).unwrap();
        let est = umd_transform_norm(
            4.0,
            &ValueSpace::scalar(),
            &g,
            &UmdOptions {
                restarts: 2,
                iterations: 100,
                ..UmdOptions::default()
            },
        )
        .unwrap();
        assert!(est.estimate > 1.0);
        assert!(est.estimate <= 3.0 + 1e-6, "{}", est.estimate);
    }

    #[test]
    fn haar_round_trip() {
        let g = make_grid(2, 2, &[]).unwrap();
        let vals: Vec<f64> = (0..32).map(|i| ((i * 7 % 11) as f64) - 3.5).collect();
        let e = haar_analysis(&g, 2, &vals);
        assert_eq!(e.coefficients.len(), 15 * 2);
        let back = haar_synthesis(&g, &e);
        for (a, b) in back.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-13);
        }
        // Coefficients agree with direct pairings.
        for (idx, h) in g.haar_basis().iter().enumerate() {
            let hv = h.values(&g);
            let direct: f64 = hv
                .iter()
                .enumerate()
                .map(|(i, v)| v * vals[2 * i + 1])
                .sum::<f64>()
                * g.cell_measure(2)
                / h.norm_sq(&g);
            assert!((direct - e.coefficients[2 * idx + 1]).abs() < 1e-13);
        }
    }

    #[test]
    fn doob_examples() {
        let g = make_grid(1, 3, &[]).unwrap();
        let c = StepFunction::scalar(&g, vec![2.0; 8]).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let d = doob_check(&c, p).unwrap();
            assert!(d.pass);
            assert!((d.lhs - d.rhs * (p - 1.0) / p).abs() < 1e-12);
        }
        let h = StepFunction::scalar(&g, g.haar_basis()[0].values(&g)).unwrap();
        let d = doob_check(&h, 2.0).unwrap();
        assert!((d.lhs - 1.0).abs() < 1e-15 && (d.rhs - 2.0).abs() < 1e-15 && d.pass);
    }
}
