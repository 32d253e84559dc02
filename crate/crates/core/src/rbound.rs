//! R-bounds of finite operator families on `ℓ^q_n`:
//! the least `C` with `‖Σ_k ε_k T_k x_k‖_{L^p(Ω)} ≤ C ‖Σ_k ε_k x_k‖_{L^p(Ω)}`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::martingale::{SignMode, MAX_EXACT_SIGNS};
use crate::rng;
use crate::value::{self, ValueSpace};

/// Largest number of terms with exhaustive sign enumeration.
pub const MAX_EXACT_TERMS: usize = 16;

/// A finite family of `n × n` matrices acting on `ℓ^q_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFamily {
    pub operators: Vec<Matrix>,
    pub space: ValueSpace,
}

impl OperatorFamily {
    pub fn new(operators: Vec<Matrix>, space: ValueSpace) -> Result<Self> {
        let n = match space {
            ValueSpace::Vector { n, .. } => n,
            _ => return Err(Error::Unsupported("operator families act on vector spaces")),
        };
        if operators.is_empty() {
            return Err(Error::Config("operator family is empty".into()));
        }
        if let Some(m) = operators.iter().find(|m| m.rows != n || m.cols != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.rows.max(m.cols),
            });
        }
        Ok(OperatorFamily { operators, space })
    }

    pub fn euclidean(operators: Vec<Matrix>) -> Result<Self> {
        let n = operators.first().map_or(0, |m| m.rows);
        Self::new(operators, ValueSpace::euclidean(n))
    }

    pub fn dim(&self) -> usize {
        self.space.width()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    fn q(&self) -> f64 {
        match self.space {
            ValueSpace::Vector { q, .. } => q,
            _ => 2.0,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        OperatorFamily {
            operators: self.operators.iter().map(|m| m.scale(alpha)).collect(),
            space: self.space,
        }
    }

    pub fn subfamily(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.operators[i].clone()).collect(),
            self.space,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RBoundOptions {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for RBoundOptions {
    fn default() -> Self {
        RBoundOptions {
            restarts: 20,
            iterations: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RBoundEstimate {
    pub lower: f64,
    /// Present only when certified (Euclidean `p = 2`).
    pub upper: Option<f64>,
    /// Best ratio reached from random starts alone.
    pub ascent: f64,
    pub p: f64,
    pub k_used: usize,
    pub mode: SignMode,
    pub seed: u64,
}

/// Signs used to evaluate expectations; `ε_0 = +1` by symmetry.
struct SignSet {
    patterns: Vec<Vec<f64>>,
}

impl SignSet {
    fn new(k: usize, mode: SignMode) -> Result<Self> {
        match mode {
            SignMode::Exact => {
                if k > MAX_EXACT_TERMS.min(MAX_EXACT_SIGNS) {
                    return Err(Error::Guard {
                        what: "terms for exact sign enumeration",
                        value: k,
                        limit: MAX_EXACT_TERMS,
                    });
                }
                let patterns = (0..1u64 << (k - 1))
                    .map(|bits| {
                        (0..k)
                            .map(|j| {
                                if j > 0 && bits >> (j - 1) & 1 == 1 {
                                    -1.0
                                } else {
                                    1.0
                                }
                            })
                            .collect()
                    })
                    .collect();
                Ok(SignSet { patterns })
            }
            SignMode::MonteCarlo { samples, seed } => {
                let mut r = rng::substream(seed, "rbound-signs", k as u64);
                let patterns = (0..samples.max(1))
                    .map(|_| {
                        (0..k)
                            .map(|j| {
                                if j == 0 || r.random::<bool>() {
                                    1.0
                                } else {
                                    -1.0
                                }
                            })
                            .collect()
                    })
                    .collect();
                Ok(SignSet { patterns })
            }
        }
    }
}

/// `E_ε ‖Σ_k ε_k z_k‖_q^p` and, optionally, its gradient in each `z_k`.
fn moment(z: &[Vec<f64>], signs: &SignSet, p: f64, q: f64, grad: Option<&mut [Vec<f64>]>) -> f64 {
    let n = z[0].len();
    let mut y = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut total = 0.0;
    let want_grad = grad.is_some();
    let mut acc: Vec<Vec<f64>> = if want_grad {
        vec![vec![0.0; n]; z.len()]
    } else {
        Vec::new()
    };
    for eps in &signs.patterns {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (e, zk) in eps.iter().zip(z) {
            y.iter_mut().zip(zk).for_each(|(a, b)| *a += e * b);
        }
        let nrm = value::lq_norm(&y, q);
        total += nrm.powf(p);
        if want_grad && nrm > 0.0 {
            let scale = p * nrm.powf(p - q);
            g.iter_mut()
                .zip(&y)
                .for_each(|(gi, yi)| *gi = scale * yi.abs().powf(q - 1.0) * yi.signum());
            for (e, a) in eps.iter().zip(acc.iter_mut()) {
                a.iter_mut().zip(&g).for_each(|(ai, gi)| *ai += e * gi);
            }
        }
    }
    let count = signs.patterns.len() as f64;
    if let Some(out) = grad {
        for (o, a) in out.iter_mut().zip(acc) {
            o.iter_mut().zip(a).for_each(|(oi, ai)| *oi = ai / count);
        }
    }
    total / count
}

/// Ratio `(E‖Σ ε T_{j_k} x_k‖^p / E‖Σ ε x_k‖^p)^{1/p}` and its log-gradient.
fn ratio_and_gradient(
    family: &OperatorFamily,
    slots: &[usize],
    x: &[Vec<f64>],
    signs: &SignSet,
    p: f64,
    grad: Option<&mut [Vec<f64>]>,
) -> f64 {
    let q = family.q();
    let n = family.dim();
    let z: Vec<Vec<f64>> = slots
        .iter()
        .zip(x)
        .map(|(&j, xk)| {
            let mut out = vec![0.0; n];
            family.operators[j].gemv_into(xk, &mut out);
            out
        })
        .collect();
    match grad {
        None => {
            let num = moment(&z, signs, p, q, None);
            let den = moment(x, signs, p, q, None);
            if den <= 0.0 {
                0.0
            } else {
                (num / den).powf(1.0 / p)
            }
        }
        Some(out) => {
            let k = slots.len();
            let mut gz = vec![vec![0.0; n]; k];
            let mut gx = vec![vec![0.0; n]; k];
            let num = moment(&z, signs, p, q, Some(&mut gz));
            let den = moment(x, signs, p, q, Some(&mut gx));
            if den <= 0.0 || num <= 0.0 {
                out.iter_mut()
                    .for_each(|o| o.iter_mut().for_each(|v| *v = 0.0));
                return 0.0;
            }
            // ∇ log(num/den)/p
            let mut tz = vec![0.0; n];
            for s in 0..k {
                family.operators[slots[s]].gemv_t_into(&gz[s], &mut tz);
                out[s]
                    .iter_mut()
                    .zip(tz.iter().zip(&gx[s]))
                    .for_each(|(o, (a, b))| *o = (a / num - b / den) / p);
            }
            (num / den).powf(1.0 / p)
        }
    }
}

fn ascend(
    family: &OperatorFamily,
    slots: &[usize],
    mut x: Vec<Vec<f64>>,
    signs: &SignSet,
    p: f64,
    iterations: usize,
) -> f64 {
    let k = slots.len();
    let n = family.dim();
    let mut grad = vec![vec![0.0; n]; k];
    let mut val = ratio_and_gradient(family, slots, &x, signs, p, Some(&mut grad));
    let mut step = 1.0;
    for _ in 0..iterations {
        let scale: f64 = x.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let gnorm: f64 = grad.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm == 0.0 || scale == 0.0 {
            break;
        }
        let mut improved = false;
        while step > 1e-10 {
            let cand: Vec<Vec<f64>> = x
                .iter()
                .zip(&grad)
                .map(|(xk, gk)| {
                    xk.iter()
                        .zip(gk)
                        .map(|(a, b)| a + step * scale * b / gnorm)
                        .collect()
                })
                .collect();
            let mut cgrad = vec![vec![0.0; n]; k];
            let v = ratio_and_gradient(family, slots, &cand, signs, p, Some(&mut cgrad));
            if v > val {
                x = cand;
                grad = cgrad;
                val = v;
                improved = true;
                step = (step * 2.0).min(1.0);
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    val
}

/// Lower bound for the R-bound with `K` terms.
///
/// Starts include a single active term at the top right singular vector of
/// each `T_j` (so `lower ≥ max_j ‖T_j‖₂→₂`, the exact value for Euclidean
/// `p = 2`), then random slot assignments and directions are improved by
/// gradient ascent with backtracking. For Euclidean `p = 2` the value is
/// certified by sign orthogonality and returned as `upper`.
pub fn rbound_estimate(
    family: &OperatorFamily,
    p: f64,
    k: usize,
    mode: SignMode,
    seed: u64,
    options: &RBoundOptions,
) -> Result<RBoundEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Config(
            "R-bound exponent must lie in [1, inf)".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Config("R-bounds need at least one term".into()));
    }
    let signs = SignSet::new(k, mode)?;
    let n = family.dim();
    let mut lower = 0.0f64;
    for (j, t) in family.operators.iter().enumerate() {
        let svd = linalg::svd(t);
        let mut x = vec![vec![0.0; n]; k];
        for (i, xi) in x[0].iter_mut().enumerate() {
            *xi = svd.right.get(i, 0);
        }
        let mut slots = vec![0; k];
        slots[0] = j;
        let v = ratio_and_gradient(family, &slots, &x, &signs, p, None);
        lower = lower.max(v);
        if !(p == 2.0 && family.q() == 2.0) {
            lower = lower.max(ascend(family, &slots, x, &signs, p, options.iterations));
        }
    }
    let mut r = rng::substream(seed, "rbound", (k as u64) << 32 | family.len() as u64);
    let mut ascent = 0.0f64;
    for _ in 0..options.restarts {
        let slots: Vec<usize> = (0..k).map(|_| r.random_range(0..family.len())).collect();
        let x: Vec<Vec<f64>> = (0..k).map(|_| rng::gaussian_vec(&mut r, n)).collect();
        ascent = ascent.max(ascend(family, &slots, x, &signs, p, options.iterations));
    }
    let upper = if p == 2.0 && family.space.is_euclidean() {
        Some(hilbert_p2_oracle(family)?)
    } else {
        None
    };
    lower = lower.max(ascent);
    if let Some(u) = upper {
        // Round-off only: the ascent cannot beat the certified value.
        lower = lower.min(u);
    }
    Ok(RBoundEstimate {
        lower,
        upper,
        ascent,
        p,
        k_used: k,
        mode,
        seed,
    })
}

/// `max_K` of [`rbound_estimate`] over `K ∈ {1, 2, 4, 8, 16}` (capped at `k_max`).
pub fn rbound_sup(
    family: &OperatorFamily,
    p: f64,
    k_max: usize,
    seed: u64,
    options: &RBoundOptions,
) -> Result<(Vec<RBoundEstimate>, f64)> {
    let mut out = Vec::new();
    for k in [1usize, 2, 4, 8, 16] {
        if k > k_max {
            break;
        }
        out.push(rbound_estimate(
            family,
            p,
            k,
            SignMode::Exact,
            seed,
            options,
        )?);
    }
    let best = out.iter().map(|e| e.lower).fold(0.0, f64::max);
    Ok((out, best))
}

/// The Euclidean `p = 2` R-bound `max_k ‖T_k‖₂→₂`.
pub fn hilbert_p2_oracle(family: &OperatorFamily) -> Result<f64> {
    if !family.space.is_euclidean() {
        return Err(Error::Unsupported(
            "the Hilbert oracle needs Euclidean values",
        ));
    }
    Ok(family
        .operators
        .iter()
        .map(|t| linalg::singular_values(t).first().copied().unwrap_or(0.0))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KhintchineReport {
    pub r_p: f64,
    pub r_q: f64,
    /// `r_p / r_q`.
    pub ratio: f64,
}

/// Compare the `p`- and `q`-moment R-bound estimates of one family.
pub fn khintchine_equiv_probe(
    family: &OperatorFamily,
    p: f64,
    q: f64,
    k: usize,
    seed: u64,
) -> Result<KhintchineReport> {
    let options = RBoundOptions::default();
    let r_p = rbound_estimate(family, p, k, SignMode::Exact, seed, &options)?.lower;
    let r_q = if q == p {
        r_p
    } else {
        rbound_estimate(family, q, k, SignMode::Exact, seed, &options)?.lower
    };
    let ratio = if r_q > 0.0 { r_p / r_q } else { 1.0 };
    Ok(KhintchineReport { r_p, r_q, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(ms: Vec<Matrix>) -> OperatorFamily {
        OperatorFamily::euclidean(ms).unwrap()
    }

    #[test]
    fn identity_family() {
        let f = fam(vec![Matrix::identity(3)]);
        for p in [1.0, 2.0, 3.0] {
            let e =
                rbound_estimate(&f, p, 2, SignMode::Exact, 1, &RBoundOptions::default()).unwrap();
            assert!((e.lower - 1.0).abs() < 1e-9, "{p} {}", e.lower);
        }
    }

    #[test]
    fn scalar_multiples_and_diagonals() {
        let f = fam(vec![Matrix::identity(2), Matrix::identity(2).scale(2.0)]);
        assert_eq!(hilbert_p2_oracle(&f).unwrap(), 2.0);
        let e = rbound_estimate(&f, 2.0, 4, SignMode::Exact, 2, &RBoundOptions::default()).unwrap();
        assert!((e.lower - 2.0).abs() < 1e-12 && e.upper == Some(2.0));
        let d = fam(vec![
            Matrix::from_diag(&[1.0, -3.0]),
            Matrix::from_diag(&[2.5, 0.5]),
        ]);
        let e = rbound_estimate(&d, 2.0, 4, SignMode::Exact, 3, &RBoundOptions::default()).unwrap();
        assert!((e.lower - 3.0).abs() < 1e-8);
        assert!(e.ascent <= 3.0 + 1e-9);
    }

    #[test]
    fn rotations() {
        let rot = |t: f64| Matrix::from_rows(2, 2, vec![t.cos(), -t.sin(), t.sin(), t.cos()]);
        let f = fam(vec![rot(0.3), rot(1.1), rot(2.0)]);
        assert!((hilbert_p2_oracle(&f).unwrap() - 1.0).abs() < 1e-14);
        let e = rbound_estimate(&f, 2.0, 3, SignMode::Exact, 5, &RBoundOptions::default()).unwrap();
        assert!((e.lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_and_subfamilies() {
        let f = fam(vec![
            Matrix::from_rows(2, 2, vec![1.0, 2.0, 0.0, 1.0]),
            Matrix::from_rows(2, 2, vec![0.0, 1.0, -1.0, 0.5]),
        ]);
        let opts = RBoundOptions {
            restarts: 4,
            iterations: 40,
        };
        let base = rbound_estimate(&f, 3.0, 2, SignMode::Exact, 7, &opts)
            .unwrap()
            .lower;
        let scaled = rbound_estimate(&f.scaled(-2.0), 3.0, 2, SignMode::Exact, 7, &opts)
            .unwrap()
            .lower;
        assert!((scaled - 2.0 * base).abs() < 1e-9 * base);
        let sub = rbound_estimate(
            &f.subfamily(&[0]).unwrap(),
            3.0,
            2,
            SignMode::Exact,
            7,
            &opts,
        )
        .unwrap()
        .lower;
        assert!(sub <= base + 1e-9);
        assert!(base >= hilbert_p2_oracle(&f).unwrap() - 1e-9 || base > 0.0);
    }

    #[test]
    fn singleton_is_operator_norm() {
        let t = Matrix::from_rows(2, 2, vec![1.0, 2.0, 0.0, 1.0]);
        let f = fam(vec![t.clone()]);
        let e = rbound_estimate(&f, 2.0, 1, SignMode::Exact, 0, &RBoundOptions::default()).unwrap();
        let s = linalg::singular_values(&t)[0];
        assert!((e.lower - s).abs() < 1e-12);
    }

    #[test]
    fn khintchine_probe_examples() {
        let f = fam(vec![Matrix::from_rows(2, 2, vec![1.0, 2.0, 0.0, 1.0])]);
        let r = khintchine_equiv_probe(&f, 3.0, 3.0, 1, 0).unwrap();
        assert_eq!(r.ratio, 1.0);
        let s = OperatorFamily::new(
            vec![
                Matrix::from_diag(&[0.5]),
                Matrix::from_diag(&[-1.5]),
                Matrix::from_diag(&[1.0]),
            ],
            ValueSpace::scalar(),
        )
        .unwrap();
        let r = khintchine_equiv_probe(&s, 1.0, 2.0, 4, 1).unwrap();
        assert!(r.ratio > core::f64::consts::FRAC_1_SQRT_2 && r.ratio < core::f64::consts::SQRT_2);
        assert!((r.r_q - 1.5).abs() < 1e-9);
    }

    #[test]
    fn guards() {
        let f = fam(vec![Matrix::identity(1)]);
        assert!(
            rbound_estimate(&f, 2.0, 17, SignMode::Exact, 0, &RBoundOptions::default()).is_err()
        );
        assert!(
            rbound_estimate(&f, 0.5, 1, SignMode::Exact, 0, &RBoundOptions::default()).is_err()
        );
        let mc = rbound_estimate(
            &f,
            2.0,
            20,
            SignMode::MonteCarlo {
                samples: 64,
                seed: 1,
            },
            0,
            &RBoundOptions {
                restarts: 1,
                iterations: 5,
            },
        );
        assert!(mc.is_ok());
    }
}
