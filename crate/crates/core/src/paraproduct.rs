//! Dyadic paraproducts with operator-valued symbols.
//!
//! With `D_k = E_k − E_{k−1}`:
//!
//! * `Π_b f = Σ_{k=1}^{L} (D_k b)(E_{k−1} f)`
//! * `Π_{b*} g = Σ_{k=1}^{L} (D_k b)ᵀ(E_{k−1} g)` (the paraproduct of the
//!   pointwise transpose)
//! * `(Π_{b*})* f = Σ_{k=1}^{L} E_{k−1}[(D_k b)(D_k f)]`
//! * `Λ_b = Π_b + (Π_{b*})*`
//!
//! All maps act on finest-cell coordinates; the cell weights are uniform, so
//! matrix transposes are Hilbert-space adjoints.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::linalg::{self, LinearMap, Matrix};
use crate::martingale::{self, DifferenceMultiplier, SignVector};
use crate::norms::{self, BmoSoOptions};
use crate::rng;
use crate::step::StepFunction;
use crate::value::ValueSpace;

/// Largest side of a materialized operator matrix.
pub const MAX_MATERIALIZED: usize = 1 << 14;

/// An operator-valued step function `b: 𝕋^d → L(X, Y)`, each value an
/// `n_out × n_in` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    function: StepFunction,
    n_out: usize,
    n_in: usize,
}

impl Symbol {
    /// Wrap an operator-valued step function. Scalar functions are read as
    /// `1 × 1` symbols.
    pub fn new(function: StepFunction) -> Result<Self> {
        let (n_out, n_in) = match *function.space() {
            ValueSpace::Operator { n_in, n_out, .. } => (n_out, n_in),
            ValueSpace::Vector { n: 1, .. } => (1, 1),
            _ => return Err(Error::Unsupported("a symbol needs operator values")),
        };
        Ok(Symbol {
            function,
            n_out,
            n_in,
        })
    }

    pub fn scalar(grid: &DyadicGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(StepFunction::new(
            grid.clone(),
            ValueSpace::euclidean_operator(1, 1),
            values,
        )?)
    }

    /// Euclidean symbol from raw values.
    pub fn euclidean(
        grid: &DyadicGrid,
        n_out: usize,
        n_in: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::new(StepFunction::new(
            grid.clone(),
            ValueSpace::euclidean_operator(n_out, n_in),
            values,
        )?)
    }

    /// `diag(φ_1, …, φ_n)` from scalar finest-cell values.
    pub fn diagonal(grid: &DyadicGrid, entries: &[Vec<f64>]) -> Result<Self> {
        let n = entries.len();
        let fine = grid.fine_count();
        if entries.iter().any(|e| e.len() != fine) {
            return Err(Error::DimensionMismatch {
                expected: fine,
                found: entries.iter().map(Vec::len).min().unwrap_or(0),
            });
        }
        let mut values = vec![0.0; fine * n * n];
        for i in 0..fine {
            for (a, e) in entries.iter().enumerate() {
                values[i * n * n + a * n + a] = e[i];
            }
        }
        Self::euclidean(grid, n, n, values)
    }

    /// `φ · I_n` for scalar finest-cell values `φ`.
    pub fn scalar_times_identity(grid: &DyadicGrid, phi: &[f64], n: usize) -> Result<Self> {
        Self::diagonal(grid, &vec![phi.to_vec(); n])
    }

    pub fn function(&self) -> &StepFunction {
        &self.function
    }

    pub fn grid(&self) -> &DyadicGrid {
        self.function.grid()
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn values(&self) -> &[f64] {
        self.function.values()
    }

    /// Input space `X = ℓ^{q_in}_{n_in}`.
    pub fn input_space(&self) -> ValueSpace {
        match *self.function.space() {
            ValueSpace::Operator { n_in, q_in, .. } => ValueSpace::Vector { n: n_in, q: q_in },
            _ => ValueSpace::scalar(),
        }
    }

    /// Output space `Y = ℓ^{q_out}_{n_out}`.
    pub fn output_space(&self) -> ValueSpace {
        match *self.function.space() {
            ValueSpace::Operator { n_out, q_out, .. } => ValueSpace::Vector { n: n_out, q: q_out },
            _ => ValueSpace::scalar(),
        }
    }

    /// Pointwise transpose `bᵀ: 𝕋^d → L(Y, X)`.
    pub fn transpose(&self) -> Symbol {
        let (r, c) = (self.n_out, self.n_in);
        let space = match *self.function.space() {
            ValueSpace::Operator {
                n_in,
                q_in,
                n_out,
                q_out,
            } => ValueSpace::Operator {
                n_in: n_out,
                q_in: value_dual(q_out),
                n_out: n_in,
                q_out: value_dual(q_in),
            },
            s => s,
        };
        let mut values = vec![0.0; self.values().len()];
        for (src, dst) in self.values().chunks(r * c).zip(values.chunks_mut(r * c)) {
            for i in 0..r {
                for j in 0..c {
                    dst[j * r + i] = src[i * c + j];
                }
            }
        }
        let function = StepFunction::new(self.grid().clone(), space, values).expect("same shape");
        Symbol {
            function,
            n_out: c,
            n_in: r,
        }
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &Symbol, beta: f64) -> Result<Symbol> {
        Symbol::new(self.function.combine(alpha, &other.function, beta)?)
    }

    /// Martingale differences `D_k b` on level-`k` cells, `k = 1..=L`
    /// (index 0 is empty).
    fn level_differences(&self) -> Vec<Vec<f64>> {
        let grid = self.grid();
        let w = self.n_out * self.n_in;
        let pyr = martingale::pyramid(grid, w, self.values());
        let d = grid.dim();
        let mut out = vec![Vec::new()];
        for k in 1..=grid.levels() {
            let mut diff = pyr[k].clone();
            for (j, chunk) in diff.chunks_mut(w).enumerate() {
                let parent = &pyr[k - 1][(j >> d) * w..((j >> d) + 1) * w];
                chunk.iter_mut().zip(parent).for_each(|(v, p)| *v -= p);
            }
            out.push(diff);
        }
        out
    }
}

/// The transpose of an `ℓ^q → ℓ^r` map acts `ℓ^{r'} → ℓ^{q'}`; in the real
/// Euclidean model these coincide.
fn value_dual(q: f64) -> f64 {
    crate::value::conjugate(q)
}

/// Which parts of the symmetrised paraproduct are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParaproductKind {
    /// `Π_b`
    Pi,
    /// `Π_{b*}`
    PiStar,
    /// `Λ_b`
    Lambda,
}

/// Matrix-free realization of `Π_b`, `Π_{b*}` or `Λ_b`.
#[derive(Debug, Clone)]
pub struct ParaproductMap {
    grid: DyadicGrid,
    n_out: usize,
    n_in: usize,
    differences: Vec<Vec<f64>>,
    kind: ParaproductKind,
}

impl ParaproductMap {
    pub fn new(b: &Symbol, kind: ParaproductKind) -> Self {
        ParaproductMap {
            grid: b.grid().clone(),
            n_out: b.n_out,
            n_in: b.n_in,
            differences: b.level_differences(),
            kind,
        }
    }

    /// `y = Σ_k [pi: op(D_k b) E_{k−1}x] + [dual: E_{k−1}(op(D_k b) D_k x)]`
    /// with `op` the identity or the pointwise transpose.
    fn engine(&self, pi: bool, dual: bool, transposed: bool, x: &[f64], y: &mut [f64]) {
        let grid = &self.grid;
        let d = grid.dim();
        let levels = grid.levels();
        let children = (1usize << d) as f64;
        let (wi, wo) = if transposed {
            (self.n_out, self.n_in)
        } else {
            (self.n_in, self.n_out)
        };
        let w = self.n_out * self.n_in;
        let xp = martingale::pyramid(grid, wi, x);
        let mut acc: Vec<Vec<f64>> = (0..=levels)
            .map(|k| vec![0.0; grid.cell_count(k) * wo])
            .collect();
        let mut dx = vec![0.0; wi];
        let mut prod = vec![0.0; wo];
        for k in 1..=levels {
            let (coarse, fine) = acc.split_at_mut(k);
            let coarse = &mut coarse[k - 1];
            let fine = &mut fine[0];
            for j in 0..grid.cell_count(k) {
                let p = j >> d;
                let bm = &self.differences[k][j * w..(j + 1) * w];
                let parent_x = &xp[k - 1][p * wi..(p + 1) * wi];
                if pi {
                    mat_apply(bm, self.n_out, self.n_in, transposed, parent_x, &mut prod);
                    fine[j * wo..(j + 1) * wo]
                        .iter_mut()
                        .zip(&prod)
                        .for_each(|(a, v)| *a += v);
                }
                if dual {
                    let child_x = &xp[k][j * wi..(j + 1) * wi];
                    dx.iter_mut()
                        .zip(child_x)
                        .zip(parent_x)
                        .for_each(|((o, c), pv)| *o = c - pv);
                    mat_apply(bm, self.n_out, self.n_in, transposed, &dx, &mut prod);
                    coarse[p * wo..(p + 1) * wo]
                        .iter_mut()
                        .zip(&prod)
                        .for_each(|(a, v)| *a += v / children);
                }
            }
        }
        for k in 1..=levels {
            let (coarse, fine) = acc.split_at_mut(k);
            let coarse = &coarse[k - 1];
            for (j, chunk) in fine[0].chunks_mut(wo).enumerate() {
                let p = j >> d;
                chunk
                    .iter_mut()
                    .zip(&coarse[p * wo..(p + 1) * wo])
                    .for_each(|(a, v)| *a += v);
            }
        }
        y.copy_from_slice(&acc[levels]);
    }
}

fn mat_apply(m: &[f64], rows: usize, cols: usize, transposed: bool, x: &[f64], y: &mut [f64]) {
    if transposed {
        linalg::gemv_t(m, rows, cols, x, y);
    } else {
        linalg::gemv(m, rows, cols, x, y);
    }
}

impl LinearMap for ParaproductMap {
    fn rows(&self) -> usize {
        let w = if self.kind == ParaproductKind::PiStar {
            self.n_in
        } else {
            self.n_out
        };
        self.grid.fine_count() * w
    }
    fn cols(&self) -> usize {
        let w = if self.kind == ParaproductKind::PiStar {
            self.n_out
        } else {
            self.n_in
        };
        self.grid.fine_count() * w
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self.kind {
            ParaproductKind::Pi => self.engine(true, false, false, x, y),
            ParaproductKind::PiStar => self.engine(true, false, true, x, y),
            ParaproductKind::Lambda => self.engine(true, true, false, x, y),
        }
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        match self.kind {
            ParaproductKind::Pi => self.engine(false, true, true, y, x),
            ParaproductKind::PiStar => self.engine(false, true, false, y, x),
            ParaproductKind::Lambda => self.engine(true, true, true, y, x),
        }
    }
}

fn check_argument(b: &Symbol, f: &StepFunction, width: usize) -> Result<()> {
    if b.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    if f.width() != width {
        return Err(Error::DimensionMismatch {
            expected: width,
            found: f.width(),
        });
    }
    Ok(())
}

fn apply_kind(
    b: &Symbol,
    f: &StepFunction,
    kind: ParaproductKind,
    transpose: bool,
) -> Result<StepFunction> {
    let map = ParaproductMap::new(b, kind);
    let (in_w, out_w, out_space) = match (kind, transpose) {
        (ParaproductKind::PiStar, false) | (ParaproductKind::Pi, true) => {
            (b.n_out, b.n_in, b.input_space())
        }
        _ => (b.n_in, b.n_out, b.output_space()),
    };
    check_argument(b, f, in_w)?;
    let mut out = vec![0.0; b.grid().fine_count() * out_w];
    if transpose {
        map.apply_transpose(f.values(), &mut out);
    } else {
        map.apply(f.values(), &mut out);
    }
    StepFunction::new(b.grid().clone(), out_space, out)
}

/// `Π_b f = Σ_{k=1}^{L} (D_k b)(E_{k−1} f)`.
pub fn pi(b: &Symbol, f: &StepFunction) -> Result<StepFunction> {
    apply_kind(b, f, ParaproductKind::Pi, false)
}

/// `Π_{b*} g = Σ_{k=1}^{L} (D_k b)ᵀ(E_{k−1} g)`, the paraproduct of the
/// pointwise transpose. It satisfies
/// `⟨f, Π_{b*} g⟩ = Σ_k ⟨b, D_k f ⊗ E_{k−1} g⟩`.
pub fn pi_star_adjoint(b: &Symbol, g: &StepFunction) -> Result<StepFunction> {
    apply_kind(b, g, ParaproductKind::PiStar, false)
}

/// The Hilbert-space adjoint `(Π_b)* g = Σ_k E_{k−1}[(D_k b)ᵀ(D_k g)]`, so
/// that `⟨Π_b f, g⟩ = ⟨f, (Π_b)* g⟩`.
pub fn pi_adjoint(b: &Symbol, g: &StepFunction) -> Result<StepFunction> {
    apply_kind(b, g, ParaproductKind::Pi, true)
}

/// `(Π_{b*})* f = Σ_k E_{k−1}[(D_k b)(D_k f)]`.
pub fn pi_star_dual(b: &Symbol, f: &StepFunction) -> Result<StepFunction> {
    apply_kind(b, f, ParaproductKind::PiStar, true)
}

/// `Λ_b f = Π_b f + (Π_{b*})* f`.
pub fn lambda(b: &Symbol, f: &StepFunction) -> Result<StepFunction> {
    apply_kind(b, f, ParaproductKind::Lambda, false)
}

/// `⟨b, E_L f·E_L g − E_0 f·E_0 g − Σ_{k=1}^{L} D_k f·D_k g⟩` for scalar
/// `b, f, g`, assembled from conditional expectations directly.
pub fn scalar_identity_oracle(b: &StepFunction, f: &StepFunction, g: &StepFunction) -> Result<f64> {
    for h in [b, f, g] {
        if !h.space().is_scalar() {
            return Err(Error::Unsupported("the telescoping oracle is scalar only"));
        }
    }
    let levels = f.grid().levels();
    let fl = martingale::expect(f, levels)?;
    let gl = martingale::expect(g, levels)?;
    let f0 = martingale::expect(f, 0)?;
    let g0 = martingale::expect(g, 0)?;
    let mut phi: Vec<f64> = (0..fl.values().len())
        .map(|i| fl.values()[i] * gl.values()[i] - f0.values()[i] * g0.values()[i])
        .collect();
    for k in 1..=levels {
        let dfk = martingale::diff(f, k)?;
        let dgk = martingale::diff(g, k)?;
        phi.iter_mut()
            .zip(dfk.values().iter().zip(dgk.values()))
            .for_each(|(p, (a, c))| *p -= a * c);
    }
    let phi = StepFunction::scalar(f.grid(), phi)?;
    b.with_space(ValueSpace::scalar())?.pair(&phi)
}

/// What to materialize.
pub enum OpSpec<'a> {
    Pi(&'a Symbol),
    PiStar(&'a Symbol),
    Lambda(&'a Symbol),
    SignTransform {
        signs: &'a SignVector,
        space: ValueSpace,
        freeze_mean: bool,
    },
    Custom {
        map: &'a dyn LinearMap,
        input: ValueSpace,
        output: ValueSpace,
    },
}

/// Dense realization of an operator on step functions.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: Matrix,
    pub grid: DyadicGrid,
    pub input: ValueSpace,
    pub output: ValueSpace,
    /// Measure of each finest cell (the weight of every coordinate block).
    pub weight: f64,
}

impl OperatorMatrix {
    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if f.width() != self.input.width() {
            return Err(Error::DimensionMismatch {
                expected: self.input.width(),
                found: f.width(),
            });
        }
        let mut out = vec![0.0; self.matrix.rows];
        self.matrix.apply(f.values(), &mut out);
        StepFunction::new(self.grid.clone(), self.output, out)
    }
}

/// Materialize an operator as a dense matrix in finest-cell coordinates.
pub fn materialize(spec: &OpSpec<'_>, grid: &DyadicGrid) -> Result<OperatorMatrix> {
    let owned: Box<dyn LinearMap>;
    let (map, input, output): (&dyn LinearMap, ValueSpace, ValueSpace) = match spec {
        OpSpec::Pi(b) | OpSpec::Lambda(b) | OpSpec::PiStar(b) => {
            if b.grid() != grid {
                return Err(Error::GridMismatch);
            }
            let kind = match spec {
                OpSpec::Pi(_) => ParaproductKind::Pi,
                OpSpec::PiStar(_) => ParaproductKind::PiStar,
                _ => ParaproductKind::Lambda,
            };
            owned = Box::new(ParaproductMap::new(b, kind));
            let (i, o) = if kind == ParaproductKind::PiStar {
                (b.output_space(), b.input_space())
            } else {
                (b.input_space(), b.output_space())
            };
            (owned.as_ref(), i, o)
        }
        OpSpec::SignTransform {
            signs,
            space,
            freeze_mean,
        } => {
            if signs.len() != grid.levels() + 1 {
                return Err(Error::DimensionMismatch {
                    expected: grid.levels() + 1,
                    found: signs.len(),
                });
            }
            let mut coefficients: Vec<f64> = (0..signs.len()).map(|k| signs.get(k)).collect();
            if *freeze_mean {
                coefficients[0] = 1.0;
            }
            owned = Box::new(DifferenceMultiplier {
                grid: grid.clone(),
                width: space.width(),
                coefficients,
            });
            (owned.as_ref(), *space, *space)
        }
        OpSpec::Custom { map, input, output } => {
            if map.cols() != grid.fine_count() * input.width()
                || map.rows() != grid.fine_count() * output.width()
            {
                return Err(Error::DimensionMismatch {
                    expected: grid.fine_count() * input.width(),
                    found: map.cols(),
                });
            }
            (*map, *input, *output)
        }
    };
    let size = map.rows().max(map.cols());
    if size > MAX_MATERIALIZED {
        return Err(Error::Guard {
            what: "materialized operator side",
            value: size,
            limit: MAX_MATERIALIZED,
        });
    }
    Ok(OperatorMatrix {
        matrix: linalg::to_dense(map),
        grid: grid.clone(),
        input,
        output,
        weight: grid.cell_measure(grid.levels()),
    })
}

/// Bracket on an `L^p → L^p` operator norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: Option<f64>,
    pub certified: bool,
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            restarts: 8,
            iterations: 200,
            seed: 0,
        }
    }
}

/// `‖M‖_{L^p(X) → L^p(Y)}` of a map on finest-cell coordinates.
///
/// For `p = 2` and Euclidean spaces this is the largest singular value
/// (uniform cell weights cancel). Otherwise the nonlinear power method on
/// the mixed `ℓ^p(ℓ^q)` norm gives a lower bound; input and output must
/// then share the inner exponent.
pub fn operator_norm<M: LinearMap + ?Sized>(
    map: &M,
    input: &ValueSpace,
    output: &ValueSpace,
    p: f64,
    options: &NormOptions,
) -> Result<NormEstimate> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(
            "operator norm exponent must lie in (1, inf)".into(),
        ));
    }
    let (q_in, q_out) = match (*input, *output) {
        (ValueSpace::Vector { q: a, .. }, ValueSpace::Vector { q: b, .. }) => (a, b),
        _ => {
            return Err(Error::Unsupported(
                "operator norms act between vector-valued functions",
            ))
        }
    };
    if p == 2.0 && q_in == 2.0 && q_out == 2.0 {
        let s = linalg::spectral_norm(map);
        let certified = s.residual <= 1e-8 * s.value * s.value || s.value == 0.0;
        return Ok(NormEstimate {
            lower: s.value,
            upper: certified.then_some(s.value),
            certified,
            restarts: 0,
        });
    }
    if q_in != q_out {
        return Err(Error::Unsupported(
            "p != 2 norms need equal inner exponents",
        ));
    }
    let block = input.width();
    let n = map.cols();
    let mut starts = vec![vec![1.0; n]];
    let mut delta = vec![0.0; n];
    delta[0] = 1.0;
    starts.push(delta);
    let mut r = rng::substream(options.seed, "operator-norm", n as u64);
    for _ in 0..options.restarts {
        starts.push(rng::gaussian_vec(&mut r, n));
    }
    let (lower, _) = linalg::pnorm_power_method(map, block, p, q_in, &starts, options.iterations);
    Ok(NormEstimate {
        lower,
        upper: None,
        certified: false,
        restarts: starts.len(),
    })
}

/// Norm of a materialized operator.
pub fn matrix_norm(m: &OperatorMatrix, p: f64, options: &NormOptions) -> Result<NormEstimate> {
    operator_norm(&m.matrix, &m.input, &m.output, p, options)
}

/// `‖Λ_b‖_{L^p → L^p}` against `‖b‖_{BMO_d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRatio {
    pub op_norm_est: f64,
    pub bmo_norm: f64,
    /// 0 for constant symbols (where `Λ_b = 0`).
    pub ratio: f64,
}

pub fn lambda_ratio(b: &Symbol, p: f64, options: &NormOptions) -> Result<LambdaRatio> {
    let bmo_norm = norms::bmo_dyadic(b.function());
    let map = ParaproductMap::new(b, ParaproductKind::Lambda);
    let op_norm_est = operator_norm(&map, &b.input_space(), &b.output_space(), p, options)?.lower;
    let ratio = if bmo_norm > 0.0 {
        op_norm_est / bmo_norm
    } else {
        0.0
    };
    Ok(LambdaRatio {
        op_norm_est,
        bmo_norm,
        ratio,
    })
}

/// Parameters of a dimension scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanParams {
    pub n_list: Vec<usize>,
    pub levels: usize,
    pub dim: usize,
    pub p: f64,
    /// Random symbols per dimension.
    pub budget: usize,
    /// Symbols refined by hill climbing per dimension (the best by Λ-ratio).
    pub refine: usize,
    /// Sign-flip sweeps over all Haar blocks per refined symbol.
    pub sweeps: usize,
    pub seed: u64,
    pub bmo_so: BmoSoOptions,
}

impl ScanParams {
    pub fn new(n_list: Vec<usize>, levels: usize, p: f64, budget: usize, seed: u64) -> Self {
        ScanParams {
            n_list,
            levels,
            dim: 1,
            p,
            budget,
            refine: 2,
            sweeps: 1,
            seed,
            bmo_so: BmoSoOptions {
                sphere_points: Some(0),
                ascent_starts: 2,
                ascent_iterations: 50,
                seed,
            },
        }
    }
}

/// Ratios measured for one symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRatios {
    pub lambda_norm: f64,
    pub pi_norm: f64,
    pub bmo: f64,
    pub bmo_so: f64,
    pub lambda_ratio: f64,
    pub pi_ratio: f64,
}

/// One CSV row of a scan. `wall_ms` is filled in by callers that time runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub levels: usize,
    pub p: f64,
    pub seed: u64,
    pub budget: usize,
    pub pi_ratio_max: f64,
    pub lambda_ratio_max: f64,
    /// `‖b‖_{BMO_d}` of the symbol attaining `lambda_ratio_max`.
    pub bmo: f64,
    /// `‖b‖_{BMO_so}` of the symbol attaining `pi_ratio_max`.
    pub bmo_so: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
}

/// Haar coefficient blocks of a random symbol: Gaussian `n × n` blocks
/// scaled by `1/√n`, a random weight per level and a random density.
pub fn random_symbol(grid: &DyadicGrid, n: usize, seed: u64, index: u64) -> Result<Symbol> {
    let mut r = rng::substream(seed, "scan-symbol", index ^ ((n as u64) << 40));
    let w = n * n;
    let basis = grid.haar_basis();
    let level_scale: Vec<f64> = (0..grid.levels())
        .map(|_| rand::Rng::random::<f64>(&mut r))
        .collect();
    let density = 0.1 + 0.9 * rand::Rng::random::<f64>(&mut r);
    let inv = 1.0 / (n as f64).sqrt();
    let mut coefficients = vec![0.0; basis.len() * w];
    for (idx, h) in basis.iter().enumerate() {
        let keep = rand::Rng::random::<f64>(&mut r) < density;
        for c in 0..w {
            let g = rng::gaussian(&mut r);
            if keep {
                coefficients[idx * w + c] = g * inv * level_scale[h.level];
            }
        }
    }
    let expansion = martingale::HaarExpansion {
        width: w,
        mean: vec![0.0; w],
        coefficients,
    };
    Symbol::euclidean(grid, n, n, martingale::haar_synthesis(grid, &expansion))
}

/// `‖Λ_b‖/‖b‖_{BMO_d}` and `‖Π_b‖/‖b‖_{BMO_so}` for one symbol.
pub fn sample_ratios(
    b: &Symbol,
    p: f64,
    so: &BmoSoOptions,
    norm: &NormOptions,
) -> Result<SampleRatios> {
    let t = lambda_ratio(b, p, norm)?;
    let pi_map = ParaproductMap::new(b, ParaproductKind::Pi);
    let pi_norm = operator_norm(&pi_map, &b.input_space(), &b.output_space(), p, norm)?.lower;
    let bmo_so = norms::bmo_so(b.function(), so)?.value;
    let pi_ratio = if bmo_so > 0.0 { pi_norm / bmo_so } else { 0.0 };
    Ok(SampleRatios {
        lambda_norm: t.op_norm_est,
        pi_norm,
        bmo: t.bmo_norm,
        bmo_so,
        lambda_ratio: t.ratio,
        pi_ratio,
    })
}

/// Sign-flip hill climbing on the Haar coefficient blocks of `b`, maximizing
/// the Λ-ratio. Returns the improved symbol and its ratios.
pub fn hill_climb(
    b: &Symbol,
    p: f64,
    sweeps: usize,
    so: &BmoSoOptions,
    norm: &NormOptions,
) -> Result<(Symbol, SampleRatios)> {
    let grid = b.grid().clone();
    let w = b.n_out * b.n_in;
    let mut expansion = martingale::haar_analysis(&grid, w, b.values());
    let blocks = expansion.coefficients.len() / w;
    let mut current = b.clone();
    let mut best = lambda_ratio(&current, p, norm)?.ratio;
    for _ in 0..sweeps {
        let mut improved = false;
        for blk in 0..blocks {
            if expansion.coefficients[blk * w..(blk + 1) * w]
                .iter()
                .all(|&c| c == 0.0)
            {
                continue;
            }
            expansion.coefficients[blk * w..(blk + 1) * w]
                .iter_mut()
                .for_each(|c| *c = -*c);
            let cand = Symbol::euclidean(
                &grid,
                b.n_out,
                b.n_in,
                martingale::haar_synthesis(&grid, &expansion),
            )?;
            let r = lambda_ratio(&cand, p, norm)?.ratio;
            if r > best {
                best = r;
                current = cand;
                improved = true;
            } else {
                expansion.coefficients[blk * w..(blk + 1) * w]
                    .iter_mut()
                    .for_each(|c| *c = -*c);
            }
        }
        if !improved {
            break;
        }
    }
    let ratios = sample_ratios(&current, p, so, norm)?;
    Ok((current, ratios))
}

/// Evaluate one random symbol of a scan.
pub fn scan_sample(params: &ScanParams, n: usize, index: usize) -> Result<SampleRatios> {
    let grid = DyadicGrid::standard(params.dim, params.levels)?;
    let b = random_symbol(&grid, n, params.seed, index as u64)?;
    sample_ratios(
        &b,
        params.p,
        &params.bmo_so,
        &NormOptions {
            seed: params.seed,
            ..NormOptions::default()
        },
    )
}

/// Refine the best samples of one dimension and fold everything into a row.
pub fn scan_row(params: &ScanParams, n: usize, samples: &[SampleRatios]) -> Result<ScanRow> {
    let grid = DyadicGrid::standard(params.dim, params.levels)?;
    let norm = NormOptions {
        seed: params.seed,
        ..NormOptions::default()
    };
    let mut all: Vec<SampleRatios> = samples.to_vec();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[b]
            .lambda_ratio
            .total_cmp(&samples[a].lambda_ratio)
            .then(a.cmp(&b))
    });
    for &idx in order.iter().take(params.refine) {
        let b = random_symbol(&grid, n, params.seed, idx as u64)?;
        let (_, r) = hill_climb(&b, params.p, params.sweeps, &params.bmo_so, &norm)?;
        all.push(r);
    }
    let lam = all
        .iter()
        .copied()
        .fold(None::<SampleRatios>, |acc, s| match acc {
            Some(a) if a.lambda_ratio >= s.lambda_ratio => Some(a),
            _ => Some(s),
        });
    let pi = all
        .iter()
        .copied()
        .fold(None::<SampleRatios>, |acc, s| match acc {
            Some(a) if a.pi_ratio >= s.pi_ratio => Some(a),
            _ => Some(s),
        });
    Ok(ScanRow {
        n,
        levels: params.levels,
        p: params.p,
        seed: params.seed,
        budget: params.budget,
        pi_ratio_max: pi.map_or(0.0, |s| s.pi_ratio),
        lambda_ratio_max: lam.map_or(0.0, |s| s.lambda_ratio),
        bmo: lam.map_or(0.0, |s| s.bmo),
        bmo_so: pi.map_or(0.0, |s| s.bmo_so),
        wall_ms: 0.0,
    })
}

/// Sequential dimension scan: for every `n`, `budget` random symbols plus
/// hill-climb refinement of the best ones.
pub fn logdim_scan(params: &ScanParams) -> Result<ScanReport> {
    if params.budget == 0 {
        return Err(Error::Config("scan budget must be positive".into()));
    }
    let mut rows = Vec::new();
    for &n in &params.n_list {
        let samples = (0..params.budget)
            .map(|i| scan_sample(params, n, i))
            .collect::<Result<Vec<_>>>()?;
        rows.push(scan_row(params, n, &samples)?);
    }
    Ok(ScanReport { rows })
}
