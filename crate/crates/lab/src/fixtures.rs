//! Named, deterministic inputs.

use std::path::Path;

use dyadlab_core::grid::{make_grid, DyadicGrid};
use dyadlab_core::kernel::{
    BeurlingAhlforsKernel, HilbertKernel, Kernel, MultiplicationKernel, Profile, ZeroKernel,
};
use dyadlab_core::paraproduct::{random_symbol, Symbol};
use dyadlab_core::{rng, StepFunction, ValueSpace};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::kernel_file;

pub const SYMBOL_FIXTURES: &[&str] = &["haar-scalar", "diag-h-2h", "haar-identity", "random"];
pub const KERNEL_FIXTURES: &[&str] = &[
    "hilbert-kernel",
    "beurling-ahlfors-kernel",
    "symm-mult-kernel",
    "one-sided-kernel",
    "zero-kernel",
];

/// Values of the multiplier `a` used by the multiplication kernels, on the
/// level-3 grid of `[0, 1)`.
pub const MULTIPLIER_VALUES: [f64; 8] = [1.0, 0.5, -1.0, 2.0, 0.0, 1.5, -0.5, 1.0];
pub const MULTIPLIER_PROFILE: Profile = Profile::Gaussian { c: 1.0, width: 0.2 };

fn haar(grid: &DyadicGrid) -> Vec<f64> {
    grid.haar_basis()[0].values(grid)
}

/// The symbol named by the configuration (default `random`), or an inline
/// symbol on the configured grid.
pub fn symbol(config: &ExperimentConfig) -> LabResult<(String, Symbol)> {
    if let Some(inline) = &config.params.symbol {
        if config.params.fixture.is_some() {
            return Err(LabError::Config(
                "give either params.fixture or params.symbol, not both".into(),
            ));
        }
        let grid = config.grid.build()?;
        let s = Symbol::euclidean(&grid, inline.n_out, inline.n_in, inline.values.clone())?;
        return Ok(("inline".into(), s));
    }
    let name = config
        .params
        .fixture
        .clone()
        .unwrap_or_else(|| "random".into());
    let s = symbol_fixture(&name, config)?;
    Ok((name, s))
}

pub fn symbol_fixture(name: &str, config: &ExperimentConfig) -> LabResult<Symbol> {
    match name {
        "haar-scalar" => {
            let g = make_grid(1, 1, &[])?;
            Ok(Symbol::scalar(&g, haar(&g))?)
        }
        "diag-h-2h" => {
            let g = make_grid(1, 1, &[])?;
            let h = haar(&g);
            let twice = h.iter().map(|v| 2.0 * v).collect();
            Ok(Symbol::diagonal(&g, &[h, twice])?)
        }
        "haar-identity" => {
            let g = config.grid.build()?;
            Ok(Symbol::scalar_times_identity(
                &g,
                &haar(&g),
                config.values.n,
            )?)
        }
        "random" => {
            let g = config.grid.build()?;
            Ok(random_symbol(&g, config.values.n, config.seed, 0)?)
        }
        other => Err(LabError::Config(format!(
            "unknown symbol fixture {other:?} (known: {})",
            SYMBOL_FIXTURES.join(", ")
        ))),
    }
}

/// A tensor-valued function for `H¹` probes: the scalar Haar function for
/// `haar-scalar`, otherwise a seeded mean-zero `n × n` tensor function.
pub fn h1_function(config: &ExperimentConfig, index: u64) -> LabResult<(String, StepFunction)> {
    let name = config
        .params
        .fixture
        .clone()
        .unwrap_or_else(|| "random".into());
    match name.as_str() {
        "haar-scalar" => {
            let g = make_grid(1, 1, &[])?;
            Ok((name, StepFunction::scalar(&g, haar(&g))?))
        }
        "random" => {
            let g = config.grid.build()?;
            Ok((
                name,
                random_tensor_function(&g, config.values.n, config.seed, index)?,
            ))
        }
        other => Err(LabError::Config(format!(
            "unknown function fixture {other:?} (known: haar-scalar, random)"
        ))),
    }
}

pub fn random_tensor_function(
    grid: &DyadicGrid,
    n: usize,
    seed: u64,
    index: u64,
) -> LabResult<StepFunction> {
    let mut r = rng::substream(seed, "tensor-function", index);
    let w = n * n;
    let mut v = rng::gaussian_vec(&mut r, grid.fine_count() * w);
    let cells = grid.fine_count() as f64;
    for c in 0..w {
        let mean: f64 = v.iter().skip(c).step_by(w).sum::<f64>() / cells;
        v.iter_mut().skip(c).step_by(w).for_each(|x| *x -= mean);
    }
    Ok(StepFunction::new(
        grid.clone(),
        ValueSpace::euclidean_tensor(n, n),
        v,
    )?)
}

pub fn multiplier() -> LabResult<StepFunction> {
    let g = make_grid(1, 3, &[])?;
    Ok(StepFunction::new(
        g,
        ValueSpace::euclidean_operator(1, 1),
        MULTIPLIER_VALUES.to_vec(),
    )?)
}

/// A built-in kernel by name, or a sampled kernel read from a header file.
pub fn kernel(name: &str) -> LabResult<Box<dyn Kernel>> {
    Ok(match name {
        "hilbert-kernel" | "hilbert" => Box::new(HilbertKernel),
        "beurling-ahlfors-kernel" | "beurling-ahlfors" => Box::new(BeurlingAhlforsKernel),
        "symm-mult-kernel" => Box::new(MultiplicationKernel::new(
            multiplier()?,
            MULTIPLIER_PROFILE,
            false,
        )?),
        "one-sided-kernel" => Box::new(MultiplicationKernel::new(
            multiplier()?,
            MULTIPLIER_PROFILE,
            true,
        )?),
        "zero-kernel" => Box::new(ZeroKernel { dim: 1, n: 1 }),
        path if path.ends_with(".json") => Box::new(kernel_file::load(Path::new(path))?),
        other => {
            return Err(LabError::Config(format!(
                "unknown kernel {other:?} (known: {}, or a path to a .json kernel header)",
                KERNEL_FIXTURES.join(", ")
            )))
        }
    })
}
