//! The subcommands. Each turns a configuration into an [`Outcome`].

use std::time::Instant;

use dyadlab_core::grid::make_grid;
use dyadlab_core::kernel::{
    cube_mesh, cz_constants, symmetry_check, t1_bound_report, wbp, Kernel, QuadOptions,
    T1ReportOptions,
};
use dyadlab_core::linalg::Matrix;
use dyadlab_core::martingale::{
    diff, expect, haar_analysis, haar_synthesis, sign_transform, umd_transform_norm, SignMode,
    SignVector, UmdOptions,
};
use dyadlab_core::norms::{
    bmo_dyadic, bmo_nondyadic, bmo_so, duality_pair, duality_pair_haar, h1_norm, lp_norm,
    BmoSoOptions,
};
use dyadlab_core::paraproduct::{
    lambda, lambda_ratio, materialize, matrix_norm, operator_norm, pi, pi_adjoint, random_symbol,
    scalar_identity_oracle, scan_row, scan_sample, NormOptions, OpSpec, ParaproductKind,
    ParaproductMap, ScanParams, Symbol,
};
use dyadlab_core::rbound::{hilbert_p2_oracle, rbound_sup, OperatorFamily, RBoundOptions};
use dyadlab_core::value::conjugate;
use dyadlab_core::{rng, DyadicGrid, StepFunction, ValueSpace};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::fixtures;
use crate::output::{json_num, num, Check, Outcome, Table};

pub const SUBCOMMANDS: &[&str] = &[
    "paraproduct-norm",
    "lambda-norm",
    "bmo",
    "bmo-so",
    "h1",
    "duality-probe",
    "umd-estimate",
    "rbound",
    "logdim-scan",
    "kernel-check",
    "t1-report",
    "selftest",
];

/// Settings that do not change numeric results.
#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    /// Worker threads for scans; `None` lets rayon decide.
    pub threads: Option<usize>,
    /// Report wall-clock times (off for byte-stable outputs).
    pub timing: bool,
}

pub fn dispatch(
    subcommand: &str,
    config: &ExperimentConfig,
    settings: &RunSettings,
) -> LabResult<Outcome> {
    match subcommand {
        "paraproduct-norm" => paraproduct_norm(config),
        "lambda-norm" => lambda_norm(config),
        "bmo" => bmo(config),
        "bmo-so" => bmo_so_cmd(config),
        "h1" => h1(config),
        "duality-probe" => duality_probe(config),
        "umd-estimate" => umd_estimate(config),
        "rbound" => rbound(config),
        "logdim-scan" => logdim_scan(config, settings),
        "kernel-check" => kernel_check(config),
        "t1-report" => t1_report(config),
        "selftest" => selftest(config),
        other => Err(LabError::Config(format!("unknown subcommand {other:?}"))),
    }
}

fn norm_options(config: &ExperimentConfig) -> NormOptions {
    NormOptions {
        seed: config.seed,
        ..NormOptions::default()
    }
}

fn so_options(config: &ExperimentConfig) -> BmoSoOptions {
    BmoSoOptions {
        sphere_points: config.params.sphere_points,
        seed: config.seed,
        ..BmoSoOptions::default()
    }
}

fn shape(b: &Symbol) -> String {
    format!("{}x{}", b.n_out(), b.n_in())
}

fn paraproduct_norm(config: &ExperimentConfig) -> LabResult<Outcome> {
    let p = config.p();
    let (name, b) = fixtures::symbol(config)?;
    let so = bmo_so(b.function(), &so_options(config))?;
    let mut table = Table::new(&[
        "fixture",
        "shape",
        "levels",
        "p",
        "operator",
        "norm_lower",
        "norm_upper",
        "certified",
        "bmo_so",
        "ratio",
    ]);
    let mut data = Vec::new();
    let mut pi_norm = 0.0;
    for (label, kind) in [
        ("pi", ParaproductKind::Pi),
        ("pi_star", ParaproductKind::PiStar),
    ] {
        let est = if kind == ParaproductKind::Pi {
            let map = ParaproductMap::new(&b, kind);
            operator_norm(
                &map,
                &b.input_space(),
                &b.output_space(),
                p,
                &norm_options(config),
            )?
        } else {
            matrix_norm(
                &materialize(&OpSpec::PiStar(&b), b.grid())?,
                p,
                &norm_options(config),
            )?
        };
        if kind == ParaproductKind::Pi {
            pi_norm = est.lower;
        }
        let ratio = if so.value > 0.0 {
            est.lower / so.value
        } else {
            0.0
        };
        table.push(vec![
            name.clone(),
            shape(&b),
            b.grid().levels().to_string(),
            num(p),
            label.into(),
            num(est.lower),
            est.upper.map_or(String::new(), num),
            est.certified.to_string(),
            num(so.value),
            num(ratio),
        ]);
        data.push(json!({
            "operator": label, "norm_lower": json_num(est.lower), "norm_upper": est.upper.map(json_num),
            "certified": est.certified, "bmo_so": json_num(so.value), "ratio": json_num(ratio),
        }));
    }
    Ok(Outcome {
        summary: format!(
            "{name}: ||Pi_b|| = {pi_norm:.6}, ||b||_BMO_so = {:.6}",
            so.value
        ),
        table,
        data: Value::Array(data),
        ..Outcome::default()
    })
}

fn lambda_norm(config: &ExperimentConfig) -> LabResult<Outcome> {
    let p = config.p();
    let (name, b) = fixtures::symbol(config)?;
    let r = lambda_ratio(&b, p, &norm_options(config))?;
    let mut table = Table::new(&[
        "fixture",
        "shape",
        "levels",
        "p",
        "op_norm_est",
        "bmo_norm",
        "ratio",
    ]);
    table.push(vec![
        name.clone(),
        shape(&b),
        b.grid().levels().to_string(),
        num(p),
        num(r.op_norm_est),
        num(r.bmo_norm),
        num(r.ratio),
    ]);
    Ok(Outcome {
        summary: format!(
            "{name}: ||Lambda_b|| = {:.6}, ||b||_BMO = {:.6}, ratio {:.6}",
            r.op_norm_est, r.bmo_norm, r.ratio
        ),
        table,
        data: json!({"op_norm_est": json_num(r.op_norm_est), "bmo_norm": json_num(r.bmo_norm), "ratio": json_num(r.ratio)}),
        ..Outcome::default()
    })
}

fn bmo(config: &ExperimentConfig) -> LabResult<Outcome> {
    let (name, b) = fixtures::symbol(config)?;
    let shifts = config.params.n_shifts.unwrap_or(3);
    let value = bmo_dyadic(b.function());
    let nondyadic = bmo_nondyadic(b.function(), shifts)?;
    let mut table = Table::new(&[
        "fixture",
        "dim",
        "levels",
        "value",
        "bmo_nondyadic",
        "n_shifts",
    ]);
    table.push(vec![
        name.clone(),
        b.grid().dim().to_string(),
        b.grid().levels().to_string(),
        num(value),
        num(nondyadic),
        shifts.to_string(),
    ]);
    Ok(Outcome {
        summary: format!("{name}: ||b||_BMO_d = {value}, over {shifts} shifted grids {nondyadic}"),
        table,
        data: json!({"value": json_num(value), "bmo_nondyadic": json_num(nondyadic), "n_shifts": shifts}),
        ..Outcome::default()
    })
}

fn bmo_so_cmd(config: &ExperimentConfig) -> LabResult<Outcome> {
    let (name, b) = fixtures::symbol(config)?;
    let r = bmo_so(b.function(), &so_options(config))?;
    let full = bmo_dyadic(b.function());
    let method = format!("{:?}", r.method).to_lowercase();
    let mut table = Table::new(&[
        "fixture",
        "shape",
        "value",
        "method",
        "slack",
        "evaluations",
        "bmo_dyadic",
    ]);
    table.push(vec![
        name.clone(),
        shape(&b),
        num(r.value),
        method.clone(),
        num(r.slack),
        r.evaluations.to_string(),
        num(full),
    ]);
    let check = Check::new(
        "bmo_so <= bmo_dyadic",
        r.value <= full * (1.0 + 1e-12),
        format!("{} vs {}", r.value, full),
    );
    Ok(Outcome {
        summary: format!(
            "{name}: ||b||_BMO_so = {:.6} ({method}), ||b||_BMO_d = {full:.6}",
            r.value
        ),
        table,
        data: json!({
            "value": json_num(r.value), "method": method, "slack": json_num(r.slack),
            "evaluations": r.evaluations, "bmo_dyadic": json_num(full),
        }),
        checks: vec![check],
        ..Outcome::default()
    })
}

fn h1(config: &ExperimentConfig) -> LabResult<Outcome> {
    let (name, h) = fixtures::h1_function(config, 0)?;
    let value = h1_norm(&h);
    let l1 = lp_norm(&h, 1.0);
    let mut table = Table::new(&["fixture", "dim", "levels", "value", "l1"]);
    table.push(vec![
        name.clone(),
        h.grid().dim().to_string(),
        h.grid().levels().to_string(),
        num(value),
        num(l1),
    ]);
    let check = Check::new(
        "h1 >= l1",
        value >= l1 * (1.0 - 1e-12),
        format!("{value} vs {l1}"),
    );
    Ok(Outcome {
        summary: format!("{name}: ||h||_H1 = {value:.6}, ||h||_1 = {l1:.6}"),
        table,
        data: json!({"value": json_num(value), "l1": json_num(l1)}),
        checks: vec![check],
        ..Outcome::default()
    })
}

fn duality_probe(config: &ExperimentConfig) -> LabResult<Outcome> {
    let fixture = config
        .params
        .fixture
        .clone()
        .unwrap_or_else(|| "random".into());
    let pairs: Vec<(StepFunction, StepFunction)> = match fixture.as_str() {
        "haar-scalar" => {
            let (_, h) = fixtures::h1_function(config, 0)?;
            vec![(h.clone(), h)]
        }
        "random" => {
            let grid = config.grid.build()?;
            let n = config.values.n;
            (0..config.params.samples.unwrap_or(20))
                .map(|i| {
                    let b = random_symbol(&grid, n, config.seed, i as u64)?
                        .function()
                        .clone();
                    let h = fixtures::random_tensor_function(&grid, n, config.seed, i as u64)?;
                    Ok((b, h))
                })
                .collect::<LabResult<_>>()?
        }
        other => {
            return Err(LabError::Config(format!(
                "unknown duality fixture {other:?} (known: haar-scalar, random)"
            )))
        }
    };
    let mut table = Table::new(&[
        "index",
        "pairing",
        "pairing_haar",
        "bmo",
        "h1",
        "bound_ratio",
    ]);
    let (mut worst_gap, mut max_ratio) = (0.0f64, 0.0f64);
    for (i, (b, h)) in pairs.iter().enumerate() {
        let r = duality_pair(b, h)?;
        let haar = duality_pair_haar(b, h)?;
        worst_gap = worst_gap.max((r.pairing - haar).abs() / (1.0 + r.pairing.abs()));
        max_ratio = max_ratio.max(r.bound_ratio);
        table.push(vec![
            i.to_string(),
            num(r.pairing),
            num(haar),
            num(r.bmo),
            num(r.h1),
            num(r.bound_ratio),
        ]);
    }
    let check = Check::new(
        "direct = haar pairing",
        worst_gap <= 1e-10,
        format!("max relative gap {worst_gap:.3e}"),
    );
    Ok(Outcome {
        summary: format!(
            "{} pairs: max |<b,h>|/(||b||_BMO ||h||_H1) = {max_ratio:.6}",
            pairs.len()
        ),
        table,
        data: json!({"pairs": pairs.len(), "max_bound_ratio": json_num(max_ratio), "max_gap": json_num(worst_gap)}),
        checks: vec![check],
        ..Outcome::default()
    })
}

fn sign_mode(config: &ExperimentConfig) -> LabResult<SignMode> {
    match config.params.mode.as_deref().unwrap_or("exact") {
        "exact" => Ok(SignMode::Exact),
        "monte-carlo" => Ok(SignMode::MonteCarlo {
            samples: config.params.mc_samples.unwrap_or(256),
            seed: config.seed,
        }),
        other => Err(LabError::Config(format!(
            "unknown sign mode {other:?} (known: exact, monte-carlo)"
        ))),
    }
}

fn umd_estimate(config: &ExperimentConfig) -> LabResult<Outcome> {
    let p = config.p();
    let grid = config.grid.build()?;
    let space = config.values.space()?;
    let opts = UmdOptions {
        mode: sign_mode(config)?,
        seed: config.seed,
        ..UmdOptions::default()
    };
    let est = umd_transform_norm(p, &space, &grid, &opts)?;
    let scalar_bound = p.max(conjugate(p)) - 1.0;
    let mut table = Table::new(&[
        "p",
        "n",
        "q",
        "levels",
        "estimate",
        "patterns",
        "exact",
        "scalar_bound",
        "signs",
    ]);
    let signs: String = est
        .signs
        .as_slice()
        .iter()
        .map(|&s| if s > 0 { '+' } else { '-' })
        .collect();
    table.push(vec![
        num(p),
        config.values.n.to_string(),
        num(config.values.q),
        grid.levels().to_string(),
        num(est.estimate),
        est.patterns.to_string(),
        est.exact.to_string(),
        num(scalar_bound),
        signs.clone(),
    ]);
    let mut checks = Vec::new();
    if config.values.n == 1 {
        checks.push(Check::new(
            "scalar estimate <= max(p,p')-1",
            est.estimate <= scalar_bound + 1e-6,
            format!("{} vs {scalar_bound}", est.estimate),
        ));
    }
    Ok(Outcome {
        summary: format!(
            "p = {p}: transform norm >= {:.6} over {} sign patterns",
            est.estimate, est.patterns
        ),
        table,
        data: json!({
            "estimate": json_num(est.estimate), "patterns": est.patterns, "exact": est.exact,
            "scalar_bound": json_num(scalar_bound), "signs": signs,
        }),
        checks,
        ..Outcome::default()
    })
}

fn random_family(n: usize, size: usize, space: ValueSpace, seed: u64) -> LabResult<OperatorFamily> {
    let ops = (0..size)
        .map(|i| {
            let mut r = rng::substream(seed, "rbound-family", i as u64);
            Matrix::from_rows(n, n, rng::gaussian_vec(&mut r, n * n))
        })
        .collect();
    Ok(OperatorFamily::new(ops, space)?)
}

fn rbound(config: &ExperimentConfig) -> LabResult<Outcome> {
    let p = config.p();
    let space = config.values.space()?;
    let size = config.params.k.unwrap_or(4);
    if size == 0 {
        return Err(LabError::Config(
            "params.k (family size) must be positive".into(),
        ));
    }
    let family = random_family(config.values.n, size, space, config.seed)?;
    let (estimates, best) = rbound_sup(&family, p, 8, config.seed, &RBoundOptions::default())?;
    let oracle = if p == 2.0 && space.is_euclidean() {
        Some(hilbert_p2_oracle(&family)?)
    } else {
        None
    };
    let mut table = Table::new(&["k_terms", "p", "n", "q", "lower", "upper", "ascent"]);
    for e in &estimates {
        table.push(vec![
            e.k_used.to_string(),
            num(p),
            config.values.n.to_string(),
            num(config.values.q),
            num(e.lower),
            e.upper.map_or(String::new(), num),
            num(e.ascent),
        ]);
    }
    let mut checks = Vec::new();
    if let Some(o) = oracle {
        let gap = estimates
            .iter()
            .map(|e| (e.lower - o).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new(
            "p=2 collapse to max ||T_k||",
            gap <= 1e-8 * (1.0 + o),
            format!("max gap {gap:.3e}"),
        ));
    }
    Ok(Outcome {
        summary: format!(
            "family of {size} operators on R^{}: R-bound >= {best:.6}",
            config.values.n
        ),
        table,
        data: json!({
            "family_size": size, "best": json_num(best), "oracle": oracle.map(json_num),
            "estimates": estimates.iter().map(|e| json!({
                "k": e.k_used, "lower": json_num(e.lower), "upper": e.upper.map(json_num), "ascent": json_num(e.ascent),
            })).collect::<Vec<_>>(),
        }),
        checks,
        ..Outcome::default()
    })
}

pub fn scan_params(config: &ExperimentConfig) -> LabResult<ScanParams> {
    let n_list = config
        .params
        .n_list
        .clone()
        .unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
    let budget = config.params.budget.unwrap_or(50);
    if budget == 0 {
        return Err(LabError::Config("params.budget must be positive".into()));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(LabError::Config(
            "params.n_list needs positive dimensions".into(),
        ));
    }
    let mut params = ScanParams::new(n_list, config.grid.levels, config.p(), budget, config.seed);
    params.dim = config.grid.dim;
    if let Some(r) = config.params.refine {
        params.refine = r;
    }
    if let Some(s) = config.params.sweeps {
        params.sweeps = s;
    }
    Ok(params)
}

fn logdim_scan(config: &ExperimentConfig, settings: &RunSettings) -> LabResult<Outcome> {
    let params = scan_params(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let mut rows = Vec::new();
    for &n in &params.n_list {
        let start = Instant::now();
        let samples = pool.install(|| {
            (0..params.budget)
                .into_par_iter()
                .map(|i| scan_sample(&params, n, i))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let mut row = pool.install(|| scan_row(&params, n, &samples))?;
        row.wall_ms = if settings.timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        rows.push(row);
    }
    let mut table = Table::new(&[
        "n",
        "levels",
        "p",
        "seed",
        "budget",
        "pi_ratio_max",
        "lambda_ratio_max",
        "bmo",
        "bmo_so",
        "wall_ms",
    ]);
    for r in &rows {
        table.push(vec![
            r.n.to_string(),
            r.levels.to_string(),
            num(r.p),
            r.seed.to_string(),
            r.budget.to_string(),
            num(r.pi_ratio_max),
            num(r.lambda_ratio_max),
            num(r.bmo),
            num(r.bmo_so),
            num(r.wall_ms),
        ]);
    }
    let mut checks = Vec::new();
    let first = rows.iter().find(|r| r.n == 1);
    let last = rows.iter().find(|r| r.n == 16);
    if let (Some(a), Some(b)) = (first, last) {
        checks.push(Check::new(
            "lambda ratio n=16 <= 1.2 x n=1",
            b.lambda_ratio_max <= 1.2 * a.lambda_ratio_max,
            format!("{} vs {}", b.lambda_ratio_max, a.lambda_ratio_max),
        ));
    }
    let growth = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if a.lambda_ratio_max > 0.0 => b.lambda_ratio_max / a.lambda_ratio_max,
        _ => 0.0,
    };
    Ok(Outcome {
        summary: format!(
            "{} dimensions, budget {}: Lambda ratio growth {growth:.4} from n = {} to n = {}",
            rows.len(),
            params.budget,
            params.n_list[0],
            params.n_list[params.n_list.len() - 1]
        ),
        table,
        data: json!({
            "refine": params.refine, "sweeps": params.sweeps,
            "rows": rows.iter().map(|r| json!({
                "n": r.n, "pi_ratio_max": json_num(r.pi_ratio_max), "lambda_ratio_max": json_num(r.lambda_ratio_max),
                "bmo": json_num(r.bmo), "bmo_so": json_num(r.bmo_so),
            })).collect::<Vec<_>>(),
        }),
        checks,
        ..Outcome::default()
    })
}

fn kernel_setup(
    config: &ExperimentConfig,
) -> LabResult<(Box<dyn Kernel>, DyadicGrid, QuadOptions)> {
    let name = config.params.kernel.as_deref().unwrap_or("hilbert-kernel");
    let kernel = fixtures::kernel(name)?;
    if config.grid.dim != kernel.dim() && config.grid.dim != 1 {
        return Err(LabError::Config(format!(
            "grid dimension {} does not match the kernel's {}",
            config.grid.dim,
            kernel.dim()
        )));
    }
    let grid = make_grid(kernel.dim(), config.grid.levels, &config.grid.shift)?;
    let mut quad = QuadOptions::default();
    if let Some(ql) = config.params.quad_level {
        quad.quad_level = ql;
    }
    if let Some(r) = config.params.rmax {
        quad.r_max_diameters = r;
    }
    if let Some(t) = config.tolerances.tail {
        quad.tol = t;
    }
    if let Some(t) = config.tolerances.wbp {
        quad.wbp_tol = t;
    }
    Ok((kernel, grid, quad))
}

fn quantity_table(rows: &[(&str, f64)]) -> (Table, Value) {
    let mut table = Table::new(&["quantity", "value"]);
    let mut map = serde_json::Map::new();
    for (k, v) in rows {
        table.push(vec![k.to_string(), num(*v)]);
        map.insert(k.to_string(), json_num(*v));
    }
    (table, Value::Object(map))
}

fn kernel_check(config: &ExperimentConfig) -> LabResult<Outcome> {
    let (kernel, grid, quad) = kernel_setup(config)?;
    let tol = config.tolerances.tol.unwrap_or(1e-4);
    let cz = cz_constants(
        kernel.as_ref(),
        config.params.cz_samples.unwrap_or(200),
        config.seed,
    )?;
    let ql = quad.level_for(&grid);
    let w = wbp(kernel.as_ref(), &cube_mesh(&grid), ql, &quad)?;
    let cz = cz.with_wbp(w.rbound);
    let sym = symmetry_check(kernel.as_ref(), &grid, tol, &quad)?;
    let b_norm = bmo_dyadic(sym.b.function());
    let wbp_max = w
        .values
        .iter()
        .flat_map(|m| m.data.iter())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let (table, mut data) = quantity_table(&[
        ("size_sup", cz.size_sup),
        ("holder1_sup", cz.holder1_sup),
        ("holder2_sup", cz.holder2_sup),
        ("size_rbound", cz.size_rbound),
        ("holder1_rbound", cz.holder1_rbound),
        ("holder2_rbound", cz.holder2_rbound),
        ("wbp_max", wbp_max),
        ("wbp_rbound", w.rbound),
        ("wbp_cauchy_gap", w.cauchy_gap),
        ("c_t", cz.c_t),
        ("symmetry_discrepancy", sym.max_discrepancy),
        ("symmetry_slack", sym.slack),
        ("b_norm", b_norm),
        ("quad_level", w.quad_level as f64),
    ]);
    data["kernel"] = Value::String(kernel.name());
    data["symmetry_pass"] = Value::Bool(sym.pass);
    let checks = vec![
        Check::new(
            "wbp quadrature converged",
            w.converged,
            format!("cauchy gap {:.3e}", w.cauchy_gap),
        ),
        Check::new(
            "t(1,.) = t(.,1)",
            sym.pass,
            format!(
                "discrepancy {:.3e}, tolerance {tol:.1e} + slack {:.3e}",
                sym.max_discrepancy, sym.slack
            ),
        ),
    ];
    let hypothesis = (!sym.pass).then(|| {
        format!(
            "{}: t(1,.) and t(.,1) differ by {:.3e}",
            kernel.name(),
            sym.max_discrepancy
        )
    });
    Ok(Outcome {
        summary: format!(
            "{}: C_T = {:.6}, symmetry {} ({:.3e}), ||b||_BMO = {b_norm:.3e}",
            kernel.name(),
            cz.c_t,
            if sym.pass { "ok" } else { "FAILED" },
            sym.max_discrepancy
        ),
        table,
        data,
        checks,
        hypothesis,
    })
}

fn t1_report(config: &ExperimentConfig) -> LabResult<Outcome> {
    let (kernel, grid, quad) = kernel_setup(config)?;
    let mut opts = T1ReportOptions {
        quad,
        seed: config.seed,
        ..T1ReportOptions::default()
    };
    if let Some(t) = config.tolerances.tol {
        opts.symmetry_tol = t;
    }
    if let Some(s) = config.params.cz_samples {
        opts.cz_samples = s;
    }
    if let Some(s) = config.params.scale_factor {
        opts.scale_factor = s;
    }
    let r = t1_bound_report(kernel.as_ref(), &grid, config.p(), &opts)?;
    let (table, mut data) = quantity_table(&[
        ("c_t", r.cz.c_t),
        ("wbp_rbound", r.wbp.rbound),
        ("symmetry_discrepancy", r.symmetry_discrepancy),
        ("b_bmo", r.b_bmo),
        ("beta", r.beta),
        ("bound", r.bound),
        ("measured", r.measured),
        ("ratio", r.ratio),
        ("scale_factor", r.scale_factor),
        ("quad_level", r.quad_level as f64),
    ]);
    data["kernel"] = Value::String(kernel.name());
    data["within"] = Value::Bool(r.within);
    Ok(Outcome {
        summary: format!(
            "{}: measured {:.6} vs beta^2 (C_T + ||b||) = {:.6}, ratio {:.4}",
            kernel.name(),
            r.measured,
            r.bound,
            r.ratio
        ),
        table,
        data,
        checks: vec![Check::new(
            "measured <= scale x bound",
            r.within,
            format!("ratio {:.4}", r.ratio),
        )],
        ..Outcome::default()
    })
}

fn random_step(
    grid: &DyadicGrid,
    width: usize,
    seed: u64,
    label: &str,
    index: u64,
) -> LabResult<StepFunction> {
    let mut r = rng::substream(seed, label, index);
    Ok(StepFunction::new(
        grid.clone(),
        ValueSpace::euclidean(width),
        rng::gaussian_vec(&mut r, grid.fine_count() * width),
    )?)
}

fn max_abs_diff(a: &StepFunction, b: &StepFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `E_j E_k = E_{min(j,k)}`, `D_j D_k = δ_{jk} D_k`, `Σ D_k = Id` on cell indicators.
fn suite_projections() -> LabResult<f64> {
    let mut worst = 0.0f64;
    for (d, l) in [(1, 4), (2, 2)] {
        let grid = make_grid(d, l, &[])?;
        for c in 0..grid.fine_count() {
            let mut v = vec![0.0; grid.fine_count()];
            v[c] = 1.0;
            let f = StepFunction::scalar(&grid, v)?;
            let mut total = StepFunction::zeros(&grid, ValueSpace::scalar());
            for j in 0..=l {
                let ej = expect(&f, j)?;
                let dj = diff(&f, j)?;
                total = total.combine(1.0, &dj, 1.0)?;
                for k in 0..=l {
                    worst = worst.max(max_abs_diff(&expect(&ej, k)?, &expect(&f, j.min(k))?));
                    let ddk = diff(&dj, k)?;
                    let want = if j == k {
                        dj.clone()
                    } else {
                        StepFunction::zeros(&grid, ValueSpace::scalar())
                    };
                    worst = worst.max(max_abs_diff(&ddk, &want));
                }
            }
            worst = worst.max(max_abs_diff(&total, &f));
        }
    }
    Ok(worst)
}

fn suite_adjoint(seed: u64) -> LabResult<f64> {
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let n = 1 + (i % 3) as usize;
        let grid = make_grid(1, 1 + (i % 4) as usize, &[])?;
        let b = random_symbol(&grid, n, seed, i)?;
        let f = random_step(&grid, n, seed, "selftest-f", i)?;
        let g = random_step(&grid, n, seed, "selftest-g", i)?;
        let lhs = pi(&b, &f)?.pair(&g)?;
        let rhs = f.pair(&pi_adjoint(&b, &g)?)?;
        let scale = (f.pair(&f)? * g.pair(&g)?).sqrt() * (1.0 + bmo_dyadic(b.function()));
        worst = worst.max((lhs - rhs).abs() / (1.0 + scale));
    }
    Ok(worst)
}

fn suite_telescoping(seed: u64) -> LabResult<f64> {
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let grid = make_grid(1, 1 + (i % 5) as usize, &[])?;
        let b = random_step(&grid, 1, seed, "selftest-b", i)?;
        let f = random_step(&grid, 1, seed, "selftest-f", i)?;
        let g = random_step(&grid, 1, seed, "selftest-g", i)?;
        let lhs = lambda(&Symbol::new(b.clone())?, &f)?.pair(&g)?;
        let rhs = scalar_identity_oracle(&b, &f, &g)?;
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    Ok(worst)
}

fn suite_sign_isometry(seed: u64) -> LabResult<f64> {
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let l = 1 + (i % 4) as usize;
        let grid = make_grid(1, l, &[])?;
        let f = random_step(&grid, 2, seed, "selftest-umd", i)?;
        let norm = lp_norm(&f, 2.0);
        for bits in 0..(1u64 << (l + 1)) {
            let t = sign_transform(&f, &SignVector::from_bits(bits, l + 1), false)?;
            worst = worst.max((lp_norm(&t, 2.0) - norm).abs() / (1.0 + norm));
        }
    }
    Ok(worst)
}

fn suite_haar(seed: u64) -> LabResult<f64> {
    let mut worst = 0.0f64;
    for (i, (d, l)) in [(1usize, 5usize), (2, 3)].into_iter().enumerate() {
        let grid = make_grid(d, l, &[])?;
        let f = random_step(&grid, 3, seed, "selftest-haar", i as u64)?;
        let back = haar_synthesis(&grid, &haar_analysis(&grid, 3, f.values()));
        worst = worst.max(
            f.values()
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    Ok(worst)
}

fn suite_duality(seed: u64) -> LabResult<f64> {
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let n = 1 + (i % 3) as usize;
        let grid = make_grid(1, 1 + (i % 5) as usize, &[])?;
        let b = random_symbol(&grid, n, seed, i)?;
        let h = fixtures::random_tensor_function(&grid, n, seed, i)?;
        let direct = duality_pair(b.function(), &h)?.pairing;
        let haar = duality_pair_haar(b.function(), &h)?;
        worst = worst.max((direct - haar).abs() / (1.0 + direct.abs()));
    }
    Ok(worst)
}

fn suite_rbound(seed: u64) -> LabResult<f64> {
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let n = 1 + (i % 4) as usize;
        let family = random_family(n, 1 + (i % 5) as usize, ValueSpace::euclidean(n), seed ^ i)?;
        let oracle = hilbert_p2_oracle(&family)?;
        let (_, best) = rbound_sup(&family, 2.0, 4, seed, &RBoundOptions::default())?;
        worst = worst.max((best - oracle).abs() / (1.0 + oracle));
    }
    Ok(worst)
}

fn selftest(config: &ExperimentConfig) -> LabResult<Outcome> {
    let seed = config.seed;
    let suites: Vec<(&str, f64, LabResult<f64>)> = vec![
        ("projection calculus", 1e-12, suite_projections()),
        ("paraproduct adjoint", 1e-12, suite_adjoint(seed)),
        ("telescoping identity", 1e-12, suite_telescoping(seed)),
        ("p=2 sign isometry", 1e-12, suite_sign_isometry(seed)),
        ("haar round trip", 1e-12, suite_haar(seed)),
        ("duality pairing", 1e-10, suite_duality(seed)),
        ("p=2 R-bound collapse", 1e-8, suite_rbound(seed)),
    ];
    let mut table = Table::new(&["suite", "max_error", "tolerance", "pass"]);
    let mut checks = Vec::new();
    for (name, tol, result) in suites {
        let err = result?;
        let pass = err <= tol;
        table.push(vec![name.into(), num(err), num(tol), pass.to_string()]);
        checks.push(Check::new(
            name,
            pass,
            format!("max error {err:.3e} (tolerance {tol:.0e})"),
        ));
    }
    let green = checks.iter().filter(|c| c.pass).count();
    Ok(Outcome {
        summary: format!("{green}/{} exact-identity suites passed", checks.len()),
        data: json!({"suites": checks.len(), "passed": green}),
        table,
        checks,
        ..Outcome::default()
    })
}
