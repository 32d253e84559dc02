use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema(name: &str) -> Value {
    read_json(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("schemas")
            .join(name),
    )
}

fn type_matches(v: &Value, ty: &Value) -> bool {
    match ty {
        Value::Array(options) => options.iter().any(|t| type_matches(v, t)),
        Value::String(t) => match t.as_str() {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "integer" => v.is_i64() || v.is_u64(),
            "number" => v.is_number(),
            _ => false,
        },
        _ => false,
    }
}

/// Required keys, closed objects and property types, recursively through
/// object-typed properties and array items.
fn conforms(v: &Value, s: &Value) -> Result<(), String> {
    if let Some(ty) = s.get("type") {
        if !type_matches(v, ty) {
            return Err(format!("{v} is not of type {ty}"));
        }
    }
    if let Some(c) = s.get("const") {
        if v != c {
            return Err(format!("{v} != {c}"));
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.contains(v) {
            return Err(format!("{v} not in {options:?}"));
        }
    }
    if let (Value::Object(obj), Some(props)) = (v, s.get("properties").and_then(Value::as_object)) {
        for key in s
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            if !obj.contains_key(key.as_str().unwrap()) {
                return Err(format!("missing {key}"));
            }
        }
        for (k, val) in obj {
            match props.get(k) {
                Some(ps) => conforms(val, ps)?,
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Value::Array(items), Some(item_schema)) = (v, s.get("items")) {
        items.iter().try_for_each(|i| conforms(i, item_schema))?;
    }
    Ok(())
}

fn check_schemas(dir: &Path, sub: &str) -> Value {
    let manifest = read_json(&dir.join("manifest.json"));
    conforms(&manifest, &schema("manifest.schema.json")).unwrap();
    let report_path = dir.join(format!("{sub}.json"));
    if report_path.exists() {
        conforms(&read_json(&report_path), &schema("report.schema.json")).unwrap();
    }
    manifest
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn selftest_passes_and_lists_every_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["selftest"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = check_schemas(dir.path(), "selftest");
    let checks = m["checks"].as_array().unwrap();
    assert!(checks.len() >= 5);
    assert!(checks.iter().all(|c| c["pass"] == Value::Bool(true)));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1);
}

#[test]
fn bmo_of_the_haar_fixture_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bmo", "--fixture", "haar-scalar"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("bmo.csv"));
    let col = rows[0].iter().position(|h| h == "value").unwrap();
    assert_eq!(rows[1][col].parse::<f64>().unwrap(), 1.0);
    check_schemas(dir.path(), "bmo");
}

#[test]
fn hilbert_kernel_check_reports_a_vanishing_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kernel-check", "--kernel", "hilbert-kernel"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&dir.path().join("kernel-check.csv"));
    assert_eq!(rows[0], ["quantity", "value"]);
    let b = rows.iter().find(|r| r[0] == "b_norm").unwrap()[1]
        .parse::<f64>()
        .unwrap();
    assert!(b.abs() <= 1e-3);
    check_schemas(dir.path(), "kernel-check");
}

#[test]
fn exit_codes_distinguish_hypotheses_from_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["kernel-check", "--kernel", "one-sided-kernel"],
        &dir.path().join("a"),
    );
    assert_eq!(o.status.code(), Some(2));
    let m = check_schemas(&dir.path().join("a"), "kernel-check");
    assert_eq!(m["exit_code"], 2);

    let o = run(
        &["t1-report", "--kernel", "one-sided-kernel"],
        &dir.path().join("b"),
    );
    assert_eq!(o.status.code(), Some(2));
    check_schemas(&dir.path().join("b"), "t1-report");

    let o = run(
        &["bmo", "--fixture", "no-such-symbol"],
        &dir.path().join("c"),
    );
    assert_eq!(o.status.code(), Some(1));
    let m = check_schemas(&dir.path().join("c"), "bmo");
    assert!(m["error"].as_str().unwrap().contains("no-such-symbol"));

    let cfg = dir.path().join("typo.json");
    std::fs::write(&cfg, r#"{"grid": {"levles": 3}}"#).unwrap();
    let o = run(
        &["bmo", "--config", cfg.to_str().unwrap()],
        &dir.path().join("d"),
    );
    assert_eq!(o.status.code(), Some(1));
    check_schemas(&dir.path().join("d"), "bmo");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    std::fs::write(
        &cfg,
        r#"{"grid": {"levels": 3}, "params": {"budget": 6, "n_list": [1, 2]}, "seed": 5}"#,
    )
    .unwrap();
    for sub in ["logdim-scan", "duality-probe", "rbound", "paraproduct-norm"] {
        let mut outputs = Vec::new();
        for (run_idx, threads) in [(0, "1"), (1, "3")] {
            let out = dir.path().join(format!("{sub}-{run_idx}"));
            let args = if sub == "logdim-scan" {
                vec![
                    sub,
                    "--config",
                    cfg.to_str().unwrap(),
                    "--no-timing",
                    "--threads",
                    threads,
                ]
            } else {
                vec![sub, "--seed", "5", "--no-timing"]
            };
            let o = run(&args, &out);
            assert_eq!(
                o.status.code(),
                Some(0),
                "{sub}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            outputs.push(std::fs::read(out.join(format!("{sub}.csv"))).unwrap());
            check_schemas(&out, sub);
        }
        assert_eq!(outputs[0], outputs[1], "{sub}");
        assert!(!outputs[0].is_empty());
    }
}

#[test]
fn every_subcommand_writes_a_header_row() {
    let dir = tempfile::tempdir().unwrap();
    for sub in dyadlab::commands::SUBCOMMANDS {
        if *sub == "logdim-scan" {
            continue;
        }
        let out = dir.path().join(sub);
        let o = run(&[sub, "--no-timing"], &out);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{sub}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let rows = csv_rows(&out.join(format!("{sub}.csv")));
        assert!(rows.len() >= 2, "{sub}");
        assert!(rows[1..].iter().all(|r| r.len() == rows[0].len()));
        check_schemas(&out, sub);
    }
}

#[test]
fn sampled_kernel_files_drive_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let symmetric = dir.path().join("mult.json");
    let kernel = dyadlab::fixtures::kernel("symm-mult-kernel").unwrap();
    dyadlab::kernel_file::save(
        kernel.as_ref(),
        6,
        &symmetric,
        dyadlab::kernel_file::Encoding::Csv,
    )
    .unwrap();
    conforms(&read_json(&symmetric), &schema("kernel.schema.json")).unwrap();
    let o = run(
        &[
            "kernel-check",
            "--kernel",
            symmetric.to_str().unwrap(),
            "--no-timing",
        ],
        &dir.path().join("m"),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    // Truncating the Hilbert kernel to the unit square breaks t(1,.) = 0 = t(.,1).
    let odd = dir.path().join("hilbert.json");
    let kernel = dyadlab::fixtures::kernel("hilbert-kernel").unwrap();
    dyadlab::kernel_file::save(
        kernel.as_ref(),
        6,
        &odd,
        dyadlab::kernel_file::Encoding::F64le,
    )
    .unwrap();
    conforms(&read_json(&odd), &schema("kernel.schema.json")).unwrap();
    let o = run(
        &[
            "kernel-check",
            "--kernel",
            odd.to_str().unwrap(),
            "--no-timing",
        ],
        &dir.path().join("h"),
    );
    assert_eq!(o.status.code(), Some(2));
    let rows = csv_rows(&dir.path().join("h").join("kernel-check.csv"));
    let size = rows.iter().find(|r| r[0] == "size_sup").unwrap()[1]
        .parse::<f64>()
        .unwrap();
    assert!(size > 0.3 && size < 1.0, "{size}");
}
