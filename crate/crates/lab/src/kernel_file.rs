//! Sampled kernels on disk: a JSON header plus a CSV or little-endian `f64`
//! data file on the product mesh of `[0,1)^d` with `2^level` cells per axis.
//!
//! The data holds `K(x_i, x_j)` at mesh cell centers, indexed `[i][j][entry]`
//! with `i`, `j` flattened row-major over the axes (axis 0 fastest). Diagonal
//! pairs `i = j` are masked: CSV rows for them are ignored and binary
//! values there are discarded.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use dyadlab_core::kernel::{Kernel, SampledKernel};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Csv,
    F64le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelHeader {
    pub d: usize,
    pub n: usize,
    pub delta: f64,
    /// Only `sampled` is defined.
    pub kind: String,
    pub level: usize,
    pub encoding: Encoding,
    /// Data file, relative to the header.
    pub data: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn mesh_points(d: usize, level: usize) -> usize {
    1usize << (d * level)
}

pub fn load(path: &Path) -> LabResult<SampledKernel> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let header: KernelHeader = serde_json::from_str(&text)
        .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    if header.kind != "sampled" {
        return Err(LabError::Config(format!(
            "unsupported kernel kind {:?}",
            header.kind
        )));
    }
    if header.d == 0 || header.n == 0 || header.d * header.level > 12 {
        return Err(LabError::Config("kernel mesh is empty or too large".into()));
    }
    let data_path = path.parent().unwrap_or(Path::new(".")).join(&header.data);
    let points = mesh_points(header.d, header.level);
    let w = header.n * header.n;
    let mut values = vec![0.0; points * points * w];
    match header.encoding {
        Encoding::F64le => {
            let mut bytes = Vec::new();
            std::fs::File::open(&data_path)
                .and_then(|mut f| f.read_to_end(&mut bytes))
                .map_err(|e| LabError::io(&data_path, e))?;
            if bytes.len() != values.len() * 8 {
                return Err(LabError::Config(format!(
                    "{}: expected {} values, found {} bytes",
                    data_path.display(),
                    values.len(),
                    bytes.len()
                )));
            }
            for (v, chunk) in values.iter_mut().zip(bytes.chunks_exact(8)) {
                *v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            }
        }
        Encoding::Csv => {
            let mut reader = csv::Reader::from_path(&data_path)?;
            for record in reader.records() {
                let record = record?;
                if record.len() != 2 + w {
                    return Err(LabError::Config(format!(
                        "kernel rows need ix, iy and {w} values"
                    )));
                }
                let parse_idx = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|e| LabError::Config(format!("bad mesh index {s:?}: {e}")))
                };
                let (i, j) = (parse_idx(&record[0])?, parse_idx(&record[1])?);
                if i >= points || j >= points {
                    return Err(LabError::Config(format!(
                        "mesh index ({i}, {j}) out of range"
                    )));
                }
                for e in 0..w {
                    let s = &record[2 + e];
                    values[(i * points + j) * w + e] = s.trim().parse().map_err(|err| {
                        LabError::Config(format!("bad kernel value {s:?}: {err}"))
                    })?;
                }
            }
        }
    }
    for i in 0..points {
        values[(i * points + i) * w..(i * points + i + 1) * w]
            .iter_mut()
            .for_each(|v| *v = 0.0);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Config(
            "kernel values must be finite off the diagonal".into(),
        ));
    }
    let name = header
        .name
        .clone()
        .unwrap_or_else(|| path.display().to_string());
    Ok(SampledKernel::new(
        name,
        header.d,
        header.n,
        header.delta,
        header.level,
        values,
    )?)
}

/// Sample `kernel` at mesh cell centers and write a header plus data file
/// (`<stem>.csv` or `<stem>.bin` next to the header).
pub fn save(
    kernel: &dyn Kernel,
    level: usize,
    header_path: &Path,
    encoding: Encoding,
) -> LabResult<KernelHeader> {
    let d = kernel.dim();
    let n = kernel.n();
    let w = n * n;
    let m = 1usize << level;
    let points = mesh_points(d, level);
    let center = |idx: usize| -> Vec<f64> {
        (0..d)
            .map(|a| ((idx / m.pow(a as u32)) % m) as f64 / m as f64 + 0.5 / m as f64)
            .collect()
    };
    let stem = header_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("kernel")
        .to_string();
    let data_name = match encoding {
        Encoding::Csv => format!("{stem}.csv"),
        Encoding::F64le => format!("{stem}.bin"),
    };
    let data_path = header_path
        .parent()
        .unwrap_or(Path::new("."))
        .join(&data_name);
    let mut buf = vec![0.0; w];
    match encoding {
        Encoding::Csv => {
            let mut writer = csv::Writer::from_path(&data_path)?;
            let mut head = vec!["ix".to_string(), "iy".to_string()];
            head.extend((0..w).map(|e| format!("v{e}")));
            writer.write_record(&head)?;
            for i in 0..points {
                for j in 0..points {
                    if i == j {
                        continue;
                    }
                    kernel.eval(&center(i), &center(j), &mut buf);
                    let mut row = vec![i.to_string(), j.to_string()];
                    row.extend(buf.iter().map(|v| v.to_string()));
                    writer.write_record(&row)?;
                }
            }
            writer.flush().map_err(|e| LabError::io(&data_path, e))?;
        }
        Encoding::F64le => {
            let mut bytes = Vec::with_capacity(points * points * w * 8);
            for i in 0..points {
                for j in 0..points {
                    if i == j {
                        buf.iter_mut().for_each(|v| *v = 0.0);
                    } else {
                        kernel.eval(&center(i), &center(j), &mut buf);
                    }
                    buf.iter()
                        .for_each(|v| bytes.extend_from_slice(&v.to_le_bytes()));
                }
            }
            std::fs::File::create(&data_path)
                .and_then(|mut f| f.write_all(&bytes))
                .map_err(|e| LabError::io(&data_path, e))?;
        }
    }
    let header = KernelHeader {
        d,
        n,
        delta: kernel.delta(),
        kind: "sampled".into(),
        level,
        encoding,
        data: PathBuf::from(data_name),
        name: Some(kernel.name()),
    };
    let json = serde_json::to_string_pretty(&header)?;
    std::fs::write(header_path, json).map_err(|e| LabError::io(header_path, e))?;
    Ok(header)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dyadlab_core::kernel::HilbertKernel;

    #[test]
    fn both_encodings_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("h.json");
        let bin_path = dir.path().join("hb.json");
        save(&HilbertKernel, 3, &csv_path, Encoding::Csv).unwrap();
        save(&HilbertKernel, 3, &bin_path, Encoding::F64le).unwrap();
        let a = load(&csv_path).unwrap();
        let b = load(&bin_path).unwrap();
        assert_eq!(a.values, b.values);
        let mut out = [0.0];
        a.eval(&[0.1], &[0.9], &mut out);
        assert!((out[0] - 1.0 / (std::f64::consts::PI * (0.0625 - 0.9375))).abs() < 1e-12);
        a.eval(&[0.1], &[0.05], &mut out);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.json");
        std::fs::write(&p, r#"{"d":1,"n":1,"delta":1,"kind":"sampled","level":2,"encoding":"csv","data":"k.csv","extra":1}"#)
            .unwrap();
        assert!(matches!(load(&p), Err(LabError::Config(_))));
        std::fs::write(&p, r#"{"d":1,"n":1,"delta":1,"kind":"analytic","level":2,"encoding":"csv","data":"k.csv"}"#)
            .unwrap();
        assert!(matches!(load(&p), Err(LabError::Config(_))));
    }
}
