//! File formats: CSV data ingestion, JSON model persistence, and the CSV
//! writers for traces, samples, and responsibilities.
//!
//! Floats are written with 17 significant digits so every value round-trips
//! exactly; the model file stores the full symmetric covariance and the
//! loader re-validates and re-factorizes it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitter::FitTrace;
use crate::gaussian::GaussianComponent;
use crate::linalg::{SpdMatrix, SquareMat};
use crate::mixture::{DataSet, MixtureModel, ResponsibilityMatrix};

/// Version written by `save_model` and required by `load_model`.
pub const FORMAT_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Read comma-separated rows of finite reals; every row must have the same
/// field count. Line numbers in errors are 1-based physical lines.
pub fn load_csv(path: &Path, has_header: bool) -> Result<DataSet> {
    let text = fs::read_to_string(path)?;
    let mut expected: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if has_header && idx == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::ParseError {
                line: line_no,
                message: format!("cannot parse {field:?} as a real number"),
            })?;
            if !v.is_finite() {
                return Err(Error::ParseError {
                    line: line_no,
                    message: format!("non-finite value {field:?}"),
                });
            }
            row.push(v);
        }
        match expected {
            None => expected = Some(row.len()),
            Some(e) if e != row.len() => {
                return Err(Error::RaggedRows {
                    line: line_no,
                    expected: e,
                    got: row.len(),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    DataSet::from_rows(&rows)
}

#[derive(Serialize, Deserialize)]
struct ComponentFile {
    mean: Vec<f64>,
    /// Full symmetric covariance, row-major.
    covariance: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    dim: usize,
    k: usize,
    weights: Vec<f64>,
    components: Vec<ComponentFile>,
}

/// Write the model as JSON, reconstructing each covariance from its factor.
pub fn save_model(m: &MixtureModel, path: &Path) -> Result<()> {
    let components = m
        .components()
        .iter()
        .map(|c| {
            let cov = c.cov().to_matrix();
            let d = cov.dim();
            let rows = (0..d)
                .map(|r| (0..d).map(|col| cov.get(r, col)).collect())
                .collect();
            ComponentFile {
                mean: c.mean().to_vec(),
                covariance: rows,
            }
        })
        .collect();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        dim: m.dim(),
        k: m.k(),
        weights: m.weights().to_vec(),
        components,
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::SchemaError(e.to_string()))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// Parse, validate, and re-factorize a saved model. Structural problems map
/// to SchemaError; a corrupted covariance surfaces the factorization error.
pub fn load_model(path: &Path) -> Result<MixtureModel> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::SchemaError(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::SchemaError(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.dim == 0 || file.k == 0 {
        return Err(Error::SchemaError("dim and k must be positive".into()));
    }
    if file.weights.len() != file.k || file.components.len() != file.k {
        return Err(Error::SchemaError(format!(
            "expected {} weights and components, found {} and {}",
            file.k,
            file.weights.len(),
            file.components.len()
        )));
    }
    let mut comps = Vec::with_capacity(file.k);
    for (idx, c) in file.components.iter().enumerate() {
        if c.mean.len() != file.dim {
            return Err(Error::SchemaError(format!(
                "component {idx}: mean has {} entries, expected {}",
                c.mean.len(),
                file.dim
            )));
        }
        if c.covariance.len() != file.dim
            || c.covariance.iter().any(|row| row.len() != file.dim)
        {
            return Err(Error::SchemaError(format!(
                "component {idx}: covariance is not {dim}x{dim}",
                dim = file.dim
            )));
        }
        let cov = SpdMatrix::cholesky(&SquareMat::from_rows(&c.covariance))?;
        let comp = GaussianComponent::new(c.mean.clone(), cov).map_err(|e| match e {
            Error::InvalidModel(msg) => Error::SchemaError(msg),
            other => other,
        })?;
        comps.push(comp);
    }
    MixtureModel::new(file.weights, comps).map_err(|e| match e {
        Error::InvalidModel(msg) => Error::SchemaError(msg),
        other => other,
    })
}

/// CSV trace: `iteration,loglik,delta,rescued`; row 0 carries delta 0.
pub fn write_trace(trace: &FitTrace, path: &Path) -> Result<()> {
    let mut out = String::from("iteration,loglik,delta,rescued\n");
    let ll = trace.logliks();
    let rescued = trace.rescued_flags();
    for t in 0..ll.len() {
        let delta = if t == 0 { 0.0 } else { ll[t] - ll[t - 1] };
        let _ = writeln!(
            out,
            "{t},{},{},{}",
            fmt_f64(ll[t]),
            fmt_f64(delta),
            rescued[t]
        );
    }
    fs::write(path, out)?;
    Ok(())
}

/// Headerless CSV, one sample per row.
pub fn write_dataset_csv(d: &DataSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in d.rows() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    fs::write(path, out)?;
    Ok(())
}

/// One latent component index per line.
pub fn write_labels_csv(labels: &[usize], path: &Path) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Headerless N×K CSV of posterior component probabilities.
pub fn write_responsibilities_csv(r: &ResponsibilityMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..r.n() {
        let line: Vec<String> = r.row(i).iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    fs::write(path, out)?;
    Ok(())
}
