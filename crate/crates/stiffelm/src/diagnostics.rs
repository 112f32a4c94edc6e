//! Exports the solver's diagnostic views as data files: activation-matrix heatmaps
//! (PGM), singular spectra (CSV), and weight/residual scaling tables across
//! the stiffness sweep (CSV).

use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_pgm;
use crate::linalg::{Matrix, SingularSpectrum};
use crate::solver::SolveResult;

/// Heatmaps beyond this edge length are max-abs block-pooled unless full
/// resolution is forced.
pub const HEATMAP_MAX_DIM: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Linear,
    LogAbs,
}

impl Normalization {
    fn label(self) -> &'static str {
        match self {
            Normalization::Linear => "linear",
            Normalization::LogAbs => "log-abs",
        }
    }
}

/// What was written: final pixel grid plus the pooling factor that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapExport {
    pub rows: usize,
    pub cols: usize,
    pub normalization: Normalization,
    pub pool_factor: usize,
    pub pixels: Vec<u8>,
}

/// Per-block representative: the entry with the largest magnitude, sign kept,
/// first occurrence winning ties for determinism.
fn pool_max_abs(m: &Matrix, k: usize) -> (usize, usize, Vec<f64>) {
    let rows = m.rows().div_ceil(k);
    let cols = m.cols().div_ceil(k);
    let mut out = vec![0.0f64; rows * cols];
    let mut best = vec![-1.0f64; rows * cols];
    for i in 0..m.rows() {
        let bi = i / k;
        for (j, &v) in m.row(i).iter().enumerate() {
            let idx = bi * cols + j / k;
            let a = v.abs();
            if a > best[idx] {
                best[idx] = a;
                out[idx] = v;
            }
        }
    }
    (rows, cols, out)
}

fn to_bytes(values: &[f64], normalization: Normalization) -> Vec<u8> {
    let mapped: Vec<f64> = match normalization {
        Normalization::Linear => values.to_vec(),
        // Zeros clamp to the 1e-300 floor and land on black.
        Normalization::LogAbs => values.iter().map(|v| v.abs().max(1e-300).log10()).collect(),
    };
    let lo = mapped.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mapped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo || hi.is_nan() || lo.is_nan() {
        return vec![128; mapped.len()];
    }
    mapped
        .iter()
        .map(|v| ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Renders the matrix as a grayscale P5 PGM. Matrices wider or taller than
/// `HEATMAP_MAX_DIM` are block-pooled unless `full_res` forces a full dump;
/// the pooling factor and source shape are recorded in header comments.
pub fn export_heatmap(
    m: &Matrix,
    normalization: Normalization,
    path: &Path,
    full_res: bool,
) -> Result<HeatmapExport> {
    let needs_pool = !full_res && (m.rows() > HEATMAP_MAX_DIM || m.cols() > HEATMAP_MAX_DIM);
    let k = if needs_pool {
        m.rows().max(m.cols()).div_ceil(HEATMAP_MAX_DIM)
    } else {
        1
    };
    let (rows, cols, values) = if k == 1 {
        (m.rows(), m.cols(), m.entries().to_vec())
    } else {
        pool_max_abs(m, k)
    };
    let pixels = to_bytes(&values, normalization);
    let comments = vec![
        format!("source: {}x{} activation matrix", m.rows(), m.cols()),
        format!("normalization: {}", normalization.label()),
        format!("pool_factor: {k}"),
    ];
    write_pgm(path, cols, rows, &pixels, &comments)?;
    Ok(HeatmapExport {
        rows,
        cols,
        normalization,
        pool_factor: k,
        pixels,
    })
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV of the singular spectrum, largest first: index, the singular value,
/// and its square (the matching Gram-matrix eigenvalue).
pub fn export_spectrum(spectrum: &SingularSpectrum, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "index,singular_value,squared_value")?;
    for (i, &s) in spectrum.values().iter().enumerate() {
        writeln!(w, "{i},{},{}", fmt17(s), fmt17(s * s))?;
    }
    w.flush()?;
    Ok(())
}

/// CSV of weight and residual statistics per stiffness value, one row per
/// sweep entry that produced a solution. The mae column is empty for rows solved
/// without an oracle.
pub fn scaling_table(rows: &[(f64, &SolveResult)], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidProblem(
            "scaling table needs at least one row".into(),
        ));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(
        w,
        "epsilon,weight_mean,weight_std,residual_mean,residual_std,mae"
    )?;
    for (epsilon, result) in rows {
        let (wm, ws) = result.report.weight_stats;
        let (rm, rs) = result.report.residual_stats;
        let mae = result
            .metrics
            .as_ref()
            .map(|m| fmt17(m.mae))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{mae}",
            fmt17(*epsilon),
            fmt17(wm),
            fmt17(ws),
            fmt17(rm),
            fmt17(rs)
        )?;
    }
    w.flush()?;
    Ok(())
}
