//! Ingestion and persistence: PGM images in and out, solution CSVs, JSON run
//! reports, and a synthetic test image generator for reproducible image
//! benchmarks.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::OdeProblem;
use crate::basis::ElmConfig;
use crate::error::{Error, Result};
use crate::solver::{ConditioningReport, Metrics};

pub const REPORT_SCHEMA_VERSION: &str = "1";

/// 8-bit grayscale image; `pixels` are raw sample values row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

/// Streams header tokens of a PGM file, skipping `#` comments.
struct TokenReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> TokenReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_filler(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_filler();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Malformed("unexpected end of PGM header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("PGM {what} is not a number")))
    }
}

/// Reads a P2 (ASCII) or P5 (binary) grayscale PGM with maxval up to 255.
pub fn read_pgm(path: &Path) -> Result<PgmImage> {
    let bytes = fs::read(path)?;
    let mut reader = TokenReader::new(&bytes);
    let magic = reader.token()?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => {
            return Err(Error::Malformed(format!(
                "unsupported magic {:?}, expected P2 or P5",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = reader.number("width")?;
    let height = reader.number("height")?;
    let maxval = reader.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Malformed("PGM dimensions must be positive".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Malformed(format!(
            "unsupported maxval {maxval}, expected 1..=255"
        )));
    }
    let count = width * height;

    let pixels = if binary {
        // Exactly one whitespace byte separates the maxval from the raster.
        let start = reader.pos + 1;
        if bytes.len() < start + count {
            return Err(Error::Malformed(format!(
                "P5 raster truncated: expected {count} bytes"
            )));
        }
        bytes[start..start + count].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            let v = reader.number("pixel")?;
            if v > 255 {
                return Err(Error::Malformed(format!("pixel value {v} exceeds 255")));
            }
            pixels.push(v as u8);
        }
        pixels
    };
    if let Some(p) = pixels.iter().find(|p| **p as usize > maxval) {
        return Err(Error::Malformed(format!(
            "pixel value {p} exceeds maxval {maxval}"
        )));
    }
    Ok(PgmImage {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

/// Writes a binary P5 PGM with maxval 255. Comment lines (without the leading
/// `#`) land between the magic and the dimensions.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8], comments: &[String]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} image needs {} pixels, got {}",
            width,
            height,
            width * height,
            pixels.len()
        )));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(b"P5\n")?;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{width} {height}")?;
    writeln!(w, "255")?;
    w.write_all(pixels)?;
    w.flush()?;
    Ok(())
}

/// Vectorizes a grayscale image as a 1-D signal: pixels flattened row-major,
/// `xs_i = i/(N-1)` over the normalized flat index, `ys_i = pixel/maxval`.
pub fn load_image_vector(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let img = read_pgm(path)?;
    let n = img.pixels.len();
    let xs = if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    };
    let ys = img
        .pixels
        .iter()
        .map(|&p| p as f64 / img.maxval as f64)
        .collect();
    Ok((xs, ys))
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the solution table: `x,u_pred` plus `u_exact,abs_err` columns when
/// an oracle was available. Values carry 17 significant digits, enough to
/// round-trip a double exactly.
pub fn write_solution_csv(path: &Path, xs: &[f64], u_pred: &[f64], u_exact: Option<&[f64]>) -> Result<()> {
    if xs.len() != u_pred.len() || u_exact.is_some_and(|e| e.len() != xs.len()) {
        return Err(Error::DimensionMismatch(
            "solution columns must have equal lengths".into(),
        ));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    match u_exact {
        None => {
            writeln!(w, "x,u_pred")?;
            for (x, p) in xs.iter().zip(u_pred) {
                writeln!(w, "{},{}", fmt17(*x), fmt17(*p))?;
            }
        }
        Some(exact) => {
            writeln!(w, "x,u_pred,u_exact,abs_err")?;
            for ((x, p), e) in xs.iter().zip(u_pred).zip(exact) {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt17(*x),
                    fmt17(*p),
                    fmt17(*e),
                    fmt17((p - e).abs())
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Serializes +/- infinity as the strings "inf" / "-inf"; JSON would
/// otherwise collapse them to null.
mod inf_as_string {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct InfVisitor;

    impl<'de> Visitor<'de> for InfVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or \"inf\"/\"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
            Ok(v)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("unexpected condition string {other:?}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        d.deserialize_any(InfVisitor)
    }
}

/// Conditioning numbers carried by a run report (the spectrum itself lives in
/// the spectrum CSV artifact).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningSummary {
    pub rank: usize,
    #[serde(with = "inf_as_string")]
    pub raw_condition: f64,
    pub effective_condition: f64,
    pub log10_det_proxy: f64,
    pub sparsity: f64,
}

impl From<&ConditioningReport> for ConditioningSummary {
    fn from(r: &ConditioningReport) -> Self {
        Self {
            rank: r.rank,
            raw_condition: r.raw_condition,
            effective_condition: r.effective_condition,
            log10_det_proxy: r.log10_det_proxy,
            sparsity: r.sparsity,
        }
    }
}

/// What was solved, echoed fully enough to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSpec {
    Ode {
        #[serde(skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(flatten)]
        problem: OdeProblem,
    },
    FitFunction {
        target: String,
        samples: usize,
    },
    FitImage {
        input: String,
        width: usize,
        height: usize,
    },
}

/// Paths of the artifacts a run wrote, relative to its output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heatmap_pgm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_pgm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling_csv: Option<String>,
}

/// Self-contained record of one run: a run is reproducible from its report
/// alone. Keys serialize in declaration order, so identical runs yield
/// identical documents apart from `train_seconds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub command: String,
    pub config: ElmConfig,
    pub problem: ProblemSpec,
    pub rank_tol_factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    pub conditioning: ConditioningSummary,
    pub train_seconds: f64,
    pub artifacts: ArtifactPaths,
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Malformed(format!("report serialization failed: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path)?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| Error::Malformed(format!("report parse failed: {e}")))?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::Malformed(format!(
            "unsupported report schema_version {:?}, expected {:?}",
            report.schema_version, REPORT_SCHEMA_VERSION
        )));
    }
    Ok(report)
}

/// Synthetic high-frequency grayscale test image: layered sinusoids plus a
/// radial chirp, quantized to 8 bits. Serves as a reproducible stand-in for
/// a photographic benchmark image.
pub fn synthetic_image(width: usize, height: usize) -> Vec<u8> {
    let mut pixels = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let r = if height > 1 { row as f64 / (height - 1) as f64 } else { 0.0 };
            let c = if width > 1 { col as f64 / (width - 1) as f64 } else { 0.0 };
            let f = 0.5
                + 0.28 * (2.0 * PI * (2.0 * r + 0.25)).sin() * (2.0 * PI * 3.0 * c).cos()
                + 0.17 * (2.0 * PI * 4.0 * ((r - 0.5).powi(2) + (c - 0.5).powi(2))).sin()
                + 0.05 * (2.0 * PI * 24.0 * c).sin() * (2.0 * PI * 18.0 * r).sin();
            pixels.push((f.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    pixels
}
