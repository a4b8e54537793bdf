//! File formats.
//!
//! `CF1` (complex field) and `IM1` (intensity map) files start with a single
//! line of JSON, `{"format", "n", "pitch_m", "wavelength_m", "z_m"}`, followed
//! by little-endian `f64` samples in storage order: interleaved `(re, im)` for
//! `CF1`, one value per pixel for `IM1`.
//!
//! `CH1` (coincidence histogram) files start with
//! `{"format", "n", "pitch_m", "total_events", "records", "encoding"}` and
//! hold sparse records of the non-zero bins. With `"encoding": "i32"` each
//! record is five little-endian `i32` values `(xi, yi, xs, ys, count)`; with
//! `"encoding": "f64"` the count is a little-endian `f64`, which keeps
//! noiseless distributions exact.
//!
//! Readers report malformed input as [`Error::Format`] with the byte offset
//! of the first offending byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::Marginal;
use crate::field::{ComplexField, GridSpec, IntensityMap};
use crate::retrieval::{GenerationRecord, HyggBasis, ModalDecomposition, ZernikeCoefficients};
use crate::spdc::CoincidenceHistogram;

const MAX_HEADER: usize = 1 << 16;

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    format: String,
    n: usize,
    pitch_m: f64,
    wavelength_m: Option<f64>,
    z_m: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HistogramHeader {
    format: String,
    n: usize,
    pitch_m: f64,
    total_events: Option<u64>,
    records: u64,
    #[serde(default = "default_encoding")]
    encoding: String,
}

fn default_encoding() -> String {
    "i32".into()
}

fn header_line<T: Serialize>(header: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec(header).expect("header serializes");
    out.push(b'\n');
    out
}

/// Splits off and parses the JSON header; returns it with the payload offset.
fn split_header<'a, T: for<'de> Deserialize<'de>>(
    bytes: &'a [u8],
    expected: &str,
) -> Result<(T, &'a [u8], u64)> {
    let limit = bytes.len().min(MAX_HEADER);
    let end = bytes[..limit]
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::format(limit as u64, "no header line terminator"))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes[..end])
        .map_err(|e| Error::format(e.column().saturating_sub(1) as u64, format!("bad header: {e}")))?;
    let format = value.get("format").and_then(|f| f.as_str()).unwrap_or("");
    if format != expected {
        return Err(Error::format(0, format!("expected format {expected}, found {format:?}")));
    }
    let header = serde_json::from_value(value)
        .map_err(|e| Error::format(0, format!("bad header: {e}")))?;
    Ok((header, &bytes[end + 1..], (end + 1) as u64))
}

fn grid_from(n: usize, pitch: f64) -> Result<GridSpec> {
    GridSpec::new(n, pitch).map_err(|e| Error::format(0, e.to_string()))
}

fn check_len(payload: &[u8], expected: usize, offset: u64) -> Result<()> {
    if payload.len() < expected {
        return Err(Error::format(
            offset + payload.len() as u64,
            format!("truncated payload: expected {expected} bytes, found {}", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format(offset + expected as u64, "trailing bytes after payload"));
    }
    Ok(())
}

fn read_f64s(payload: &[u8], offset: u64) -> Result<Vec<f64>> {
    payload
        .chunks_exact(8)
        .enumerate()
        .map(|(k, c)| {
            let v = f64::from_le_bytes(c.try_into().expect("8 bytes"));
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::format(offset + 8 * k as u64, "non-finite sample"))
            }
        })
        .collect()
}

pub fn encode_cf1(field: &ComplexField) -> Vec<u8> {
    let mut out = header_line(&FieldHeader {
        format: "CF1".into(),
        n: field.grid.n(),
        pitch_m: field.grid.pitch(),
        wavelength_m: Some(field.wavelength),
        z_m: Some(field.z),
    });
    out.reserve(16 * field.values.len());
    for v in &field.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_cf1(bytes: &[u8]) -> Result<ComplexField> {
    let (h, payload, offset): (FieldHeader, _, _) = split_header(bytes, "CF1")?;
    let grid = grid_from(h.n, h.pitch_m)?;
    let wavelength = h
        .wavelength_m
        .ok_or_else(|| Error::format(0, "CF1 header needs wavelength_m"))?;
    let z = h.z_m.ok_or_else(|| Error::format(0, "CF1 header needs z_m"))?;
    check_len(payload, 16 * grid.len(), offset)?;
    let raw = read_f64s(payload, offset)?;
    let values = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    ComplexField::new(grid, values, wavelength, z).map_err(|e| Error::format(0, e.to_string()))
}

/// `IM1` bytes; `wavelength` and `z` are optional tags.
pub fn encode_im1(map: &IntensityMap, wavelength: Option<f64>, z: Option<f64>) -> Vec<u8> {
    let mut out = header_line(&FieldHeader {
        format: "IM1".into(),
        n: map.grid.n(),
        pitch_m: map.grid.pitch(),
        wavelength_m: wavelength,
        z_m: z,
    });
    out.reserve(8 * map.values.len());
    for v in &map.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Tagged intensity map as stored in an `IM1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedIntensity {
    pub map: IntensityMap,
    pub wavelength: Option<f64>,
    pub z: Option<f64>,
}

pub fn decode_im1(bytes: &[u8]) -> Result<TaggedIntensity> {
    let (h, payload, offset): (FieldHeader, _, _) = split_header(bytes, "IM1")?;
    let grid = grid_from(h.n, h.pitch_m)?;
    check_len(payload, 8 * grid.len(), offset)?;
    let values = read_f64s(payload, offset)?;
    if let Some(k) = values.iter().position(|v| *v < 0.0) {
        return Err(Error::format(offset + 8 * k as u64, "negative intensity"));
    }
    Ok(TaggedIntensity {
        map: IntensityMap::new(grid, values)?,
        wavelength: h.wavelength_m,
        z: h.z_m,
    })
}

/// `CH1` bytes. Histograms whose counts are all integers use the `i32`
/// encoding, anything else the `f64` one.
pub fn encode_ch1(hist: &CoincidenceHistogram) -> Result<Vec<u8>> {
    let integral = hist
        .counts
        .iter()
        .all(|c| c.fract() == 0.0 && *c <= i32::MAX as f64);
    let records = hist.counts.iter().filter(|c| **c > 0.0).count();
    let mut out = header_line(&HistogramHeader {
        format: "CH1".into(),
        n: hist.n(),
        pitch_m: hist.grid.pitch(),
        total_events: hist.total_events,
        records: records as u64,
        encoding: if integral { "i32" } else { "f64" }.into(),
    });
    let n = hist.n();
    for (k, &c) in hist.counts.iter().enumerate() {
        if c <= 0.0 {
            continue;
        }
        let (ki, ks) = (k / (n * n), k % (n * n));
        for idx in [ki % n, ki / n, ks % n, ks / n] {
            out.extend_from_slice(&(idx as i32).to_le_bytes());
        }
        if integral {
            out.extend_from_slice(&(c as i32).to_le_bytes());
        } else {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_ch1(bytes: &[u8]) -> Result<CoincidenceHistogram> {
    let (h, payload, offset): (HistogramHeader, _, _) = split_header(bytes, "CH1")?;
    let grid = grid_from(h.n, h.pitch_m)?;
    if h.n > crate::spdc::HISTOGRAM_MAX_N {
        return Err(Error::format(0, format!("n = {} exceeds the dense 4D limit", h.n)));
    }
    let width = match h.encoding.as_str() {
        "i32" => 20,
        "f64" => 24,
        other => return Err(Error::format(0, format!("unknown encoding {other:?}"))),
    };
    let expected = usize::try_from(h.records)
        .ok()
        .and_then(|r| r.checked_mul(width))
        .ok_or_else(|| Error::format(0, "record count too large"))?;
    check_len(payload, expected, offset)?;
    let n = h.n;
    let mut hist = CoincidenceHistogram::zeros(grid)?;
    hist.total_events = h.total_events;
    for (r, rec) in payload.chunks_exact(width).enumerate() {
        let at = offset + (r * width) as u64;
        let int = |i: usize| i32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().expect("4 bytes"));
        let mut idx = [0usize; 4];
        for (i, slot) in idx.iter_mut().enumerate() {
            let v = int(i);
            if v < 0 || v as usize >= n {
                return Err(Error::format(at + 4 * i as u64, format!("index {v} outside 0..{n}")));
            }
            *slot = v as usize;
        }
        let count = if width == 20 {
            f64::from(int(4))
        } else {
            f64::from_le_bytes(rec[16..24].try_into().expect("8 bytes"))
        };
        if !(count.is_finite() && count >= 0.0) {
            return Err(Error::format(at + 16, format!("invalid count {count}")));
        }
        let k = hist.index(idx[0], idx[1], idx[2], idx[3]);
        hist.counts[k] += count;
    }
    if let Some(t) = h.total_events {
        let sum = hist.total();
        if sum != t as f64 {
            return Err(Error::format(
                offset,
                format!("records sum to {sum} but header says {t} events"),
            ));
        }
    }
    Ok(hist)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

/// 8-bit grayscale PNG scaled so the largest value maps to 255.
pub fn encode_png_gray(values: &[f64], n: usize) -> Result<Vec<u8>> {
    if values.len() != n * n {
        return Err(Error::param("image must be n×n"));
    }
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    let pixels: Vec<u8> = values
        .iter()
        .map(|v| {
            if max > 0.0 {
                (v.max(0.0) / max * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, n as u32, n as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc
            .write_header()
            .map_err(|e| Error::param(format!("png: {e}")))?;
        w.write_image_data(&pixels)
            .map_err(|e| Error::param(format!("png: {e}")))?;
    }
    Ok(out)
}

/// Phase maps are shifted to start at zero before scaling.
pub fn encode_png_phase(values: &[f64], n: usize) -> Result<Vec<u8>> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = values.iter().map(|v| v - min).collect();
    encode_png_gray(&shifted, n)
}

#[derive(Debug, Serialize, Deserialize)]
struct ModalRecord {
    basis: HyggBasis,
    /// `(ℓ, re, im)` triples.
    coefficients: Vec<(i32, f64, f64)>,
    loss: f64,
    plane_zs: (f64, f64),
    converged: bool,
}

pub fn modal_to_json(d: &ModalDecomposition) -> String {
    let rec = ModalRecord {
        basis: d.basis,
        coefficients: d.ells().zip(&d.coefficients).map(|(l, c)| (l, c.re, c.im)).collect(),
        loss: d.loss,
        plane_zs: d.plane_zs,
        converged: d.converged,
    };
    serde_json::to_string_pretty(&rec).expect("serializable")
}

pub fn modal_from_json(text: &str) -> Result<ModalDecomposition> {
    let rec: ModalRecord = serde_json::from_str(text)?;
    let ells: Vec<i32> = rec.basis.ells().collect();
    if ells.len() != rec.coefficients.len()
        || ells.iter().zip(&rec.coefficients).any(|(l, c)| *l != c.0)
    {
        return Err(Error::param("coefficients do not match the basis range"));
    }
    Ok(ModalDecomposition {
        basis: rec.basis,
        coefficients: rec.coefficients.iter().map(|c| Complex64::new(c.1, c.2)).collect(),
        loss: rec.loss,
        plane_zs: rec.plane_zs,
        converged: rec.converged,
    })
}

pub fn zernike_to_json(z: &ZernikeCoefficients) -> String {
    serde_json::to_string_pretty(z).expect("serializable")
}

pub fn zernike_from_json(text: &str) -> Result<ZernikeCoefficients> {
    Ok(serde_json::from_str(text)?)
}

pub fn history_csv(history: &[GenerationRecord]) -> String {
    let mut s = String::from("generation,best_loss,best_similarity\n");
    for r in history {
        let _ = writeln!(s, "{},{},{}", r.generation, r.best_loss, r.best_similarity);
    }
    s
}

pub fn spectrum_csv(spectrum: &BTreeMap<i32, f64>) -> String {
    let mut s = String::from("ell,power\n");
    for (l, p) in spectrum {
        let _ = writeln!(s, "{l},{p}");
    }
    s
}

/// One CSV row per idler coordinate, one column per signal coordinate.
pub fn marginal_csv(m: &Marginal) -> String {
    let mut s = String::new();
    for row in m.values.chunks(m.n) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
