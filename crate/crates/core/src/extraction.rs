//! Pump and phasematching intensities from 4D coincidence maps.
//!
//! For a factorized state, the coincidences along the band `Xs = Xi + 2c` are
//! `|E(Xi + c)|²·|φ(-c)|²`, and along `Xs = -Xi + 2c` they are
//! `|E(c)|²·|φ(Xi - c)|²`. Shifting each band by `∓c` and summing over `c`
//! therefore accumulates scaled copies of `|E|²` (respectively `|φ|²`).
//!
//! Bands are `2·band_halfwidth + 1` pixels wide per axis. A displacement
//! covered by several bands is split evenly between them, so with a half-width
//! of one, odd displacements go half to each neighbouring even band.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::IntensityMap;
use crate::spdc::CoincidenceHistogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

/// Two-dimensional marginal; `values[a·n + b]` sums all counts with idler
/// coordinate `a` and signal coordinate `b` along the chosen axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub n: usize,
    pub axis: Axis,
    pub values: Vec<f64>,
}

pub fn marginal(hist: &CoincidenceHistogram, axis: Axis) -> Marginal {
    let n = hist.n();
    let mut values = vec![0.0; n * n];
    for yi in 0..n {
        for xi in 0..n {
            for ys in 0..n {
                for xs in 0..n {
                    let c = hist.get(xi, yi, xs, ys);
                    let (a, b) = match axis {
                        Axis::X => (xi, xs),
                        Axis::Y => (yi, ys),
                    };
                    values[a * n + b] += c;
                }
            }
        }
    }
    Marginal { n, axis, values }
}

/// Which factor a band postselection isolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Correlated bands `Xs ≈ Xi + 2c`, shifted to `Xi + c`.
    Pump,
    /// Anticorrelated bands `Xs ≈ -Xi + 2c`, shifted to `Xi - c`.
    Phasematch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct ExtractionConfig {
    pub band_halfwidth: usize,
    /// Bands with fewer counts are skipped. `None` means 10 for sampled
    /// histograms and 0 for noiseless ones.
    pub min_slice_counts: Option<f64>,
}


pub const DEFAULT_MIN_SLICE_COUNTS: f64 = 10.0;

impl ExtractionConfig {
    pub fn with_band(band_halfwidth: usize) -> Self {
        Self {
            band_halfwidth,
            ..Self::default()
        }
    }

    fn threshold(&self, hist: &CoincidenceHistogram) -> f64 {
        self.min_slice_counts.unwrap_or(match hist.total_events {
            Some(_) => DEFAULT_MIN_SLICE_COUNTS,
            None => 0.0,
        })
    }
}

/// One shifted band: offset `c = (cx, cy)` in pixels and its image on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub c: (i64, i64),
    pub total: f64,
    pub values: Vec<f64>,
}

/// Number of bands `|D - 2c| ≤ b` containing displacement `d`.
fn coverage(d: i64, b: i64) -> i64 {
    // c ranges over ceil((d - b)/2) ..= floor((d + b)/2)
    let lo = (d - b).div_euclid(2) + i64::from((d - b).rem_euclid(2) != 0);
    let hi = (d + b).div_euclid(2);
    (hi - lo + 1).max(0)
}

struct Geometry {
    n: i64,
    target: Target,
    band: i64,
    weights: Vec<f64>,
}

impl Geometry {
    fn new(n: usize, target: Target, band: usize) -> Self {
        let (n, band) = (n as i64, band as i64);
        // Displacements lie in (-2n, 2n).
        let weights = (-2 * n..=2 * n)
            .map(|d| {
                let k = coverage(d, band);
                if k > 0 {
                    1.0 / k as f64
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            n,
            target,
            band,
            weights,
        }
    }

    /// Signal index and output index for idler index `a`, offset `c`, band step `delta`.
    #[inline]
    fn map(&self, a: i64, c: i64, delta: i64) -> Option<(usize, usize, f64)> {
        let n = self.n;
        let (s, out, d) = match self.target {
            Target::Pump => (a + 2 * c + delta, a + c, 2 * c + delta),
            Target::Phasematch => (n - a + 2 * c + delta, a - c, 2 * c + delta),
        };
        if !(0..n).contains(&s) || !(0..n).contains(&out) {
            return None;
        }
        Some((s as usize, out as usize, self.weights[(d + 2 * n) as usize]))
    }

    fn slice(&self, hist: &CoincidenceHistogram, cx: i64, cy: i64, buf: &mut [f64]) -> f64 {
        buf.iter_mut().for_each(|v| *v = 0.0);
        let n = self.n as usize;
        let b = self.band;
        let mut total = 0.0;
        for ay in 0..self.n {
            for dy in -b..=b {
                let Some((sy, oy, wy)) = self.map(ay, cy, dy) else {
                    continue;
                };
                for ax in 0..self.n {
                    for dx in -b..=b {
                        let Some((sx, ox, wx)) = self.map(ax, cx, dx) else {
                            continue;
                        };
                        let v = wx * wy * hist.get(ax as usize, ay as usize, sx, sy);
                        buf[oy * n + ox] += v;
                        total += v;
                    }
                }
            }
        }
        total
    }

    fn offsets(&self) -> std::ops::RangeInclusive<i64> {
        -self.n..=self.n
    }
}

/// All non-empty shifted bands in offset order (`cy` major, then `cx`).
pub fn audit_slices(
    hist: &CoincidenceHistogram,
    target: Target,
    config: &ExtractionConfig,
) -> Vec<Slice> {
    let geo = Geometry::new(hist.n(), target, config.band_halfwidth);
    let n = hist.n();
    let rows: Vec<Vec<Slice>> = geo
        .offsets()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&cy| {
            let mut out = Vec::new();
            for cx in geo.offsets() {
                let mut buf = vec![0.0; n * n];
                let total = geo.slice(hist, cx, cy, &mut buf);
                if total > 0.0 {
                    out.push(Slice {
                        c: (cx, cy),
                        total,
                        values: buf,
                    });
                }
            }
            out
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Shift-and-accumulate over all bands, normalized to unit sum.
pub fn extract(
    hist: &CoincidenceHistogram,
    target: Target,
    config: &ExtractionConfig,
) -> Result<IntensityMap> {
    let geo = Geometry::new(hist.n(), target, config.band_halfwidth);
    let threshold = config.threshold(hist);
    let n = hist.n();
    let rows: Vec<Vec<f64>> = geo
        .offsets()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&cy| {
            let mut acc = vec![0.0; n * n];
            let mut buf = vec![0.0; n * n];
            for cx in geo.offsets() {
                let total = geo.slice(hist, cx, cy, &mut buf);
                if total > 0.0 && total >= threshold {
                    acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
                }
            }
            acc
        })
        .collect();
    let mut acc = vec![0.0; n * n];
    for row in rows {
        acc.iter_mut().zip(&row).for_each(|(a, b)| *a += b);
    }
    let map = IntensityMap::new(hist.grid, acc)?;
    map.unit_sum().map_err(|_| Error::NoCorrelatedCounts)
}

/// `|E|²` estimate with the default noise floor.
pub fn extract_pump(hist: &CoincidenceHistogram, band_halfwidth: usize) -> Result<IntensityMap> {
    extract(hist, Target::Pump, &ExtractionConfig::with_band(band_halfwidth))
}

/// `|φ|²` estimate with the default noise floor.
pub fn extract_phasematch(
    hist: &CoincidenceHistogram,
    band_halfwidth: usize,
) -> Result<IntensityMap> {
    extract(
        hist,
        Target::Phasematch,
        &ExtractionConfig::with_band(band_halfwidth),
    )
}
