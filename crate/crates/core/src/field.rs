//! Sampled complex scalar fields on uniform square grids.
//!
//! Values are stored row-major: the sample at column `i` (x) and row `j` (y)
//! lives at `values[j * n + i]`, with coordinates `((i - n/2)·pitch, (j - n/2)·pitch)`.
//!
//! Quadratic phases follow a single sign convention throughout the crate: a
//! diverging wavefront of radius `R > 0` carries `exp(-iπr²/(λR))`, matching the
//! free-space kernel `exp(-iπ(X'-X)²/(λz))` used by [`crate::propagation`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square sampling grid centered on the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    pitch: f64,
}

impl GridSpec {
    /// `n` must be even and at least 8; `pitch` is in meters.
    pub fn new(n: usize, pitch: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be even and >= 8"
            )));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::InvalidGrid(format!("pitch = {pitch} must be > 0")));
        }
        Ok(Self { n, pitch })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Side length of the sampled window.
    pub fn extent(&self) -> f64 {
        self.n as f64 * self.pitch
    }

    pub fn pixel_area(&self) -> f64 {
        self.pitch * self.pitch
    }

    /// Coordinate of index `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.pitch
    }

    /// `(x, y)` of the flat index `k`.
    #[inline]
    pub fn xy(&self, k: usize) -> (f64, f64) {
        (self.coord(k % self.n), self.coord(k / self.n))
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "({}, {:e} m) vs ({}, {:e} m)",
                self.n, self.pitch, other.n, other.pitch
            )))
        }
    }
}

/// Wavefront curvature of a quadratic phase; `Flat` stands for an infinite radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Flat,
    Radius(f64),
}

impl Curvature {
    /// `1/R`, zero for a flat wavefront.
    pub fn inverse_radius(&self) -> Result<f64> {
        match *self {
            Curvature::Flat => Ok(0.0),
            Curvature::Radius(r) if r == 0.0 || !r.is_finite() => Err(Error::SingularCurvature),
            Curvature::Radius(r) => Ok(1.0 / r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    pub wavelength: f64,
    pub z: f64,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, wavelength: f64, z: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::param(format!("wavelength {wavelength} must be > 0")));
        }
        if !z.is_finite() || values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::param("field contains non-finite values"));
        }
        Ok(Self {
            grid,
            values,
            wavelength,
            z,
        })
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        grid: GridSpec,
        wavelength: f64,
        z: f64,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.xy(k);
                f(x, y)
            })
            .collect();
        Self::new(grid, values, wavelength, z)
    }

    /// `Σ|u|²·pitch²`.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.pixel_area()
    }

    pub fn intensity(&self) -> IntensityMap {
        IntensityMap {
            grid: self.grid,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    pub fn phase(&self) -> PhaseMap {
        PhaseMap {
            grid: self.grid,
            values: self.values.iter().map(|v| v.arg()).collect(),
        }
    }

    /// Same grid, wavelength and plane with new samples.
    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        Self {
            grid: self.grid,
            values,
            wavelength: self.wavelength,
            z: self.z,
        }
    }
}

/// Nonnegative intensity samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl IntensityMap {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("intensity must be finite and >= 0"));
        }
        Ok(Self { grid, values })
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Rescales to `Σ I·pitch² = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total() * self.grid.pixel_area();
        if total <= 0.0 {
            return Err(Error::EmptyIntensity);
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v / total).collect(),
        })
    }

    /// Rescales to `Σ I = 1`.
    pub fn unit_sum(&self) -> Result<Self> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::EmptyIntensity);
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v / total).collect(),
        })
    }

    /// Field with amplitude `√I` and zero phase.
    pub fn sqrt_field(&self, wavelength: f64, z: f64) -> Result<ComplexField> {
        ComplexField::new(
            self.grid,
            self.values.iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect(),
            wavelength,
            z,
        )
    }

    /// Intensity-weighted `⟨r²⟩`.
    pub fn second_moment(&self) -> Result<f64> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::EmptyIntensity);
        }
        let (cx, cy) = self.centroid();
        let m = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let (x, y) = self.grid.xy(k);
                v * ((x - cx).powi(2) + (y - cy).powi(2))
            })
            .sum::<f64>();
        Ok(m / total)
    }

    pub fn centroid(&self) -> (f64, f64) {
        let total = self.total();
        let (mut sx, mut sy) = (0.0, 0.0);
        for (k, v) in self.values.iter().enumerate() {
            let (x, y) = self.grid.xy(k);
            sx += v * x;
            sy += v * y;
        }
        (sx / total, sy / total)
    }
}

/// Real-valued phase samples (radians), not necessarily wrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

/// Rescales `field` to unit power `Σ|u|²·pitch² = 1`.
pub fn normalize(field: &ComplexField) -> Result<ComplexField> {
    let power = field.power();
    if power == 0.0 {
        return Err(Error::ZeroField);
    }
    let s = 1.0 / power.sqrt();
    Ok(field.with_values(field.values.iter().map(|v| v * s).collect()))
}

/// Multiplies every pixel by `exp(-iπr²/(λR))`.
pub fn apply_quadratic_phase(field: &ComplexField, curvature: Curvature) -> Result<ComplexField> {
    let inv_r = curvature.inverse_radius()?;
    if inv_r == 0.0 {
        return Ok(field.clone());
    }
    let k = -PI * inv_r / field.wavelength;
    let grid = field.grid;
    let values = field
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let (x, y) = grid.xy(idx);
            v * Complex64::from_polar(1.0, k * (x * x + y * y))
        })
        .collect();
    Ok(field.with_values(values))
}

/// Bhattacharyya overlap `Σ√(a·b) / √(Σa·Σb)`.
pub fn similarity(a: &IntensityMap, b: &IntensityMap) -> Result<f64> {
    a.grid.check_same(&b.grid)?;
    let (ta, tb) = (a.total(), b.total());
    if ta <= 0.0 || tb <= 0.0 {
        return Err(Error::EmptyIntensity);
    }
    let overlap: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x * y).sqrt())
        .sum();
    Ok((overlap / (ta * tb).sqrt()).min(1.0))
}

/// Subtracts the weighted least-squares plane `a·x + b·y + c` from `phase`.
pub fn remove_tip_tilt(phase: &PhaseMap, weight: &IntensityMap) -> Result<PhaseMap> {
    phase.grid.check_same(&weight.grid)?;
    if weight.total() <= 0.0 {
        return Err(Error::EmptyIntensity);
    }
    let grid = phase.grid;
    // Normal equations in the basis (x, y, 1); coordinates in pixels for conditioning.
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (k, (&p, &w)) in phase.values.iter().zip(&weight.values).enumerate() {
        if w == 0.0 {
            continue;
        }
        let (x, y) = grid.xy(k);
        let basis = [x / grid.pitch(), y / grid.pitch(), 1.0];
        for r in 0..3 {
            rhs[r] += w * basis[r] * p;
            for c in 0..3 {
                m[r][c] += w * basis[r] * basis[c];
            }
        }
    }
    let coef = solve3(m, rhs).ok_or(Error::FeaturelessInput)?;
    let values = phase
        .values
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (x, y) = grid.xy(k);
            p - (coef[0] * x / grid.pitch() + coef[1] * y / grid.pitch() + coef[2])
        })
        .collect();
    Ok(PhaseMap { grid, values })
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &c| m[a][col].abs().total_cmp(&m[c][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for c in col..3 {
                m[row][c] -= f * m[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = ((row + 1)..3).map(|c| m[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}
