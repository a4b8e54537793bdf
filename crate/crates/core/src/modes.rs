//! Gaussian, Hypergeometric-Gauss and Zernike building blocks.
//!
//! The HyGG family used here is `HyGG_{-|ℓ|,ℓ}`: at its waist plane it is
//! `exp(-r²/w²)·exp(-iπr²/(λ𝓡))·exp(iℓθ)`. [`hygg_at_z`] evaluates its Fresnel
//! propagation in closed form. With `ρ = r/w`, `ζ = z/z₀`, `z₀ = πw²/λ` and
//! `1/ξ = πw²/(λ𝓡)`, the transverse integral reduces to
//! `∫ρ'J_|ℓ|(αρ')exp(-βρ'²)dρ'` with `α = 2ρ/ζ` and `β = 1 + i(1/ξ + 1/ζ)`.
//! The sign inside `β` is fixed by the crate's kernel convention (see
//! [`crate::field`]) and is checked against numerical propagation in the tests.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::scaled_bessel_i;
use crate::error::{Error, Result};
use crate::field::{normalize, ComplexField, Curvature, GridSpec, PhaseMap};
use crate::retrieval::ModalDecomposition;

pub const MAX_ABS_ELL: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyGGSpec {
    pub ell: i32,
    /// Waist radius in meters.
    pub w: f64,
    pub curvature: Curvature,
    pub wavelength: f64,
}

impl HyGGSpec {
    pub fn new(ell: i32, w: f64, curvature: Curvature, wavelength: f64) -> Result<Self> {
        let spec = Self {
            ell,
            w,
            curvature,
            wavelength,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.w.is_finite() && self.w > 0.0) {
            return Err(Error::param(format!("waist {} must be > 0", self.w)));
        }
        if self.ell.abs() > MAX_ABS_ELL {
            return Err(Error::param(format!(
                "|ell| = {} exceeds {MAX_ABS_ELL}",
                self.ell.abs()
            )));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::param(format!(
                "wavelength {} must be > 0",
                self.wavelength
            )));
        }
        self.curvature.inverse_radius()?;
        Ok(())
    }

    /// Rayleigh range `πw²/λ`.
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.w * self.w / self.wavelength
    }
}

fn check_resolved(grid: &GridSpec, w: f64) -> Result<()> {
    if w < 3.0 * grid.pitch() * (1.0 - 1e-12) {
        return Err(Error::UnderResolved {
            waist_m: w,
            pitch_m: grid.pitch(),
        });
    }
    Ok(())
}

/// Normalized Gaussian `exp(-r²/w²)` with a quadratic phase.
pub fn gaussian(
    grid: &GridSpec,
    w: f64,
    curvature: Curvature,
    wavelength: f64,
) -> Result<ComplexField> {
    hygg_waist(grid, &HyGGSpec::new(0, w, curvature, wavelength)?)
}

/// Normalized waist-plane HyGG mode; the on-axis pixel is zero for `ℓ ≠ 0`.
pub fn hygg_waist(grid: &GridSpec, spec: &HyGGSpec) -> Result<ComplexField> {
    spec.validate()?;
    check_resolved(grid, spec.w)?;
    let inv_r = spec.curvature.inverse_radius()?;
    let k = -PI * inv_r / spec.wavelength;
    let w2 = spec.w * spec.w;
    let ell = spec.ell as f64;
    let field = ComplexField::from_fn(*grid, spec.wavelength, 0.0, |x, y| {
        let r2 = x * x + y * y;
        if spec.ell != 0 && r2 == 0.0 {
            return Complex64::default();
        }
        let phase = k * r2 + ell * y.atan2(x);
        Complex64::from_polar((-r2 / w2).exp(), phase)
    })?;
    normalize(&field)
}

/// Transverse integral `∫₀^∞ ρ J_m(aρ) e^{-βρ²} dρ` for `a ≥ 0`, `Re β > 0`.
fn hankel_gauss(m: u32, a: f64, beta: Complex64) -> Complex64 {
    if a == 0.0 {
        return if m == 0 {
            0.5 / beta
        } else {
            Complex64::default()
        };
    }
    let x = a * a / (8.0 * beta);
    let nu = m as f64 / 2.0;
    let pre = PI.sqrt() * a / (8.0 * beta.powf(1.5));
    pre * (scaled_bessel_i(nu - 0.5, x) - scaled_bessel_i(nu + 0.5, x))
}

/// HyGG mode of `spec` after free propagation from its waist plane to `z`, normalized.
pub fn hygg_at_z(grid: &GridSpec, spec: &HyGGSpec, z: f64) -> Result<ComplexField> {
    spec.validate()?;
    check_resolved(grid, spec.w)?;
    if z == 0.0 {
        return Err(Error::UseWaistPlane);
    }
    if !z.is_finite() {
        return Err(Error::param("z must be finite"));
    }
    let z0 = spec.rayleigh_range();
    let zeta = z / z0;
    let inv_xi = z0 * spec.curvature.inverse_radius()?;
    let beta = Complex64::new(1.0, inv_xi + 1.0 / zeta);
    let m = spec.ell.unsigned_abs();
    let ell = spec.ell as f64;
    let sign = if zeta < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
    let outer = Complex64::new(0.0, 2.0 / zeta) * Complex64::i().powu(m) * sign;
    let n = grid.n();
    let w = spec.w;
    let mut values = vec![Complex64::default(); grid.len()];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, row)| {
            let y = grid.coord(j);
            for (i, v) in row.iter_mut().enumerate() {
                let x = grid.coord(i);
                let rho = (x * x + y * y).sqrt() / w;
                let a = (2.0 * rho / zeta).abs();
                let k = hankel_gauss(m, a, beta);
                let theta = if rho == 0.0 { 0.0 } else { y.atan2(x) };
                *v = outer * k * Complex64::from_polar(1.0, ell * theta - rho * rho / zeta);
            }
        });
    normalize(&ComplexField::new(*grid, values, spec.wavelength, z)?)
}

/// One HyGG mode per `ℓ` in `ells`, evaluated concurrently at plane `z`
/// (the waist generator is used at `z = 0`).
pub fn hygg_basis(
    grid: &GridSpec,
    ells: &[i32],
    w: f64,
    curvature: Curvature,
    wavelength: f64,
    z: f64,
) -> Result<Vec<ComplexField>> {
    ells.par_iter()
        .map(|&ell| {
            let spec = HyGGSpec::new(ell, w, curvature, wavelength)?;
            if z == 0.0 {
                hygg_waist(grid, &spec)
            } else {
                hygg_at_z(grid, &spec, z)
            }
        })
        .collect()
}

/// Zernike term `γ·Z^m_n(r/a, θ)`, with `Z^m_n = R^{|m|}_n(ρ)·cos(mθ)` for
/// `m ≥ 0` and `R^{|m|}_n(ρ)·sin(|m|θ)` for `m < 0`.
///
/// Polynomials are unnormalized: `R^{|m|}_n(1) = 1`, so the peak value on the
/// aperture edge is `|γ|` radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZernikeTerm {
    pub n: u32,
    pub m: i32,
    pub coefficient: f64,
    pub aperture_radius: f64,
}

impl ZernikeTerm {
    pub fn new(n: u32, m: i32, coefficient: f64, aperture_radius: f64) -> Result<Self> {
        check_zernike(n, m)?;
        if !(aperture_radius.is_finite() && aperture_radius > 0.0) {
            return Err(Error::param("aperture radius must be > 0"));
        }
        Ok(Self {
            n,
            m,
            coefficient,
            aperture_radius,
        })
    }
}

fn check_zernike(n: u32, m: i32) -> Result<()> {
    let am = m.unsigned_abs();
    if am > n || !(n - am).is_multiple_of(2) {
        return Err(Error::InvalidZernike { n, m });
    }
    Ok(())
}

/// `(n, m)` for Noll index `j ≥ 1`. Even `j` carry the cosine (`m > 0`) terms.
pub fn noll_to_nm(j: u32) -> (u32, i32) {
    assert!(j >= 1, "Noll indices start at 1");
    let mut n = 0u32;
    let mut j1 = j - 1;
    while j1 > n {
        n += 1;
        j1 -= n;
    }
    let am = (n % 2) + 2 * ((j1 + (n + 1) % 2) / 2);
    let m = if j.is_multiple_of(2) { am as i32 } else { -(am as i32) };
    (n, m)
}

/// Inverse of [`noll_to_nm`].
pub fn nm_to_noll(n: u32, m: i32) -> Result<u32> {
    check_zernike(n, m)?;
    let first = n * (n + 1) / 2 + 1;
    (first..first + n + 1)
        .find(|&j| noll_to_nm(j) == (n, m))
        .ok_or(Error::InvalidZernike { n, m })
}

/// The twelve `(n, m)` pairs with `2 ≤ n ≤ 4`, in Noll order (`j = 4..=15`).
pub fn default_zernike_indices() -> Vec<(u32, i32)> {
    (4..=15).map(noll_to_nm).collect()
}

fn radial(n: u32, am: u32, rho: f64) -> f64 {
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    (0..=(n - am) / 2)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact(n - k) / (fact(k) * fact((n + am) / 2 - k) * fact((n - am) / 2 - k))
                * rho.powi((n - 2 * k) as i32)
        })
        .sum()
}

/// `Z^m_n` at normalized radius `rho` and angle `theta`.
pub fn zernike(n: u32, m: i32, rho: f64, theta: f64) -> Result<f64> {
    check_zernike(n, m)?;
    let am = m.unsigned_abs();
    let r = radial(n, am, rho);
    Ok(if m >= 0 {
        r * (am as f64 * theta).cos()
    } else {
        r * (am as f64 * theta).sin()
    })
}

/// `Σ γ·Z^m_n` over the grid; outside the aperture the polynomials are
/// simply continued.
pub fn zernike_surface(grid: &GridSpec, terms: &[ZernikeTerm]) -> Result<PhaseMap> {
    let mut values = vec![0.0; grid.len()];
    let Some(first) = terms.first() else {
        return Ok(PhaseMap {
            grid: *grid,
            values,
        });
    };
    let a = first.aperture_radius;
    for t in terms {
        check_zernike(t.n, t.m)?;
        if t.aperture_radius != a {
            return Err(Error::param("Zernike terms must share one aperture radius"));
        }
    }
    if !(a > 0.0) || a > grid.extent() / 2.0 {
        return Err(Error::param(format!(
            "aperture radius {a:e} m does not fit in a {:e} m window",
            grid.extent()
        )));
    }
    for (k, v) in values.iter_mut().enumerate() {
        let (x, y) = grid.xy(k);
        let rho = (x * x + y * y).sqrt() / a;
        let theta = y.atan2(x);
        *v = terms
            .iter()
            .map(|t| t.coefficient * zernike(t.n, t.m, rho, theta).expect("checked"))
            .sum();
    }
    Ok(PhaseMap {
        grid: *grid,
        values,
    })
}

/// `|c_ℓ|²` normalized to unit sum, keyed by `ℓ`.
pub fn oam_power_spectrum(decomposition: &ModalDecomposition) -> BTreeMap<i32, f64> {
    let mut out = BTreeMap::new();
    for (ell, c) in decomposition.ells().zip(&decomposition.coefficients) {
        *out.entry(ell).or_insert(0.0) += c.norm_sqr();
    }
    let total: f64 = out.values().sum();
    if total > 0.0 {
        out.values_mut().for_each(|v| *v /= total);
    }
    out
}
