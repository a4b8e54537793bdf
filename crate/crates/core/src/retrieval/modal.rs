//! Maximum-likelihood modal decomposition from two intensity planes.
//!
//! The field is written as `Σ c_ℓ·HyGG_ℓ` with every mode evaluated at both
//! planes, and the coefficients minimize the two-plane L1 intensity mismatch.
//! The global phase is fixed by holding one coefficient real, which leaves
//! `2K - 1` real parameters for the simplex search.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::Target;
use super::optim::{nelder_mead, NelderMeadConfig};
use crate::error::{Error, Result};
use crate::field::{ComplexField, Curvature, GridSpec, IntensityMap};
use crate::modes;

/// Largest number of modes accepted by [`fit_modal`].
pub const MAX_MODES: usize = 31;

/// One HyGG mode per `ℓ` in `ell_min..=ell_max`, sharing waist, wavefront and wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyggBasis {
    pub ell_min: i32,
    pub ell_max: i32,
    /// Waist radius in meters; `None` estimates it from the first plane.
    pub w: Option<f64>,
    pub curvature: Curvature,
    pub wavelength: f64,
}

impl HyggBasis {
    pub fn new(ell_min: i32, ell_max: i32, wavelength: f64) -> Self {
        Self {
            ell_min,
            ell_max,
            w: None,
            curvature: Curvature::Flat,
            wavelength,
        }
    }

    pub fn ells(&self) -> std::ops::RangeInclusive<i32> {
        self.ell_min..=self.ell_max
    }

    pub fn len(&self) -> usize {
        (self.ell_max - self.ell_min + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalDecomposition {
    /// The basis actually used, with its waist resolved.
    pub basis: HyggBasis,
    /// One coefficient per `ℓ`, ascending.
    pub coefficients: Vec<Complex64>,
    pub loss: f64,
    pub plane_zs: (f64, f64),
    /// False when no restart met the simplex tolerances.
    pub converged: bool,
}

impl ModalDecomposition {
    pub fn ells(&self) -> impl Iterator<Item = i32> {
        self.basis.ells()
    }

    /// The superposition at one plane, from pre-evaluated modes.
    pub fn field(&self, modes: &[ComplexField]) -> Result<ComplexField> {
        if modes.len() != self.coefficients.len() {
            return Err(Error::param("mode count does not match the coefficients"));
        }
        let mut acc = vec![Complex64::default(); modes[0].values.len()];
        for (m, c) in modes.iter().zip(&self.coefficients) {
            acc.iter_mut().zip(&m.values).for_each(|(a, v)| *a += c * v);
        }
        Ok(modes[0].with_values(acc))
    }

    /// Intensities of the fitted field at both planes on `grid`.
    pub fn reconstruct(&self, grid: &GridSpec) -> Result<(IntensityMap, IntensityMap)> {
        let ells: Vec<i32> = self.ells().collect();
        let w = self.basis.w.ok_or_else(|| Error::param("basis waist unresolved"))?;
        let at = |z: f64| -> Result<IntensityMap> {
            let m = modes::hygg_basis(grid, &ells, w, self.basis.curvature, self.basis.wavelength, z)?;
            Ok(self.field(&m)?.intensity())
        };
        Ok((at(self.plane_zs.0)?, at(self.plane_zs.1)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_evals: usize,
}

impl Default for ModalConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            max_evals: 60_000,
        }
    }
}

/// Scales to unit norm and rotates so the largest coefficient is real and positive.
pub fn canonicalize(c: &[Complex64]) -> Vec<Complex64> {
    let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let Some(big) = c.iter().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())) else {
        return Vec::new();
    };
    if norm == 0.0 {
        return c.to_vec();
    }
    let rot = big.conj() / (big.norm() * norm);
    c.iter().map(|v| v * rot).collect()
}

struct Problem {
    modes1: Vec<Vec<Complex64>>,
    modes2: Vec<Vec<Complex64>>,
    t1: Target,
    t2: Target,
    /// Index of the coefficient held real.
    anchor: usize,
}

impl Problem {
    fn unpack(&self, x: &[f64]) -> Vec<Complex64> {
        let k = self.modes1.len();
        let mut c = Vec::with_capacity(k);
        let mut it = x.iter();
        for i in 0..k {
            let re = *it.next().expect("parameter count");
            let im = if i == self.anchor {
                0.0
            } else {
                *it.next().expect("parameter count")
            };
            c.push(Complex64::new(re, im));
        }
        c
    }

    fn pack(&self, c: &[Complex64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * c.len() - 1);
        for (i, v) in c.iter().enumerate() {
            x.push(v.re);
            if i != self.anchor {
                x.push(v.im);
            }
        }
        x
    }

    fn superpose(modes: &[Vec<Complex64>], c: &[Complex64], buf: &mut [Complex64]) {
        buf.iter_mut().for_each(|v| *v = Complex64::default());
        for (m, ck) in modes.iter().zip(c) {
            if *ck == Complex64::default() {
                continue;
            }
            buf.iter_mut().zip(m).for_each(|(a, v)| *a += ck * v);
        }
    }

    fn loss(&self, c: &[Complex64], buf: &mut Vec<Complex64>) -> f64 {
        buf.resize(self.modes1[0].len(), Complex64::default());
        Self::superpose(&self.modes1, c, buf);
        let a = self.t1.l1(buf);
        Self::superpose(&self.modes2, c, buf);
        a + self.t2.l1(buf)
    }
}

/// Initial coefficients for restart `r`: complex normal draws from
/// `ChaCha8Rng(seed)` on stream `r`.
fn initial(k: usize, seed: u64, r: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    (0..k)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect()
}

/// Waist estimate `√(2⟨r²⟩)`, exact for any waist-plane HyGG intensity.
pub fn waist_from_moment(i: &IntensityMap) -> Result<f64> {
    Ok((2.0 * i.second_moment()?).sqrt())
}

/// Fits the basis coefficients to intensities `i1` at `z1` and `i2` at `z2`.
///
/// Restarts run concurrently; each draws its start from its own stream and
/// the lowest loss wins (ties go to the lower restart index).
pub fn fit_modal(
    i1: &IntensityMap,
    i2: &IntensityMap,
    z1: f64,
    z2: f64,
    basis: &HyggBasis,
    config: &ModalConfig,
) -> Result<ModalDecomposition> {
    fit_modal_from(i1, i2, z1, z2, basis, config, None)
}

/// As [`fit_modal`], with restart 0 started from `start` when given.
pub fn fit_modal_from(
    i1: &IntensityMap,
    i2: &IntensityMap,
    z1: f64,
    z2: f64,
    basis: &HyggBasis,
    config: &ModalConfig,
    start: Option<&[Complex64]>,
) -> Result<ModalDecomposition> {
    i1.grid.check_same(&i2.grid)?;
    let k = basis.len();
    if k == 0 || k > MAX_MODES {
        return Err(Error::param(format!("basis size {k} not in 1..={MAX_MODES}")));
    }
    if config.restarts == 0 {
        return Err(Error::param("need at least one restart"));
    }
    let grid = i1.grid;
    let w = match basis.w {
        Some(w) => w,
        None => waist_from_moment(i1)?,
    };
    let basis = HyggBasis { w: Some(w), ..*basis };
    let ells: Vec<i32> = basis.ells().collect();
    let m1 = modes::hygg_basis(&grid, &ells, w, basis.curvature, basis.wavelength, z1)?;
    let m2 = modes::hygg_basis(&grid, &ells, w, basis.curvature, basis.wavelength, z2)?;
    let anchor = ells.iter().position(|&l| l == 0).unwrap_or(0);
    let problem = Problem {
        modes1: m1.into_iter().map(|f| f.values).collect(),
        modes2: m2.into_iter().map(|f| f.values).collect(),
        t1: Target::new(i1)?,
        t2: Target::new(i2)?,
        anchor,
    };
    if let Some(s) = start {
        if s.len() != k {
            return Err(Error::param("start vector has the wrong length"));
        }
    }

    let nm = NelderMeadConfig {
        max_evals: config.max_evals,
        ..NelderMeadConfig::default()
    };
    let runs: Vec<(f64, Vec<Complex64>, bool)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let c0 = match (r, start) {
                (0, Some(s)) => s.to_vec(),
                _ => initial(k, config.seed, r),
            };
            // Rotate the start so the anchor is real; the loss is phase blind.
            let c0 = {
                let a = c0[anchor];
                let rot = if a.norm() > 0.0 { a.conj() / a.norm() } else { Complex64::new(1.0, 0.0) };
                let c: Vec<Complex64> = c0.iter().map(|v| v * rot).collect();
                let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
                c.iter().map(|v| v / norm).collect::<Vec<_>>()
            };
            let x0 = problem.pack(&c0);
            let m = nelder_mead(
                |x| {
                    let mut buf = Vec::new();
                    problem.loss(&problem.unpack(x), &mut buf)
                },
                &x0,
                0.3,
                &nm,
            );
            (m.f, problem.unpack(&m.x), m.converged)
        })
        .collect();
    let converged = runs.iter().any(|r| r.2);
    let (loss, c, _) = runs
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one restart");
    if !converged {
        log::warn!("modal fit: no restart converged; returning the best point found");
    }
    Ok(ModalDecomposition {
        basis,
        coefficients: canonicalize(&c),
        loss,
        plane_zs: (z1, z2),
        converged,
    })
}
