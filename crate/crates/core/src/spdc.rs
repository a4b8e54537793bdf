//! Synthetic factorized two-photon states and their coincidence statistics.
//!
//! A state holds the pump `E` (a function of `R = (Xi+Xs)/2`) and the
//! phasematching function `φ` (a function of `Δ = (Xi-Xs)/2`) on a common
//! grid. Coincidence maps are sampled on a detector grid of `out_n` pixels
//! spanning the same window; `R` and `Δ` are then half-integer multiples of the
//! detector pitch and are looked up in the state fields by bilinear
//! interpolation. A state grid with twice as many pixels at half the pitch makes
//! every lookup land exactly on a sample.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{apply_quadratic_phase, normalize, ComplexField, Curvature, GridSpec};
use crate::modes::{self, HyGGSpec, ZernikeTerm};
use crate::propagation::Psi4D;

/// Largest detector grid for dense 4D histograms.
pub const HISTOGRAM_MAX_N: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonState {
    pub pump: ComplexField,
    pub phasematch: ComplexField,
    pub z: f64,
    /// Down-converted wavelength.
    pub wavelength: f64,
}

/// Pairs a pump and a phasematching field into `Ψ = E((Xi+Xs)/2)·φ((Xi-Xs)/2)`.
/// Both factors are normalized.
pub fn build_biphoton(pump: &ComplexField, phasematch: &ComplexField) -> Result<BiphotonState> {
    pump.grid.check_same(&phasematch.grid)?;
    if pump.z != phasematch.z {
        return Err(Error::param(format!(
            "pump at z = {} but phasematching at z = {}",
            pump.z, phasematch.z
        )));
    }
    if pump.wavelength != phasematch.wavelength {
        return Err(Error::param(format!(
            "wavelength tags differ ({} vs {})",
            pump.wavelength, phasematch.wavelength
        )));
    }
    Ok(BiphotonState {
        pump: normalize(pump)?,
        phasematch: normalize(phasematch)?,
        z: pump.z,
        wavelength: pump.wavelength,
    })
}

/// Dense 4D coincidence map. The idler pixel `(xi, yi)` and signal pixel
/// `(xs, ys)` map to `counts[(yi·n + xi)·n² + ys·n + xs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    pub grid: GridSpec,
    pub counts: Vec<f64>,
    /// Number of sampled events; `None` for a noiseless distribution.
    pub total_events: Option<u64>,
}

impl CoincidenceHistogram {
    pub fn new(grid: GridSpec, counts: Vec<f64>, total_events: Option<u64>) -> Result<Self> {
        if grid.n() > HISTOGRAM_MAX_N {
            return Err(Error::MemoryGuard(grid.n()));
        }
        if counts.len() != grid.len() * grid.len() {
            return Err(Error::param(format!(
                "expected {} bins, got {}",
                grid.len() * grid.len(),
                counts.len()
            )));
        }
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::param("counts must be finite and >= 0"));
        }
        Ok(Self {
            grid,
            counts,
            total_events,
        })
    }

    pub fn zeros(grid: GridSpec) -> Result<Self> {
        Self::new(grid, vec![0.0; grid.len() * grid.len()], Some(0))
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    #[inline]
    pub fn index(&self, xi: usize, yi: usize, xs: usize, ys: usize) -> usize {
        let n = self.grid.n();
        (yi * n + xi) * n * n + ys * n + xs
    }

    #[inline]
    pub fn get(&self, xi: usize, yi: usize, xs: usize, ys: usize) -> f64 {
        self.counts[self.index(xi, yi, xs, ys)]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Bilinear lookup weights along one axis for positions given in source pixels.
#[derive(Clone, Copy)]
struct Tap {
    i0: usize,
    w0: f64,
    w1: f64,
}

fn taps(positions: impl Iterator<Item = f64>, len: usize) -> Vec<Option<Tap>> {
    positions
        .map(|u| {
            if u < 0.0 || u > (len - 1) as f64 {
                return None;
            }
            let i0 = (u.floor() as usize).min(len - 1);
            let t = u - i0 as f64;
            Some(Tap {
                i0,
                w0: 1.0 - t,
                w1: t,
            })
        })
        .collect()
}

fn sample2d(field: &ComplexField, tx: &[Option<Tap>], ty: &[Option<Tap>]) -> Vec<Complex64> {
    let n = field.grid.n();
    let at = |i: usize, j: usize| -> Complex64 {
        if i < n && j < n {
            field.values[j * n + i]
        } else {
            Complex64::default()
        }
    };
    let mut out = Vec::with_capacity(tx.len() * ty.len());
    for y in ty {
        for x in tx {
            let v = match (x, y) {
                (Some(x), Some(y)) => {
                    let mut v = at(x.i0, y.i0) * (x.w0 * y.w0);
                    if x.w1 != 0.0 {
                        v += at(x.i0 + 1, y.i0) * (x.w1 * y.w0);
                    }
                    if y.w1 != 0.0 {
                        v += at(x.i0, y.i0 + 1) * (x.w0 * y.w1);
                        if x.w1 != 0.0 {
                            v += at(x.i0 + 1, y.i0 + 1) * (x.w1 * y.w1);
                        }
                    }
                    v
                }
                _ => Complex64::default(),
            };
            out.push(v);
        }
    }
    out
}

/// Pump and phasematching values on the half-step lattices of a detector grid.
///
/// `pump[(sy)(2n-1) + sx]` holds `E` at `R` for `xi + xs = sx` (same in y);
/// `pm[(dy)(2n-1) + dx]` holds `φ` at `Δ` for `xi - xs + n - 1 = dx`.
struct Lattices {
    n: usize,
    pump: Vec<Complex64>,
    pm: Vec<Complex64>,
}

fn lattices(state: &BiphotonState, out_n: usize) -> Result<(GridSpec, Lattices)> {
    state.pump.grid.check_same(&state.phasematch.grid)?;
    let src = state.pump.grid;
    let out = GridSpec::new(out_n, src.extent() / out_n as f64)?;
    let half = out.pitch() / 2.0;
    let to_src = |coord: f64| coord / src.pitch() + (src.n() / 2) as f64;
    let m = 2 * out_n - 1;
    let r_pos = (0..m).map(|s| to_src((s as f64 - out_n as f64) * half));
    let d_pos = (0..m).map(|d| to_src((d as f64 - (out_n - 1) as f64) * half));
    let tr = taps(r_pos, src.n());
    let td = taps(d_pos, src.n());
    Ok((
        out,
        Lattices {
            n: out_n,
            pump: sample2d(&state.pump, &tr, &tr),
            pm: sample2d(&state.phasematch, &td, &td),
        },
    ))
}

impl Lattices {
    #[inline]
    fn amplitude(&self, xi: usize, yi: usize, xs: usize, ys: usize) -> Complex64 {
        let (n, m) = (self.n, 2 * self.n - 1);
        let r = (yi + ys) * m + xi + xs;
        let d = (yi + n - 1 - ys) * m + xi + n - 1 - xs;
        self.pump[r] * self.pm[d]
    }
}

/// Noiseless coincidence map `|E(R)|²·|φ(Δ)|²` on an `out_n` detector grid
/// spanning the state window, normalized to unit sum.
pub fn coincidence_distribution(
    state: &BiphotonState,
    out_n: usize,
) -> Result<CoincidenceHistogram> {
    if out_n > HISTOGRAM_MAX_N {
        return Err(Error::MemoryGuard(out_n));
    }
    let (grid, lat) = lattices(state, out_n)?;
    let n = out_n;
    let m = n * n;
    let mut counts = vec![0.0; m * m];
    counts
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(ki, slice)| {
            let (xi, yi) = (ki % n, ki / n);
            for (ks, c) in slice.iter_mut().enumerate() {
                *c = lat.amplitude(xi, yi, ks % n, ks / n).norm_sqr();
            }
        });
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyIntensity);
    }
    counts.iter_mut().for_each(|c| *c /= total);
    CoincidenceHistogram::new(grid, counts, None)
}

/// Dense amplitude `Ψ(Xi, Xs)` on the same detector grid, for the 4D oracle.
pub fn biphoton_amplitude(state: &BiphotonState, out_n: usize) -> Result<Psi4D> {
    if out_n > crate::propagation::ORACLE_MAX_N {
        return Err(Error::OracleScale(out_n));
    }
    let (grid, lat) = lattices(state, out_n)?;
    let n = out_n;
    let values = (0..n * n)
        .flat_map(|ki| {
            let lat = &lat;
            (0..n * n).map(move |ks| lat.amplitude(ki % n, ki / n, ks % n, ks / n))
        })
        .collect();
    Psi4D::new(grid, values, state.wavelength)
}

/// Multinomial draw of `n_events` coincidences from `ideal`, deterministic in `seed`.
///
/// Bins are visited in storage order and each receives a binomial share of
/// the events still unassigned, conditioned on the probability mass left; the
/// joint result is exactly multinomial. One `ChaCha8Rng` stream is used.
pub fn sample_coincidences(
    ideal: &CoincidenceHistogram,
    n_events: u64,
    seed: u64,
) -> Result<CoincidenceHistogram> {
    if n_events == 0 {
        return Err(Error::param("n_events must be > 0"));
    }
    let total = ideal.total();
    if total <= 0.0 {
        return Err(Error::EmptyIntensity);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0.0; ideal.counts.len()];
    let mut left = n_events;
    let mut mass = 1.0f64;
    for (c, p) in counts.iter_mut().zip(&ideal.counts) {
        if left == 0 {
            break;
        }
        let p = p / total;
        if p <= 0.0 {
            continue;
        }
        let q = (p / mass).min(1.0);
        let k = if q >= 1.0 {
            left
        } else {
            Binomial::new(left, q)
                .map_err(|e| Error::param(e.to_string()))?
                .sample(&mut rng)
        };
        *c = k as f64;
        left -= k;
        mass -= p;
        if mass <= 0.0 {
            break;
        }
    }
    if left > 0 {
        // Rounding left some mass unassigned; give it to the last populated bin.
        if let Some(last) = ideal.counts.iter().rposition(|p| *p > 0.0) {
            counts[last] += left as f64;
        }
    }
    CoincidenceHistogram::new(ideal.grid, counts, Some(n_events))
}

/// Phasematching models for synthetic states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PhasematchModel {
    /// `exp(-Δ²/w²)`.
    Gaussian { width: f64 },
    /// Gaussian times the diverging wavefront of radius `z_eff`.
    DivergingGaussian { width: f64, z_eff: f64 },
    /// `sinc(b·Δ²)` with `sinc(x) = sin(x)/x`; the first zero sits at `Δ = √(π/b)`.
    RadialSinc { b: f64 },
}

pub fn synthetic_phasematch(
    grid: &GridSpec,
    model: PhasematchModel,
    wavelength: f64,
) -> Result<ComplexField> {
    match model {
        PhasematchModel::Gaussian { width } => {
            modes::gaussian(grid, width, Curvature::Flat, wavelength)
        }
        PhasematchModel::DivergingGaussian { width, z_eff } => {
            if !(z_eff.is_finite() && z_eff > 0.0) {
                return Err(Error::param("z_eff must be > 0"));
            }
            let g = modes::gaussian(grid, width, Curvature::Flat, wavelength)?;
            apply_quadratic_phase(&g, Curvature::Radius(z_eff))
        }
        PhasematchModel::RadialSinc { b } => {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::param("sinc parameter b must be > 0"));
            }
            let f = ComplexField::from_fn(*grid, wavelength, 0.0, |x, y| {
                let u = b * (x * x + y * y);
                let v = if u == 0.0 { 1.0 } else { u.sin() / u };
                Complex64::new(v, 0.0)
            })?;
            normalize(&f)
        }
    }
}

/// One coherent HyGG component of a synthetic pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeWeight {
    pub ell: i32,
    pub re: f64,
    pub im: f64,
}

/// Pump models for synthetic states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PumpModel {
    Gaussian {
        width: f64,
        #[serde(default = "flat")]
        curvature: Curvature,
    },
    /// Gaussian with a π phase jump across the `x = 0` line (negative-x half flipped).
    PiStep { width: f64 },
    /// Coherent superposition of waist-plane HyGG modes of a common waist.
    HyggSuperposition { width: f64, modes: Vec<ModeWeight> },
    /// Gaussian with a Zernike phase.
    Aberrated { width: f64, terms: Vec<ZernikeTerm> },
}

fn flat() -> Curvature {
    Curvature::Flat
}

pub fn synthetic_pump(grid: &GridSpec, model: &PumpModel, wavelength: f64) -> Result<ComplexField> {
    match model {
        PumpModel::Gaussian { width, curvature } => {
            modes::gaussian(grid, *width, *curvature, wavelength)
        }
        PumpModel::PiStep { width } => {
            let mut g = modes::gaussian(grid, *width, Curvature::Flat, wavelength)?;
            let n = grid.n();
            for (k, v) in g.values.iter_mut().enumerate() {
                if k % n < n / 2 {
                    *v = -*v;
                }
            }
            Ok(g)
        }
        PumpModel::HyggSuperposition { width, modes: weights } => {
            if weights.is_empty() {
                return Err(Error::param("superposition needs at least one mode"));
            }
            let mut acc = vec![Complex64::default(); grid.len()];
            for mw in weights {
                let spec = HyGGSpec::new(mw.ell, *width, Curvature::Flat, wavelength)?;
                let f = modes::hygg_waist(grid, &spec)?;
                let c = Complex64::new(mw.re, mw.im);
                acc.iter_mut().zip(&f.values).for_each(|(a, v)| *a += c * v);
            }
            normalize(&ComplexField::new(*grid, acc, wavelength, 0.0)?)
        }
        PumpModel::Aberrated { width, terms } => {
            let g = modes::gaussian(grid, *width, Curvature::Flat, wavelength)?;
            let phase = modes::zernike_surface(grid, terms)?;
            let values = g
                .values
                .iter()
                .zip(&phase.values)
                .map(|(v, p)| v * Complex64::from_polar(1.0, *p))
                .collect();
            Ok(g.with_values(values))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::IntensityMap;

    const LAMBDA: f64 = 810e-9;

    fn grid(n: usize, pitch: f64) -> GridSpec {
        GridSpec::new(n, pitch).unwrap()
    }

    fn gauss(g: &GridSpec, w: f64) -> ComplexField {
        modes::gaussian(g, w, Curvature::Flat, LAMBDA).unwrap()
    }

    fn delta(g: &GridSpec) -> ComplexField {
        let mut v = vec![Complex64::default(); g.len()];
        v[(g.n() / 2) * g.n() + g.n() / 2] = Complex64::new(1.0, 0.0);
        ComplexField::new(*g, v, LAMBDA, 0.0).unwrap()
    }

    #[test]
    fn build_checks_grids_and_normalizes() {
        let g = grid(32, 1e-5);
        let pump = ComplexField {
            values: gauss(&g, 6e-5).values.iter().map(|v| v * 3.0).collect(),
            ..gauss(&g, 6e-5)
        };
        let s = build_biphoton(&pump, &gauss(&g, 4e-5)).unwrap();
        assert!((s.pump.power() - 1.0).abs() < 1e-12);
        let other = gauss(&grid(64, 1e-5), 6e-5);
        assert!(matches!(
            build_biphoton(&pump, &other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn pi_step_pump_is_kept_as_given() {
        let g = grid(32, 1e-5);
        let pump = synthetic_pump(&g, &PumpModel::PiStep { width: 8e-5 }, LAMBDA).unwrap();
        let s = build_biphoton(&pump, &gauss(&g, 3e-5)).unwrap();
        for (a, b) in s.pump.values.iter().zip(&pump.values) {
            assert!((a - b).norm() <= 1e-14 * b.norm());
        }
        assert!(pump.values[16 * 32 + 10].re < 0.0);
        assert!(pump.values[16 * 32 + 20].re > 0.0);
    }

    #[test]
    fn delta_phasematch_gives_diagonal_histogram() {
        let g = grid(32, 1e-5);
        let uniform = ComplexField::new(g, vec![Complex64::new(1.0, 0.0); g.len()], LAMBDA, 0.0)
            .unwrap();
        let s = build_biphoton(&uniform, &delta(&g)).unwrap();
        let h = coincidence_distribution(&s, 16).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-12);
        for yi in 0..16 {
            for xi in 0..16 {
                for ys in 0..16 {
                    for xs in 0..16 {
                        let c = h.get(xi, yi, xs, ys);
                        if xi == xs && yi == ys {
                            assert!(c > 0.0);
                        } else {
                            assert_eq!(c, 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn memory_guard() {
        let g = grid(256, 1e-5);
        let s = build_biphoton(&gauss(&g, 1e-4), &gauss(&g, 1e-4)).unwrap();
        assert!(matches!(
            coincidence_distribution(&s, 128),
            Err(Error::MemoryGuard(128))
        ));
    }

    #[test]
    fn gaussian_signal_marginal_matches_direct_convolution() {
        // Σ_Xs |E((Xi+Xs)/2)|²|φ((Xi-Xs)/2)|² evaluated by brute force from the
        // analytic Gaussians at detector coordinates.
        let n = 16;
        let g = grid(2 * n, 1e-5);
        let (wp, wf) = (9e-5, 4e-5);
        let s = build_biphoton(&gauss(&g, wp), &gauss(&g, wf)).unwrap();
        let h = coincidence_distribution(&s, n).unwrap();
        let p = g.extent() / n as f64;
        let c = |i: usize| (i as f64 - (n / 2) as f64) * p;
        let ip = |x: f64, y: f64| (-2.0 * (x * x + y * y) / (wp * wp)).exp();
        let iphi = |x: f64, y: f64| (-2.0 * (x * x + y * y) / (wf * wf)).exp();
        let mut oracle = vec![0.0; n * n];
        for ki in 0..n * n {
            for ks in 0..n * n {
                let (xi, yi, xs, ys) = (c(ki % n), c(ki / n), c(ks % n), c(ks / n));
                oracle[ki] += ip((xi + xs) / 2.0, (yi + ys) / 2.0)
                    * iphi((xi - xs) / 2.0, (yi - ys) / 2.0);
            }
        }
        let total: f64 = oracle.iter().sum();
        for ki in 0..n * n {
            let got: f64 = h.counts[ki * n * n..(ki + 1) * n * n].iter().sum();
            assert!((got - oracle[ki] / total).abs() < 1e-10, "{ki}");
        }
    }

    #[test]
    fn exchange_symmetry_for_even_phasematch() {
        let g = grid(32, 1e-5);
        let pump = synthetic_pump(&g, &PumpModel::PiStep { width: 7e-5 }, LAMBDA).unwrap();
        let s = build_biphoton(&pump, &gauss(&g, 4e-5)).unwrap();
        let h = coincidence_distribution(&s, 16).unwrap();
        for ki in 0..256 {
            for ks in 0..256 {
                let a = h.counts[ki * 256 + ks];
                let b = h.counts[ks * 256 + ki];
                assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
            }
        }
    }

    #[test]
    fn off_lattice_grids_interpolate() {
        // A state sampled at the detector pitch needs half-pixel lookups.
        let g = grid(16, 2e-5);
        let s = build_biphoton(&gauss(&g, 8e-5), &gauss(&g, 6e-5)).unwrap();
        let h = coincidence_distribution(&s, 16).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-12);
        let centre = h.get(8, 8, 8, 8);
        assert!(h.counts.iter().all(|c| *c <= centre + 1e-15));
    }

    fn small_ideal() -> CoincidenceHistogram {
        let g = grid(32, 1e-5);
        let s = build_biphoton(&gauss(&g, 8e-5), &gauss(&g, 5e-5)).unwrap();
        coincidence_distribution(&s, 16).unwrap()
    }

    #[test]
    fn sampling_basics() {
        let ideal = small_ideal();
        assert!(sample_coincidences(&ideal, 0, 1).is_err());
        let one = sample_coincidences(&ideal, 1, 5).unwrap();
        assert_eq!(one.total(), 1.0);
        assert_eq!(one.counts.iter().filter(|c| **c > 0.0).count(), 1);
        let a = sample_coincidences(&ideal, 10_000, 9).unwrap();
        let b = sample_coincidences(&ideal, 10_000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_events, Some(10_000));
        assert_eq!(a.total(), 10_000.0);
        assert_ne!(a, sample_coincidences(&ideal, 10_000, 10).unwrap());
    }

    #[test]
    fn sampled_counts_follow_multinomial_statistics() {
        let ideal = small_ideal();
        let events = 10_000_000u64;
        let h = sample_coincidences(&ideal, events, 2024).unwrap();
        // Pearson χ² over bins with expectation ≥ 5.
        let (mut chi2, mut dof) = (0.0, 0usize);
        for (c, p) in h.counts.iter().zip(&ideal.counts) {
            let e = p * events as f64;
            if e >= 5.0 {
                chi2 += (c - e).powi(2) / e;
                dof += 1;
            }
        }
        let per = chi2 / dof as f64;
        assert!((0.8..=1.2).contains(&per), "chi2/dof = {per} over {dof}");
    }

    #[test]
    fn total_variation_shrinks_like_inverse_root() {
        // Coarse bins keep expectations well above one at both event counts.
        let g = grid(16, 2e-5);
        let s = build_biphoton(&gauss(&g, 1.2e-4), &gauss(&g, 8e-5)).unwrap();
        let ideal = coincidence_distribution(&s, 8).unwrap();
        let tv = |events: u64| -> f64 {
            (0..4)
                .map(|seed| {
                    let h = sample_coincidences(&ideal, events, seed).unwrap();
                    0.5 * h
                        .counts
                        .iter()
                        .zip(&ideal.counts)
                        .map(|(c, p)| (c / events as f64 - p).abs())
                        .sum::<f64>()
                })
                .sum::<f64>()
                / 4.0
        };
        let ratio = tv(100_000) / tv(10_000_000);
        assert!((ratio / 10.0 - 1.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn phasematch_models() {
        let g = grid(64, 1e-5);
        let gm = synthetic_phasematch(&g, PhasematchModel::Gaussian { width: 5e-5 }, LAMBDA)
            .unwrap();
        assert_eq!(gm, gauss(&g, 5e-5));

        let r0 = 10.0 * g.pitch();
        let b = std::f64::consts::PI / (r0 * r0);
        let sinc = synthetic_phasematch(&g, PhasematchModel::RadialSinc { b }, LAMBDA).unwrap();
        let row: Vec<f64> = (32..64).map(|i| sinc.values[32 * 64 + i].re).collect();
        assert!(row[..10].iter().all(|v| *v > 0.0));
        assert!(row[10].abs() < 1e-12 * row[0]);
        assert!(row[11] < 0.0);

        assert!(synthetic_phasematch(&g, PhasematchModel::RadialSinc { b: 0.0 }, LAMBDA).is_err());
        assert!(synthetic_phasematch(
            &g,
            PhasematchModel::DivergingGaussian {
                width: 5e-5,
                z_eff: -1.0
            },
            LAMBDA
        )
        .is_err());
    }

    #[test]
    fn diverging_phasematch_spreads_into_an_annulus() {
        // Peak radius (half-maximum radius of the azimuthal mean) grows with z.
        let g = grid(256, 1e-5);
        let pm = synthetic_phasematch(
            &g,
            PhasematchModel::DivergingGaussian {
                width: 1.6e-4,
                z_eff: 0.05,
            },
            LAMBDA,
        )
        .unwrap();
        let half_max_radius = |i: &IntensityMap| -> f64 {
            let row = &i.values[128 * 256 + 128..129 * 256];
            let max = row.iter().cloned().fold(0.0, f64::max);
            row.iter().rposition(|v| *v >= 0.5 * max).unwrap() as f64
        };
        let mut last = 0.0;
        for z in [0.0, 0.01, 0.02, 0.04] {
            let out = crate::propagation::fresnel_propagate(&pm, z);
            let r = half_max_radius(&out.intensity());
            assert!(r > last, "z = {z}: {r} <= {last}");
            last = r;
        }
    }
}
