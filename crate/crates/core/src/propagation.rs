//! Paraxial free-space propagation.
//!
//! Single fields are propagated with the Fresnel transfer function
//! `H(f) = exp(+iπλ·dz·|f|²)`, the Fourier transform of the kernel
//! `(i/λz)·exp(-iπ(X'-X)²/(λz))`. Back-propagation is the same call with
//! negative `dz`. The constant `e^{ikz}` phase is dropped.
//!
//! A factorized two-photon state `Ψ = E((Xi+Xs)/2)·φ((Xi-Xs)/2)` stays
//! factorized under propagation, each factor moving by half the distance.
//! [`propagate_4d`] applies the full idler/signal kernel product directly and
//! exists only to check that identity on small grids.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{self, apply_quadratic_phase, ComplexField, Curvature, GridSpec, IntensityMap};
use crate::spdc::BiphotonState;

/// Largest grid accepted by [`propagate_4d`].
pub const ORACLE_MAX_N: usize = 32;

/// Per-axis transfer factors; `H(fx, fy) = h[i]·h[j]`.
fn transfer_factors(grid: &GridSpec, wavelength: f64, dz: f64) -> Vec<Complex64> {
    let n = grid.n();
    (0..n)
        .map(|k| {
            let f = fft::frequency(k, n, grid.pitch());
            Complex64::from_polar(1.0, PI * wavelength * dz * f * f)
        })
        .collect()
}

fn propagate_in_place(data: &mut [Complex64], n: usize, h: &[Complex64]) {
    fft::forward(data, n);
    for (j, row) in data.chunks_exact_mut(n).enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v *= h[i] * h[j];
        }
    }
    fft::inverse(data, n);
}

/// Fraction of power outside the central half of the window.
pub fn outer_power_fraction(field: &ComplexField) -> f64 {
    let n = field.grid.n();
    let (lo, hi) = (n / 4, n - n / 4);
    let total: f64 = field.values.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let inner: f64 = field
        .values
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let (i, j) = (k % n, k / n);
            (lo..hi).contains(&i) && (lo..hi).contains(&j)
        })
        .map(|(_, v)| v.norm_sqr())
        .sum();
    1.0 - inner / total
}

/// Propagates `field` by `dz` meters at its own wavelength.
///
/// Logs a warning when the result spills out of the central half of the
/// window, where periodic wrap-around starts to matter.
pub fn fresnel_propagate(field: &ComplexField, dz: f64) -> ComplexField {
    let out = propagate_unchecked(field, dz);
    if dz != 0.0 {
        let outer = outer_power_fraction(&out);
        if outer > 1e-2 {
            log::warn!(
                "propagated beam leaves the central half of the grid ({:.1}% of power outside); \
                 periodic wrap-around may corrupt the result",
                100.0 * outer
            );
        }
    }
    out
}

/// [`fresnel_propagate`] without the wrap-around check, for inner loops that
/// score many trial fields.
pub(crate) fn propagate_unchecked(field: &ComplexField, dz: f64) -> ComplexField {
    if dz == 0.0 {
        return field.clone();
    }
    let n = field.grid.n();
    let h = transfer_factors(&field.grid, field.wavelength, dz);
    let mut data = field.values.clone();
    propagate_in_place(&mut data, n, &h);
    ComplexField {
        grid: field.grid,
        values: data,
        wavelength: field.wavelength,
        z: field.z + dz,
    }
}

/// Propagates independent fields concurrently; output order matches input.
pub fn propagate_batch(fields: &[ComplexField], dz: f64) -> Vec<ComplexField> {
    fields.par_iter().map(|f| fresnel_propagate(f, dz)).collect()
}

/// How a factorized state's distance maps onto its pump and phasematching factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfRule {
    /// Propagate each factor by `dz/2` at the state wavelength.
    #[default]
    HalfDistance,
    /// Propagate each factor by `dz` at half the state wavelength.
    HalfWavelength,
}

/// Propagates a factorized state by `dz` using [`HalfRule::HalfDistance`].
pub fn propagate_biphoton(state: &BiphotonState, dz: f64) -> Result<BiphotonState> {
    propagate_biphoton_with(state, dz, HalfRule::HalfDistance)
}

pub fn propagate_biphoton_with(
    state: &BiphotonState,
    dz: f64,
    rule: HalfRule,
) -> Result<BiphotonState> {
    state.pump.grid.check_same(&state.phasematch.grid)?;
    let step = |f: &ComplexField| -> ComplexField {
        let mut out = match rule {
            HalfRule::HalfDistance => fresnel_propagate(f, dz / 2.0),
            HalfRule::HalfWavelength => {
                let half = ComplexField {
                    wavelength: f.wavelength / 2.0,
                    ..f.clone()
                };
                let mut p = fresnel_propagate(&half, dz);
                p.wavelength = f.wavelength;
                p
            }
        };
        out.z = f.z + dz;
        out
    };
    let (pump, phasematch) = rayon::join(|| step(&state.pump), || step(&state.phasematch));
    Ok(BiphotonState {
        pump,
        phasematch,
        z: state.z + dz,
        wavelength: state.wavelength,
    })
}

/// Dense two-photon amplitude `Ψ(Xi, Xs)` on a small grid.
///
/// The idler pixel `(xi, yi)` and signal pixel `(xs, ys)` map to
/// `values[(yi·n + xi)·n² + ys·n + xs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi4D {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    pub wavelength: f64,
}

impl Psi4D {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, wavelength: f64) -> Result<Self> {
        if grid.n() > ORACLE_MAX_N {
            return Err(Error::OracleScale(grid.n()));
        }
        if values.len() != grid.len() * grid.len() {
            return Err(Error::param("Psi4D needs n⁴ samples"));
        }
        Ok(Self {
            grid,
            values,
            wavelength,
        })
    }

    /// `⟨Ψ|Ψ⟩` with the `pitch⁴` measure.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.pixel_area().powi(2)
    }

    /// `|Ψ|²` in the same layout.
    pub fn coincidences(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// Applies `G_dz(X'i, Xi)·G_dz(X's, Xs)` to every sample of `psi`.
pub fn propagate_4d(psi: &Psi4D, dz: f64) -> Result<Psi4D> {
    let n = psi.grid.n();
    if n > ORACLE_MAX_N {
        return Err(Error::OracleScale(n));
    }
    if dz == 0.0 {
        return Ok(psi.clone());
    }
    let m = n * n;
    let h = transfer_factors(&psi.grid, psi.wavelength, dz);
    let mut data = psi.values.clone();
    // Signal coordinates are contiguous for a fixed idler pixel.
    data.par_chunks_mut(m)
        .for_each(|slice| propagate_in_place(slice, n, &h));
    fft::transpose(&mut data, m);
    data.par_chunks_mut(m)
        .for_each(|slice| propagate_in_place(slice, n, &h));
    fft::transpose(&mut data, m);
    Ok(Psi4D {
        grid: psi.grid,
        values: data,
        wavelength: psi.wavelength,
    })
}

/// Result of the quadratic-phase scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFit {
    pub curvature: Curvature,
    pub similarity: f64,
}

/// Number of logarithmically spaced radii scanned before refinement.
pub const CURVATURE_CANDIDATES: usize = 200;

fn is_featureless(map: &IntensityMap) -> bool {
    let max = map.values.iter().cloned().fold(f64::MIN, f64::max);
    let min = map.values.iter().cloned().fold(f64::MAX, f64::min);
    max <= 0.0 || (max - min) <= 1e-12 * max
}

/// Recovers the wavefront radius at `z2` of a phasematching function whose
/// intensities are known at `z1` and `z2`.
///
/// Each candidate applies a diverging quadratic phase to `√I2`, propagates
/// back to `z1` by half the plane separation and scores the overlap with `I1`.
/// The flat wavefront competes with 200 radii log-spaced over
/// `[(z2-z1)/10, 50·(z2-z1)]`; the winner is polished by golden-section search.
pub fn reconstruct_phasematch_curvature(
    i1: &IntensityMap,
    i2: &IntensityMap,
    z1: f64,
    z2: f64,
    wavelength: f64,
) -> Result<CurvatureFit> {
    i1.grid.check_same(&i2.grid)?;
    if z2 <= z1 {
        return Err(Error::param(format!("need z2 > z1 (got {z1} and {z2})")));
    }
    if i1.total() <= 0.0 || i2.total() <= 0.0 {
        return Err(Error::EmptyIntensity);
    }
    if is_featureless(i1) || is_featureless(i2) {
        return Err(Error::FeaturelessInput);
    }
    let amplitude = i2.normalized()?.sqrt_field(wavelength, z2)?;
    let back = -(z2 - z1) / 2.0;
    let score = |c: Curvature| -> Result<f64> {
        let field = apply_quadratic_phase(&amplitude, c)?;
        let at_z1 = propagate_unchecked(&field, back);
        field::similarity(&at_z1.intensity(), i1)
    };

    let sep = z2 - z1;
    let (lo, hi) = ((sep / 10.0).ln(), (50.0 * sep).ln());
    let logs: Vec<f64> = (0..CURVATURE_CANDIDATES)
        .map(|k| lo + (hi - lo) * k as f64 / (CURVATURE_CANDIDATES - 1) as f64)
        .collect();
    let scores: Vec<f64> = logs
        .par_iter()
        .map(|u| score(Curvature::Radius(u.exp())))
        .collect::<Result<_>>()?;
    let flat = score(Curvature::Flat)?;

    let (best_k, best) = scores
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty scan");
    if flat >= best {
        return Ok(CurvatureFit {
            curvature: Curvature::Flat,
            similarity: flat,
        });
    }

    let mut a = logs[best_k.saturating_sub(1)];
    let mut b = logs[(best_k + 1).min(CURVATURE_CANDIDATES - 1)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut sc = score(Curvature::Radius(c.exp()))?;
    let mut sd = score(Curvature::Radius(d.exp()))?;
    for _ in 0..60 {
        if (b - a).abs() < 1e-9 {
            break;
        }
        if sc > sd {
            b = d;
            d = c;
            sd = sc;
            c = b - g * (b - a);
            sc = score(Curvature::Radius(c.exp()))?;
        } else {
            a = c;
            c = d;
            sc = sd;
            d = a + g * (b - a);
            sd = score(Curvature::Radius(d.exp()))?;
        }
    }
    let (u, s) = if sc > sd { (c, sc) } else { (d, sd) };
    let (u, s) = if s >= best { (u, s) } else { (logs[best_k], best) };
    Ok(CurvatureFit {
        curvature: Curvature::Radius(u.exp()),
        similarity: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::normalize;
    use crate::modes;
    use crate::spdc::build_biphoton;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LAMBDA: f64 = 810e-9;

    fn gaussian(n: usize, pitch: f64, w: f64) -> ComplexField {
        let g = GridSpec::new(n, pitch).unwrap();
        modes::gaussian(&g, w, Curvature::Flat, LAMBDA).unwrap()
    }

    fn random_field(n: usize, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GridSpec::new(n, 10e-6).unwrap();
        let values = (0..n * n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        normalize(&ComplexField::new(g, values, LAMBDA, 0.0).unwrap()).unwrap()
    }

    fn max_diff(a: &ComplexField, b: &ComplexField) -> f64 {
        let scale = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn zero_distance_is_identity() {
        let f = random_field(32, 1);
        assert_eq!(fresnel_propagate(&f, 0.0), f);
    }

    #[test]
    fn gaussian_width_follows_beam_law() {
        let (n, pitch, w0) = (256, 10e-6, 100e-6);
        let f = gaussian(n, pitch, w0);
        let zr = PI * w0 * w0 / LAMBDA;
        for frac in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let z = frac * zr;
            let out = fresnel_propagate(&f, z);
            let measured = (2.0 * out.intensity().second_moment().unwrap()).sqrt();
            let expected = w0 * (1.0 + (z * LAMBDA / (PI * w0 * w0)).powi(2)).sqrt();
            assert!(
                (measured / expected - 1.0).abs() < 0.01,
                "z = {frac} zR: {measured} vs {expected}"
            );
            assert_eq!(out.z, z);
        }
    }

    #[test]
    fn inverse_propagation_restores_field() {
        let f = random_field(64, 7);
        let back = fresnel_propagate(&fresnel_propagate(&f, 0.05), -0.05);
        assert!(max_diff(&f, &back) < 1e-12);
    }

    #[test]
    fn diverging_phase_spreads_faster_than_flat() {
        let f = gaussian(128, 10e-6, 80e-6);
        let curved = apply_quadratic_phase(&f, Curvature::Radius(0.05)).unwrap();
        let dz = 0.02;
        let w_flat = fresnel_propagate(&f, dz).intensity().second_moment().unwrap();
        let w_curved = fresnel_propagate(&curved, dz).intensity().second_moment().unwrap();
        assert!(w_curved > 1.5 * w_flat);
    }

    #[test]
    fn batch_matches_individual_calls() {
        let fields: Vec<_> = (0..4).map(|s| random_field(16, s)).collect();
        let batch = propagate_batch(&fields, 0.01);
        for (f, b) in fields.iter().zip(&batch) {
            assert_eq!(&fresnel_propagate(f, 0.01), b);
        }
    }

    #[test]
    fn biphoton_uses_half_distance() {
        let pump = gaussian(64, 10e-6, 60e-6);
        let pm = gaussian(64, 10e-6, 30e-6);
        let state = build_biphoton(&pump, &pm).unwrap();
        let z = 0.01;
        let out = propagate_biphoton(&state, 2.0 * z).unwrap();
        let direct = fresnel_propagate(&pump, z);
        assert!(max_diff(&out.pump, &direct) < 1e-13);
        assert_eq!(out.z, 2.0 * z);
        assert_eq!(propagate_biphoton(&state, 0.0).unwrap(), state);

        let alt = propagate_biphoton_with(&state, 2.0 * z, HalfRule::HalfWavelength).unwrap();
        assert!(max_diff(&out.pump, &alt.pump) < 1e-13);
        assert!(max_diff(&out.phasematch, &alt.phasematch) < 1e-13);
        assert_eq!(alt.pump.wavelength, LAMBDA);
    }

    fn random_psi(n: usize, seed: u64) -> Psi4D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GridSpec::new(n, 10e-6).unwrap();
        let values = (0..n.pow(4))
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Psi4D::new(g, values, LAMBDA).unwrap()
    }

    #[test]
    fn oracle_identity_power_and_guard() {
        let psi = random_psi(8, 2);
        assert_eq!(propagate_4d(&psi, 0.0).unwrap(), psi);
        let out = propagate_4d(&psi, 0.003).unwrap();
        assert!((out.power() / psi.power() - 1.0).abs() < 1e-12);

        let g = GridSpec::new(64, 1e-5).unwrap();
        assert!(matches!(
            Psi4D::new(g, vec![], LAMBDA),
            Err(Error::OracleScale(64))
        ));
        let big = Psi4D {
            grid: g,
            values: vec![],
            wavelength: LAMBDA,
        };
        assert_eq!(
            propagate_4d(&big, 1.0).unwrap_err().to_string(),
            "oracle scale exceeded: n = 64 > 32"
        );
    }

    #[test]
    fn oracle_product_state_propagates_per_photon() {
        // Ψ = a(Xi)·b(Xs) must become prop(a)·prop(b).
        let a = random_field(8, 11);
        let b = random_field(8, 12);
        let values = a
            .values
            .iter()
            .flat_map(|x| b.values.iter().map(move |y| x * y))
            .collect();
        let psi = Psi4D::new(a.grid, values, LAMBDA).unwrap();
        let dz = 1e-3;
        let out = propagate_4d(&psi, dz).unwrap();
        let (pa, pb) = (fresnel_propagate(&a, dz), fresnel_propagate(&b, dz));
        let scale = out.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (k, v) in out.values.iter().enumerate() {
            let expected = pa.values[k / 64] * pb.values[k % 64];
            assert!((v - expected).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn curvature_rejects_bad_input() {
        let g = GridSpec::new(32, 1e-5).unwrap();
        let flat = IntensityMap::new(g, vec![1.0; 1024]).unwrap();
        let f = gaussian(32, 1e-5, 50e-6).intensity();
        assert!(matches!(
            reconstruct_phasematch_curvature(&flat, &f, 0.0, 0.1, LAMBDA),
            Err(Error::FeaturelessInput)
        ));
        assert!(reconstruct_phasematch_curvature(&f, &f, 0.1, 0.0, LAMBDA).is_err());
    }

    #[test]
    fn identical_close_planes_prefer_flat_wavefront() {
        let i = gaussian(64, 10e-6, 80e-6).intensity();
        let fit = reconstruct_phasematch_curvature(&i, &i, 0.1, 0.1 + 1e-7, LAMBDA).unwrap();
        assert_eq!(fit.curvature, Curvature::Flat);
        assert!(fit.similarity > 1.0 - 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn power_is_conserved(seed in any::<u64>(), dz in -0.5f64..0.5) {
            let f = random_field(32, seed);
            let out = fresnel_propagate(&f, dz);
            prop_assert!((out.power() / f.power() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn propagation_composes(seed in any::<u64>(), a in -0.2f64..0.2, b in -0.2f64..0.2) {
            let f = random_field(32, seed);
            let two_step = fresnel_propagate(&fresnel_propagate(&f, a), b);
            let one_step = fresnel_propagate(&f, a + b);
            prop_assert!(max_diff(&two_step, &one_step) < 1e-12);
        }
    }
}
