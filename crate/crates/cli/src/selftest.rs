//! Fast subset of the acceptance checks, runnable from an installed binary.

use std::f64::consts::PI;

use biphoton_core::extraction::{extract_phasematch, extract_pump};
use biphoton_core::modes::gaussian;
use biphoton_core::propagation::{
    fresnel_propagate, propagate_4d, propagate_biphoton, reconstruct_phasematch_curvature,
};
use biphoton_core::spdc::{
    biphoton_amplitude, build_biphoton, coincidence_distribution, synthetic_phasematch,
};
use biphoton_core::{ComplexField, Curvature, GridSpec, IntensityMap, PhasematchModel};

const LAMBDA: f64 = 810e-9;

type Check = fn() -> Result<String, String>;

fn verdict(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel_l2(a: &ComplexField, b: &ComplexField) -> f64 {
    let d: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum();
    let n: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
    (d / n).sqrt()
}

fn propagator() -> Result<String, String> {
    let g = GridSpec::new(256, 5e-6).map_err(|e| e.to_string())?;
    let w0 = 1e-4;
    let z0 = PI * w0 * w0 / LAMBDA;
    let beam = gaussian(&g, w0, Curvature::Flat, LAMBDA).map_err(|e| e.to_string())?;
    let mut width: f64 = 0.0;
    let mut energy: f64 = 0.0;
    for frac in [0.5, 1.0, 2.0] {
        let out = fresnel_propagate(&beam, frac * z0);
        let w = (2.0 * out.intensity().second_moment().map_err(|e| e.to_string())?).sqrt();
        width = width.max((w / (w0 * (1.0 + frac * frac).sqrt()) - 1.0).abs());
        energy = energy.max((out.power() - beam.power()).abs() / beam.power());
    }
    let semigroup = rel_l2(
        &fresnel_propagate(&fresnel_propagate(&beam, 0.3 * z0), 0.5 * z0),
        &fresnel_propagate(&beam, 0.8 * z0),
    );
    verdict(
        width < 0.01 && energy < 1e-12 && semigroup < 1e-12,
        format!("width {width:.1e}, energy {energy:.1e}, semigroup {semigroup:.1e}"),
    )
}

fn factorization() -> Result<String, String> {
    let g = GridSpec::new(48, 1e-5).unwrap();
    let pump = gaussian(&g, 6e-5, Curvature::Radius(0.05), LAMBDA).unwrap();
    let pm = gaussian(&g, 3e-5, Curvature::Flat, LAMBDA).unwrap();
    let state = build_biphoton(&pump, &pm).map_err(|e| e.to_string())?;
    let psi = biphoton_amplitude(&state, 24).and_then(|p| propagate_4d(&p, 5e-3));
    let mut oracle = psi.map_err(|e| e.to_string())?.coincidences();
    let total: f64 = oracle.iter().sum();
    oracle.iter_mut().for_each(|v| *v /= total);
    let fast = propagate_biphoton(&state, 5e-3)
        .and_then(|s| coincidence_distribution(&s, 24))
        .map_err(|e| e.to_string())?;
    let d: f64 = oracle.iter().zip(&fast.counts).map(|(a, b)| (a - b).powi(2)).sum();
    let n: f64 = oracle.iter().map(|a| a * a).sum();
    let err = (d / n).sqrt();
    verdict(err < 1e-6, format!("factorized vs 4D rel L2 {err:.1e}"))
}

fn extraction() -> Result<String, String> {
    let g = GridSpec::new(64, 1e-5).unwrap();
    let pump = gaussian(&g, 6e-5, Curvature::Radius(0.2), LAMBDA).unwrap();
    let pm = gaussian(&g, 4e-5, Curvature::Flat, LAMBDA).unwrap();
    let s = build_biphoton(&pump, &pm)
        .and_then(|s| propagate_biphoton(&s, 4e-3))
        .map_err(|e| e.to_string())?;
    let h = coincidence_distribution(&s, 32).map_err(|e| e.to_string())?;
    let truth = |f: &ComplexField| -> IntensityMap {
        let values = (0..32 * 32)
            .map(|k| f.values[(k / 32) * 128 + (k % 32) * 2].norm_sqr())
            .collect();
        IntensityMap::new(GridSpec::new(32, 2e-5).unwrap(), values)
            .unwrap()
            .unit_sum()
            .unwrap()
    };
    let diff = |a: &IntensityMap, b: &IntensityMap| {
        let peak = b.values.iter().cloned().fold(0.0, f64::max);
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / peak
    };
    let ep = diff(&extract_pump(&h, 0).map_err(|e| e.to_string())?, &truth(&s.pump));
    let ef = diff(&extract_phasematch(&h, 0).map_err(|e| e.to_string())?, &truth(&s.phasematch));
    let err = ep.max(ef);
    verdict(err < 1e-10, format!("noiseless extraction max err {err:.1e}"))
}

fn curvature() -> Result<String, String> {
    let g = GridSpec::new(64, 40e-6).unwrap();
    let (width, z_eff, z1, z2) = (1.2e-4, 0.1, 0.075, 0.345);
    let pump = gaussian(&g, 6e-4, Curvature::Flat, LAMBDA).unwrap();
    let pm = synthetic_phasematch(&g, PhasematchModel::DivergingGaussian { width, z_eff }, LAMBDA)
        .map_err(|e| e.to_string())?;
    let s0 = build_biphoton(&pump, &pm).map_err(|e| e.to_string())?;
    let plane = |z: f64| {
        propagate_biphoton(&s0, z)
            .and_then(|s| coincidence_distribution(&s, 32))
            .and_then(|h| extract_phasematch(&h, 0))
    };
    let (i1, i2) = (plane(z1).map_err(|e| e.to_string())?, plane(z2).map_err(|e| e.to_string())?);
    let fit = reconstruct_phasematch_curvature(&i1, &i2, z1, z2, LAMBDA).map_err(|e| e.to_string())?;
    let q0 = 1.0 / num_complex::Complex64::new(1.0 / z_eff, -LAMBDA / (PI * width * width));
    let truth = 1.0 / (1.0 / (q0 + z2 / 2.0)).re;
    let Curvature::Radius(r) = fit.curvature else {
        return Err("fit returned a flat wavefront".into());
    };
    let err = (r / truth - 1.0).abs();
    verdict(
        err < 0.05 && fit.similarity >= 0.99,
        format!("curvature err {:.2}%, similarity {:.4}", 100.0 * err, fit.similarity),
    )
}

/// Runs every check, printing one line each; returns whether all passed.
pub fn run() -> bool {
    let checks: [(&str, Check); 4] = [
        ("propagator", propagator),
        ("factorization", factorization),
        ("extraction", extraction),
        ("curvature", curvature),
    ];
    let mut ok = true;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                ok = false;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    ok
}
