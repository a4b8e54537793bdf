use std::path::{Path, PathBuf};

use biphoton_core::extraction::{audit_slices, extract, marginal, Axis, Target};
use biphoton_core::field::{remove_tip_tilt, similarity};
use biphoton_core::io;
use biphoton_core::modes::{default_zernike_indices, oam_power_spectrum};
use biphoton_core::propagation::{fresnel_propagate, propagate_biphoton, reconstruct_phasematch_curvature};
use biphoton_core::retrieval::{fit_modal, ga_run, ModalConfig};
use biphoton_core::spdc::{
    build_biphoton, coincidence_distribution, sample_coincidences, synthetic_phasematch,
    synthetic_pump,
};
use biphoton_core::{Curvature, HyggBasis, IntensityMap};
use log::info;
use serde::Serialize;

use crate::config::{self, ExtractConfig, PropagateConfig, RetrieveConfig, SimulateConfig};
use crate::error::CliError;
use crate::output::Outputs;

pub struct SimulateArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub events: Option<u64>,
    pub z1: Option<f64>,
    pub z2: Option<f64>,
    pub out: PathBuf,
}

pub fn simulate(args: &SimulateArgs) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg: SimulateConfig = config::load(args.config.as_deref())?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.events.is_some() {
        cfg.events = args.events;
    }
    match (args.z1, args.z2) {
        (Some(z1), Some(z2)) => cfg.planes_m = vec![z1, z2],
        (None, None) => {}
        _ => return Err(CliError::config("--z1 and --z2 go together")),
    }
    let grid = cfg.grid.spec()?;
    cfg.detector_n = Some(cfg.detector_n.unwrap_or(grid.n() / 2));
    cfg.validate()?;

    let pump = synthetic_pump(&grid, &cfg.pump, cfg.wavelength_m)?;
    let pm = synthetic_phasematch(&grid, cfg.phasematch, cfg.wavelength_m)?;
    let state = build_biphoton(&pump, &pm)?;
    let det = cfg.detector_n.expect("resolved above");

    let mut out = Outputs::new(&args.out);
    println!("{:>5} {:>12} {:>12}", "plane", "z_m", "events");
    for (k, &z) in cfg.planes_m.iter().enumerate() {
        let s = propagate_biphoton(&state, z)?;
        let ideal = coincidence_distribution(&s, det)?;
        let hist = if cfg.noiseless {
            ideal
        } else {
            // One stream per plane, offset from the run seed.
            let seed = cfg.seed.expect("validated").wrapping_add(k as u64);
            sample_coincidences(&ideal, cfg.events.expect("validated"), seed)?
        };
        let events = hist
            .total_events
            .map_or_else(|| "noiseless".to_string(), |n| n.to_string());
        println!("{k:>5} {z:>12.6} {events:>12}");
        info!("plane {k}: z = {z} m");
        out.add(format!("pump_{k}.cf1"), io::encode_cf1(&s.pump));
        out.add(format!("phasematch_{k}.cf1"), io::encode_cf1(&s.phasematch));
        out.add(format!("coincidences_{k}.ch1"), io::encode_ch1(&hist)?);
    }
    out.add_json("simulate.resolved.json", &cfg);
    out.commit()
}

pub struct ExtractArgs {
    pub histogram: PathBuf,
    pub config: Option<PathBuf>,
    pub band: Option<usize>,
    pub audit: bool,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ExtractResolved<'a> {
    histogram: &'a Path,
    #[serde(flatten)]
    config: ExtractConfig,
    audit: bool,
}

pub fn extract_cmd(args: &ExtractArgs) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg: ExtractConfig = config::load(args.config.as_deref())?;
    if let Some(b) = args.band {
        cfg.band_halfwidth = b;
    }
    let bytes = io::read_file(&args.histogram)
        .map_err(|e| CliError::from(e).context(&args.histogram.display().to_string()))?;
    let hist = io::decode_ch1(&bytes)
        .map_err(|e| CliError::from(e).context(&args.histogram.display().to_string()))?;
    let n = hist.n();

    let mut out = Outputs::new(&args.out);
    for (name, target) in [("pump", Target::Pump), ("phasematch", Target::Phasematch)] {
        let map = extract(&hist, target, &cfg.extraction())?;
        out.add(format!("{name}.im1"), io::encode_im1(&map, None, None));
        out.add(format!("{name}.png"), io::encode_png_gray(&map.values, n)?);
        if args.audit {
            let mut csv = String::from("cx,cy,total\n");
            for s in audit_slices(&hist, target, &cfg.extraction()) {
                csv.push_str(&format!("{},{},{}\n", s.c.0, s.c.1, s.total));
            }
            out.add(format!("audit_{name}.csv"), csv);
        }
    }
    for (name, axis) in [("x", Axis::X), ("y", Axis::Y)] {
        out.add(format!("marginal_{name}.csv"), io::marginal_csv(&marginal(&hist, axis)));
    }
    out.add_json(
        "extract.resolved.json",
        &ExtractResolved {
            histogram: &args.histogram,
            config: cfg,
            audit: args.audit,
        },
    );
    out.commit()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// HyGG mode decomposition.
    Modal,
    /// Zernike phase by genetic search.
    Zernike,
    /// Quadratic phase of the phasematching function.
    Quadratic,
}

pub struct RetrieveArgs {
    pub i1: PathBuf,
    pub i2: PathBuf,
    pub mode: Mode,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub z1: Option<f64>,
    pub z2: Option<f64>,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RetrieveResolved<'a> {
    i1: &'a Path,
    i2: &'a Path,
    mode: Mode,
    #[serde(flatten)]
    config: &'a RetrieveConfig,
}

#[derive(Serialize)]
struct CurvatureReport {
    /// `null` for a flat wavefront.
    curvature_radius_m: Option<f64>,
    similarity: f64,
    z1_m: f64,
    z2_m: f64,
}

fn read_map(path: &Path) -> Result<IntensityMap, CliError> {
    let label = path.display().to_string();
    let bytes = io::read_file(path).map_err(|e| CliError::from(e).context(&label))?;
    Ok(io::decode_im1(&bytes)
        .map_err(|e| CliError::from(e).context(&label))?
        .map)
}

pub fn retrieve(args: &RetrieveArgs) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg: RetrieveConfig = config::load(args.config.as_deref())?;
    if args.z1.is_some() {
        cfg.z1_m = args.z1;
    }
    if args.z2.is_some() {
        cfg.z2_m = args.z2;
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let (Some(z1), Some(z2)) = (cfg.z1_m, cfg.z2_m) else {
        return Err(CliError::config("retrieve needs --z1 and --z2"));
    };
    if z2 <= z1 || z1.is_nan() || z2.is_nan() {
        return Err(CliError::config(format!("need z1 < z2 (got {z1} and {z2})")));
    }
    let i1 = read_map(&args.i1)?;
    let i2 = read_map(&args.i2)?;
    i1.grid.check_same(&i2.grid)?;
    let grid = i1.grid;
    let n = grid.n();
    let pump_wavelength = cfg.wavelength_m / 2.0;

    let mut out = Outputs::new(&args.out);
    match args.mode {
        Mode::Modal => {
            let seed = cfg
                .seed
                .ok_or_else(|| CliError::config("modal fits need a seed (config or --seed)"))?;
            let m = cfg.modal;
            let basis = HyggBasis::new(m.ell_min, m.ell_max, pump_wavelength);
            let config = ModalConfig {
                restarts: m.restarts,
                seed,
                max_evals: m.max_evals,
            };
            let fit = fit_modal(&i1, &i2, z1, z2, &basis, &config)?;
            if !fit.converged {
                log::warn!("modal fit stopped at its evaluation budget");
            }
            let (r1, r2) = fit.reconstruct(&grid)?;
            out.add("modal.json", io::modal_to_json(&fit) + "\n");
            out.add("spectrum.csv", io::spectrum_csv(&oam_power_spectrum(&fit)));
            out.add("reconstructed_z1.im1", io::encode_im1(&r1, Some(pump_wavelength), Some(z1)));
            out.add("reconstructed_z2.im1", io::encode_im1(&r2, Some(pump_wavelength), Some(z2)));
            out.add("reconstructed_z2.png", io::encode_png_gray(&r2.values, n)?);
            println!("loss {:.6} similarity(z2) {:.4}", fit.loss, similarity(&r2, &i2)?);
        }
        Mode::Zernike => {
            let seed = cfg
                .seed
                .ok_or_else(|| CliError::config("genetic search needs a seed (config or --seed)"))?;
            cfg.ga.seed = seed;
            let aperture = *cfg.aperture_radius_m.get_or_insert(grid.extent() / 2.0);
            let set = cfg.zernike.get_or_insert_with(default_zernike_indices).clone();
            let result = ga_run(&i1, &i2, z1, z2, &set, aperture, pump_wavelength, &cfg.ga)?;
            let weight = result.field_z1.intensity();
            let phase = remove_tip_tilt(&result.phase(), &weight)?;
            let flattened = result.field_z1.with_values(
                result
                    .field_z1
                    .values
                    .iter()
                    .zip(&phase.values)
                    .map(|(v, p)| num_complex::Complex64::from_polar(v.norm(), *p))
                    .collect(),
            );
            let r2 = result.field_z2.intensity();
            out.add("zernike.json", io::zernike_to_json(&result.coefficients) + "\n");
            out.add("history.csv", io::history_csv(&result.history));
            out.add("field_z1.cf1", io::encode_cf1(&flattened));
            out.add("phase_z1.png", io::encode_png_phase(&phase.values, n)?);
            out.add("reconstructed_z2.im1", io::encode_im1(&r2, Some(pump_wavelength), Some(z2)));
            out.add("reconstructed_z2.png", io::encode_png_gray(&r2.values, n)?);
            let last = result.history.last().expect("generation 0 is always recorded");
            println!(
                "generation {} loss {:.6} similarity(z2) {:.4}",
                last.generation, last.best_loss, last.best_similarity
            );
        }
        Mode::Quadratic => {
            let fit = reconstruct_phasematch_curvature(&i1, &i2, z1, z2, cfg.wavelength_m)?;
            let radius = match fit.curvature {
                Curvature::Flat => None,
                Curvature::Radius(r) => Some(r),
            };
            out.add_json(
                "curvature.json",
                &CurvatureReport {
                    curvature_radius_m: radius,
                    similarity: fit.similarity,
                    z1_m: z1,
                    z2_m: z2,
                },
            );
            match radius {
                Some(r) => println!("curvature radius {r:.6} m similarity {:.5}", fit.similarity),
                None => println!("flat wavefront similarity {:.5}", fit.similarity),
            }
        }
    }
    out.add_json(
        "retrieve.resolved.json",
        &RetrieveResolved {
            i1: &args.i1,
            i2: &args.i2,
            mode: args.mode,
            config: &cfg,
        },
    );
    out.commit()
}

pub struct PropagateArgs {
    pub field: PathBuf,
    pub config: Option<PathBuf>,
    pub z1: Option<f64>,
    pub z2: Option<f64>,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PropagateResolved<'a> {
    field: &'a Path,
    #[serde(flatten)]
    config: PropagateConfig,
}

pub fn propagate(args: &PropagateArgs) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg: PropagateConfig = config::load(args.config.as_deref())?;
    if args.z1.is_some() {
        cfg.z1_m = args.z1;
    }
    if args.z2.is_some() {
        cfg.z2_m = args.z2;
    }
    let label = args.field.display().to_string();
    let bytes = io::read_file(&args.field).map_err(|e| CliError::from(e).context(&label))?;
    let field = io::decode_cf1(&bytes).map_err(|e| CliError::from(e).context(&label))?;
    let z1 = *cfg.z1_m.get_or_insert(field.z);
    let Some(z2) = cfg.z2_m else {
        return Err(CliError::config("propagate needs --z2"));
    };
    if !z2.is_finite() {
        return Err(CliError::config("--z2 must be finite"));
    }
    let mut moved = fresnel_propagate(&field, z2 - z1);
    moved.z = z2;
    let n = moved.grid.n();
    let mut out = Outputs::new(&args.out);
    out.add("propagated.cf1", io::encode_cf1(&moved));
    out.add("propagated.png", io::encode_png_gray(&moved.intensity().values, n)?);
    out.add_json(
        "propagate.resolved.json",
        &PropagateResolved {
            field: &args.field,
            config: cfg,
        },
    );
    out.commit()
}
