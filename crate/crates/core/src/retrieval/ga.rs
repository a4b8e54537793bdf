//! Genetic search over Zernike phase coefficients.
//!
//! Each individual is a vector of Zernike coefficients. Its phase is applied to
//! the measured amplitude `√I1` at the first plane, the field is propagated to
//! the second plane and compared with `I2`. A generation is tournament
//! selection into a mating pool, BLX-α crossover of consecutive pairs, Gaussian
//! mutation, and elitism (the parent best replaces the worst child).
//!
//! All randomness comes from one `ChaCha8Rng` seeded with `GAConfig::seed` and
//! consumed in a fixed order by the single-threaded bookkeeping. Fitness
//! evaluation draws no random numbers, so it runs concurrently without
//! affecting reproducibility.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::Target;
use crate::error::{Error, Result};
use crate::field::{similarity, ComplexField, IntensityMap, PhaseMap};
use crate::modes::{zernike, ZernikeTerm};
use crate::propagation::propagate_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GAConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub mutation_mu: f64,
    pub mutation_sigma: f64,
    pub init_range: (f64, f64),
    pub blend_alpha: f64,
    pub seed: u64,
    /// Also score the first plane. Its amplitude is clamped to the data, so
    /// this only matters when the measured maps are inconsistent.
    pub two_plane: bool,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 30,
            tournament: 4,
            crossover_prob: 0.9,
            mutation_prob: 0.04,
            mutation_mu: 0.0,
            mutation_sigma: 0.5,
            init_range: (-20.0, 20.0),
            blend_alpha: 0.5,
            seed: 0,
            two_plane: false,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tournament < 2 || self.population < self.tournament {
            return Err(Error::param(format!(
                "need population >= tournament >= 2 (got {} and {})",
                self.population, self.tournament
            )));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("{name} = {p} not in [0, 1]")));
            }
        }
        if !(self.mutation_sigma >= 0.0) || !self.mutation_mu.is_finite() {
            return Err(Error::param("mutation noise must be finite with sigma >= 0"));
        }
        if !(self.init_range.0 <= self.init_range.1) {
            return Err(Error::param("init_range must be ordered"));
        }
        if !(self.blend_alpha >= 0.0) {
            return Err(Error::param("blend_alpha must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: Vec<f64>,
    /// Loss; `None` until evaluated.
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(genes: Vec<f64>) -> Self {
        Self {
            genes,
            fitness: None,
        }
    }

    fn loss(&self) -> f64 {
        self.fitness.unwrap_or(f64::INFINITY)
    }
}

/// Draws `k` distinct individuals uniformly and returns the fittest
/// (lowest loss; ties go to the earliest drawn).
pub fn ga_tournament_select<R: Rng + ?Sized>(
    population: &[Individual],
    k: usize,
    rng: &mut R,
) -> Result<Individual> {
    if k == 0 || k > population.len() {
        return Err(Error::param(format!(
            "tournament size {k} with population {}",
            population.len()
        )));
    }
    let winner = sample(rng, population.len(), k)
        .into_iter()
        .reduce(|a, b| {
            if population[b].loss() < population[a].loss() {
                b
            } else {
                a
            }
        })
        .expect("k >= 1");
    Ok(population[winner].clone())
}

/// BLX-α: each child gene is uniform on `[lo - α·d, hi + α·d]`, `d = hi - lo`.
pub fn ga_blend_crossover<R: Rng + ?Sized>(
    a: &Individual,
    b: &Individual,
    alpha: f64,
    rng: &mut R,
) -> (Individual, Individual) {
    assert_eq!(a.genes.len(), b.genes.len(), "gene lengths differ");
    let mut c1 = Vec::with_capacity(a.genes.len());
    let mut c2 = Vec::with_capacity(a.genes.len());
    for (&x, &y) in a.genes.iter().zip(&b.genes) {
        let (lo, hi) = (x.min(y), x.max(y));
        let d = hi - lo;
        if d == 0.0 {
            c1.push(x);
            c2.push(x);
            continue;
        }
        let (lo, hi) = (lo - alpha * d, hi + alpha * d);
        c1.push(rng.random_range(lo..=hi));
        c2.push(rng.random_range(lo..=hi));
    }
    (Individual::new(c1), Individual::new(c2))
}

/// Adds `Normal(μ, σ)` noise to each gene independently with probability `p_m`.
pub fn ga_gaussian_mutate<R: Rng + ?Sized>(
    ind: &Individual,
    p_m: f64,
    mu: f64,
    sigma: f64,
    rng: &mut R,
) -> Individual {
    let noise = Normal::new(mu, sigma).expect("sigma >= 0");
    let mut changed = false;
    let genes = ind
        .genes
        .iter()
        .map(|&g| {
            if rng.random_bool(p_m) {
                changed = true;
                g + noise.sample(rng)
            } else {
                g
            }
        })
        .collect();
    Individual {
        genes,
        fitness: if changed { None } else { ind.fitness },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZernikeCoefficients {
    pub aperture_radius: f64,
    /// `(n, m, γ)` triples.
    pub terms: Vec<(u32, i32, f64)>,
}

impl ZernikeCoefficients {
    pub fn to_terms(&self) -> Result<Vec<ZernikeTerm>> {
        self.terms
            .iter()
            .map(|&(n, m, g)| ZernikeTerm::new(n, m, g, self.aperture_radius))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_loss: f64,
    pub best_similarity: f64,
}

#[derive(Debug, Clone)]
pub struct GAResult {
    pub coefficients: ZernikeCoefficients,
    pub best: Individual,
    /// Generation 0 is the initial population.
    pub history: Vec<GenerationRecord>,
    /// Best field at the first plane.
    pub field_z1: ComplexField,
    /// Best field propagated to the second plane.
    pub field_z2: ComplexField,
}

impl GAResult {
    pub fn phase(&self) -> PhaseMap {
        self.field_z1.phase()
    }
}

struct Model {
    amplitude: ComplexField,
    /// Zernike values per gene, flattened gene-major.
    basis: Vec<Vec<f64>>,
    dz: f64,
    t1: Target,
    t2: Target,
    i2: IntensityMap,
    two_plane: bool,
}

impl Model {
    fn fields(&self, genes: &[f64]) -> (ComplexField, ComplexField) {
        let values = self
            .amplitude
            .values
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let phase: f64 = genes.iter().zip(&self.basis).map(|(g, z)| g * z[k]).sum();
                a * Complex64::from_polar(1.0, phase)
            })
            .collect();
        let f1 = self.amplitude.with_values(values);
        let f2 = propagate_unchecked(&f1, self.dz);
        (f1, f2)
    }

    fn loss(&self, genes: &[f64]) -> f64 {
        let (f1, f2) = self.fields(genes);
        let l2 = self.t2.l1(&f2.values);
        if self.two_plane {
            l2 + self.t1.l1(&f1.values)
        } else {
            l2
        }
    }

    fn similarity(&self, genes: &[f64]) -> f64 {
        let (_, f2) = self.fields(genes);
        similarity(&f2.intensity(), &self.i2).unwrap_or(0.0)
    }
}

fn evaluate(model: &Model, pop: &mut [Individual]) {
    pop.par_iter_mut()
        .filter(|ind| ind.fitness.is_none())
        .for_each(|ind| ind.fitness = Some(model.loss(&ind.genes)));
}

fn best_index(pop: &[Individual]) -> usize {
    pop.iter()
        .enumerate()
        .reduce(|a, b| if b.1.loss() < a.1.loss() { b } else { a })
        .expect("non-empty population")
        .0
}

/// Runs the genetic search.
///
/// `zernike_set` lists the `(n, m)` genes; all share `aperture_radius`.
/// The field at `z1` is `√I1·exp(iΣγZ)` propagated by `z2 - z1` at `wavelength`.
#[allow(clippy::too_many_arguments)]
pub fn ga_run(
    i1: &IntensityMap,
    i2: &IntensityMap,
    z1: f64,
    z2: f64,
    zernike_set: &[(u32, i32)],
    aperture_radius: f64,
    wavelength: f64,
    config: &GAConfig,
) -> Result<GAResult> {
    config.validate()?;
    i1.grid.check_same(&i2.grid)?;
    if zernike_set.is_empty() {
        return Err(Error::param("empty Zernike set"));
    }
    let grid = i1.grid;
    if !(aperture_radius > 0.0) || aperture_radius > grid.extent() / 2.0 {
        return Err(Error::param("aperture radius must be > 0 and fit in the window"));
    }
    let basis = zernike_set
        .iter()
        .map(|&(n, m)| {
            (0..grid.len())
                .map(|k| {
                    let (x, y) = grid.xy(k);
                    zernike(n, m, (x * x + y * y).sqrt() / aperture_radius, y.atan2(x))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let model = Model {
        amplitude: i1.normalized()?.sqrt_field(wavelength, z1)?,
        basis,
        dz: z2 - z1,
        t1: Target::new(i1)?,
        t2: Target::new(i2)?,
        i2: i2.clone(),
        two_plane: config.two_plane,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = config.init_range;
    let genes = zernike_set.len();
    let mut pop: Vec<Individual> = (0..config.population)
        .map(|_| Individual::new((0..genes).map(|_| rng.random_range(lo..=hi)).collect()))
        .collect();
    evaluate(&model, &mut pop);

    let record = |generation: usize, pop: &[Individual]| {
        let b = &pop[best_index(pop)];
        GenerationRecord {
            generation,
            best_loss: b.loss(),
            best_similarity: model.similarity(&b.genes),
        }
    };
    let mut history = vec![record(0, &pop)];

    for generation in 1..=config.generations {
        let elite = pop[best_index(&pop)].clone();
        let pool: Vec<Individual> = (0..config.population)
            .map(|_| ga_tournament_select(&pop, config.tournament, &mut rng))
            .collect::<Result<_>>()?;
        let mut children = Vec::with_capacity(config.population);
        for pair in pool.chunks(2) {
            match pair {
                [a, b] => {
                    let (c1, c2) = if rng.random_bool(config.crossover_prob) {
                        ga_blend_crossover(a, b, config.blend_alpha, &mut rng)
                    } else {
                        (a.clone(), b.clone())
                    };
                    children.push(c1);
                    children.push(c2);
                }
                [a] => children.push(a.clone()),
                _ => unreachable!(),
            }
        }
        let mut children: Vec<Individual> = children
            .iter()
            .map(|c| {
                ga_gaussian_mutate(
                    c,
                    config.mutation_prob,
                    config.mutation_mu,
                    config.mutation_sigma,
                    &mut rng,
                )
            })
            .collect();
        evaluate(&model, &mut children);
        let worst = children
            .iter()
            .enumerate()
            .reduce(|a, b| if b.1.loss() > a.1.loss() { b } else { a })
            .expect("non-empty population")
            .0;
        children[worst] = elite;
        pop = children;
        history.push(record(generation, &pop));
    }

    let best = pop[best_index(&pop)].clone();
    let (field_z1, field_z2) = model.fields(&best.genes);
    Ok(GAResult {
        coefficients: ZernikeCoefficients {
            aperture_radius,
            terms: zernike_set
                .iter()
                .zip(&best.genes)
                .map(|(&(n, m), &g)| (n, m, g))
                .collect(),
        },
        best,
        history,
        field_z1,
        field_z2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Curvature, GridSpec};
    use crate::modes::{self, default_zernike_indices};
    use crate::propagation::fresnel_propagate;

    fn pop(fitness: &[f64]) -> Vec<Individual> {
        fitness
            .iter()
            .enumerate()
            .map(|(i, f)| Individual {
                genes: vec![i as f64],
                fitness: Some(*f),
            })
            .collect()
    }

    #[test]
    fn tournament_of_everyone_returns_the_best() {
        let p = pop(&[3.0, 1.0, 2.0, 5.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(ga_tournament_select(&p, 4, &mut rng).unwrap().fitness, Some(1.0));
        }
        let two = pop(&[1.0, 2.0]);
        for _ in 0..50 {
            assert_eq!(ga_tournament_select(&two, 2, &mut rng).unwrap().fitness, Some(1.0));
        }
        assert!(ga_tournament_select(&two, 3, &mut rng).is_err());
    }

    #[test]
    fn crossover_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Individual::new(vec![1.0, -2.0, 3.5]);
        let (c1, c2) = ga_blend_crossover(&a, &a, 0.5, &mut rng);
        assert_eq!(c1.genes, a.genes);
        assert_eq!(c2.genes, a.genes);
        let b = Individual::new(vec![2.0, 4.0, -1.0]);
        for _ in 0..1000 {
            let (c1, c2) = ga_blend_crossover(&a, &b, 0.0, &mut rng);
            for c in [c1, c2] {
                assert!(c.fitness.is_none());
                for ((g, x), y) in c.genes.iter().zip(&a.genes).zip(&b.genes) {
                    assert!(*g >= x.min(*y) && *g <= x.max(*y));
                }
            }
        }
    }

    #[test]
    fn mutation_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Individual {
            genes: vec![1.0, 2.0, 3.0],
            fitness: Some(0.5),
        };
        assert_eq!(ga_gaussian_mutate(&a, 0.0, 0.0, 1.0, &mut rng), a);
        let m = ga_gaussian_mutate(&a, 1.0, 0.5, 0.0, &mut rng);
        assert_eq!(m.genes, vec![1.5, 2.5, 3.5]);
        assert_eq!(m.fitness, None);
    }

    fn coma_planes(gamma: f64) -> (IntensityMap, IntensityMap, f64) {
        let g = GridSpec::new(64, 2e-5).unwrap();
        let lambda = 405e-9;
        let w = 2.5e-4;
        let a = 3.0e-4;
        let pump = modes::gaussian(&g, w, Curvature::Flat, lambda).unwrap();
        let phase = modes::zernike_surface(&g, &[ZernikeTerm::new(3, 1, gamma, a).unwrap()]).unwrap();
        let f = pump.with_values(
            pump.values
                .iter()
                .zip(&phase.values)
                .map(|(v, p)| v * Complex64::from_polar(1.0, *p))
                .collect(),
        );
        let f2 = fresnel_propagate(&f, 0.05);
        (f.intensity(), f2.intensity(), a)
    }

    #[test]
    fn history_is_monotone_and_deterministic() {
        let (i1, i2, a) = coma_planes(2.0);
        let cfg = GAConfig {
            population: 24,
            generations: 6,
            seed: 5,
            ..GAConfig::default()
        };
        let set = default_zernike_indices();
        let r = ga_run(&i1, &i2, 0.0, 0.05, &set, a, 405e-9, &cfg).unwrap();
        assert_eq!(r.history.len(), 7);
        for w in r.history.windows(2) {
            assert!(w[1].best_loss <= w[0].best_loss);
        }
        let again = ga_run(&i1, &i2, 0.0, 0.05, &set, a, 405e-9, &cfg).unwrap();
        assert_eq!(r.history, again.history);
        assert_eq!(r.coefficients, again.coefficients);
        assert_eq!(r.coefficients.terms.len(), 12);
    }

    #[test]
    fn null_aberration_beats_single_unit_terms() {
        let (i1, i2, a) = coma_planes(0.0);
        let set = default_zernike_indices();
        let cfg = GAConfig {
            seed: 11,
            init_range: (-1.0, 1.0),
            ..GAConfig::default()
        };
        let r = ga_run(&i1, &i2, 0.0, 0.05, &set, a, 405e-9, &cfg).unwrap();
        let best = r.best.fitness.unwrap();
        let amplitude = i1.normalized().unwrap().sqrt_field(405e-9, 0.0).unwrap();
        let target = Target::new(&i2).unwrap();
        for (j, &(n, m)) in set.iter().enumerate() {
            let mut genes = vec![0.0; set.len()];
            genes[j] = 1.0;
            let phase =
                modes::zernike_surface(&i1.grid, &[ZernikeTerm::new(n, m, 1.0, a).unwrap()])
                    .unwrap();
            let f = amplitude.with_values(
                amplitude
                    .values
                    .iter()
                    .zip(&phase.values)
                    .map(|(v, p)| v * Complex64::from_polar(1.0, *p))
                    .collect(),
            );
            let single = target.l1(&fresnel_propagate(&f, 0.05).values);
            assert!(best < single, "term ({n},{m}): {best} vs {single}");
        }
    }
}
