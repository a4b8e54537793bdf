//! Derivative-free Nelder–Mead simplex minimization.
//!
//! Uses the dimension-adaptive coefficients of Gao and Han, which behave
//! better than the classical ones beyond a handful of parameters. After the
//! simplex collapses the search is restarted around the best vertex until a
//! restart no longer improves the minimum.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    /// Convergence when the spread of vertex values falls below this.
    pub f_tol: f64,
    /// Convergence when every vertex lies within this distance of the best one.
    pub x_tol: f64,
    /// Maximum number of simplex rebuilds around the best vertex.
    pub max_rebuilds: usize,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_evals: 40_000,
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_rebuilds: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn simplex_around(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut s = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-12 { step * v[i].abs().max(0.1) } else { step };
        s.push(v);
    }
    s
}

pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    config: &NelderMeadConfig,
) -> Minimum {
    let dim = x0.len();
    let nf = dim as f64;
    let (alpha, beta, gamma, delta) = if dim > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0, &mut evals);
    let mut converged = false;
    let mut step = step;

    for _ in 0..=config.max_rebuilds {
        let mut pts = simplex_around(&best_x, step);
        let mut vals: Vec<f64> = pts.iter().map(|p| eval(p, &mut evals)).collect();
        let mut round_converged = false;
        while evals < config.max_evals {
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            pts = order.iter().map(|&i| pts[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let spread = vals[dim] - vals[0];
            let size = pts[1..]
                .iter()
                .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread <= config.f_tol * (1.0 + vals[0].abs()) && size <= config.x_tol.max(1e-300)
                || size <= 1e-14
            {
                round_converged = true;
                break;
            }

            let mut centroid = vec![0.0; dim];
            for p in &pts[..dim] {
                centroid.iter_mut().zip(p).for_each(|(c, v)| *c += v / nf);
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&pts[dim])
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(alpha);
            let fr = eval(&xr, &mut evals);
            if fr < vals[0] {
                let xe = along(alpha * beta);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    pts[dim] = xe;
                    vals[dim] = fe;
                } else {
                    pts[dim] = xr;
                    vals[dim] = fr;
                }
            } else if fr < vals[dim - 1] {
                pts[dim] = xr;
                vals[dim] = fr;
            } else {
                let (xc, fc) = if fr < vals[dim] {
                    let xc = along(alpha * gamma);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(-gamma);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < vals[dim].min(fr) {
                    pts[dim] = xc;
                    vals[dim] = fc;
                } else {
                    for i in 1..=dim {
                        let p: Vec<f64> = pts[0]
                            .iter()
                            .zip(&pts[i])
                            .map(|(b, v)| b + delta * (v - b))
                            .collect();
                        vals[i] = eval(&p, &mut evals);
                        pts[i] = p;
                    }
                }
            }
        }
        let (i, &fmin) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty simplex");
        let improved = fmin < best_f - config.f_tol * (1.0 + best_f.abs());
        if fmin < best_f {
            best_f = fmin;
            best_x = pts[i].clone();
        }
        converged = round_converged;
        if !improved || evals >= config.max_evals {
            break;
        }
        step *= 0.5;
    }
    Minimum {
        x: best_x,
        f: best_f,
        evals,
        converged,
    }
}
