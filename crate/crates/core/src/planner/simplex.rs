//! Nelder–Mead simplex minimisation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One accepted iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub evaluations: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop when `f_worst - f_best <= tolerance * max(|f_best|, 1e-300)`.
    pub tolerance: f64,
    /// Offset added to each coordinate of the start to build the simplex.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tolerance: 1e-6,
            initial_step: 0.1,
        }
    }
}

impl NelderMead {
    /// Minimises `f` from `x0` using at most `budget` evaluations. The
    /// start point is always evaluated, so a budget of 0 or 1 returns `x0`.
    pub fn minimize<F>(&self, f: F, x0: &[f64], budget: usize) -> SimplexResult
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let n = x0.len();
        let f0 = f(x0);
        let mut evals = 1;
        let mut trace = vec![TraceRecord {
            iteration: 0,
            evaluations: evals,
            objective: f0,
        }];
        if n == 0 || budget <= n {
            return SimplexResult {
                x: x0.to_vec(),
                value: f0,
                evaluations: evals,
                converged: n == 0,
                trace,
            };
        }
        let vertices: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut v = x0.to_vec();
                v[i] += self.initial_step;
                v
            })
            .collect();
        let values: Vec<f64> = vertices.par_iter().map(|v| f(v)).collect();
        evals += n;
        let mut simplex: Vec<(Vec<f64>, f64)> = std::iter::once((x0.to_vec(), f0))
            .chain(vertices.into_iter().zip(values))
            .collect();
        let mut converged = false;
        let mut iteration = 0;

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if worst - best <= self.tolerance * best.abs().max(1e-300) {
                converged = true;
                break;
            }
            if evals >= budget {
                break;
            }
            iteration += 1;

            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(self.reflection);
            let fr = f(&xr);
            evals += 1;
            let second_worst = simplex[n - 1].1;

            if fr < best {
                if evals < budget {
                    let xe = along(self.reflection * self.expansion);
                    let fe = f(&xe);
                    evals += 1;
                    simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                } else {
                    simplex[n] = (xr, fr);
                }
            } else if fr < second_worst {
                simplex[n] = (xr, fr);
            } else if evals < budget {
                let outside = fr < worst;
                let t = if outside {
                    self.reflection * self.contraction
                } else {
                    -self.contraction
                };
                let xc = along(t);
                let fc = f(&xc);
                evals += 1;
                let limit = if outside { fr } else { worst };
                if fc <= limit {
                    simplex[n] = (xc, fc);
                } else if evals + n <= budget {
                    let x_best = simplex[0].0.clone();
                    let shrunk: Vec<Vec<f64>> = simplex[1..]
                        .iter()
                        .map(|(v, _)| {
                            v.iter()
                                .zip(&x_best)
                                .map(|(x, b)| b + self.shrink * (x - b))
                                .collect()
                        })
                        .collect();
                    let values: Vec<f64> = shrunk.par_iter().map(|v| f(v)).collect();
                    evals += n;
                    for (slot, pair) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(values))
                    {
                        *slot = pair;
                    }
                } else {
                    break;
                }
            } else {
                break;
            }

            let current = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            trace.push(TraceRecord {
                iteration,
                evaluations: evals,
                objective: current,
            });
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        SimplexResult {
            x,
            value,
            evaluations: evals,
            converged,
            trace,
        }
    }
}
