//! Nelder-Mead simplex maximization on a box.
//!
//! The update rules, the initial-simplex construction (5% perturbation per
//! coordinate, 0.00025 for zeros), and the dual x/f spread termination follow
//! the classic simplex formulation; bounds are handled by clipping every
//! candidate vertex into the box before evaluation.

use super::{validate_start, NegEval, Objective, OptError, OptResult, Termination};

const RHO: f64 = 1.0; // reflection
const CHI: f64 = 2.0; // expansion
const PSI: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink
const NONZDELT: f64 = 0.05;
const ZDELT: f64 = 0.00025;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Maximum coordinate spread of the simplex at termination.
    pub xatol: f64,
    /// Maximum value spread of the simplex at termination.
    pub fatol: f64,
    /// Evaluation budget; defaults to 200 * dimension.
    pub maxfev: Option<u64>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            xatol: 1e-4,
            fatol: 1e-4,
            maxfev: None,
        }
    }
}

/// Maximize `obj` from `x0` with the simplex method, clipping candidates
/// into the box. Returns the best point ever evaluated.
pub fn nelder_mead<O: Objective + ?Sized>(
    obj: &mut O,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> Result<OptResult, OptError> {
    validate_start(obj, x0)?;
    let dim = obj.dim();
    let bounds = obj.bounds().to_vec();
    let maxfev = opts.maxfev.unwrap_or(200 * dim as u64);
    let mut eval = NegEval::new(obj);

    let mut sim: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    sim.push(x0.to_vec());
    for k in 0..dim {
        let mut vertex = x0.to_vec();
        if vertex[k] != 0.0 {
            vertex[k] *= 1.0 + NONZDELT;
        } else {
            vertex[k] = ZDELT;
        }
        sim.push(vertex);
    }
    for vertex in &mut sim {
        // A perturbation past the upper bound is reflected into the interior
        // so the initial simplex does not collapse onto the bound.
        for (x, b) in vertex.iter_mut().zip(&bounds) {
            if *x > b.hi {
                *x = 2.0 * b.hi - *x;
            }
            *x = b.clamp(*x);
        }
    }
    let mut fsim: Vec<f64> = sim.iter().map(|v| eval.call(v)).collect();
    sort_simplex(&mut sim, &mut fsim);

    let termination = loop {
        if eval.count >= maxfev {
            break Termination::MaxEvaluations;
        }
        let xspread = sim[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&sim[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let fspread = fsim[1..]
            .iter()
            .map(|f| (f - fsim[0]).abs())
            .fold(0.0, f64::max);
        if xspread <= opts.xatol && fspread <= opts.fatol {
            break Termination::SimplexTolerance;
        }

        let mut centroid = vec![0.0; dim];
        for vertex in &sim[..dim] {
            for (c, x) in centroid.iter_mut().zip(vertex) {
                *c += x / dim as f64;
            }
        }
        let combine = |a: f64, b: f64| -> Vec<f64> {
            let mut v: Vec<f64> = centroid
                .iter()
                .zip(&sim[dim])
                .map(|(c, w)| a * c + b * w)
                .collect();
            for (x, bound) in v.iter_mut().zip(&bounds) {
                *x = bound.clamp(*x);
            }
            v
        };

        let xr = combine(1.0 + RHO, -RHO);
        let fxr = eval.call(&xr);
        let mut shrink = false;
        if fxr < fsim[0] {
            let xe = combine(1.0 + RHO * CHI, -(RHO * CHI));
            let fxe = eval.call(&xe);
            if fxe < fxr {
                sim[dim] = xe;
                fsim[dim] = fxe;
            } else {
                sim[dim] = xr;
                fsim[dim] = fxr;
            }
        } else if fxr < fsim[dim - 1] {
            sim[dim] = xr;
            fsim[dim] = fxr;
        } else {
            if fxr < fsim[dim] {
                let xc = combine(1.0 + PSI * RHO, -(PSI * RHO));
                let fxc = eval.call(&xc);
                if fxc <= fxr {
                    sim[dim] = xc;
                    fsim[dim] = fxc;
                } else {
                    shrink = true;
                }
            } else {
                let xcc = combine(1.0 - PSI, PSI);
                let fxcc = eval.call(&xcc);
                if fxcc < fsim[dim] {
                    sim[dim] = xcc;
                    fsim[dim] = fxcc;
                } else {
                    shrink = true;
                }
            }
            if shrink {
                for j in 1..=dim {
                    let mut vertex: Vec<f64> = sim[0]
                        .iter()
                        .zip(&sim[j])
                        .map(|(best, x)| best + SIGMA * (x - best))
                        .collect();
                    for (x, b) in vertex.iter_mut().zip(&bounds) {
                        *x = b.clamp(*x);
                    }
                    fsim[j] = eval.call(&vertex);
                    sim[j] = vertex;
                }
            }
        }
        sort_simplex(&mut sim, &mut fsim);
    };

    Ok(eval.into_result(termination))
}

fn sort_simplex(sim: &mut [Vec<f64>], fsim: &mut [f64]) {
    let mut order: Vec<usize> = (0..fsim.len()).collect();
    order.sort_by(|&a, &b| fsim[a].total_cmp(&fsim[b]));
    let sim_old = sim.to_vec();
    let fsim_old = fsim.to_vec();
    for (slot, &src) in order.iter().enumerate() {
        sim[slot] = sim_old[src].clone();
        fsim[slot] = fsim_old[src];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::{Bound, FnObjective};

    #[test]
    fn one_dimensional_quadratic() {
        let mut obj = FnObjective::new(vec![Bound::new(-1.0, 1.0)], |x: &[f64]| {
            -(x[0] - 0.3).powi(2)
        });
        let result = nelder_mead(&mut obj, &[0.0], &NelderMeadOptions::default()).unwrap();
        assert!((result.best_x[0] - 0.3).abs() < 1e-3);
        assert!(result.converged);
    }

    #[test]
    fn maximum_on_the_boundary() {
        // The peak at x = 2 is outside the box, so the boundary wins.
        let mut obj =
            FnObjective::new(vec![Bound::new(0.0, 1.0)], |x: &[f64]| -(x[0] - 2.0).powi(2));
        let result = nelder_mead(&mut obj, &[0.5], &NelderMeadOptions::default()).unwrap();
        assert_eq!(result.best_x[0], 1.0);
    }

    #[test]
    fn four_dimensional_quadratic() {
        let center = [0.1, 0.2, 0.3, 0.4];
        let mut obj = FnObjective::new(vec![Bound::new(-1.0, 1.0); 4], move |x: &[f64]| {
            -x.iter()
                .zip(&center)
                .map(|(xi, ci)| (xi - ci).powi(2))
                .sum::<f64>()
        });
        let result = nelder_mead(&mut obj, &[0.0; 4], &NelderMeadOptions::default()).unwrap();
        for (got, want) in result.best_x.iter().zip(center) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
        assert!(result.nfev > 5);
    }

    #[test]
    fn budget_is_respected() {
        let mut obj = FnObjective::new(vec![Bound::new(-10.0, 10.0); 3], |x: &[f64]| {
            -(x[0].powi(2) + x[1].powi(2) + x[2].powi(2))
        });
        let opts = NelderMeadOptions {
            maxfev: Some(20),
            ..Default::default()
        };
        let result = nelder_mead(&mut obj, &[5.0, -5.0, 5.0], &opts).unwrap();
        assert_eq!(result.termination, Termination::MaxEvaluations);
        // The loop may finish the iteration in flight; it never starts a new
        // one past the budget.
        assert!(result.nfev <= 20 + 5);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut obj = FnObjective::new(vec![Bound::new(-2.0, 2.0); 2], |x: &[f64]| {
                -((x[0] - 0.7).powi(2) + (x[1] + 0.4).powi(2)) + (3.0 * x[0]).sin() * 0.01
            });
            nelder_mead(&mut obj, &[0.1, 0.1], &NelderMeadOptions::default()).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_start_uses_absolute_perturbation() {
        // x0 = 0 must not produce a degenerate simplex.
        let mut obj = FnObjective::new(vec![Bound::new(-1.0, 1.0)], |x: &[f64]| -x[0].powi(2));
        let result = nelder_mead(&mut obj, &[0.0], &NelderMeadOptions::default()).unwrap();
        assert!(result.best_x[0].abs() < 1e-3);
        assert!(result.nfev >= 2);
    }
}
