//! Bounded limited-memory quasi-Newton maximization (L-BFGS-B).
//!
//! Follows the Byrd-Lu-Nocedal-Zhu formulation: a generalized Cauchy point
//! along the projected steepest-descent path fixes the active set, a direct
//! primal subspace minimization refines the free variables, and a strong
//! Wolfe line search picks the step. Gradients come from forward finite
//! differences; every probe counts toward `nfev` like any other evaluation.

use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

use super::{validate_start, NegEval, Objective, OptError, OptResult, Termination};

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct LbfgsbOptions {
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Projected-gradient max-norm convergence threshold.
    pub pgtol: f64,
    /// Relative objective-improvement convergence threshold.
    pub ftol_rel: f64,
    /// Evaluation budget (finite-difference probes included).
    pub maxfev: u64,
    /// Forward-difference step scale: h_i = fd_step * max(1, |x_i|).
    pub fd_step: f64,
    /// Trial cap for each line-search phase.
    pub max_line_search: usize,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        LbfgsbOptions {
            memory: 10,
            pgtol: 1e-5,
            ftol_rel: 2.22e-9,
            maxfev: 15_000,
            fd_step: 1e-8,
            max_line_search: 20,
        }
    }
}

/// Maximize `obj` from `x0` subject to the objective's box bounds.
/// Returns the best point ever evaluated.
pub fn bounded_quasi_newton<O: Objective + ?Sized>(
    obj: &mut O,
    x0: &[f64],
    opts: &LbfgsbOptions,
) -> Result<OptResult, OptError> {
    validate_start(obj, x0)?;
    let dim = obj.dim();
    let lower = DVector::from_iterator(dim, obj.bounds().iter().map(|b| b.lo));
    let upper = DVector::from_iterator(dim, obj.bounds().iter().map(|b| b.hi));
    let mut eval = NegEval::new(obj);

    let mut x = DVector::from_column_slice(x0);
    let mut phi = eval.call(x.as_slice());
    let mut grad = fd_gradient(&mut eval, &x, phi, &lower, &upper, opts.fd_step);
    let mut memory = Memory::new(dim, opts.memory);

    let termination = loop {
        if projected_gradient_norm(&x, &grad, &lower, &upper) < opts.pgtol {
            break Termination::ProjectedGradient;
        }
        if eval.count >= opts.maxfev {
            break Termination::MaxEvaluations;
        }

        let mut direction = memory.search_direction(&x, &grad, &lower, &upper);
        let mut slope = grad.dot(&direction);
        if !(slope < 0.0) {
            // The model step is not a descent direction; fall back to the
            // projected steepest descent step.
            direction = projected_steepest_descent(&x, &grad, &lower, &upper);
            slope = grad.dot(&direction);
            if !(slope < 0.0) {
                break Termination::ProjectedGradient;
            }
        }
        let max_step = feasible_step(&x, &direction, &lower, &upper);

        match line_search(
            &mut eval, &x, &direction, phi, slope, max_step, &lower, &upper, opts,
        ) {
            LineSearch::Accepted {
                step,
                phi: phi_new,
                grad: grad_new,
            } => {
                let x_new = &x + direction.scale(step);
                let s = &x_new - &x;
                let y = &grad_new - &grad;
                let small_improvement =
                    (phi - phi_new) <= opts.ftol_rel * phi.abs().max(phi_new.abs()).max(1.0);
                memory.update(s, y);
                x = x_new;
                phi = phi_new;
                grad = grad_new;
                if small_improvement {
                    break Termination::FunctionTolerance;
                }
            }
            LineSearch::Failed => {
                if memory.is_empty() {
                    break Termination::LineSearchFailed;
                }
                // Stale curvature can poison the direction; retry from a
                // fresh memory.
                memory.clear();
            }
            LineSearch::OutOfBudget => break Termination::MaxEvaluations,
        }
    };

    Ok(eval.into_result(termination))
}

/// Forward differences with h_i = fd_step * max(1, |x_i|); a probe that
/// would cross the upper bound flips to a backward difference.
fn fd_gradient<O: Objective + ?Sized>(
    eval: &mut NegEval<'_, O>,
    x: &DVector<f64>,
    phi_x: f64,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    fd_step: f64,
) -> DVector<f64> {
    let dim = x.len();
    let mut grad = DVector::zeros(dim);
    let mut probe = x.clone();
    for i in 0..dim {
        let h = fd_step * x[i].abs().max(1.0);
        if x[i] + h <= upper[i] {
            probe[i] = x[i] + h;
            grad[i] = (eval.call(probe.as_slice()) - phi_x) / h;
        } else {
            let step = h.min(x[i] - lower[i]);
            probe[i] = x[i] - step;
            grad[i] = (phi_x - eval.call(probe.as_slice())) / step;
        }
        probe[i] = x[i];
    }
    grad
}

/// Max-norm of P(x - g) - x, the standard bounded first-order residual.
fn projected_gradient_norm(
    x: &DVector<f64>,
    grad: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> f64 {
    (0..x.len())
        .map(|i| ((x[i] - grad[i]).clamp(lower[i], upper[i]) - x[i]).abs())
        .fold(0.0, f64::max)
}

fn projected_steepest_descent(
    x: &DVector<f64>,
    grad: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| (x[i] - grad[i]).clamp(lower[i], upper[i]) - x[i]),
    )
}

/// Largest t with x + t*d inside the box.
fn feasible_step(
    x: &DVector<f64>,
    d: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> f64 {
    let mut max_step: f64 = 1e8;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            max_step = max_step.min((upper[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            max_step = max_step.min((lower[i] - x[i]) / d[i]);
        }
    }
    max_step.max(0.0)
}

enum LineSearch {
    Accepted {
        step: f64,
        phi: f64,
        grad: DVector<f64>,
    },
    Failed,
    OutOfBudget,
}

/// Strong Wolfe search along `direction` (Nocedal & Wright Alg. 3.5/3.6 with
/// bisection zoom). Every trial costs one value evaluation plus, when the
/// curvature condition is tested, one finite-difference gradient.
#[allow(clippy::too_many_arguments)]
fn line_search<O: Objective + ?Sized>(
    eval: &mut NegEval<'_, O>,
    x: &DVector<f64>,
    direction: &DVector<f64>,
    phi0: f64,
    slope0: f64,
    max_step: f64,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    opts: &LbfgsbOptions,
) -> LineSearch {
    if max_step <= 0.0 {
        return LineSearch::Failed;
    }
    let point_at = |t: f64| x + direction.scale(t);
    let armijo = |t: f64, phi_t: f64| phi_t <= phi0 + WOLFE_C1 * t * slope0;

    // Bracketing phase: (lo, phi_lo, grad_lo, hi) for the zoom.
    let (mut lo, mut phi_lo, mut grad_lo, mut hi) = 'bracket: {
        let mut prev = 0.0;
        let mut phi_prev = phi0;
        let mut t = max_step.min(1.0);
        let mut iter = 0;
        loop {
            if eval.count >= opts.maxfev {
                return LineSearch::OutOfBudget;
            }
            let xt = point_at(t);
            let phi_t = eval.call(xt.as_slice());
            if !armijo(t, phi_t) || (iter > 0 && phi_t >= phi_prev) {
                break 'bracket (prev, phi_prev, None, t);
            }
            let grad_t = fd_gradient(eval, &xt, phi_t, lower, upper, opts.fd_step);
            let slope_t = grad_t.dot(direction);
            if slope_t.abs() <= -WOLFE_C2 * slope0 {
                return LineSearch::Accepted {
                    step: t,
                    phi: phi_t,
                    grad: grad_t,
                };
            }
            if slope_t >= 0.0 {
                break 'bracket (t, phi_t, Some(grad_t), prev);
            }
            if t >= max_step {
                // The box blocks any longer step; the sufficient-decrease
                // condition holds, so take the bounded step.
                return LineSearch::Accepted {
                    step: t,
                    phi: phi_t,
                    grad: grad_t,
                };
            }
            prev = t;
            phi_prev = phi_t;
            t = (2.0 * t).min(max_step);
            iter += 1;
            if iter >= opts.max_line_search {
                return LineSearch::Accepted {
                    step: prev,
                    phi: phi_prev,
                    grad: grad_t,
                };
            }
        }
    };

    // Zoom phase: bisect [lo, hi] keeping the Wolfe invariants.
    for _ in 0..opts.max_line_search {
        if eval.count >= opts.maxfev {
            return LineSearch::OutOfBudget;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || (hi - lo).abs() < 1e-14 {
            break;
        }
        let xm = point_at(mid);
        let phi_m = eval.call(xm.as_slice());
        if !armijo(mid, phi_m) || phi_m >= phi_lo {
            hi = mid;
        } else {
            let grad_m = fd_gradient(eval, &xm, phi_m, lower, upper, opts.fd_step);
            let slope_m = grad_m.dot(direction);
            if slope_m.abs() <= -WOLFE_C2 * slope0 {
                return LineSearch::Accepted {
                    step: mid,
                    phi: phi_m,
                    grad: grad_m,
                };
            }
            if slope_m * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = mid;
            phi_lo = phi_m;
            grad_lo = Some(grad_m);
        }
    }

    // Zoom exhausted: accept the best interior point if it strictly
    // improves, computing its gradient if the loop never did.
    if lo > 0.0 && phi_lo < phi0 {
        let grad = match grad_lo {
            Some(g) => g,
            None => {
                if eval.count >= opts.maxfev {
                    return LineSearch::OutOfBudget;
                }
                let xl = point_at(lo);
                fd_gradient(eval, &xl, phi_lo, lower, upper, opts.fd_step)
            }
        };
        return LineSearch::Accepted {
            step: lo,
            phi: phi_lo,
            grad,
        };
    }
    LineSearch::Failed
}

/// Limited-memory curvature store with the compact W/M representation of
/// Byrd et al. (eqs. 3.3-3.6).
struct Memory {
    capacity: usize,
    s_pairs: VecDeque<DVector<f64>>,
    y_pairs: VecDeque<DVector<f64>>,
    theta: f64,
    w: DMatrix<f64>,
    m: DMatrix<f64>,
}

impl Memory {
    fn new(dim: usize, capacity: usize) -> Self {
        Memory {
            capacity,
            s_pairs: VecDeque::new(),
            y_pairs: VecDeque::new(),
            theta: 1.0,
            w: DMatrix::zeros(dim, 0),
            m: DMatrix::zeros(0, 0),
        }
    }

    fn is_empty(&self) -> bool {
        self.s_pairs.is_empty()
    }

    fn clear(&mut self) {
        let dim = self.w.nrows();
        self.s_pairs.clear();
        self.y_pairs.clear();
        self.theta = 1.0;
        self.w = DMatrix::zeros(dim, 0);
        self.m = DMatrix::zeros(0, 0);
    }

    fn update(&mut self, s: DVector<f64>, y: DVector<f64>) {
        let sy = s.dot(&y);
        let yy = y.dot(&y);
        if sy <= f64::EPSILON * yy {
            return; // curvature too weak; keep the previous model
        }
        self.s_pairs.push_back(s);
        self.y_pairs.push_back(y);
        if self.s_pairs.len() > self.capacity {
            self.s_pairs.pop_front();
            self.y_pairs.pop_front();
        }
        self.theta = yy / sy;
        self.rebuild();
    }

    fn rebuild(&mut self) {
        let k = self.s_pairs.len();
        let dim = self.w.nrows();
        let s_mat = DMatrix::from_fn(dim, k, |i, j| self.s_pairs[j][i]);
        let y_mat = DMatrix::from_fn(dim, k, |i, j| self.y_pairs[j][i]);

        let mut w = DMatrix::zeros(dim, 2 * k);
        w.view_mut((0, 0), (dim, k)).copy_from(&y_mat);
        w.view_mut((0, k), (dim, k))
            .copy_from(&s_mat.scale(self.theta));

        let s_tr_y = s_mat.transpose() * &y_mat;
        let d_vec = s_tr_y.diagonal();
        let mut l_mat = s_tr_y.lower_triangle();
        l_mat.set_diagonal(&DVector::from_element(k, 0.0));
        let mut m_inv = DMatrix::zeros(2 * k, 2 * k);
        m_inv
            .view_mut((0, 0), (k, k))
            .set_diagonal(&(-&d_vec));
        m_inv.view_mut((k, 0), (k, k)).copy_from(&l_mat);
        m_inv.view_mut((0, k), (k, k)).copy_from(&l_mat.transpose());
        m_inv
            .view_mut((k, k), (k, k))
            .copy_from(&(s_mat.transpose() * &s_mat).scale(self.theta));
        match m_inv.try_inverse() {
            Some(inv) => {
                self.w = w;
                self.m = inv;
            }
            None => self.clear(),
        }
    }

    /// Generalized Cauchy point along the projected gradient path
    /// (Byrd et al. eqs. 4.1-4.2), the accumulated c = W^T (x_cp - x), and
    /// the indices still strictly inside the box at x_cp.
    fn cauchy_point(
        &self,
        x: &DVector<f64>,
        grad: &DVector<f64>,
        lower: &DVector<f64>,
        upper: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, Vec<usize>) {
        let dim = x.len();
        let cols = self.w.ncols();
        let mut breakpoints = DVector::zeros(dim);
        let mut d = DVector::zeros(dim);
        for i in 0..dim {
            let t_i = if grad[i] < 0.0 {
                (x[i] - upper[i]) / grad[i]
            } else if grad[i] > 0.0 {
                (x[i] - lower[i]) / grad[i]
            } else {
                f64::INFINITY
            };
            breakpoints[i] = t_i;
            d[i] = if t_i < f64::EPSILON { 0.0 } else { -grad[i] };
        }
        let mut order: Vec<usize> = (0..dim).filter(|&i| breakpoints[i] > 0.0).collect();
        order.sort_by(|&a, &b| breakpoints[a].total_cmp(&breakpoints[b]));

        let mut x_cp = x.clone();
        let mut c = DVector::zeros(cols);
        if order.is_empty() {
            return (x_cp, c, Vec::new());
        }

        let mut p = self.w.transpose() * &d;
        let mut df = -d.dot(&d);
        if df >= 0.0 {
            return (x_cp, c, Vec::new());
        }
        let mut ddf = -self.theta * df - p.dot(&(&self.m * &p));
        let mut dt_min = -df / ddf;
        let mut t_old = 0.0;

        let mut pos = 0;
        let mut b = order[0];
        let mut t_b = breakpoints[b];
        let mut dt_b = t_b - t_old;

        while dt_min >= dt_b && pos < order.len() {
            x_cp[b] = if d[b] > 0.0 { upper[b] } else { lower[b] };
            let z_b = x_cp[b] - x[b];
            c += p.scale(dt_b);
            let g_b = grad[b];
            let w_b = self.w.row(b).transpose();
            let m_c = &self.m * &c;
            let m_p = &self.m * &p;
            let m_w = &self.m * &w_b;
            df += dt_b * ddf + g_b * (self.theta * z_b + g_b - w_b.dot(&m_c));
            ddf -= g_b * (self.theta * g_b - 2.0 * w_b.dot(&m_p) - g_b * w_b.dot(&m_w));
            p += w_b.scale(g_b);
            d[b] = 0.0;
            if ddf <= 0.0 {
                dt_min = f64::INFINITY;
            } else {
                dt_min = -df / ddf;
            }
            t_old = t_b;
            pos += 1;
            if pos < order.len() {
                b = order[pos];
                t_b = breakpoints[b];
                dt_b = t_b - t_old;
            } else {
                t_b = f64::INFINITY;
                dt_b = f64::INFINITY;
            }
        }
        if !dt_min.is_finite() {
            dt_min = 0.0;
        }
        dt_min = dt_min.max(0.0).min(dt_b);
        t_old += dt_min;
        for i in 0..dim {
            x_cp[i] += t_old * d[i];
            x_cp[i] = x_cp[i].clamp(lower[i], upper[i]);
        }
        c += p.scale(dt_min);

        let free = (0..dim)
            .filter(|&i| x_cp[i] > lower[i] && x_cp[i] < upper[i])
            .collect();
        (x_cp, c, free)
    }

    /// Direct primal subspace minimization over the free variables
    /// (Byrd et al. eqs. 5.4-5.11), truncated to stay inside the box.
    fn subspace_min(
        &self,
        x: &DVector<f64>,
        grad: &DVector<f64>,
        x_cp: &DVector<f64>,
        c: &DVector<f64>,
        free: &[usize],
        lower: &DVector<f64>,
        upper: &DVector<f64>,
    ) -> DVector<f64> {
        let n_free = free.len();
        let cols = self.w.ncols();

        let mut r_hat = DVector::zeros(n_free);
        let w_m_c = &self.w * (&self.m * c);
        for (slot, &i) in free.iter().enumerate() {
            r_hat[slot] = grad[i] + self.theta * (x_cp[i] - x[i]) - w_m_c[i];
        }

        // W^T Z: the rows of W at the free indices, transposed.
        let w_tr_z = DMatrix::from_fn(cols, n_free, |r, slot| self.w[(free[slot], r)]);

        let d_hat = if cols == 0 {
            -r_hat.scale(1.0 / self.theta)
        } else {
            let n_mat = DMatrix::identity(cols, cols)
                - (&self.m * (&w_tr_z * w_tr_z.transpose())).scale(1.0 / self.theta);
            let rhs = &self.m * (&w_tr_z * &r_hat);
            match n_mat.lu().solve(&rhs) {
                Some(v) => {
                    -(&r_hat + (w_tr_z.transpose() * v).scale(1.0 / self.theta))
                        .scale(1.0 / self.theta)
                }
                None => -r_hat.scale(1.0 / self.theta),
            }
        };

        let mut alpha: f64 = 1.0;
        for (slot, &i) in free.iter().enumerate() {
            if d_hat[slot] > 0.0 {
                alpha = alpha.min((upper[i] - x_cp[i]) / d_hat[slot]);
            } else if d_hat[slot] < 0.0 {
                alpha = alpha.min((lower[i] - x_cp[i]) / d_hat[slot]);
            }
        }
        let alpha = alpha.max(0.0);

        let mut x_bar = x_cp.clone();
        for (slot, &i) in free.iter().enumerate() {
            x_bar[i] += alpha * d_hat[slot];
        }
        x_bar
    }

    fn search_direction(
        &self,
        x: &DVector<f64>,
        grad: &DVector<f64>,
        lower: &DVector<f64>,
        upper: &DVector<f64>,
    ) -> DVector<f64> {
        let (x_cp, c, free) = self.cauchy_point(x, grad, lower, upper);
        let x_bar = if free.is_empty() {
            x_cp
        } else {
            self.subspace_min(x, grad, &x_cp, &c, &free, lower, upper)
        };
        x_bar - x
    }
}
