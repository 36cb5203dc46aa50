//! Bounded maximization with exact function-evaluation accounting.
//!
//! Both optimizers maximize an [`Objective`] over a box, count every call to
//! `evaluate` (finite-difference probes included), and return the best point
//! that was ever evaluated, so `best_value >= f(x0)` holds exactly.
//! Internally they minimize the negated objective; all reported values are
//! re-negated.

mod lbfgsb;
mod nelder_mead;

pub use lbfgsb::{bounded_quasi_newton, LbfgsbOptions};
pub use nelder_mead::{nelder_mead, NelderMeadOptions};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptError {
    #[error("start coordinate {index} = {value} lies outside [{lo}, {hi}]")]
    StartOutOfBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("x0 has dimension {x0}, objective has dimension {dim}")]
    DimensionMismatch { x0: usize, dim: usize },
    #[error("objective dimension must be >= 1")]
    EmptyDomain,
    #[error("free index {0} out of range for dimension {1}")]
    IndexOutOfRange(usize, usize),
    #[error("free index {0} listed twice")]
    DuplicateIndex(usize),
}

/// Closed interval constraint for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "bound [{lo}, {hi}] is empty");
        Bound { lo, hi }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }
}

/// A real function over a box, with a monotone evaluation counter.
///
/// `evaluate` must increase `nfev` by exactly one per call; optimizers rely
/// on this to report costs that match the underlying counter.
pub trait Objective {
    fn dim(&self) -> usize;
    fn bounds(&self) -> &[Bound];
    fn evaluate(&mut self, x: &[f64]) -> f64;
    fn nfev(&self) -> u64;
}

/// Wrap a closure as an [`Objective`].
pub struct FnObjective<F: FnMut(&[f64]) -> f64> {
    f: F,
    bounds: Vec<Bound>,
    nfev: u64,
}

impl<F: FnMut(&[f64]) -> f64> FnObjective<F> {
    pub fn new(bounds: Vec<Bound>, f: F) -> Self {
        FnObjective { f, bounds, nfev: 0 }
    }
}

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.nfev += 1;
        (self.f)(x)
    }

    fn nfev(&self) -> u64 {
        self.nfev
    }
}

/// View of an objective with all but `free` coordinates frozen.
///
/// Evaluations pass through to the underlying objective, so its counter
/// advances together with the restriction's own.
pub struct Restriction<'a, O: Objective + ?Sized> {
    inner: &'a mut O,
    full: Vec<f64>,
    free: Vec<usize>,
    bounds: Vec<Bound>,
    nfev: u64,
}

/// Restrict `obj` to the coordinates in `free`, freezing the rest at the
/// values in `fixed`.
pub fn restrict<'a, O: Objective + ?Sized>(
    obj: &'a mut O,
    fixed: &[f64],
    free: &[usize],
) -> Result<Restriction<'a, O>, OptError> {
    if fixed.len() != obj.dim() {
        return Err(OptError::DimensionMismatch {
            x0: fixed.len(),
            dim: obj.dim(),
        });
    }
    let mut seen = vec![false; obj.dim()];
    for &i in free {
        if i >= obj.dim() {
            return Err(OptError::IndexOutOfRange(i, obj.dim()));
        }
        if seen[i] {
            return Err(OptError::DuplicateIndex(i));
        }
        seen[i] = true;
    }
    let bounds = free.iter().map(|&i| obj.bounds()[i]).collect();
    Ok(Restriction {
        inner: obj,
        full: fixed.to_vec(),
        free: free.to_vec(),
        bounds,
        nfev: 0,
    })
}

impl<O: Objective + ?Sized> Objective for Restriction<'_, O> {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    fn evaluate(&mut self, x: &[f64]) -> f64 {
        for (slot, &i) in self.free.iter().enumerate() {
            self.full[i] = x[slot];
        }
        self.nfev += 1;
        self.inner.evaluate(&self.full)
    }

    fn nfev(&self) -> u64 {
        self.nfev
    }
}

/// Why an optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Simplex spread fell below both tolerances (Nelder-Mead).
    SimplexTolerance,
    /// Projected-gradient max-norm fell below tolerance (quasi-Newton).
    ProjectedGradient,
    /// Relative objective improvement fell below tolerance (quasi-Newton).
    FunctionTolerance,
    /// Evaluation budget exhausted.
    MaxEvaluations,
    /// Line search could not make progress.
    LineSearchFailed,
}

/// Outcome of one bounded maximization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub nfev: u64,
    pub converged: bool,
    pub termination: Termination,
}

pub(crate) fn validate_start<O: Objective + ?Sized>(obj: &O, x0: &[f64]) -> Result<(), OptError> {
    if obj.dim() == 0 {
        return Err(OptError::EmptyDomain);
    }
    if x0.len() != obj.dim() {
        return Err(OptError::DimensionMismatch {
            x0: x0.len(),
            dim: obj.dim(),
        });
    }
    for (index, (&value, bound)) in x0.iter().zip(obj.bounds()).enumerate() {
        if !bound.contains(value) {
            return Err(OptError::StartOutOfBounds {
                index,
                value,
                lo: bound.lo,
                hi: bound.hi,
            });
        }
    }
    Ok(())
}

/// Evaluates the negated objective and remembers the best (highest-f) point
/// ever seen, including gradient and line-search probes.
pub(crate) struct NegEval<'a, O: Objective + ?Sized> {
    obj: &'a mut O,
    pub count: u64,
    best_x: Vec<f64>,
    best_phi: f64,
}

impl<'a, O: Objective + ?Sized> NegEval<'a, O> {
    pub fn new(obj: &'a mut O) -> Self {
        NegEval {
            obj,
            count: 0,
            best_x: Vec::new(),
            best_phi: f64::INFINITY,
        }
    }

    /// φ(x) = -f(x); lower is better.
    pub fn call(&mut self, x: &[f64]) -> f64 {
        let phi = -self.obj.evaluate(x);
        self.count += 1;
        if phi < self.best_phi {
            self.best_phi = phi;
            self.best_x = x.to_vec();
        }
        phi
    }

    pub fn into_result(self, termination: Termination) -> OptResult {
        let converged = matches!(
            termination,
            Termination::SimplexTolerance
                | Termination::ProjectedGradient
                | Termination::FunctionTolerance
        );
        OptResult {
            best_x: self.best_x,
            best_value: -self.best_phi,
            nfev: self.count,
            converged,
            termination,
        }
    }
}
