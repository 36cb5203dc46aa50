//! Iterative layerwise training for QAOA on Max-Cut.
//!
//! The crate provides a small, exact statevector simulator for the standard
//! Max-Cut QAOA ansatz, bounded classical optimizers with precise
//! function-evaluation accounting, the iterative layerwise (ITLW) optimization
//! strategy together with classic layerwise and full-optimization baselines,
//! the bilinear and TQA parameter initialization schemes, and an experiment
//! harness that sweeps graph ensembles and emits plot-ready CSV data.

pub mod graphs;
pub mod harness;
pub mod metrics;
pub mod optimizers;
pub mod simulator;
pub mod strategies;
