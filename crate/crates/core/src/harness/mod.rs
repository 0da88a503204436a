//! Measurable versions of the regularity estimates: Sobolev and Poincaré
//! constants, log-moment and flip diagnostics for supersolutions, Moser
//! sequences, weak Harnack deficits, oscillation decay and Hölder fits.

pub mod elementary;
pub mod harnack;
pub mod holder;
pub mod poincare;
pub mod report;
pub mod sobolev;
pub mod supersolution;

pub use report::{Curve, ExperimentReport, Measurement, Verdict};

use crate::grid::GridFunction;

/// `log (mean over nodes of exp(p log u))`, evaluated without overflow.
pub(crate) fn log_mean_power(logs: &[f64], p: f64) -> f64 {
    let m = logs.iter().map(|l| p * l).fold(f64::NEG_INFINITY, f64::max);
    let s: Vec<f64> = logs.iter().map(|l| (p * l - m).exp()).collect();
    m + (crate::numerics::compensated_sum(&s) / logs.len() as f64).ln()
}

/// `(mean u^p)^{1/p}` over the listed nodes; `u` must be positive there.
pub(crate) fn power_mean(u: &GridFunction, nodes: &[usize], p: f64) -> f64 {
    let logs: Vec<f64> = nodes.iter().map(|&i| u.values[i].ln()).collect();
    (log_mean_power(&logs, p) / p).exp()
}

/// Smallest `q > max(2, beta)` used when no exponent is configured.
pub fn default_q(beta: f64) -> f64 {
    2f64.max(beta) + 0.5
}
