//! Sampled checks of two elementary inequalities used in the Moser
//! iteration: the two-point inequality
//! `(b - a)(t1^2 a^{-p} - t2^2 b^{-p}) >= c1 (t1 a^{(1-p)/2} - t2 b^{(1-p)/2})^2
//!     - c2 p/(p-1) (t1 - t2)^2 (b^{1-p} + a^{1-p})`
//! and the interpolation bound
//! `|f|_{q/(q-1)} <= (beta/q) a |f|_{beta/(beta-1)} + ((q-beta)/q) a^{-beta/(q-beta)} |f|_1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// One sample of the two-point inequality, reduced to `lhs`, the `c1`
/// term `a_term` and the `c2` term `b_term`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbSample {
    pub lhs: f64,
    pub a_term: f64,
    pub b_term: f64,
}

pub fn ab_terms(a: f64, b: f64, p: f64, t1: f64, t2: f64) -> AbSample {
    let e = 0.5 * (1.0 - p);
    let lhs = (b - a) * (t1 * t1 * a.powf(-p) - t2 * t2 * b.powf(-p));
    let d = t1 * a.powf(e) - t2 * b.powf(e);
    let b_term = p / (p - 1.0) * (t1 - t2) * (t1 - t2) * (b.powf(1.0 - p) + a.powf(1.0 - p));
    AbSample {
        lhs,
        a_term: d * d,
        b_term,
    }
}

/// Search box for the constants.
pub const C2_MAX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct AbSearch {
    pub samples: usize,
    /// `(c1, smallest feasible c2)` for every scanned `c1`, `None` when infeasible.
    pub curve: Vec<(f64, Option<f64>)>,
    /// Largest feasible `c1` with its smallest `c2`.
    pub best: (f64, f64),
}

/// Smallest `c2` making `samples` feasible for `c1`, if one exists in the box.
pub fn required_c2(samples: &[AbSample], c1: f64) -> Option<f64> {
    let mut c2: f64 = 0.0;
    for s in samples {
        let gap = c1 * s.a_term - s.lhs;
        if gap <= 0.0 {
            continue;
        }
        if s.b_term > 0.0 {
            c2 = c2.max(gap / s.b_term);
        } else {
            return None;
        }
    }
    (c2 <= C2_MAX).then_some(c2)
}

/// Draws `n` tuples with `a, b` log-uniform in `[1e-3, 1e3]`, `p` in `(1, 20]`,
/// `tau` in `[0, 1]`, and scans `c1 = k / 256`.
pub fn prop_ab_search(n: usize, seed: u64) -> Result<AbSearch> {
    const CHUNK: usize = 4096;
    let samples: Vec<AbSample> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len)
                .map(|_| {
                    let a = 10f64.powf(rng.random_range(-3.0..=3.0));
                    let b = 10f64.powf(rng.random_range(-3.0..=3.0));
                    let p = 20.0 - rng.random_range(0.0..19.0);
                    let t1: f64 = rng.random_range(0.0..=1.0);
                    let t2: f64 = rng.random_range(0.0..=1.0);
                    ab_terms(a, b, p, t1, t2)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let curve: Vec<(f64, Option<f64>)> = (1..=256)
        .into_par_iter()
        .map(|k| {
            let c1 = k as f64 / 256.0;
            (c1, required_c2(&samples, c1))
        })
        .collect();
    let best = curve
        .iter()
        .rev()
        .find_map(|(c1, c2)| c2.map(|c2| (*c1, c2)))
        .ok_or_else(|| Error::FitUnreliable("no feasible (c1, c2) in the search box".into()))?;
    Ok(AbSearch {
        samples: samples.len(),
        curve,
        best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalCase {
    pub a: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Evaluates both sides of the interpolation bound for `f` on its grid.
pub fn inequal_check(f: &GridFunction, q: f64, beta: f64, a: f64) -> Result<InequalCase> {
    if !(beta > 1.0 && q > beta && a > 0.0) {
        return Err(Error::InvalidQuery("need beta > 1, q > beta, a > 0".into()));
    }
    let lhs = f.lp_norm(q / (q - 1.0), None);
    let rhs = beta / q * a * f.lp_norm(beta / (beta - 1.0), None)
        + (q - beta) / q * a.powf(-beta / (q - beta)) * f.lp_norm(1.0, None);
    Ok(InequalCase { a, lhs, rhs })
}
