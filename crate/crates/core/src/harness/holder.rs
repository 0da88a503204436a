//! Oscillation decay over nested rectangles `M_{r Theta^{-n}}` and Hölder
//! exponent fits in the Euclidean and metric gauges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{metric_dist, AnisoRect, AnisotropyIndices};
use crate::grid::GridFunction;
use crate::numerics::{linear_fit, LinearFit};

/// `kappa = (2 c_a 2^{1/p})^{-1}` and `delta = ln(2 / (2 - kappa)) / ln Theta`.
pub fn theory_delta(c_a: f64, p: f64, theta: f64) -> Result<(f64, f64)> {
    if !(c_a > 0.0 && p > 0.0 && theta > 1.0) {
        return Err(Error::InvalidQuery("need c_a > 0, p > 0, Theta > 1".into()));
    }
    let kappa = 1.0 / (2.0 * c_a * 2f64.powf(1.0 / p));
    let delta = (2.0 / (2.0 - kappa)).ln() / theta.ln();
    Ok((kappa, delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscRow {
    pub n: usize,
    pub rho: f64,
    pub nodes: usize,
    pub osc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationDecay {
    pub rows: Vec<OscRow>,
    /// Fit of `ln osc` against `n`; `None` when every oscillation vanishes.
    pub fit: Option<LinearFit>,
    pub delta: Option<f64>,
    /// `u` is constant on every scale.
    pub exact: bool,
    /// `max_n osc_n / (osc_0 Theta^{-delta n})`: at most about one when
    /// the decay is at least geometric with the fitted rate.
    pub envelope: Option<f64>,
}

/// Oscillations over `M_{r Theta^{-n}}(x0)` for `n = 0, 1, ...` while the
/// rectangle holds at least two nodes, at most `max_scales` of them.
pub fn oscillation_decay(
    idx: &AnisotropyIndices,
    u: &GridFunction,
    x0: &[f64],
    r: f64,
    (theta, lambda, sigma): (f64, f64, f64),
    max_scales: usize,
) -> Result<OscillationDecay> {
    if !(theta > lambda && lambda > sigma && sigma > 1.0) {
        return Err(Error::InvalidQuery("need Theta > lambda > sigma > 1".into()));
    }
    let mut rows = Vec::new();
    for n in 0..max_scales {
        let rho = r * theta.powi(-(n as i32));
        let rect = AnisoRect::new(idx, x0, rho)?;
        let nodes = u.grid.nodes_in_closed(&rect.as_box());
        if nodes.len() < 2 {
            break;
        }
        let max = nodes.iter().map(|&i| u.values[i]).fold(f64::NEG_INFINITY, f64::max);
        let min = nodes.iter().map(|&i| u.values[i]).fold(f64::INFINITY, f64::min);
        rows.push(OscRow {
            n,
            rho,
            nodes: nodes.len(),
            osc: max - min,
        });
    }
    if !rows.is_empty() && rows.iter().all(|r| r.osc == 0.0) {
        return Ok(OscillationDecay {
            rows,
            fit: None,
            delta: None,
            exact: true,
            envelope: None,
        });
    }
    let usable: Vec<&OscRow> = rows.iter().filter(|r| r.osc > 0.0).collect();
    if usable.len() < 3 {
        return Err(Error::FitUnreliable(format!(
            "{} usable scales, need 3",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.osc.ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::FitUnreliable("degenerate scales".into()))?;
    let delta = -fit.slope / theta.ln();
    let osc0 = rows[0].osc;
    let envelope = rows
        .iter()
        .map(|r| r.osc / (osc0 * theta.powf(-delta * r.n as f64)))
        .fold(0.0, f64::max);
    Ok(OscillationDecay {
        rows,
        fit: Some(fit),
        delta: Some(delta),
        exact: false,
        envelope: Some(envelope),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit {
    /// `ln |u(x) - u(y)|` against `ln |x - y|`; `None` for constant `u`.
    pub euclidean: Option<LinearFit>,
    /// The same against `ln d(x, y)`.
    pub metric: Option<LinearFit>,
    /// Fits restricted to pairs on lines parallel to each axis.
    pub axis: Vec<Option<LinearFit>>,
    /// `max |u(x) - u(y)| / d(x, y)^{metric slope}` over `|u|_inf + forcing`.
    pub prefactor: Option<f64>,
    pub pairs: usize,
}

fn fit_pairs(u: &GridFunction, pairs: &[(usize, usize)], gauge: impl Fn(&[f64], &[f64]) -> f64) -> Option<LinearFit> {
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        let du = (u.values[i] - u.values[j]).abs();
        if du > 0.0 {
            let g = gauge(&u.grid.coord(i), &u.grid.coord(j));
            if g > 0.0 {
                xs.push(g.ln());
                ys.push(du.ln());
            }
        }
    }
    if xs.len() < 3 {
        return None;
    }
    linear_fit(&xs, &ys)
}

/// Least-squares Hölder fits over `n_pairs` random node pairs in `region`.
pub fn holder_fit(
    idx: &AnisotropyIndices,
    u: &GridFunction,
    region: &AnisoRect,
    n_pairs: usize,
    forcing: f64,
    seed: u64,
) -> Result<HolderFit> {
    let nodes = u.grid.nodes_in_closed(&region.as_box());
    if nodes.len() < 2 {
        return Err(Error::QuadratureResolutionError("region holds fewer than two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .filter_map(|_| {
            let i = nodes[rng.random_range(0..nodes.len())];
            let j = nodes[rng.random_range(0..nodes.len())];
            (i != j).then_some((i, j))
        })
        .collect();
    let euclid = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let metric = |x: &[f64], y: &[f64]| metric_dist(idx, x, y);
    let euclidean = fit_pairs(u, &pairs, euclid);
    let metric_fit = fit_pairs(u, &pairs, metric);
    let inside: std::collections::HashSet<usize> = nodes.iter().copied().collect();
    let axis = (0..idx.dim())
        .map(|k| {
            let s = u.grid.strides()[k];
            let n = u.grid.dims()[k];
            let line_pairs: Vec<(usize, usize)> = (0..n_pairs)
                .filter_map(|_| {
                    let i = nodes[rng.random_range(0..nodes.len())];
                    let p = u.grid.axis_index(i, k);
                    let q = rng.random_range(0..n);
                    let j = i - p * s + q * s;
                    (q != p && inside.contains(&j)).then_some((i, j))
                })
                .collect();
            fit_pairs(u, &line_pairs, euclid)
        })
        .collect();
    let norm = nodes.iter().map(|&i| u.values[i].abs()).fold(0.0, f64::max) + forcing;
    let prefactor = metric_fit.map(|f| {
        pairs
            .iter()
            .map(|&(i, j)| {
                let d = metric_dist(idx, &u.grid.coord(i), &u.grid.coord(j));
                (u.values[i] - u.values[j]).abs() / d.powf(f.slope)
            })
            .fold(0.0, f64::max)
            / norm
    });
    Ok(HolderFit {
        euclidean,
        metric: metric_fit,
        axis,
        prefactor,
        pairs: pairs.len(),
    })
}
