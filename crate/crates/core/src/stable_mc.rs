//! Monte Carlo for the jump process generated by the axes operator: every
//! coordinate is an independent symmetric `alpha_k`-stable process whose
//! symbol is `C(alpha_k) |xi|^{alpha_k}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{AnisoRect, AnisotropyIndices, BoxRegion};
use crate::grid::{ExteriorBox, ExteriorPolicy};
use crate::kernels::KernelFamily;
use crate::operator::symbol_constant;
use crate::solver::{solve_dirichlet, DirichletProblem};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidIndex(format!("alpha = {alpha} is outside (0, 2)")))
    }
}

/// One standard symmetric stable variate (characteristic function
/// `exp(-|xi|^alpha)`) by the Chambers–Mallows–Stuck transform.
pub fn cms<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let v = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
    let w = -(1.0 - rng.random::<f64>()).ln();
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    a * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `n` standard symmetric `alpha`-stable variates.
pub fn sample_stable(alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    const CHUNK: usize = 8192;
    Ok((0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(move |_| cms(alpha, &mut rng))
        })
        .collect())
}

/// Per unit time scale of axis increments: `X_t = (C(alpha) t)^{1/alpha} S`.
pub fn scale_constant(alpha: f64) -> f64 {
    symbol_constant(alpha).powf(1.0 / alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StablePathConfig {
    pub idx: AnisotropyIndices,
    pub dt: f64,
    /// Per-step scales `(C(alpha_k) dt)^{1/alpha_k}`.
    pub scales: Vec<f64>,
    pub seed: u64,
    /// Maximum number of steps per path.
    pub horizon: usize,
}

impl StablePathConfig {
    pub fn new(idx: &AnisotropyIndices, dt: f64, seed: u64, horizon: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidQuery("time step must be positive".into()));
        }
        if horizon == 0 {
            return Err(Error::InvalidQuery("horizon must be positive".into()));
        }
        let scales = idx
            .alphas()
            .iter()
            .map(|&a| scale_constant(a) * dt.powf(1.0 / a))
            .collect();
        Ok(StablePathConfig {
            idx: idx.clone(),
            dt,
            scales,
            seed,
            horizon,
        })
    }

    /// One increment of the process over `dt`.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.scales[k] * cms(self.idx.alpha(k), rng);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitSample {
    /// Post-jump positions of the paths that left, in path order.
    pub positions: Vec<Vec<f64>>,
    /// Exit times of the same paths.
    pub times: Vec<f64>,
    pub paths: usize,
    /// Paths still inside at the horizon.
    pub censored: usize,
    pub mean_time: f64,
    pub time_stderr: f64,
    /// 95% normal interval for the mean exit time.
    pub ci95: (f64, f64),
    /// More than 1% of the paths hit the horizon.
    pub horizon_warning: bool,
}

/// Runs `n` paths from `x` until they leave `region`.
pub fn simulate_exit(cfg: &StablePathConfig, x: &[f64], region: &BoxRegion, n: usize) -> Result<ExitSample> {
    if x.len() != cfg.idx.dim() || region.dim() != cfg.idx.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.idx.dim(),
            got: x.len(),
        });
    }
    if !region.contains(x) {
        return Err(Error::InvalidQuery("start point must lie inside the region".into()));
    }
    if n == 0 {
        return Err(Error::InvalidQuery("need at least one path".into()));
    }
    let results: Vec<Option<(Vec<f64>, f64)>> = (0..n)
        .into_par_iter()
        .map(|path| {
            let mut rng = stream(cfg.seed, path as u64);
            let mut pos = x.to_vec();
            let mut inc = vec![0.0; x.len()];
            for step in 1..=cfg.horizon {
                cfg.step(&mut rng, &mut inc);
                for (p, d) in pos.iter_mut().zip(&inc) {
                    *p += d;
                }
                if !region.contains(&pos) {
                    return Some((pos, step as f64 * cfg.dt));
                }
            }
            None
        })
        .collect();
    let censored = results.iter().filter(|r| r.is_none()).count();
    let (positions, times): (Vec<Vec<f64>>, Vec<f64>) = results.into_iter().flatten().unzip();
    let m = times.len() as f64;
    let (mean_time, time_stderr) = if times.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = crate::numerics::compensated_sum(&times) / m;
        let var = if times.len() > 1 {
            times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        (mean, (var / m).sqrt())
    };
    Ok(ExitSample {
        positions,
        times,
        paths: n,
        censored,
        mean_time,
        time_stderr,
        ci95: (mean_time - 1.96 * time_stderr, mean_time + 1.96 * time_stderr),
        horizon_warning: censored as f64 > 0.01 * n as f64,
    })
}

/// Target set of the harmonic measure, outside the rectangle.
#[derive(Debug, Clone, PartialEq)]
pub enum ExteriorSet {
    /// The whole complement of the rectangle.
    Complement,
    /// Union of disjoint boxes.
    Boxes(Vec<BoxRegion>),
}

impl ExteriorSet {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            ExteriorSet::Complement => true,
            ExteriorSet::Boxes(b) => b.iter().any(|b| b.contains(y)),
        }
    }

    /// Exterior data `1_A`.
    pub fn indicator(&self) -> ExteriorPolicy {
        match self {
            ExteriorSet::Complement => ExteriorPolicy::Constant(1.0),
            ExteriorSet::Boxes(b) => ExteriorPolicy::Boxes(
                b.iter()
                    .map(|r| ExteriorBox {
                        region: r.clone(),
                        value: 1.0,
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCompare {
    pub mc: f64,
    pub mc_stderr: f64,
    pub solver: f64,
    pub z: f64,
    pub paths: usize,
    pub censored: usize,
}

/// Monte Carlo `P_x[X_tau in A]` against the Dirichlet solution with
/// `g = 1_A`, `f = 0` at `x`.
pub fn harmonic_measure_compare(
    cfg: &StablePathConfig,
    rect: &AnisoRect,
    set: &ExteriorSet,
    x: &[f64],
    n: usize,
    nodes: &[usize],
    tol: f64,
) -> Result<HarmonicCompare> {
    let exits = simulate_exit(cfg, x, &rect.as_box(), n)?;
    let hits = exits.positions.iter().filter(|y| set.contains(y)).count();
    let used = exits.positions.len().max(1) as f64;
    let mc = hits as f64 / used;
    let mc_stderr = (mc * (1.0 - mc) / used).sqrt();
    let k = KernelFamily::Axes(cfg.idx.clone());
    let p = DirichletProblem::new(&k, rect, nodes, |_| 0.0, set.indicator())?;
    let sol = solve_dirichlet(&p, tol)?;
    let solver = sol
        .u
        .interpolate(x)
        .ok_or_else(|| Error::InvalidQuery("start point outside the grid".into()))?;
    let diff = mc - solver;
    let z = if mc_stderr > 0.0 {
        diff / mc_stderr
    } else if diff.abs() < 1e-9 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(HarmonicCompare {
        mc,
        mc_stderr,
        solver,
        z,
        paths: n,
        censored: exits.censored,
    })
}
