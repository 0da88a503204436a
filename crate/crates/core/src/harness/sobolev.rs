//! Sobolev-type ratios for the axes kernel and the weak-type measure of the
//! sublevel sets of the symbol `psi(xi) = sum_k |xi_k|^{alpha_k}`.

use crate::energy::{cutoff_sum, energy_form, Domain};
use crate::error::{Error, Result};
use crate::geometry::{AnisoRect, AnisotropyIndices, BoxRegion, ScaleMap};
use crate::grid::{ExteriorPolicy, GridFunction, TensorGrid};
use crate::kernels::KernelFamily;
use crate::numerics::{linear_fit, LinearFit};

/// Anisotropic bump `prod_k (1 - s_k^2)^3_+`, `s_k = (x_k - c_k) / w_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub widths: Vec<f64>,
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(&self.widths)
            .zip(x)
            .map(|((c, w), x)| {
                let s = (x - c) / w;
                if s.abs() < 1.0 {
                    (1.0 - s * s).powi(3)
                } else {
                    0.0
                }
            })
            .product()
    }

    pub fn support(&self) -> Result<BoxRegion> {
        BoxRegion::new(
            self.center.iter().zip(&self.widths).map(|(c, w)| c - w).collect(),
            self.center.iter().zip(&self.widths).map(|(c, w)| c + w).collect(),
        )
    }

    /// Samples the bump on a cell-centred grid over its support, zero outside.
    pub fn sample(&self, nodes: &[usize]) -> Result<GridFunction> {
        let grid = TensorGrid::covering(&self.support()?, nodes)?;
        Ok(GridFunction::from_fn(&grid, |x| self.eval(x), ExteriorPolicy::Zero))
    }
}

/// `|u|_{L^Theta}^2 / E(u, u)` over the whole space; `None` for zero energy.
pub fn sobolev_ratio(idx: &AnisotropyIndices, u: &GridFunction) -> Result<Option<f64>> {
    let theta = idx.theta()?;
    if !u.exterior.is_zero() {
        return Err(Error::SupportViolation(
            "trial functions must vanish outside the grid".into(),
        ));
    }
    let k = KernelFamily::Axes(idx.clone());
    let e = energy_form(&k, Domain::Whole, u, u)?;
    if !(e > 0.0) {
        return Ok(None);
    }
    Ok(Some(u.lp_norm(theta, None).powi(2) / e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevCheck {
    pub ratios: Vec<Option<f64>>,
    pub max: f64,
    pub skipped: usize,
}

/// Ratios over a trial family; zero-energy members are skipped.
pub fn sobolev_check(idx: &AnisotropyIndices, family: &[GridFunction]) -> Result<SobolevCheck> {
    let ratios = family
        .iter()
        .map(|u| sobolev_ratio(idx, u))
        .collect::<Result<Vec<_>>>()?;
    let skipped = ratios.iter().filter(|r| r.is_none()).count();
    let max = ratios.iter().flatten().copied().fold(0.0, f64::max);
    Ok(SobolevCheck { ratios, max, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSweep {
    pub lambdas: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max / min - 1`.
    pub drift: f64,
}

/// Sobolev ratio of `u o Psi_lambda` for each `lambda`, each sampled with the
/// same node counts on the rescaled support.
pub fn scale_sweep(idx: &AnisotropyIndices, bump: &Bump, lambdas: &[f64], nodes: &[usize]) -> Result<ScaleSweep> {
    let mut ratios = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let psi = ScaleMap::new(idx, l)?;
        let support = bump.support()?;
        let region = BoxRegion::new(psi.apply_inverse(&support.lo), psi.apply_inverse(&support.hi))?;
        let grid = TensorGrid::covering(&region, nodes)?;
        let u = GridFunction::from_fn(&grid, |x| bump.eval(&psi.apply(x)), ExteriorPolicy::Zero);
        let r = sobolev_ratio(idx, &u)?
            .ok_or_else(|| Error::InvalidQuery("bump has zero energy".into()))?;
        ratios.push(r);
    }
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ScaleSweep {
        lambdas: lambdas.to_vec(),
        ratios,
        drift: max / min - 1.0,
    })
}

/// Both sides of the localized Sobolev inequality on `M_r` inside `M_{lambda r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSobolev {
    /// `|u|_{L^Theta(M_r)}^2`.
    pub lhs: f64,
    /// `E_{M_{lambda r}}(u, u)`.
    pub energy: f64,
    /// `r^{-alpha_max} sum_k (lambda^{e_k} - 1)^{-alpha_k} |u|^2_{L^2(M_{lambda r})}`.
    pub l2_term: f64,
    /// `lhs / (energy + l2_term)`: the constant the inequality needs.
    pub c1: f64,
}

pub fn local_sobolev(idx: &AnisotropyIndices, u: &GridFunction, inner: &AnisoRect, lambda: f64) -> Result<LocalSobolev> {
    if !(lambda > 1.0) {
        return Err(Error::InvalidRadius(format!("lambda = {lambda} must exceed 1")));
    }
    let theta = idx.theta()?;
    let outer = inner.scaled(idx, lambda)?;
    let k = KernelFamily::Axes(idx.clone());
    let lhs = u.lp_norm(theta, Some(&inner.as_box())).powi(2);
    let energy = energy_form(&k, Domain::Rect(&outer), u, u)?;
    let l2 = u.lp_norm(2.0, Some(&outer.as_box())).powi(2);
    let l2_term = inner.r().powf(-idx.alpha_max()) * cutoff_sum(idx, lambda) * l2;
    let rhs = energy + l2_term;
    let c1 = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(LocalSobolev {
        lhs,
        energy,
        l2_term,
        c1,
    })
}

/// Volume of `{xi : sum_k |xi_k|^{alpha_k} <= 1}`,
/// `2^d prod_k Gamma(1 + 1/alpha_k) / Gamma(1 + beta)`.
pub fn unit_sublevel_volume(idx: &AnisotropyIndices) -> f64 {
    use statrs::function::gamma::gamma;
    let num: f64 = idx.alphas().iter().map(|a| 2.0 * gamma(1.0 + 1.0 / a)).product();
    num / gamma(1.0 + idx.beta())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakTail {
    pub ts: Vec<f64>,
    pub measures: Vec<f64>,
    /// Fit of `log measure` against `log t`.
    pub fit: LinearFit,
}

/// Lattice measure of `{psi <= s}`: midpoint lattice with spacing `steps`
/// over every axis except the one of smallest index, which is integrated
/// exactly.
fn sublevel_measure(idx: &AnisotropyIndices, s: f64, steps: &[f64], last: usize) -> f64 {
    let d = idx.dim();
    let lattice: Vec<usize> = (0..d).filter(|&k| k != last).collect();
    let counts: Vec<usize> = lattice
        .iter()
        .zip(steps)
        .map(|(&k, h)| (s.powf(1.0 / idx.alpha(k)) / h).ceil() as usize)
        .collect();
    let cell: f64 = steps.iter().product::<f64>() * 2f64.powi(lattice.len() as i32);
    let total: usize = counts.iter().product();
    let inv_last = 1.0 / idx.alpha(last);
    let mut multi = vec![0usize; lattice.len()];
    let mut sum = crate::numerics::CompensatedSum::new();
    for _ in 0..total {
        let used: f64 = lattice
            .iter()
            .zip(&multi)
            .zip(steps)
            .map(|((&k, &m), h)| ((m as f64 + 0.5) * h).powf(idx.alpha(k)))
            .sum();
        let rest = s - used;
        if rest > 0.0 {
            sum.add(2.0 * rest.powf(inv_last));
        }
        for (m, c) in multi.iter_mut().zip(&counts) {
            *m += 1;
            if *m < *c {
                break;
            }
            *m = 0;
        }
    }
    // Lattice cells cover one orthant; the factor 2 per lattice axis restores symmetry.
    cell * sum.value()
}

/// Measures `|{xi : psi(xi)^{-1/2} >= t}| = |{psi <= t^{-2}}|` for each `t`
/// on a fixed lattice and fits the log-log slope.
pub fn weak_tail_measure(idx: &AnisotropyIndices, ts: &[f64], per_axis: usize) -> Result<WeakTail> {
    if ts.len() < 2 || ts.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::ExponentFitUnreliable(
            "need at least two values of t in (0, 1]".into(),
        ));
    }
    if per_axis == 0 {
        return Err(Error::InvalidQuery("lattice needs at least one point per axis".into()));
    }
    // The analytic axis is the one with the largest extent.
    let last = (0..idx.dim())
        .min_by(|a, b| idx.alpha(*a).partial_cmp(&idx.alpha(*b)).unwrap())
        .unwrap_or(0);
    let s_min = ts.iter().map(|t| t.powi(-2)).fold(f64::INFINITY, f64::min);
    let steps: Vec<f64> = (0..idx.dim())
        .filter(|&k| k != last)
        .map(|k| s_min.powf(1.0 / idx.alpha(k)) / per_axis as f64)
        .collect();
    let measures: Vec<f64> = ts
        .iter()
        .map(|t| sublevel_measure(idx, t.powi(-2), &steps, last))
        .collect();
    if measures.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(Error::ExponentFitUnreliable("empty or unbounded sublevel set".into()));
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = measures.iter().map(|m| m.ln()).collect();
    let fit = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::ExponentFitUnreliable("degenerate t grid".into()))?;
    Ok(WeakTail {
        ts: ts.to_vec(),
        measures,
        fit,
    })
}
