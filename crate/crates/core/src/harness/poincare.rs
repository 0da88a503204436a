//! Poincaré ratios `|v - [v]|^2_{L^2(M_r)} / E_{M_r}(v, v)` across radii.

use serde::{Deserialize, Serialize};

use crate::energy::{energy_form, Domain};
use crate::error::{Error, Result};
use crate::geometry::AnisoRect;
use crate::grid::{ExteriorPolicy, GridFunction, TensorGrid};
use crate::kernels::KernelFamily;
use crate::numerics::{compensated_sum, linear_fit, LinearFit};

/// Test patterns in the reference coordinates `s in (-1, 1)^d` of a rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pattern {
    Linear { axis: usize },
    /// Mean-zero `+-1` checkerboard with `cells` cells per axis.
    Checkerboard { cells: usize },
    /// `cos(pi freq s_axis)`.
    Wave { axis: usize, freq: f64 },
}

impl Pattern {
    pub fn eval(&self, s: &[f64]) -> f64 {
        match self {
            Pattern::Linear { axis } => s[*axis],
            Pattern::Checkerboard { cells } => {
                let parity: usize = s
                    .iter()
                    .map(|v| (((v + 1.0) * 0.5 * *cells as f64).floor().max(0.0)) as usize)
                    .sum();
                if parity % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Pattern::Wave { axis, freq } => (std::f64::consts::PI * freq * s[*axis]).cos(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Pattern::Linear { axis } | Pattern::Wave { axis, .. } if *axis >= dim => Err(
                Error::InvalidQuery(format!("pattern axis {axis} out of range for dimension {dim}")),
            ),
            Pattern::Checkerboard { cells } if *cells < 2 => {
                Err(Error::InvalidQuery("checkerboard needs at least two cells".into()))
            }
            Pattern::Wave { freq, .. } if !(freq.is_finite() && *freq > 0.0) => {
                Err(Error::InvalidQuery("wave frequency must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Samples the pattern on a grid over `rect`.
    pub fn sample(&self, rect: &AnisoRect, nodes: &[usize]) -> Result<GridFunction> {
        self.validate(rect.dim())?;
        let grid = TensorGrid::on_rect(rect, nodes)?;
        let c = rect.center().to_vec();
        let w = rect.half_widths().to_vec();
        Ok(GridFunction::from_fn(
            &grid,
            |x| {
                let s: Vec<f64> = x.iter().zip(&c).zip(&w).map(|((x, c), w)| (x - c) / w).collect();
                self.eval(&s)
            },
            ExteriorPolicy::Unknown,
        ))
    }
}

/// `|v - [v]|^2_{L^2} / E_{Grid}(v, v)` for `v` sampled on its own grid.
pub fn poincare_ratio(k: &KernelFamily, v: &GridFunction) -> Result<f64> {
    let n = v.values.len() as f64;
    let mean = compensated_sum(&v.values) / n;
    let dev: Vec<f64> = v.values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let l2 = v.grid.cell_volume() * compensated_sum(&dev);
    let scale = v.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if !(l2 > 1e-28 * scale * scale * v.grid.cell_volume() * n) {
        return Err(Error::InvalidQuery("constant v: the Poincaré ratio is undefined".into()));
    }
    let e = energy_form(k, Domain::Grid, v, v)?;
    if !(e > 0.0) {
        return Err(Error::InvalidQuery("zero energy on a nonconstant v".into()));
    }
    Ok(l2 / e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareCheck {
    pub rs: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Fit of `log ratio` against `log r`.
    pub fit: LinearFit,
    /// `max_r ratio / r^{alpha_max}`.
    pub prefactor: f64,
}

pub fn poincare_check(
    k: &KernelFamily,
    pattern: &Pattern,
    center: &[f64],
    rs: &[f64],
    nodes: &[usize],
) -> Result<PoincareCheck> {
    let idx = k.indices();
    if rs.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::InvalidRadius("radii must lie in (0, 1]".into()));
    }
    let mut ratios = Vec::with_capacity(rs.len());
    for &r in rs {
        let rect = AnisoRect::new(&idx, center, r)?;
        let v = pattern.sample(&rect, nodes)?;
        ratios.push(poincare_ratio(k, &v)?);
    }
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::FitUnreliable("need two distinct radii".into()))?;
    let prefactor = rs
        .iter()
        .zip(&ratios)
        .map(|(r, q)| q / r.powf(idx.alpha_max()))
        .fold(0.0, f64::max);
    Ok(PoincareCheck {
        rs: rs.to_vec(),
        ratios,
        fit,
        prefactor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnisotropyIndices;

    #[test]
    fn invariant_under_constant_shift() {
        let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
        let k = KernelFamily::Axes(idx.clone());
        let rect = AnisoRect::new(&idx, &[0.0, 0.0], 0.5).unwrap();
        let v = Pattern::Wave { axis: 1, freq: 1.0 }.sample(&rect, &[8, 8]).unwrap();
        let a = poincare_ratio(&k, &v).unwrap();
        let b = poincare_ratio(&k, &v.map(|x| x + 5.0)).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn constant_rejected() {
        let idx = AnisotropyIndices::new(vec![1.0]).unwrap();
        let k = KernelFamily::Axes(idx.clone());
        let rect = AnisoRect::new(&idx, &[0.0], 1.0).unwrap();
        let g = TensorGrid::on_rect(&rect, &[8]).unwrap();
        let v = GridFunction::constant(&g, 2.0);
        assert!(matches!(poincare_ratio(&k, &v), Err(Error::InvalidQuery(_))));
    }
}
