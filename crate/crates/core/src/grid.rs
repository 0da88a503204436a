//! Uniform tensor grids and grid functions with exterior data.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{AnisoRect, BoxRegion};

/// Uniform tensor grid. Node `i` along axis `k` sits at `origin[k] + i h[k]`.
///
/// Non-periodic grids built with [`TensorGrid::covering`] are cell-centred:
/// each node owns the cell of side `h` around it and the cells tile the
/// covered box exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    strides: Vec<usize>,
    periodic: bool,
}

impl TensorGrid {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, dims: Vec<usize>, periodic: bool) -> Result<Self> {
        let d = dims.len();
        if d == 0 || spacing.len() != d || origin.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: spacing.len().min(origin.len()),
            });
        }
        if dims.iter().any(|&n| n == 0) || spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidQuery("grid needs positive node counts and spacings".into()));
        }
        let mut strides = vec![1; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(TensorGrid {
            dims,
            spacing,
            origin,
            strides,
            periodic,
        })
    }

    /// Cell-centred grid whose cells tile `region` with `nodes[k]` cells per axis.
    pub fn covering(region: &BoxRegion, nodes: &[usize]) -> Result<Self> {
        if nodes.len() != region.dim() {
            return Err(Error::DimensionMismatch {
                expected: region.dim(),
                got: nodes.len(),
            });
        }
        if region.lo.iter().chain(&region.hi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuery("grid region must be bounded".into()));
        }
        let spacing: Vec<f64> = (0..nodes.len())
            .map(|k| (region.hi[k] - region.lo[k]) / nodes[k].max(1) as f64)
            .collect();
        let origin = (0..nodes.len())
            .map(|k| region.lo[k] + 0.5 * spacing[k])
            .collect();
        Self::new(origin, spacing, nodes.to_vec(), false)
    }

    /// Cell-centred grid on an anisotropic rectangle.
    pub fn on_rect(rect: &AnisoRect, nodes: &[usize]) -> Result<Self> {
        Self::covering(&rect.as_box(), nodes)
    }

    /// Periodic grid on `lo + [0, length)`, nodes at `lo + i h`.
    pub fn periodic(lo: &[f64], lengths: &[f64], nodes: &[usize]) -> Result<Self> {
        if lengths.len() != lo.len() || nodes.len() != lo.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: lengths.len().min(nodes.len()),
            });
        }
        let spacing = lengths
            .iter()
            .zip(nodes)
            .map(|(l, &n)| l / n.max(1) as f64)
            .collect();
        Self::new(lo.to_vec(), spacing, nodes.to_vec(), true)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Period lengths of a periodic grid, or cell-tiled extents otherwise.
    pub fn lengths(&self) -> Vec<f64> {
        self.dims
            .iter()
            .zip(&self.spacing)
            .map(|(&n, h)| n as f64 * h)
            .collect()
    }

    /// The box tiled by the node cells.
    pub fn region(&self) -> BoxRegion {
        let lo: Vec<f64> = (0..self.dim())
            .map(|k| self.origin[k] - 0.5 * self.spacing[k])
            .collect();
        let hi = (0..self.dim())
            .map(|k| lo[k] + self.dims[k] as f64 * self.spacing[k])
            .collect();
        BoxRegion { lo, hi }
    }

    pub fn coord_axis(&self, k: usize, i: usize) -> f64 {
        self.origin[k] + i as f64 * self.spacing[k]
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        self.strides
            .iter()
            .zip(&self.dims)
            .map(|(&s, &n)| {
                let i = rest / s;
                rest -= i * s;
                debug_assert!(i < n);
                i
            })
            .collect()
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coord(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.coord_axis(k, i))
            .collect()
    }

    /// Index of the node along `axis` in the multi-index of `flat`.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.dims[axis]
    }

    /// Nodes strictly inside `region`.
    pub fn nodes_in(&self, region: &BoxRegion) -> Vec<usize> {
        (0..self.len())
            .filter(|&f| region.contains(&self.coord(f)))
            .collect()
    }

    /// Nodes in the closure of `region`, up to rounding in the last bits.
    pub fn nodes_in_closed(&self, region: &BoxRegion) -> Vec<usize> {
        let tol: Vec<f64> = self.spacing.iter().map(|h| 1e-9 * h).collect();
        (0..self.len())
            .filter(|&f| {
                let x = self.coord(f);
                (0..self.dim()).all(|k| x[k] >= region.lo[k] - tol[k] && x[k] <= region.hi[k] + tol[k])
            })
            .collect()
    }

    /// Nearest node to `x`, if `x` lies in the tiled region.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut multi = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let t = ((x[k] - self.origin[k]) / self.spacing[k]).round();
            if t < 0.0 || t >= self.dims[k] as f64 {
                return None;
            }
            multi.push(t as usize);
        }
        Some(self.flat(&multi))
    }
}

/// Signature of exterior data given as a callable.
pub type ExteriorCallable = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Exterior data given by a function that equals `far_value` whenever
/// `max_k |y_k| > reach`.
#[derive(Clone)]
pub struct ExteriorFn {
    pub f: Arc<ExteriorCallable>,
    pub far_value: f64,
    pub reach: f64,
    /// Maximal quadrature panel width along rays.
    pub resolution: f64,
}

impl fmt::Debug for ExteriorFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExteriorFn")
            .field("far_value", &self.far_value)
            .field("reach", &self.reach)
            .field("resolution", &self.resolution)
            .finish()
    }
}

/// Constant value on a (possibly unbounded) box.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorBox {
    pub region: BoxRegion,
    pub value: f64,
}

/// Values of a grid function outside the represented grid.
#[derive(Debug, Clone, Default)]
pub enum ExteriorPolicy {
    #[default]
    Zero,
    Constant(f64),
    /// Sum of box indicators times values; zero elsewhere.
    Boxes(Vec<ExteriorBox>),
    Function(ExteriorFn),
    /// Values outside the grid are not available.
    Unknown,
}

/// A constant piece `[a, b)` of exterior data along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPiece {
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

impl ExteriorPolicy {
    pub fn function<F>(f: F, far_value: f64, reach: f64, resolution: f64) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ExteriorPolicy::Function(ExteriorFn {
            f: Arc::new(f),
            far_value,
            reach,
            resolution,
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ExteriorPolicy::Zero => true,
            ExteriorPolicy::Constant(c) => *c == 0.0,
            ExteriorPolicy::Boxes(b) => b.iter().all(|e| e.value == 0.0),
            _ => false,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, ExteriorPolicy::Unknown)
    }

    pub fn value_at(&self, y: &[f64]) -> Option<f64> {
        match self {
            ExteriorPolicy::Zero => Some(0.0),
            ExteriorPolicy::Constant(c) => Some(*c),
            ExteriorPolicy::Boxes(boxes) => Some(
                boxes
                    .iter()
                    .filter(|b| b.region.contains(y))
                    .map(|b| b.value)
                    .sum(),
            ),
            ExteriorPolicy::Function(e) => {
                if y.iter().any(|v| v.abs() > e.reach) {
                    Some(e.far_value)
                } else {
                    Some((e.f)(y))
                }
            }
            ExteriorPolicy::Unknown => None,
        }
    }

    /// Negative part `max(-g, 0)` of the exterior data.
    pub fn negative_part(&self) -> Result<ExteriorPolicy> {
        Ok(match self {
            ExteriorPolicy::Zero => ExteriorPolicy::Zero,
            ExteriorPolicy::Constant(c) => ExteriorPolicy::Constant((-c).max(0.0)),
            ExteriorPolicy::Boxes(boxes) => {
                let negative: Vec<&ExteriorBox> = boxes.iter().filter(|b| b.value < 0.0).collect();
                if negative.is_empty() {
                    return Ok(ExteriorPolicy::Zero);
                }
                let overlaps = boxes.iter().enumerate().any(|(i, a)| {
                    boxes[i + 1..].iter().any(|b| {
                        (0..a.region.dim()).all(|k| a.region.lo[k] < b.region.hi[k] && b.region.lo[k] < a.region.hi[k])
                    })
                });
                if overlaps {
                    return Err(Error::Unsupported(
                        "negative part of overlapping exterior boxes".into(),
                    ));
                }
                ExteriorPolicy::Boxes(
                    negative
                        .into_iter()
                        .map(|b| ExteriorBox {
                            region: b.region.clone(),
                            value: -b.value,
                        })
                        .collect(),
                )
            }
            ExteriorPolicy::Function(e) => {
                let f = e.f.clone();
                ExteriorPolicy::Function(ExteriorFn {
                    f: Arc::new(move |y: &[f64]| (-f(y)).max(0.0)),
                    far_value: (-e.far_value).max(0.0),
                    reach: e.reach,
                    resolution: e.resolution,
                })
            }
            ExteriorPolicy::Unknown => ExteriorPolicy::Unknown,
        })
    }

    /// Piecewise-constant description on `t >= t0` of the ray
    /// `x + sign t e_axis`, where one exists.
    pub fn ray_pieces(&self, x: &[f64], axis: usize, sign: f64, t0: f64) -> Option<Vec<RayPiece>> {
        match self {
            ExteriorPolicy::Zero => Some(Vec::new()),
            ExteriorPolicy::Constant(c) => Some(vec![RayPiece {
                a: t0,
                b: f64::INFINITY,
                value: *c,
            }]),
            ExteriorPolicy::Boxes(boxes) => {
                let mut out = Vec::new();
                for b in boxes {
                    let r = &b.region;
                    let across = (0..x.len())
                        .all(|j| j == axis || (x[j] > r.lo[j] && x[j] < r.hi[j]));
                    if !across {
                        continue;
                    }
                    let (ta, tb) = if sign > 0.0 {
                        (r.lo[axis] - x[axis], r.hi[axis] - x[axis])
                    } else {
                        (x[axis] - r.hi[axis], x[axis] - r.lo[axis])
                    };
                    let a = ta.max(t0);
                    if tb > a {
                        out.push(RayPiece {
                            a,
                            b: tb,
                            value: b.value,
                        });
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }
}

/// Values on every node of a grid plus the exterior policy beyond it.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: TensorGrid,
    pub values: Vec<f64>,
    pub exterior: ExteriorPolicy,
}

impl GridFunction {
    pub fn new(grid: TensorGrid, values: Vec<f64>, exterior: ExteriorPolicy) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuery("grid function values must be finite".into()));
        }
        Ok(GridFunction {
            grid,
            values,
            exterior,
        })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &TensorGrid, f: F, exterior: ExteriorPolicy) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coord(i))).collect();
        GridFunction {
            grid: grid.clone(),
            values,
            exterior,
        }
    }

    pub fn constant(grid: &TensorGrid, c: f64) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![c; grid.len()],
            exterior: ExteriorPolicy::Constant(c),
        }
    }

    pub fn zeros(grid: &TensorGrid) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            exterior: ExteriorPolicy::Zero,
        }
    }

    /// Indicator of one node, vanishing outside the grid.
    pub fn node_indicator(grid: &TensorGrid, node: usize) -> Self {
        let mut g = Self::zeros(grid);
        g.values[node] = 1.0;
        g
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            values,
            exterior: self.exterior.clone(),
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Value at an arbitrary point: nearest node inside the grid region,
    /// exterior policy outside.
    pub fn sample(&self, y: &[f64]) -> Option<f64> {
        if self.grid.region().contains(y) {
            self.grid.nearest(y).map(|i| self.values[i])
        } else {
            self.exterior.value_at(y)
        }
    }

    /// Multilinear interpolation between nodes, constant extrapolation up to
    /// the grid edge, exterior policy beyond it.
    pub fn interpolate(&self, y: &[f64]) -> Option<f64> {
        if !self.grid.region().contains(y) {
            return self.exterior.value_at(y);
        }
        let d = self.grid.dim();
        let mut base = Vec::with_capacity(d);
        let mut frac = Vec::with_capacity(d);
        for k in 0..d {
            let n = self.grid.dims()[k];
            let t = ((y[k] - self.grid.origin()[k]) / self.grid.spacing()[k]).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n.saturating_sub(2));
            base.push(i);
            frac.push(if n > 1 { t - i as f64 } else { 0.0 });
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut multi = base.clone();
            for k in 0..d {
                let up = corner >> k & 1 == 1;
                if up {
                    if self.grid.dims()[k] == 1 {
                        w = 0.0;
                        break;
                    }
                    multi[k] += 1;
                    w *= frac[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[self.grid.flat(&multi)];
            }
        }
        Some(acc)
    }

    /// Discrete `L^p` norm over the nodes in `region` (all nodes if `None`).
    pub fn lp_norm(&self, p: f64, region: Option<&BoxRegion>) -> f64 {
        let v = self.grid.cell_volume();
        let nodes: Vec<usize> = match region {
            Some(r) => self.grid.nodes_in(r),
            None => (0..self.grid.len()).collect(),
        };
        let s: Vec<f64> = nodes.iter().map(|&i| self.values[i].abs().powf(p)).collect();
        (v * crate::numerics::compensated_sum(&s)).powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_bilinear_data() {
        let b = BoxRegion::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let g = TensorGrid::covering(&b, &[5, 7]).unwrap();
        let u = GridFunction::from_fn(&g, |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1], ExteriorPolicy::Zero);
        let y = [0.13, 0.77];
        let exact = 1.0 + 2.0 * y[0] - y[1] + 0.5 * y[0] * y[1];
        assert!((u.interpolate(&y).unwrap() - exact).abs() < 1e-14);
        assert_eq!(u.interpolate(&[3.0, 1.0]), Some(0.0));
    }

    #[test]
    fn covering_is_cell_centred() {
        let b = BoxRegion::new(vec![-1.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g = TensorGrid::covering(&b, &[4, 2]).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.coord(0), vec![-0.75, 0.25]);
        assert_eq!(g.coord(7), vec![0.75, 0.75]);
        assert_eq!(g.region(), b);
        for f in 0..g.len() {
            assert_eq!(g.flat(&g.multi_index(f)), f);
            assert!(b.contains(&g.coord(f)));
        }
        assert_eq!(g.axis_index(5, 0), 2);
        assert_eq!(g.axis_index(5, 1), 1);
    }

    #[test]
    fn box_pieces_along_ray() {
        let b = BoxRegion::new(vec![2.0, -0.5], vec![3.0, 0.5]).unwrap();
        let p = ExteriorPolicy::Boxes(vec![ExteriorBox { region: b, value: 2.0 }]);
        let pieces = p.ray_pieces(&[0.0, 0.0], 0, 1.0, 1.0).unwrap();
        assert_eq!(pieces, vec![RayPiece { a: 2.0, b: 3.0, value: 2.0 }]);
        assert!(p.ray_pieces(&[0.0, 0.0], 0, -1.0, 1.0).unwrap().is_empty());
        assert!(p.ray_pieces(&[0.0, 0.7], 0, 1.0, 1.0).unwrap().is_empty());
        let half = BoxRegion::new(vec![1.0], vec![f64::INFINITY]).unwrap();
        let p = ExteriorPolicy::Boxes(vec![ExteriorBox { region: half, value: 1.0 }]);
        let pieces = p.ray_pieces(&[0.5], 0, 1.0, 0.5).unwrap();
        assert_eq!(pieces[0].a, 0.5);
        assert!(pieces[0].b.is_infinite());
    }

    #[test]
    fn lp_norm_of_constant() {
        let b = BoxRegion::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        let g = TensorGrid::covering(&b, &[8, 8]).unwrap();
        let u = GridFunction::constant(&g, 3.0);
        assert!((u.lp_norm(2.0, None) - 3.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}
