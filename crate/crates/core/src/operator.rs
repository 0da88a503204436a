//! Discretization of the axes operator on tensor grids.
//!
//! Along axis `k` with spacing `h` the one-dimensional integral
//! `int_0^inf (u(x+t) - 2u(x) + u(x-t)) alpha (2-alpha) t^{-1-alpha} dt`
//! is replaced by
//! `sum_j w_j (u(x+jh) - 2u(x) + u(x-jh))` with
//! `w_j = alpha (2-alpha) int_{(j-1/2)h}^{(j+1/2)h} t^{-1-alpha} dt`,
//! plus the cell `|t| < h/2` through the second difference
//! (`alpha 2^{alpha-2} h^{-alpha}` added to `w_1`) and the exterior beyond
//! the last node through the grid function's exterior policy.

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geometry::AnisotropyIndices;
use crate::grid::{ExteriorPolicy, GridFunction, TensorGrid};
use crate::kernels::{Coefficient, KernelFamily};
use crate::numerics::{linear_fit, CompensatedSum, LinearFit};
use crate::tails::{moments, ray_mass, Ray};

/// Number of periods summed explicitly on periodic grids.
const PERIODIC_IMAGES: usize = 32;

/// `psi(xi) = sum_k |xi_k|^{alpha_k}`.
pub fn multiplier(idx: &AnisotropyIndices, xi: &[f64]) -> f64 {
    xi.iter()
        .zip(idx.alphas())
        .map(|(x, a)| x.abs().powf(*a))
        .sum()
}

/// `C(alpha) = alpha (2-alpha) int_0^inf... = alpha (2 - alpha) pi / (Gamma(1 + alpha) sin(pi alpha / 2))`,
/// the constant with `alpha (2-alpha) int (1 - cos(xi t)) |t|^{-1-alpha} dt = C(alpha) |xi|^alpha`.
pub fn symbol_constant(alpha: f64) -> f64 {
    alpha * (2.0 - alpha) * std::f64::consts::PI
        / (gamma(1.0 + alpha) * (std::f64::consts::FRAC_PI_2 * alpha).sin())
}

/// `m(xi) = C(alpha) |xi|^alpha`.
pub fn symbol(alpha: f64, xi: f64) -> f64 {
    symbol_constant(alpha) * xi.abs().powf(alpha)
}

/// `w_j` for `j = 0..=n` (entry 0 unused).
pub fn axis_weights(alpha: f64, h: f64, n: usize) -> Vec<f64> {
    let s = (2.0 - alpha) * h.powf(-alpha);
    let mut w = vec![0.0; n + 1];
    for (j, wj) in w.iter_mut().enumerate().skip(1) {
        let j = j as f64;
        *wj = s * ((j - 0.5).powf(-alpha) - (j + 0.5).powf(-alpha));
    }
    w
}

/// Weight of the second-difference correction for the singular cell.
pub fn near_field_weight(alpha: f64, h: f64) -> f64 {
    alpha * 2f64.powf(alpha - 2.0) * h.powf(-alpha)
}

/// Periodised pair weights `W_m`, `m = 0..n`, for a period of `n` nodes.
pub fn periodic_pair_weights(alpha: f64, h: f64, n: usize) -> Vec<f64> {
    let jmax = PERIODIC_IMAGES * n;
    let w = axis_weights(alpha, h, jmax);
    let mut out = vec![0.0; n];
    for (j, wj) in w.iter().enumerate().skip(1) {
        let wj = if j == 1 {
            wj + near_field_weight(alpha, h)
        } else {
            *wj
        };
        out[j % n] += wj;
        out[(n - j % n) % n] += wj;
    }
    let far = 2.0 * (2.0 - alpha) * ((jmax as f64 + 0.5) * h).powf(-alpha);
    for o in out.iter_mut() {
        *o += far / n as f64;
    }
    out[0] = 0.0;
    out
}

/// Matrix-free discrete operator for the axes and modulated-axes kernels.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    kernel: KernelFamily,
    idx: AnisotropyIndices,
    grid: TensorGrid,
    weights: Vec<Vec<f64>>,
    near: Vec<f64>,
    periodic: Option<Vec<Vec<f64>>>,
    self_mass: Vec<f64>,
}

impl DiscreteOperator {
    pub fn new(kernel: &KernelFamily, grid: &TensorGrid) -> Result<Self> {
        if !kernel.is_axes_type() {
            return Err(Error::Unsupported(
                "the isotropic kernel has no grid operator; use its energy form".into(),
            ));
        }
        if kernel.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: grid.dim(),
            });
        }
        let idx = kernel.indices();
        let d = grid.dim();
        let weights: Vec<Vec<f64>> = (0..d)
            .map(|k| axis_weights(idx.alpha(k), grid.spacing()[k], grid.dims()[k]))
            .collect();
        let near: Vec<f64> = (0..d)
            .map(|k| near_field_weight(idx.alpha(k), grid.spacing()[k]))
            .collect();
        let periodic = if grid.is_periodic() {
            if kernel.coefficient().is_some() {
                return Err(Error::Unsupported(
                    "modulated kernels on periodic grids".into(),
                ));
            }
            Some(
                (0..d)
                    .map(|k| periodic_pair_weights(idx.alpha(k), grid.spacing()[k], grid.dims()[k]))
                    .collect(),
            )
        } else {
            None
        };
        let mut op = DiscreteOperator {
            kernel: kernel.clone(),
            idx,
            grid: grid.clone(),
            weights,
            near,
            periodic,
            self_mass: Vec::new(),
        };
        if op.periodic.is_none() {
            op.self_mass = (0..grid.len())
                .into_par_iter()
                .map(|i| op.compute_self_mass(i))
                .collect();
        }
        Ok(op)
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelFamily {
        &self.kernel
    }

    fn coeff(&self) -> Option<&Coefficient> {
        self.kernel.coefficient()
    }

    /// Nodes available on the `sign` side of `node` along `axis`.
    fn room(&self, node: usize, axis: usize, sign: f64) -> usize {
        let p = self.grid.axis_index(node, axis);
        if sign > 0.0 {
            self.grid.dims()[axis] - 1 - p
        } else {
            p
        }
    }

    fn tail_start(&self, node: usize, axis: usize, sign: f64) -> f64 {
        (self.room(node, axis, sign) as f64 + 0.5) * self.grid.spacing()[axis]
    }

    /// Point `j` steps from `x` along `axis`. Grid nodes get their own
    /// coordinates so that a discontinuous coefficient sees the same pair
    /// from both ends.
    fn neighbour_point(&self, x: &[f64], axis: usize, sign: f64, j: usize) -> Vec<f64> {
        let mut y = x.to_vec();
        let h = self.grid.spacing()[axis];
        let p = ((x[axis] - self.grid.origin()[axis]) / h).round() as i64 + sign as i64 * j as i64;
        if p >= 0 && (p as usize) < self.grid.dims()[axis] {
            y[axis] = self.grid.coord_axis(axis, p as usize);
        } else {
            y[axis] += sign * j as f64 * h;
        }
        y
    }

    /// Weight between `node` and its `j`-th neighbour on the `sign` side.
    fn pair_weight(&self, x: &[f64], axis: usize, sign: f64, j: usize) -> f64 {
        let mut w = self.weights[axis][j];
        if j == 1 {
            w += self.near[axis];
        }
        match self.coeff() {
            None => w,
            Some(c) => w * c.eval(x, &self.neighbour_point(x, axis, sign, j)),
        }
    }

    /// Weight of the singular-cell correction towards a missing neighbour.
    fn missing_neighbour_weight(&self, x: &[f64], axis: usize, sign: f64) -> f64 {
        match self.coeff() {
            None => self.near[axis],
            Some(c) => self.near[axis] * c.eval(x, &self.neighbour_point(x, axis, sign, 1)),
        }
    }

    fn compute_self_mass(&self, node: usize) -> f64 {
        let x = self.grid.coord(node);
        let mut acc = CompensatedSum::new();
        for axis in 0..self.grid.dim() {
            for sign in [-1.0, 1.0] {
                let ray = Ray {
                    x: &x,
                    axis,
                    sign,
                    alpha: self.idx.alpha(axis),
                };
                acc.add(ray_mass(&ray, self.coeff(), self.tail_start(node, axis, sign)));
                if self.room(node, axis, sign) == 0 {
                    acc.add(self.missing_neighbour_weight(&x, axis, sign));
                }
            }
        }
        acc.value()
    }

    /// Coefficient of `u(node)` in the exterior part: mass beyond the grid.
    pub fn exterior_mass(&self, node: usize) -> f64 {
        self.self_mass.get(node).copied().unwrap_or(0.0)
    }

    /// Sum of all weights acting on `u(node)`: the diagonal of `-L`.
    pub fn diagonal(&self, node: usize) -> f64 {
        if let Some(pw) = &self.periodic {
            return pw.iter().map(|w| w.iter().sum::<f64>()).sum();
        }
        let x = self.grid.coord(node);
        let mut acc = CompensatedSum::new();
        for axis in 0..self.grid.dim() {
            for sign in [-1.0, 1.0] {
                for j in 1..=self.room(node, axis, sign) {
                    acc.add(self.pair_weight(&x, axis, sign, j));
                }
            }
        }
        acc.add(self.self_mass[node]);
        acc.value()
    }

    /// Grid part of `L u` at `node` with zero exterior data.
    fn homogeneous_at(&self, values: &[f64], node: usize) -> f64 {
        let x = self.grid.coord(node);
        let ux = values[node];
        let mut acc = CompensatedSum::new();
        if let Some(pw) = &self.periodic {
            for (axis, w) in pw.iter().enumerate() {
                let n = self.grid.dims()[axis];
                let s = self.grid.strides()[axis];
                let p = self.grid.axis_index(node, axis);
                let base = node - p * s;
                for (m, wm) in w.iter().enumerate().skip(1) {
                    acc.add(wm * (values[base + ((p + m) % n) * s] - ux));
                }
            }
            return acc.value();
        }
        for axis in 0..self.grid.dim() {
            let s = self.grid.strides()[axis];
            for sign in [-1.0, 1.0] {
                for j in 1..=self.room(node, axis, sign) {
                    let y = if sign > 0.0 { node + j * s } else { node - j * s };
                    acc.add(self.pair_weight(&x, axis, sign, j) * (values[y] - ux));
                }
            }
        }
        acc.add(-ux * self.self_mass[node]);
        acc.value()
    }

    /// Exterior coupling at `node`: the part of `L u` driven by exterior data.
    fn coupling_at(&self, policy: &ExteriorPolicy, node: usize) -> Result<f64> {
        if self.periodic.is_some() || policy.is_zero() {
            return Ok(0.0);
        }
        let x = self.grid.coord(node);
        let mut acc = CompensatedSum::new();
        for axis in 0..self.grid.dim() {
            for sign in [-1.0, 1.0] {
                let ray = Ray {
                    x: &x,
                    axis,
                    sign,
                    alpha: self.idx.alpha(axis),
                };
                let t0 = self.tail_start(node, axis, sign);
                acc.add(moments(&ray, self.coeff(), t0, policy, None).gu);
                if self.room(node, axis, sign) == 0 {
                    let y = self.neighbour_point(&x, axis, sign, 1);
                    let g = policy
                        .value_at(&y)
                        .ok_or_else(|| Error::BoundaryStencilError(self.grid.multi_index(node)))?;
                    acc.add(self.missing_neighbour_weight(&x, axis, sign) * g);
                }
            }
        }
        Ok(acc.value())
    }

    /// `L u` at one node.
    pub fn apply_at(&self, u: &GridFunction, node: usize) -> Result<f64> {
        self.check(u)?;
        if node >= self.grid.len() {
            return Err(Error::InvalidQuery(format!("node {node} out of range")));
        }
        if self.periodic.is_none() && !u.exterior.is_known() {
            return self.truncated_at(&u.values, node);
        }
        Ok(self.homogeneous_at(&u.values, node) + self.coupling_at(&u.exterior, node)?)
    }

    /// Grid-only sum for unknown exterior data; needs a neighbour on every side.
    fn truncated_at(&self, values: &[f64], node: usize) -> Result<f64> {
        let x = self.grid.coord(node);
        let ux = values[node];
        let mut acc = CompensatedSum::new();
        for axis in 0..self.grid.dim() {
            let s = self.grid.strides()[axis];
            for sign in [-1.0, 1.0] {
                let room = self.room(node, axis, sign);
                if room == 0 {
                    return Err(Error::BoundaryStencilError(self.grid.multi_index(node)));
                }
                for j in 1..=room {
                    let y = if sign > 0.0 { node + j * s } else { node - j * s };
                    acc.add(self.pair_weight(&x, axis, sign, j) * (values[y] - ux));
                }
            }
        }
        Ok(acc.value())
    }

    /// `L u` at every node.
    pub fn apply_all(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check(u)?;
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.apply_at(u, i))
            .collect()
    }

    /// `L_0 v`: the operator with zero exterior data, on raw node values.
    pub fn apply_homogeneous(&self, values: &[f64]) -> Vec<f64> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.homogeneous_at(values, i))
            .collect()
    }

    /// `L u - L_0 u`: the contribution of the exterior data.
    pub fn exterior_coupling(&self, policy: &ExteriorPolicy) -> Result<Vec<f64>> {
        if !policy.is_known() {
            return Err(Error::InvalidQuery("exterior data required".into()));
        }
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.coupling_at(policy, i))
            .collect()
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if u.grid != self.grid {
            return Err(Error::InvalidQuery("grid function lives on a different grid".into()));
        }
        Ok(())
    }
}

/// `L u(node)` for the axes or modulated-axes kernel.
pub fn apply_operator(k: &KernelFamily, u: &GridFunction, node: usize) -> Result<f64> {
    DiscreteOperator::new(k, &u.grid)?.apply_at(u, node)
}

/// Result of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStudy {
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when every level is exact.
    pub fit: Option<LinearFit>,
}

impl OrderStudy {
    pub fn order(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn is_exact(&self) -> bool {
        self.fit.is_none()
    }
}

/// Log-log fit of `|L_h u(x0) - exact|` against the spacing of `axis`.
///
/// `levels` are the same test function sampled on successively finer grids,
/// each having a node at `x0`.
pub fn consistency_order(
    k: &KernelFamily,
    levels: &[GridFunction],
    x0: &[f64],
    exact: f64,
    axis: usize,
) -> Result<OrderStudy> {
    if levels.len() < 3 {
        return Err(Error::InvalidQuery("need at least three refinement levels".into()));
    }
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for u in levels {
        let node = u
            .grid
            .nearest(x0)
            .ok_or_else(|| Error::InvalidQuery("x0 outside the grid".into()))?;
        let c = u.grid.coord(node);
        let off: f64 = c.iter().zip(x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if off > 1e-9 * u.grid.spacing()[axis] {
            return Err(Error::InvalidQuery("x0 is not a grid node".into()));
        }
        spacings.push(u.grid.spacing()[axis]);
        errors.push((apply_operator(k, u, node)? - exact).abs());
    }
    let scale = exact.abs().max(1.0);
    if errors.iter().all(|e| *e <= 1e-13 * scale) {
        return Ok(OrderStudy {
            spacings,
            errors,
            fit: None,
        });
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]) && errors.iter().all(|e| *e > 0.0);
    if !monotone {
        return Err(Error::OrderFitUnreliable { errors });
    }
    let lx: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let fit = linear_fit(&lx, &ly).ok_or(Error::OrderFitUnreliable {
        errors: errors.clone(),
    })?;
    Ok(OrderStudy {
        spacings,
        errors,
        fit: Some(fit),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxRegion;
    use approx::assert_relative_eq;

    #[test]
    fn multiplier_examples() {
        let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
        assert_eq!(multiplier(&idx, &[0.0, 0.0]), 0.0);
        assert_relative_eq!(multiplier(&idx, &[1.0, 1.0]), 2.0);
        assert_relative_eq!(multiplier(&idx, &[2.0, 0.0]), 2f64.powf(1.5));
    }

    #[test]
    fn symbol_constant_at_one_is_pi() {
        assert_relative_eq!(symbol_constant(1.0), std::f64::consts::PI, epsilon = 1e-13);
    }

    #[test]
    fn weights_telescope() {
        let w = axis_weights(0.8, 0.1, 50);
        let total: f64 = w.iter().sum();
        let expect = (2.0 - 0.8) * 0.1f64.powf(-0.8) * (0.5f64.powf(-0.8) - 50.5f64.powf(-0.8));
        assert_relative_eq!(total, expect, max_relative = 1e-13);
    }

    #[test]
    fn constants_are_annihilated() {
        let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
        let k = KernelFamily::Axes(idx);
        let b = BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let g = TensorGrid::covering(&b, &[9, 7]).unwrap();
        let u = GridFunction::constant(&g, 2.5);
        let op = DiscreteOperator::new(&k, &g).unwrap();
        for v in op.apply_all(&u).unwrap() {
            assert!(v.abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn checkerboard_stencil_is_symmetric() {
        // Nodes fall on cell faces, where x + j h and the node coordinate
        // can disagree in the last bit.
        let idx = AnisotropyIndices::new(vec![1.9]).unwrap();
        let coeff = Coefficient::Checkerboard { cell: 0.5, low: 1.0, high: 2.0 };
        let k = KernelFamily::modulated(idx.clone(), coeff).unwrap();
        let rect = crate::geometry::AnisoRect::new(&idx, &[0.0], 1.0).unwrap();
        let g = TensorGrid::on_rect(&rect, &[59]).unwrap();
        let op = DiscreteOperator::new(&k, &g).unwrap();
        let n = g.len();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                op.apply_homogeneous(&e)
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(cols[j][i], cols[i][j], "({i}, {j})");
            }
        }
    }

    #[test]
    fn unknown_exterior_edge_node_errors() {
        let idx = AnisotropyIndices::new(vec![1.0]).unwrap();
        let k = KernelFamily::Axes(idx);
        let b = BoxRegion::new(vec![-1.0], vec![1.0]).unwrap();
        let g = TensorGrid::covering(&b, &[8]).unwrap();
        let mut u = GridFunction::constant(&g, 1.0);
        u.exterior = ExteriorPolicy::Unknown;
        let err = apply_operator(&k, &u, 0).unwrap_err();
        assert_eq!(err.name(), "BoundaryStencilError");
        assert!(apply_operator(&k, &u, 3).is_ok());
    }

    #[test]
    fn isotropic_has_no_operator() {
        let k = KernelFamily::isotropic(1.0, 2, Coefficient::Constant(1.0)).unwrap();
        let b = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g = TensorGrid::covering(&b, &[4, 4]).unwrap();
        assert_eq!(DiscreteOperator::new(&k, &g).unwrap_err().name(), "Unsupported");
    }
}
