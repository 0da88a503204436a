//! Energy forms, the `V` and `H` norms, and anisotropic cutoff functions.
//!
//! On a grid with cell volume `V` the form
//! `E_Omega(u, v) = int_Omega int_Omega (u(y)-u(x))(v(y)-v(x)) mu(x, dy) dx`
//! becomes `V sum_{i in Omega} sum_{j in Omega} W_ij (u_j-u_i)(v_j-v_i)`,
//! where `W_ij` are the pair weights of [`crate::operator`] for axes-type
//! kernels and `V a(x_i,x_j) |x_i-x_j|^{-d-alpha}` for the isotropic kernel.
//! With these conventions `E(u, 1_{x_k}) = -2 V (L u)(x_k)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{AnisoRect, AnisotropyIndices, BoxRegion};
use crate::grid::{ExteriorPolicy, GridFunction, TensorGrid};
use crate::kernels::{tail_mass, tail_mass_box, KernelFamily};
use crate::numerics::{compensated_sum, integrate_power_weight, CompensatedSum};
use crate::operator::{axis_weights, near_field_weight, periodic_pair_weights};
use crate::tails::{moments, Ray};

/// Integration domain of an energy form.
#[derive(Debug, Clone, Copy)]
pub enum Domain<'a> {
    /// Nodes strictly inside an anisotropic rectangle.
    Rect(&'a AnisoRect),
    /// Every node of the grid.
    Grid,
    /// Whole space: grid pairs plus grid-to-exterior pairs. Pairs with both
    /// points outside the grid are not represented; they vanish whenever
    /// `u` or `v` vanishes outside the grid.
    Whole,
}

/// Pair weights of one kernel on one grid.
struct PairWeights<'a> {
    kernel: &'a KernelFamily,
    grid: &'a TensorGrid,
    axis: Vec<Vec<f64>>,
    near: Vec<f64>,
    periodic: Vec<Vec<f64>>,
}

impl<'a> PairWeights<'a> {
    fn new(kernel: &'a KernelFamily, grid: &'a TensorGrid) -> Self {
        let idx = kernel.indices();
        let (axis, near) = if kernel.is_axes_type() {
            (
                (0..grid.dim())
                    .map(|k| axis_weights(idx.alpha(k), grid.spacing()[k], grid.dims()[k]))
                    .collect(),
                (0..grid.dim())
                    .map(|k| near_field_weight(idx.alpha(k), grid.spacing()[k]))
                    .collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        let periodic = if grid.is_periodic() && kernel.is_axes_type() {
            (0..grid.dim())
                .map(|k| periodic_pair_weights(idx.alpha(k), grid.spacing()[k], grid.dims()[k]))
                .collect()
        } else {
            Vec::new()
        };
        PairWeights {
            kernel,
            grid,
            axis,
            near,
            periodic,
        }
    }

    /// `W` between nodes `j` steps apart on `axis`.
    fn axis_weight(&self, x: &[f64], y: &[f64], axis: usize, j: usize) -> f64 {
        let mut w = self.axis[axis][j];
        if j == 1 {
            w += self.near[axis];
        }
        w * self.kernel.coeff_at(x, y)
    }
}

fn membership(grid: &TensorGrid, domain: Domain) -> Vec<bool> {
    match domain {
        Domain::Rect(r) => {
            let b = r.as_box();
            (0..grid.len()).map(|i| b.contains(&grid.coord(i))).collect()
        }
        Domain::Grid | Domain::Whole => vec![true; grid.len()],
    }
}

fn check_pair(k: &KernelFamily, u: &GridFunction, v: &GridFunction) -> Result<()> {
    if u.grid != v.grid {
        return Err(Error::InvalidQuery("u and v live on different grids".into()));
    }
    if u.grid.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: u.grid.dim(),
        });
    }
    Ok(())
}

fn check_resolution(grid: &TensorGrid, inside: &[bool]) -> Result<()> {
    if !inside.iter().any(|b| *b) {
        return Err(Error::QuadratureResolutionError(
            "the domain contains no grid node".into(),
        ));
    }
    if !grid.is_periodic() {
        for k in 0..grid.dim() {
            if grid.dims()[k] < 2 {
                return Err(Error::QuadratureResolutionError(format!(
                    "axis {k} has a single node"
                )));
            }
        }
    }
    Ok(())
}

/// `sum_{j in Omega} W_ij pair(i, j)` for one node `i`,
/// counting each unordered pair once from its smaller index.
fn interior_row<F: Fn(usize, usize) -> f64>(pw: &PairWeights, inside: &[bool], pair: F, i: usize) -> f64 {
    let grid = pw.grid;
    let x = grid.coord(i);
    let mut acc = CompensatedSum::new();
    if pw.kernel.is_axes_type() {
        for axis in 0..grid.dim() {
            let s = grid.strides()[axis];
            let n = grid.dims()[axis];
            let p = grid.axis_index(i, axis);
            if grid.is_periodic() {
                let base = i - p * s;
                for (m, w) in pw.periodic[axis].iter().enumerate().skip(1) {
                    let j = base + ((p + m) % n) * s;
                    acc.add(0.5 * w * pair(i, j));
                }
                continue;
            }
            for step in 1..n - p {
                let j = i + step * s;
                if !inside[j] {
                    continue;
                }
                let y = grid.coord(j);
                acc.add(pw.axis_weight(&x, &y, axis, step) * pair(i, j));
            }
        }
    } else if let KernelFamily::IsotropicCoeff { alpha, dim, coeff } = pw.kernel {
        let vol = grid.cell_volume();
        for j in i + 1..grid.len() {
            if !inside[j] {
                continue;
            }
            let y = grid.coord(j);
            let r2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            let w = vol * coeff.eval(&x, &y) * r2.powf(-0.5 * (*dim as f64 + alpha));
            acc.add(w * pair(i, j));
        }
    }
    acc.value()
}

/// Discretized `int_{Omega^c} (u(y)-u(x))(v(y)-v(x)) mu(x, dy)` at node `i`
/// of `Omega`, over grid nodes outside `Omega` and the exterior beyond the grid.
fn outside_row(
    pw: &PairWeights,
    inside: &[bool],
    u: &GridFunction,
    v: &GridFunction,
    i: usize,
) -> Result<f64> {
    let grid = pw.grid;
    let x = grid.coord(i);
    let (ui, vi) = (u.values[i], v.values[i]);
    let mut acc = CompensatedSum::new();
    match pw.kernel {
        KernelFamily::Axes(_) | KernelFamily::ModulatedAxes { .. } => {
            let idx = pw.kernel.indices();
            for axis in 0..grid.dim() {
                let s = grid.strides()[axis];
                let n = grid.dims()[axis];
                let p = grid.axis_index(i, axis);
                let h = grid.spacing()[axis];
                for sign in [-1.0, 1.0] {
                    let room = if sign > 0.0 { n - 1 - p } else { p };
                    for step in 1..=room {
                        let j = if sign > 0.0 { i + step * s } else { i - step * s };
                        if inside[j] {
                            continue;
                        }
                        let y = grid.coord(j);
                        acc.add(
                            pw.axis_weight(&x, &y, axis, step)
                                * (u.values[j] - ui)
                                * (v.values[j] - vi),
                        );
                    }
                    let ray = Ray {
                        x: &x,
                        axis,
                        sign,
                        alpha: idx.alpha(axis),
                    };
                    let t0 = (room as f64 + 0.5) * h;
                    let m = moments(&ray, pw.kernel.coefficient(), t0, &u.exterior, Some(&v.exterior));
                    acc.add(m.guv - ui * m.gv - vi * m.gu + ui * vi * m.mass);
                    if room == 0 {
                        let mut y = x.clone();
                        y[axis] += sign * h;
                        let gu = exterior_value(&u.exterior, &y, grid, i)?;
                        let gv = exterior_value(&v.exterior, &y, grid, i)?;
                        acc.add(pw.near[axis] * pw.kernel.coeff_at(&x, &y) * (gu - ui) * (gv - vi));
                    }
                }
            }
        }
        KernelFamily::IsotropicCoeff { alpha, dim, coeff } => {
            let vol = grid.cell_volume();
            for j in 0..grid.len() {
                if inside[j] {
                    continue;
                }
                let y = grid.coord(j);
                let r2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
                let w = vol * coeff.eval(&x, &y) * r2.powf(-0.5 * (*dim as f64 + alpha));
                acc.add(w * (u.values[j] - ui) * (v.values[j] - vi));
            }
            let cu = constant_exterior(&u.exterior)?;
            let cv = constant_exterior(&v.exterior)?;
            if cu != ui || cv != vi {
                let mass = tail_mass_box(pw.kernel, &x, &grid.region())?;
                acc.add((cu - ui) * (cv - vi) * mass);
            }
        }
    }
    Ok(acc.value())
}

fn exterior_value(p: &ExteriorPolicy, y: &[f64], grid: &TensorGrid, i: usize) -> Result<f64> {
    p.value_at(y)
        .ok_or_else(|| Error::BoundaryStencilError(grid.multi_index(i)))
}

fn constant_exterior(p: &ExteriorPolicy) -> Result<f64> {
    match p {
        ExteriorPolicy::Zero => Ok(0.0),
        ExteriorPolicy::Constant(c) => Ok(*c),
        _ => Err(Error::Unsupported(
            "isotropic exterior integrals need zero or constant exterior data".into(),
        )),
    }
}

/// `E^mu_Omega(u, v)`.
pub fn energy_form(k: &KernelFamily, domain: Domain, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    check_pair(k, u, v)?;
    let grid = &u.grid;
    let inside = membership(grid, domain);
    check_resolution(grid, &inside)?;
    if grid.is_periodic() && !matches!(domain, Domain::Grid) {
        return Err(Error::Unsupported("periodic grids support the cell domain only".into()));
    }
    if grid.is_periodic() && k.coefficient().is_some() {
        return Err(Error::Unsupported("modulated kernels on periodic grids".into()));
    }
    let pw = PairWeights::new(k, grid);
    let vol = grid.cell_volume();
    let rows: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if inside[i] {
                let (u, v) = (&u.values, &v.values);
                interior_row(&pw, &inside, |i, j| (u[j] - u[i]) * (v[j] - v[i]), i)
            } else {
                0.0
            }
        })
        .collect();
    let mut total = 2.0 * vol * compensated_sum(&rows);
    if matches!(domain, Domain::Whole) {
        let outer: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| outside_row(&pw, &inside, u, v, i))
            .collect::<Result<_>>()?;
        total += 2.0 * vol * compensated_sum(&outer);
    }
    Ok(total)
}

/// `int_Omega int_Omega phi(u(x), u(y)) mu(x, dy) dx` for a symmetric `phi`
/// vanishing on the diagonal. Pairs outside the grid are not included.
pub fn pair_integral<F>(k: &KernelFamily, domain: Domain, u: &GridFunction, phi: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    check_pair(k, u, u)?;
    let grid = &u.grid;
    let inside = membership(grid, domain);
    check_resolution(grid, &inside)?;
    if grid.is_periodic() && (!matches!(domain, Domain::Grid) || k.coefficient().is_some()) {
        return Err(Error::Unsupported("periodic grids support the cell domain of the axes kernel only".into()));
    }
    let pw = PairWeights::new(k, grid);
    let vals = &u.values;
    let rows: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if inside[i] {
                interior_row(&pw, &inside, |i, j| phi(vals[i], vals[j]), i)
            } else {
                0.0
            }
        })
        .collect();
    Ok(2.0 * grid.cell_volume() * compensated_sum(&rows))
}

/// Squared `V`-seminorm and squared `H`-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// `int_Omega int_{R^d} (u(x)-u(y))^2 mu(x, dy) dx`.
    pub v_seminorm_sq: f64,
    /// `||u||^2_{L^2(Omega)} + int int_{R^d x R^d} (u(x)-u(y))^2 mu(x, dy) dx`.
    pub h_norm_sq: f64,
    pub l2_sq: f64,
}

/// Both norms of `u` on `Omega`. The `H`-norm needs `u` to vanish outside `Omega`.
pub fn norms(k: &KernelFamily, domain: Domain, u: &GridFunction) -> Result<Norms> {
    check_pair(k, u, u)?;
    let grid = &u.grid;
    if grid.is_periodic() {
        return Err(Error::Unsupported("norms on periodic grids".into()));
    }
    let inside = membership(grid, domain);
    check_resolution(grid, &inside)?;
    let supported = u.exterior.is_zero()
        && (0..grid.len()).all(|i| inside[i] || u.values[i] == 0.0);
    if !supported {
        return Err(Error::SupportViolation(
            "the H-norm needs u to vanish outside the domain".into(),
        ));
    }
    let pw = PairWeights::new(k, grid);
    let vol = grid.cell_volume();
    let inner = energy_form(k, domain_for_pairs(domain), u, u)?;
    let outer: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if inside[i] {
                outside_row(&pw, &inside, u, u, i)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_>>()?;
    let outer = vol * compensated_sum(&outer);
    let l2: Vec<f64> = (0..grid.len())
        .filter(|&i| inside[i])
        .map(|i| u.values[i] * u.values[i])
        .collect();
    let l2_sq = vol * compensated_sum(&l2);
    Ok(Norms {
        v_seminorm_sq: inner + outer,
        h_norm_sq: l2_sq + inner + 2.0 * outer,
        l2_sq,
    })
}

/// Only the `V`-seminorm; exterior data may be arbitrary.
pub fn v_seminorm_sq(k: &KernelFamily, domain: Domain, u: &GridFunction) -> Result<f64> {
    check_pair(k, u, u)?;
    let grid = &u.grid;
    let inside = membership(grid, domain);
    check_resolution(grid, &inside)?;
    let pw = PairWeights::new(k, grid);
    let inner = energy_form(k, domain_for_pairs(domain), u, u)?;
    let outer: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if inside[i] {
                outside_row(&pw, &inside, u, u, i)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_>>()?;
    Ok(inner + grid.cell_volume() * compensated_sum(&outer))
}

fn domain_for_pairs(domain: Domain) -> Domain {
    match domain {
        Domain::Whole => Domain::Grid,
        d => d,
    }
}

/// Parameters of a cutoff `tau` for `M_r(x0)` inside `M_{lambda r}(x0)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CutoffSpec {
    pub center: Vec<f64>,
    pub r: f64,
    pub lambda: f64,
}

/// Product of per-axis trapezoids, each mollified over one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    pub spec: CutoffSpec,
    idx: AnisotropyIndices,
    inner: Vec<f64>,
    outer: Vec<f64>,
    smoothing: Vec<f64>,
}

impl Cutoff {
    /// Profile of axis `k` at distance `t >= 0` from the center.
    pub fn axis_profile(&self, k: usize, t: f64) -> f64 {
        let t = t.abs();
        let h = self.smoothing[k];
        let a = self.inner[k] + 0.5 * h;
        let b = self.outer[k] - 0.5 * h;
        let ramp_integral = |s: f64| -> f64 {
            if s <= a {
                s
            } else if s < b {
                a + ((b - a) * (b - a) - (b - s) * (b - s)) / (2.0 * (b - a))
            } else {
                a + 0.5 * (b - a)
            }
        };
        if h == 0.0 {
            return ((b - t) / (b - a)).clamp(0.0, 1.0);
        }
        ((ramp_integral(t + 0.5 * h) - ramp_integral(t - 0.5 * h)) / h).clamp(0.0, 1.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (0..x.len())
            .map(|k| self.axis_profile(k, x[k] - self.spec.center[k]))
            .product()
    }

    /// Largest `|d_k tau|` of the profile.
    pub fn max_slope(&self, k: usize) -> f64 {
        1.0 / (self.outer[k] - self.inner[k] - self.smoothing[k])
    }

    /// The admissible slope `2 / ((lambda^{alpha_max/alpha_k} - 1) r^{alpha_max/alpha_k})`.
    pub fn slope_budget(&self, k: usize) -> f64 {
        2.0 / (self.outer[k] - self.inner[k])
    }

    /// Distances from the center where the profile of axis `k` has kinks.
    fn kinks(&self, k: usize) -> [f64; 4] {
        let h = self.smoothing[k];
        [
            self.inner[k],
            self.inner[k] + h,
            self.outer[k] - h,
            self.outer[k],
        ]
    }

    pub fn inner_rect(&self) -> Result<AnisoRect> {
        AnisoRect::new(&self.idx, &self.spec.center, self.spec.r)
    }

    pub fn outer_rect(&self) -> Result<AnisoRect> {
        AnisoRect::new(&self.idx, &self.spec.center, self.spec.lambda * self.spec.r)
    }
}

/// `8 r^{-alpha_max} sum_k (lambda^{alpha_max/alpha_k} - 1)^{-alpha_k}`.
pub fn cutoff_bound(idx: &AnisotropyIndices, r: f64, lambda: f64) -> f64 {
    8.0 * r.powf(-idx.alpha_max()) * cutoff_sum(idx, lambda)
}

/// `sum_k (lambda^{alpha_max/alpha_k} - 1)^{-alpha_k}`.
pub fn cutoff_sum(idx: &AnisotropyIndices, lambda: f64) -> f64 {
    (0..idx.dim())
        .map(|k| (lambda.powf(idx.axis_exponent(k)) - 1.0).powf(-idx.alpha(k)))
        .sum()
}

/// The cutoff for `spec`, smoothed at the spacing of `grid`, and its nodal values.
pub fn build_cutoff(
    idx: &AnisotropyIndices,
    spec: &CutoffSpec,
    grid: &TensorGrid,
) -> Result<(Cutoff, GridFunction)> {
    if spec.center.len() != idx.dim() || grid.dim() != idx.dim() {
        return Err(Error::DimensionMismatch {
            expected: idx.dim(),
            got: spec.center.len().min(grid.dim()),
        });
    }
    if !(spec.r > 0.0 && spec.r <= 1.0) {
        return Err(Error::InvalidRadius(format!("cutoff radius {} outside (0, 1]", spec.r)));
    }
    if !(spec.lambda > 1.0) || !spec.lambda.is_finite() {
        return Err(Error::InvalidQuery(format!("lambda = {} must exceed 1", spec.lambda)));
    }
    let inner = idx.half_widths(spec.r);
    let outer = idx.half_widths(spec.lambda * spec.r);
    let smoothing = grid.spacing().to_vec();
    let window = grid.region();
    for k in 0..idx.dim() {
        if spec.center[k] - outer[k] < window.lo[k] || spec.center[k] + outer[k] > window.hi[k] {
            return Err(Error::WindowError(format!(
                "grid does not contain the outer rectangle along axis {k}"
            )));
        }
        if smoothing[k] > 0.5 * (outer[k] - inner[k]) {
            return Err(Error::WindowError(format!(
                "spacing {} too coarse for the ramp of width {} on axis {k}",
                smoothing[k],
                outer[k] - inner[k]
            )));
        }
    }
    let cutoff = Cutoff {
        spec: spec.clone(),
        idx: idx.clone(),
        inner,
        outer,
        smoothing,
    };
    let tau = GridFunction::from_fn(grid, |x| cutoff.eval(x), ExteriorPolicy::Zero);
    Ok((cutoff, tau))
}

/// Measured carre du champ of a cutoff against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffBounds {
    pub measured_sup: f64,
    pub argmax: Vec<f64>,
    pub bound: f64,
    /// `measured_sup / bound`.
    pub ratio: f64,
    /// Within 5% of the bound without exceeding it.
    pub near_bound: bool,
}

/// `int (tau(y) - tau(x))^2 mu(x, dy)`, evaluated with the exact profile.
pub fn carre_du_champ(k: &KernelFamily, cutoff: &Cutoff, x: &[f64]) -> Result<f64> {
    if !k.is_axes_type() {
        return Err(Error::Unsupported(
            "carre du champ is computed for axes-type kernels".into(),
        ));
    }
    let idx = k.indices();
    let d = x.len();
    let c = &cutoff.spec.center;
    let profiles: Vec<f64> = (0..d).map(|j| cutoff.axis_profile(j, x[j] - c[j])).collect();
    let mut total = 0.0;
    for axis in 0..d {
        let others: f64 = (0..d)
            .filter(|&j| j != axis)
            .map(|j| profiles[j] * profiles[j])
            .product();
        if others == 0.0 {
            continue;
        }
        let here = profiles[axis];
        let s = x[axis] - c[axis];
        let mut breaks: Vec<f64> = cutoff
            .kinks(axis)
            .iter()
            .flat_map(|q| [(q - s).abs(), (q + s).abs()])
            .filter(|t| *t > 0.0)
            .collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let t0 = breaks[0];
        let t_far = *breaks.last().unwrap();
        let alpha = idx.alpha(axis);
        let g = |t: f64| {
            let mut acc = 0.0;
            for sign in [-1.0, 1.0] {
                let diff = cutoff.axis_profile(axis, s + sign * t) - here;
                let a = match k.coefficient() {
                    None => 1.0,
                    Some(coef) => {
                        let mut y = x.to_vec();
                        y[axis] += sign * t;
                        coef.eval(x, &y)
                    }
                };
                acc += a * diff * diff;
            }
            alpha * (2.0 - alpha) * acc
        };
        total += others * integrate_power_weight(g, alpha, t0, t_far.max(t0 * (1.0 + 1e-12)), &breaks);
    }
    Ok(total)
}

/// Sup over the grid nodes of the carre du champ, against
/// `8 r^{-alpha_max} sum_k (lambda^{alpha_max/alpha_k} - 1)^{-alpha_k}`.
pub fn cutoff_bounds(k: &KernelFamily, cutoff: &Cutoff, grid: &TensorGrid) -> Result<CutoffBounds> {
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| carre_du_champ(k, cutoff, &grid.coord(i)))
        .collect::<Result<_>>()?;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
    for (i, v) in values.iter().enumerate() {
        if *v > best {
            best = *v;
            arg = i;
        }
    }
    let bound = cutoff_bound(&k.indices(), cutoff.spec.r, cutoff.spec.lambda);
    let ratio = best / bound;
    Ok(CutoffBounds {
        measured_sup: best,
        argmax: grid.coord(arg),
        bound,
        ratio,
        near_bound: (0.95..=1.0).contains(&ratio),
    })
}

/// The tail product `int_{M_{lambda r}} u^2 tau^2 mu(x, M_{lambda r}^c) dx`
/// and the reference `r^{-alpha_max} sum_k (...) ||u||^2_{L^2(M_{lambda r})}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProduct {
    pub lhs: f64,
    pub reference: f64,
    /// `lhs / reference`: the measured constant.
    pub ratio: f64,
}

pub fn quadrat_tail_product(k: &KernelFamily, cutoff: &Cutoff, u: &GridFunction) -> Result<TailProduct> {
    let outer = cutoff.outer_rect()?;
    let nodes = u.grid.nodes_in(&outer.as_box());
    let vol = u.grid.cell_volume();
    let mut lhs = CompensatedSum::new();
    let mut l2 = CompensatedSum::new();
    for &i in &nodes {
        let x = u.grid.coord(i);
        let t = cutoff.eval(&x);
        let w = u.values[i] * u.values[i];
        l2.add(vol * w);
        if t > 0.0 {
            lhs.add(vol * w * t * t * tail_mass(k, &x, &outer)?);
        }
    }
    let idx = k.indices();
    let reference = cutoff.spec.r.powf(-idx.alpha_max()) * cutoff_sum(&idx, cutoff.spec.lambda) * l2.value();
    let lhs = lhs.value();
    let ratio = if reference > 0.0 { lhs / reference } else { 0.0 };
    Ok(TailProduct { lhs, reference, ratio })
}

/// `||u||_{L^p}` over the nodes of a box; `p = inf` gives the max norm.
pub fn lp_norm(u: &GridFunction, p: f64, region: Option<&BoxRegion>) -> f64 {
    if p.is_infinite() {
        let nodes: Vec<usize> = match region {
            Some(r) => u.grid.nodes_in(r),
            None => (0..u.grid.len()).collect(),
        };
        return nodes.iter().map(|&i| u.values[i].abs()).fold(0.0, f64::max);
    }
    u.lp_norm(p, region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn idx2() -> AnisotropyIndices {
        AnisotropyIndices::new(vec![1.5, 0.5]).unwrap()
    }

    #[test]
    fn constants_have_zero_energy() {
        let k = KernelFamily::Axes(idx2());
        let b = BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let g = TensorGrid::covering(&b, &[8, 8]).unwrap();
        let u = GridFunction::from_fn(&g, |x| x[0] * x[1], ExteriorPolicy::Zero);
        let c = GridFunction::constant(&g, 1.0);
        assert_eq!(energy_form(&k, Domain::Grid, &u, &c).unwrap(), 0.0);
        assert!(energy_form(&k, Domain::Whole, &c, &c).unwrap().abs() < 1e-9);
    }

    #[test]
    fn node_indicator_pairs_with_operator() {
        let k = KernelFamily::Axes(idx2());
        let b = BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let g = TensorGrid::covering(&b, &[6, 5]).unwrap();
        let u = GridFunction::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin(), ExteriorPolicy::Constant(0.3));
        let op = crate::operator::DiscreteOperator::new(&k, &g).unwrap();
        let lu = op.apply_all(&u).unwrap();
        for node in [0, 7, 29] {
            let phi = GridFunction::node_indicator(&g, node);
            let e = energy_form(&k, Domain::Whole, &u, &phi).unwrap();
            assert_relative_eq!(e, -2.0 * g.cell_volume() * lu[node], max_relative = 1e-10);
        }
    }

    #[test]
    fn figure_one_cutoff() {
        let idx = idx2();
        let b = BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let g = TensorGrid::covering(&b, &[64, 257]).unwrap();
        let spec = CutoffSpec { center: vec![0.0, 0.0], r: 0.5, lambda: 1.5 };
        let (c, tau) = build_cutoff(&idx, &spec, &g).unwrap();
        assert_eq!(c.eval(&[0.0, 0.0]), 1.0);
        assert_relative_eq!(c.slope_budget(1), 128.0 / 19.0, max_relative = 1e-12);
        assert!(c.max_slope(1) <= c.slope_budget(1));
        let outer = c.outer_rect().unwrap();
        for i in 0..g.len() {
            let x = g.coord(i);
            assert!((0.0..=1.0).contains(&tau.values[i]));
            if !outer.contains(&x) {
                assert_eq!(tau.values[i], 0.0);
            }
        }
        assert_relative_eq!(cutoff_bound(&idx, 0.5, 1.5), 78.67, max_relative = 2e-4);
    }

    #[test]
    fn window_errors() {
        let idx = idx2();
        let b = BoxRegion::new(vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap();
        let g = TensorGrid::covering(&b, &[64, 64]).unwrap();
        let spec = CutoffSpec { center: vec![0.0, 0.0], r: 0.5, lambda: 1.5 };
        assert_eq!(build_cutoff(&idx, &spec, &g).unwrap_err().name(), "WindowError");
    }
}
