//! Jump-measure families and numeric checks of their structural assumptions.
//!
//! Three families are supported:
//!
//! * `Axes`: charges only the axis-parallel lines through `x`, with density
//!   `alpha_k (2 - alpha_k) |h|^{-1-alpha_k}` along axis `k`;
//! * `IsotropicCoeff`: `a(x, y) |x - y|^{-d-alpha}` with `a` in `[1, 2]`;
//! * `ModulatedAxes`: `a(x, y)` times the axes density.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{AnisoRect, AnisotropyIndices, BoxRegion};
use crate::grid::GridFunction;
use crate::numerics::{gl16, integrate_power_weight, integrate_ray_tail, GaussLegendre};

/// Signature of a user-supplied coefficient `a(x, y)`.
pub type CoefficientFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// A coefficient `a(x, y)` taking values in `[1, 2]`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// `low + (high - low) (chi(x) + chi(y)) / 2` with `chi` the parity of
    /// the cell of side `cell` containing the point.
    Checkerboard { cell: f64, low: f64, high: f64 },
    /// `low + (high - low) (b(x) + b(y)) / 2` with `b(z) = exp(-|z - c|^2 / w^2)`.
    SmoothBump {
        center: Vec<f64>,
        width: f64,
        low: f64,
        high: f64,
    },
    /// Arbitrary callable. `symmetric` is the caller's declaration only.
    Custom {
        name: String,
        f: Arc<CoefficientFn>,
        symmetric: bool,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Checkerboard { cell, low, high } => {
                write!(f, "Checkerboard {{ cell: {cell}, low: {low}, high: {high} }}")
            }
            Coefficient::SmoothBump {
                center,
                width,
                low,
                high,
            } => write!(
                f,
                "SmoothBump {{ center: {center:?}, width: {width}, low: {low}, high: {high} }}"
            ),
            Coefficient::Custom {
                name, symmetric, ..
            } => write!(f, "Custom {{ name: {name:?}, symmetric: {symmetric} }}"),
        }
    }
}

fn parity(z: &[f64], cell: f64) -> f64 {
    let s: i64 = z.iter().map(|v| (v / cell).floor() as i64).sum();
    s.rem_euclid(2) as f64
}

impl Coefficient {
    pub fn custom<F>(name: &str, symmetric: bool, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Coefficient::Custom {
            name: name.to_string(),
            f: Arc::new(f),
            symmetric,
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Checkerboard { cell, low, high } => {
                low + (high - low) * 0.5 * (parity(x, *cell) + parity(y, *cell))
            }
            Coefficient::SmoothBump {
                center,
                width,
                low,
                high,
            } => {
                let b = |z: &[f64]| {
                    let r2: f64 = z.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                    (-r2 / (width * width)).exp()
                };
                low + (high - low) * 0.5 * (b(x) + b(y))
            }
            Coefficient::Custom { f, .. } => f(x, y),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_declared_symmetric(&self) -> bool {
        match self {
            Coefficient::Custom { symmetric, .. } => *symmetric,
            _ => true,
        }
    }

    /// Checks the catalog parameters keep the range inside `[1, 2]`.
    pub fn validate(&self) -> Result<()> {
        let in_range = |v: f64| (1.0..=2.0).contains(&v);
        let ok = match self {
            Coefficient::Constant(c) => in_range(*c),
            Coefficient::Checkerboard { cell, low, high } => {
                *cell > 0.0 && in_range(*low) && in_range(*high)
            }
            Coefficient::SmoothBump {
                width, low, high, ..
            } => *width > 0.0 && in_range(*low) && in_range(*high),
            Coefficient::Custom { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidQuery(format!(
                "coefficient {self:?} leaves the range [1, 2]"
            )))
        }
    }
}

/// A family of jump measures `mu(x, .)`.
#[derive(Debug, Clone)]
pub enum KernelFamily {
    Axes(AnisotropyIndices),
    IsotropicCoeff {
        alpha: f64,
        dim: usize,
        coeff: Coefficient,
    },
    ModulatedAxes {
        idx: AnisotropyIndices,
        coeff: Coefficient,
    },
}

/// Where to evaluate a density.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelQuery {
    /// One-dimensional offset `h` along `axis` (axes-type kernels).
    Axis { axis: usize, offset: f64 },
    /// Target point `y` (isotropic kernel).
    Point(Vec<f64>),
}

/// `alpha (2 - alpha) |h|^{-1-alpha}`.
pub fn axis_density(alpha: f64, h: f64) -> f64 {
    alpha * (2.0 - alpha) * h.abs().powf(-1.0 - alpha)
}

impl KernelFamily {
    pub fn isotropic(alpha: f64, dim: usize, coeff: Coefficient) -> Result<Self> {
        AnisotropyIndices::isotropic(alpha, dim)?;
        coeff.validate()?;
        Ok(KernelFamily::IsotropicCoeff { alpha, dim, coeff })
    }

    pub fn modulated(idx: AnisotropyIndices, coeff: Coefficient) -> Result<Self> {
        coeff.validate()?;
        Ok(KernelFamily::ModulatedAxes { idx, coeff })
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelFamily::Axes(idx) | KernelFamily::ModulatedAxes { idx, .. } => idx.dim(),
            KernelFamily::IsotropicCoeff { dim, .. } => *dim,
        }
    }

    /// The indices of the reference axes kernel this family is compared with.
    pub fn indices(&self) -> AnisotropyIndices {
        match self {
            KernelFamily::Axes(idx) | KernelFamily::ModulatedAxes { idx, .. } => idx.clone(),
            KernelFamily::IsotropicCoeff { alpha, dim, .. } => {
                AnisotropyIndices::isotropic(*alpha, *dim).expect("validated at construction")
            }
        }
    }

    pub fn is_axes_type(&self) -> bool {
        !matches!(self, KernelFamily::IsotropicCoeff { .. })
    }

    pub fn coefficient(&self) -> Option<&Coefficient> {
        match self {
            KernelFamily::Axes(_) => None,
            KernelFamily::IsotropicCoeff { coeff, .. } | KernelFamily::ModulatedAxes { coeff, .. } => {
                Some(coeff)
            }
        }
    }

    /// `a(x, y)`, or one for the plain axes kernel.
    pub fn coeff_at(&self, x: &[f64], y: &[f64]) -> f64 {
        self.coefficient().map_or(1.0, |c| c.eval(x, y))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Kernel density in the parametrization native to the variant.
pub fn density_eval(k: &KernelFamily, x: &[f64], query: &KernelQuery) -> Result<f64> {
    k.check_dim(x)?;
    match (k, query) {
        (KernelFamily::Axes(idx), KernelQuery::Axis { axis, offset })
        | (KernelFamily::ModulatedAxes { idx, .. }, KernelQuery::Axis { axis, offset }) => {
            if *axis >= idx.dim() {
                return Err(Error::InvalidQuery(format!("axis {axis} out of range")));
            }
            if *offset == 0.0 {
                return Err(Error::SingularPoint);
            }
            let base = axis_density(idx.alpha(*axis), *offset);
            let mut y = x.to_vec();
            y[*axis] += offset;
            Ok(base * k.coeff_at(x, &y))
        }
        (KernelFamily::IsotropicCoeff { alpha, dim, coeff }, KernelQuery::Point(y)) => {
            if y.len() != *dim {
                return Err(Error::DimensionMismatch {
                    expected: *dim,
                    got: y.len(),
                });
            }
            let r = euclid(x, y);
            if r == 0.0 {
                return Err(Error::SingularPoint);
            }
            Ok(coeff.eval(x, y) * r.powf(-(*dim as f64) - alpha))
        }
        _ => Err(Error::InvalidQuery(
            "query type does not match the kernel variant".into(),
        )),
    }
}

fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Quadrature over unit directions: `(direction, weight)` pairs whose
/// weights sum to the surface measure of the sphere.
pub(crate) fn sphere_rule(dim: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match dim {
        1 => Ok(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]),
        2 => {
            let n = 128;
            Ok((0..n)
                .map(|i| {
                    let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                    (vec![t.cos(), t.sin()], 2.0 * PI / n as f64)
                })
                .collect())
        }
        3 => {
            let polar = GaussLegendre::new(24);
            let n_az = 48;
            let mut out = Vec::with_capacity(24 * n_az);
            for (z, w) in polar.nodes.iter().zip(&polar.weights) {
                let s = (1.0 - z * z).sqrt();
                for j in 0..n_az {
                    let t = 2.0 * PI * (j as f64 + 0.5) / n_az as f64;
                    out.push((vec![s * t.cos(), s * t.sin(), *z], w * 2.0 * PI / n_az as f64));
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!(
            "isotropic kernel integration in dimension {dim}"
        ))),
    }
}

/// Default cap for [`check_levy_integrability`].
pub const LEVY_CAP: f64 = 1e8;

/// Per-point value of `int (|x - y|^2 ^ 1) mu(x, dy)`.
pub fn check_levy_integrability(
    k: &KernelFamily,
    points: &[Vec<f64>],
    cap: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(points.len());
    for x in points {
        k.check_dim(x)?;
        let value = match k {
            KernelFamily::Axes(_) | KernelFamily::ModulatedAxes { .. } => {
                let idx = k.indices();
                let mut total = 0.0;
                for axis in 0..idx.dim() {
                    let alpha = idx.alpha(axis);
                    let g = |t: f64| {
                        let mut yp = x.clone();
                        yp[axis] += t;
                        let mut ym = x.clone();
                        ym[axis] -= t;
                        (t * t).min(1.0)
                            * alpha
                            * (2.0 - alpha)
                            * (k.coeff_at(x, &yp) + k.coeff_at(x, &ym))
                    };
                    total += integrate_power_weight(g, alpha, 1.0, 1.0, &[]);
                }
                total
            }
            KernelFamily::IsotropicCoeff { alpha, dim, coeff } => {
                let dirs = sphere_rule(*dim)?;
                let mut total = 0.0;
                for (theta, w) in &dirs {
                    // radial: rho^{d-1} rho^{-d-alpha} = rho^{-1-alpha}
                    let g = |rho: f64| {
                        let y: Vec<f64> = x.iter().zip(theta).map(|(a, t)| a + rho * t).collect();
                        (rho * rho).min(1.0) * coeff.eval(x, &y)
                    };
                    total += w * integrate_power_weight(g, *alpha, 1.0, 1.0, &[]);
                }
                total
            }
        };
        if !value.is_finite() || value > cap {
            return Err(Error::IntegrabilityFailure { value, cap });
        }
        out.push(value);
    }
    Ok(out)
}

/// Both orders of the double integral `int_A int_B mu(x, dy) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_gap: f64,
}

/// Numerically compares `int_A mu(x, B) dx` with `int_B mu(x, A) dx`.
pub fn check_symmetry(k: &KernelFamily, a: &BoxRegion, b: &BoxRegion) -> Result<SymmetryCheck> {
    if a.dim() != k.dim() || b.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: a.dim().min(b.dim()),
        });
    }
    let overlap = (0..k.dim()).all(|i| a.lo[i] < b.hi[i] && b.lo[i] < a.hi[i]);
    if overlap {
        return Err(Error::InvalidQuery("boxes must be disjoint".into()));
    }
    let lhs = box_to_box_mass(k, a, b)?;
    let rhs = box_to_box_mass(k, b, a)?;
    let scale = lhs.abs().max(rhs.abs());
    let relative_gap = if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    };
    Ok(SymmetryCheck {
        lhs,
        rhs,
        relative_gap,
    })
}

/// Tensor Gauss–Legendre points of a box: `(point, weight)`.
fn box_points(region: &BoxRegion, per_axis_panels: usize) -> Vec<(Vec<f64>, f64)> {
    let rule = gl16();
    let d = region.dim();
    let per_axis: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|i| {
            let (lo, hi) = (region.lo[i], region.hi[i]);
            let step = (hi - lo) / per_axis_panels as f64;
            let mut pts = Vec::new();
            for p in 0..per_axis_panels {
                let a = lo + p as f64 * step;
                for (z, w) in rule.nodes.iter().zip(&rule.weights) {
                    pts.push((a + 0.5 * step * (z + 1.0), 0.5 * step * w));
                }
            }
            pts
        })
        .collect();
    let mut out = vec![(Vec::with_capacity(d), 1.0)];
    for axis_pts in &per_axis {
        let mut next = Vec::with_capacity(out.len() * axis_pts.len());
        for (p, w) in &out {
            for (c, cw) in axis_pts {
                let mut q = p.clone();
                q.push(*c);
                next.push((q, w * cw));
            }
        }
        out = next;
    }
    out
}

fn box_to_box_mass(k: &KernelFamily, from: &BoxRegion, to: &BoxRegion) -> Result<f64> {
    let d = k.dim();
    let panels = if d <= 2 { 4 } else { 1 };
    let outer = box_points(from, panels);
    let mut total = 0.0;
    match k {
        KernelFamily::Axes(idx) | KernelFamily::ModulatedAxes { idx, .. } => {
            let rule = gl16();
            for (x, wx) in &outer {
                for axis in 0..d {
                    let on_line =
                        (0..d).all(|j| j == axis || (x[j] > to.lo[j] && x[j] < to.hi[j]));
                    if !on_line {
                        continue;
                    }
                    let alpha = idx.alpha(axis);
                    let (lo, hi) = (to.lo[axis], to.hi[axis]);
                    let inner = match k.coefficient().and_then(|c| c.constant_value()) {
                        Some(_) | None if matches!(k, KernelFamily::Axes(_)) => {
                            closed_form_segment(alpha, x[axis], lo, hi)
                        }
                        Some(c) => c * closed_form_segment(alpha, x[axis], lo, hi),
                        None => {
                            // graded panels towards the nearer endpoint
                            let mut acc = 0.0;
                            let n = 16;
                            for p in 0..n {
                                let a = lo + (hi - lo) * p as f64 / n as f64;
                                let b = lo + (hi - lo) * (p + 1) as f64 / n as f64;
                                acc += rule.integrate(a, b, |s| {
                                    let mut y = x.clone();
                                    y[axis] = s;
                                    axis_density(alpha, s - x[axis]) * k.coeff_at(x, &y)
                                });
                            }
                            acc
                        }
                    };
                    total += wx * inner;
                }
            }
        }
        KernelFamily::IsotropicCoeff { alpha, coeff, .. } => {
            let inner_pts = box_points(to, panels);
            for (x, wx) in &outer {
                let mut acc = 0.0;
                for (y, wy) in &inner_pts {
                    let r = euclid(x, y);
                    acc += wy * coeff.eval(x, y) * r.powf(-(d as f64) - alpha);
                }
                total += wx * acc;
            }
        }
    }
    Ok(total)
}

/// `int_lo^hi alpha (2 - alpha) |s - x|^{-1-alpha} ds` for `x` outside `[lo, hi]`.
fn closed_form_segment(alpha: f64, x: f64, lo: f64, hi: f64) -> f64 {
    let (near, far) = if x <= lo {
        (lo - x, hi - x)
    } else {
        (x - hi, x - lo)
    };
    (2.0 - alpha) * (near.powf(-alpha) - far.powf(-alpha))
}

/// Empirical bounds on `E^mu_rect(w, w) / E^{axes}_rect(w, w)` over trial functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparability {
    pub lower: f64,
    pub upper: f64,
    pub ratios: Vec<f64>,
    /// Trials skipped for having zero axes energy.
    pub skipped: usize,
}

/// Sampled comparability of `k` with the reference axes kernel on `rect`.
///
/// This is evidence, not a certificate: the assumption quantifies over all
/// functions, while only the supplied trials are evaluated.
pub fn comparability_estimate(
    k: &KernelFamily,
    rect: &AnisoRect,
    trials: &[GridFunction],
) -> Result<Comparability> {
    if trials.is_empty() {
        return Err(Error::InvalidQuery("empty trial set".into()));
    }
    let reference = KernelFamily::Axes(k.indices());
    let mut ratios = Vec::new();
    let mut skipped = 0;
    for w in trials {
        let base = crate::energy::energy_form(&reference, crate::energy::Domain::Rect(rect), w, w)?;
        if base <= 0.0 {
            skipped += 1;
            continue;
        }
        let e = crate::energy::energy_form(k, crate::energy::Domain::Rect(rect), w, w)?;
        ratios.push(e / base);
    }
    if ratios.is_empty() {
        return Err(Error::InvalidQuery("all trials have zero axes energy".into()));
    }
    let lower = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Comparability {
        lower,
        upper,
        ratios,
        skipped,
    })
}

/// `mu(x, R^d \ rect)` for `x` inside `rect`.
pub fn tail_mass(k: &KernelFamily, x: &[f64], rect: &AnisoRect) -> Result<f64> {
    k.check_dim(x)?;
    if !rect.contains(x) {
        return Err(Error::InvalidQuery("tail_mass requires x inside the rectangle".into()));
    }
    tail_mass_box(k, x, &rect.as_box())
}

/// As [`tail_mass`] for a general box containing `x`.
pub(crate) fn tail_mass_box(k: &KernelFamily, x: &[f64], region: &BoxRegion) -> Result<f64> {
    match k {
        KernelFamily::Axes(idx) => Ok((0..idx.dim())
            .map(|i| {
                let a = idx.alpha(i);
                (2.0 - a) * ((x[i] - region.lo[i]).powf(-a) + (region.hi[i] - x[i]).powf(-a))
            })
            .sum()),
        KernelFamily::ModulatedAxes { idx, coeff } => {
            let mut total = 0.0;
            for axis in 0..idx.dim() {
                let alpha = idx.alpha(axis);
                for sign in [-1.0, 1.0] {
                    let t0 = if sign > 0.0 {
                        region.hi[axis] - x[axis]
                    } else {
                        x[axis] - region.lo[axis]
                    };
                    total += ray_coefficient_mass(x, axis, sign, t0, alpha, coeff);
                }
            }
            Ok(total)
        }
        KernelFamily::IsotropicCoeff { alpha, dim, coeff } => {
            let dirs = sphere_rule(*dim)?;
            let mut total = 0.0;
            for (theta, w) in &dirs {
                let exit = (0..*dim)
                    .map(|i| {
                        if theta[i] > 0.0 {
                            (region.hi[i] - x[i]) / theta[i]
                        } else if theta[i] < 0.0 {
                            (region.lo[i] - x[i]) / theta[i]
                        } else {
                            f64::INFINITY
                        }
                    })
                    .fold(f64::INFINITY, f64::min);
                let far = 64.0 * exit.max(1.0);
                let radial = integrate_ray_tail(
                    |rho| {
                        let y: Vec<f64> = x.iter().zip(theta).map(|(a, t)| a + rho * t).collect();
                        coeff.eval(x, &y)
                    },
                    *alpha,
                    exit,
                    far,
                    0.5,
                    coeff.eval(x, x),
                );
                total += w * radial;
            }
            Ok(total)
        }
    }
}

/// `int_{t0}^inf a(x, x + s t e_axis) alpha (2-alpha) t^{-1-alpha} dt`.
pub(crate) fn ray_coefficient_mass(
    x: &[f64],
    axis: usize,
    sign: f64,
    t0: f64,
    alpha: f64,
    coeff: &Coefficient,
) -> f64 {
    if let Some(c) = coeff.constant_value() {
        return c * (2.0 - alpha) * t0.powf(-alpha);
    }
    let far = 64.0 * t0.max(1.0);
    let mut y = x.to_vec();
    let far_value = {
        y[axis] = x[axis] + sign * far;
        coeff.eval(x, &y)
    };
    alpha
        * (2.0 - alpha)
        * integrate_ray_tail(
            |t| {
                let mut y = x.to_vec();
                y[axis] += sign * t;
                coeff.eval(x, &y)
            },
            alpha,
            t0,
            far,
            0.25,
            far_value,
        )
}
