//! Integrals of exterior data along axis rays against the axis density.
//!
//! Every quantity here has the form
//! `int_{t0}^{inf} a(x, y(t)) F(y(t)) alpha (2 - alpha) t^{-1-alpha} dt`
//! with `y(t) = x + sign t e_axis`.

use crate::grid::{ExteriorPolicy, RayPiece};
use crate::kernels::{ray_coefficient_mass, Coefficient};
use crate::numerics::{integrate_ray_tail, CompensatedSum};

/// One axis ray leaving a node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ray<'a> {
    pub x: &'a [f64],
    pub axis: usize,
    pub sign: f64,
    pub alpha: f64,
}

impl Ray<'_> {
    fn point(&self, t: f64) -> Vec<f64> {
        let mut y = self.x.to_vec();
        y[self.axis] += self.sign * t;
        y
    }
}

/// First and mixed moments of one or two exterior data sets along a ray.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub mass: f64,
    pub gu: f64,
    pub gv: f64,
    pub guv: f64,
}

/// `int_a^b a(x, y) alpha (2 - alpha) t^{-1-alpha} dt`, `b` may be infinite.
pub(crate) fn weighted_piece(ray: &Ray, coeff: Option<&Coefficient>, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let alpha = ray.alpha;
    let c = match coeff {
        None => Some(1.0),
        Some(c) => c.constant_value(),
    };
    if let Some(c) = c {
        let tail_b = if b.is_finite() { b.powf(-alpha) } else { 0.0 };
        return c * (2.0 - alpha) * (a.powf(-alpha) - tail_b);
    }
    let coeff = coeff.expect("non-constant coefficient");
    if b.is_finite() {
        alpha
            * (2.0 - alpha)
            * integrate_ray_tail(
                |t| coeff.eval(ray.x, &ray.point(t)),
                alpha,
                a,
                b,
                0.25 * (b - a).max(1e-12),
                0.0,
            )
    } else {
        ray_coefficient_mass(ray.x, ray.axis, ray.sign, a, alpha, coeff)
    }
}

/// Total mass `mu(x, {y(t): t >= t0})` of the ray.
pub(crate) fn ray_mass(ray: &Ray, coeff: Option<&Coefficient>, t0: f64) -> f64 {
    weighted_piece(ray, coeff, t0, f64::INFINITY)
}

fn ends(pieces: &[RayPiece]) -> Vec<f64> {
    pieces.iter().flat_map(|p| [p.a, p.b]).collect()
}

fn piece_value(pieces: &[RayPiece], t: f64) -> f64 {
    pieces
        .iter()
        .filter(|p| t >= p.a && t < p.b)
        .map(|p| p.value)
        .sum()
}

/// Distance along the ray after which `policy` is constant, if finite.
fn settle_distance(policy: &ExteriorPolicy, ray: &Ray, t0: f64) -> f64 {
    match policy {
        ExteriorPolicy::Function(e) => {
            let transverse_out = ray
                .x
                .iter()
                .enumerate()
                .any(|(j, v)| j != ray.axis && v.abs() > e.reach);
            if transverse_out {
                t0
            } else {
                (e.reach + ray.x[ray.axis].abs()).max(t0)
            }
        }
        ExteriorPolicy::Boxes(_) => t0,
        _ => t0,
    }
}

fn resolution(policy: &ExteriorPolicy) -> f64 {
    match policy {
        ExteriorPolicy::Function(e) => e.resolution,
        _ => f64::INFINITY,
    }
}

/// Moments of exterior data `pu` (and optionally `pv`) beyond `t0`.
pub(crate) fn moments(
    ray: &Ray,
    coeff: Option<&Coefficient>,
    t0: f64,
    pu: &ExteriorPolicy,
    pv: Option<&ExteriorPolicy>,
) -> Moments {
    let mass = ray_mass(ray, coeff, t0);
    let pieces_u = pu.ray_pieces(ray.x, ray.axis, ray.sign, t0);
    let pieces_v = match pv {
        Some(p) => p.ray_pieces(ray.x, ray.axis, ray.sign, t0),
        None => Some(Vec::new()),
    };
    if let (Some(pu_p), Some(pv_p)) = (&pieces_u, &pieces_v) {
        let mut cuts = vec![t0];
        cuts.extend(ends(pu_p));
        cuts.extend(ends(pv_p));
        cuts.retain(|t| *t >= t0);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        if cuts.last().is_some_and(|t| t.is_finite()) {
            cuts.push(f64::INFINITY);
        }
        let (mut gu, mut gv, mut guv) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let probe = if b.is_finite() { 0.5 * (a + b) } else { a + 1.0 };
            let vu = piece_value(pu_p, probe);
            let vv = piece_value(pv_p, probe);
            if vu == 0.0 && vv == 0.0 {
                continue;
            }
            let m = weighted_piece(ray, coeff, a, b);
            gu.add(vu * m);
            gv.add(vv * m);
            guv.add(vu * vv * m);
        }
        return Moments {
            mass,
            gu: gu.value(),
            gv: gv.value(),
            guv: guv.value(),
        };
    }
    // Numerical path for callable exterior data.
    let t_end = settle_distance(pu, ray, t0).max(pv.map_or(t0, |p| settle_distance(p, ray, t0)));
    let res = resolution(pu)
        .min(pv.map_or(f64::INFINITY, resolution))
        .min(0.25 * t_end.max(1.0));
    let val = |p: &ExteriorPolicy, t: f64| p.value_at(&ray.point(t)).unwrap_or(0.0);
    let a_at = |t: f64| coeff.map_or(1.0, |c| c.eval(ray.x, &ray.point(t)));
    let far_t = t_end.max(t0) * 2.0 + 1.0;
    let far_u = val(pu, far_t);
    let far_v = pv.map_or(0.0, |p| val(p, far_t));
    let far_a = a_at(far_t);
    let scale = ray.alpha * (2.0 - ray.alpha);
    let gu = scale * integrate_ray_tail(|t| a_at(t) * val(pu, t), ray.alpha, t0, t_end, res, far_a * far_u);
    let (gv, guv) = match pv {
        Some(p) => (
            scale * integrate_ray_tail(|t| a_at(t) * val(p, t), ray.alpha, t0, t_end, res, far_a * far_v),
            scale
                * integrate_ray_tail(
                    |t| a_at(t) * val(pu, t) * val(p, t),
                    ray.alpha,
                    t0,
                    t_end,
                    res,
                    far_a * far_u * far_v,
                ),
        ),
        None => (0.0, 0.0),
    };
    Moments { mass, gu, gv, guv }
}
