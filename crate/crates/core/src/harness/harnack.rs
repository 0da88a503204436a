//! Weak Harnack deficits
//! `D(u) = c (mean_{M_{1/2}} u^{p0})^{1/p0} - inf_{M_{1/4}} u
//!        - 2 sup_{x in M_{15/16}} int_{M_1^c} u^-(y) mu(x, dy) - |f|_{L^q(M_{15/16})}`
//! for certified supersolutions on `M_1(x0)` (or a translated, rescaled `M_rho(x0)`).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{AnisoRect, BoxRegion};
use crate::grid::{ExteriorBox, ExteriorPolicy, GridFunction};
use crate::kernels::KernelFamily;
use crate::solver::{make_supersolution, DirichletProblem, Supersolution};
use crate::tails::{moments, Ray};

/// Candidate constants `c = 2^{-j/2}`, `j = 0, ..., 40`.
pub fn c_grid() -> Vec<f64> {
    (0..=40).map(|j| 2f64.powf(-0.5 * j as f64)).collect()
}

/// Relative slack, in units of the `L^{p0}` mean, below which a positive
/// deficit is attributed to the solver tolerance.
pub const DEFICIT_SLACK: f64 = 1e-8;

/// Default scan for `p0`.
pub const P0_GRID: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5];

/// The terms of the deficit for one function.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnackTerms {
    pub p0s: Vec<f64>,
    /// `(mean_{M_{1/2}} u^{p0})^{1/p0}` per `p0`.
    pub means: Vec<f64>,
    pub inf_quarter: f64,
    pub sup_quarter: f64,
    /// `2 sup_{M_{15/16}} int_{M_1^c} u^- dmu`.
    pub tail: f64,
    /// `|f|_{L^q(M_{15/16})}`.
    pub forcing: f64,
}

impl HarnackTerms {
    pub fn deficit(&self, c: f64, j: usize) -> f64 {
        c * self.means[j] - self.inf_quarter - self.tail - self.forcing
    }

    /// Largest `c` with `D <= 0` at `p0s[j]`.
    pub fn critical_c(&self, j: usize) -> f64 {
        if self.means[j] > 0.0 {
            (self.inf_quarter + self.tail + self.forcing) / self.means[j]
        } else {
            f64::INFINITY
        }
    }
}

fn sub_nodes(u: &GridFunction, domain: &AnisoRect, factor: f64, k: &KernelFamily) -> Result<Vec<usize>> {
    let rect = domain.scaled(&k.indices(), factor)?;
    let nodes = u.grid.nodes_in_closed(&rect.as_box());
    if nodes.is_empty() {
        return Err(Error::QuadratureResolutionError(format!(
            "M_{factor} contains no grid node"
        )));
    }
    Ok(nodes)
}

/// `int_{domain^c} g^-(y) mu(x, dy)` at `x` inside `domain`.
fn negative_tail(k: &KernelFamily, domain: &AnisoRect, negative: &ExteriorPolicy, x: &[f64]) -> f64 {
    let idx = k.indices();
    let mut total = 0.0;
    for axis in 0..x.len() {
        for sign in [-1.0, 1.0] {
            let t0 = if sign > 0.0 {
                domain.hi(axis) - x[axis]
            } else {
                x[axis] - domain.lo(axis)
            };
            let ray = Ray {
                x,
                axis,
                sign,
                alpha: idx.alpha(axis),
            };
            total += moments(&ray, k.coefficient(), t0, negative, None).gu;
        }
    }
    total
}

fn same_box(a: &BoxRegion, b: &BoxRegion) -> bool {
    let scale = a.hi.iter().zip(&a.lo).map(|(h, l)| h - l).fold(0.0, f64::max);
    a.lo.iter()
        .zip(&b.lo)
        .chain(a.hi.iter().zip(&b.hi))
        .all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

/// Deficit terms for a certified supersolution whose grid tiles `domain`.
pub fn harnack_terms(
    k: &KernelFamily,
    sup: &Supersolution,
    domain: &AnisoRect,
    p0s: &[f64],
    q: f64,
) -> Result<HarnackTerms> {
    if !sup.certificate.holds() {
        return Err(Error::PreconditionViolation(
            "Harnack experiments need a certified supersolution".into(),
        ));
    }
    if p0s.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::InvalidQuery("p0 must lie in (0, 1)".into()));
    }
    let u = &sup.solution.u;
    if !same_box(&u.grid.region(), &domain.as_box()) {
        return Err(Error::PreconditionViolation(
            "the grid must tile the Harnack domain exactly".into(),
        ));
    }
    let scale = u.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if u.min() < -1e-12 * scale.max(1e-300) {
        return Err(Error::PreconditionViolation(format!(
            "u must be nonnegative in the domain, min = {:e}",
            u.min()
        )));
    }
    let half = sub_nodes(u, domain, 0.5, k)?;
    let quarter = sub_nodes(u, domain, 0.25, k)?;
    let near = sub_nodes(u, domain, 15.0 / 16.0, k)?;
    let means = p0s
        .iter()
        .map(|&p| {
            let s: Vec<f64> = half.iter().map(|&i| u.values[i].max(0.0).powf(p)).collect();
            (crate::numerics::compensated_sum(&s) / s.len() as f64).powf(1.0 / p)
        })
        .collect();
    let inf_quarter = quarter.iter().map(|&i| u.values[i]).fold(f64::INFINITY, f64::min);
    let sup_quarter = quarter.iter().map(|&i| u.values[i]).fold(f64::NEG_INFINITY, f64::max);
    let negative = u.exterior.negative_part()?;
    let tail = if negative.is_zero() {
        0.0
    } else {
        2.0 * near
            .par_iter()
            .map(|&i| negative_tail(k, domain, &negative, &u.grid.coord(i)))
            .reduce(|| 0.0, f64::max)
    };
    let near_rect = domain.scaled(&k.indices(), 15.0 / 16.0)?;
    let forcing = u.with_values(sup.f.clone()).lp_norm(q, Some(&near_rect.as_box()));
    Ok(HarnackTerms {
        p0s: p0s.to_vec(),
        means,
        inf_quarter,
        sup_quarter,
        tail,
        forcing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakHarnack {
    pub p0s: Vec<f64>,
    /// Per `p0`, the minimum over the family of the critical `c`.
    pub critical: Vec<f64>,
    /// Largest scanned `c` and its `p0` validating `D <= 0` on every member.
    pub best: Option<(f64, f64)>,
    pub members: Vec<HarnackTerms>,
    /// `max_member D(best)`, for the record.
    pub worst_deficit: Option<f64>,
}

/// Empirical weak Harnack constant over a family of certified supersolutions.
pub fn weak_harnack_check(
    k: &KernelFamily,
    family: &[Supersolution],
    domain: &AnisoRect,
    p0s: &[f64],
    q: f64,
) -> Result<WeakHarnack> {
    let members = family
        .iter()
        .map(|s| harnack_terms(k, s, domain, p0s, q))
        .collect::<Result<Vec<_>>>()?;
    let critical: Vec<f64> = (0..p0s.len())
        .map(|j| members.iter().map(|m| m.critical_c(j)).fold(f64::INFINITY, f64::min))
        .collect();
    let cs = c_grid();
    let mut best: Option<(f64, f64)> = None;
    for (j, &p0) in p0s.iter().enumerate() {
        let holds = |c: f64| members.iter().all(|m| m.deficit(c, j) <= DEFICIT_SLACK * m.means[j]);
        if let Some(&c) = cs.iter().find(|&&c| holds(c)) {
            if best.is_none_or(|(bc, _)| c > bc) {
                best = Some((c, p0));
            }
        }
    }
    let worst_deficit = best.map(|(c, p0)| {
        let j = p0s.iter().position(|p| *p == p0).unwrap_or(0);
        members.iter().map(|m| m.deficit(c, j)).fold(f64::NEG_INFINITY, f64::max)
    });
    Ok(WeakHarnack {
        p0s: p0s.to_vec(),
        critical,
        best,
        members,
        worst_deficit,
    })
}

/// One solve of the strong-Harnack probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub distance: f64,
    pub height: f64,
    pub sup_quarter: f64,
    pub inf_quarter: f64,
    pub ratio: f64,
    pub deficit: f64,
}

/// Harmonic functions in `M_1(0)` whose exterior data is a bump on the
/// first coordinate axis at distance `D` beyond the domain, `rows` grid rows
/// thick transversally, with height `mass * D^{1 + alpha_1}`.
#[allow(clippy::too_many_arguments)]
pub fn strong_harnack_probe(
    k: &KernelFamily,
    nodes: &[usize],
    rows: usize,
    distances: &[f64],
    mass: f64,
    (c, p0): (f64, f64),
    q: f64,
    tol: f64,
) -> Result<Vec<ProbeRow>> {
    let idx = k.indices();
    let d = idx.dim();
    let domain = AnisoRect::new(&idx, &vec![0.0; d], 1.0)?;
    if rows == 0 {
        return Err(Error::InvalidQuery("the bump needs at least one grid row".into()));
    }
    let mut out = Vec::with_capacity(distances.len());
    for &dist in distances {
        if !(dist > 0.5) {
            return Err(Error::InvalidQuery("probe distance must exceed the bump half-width".into()));
        }
        let height = mass * dist.powf(1.0 + idx.alpha(0));
        let mut lo = vec![1.0 + dist - 0.5];
        let mut hi = vec![1.0 + dist + 0.5];
        for j in 1..d {
            let h = 2.0 * domain.half_widths()[j] / nodes[j] as f64;
            lo.push(0.0);
            hi.push(rows as f64 * h);
        }
        let bump = ExteriorBox {
            region: BoxRegion::new(lo, hi)?,
            value: height,
        };
        let p = DirichletProblem::new(k, &domain, nodes, |_| 0.0, ExteriorPolicy::Boxes(vec![bump]))?;
        let sup = make_supersolution(&p, 0.0, tol)?;
        let terms = harnack_terms(k, &sup, &domain, &[p0], q)?;
        out.push(ProbeRow {
            distance: dist,
            height,
            sup_quarter: terms.sup_quarter,
            inf_quarter: terms.inf_quarter,
            ratio: terms.sup_quarter / terms.inf_quarter,
            deficit: terms.deficit(c, 0),
        });
    }
    Ok(out)
}
