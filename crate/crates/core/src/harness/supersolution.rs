//! Diagnostics for positive supersolutions: the log-moment integral, the
//! flip products `(mean u^p)^{1/p} (mean u^{-p})^{1/p}`, and Moser sequences.

use crate::energy::{cutoff_sum, pair_integral, Domain};
use crate::error::{Error, Result};
use crate::geometry::AnisoRect;
use crate::grid::GridFunction;
use crate::kernels::KernelFamily;
use crate::numerics::compensated_sum;
use crate::solver::Supersolution;

use super::{log_mean_power, power_mean};

fn certified(sup: &Supersolution) -> Result<()> {
    if !sup.certificate.holds() {
        return Err(Error::PreconditionViolation(format!(
            "supersolution certificate fails: relative margin {:e}",
            sup.certificate.relative_margin
        )));
    }
    Ok(())
}

fn nodes_of(u: &GridFunction, rect: &AnisoRect) -> Result<Vec<usize>> {
    let nodes = u.grid.nodes_in_closed(&rect.as_box());
    if nodes.is_empty() {
        return Err(Error::QuadratureResolutionError(
            "rectangle contains no grid node".into(),
        ));
    }
    Ok(nodes)
}

fn forcing_norm(u: &GridFunction, f: &[f64], rect: &AnisoRect, q: f64) -> f64 {
    u.with_values(f.to_vec()).lp_norm(q, Some(&rect.as_box()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMoment {
    /// `int_{M_r} int_{M_r} (cosh(log u(y) - log u(x)) - 1) mu(x, dy) dx`.
    pub lhs: f64,
    /// `sum_k (lambda^{e_k} - 1)^{-alpha_k} r^{-alpha_max} |M_{lambda r}|`.
    pub geometric: f64,
    /// `eps^{-1} |f|_{L^q(M_{lambda r})} |M_{lambda r}|^{q/(q-1)}`.
    pub forcing: f64,
    /// `(lhs - forcing)_+ / geometric`: the smallest admissible constant.
    pub c1: f64,
    /// `lhs / (geometric + forcing)`.
    pub ratio: f64,
}

/// Log-moment integral of a certified supersolution `u >= eps` on `M_{lambda r}`.
pub fn log_moment_check(
    k: &KernelFamily,
    sup: &Supersolution,
    inner: &AnisoRect,
    lambda: f64,
    q: f64,
    eps: f64,
) -> Result<LogMoment> {
    certified(sup)?;
    if !(eps > 0.0) {
        return Err(Error::PreconditionViolation("eps must be positive".into()));
    }
    let idx = k.indices();
    let u = &sup.solution.u;
    let outer = inner.scaled(&idx, lambda)?;
    let outer_nodes = nodes_of(u, &outer)?;
    if let Some(&i) = outer_nodes.iter().find(|&&i| !(u.values[i] >= eps)) {
        return Err(Error::PreconditionViolation(format!(
            "u = {} < eps = {eps} at {:?}",
            u.values[i],
            u.grid.coord(i)
        )));
    }
    // cosh(log b - log a) - 1 = (b - a)^2 / (2ab)
    let lhs = pair_integral(k, Domain::Rect(inner), u, |a, b| (b - a) * (b - a) / (2.0 * a * b))?;
    let vol = outer.volume();
    let geometric = cutoff_sum(&idx, lambda) * inner.r().powf(-idx.alpha_max()) * vol;
    let forcing = forcing_norm(u, &sup.f, &outer, q) * vol.powf(q / (q - 1.0)) / eps;
    Ok(LogMoment {
        lhs,
        geometric,
        forcing,
        c1: (lhs - forcing).max(0.0) / geometric,
        ratio: lhs / (geometric + forcing),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipCheck {
    pub pbars: Vec<f64>,
    /// Per `pbar`, the maximum over the family of the flip product.
    pub max_products: Vec<f64>,
    /// Per member, `|log u - [log u]|^2_{L^2(M_r)} / |M_r|`.
    pub bmo: Vec<f64>,
    pub bmo_max: f64,
}

/// Flip product `(mean u^p)^{1/p} (mean u^{-p})^{1/p}` over `nodes`.
pub fn flip_product(u: &GridFunction, nodes: &[usize], p: f64) -> f64 {
    let logs: Vec<f64> = nodes.iter().map(|&i| u.values[i].ln()).collect();
    ((log_mean_power(&logs, p) + log_mean_power(&logs, -p)) / p).exp()
}

fn log_bmo(u: &GridFunction, nodes: &[usize]) -> f64 {
    let logs: Vec<f64> = nodes.iter().map(|&i| u.values[i].ln()).collect();
    let mean = compensated_sum(&logs) / logs.len() as f64;
    let dev: Vec<f64> = logs.iter().map(|l| (l - mean) * (l - mean)).collect();
    compensated_sum(&dev) / logs.len() as f64
}

/// Flip products over a family of certified supersolutions on `rect`.
pub fn flip_check(
    k: &KernelFamily,
    family: &[Supersolution],
    rect: &AnisoRect,
    pbars: &[f64],
    q: f64,
) -> Result<FlipCheck> {
    if pbars.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::InvalidQuery("pbar must lie in (0, 1)".into()));
    }
    let r_scale = rect.r().powf(k.indices().alpha_max());
    let mut max_products = vec![0.0f64; pbars.len()];
    let mut bmo = Vec::with_capacity(family.len());
    for sup in family {
        certified(sup)?;
        let u = &sup.solution.u;
        let nodes = nodes_of(u, rect)?;
        let eps = nodes.iter().map(|&i| u.values[i]).fold(f64::INFINITY, f64::min);
        let floor = r_scale * forcing_norm(u, &sup.f, rect, q);
        if !(eps > 0.0) || !(eps > floor) {
            return Err(Error::PreconditionViolation(format!(
                "min u = {eps:e} does not exceed r^alpha_max |f|_q = {floor:e}"
            )));
        }
        for (m, &p) in max_products.iter_mut().zip(pbars) {
            let prod = flip_product(u, &nodes, p);
            if !prod.is_finite() {
                return Err(Error::PreconditionViolation(
                    "negative power not integrable on the grid".into(),
                ));
            }
            *m = m.max(prod);
        }
        bmo.push(log_bmo(u, &nodes));
    }
    let bmo_max = bmo.iter().copied().fold(0.0, f64::max);
    Ok(FlipCheck {
        pbars: pbars.to_vec(),
        max_products,
        bmo,
        bmo_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoserRow {
    pub n: usize,
    pub r_n: f64,
    pub p_n: f64,
    /// `(mean over M_{r_n} of u^{-p_n})^{-1/p_n}`.
    pub a_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoserTable {
    pub rows: Vec<MoserRow>,
    /// Stopped early because `p_n |log u|` crossed the overflow threshold.
    pub truncated: bool,
    /// Direct minimum of `u` over the nodes of `M_r`.
    pub inner_min: f64,
    /// `inner_min / A_N`.
    pub ratio: f64,
}

/// Largest `p |log u|` allowed before the table stops.
pub const MOSER_OVERFLOW: f64 = 700.0;

/// Moser sequence `r_n = (n + 2) r / (n + 1)`, `p_n = p0 (beta / (beta - 1))^n`.
pub fn moser_sequence(
    k: &KernelFamily,
    sup: &Supersolution,
    center: &[f64],
    r: f64,
    p0: f64,
    steps: usize,
) -> Result<MoserTable> {
    certified(sup)?;
    moser_table(k, &sup.solution.u, center, r, p0, steps)
}

/// [`moser_sequence`] on a positive grid function without a certificate.
pub fn moser_table(k: &KernelFamily, u: &GridFunction, center: &[f64], r: f64, p0: f64, steps: usize) -> Result<MoserTable> {
    let idx = k.indices();
    let beta = idx.beta();
    if !(beta > 1.0) {
        return Err(Error::SobolevExponentUndefined { beta });
    }
    if !(p0 > 0.0) {
        return Err(Error::InvalidQuery("p0 must be positive".into()));
    }
    let outer = AnisoRect::new(&idx, center, 2.0 * r)?;
    let outer_nodes = nodes_of(u, &outer)?;
    if outer_nodes.iter().any(|&i| !(u.values[i] > 0.0)) {
        return Err(Error::PreconditionViolation("u must be positive on M_{2r}".into()));
    }
    let log_span = outer_nodes
        .iter()
        .map(|&i| u.values[i].ln().abs())
        .fold(0.0, f64::max);
    let growth = beta / (beta - 1.0);
    let mut rows = Vec::with_capacity(steps + 1);
    let mut truncated = false;
    for n in 0..=steps {
        let p_n = p0 * growth.powi(n as i32);
        if p_n * log_span > MOSER_OVERFLOW {
            truncated = true;
            break;
        }
        let r_n = (n as f64 + 2.0) / (n as f64 + 1.0) * r;
        let rect = AnisoRect::new(&idx, center, r_n)?;
        let nodes = nodes_of(u, &rect)?;
        rows.push(MoserRow {
            n,
            r_n,
            p_n,
            a_n: power_mean(u, &nodes, -p_n),
        });
    }
    let inner = AnisoRect::new(&idx, center, r)?;
    let inner_min = nodes_of(u, &inner)?
        .iter()
        .map(|&i| u.values[i])
        .fold(f64::INFINITY, f64::min);
    let last = rows.last().map_or(f64::NAN, |row| row.a_n);
    Ok(MoserTable {
        rows,
        truncated,
        inner_min,
        ratio: inner_min / last,
    })
}
