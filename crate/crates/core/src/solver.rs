//! Discrete Dirichlet problems for the axes and modulated-axes kernels.
//!
//! The unknowns are the node values inside `Omega`; outside, `u = g` is
//! given by an exterior policy. With node indicators as test functions the
//! weak formulation `E(u, phi) = (f, phi)` reads `-2 L u = f` at every node,
//! which is solved as the symmetric positive definite system
//! `(-L_0) u = f / 2 + c`, `c` the coupling to the exterior data.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::AnisoRect;
use crate::grid::{ExteriorPolicy, GridFunction, TensorGrid};
use crate::kernels::KernelFamily;
use crate::numerics::compensated_sum;
use crate::operator::DiscreteOperator;

/// `E(u, phi) = (f, phi)` on `domain`, `u = g` outside.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub kernel: KernelFamily,
    pub domain: AnisoRect,
    pub grid: TensorGrid,
    /// Right-hand side at every node.
    pub f: Vec<f64>,
    pub exterior: ExteriorPolicy,
}

impl DirichletProblem {
    /// Problem on a cell-centred grid over `domain`.
    pub fn new<F: Fn(&[f64]) -> f64>(
        kernel: &KernelFamily,
        domain: &AnisoRect,
        nodes: &[usize],
        f: F,
        exterior: ExteriorPolicy,
    ) -> Result<Self> {
        if domain.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: domain.dim(),
            });
        }
        let grid = TensorGrid::on_rect(domain, nodes)?;
        let f: Vec<f64> = (0..grid.len()).map(|i| f(&grid.coord(i))).collect();
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuery("right-hand side must be finite".into()));
        }
        if !exterior.is_known() {
            return Err(Error::InvalidQuery("exterior data must be specified".into()));
        }
        Ok(DirichletProblem {
            kernel: kernel.clone(),
            domain: domain.clone(),
            grid,
            f,
            exterior,
        })
    }

    pub fn rhs_function(&self) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.f.clone(),
            exterior: ExteriorPolicy::Zero,
        }
    }
}

/// Solver output.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridFunction,
    /// Relative residual `|b - A u| / |b|`.
    pub residual: f64,
    pub iterations: usize,
    /// Truncation error of the exterior integrals; zero for box and
    /// constant data, `None` when not estimated (callable data).
    pub tail_error: Option<f64>,
    /// `2 V |b|`: the scale of the weak-form defects.
    pub defect_scale: f64,
}

/// Assembled pieces of one problem.
struct System {
    op: DiscreteOperator,
    b: Vec<f64>,
    diag: Vec<f64>,
}

fn assemble(p: &DirichletProblem, extra: f64) -> Result<System> {
    let op = DiscreteOperator::new(&p.kernel, &p.grid)?;
    let coupling = op.exterior_coupling(&p.exterior)?;
    let b: Vec<f64> = p
        .f
        .iter()
        .zip(&coupling)
        .map(|(f, c)| 0.5 * (f + extra) + c)
        .collect();
    let diag: Vec<f64> = (0..p.grid.len()).into_par_iter().map(|i| op.diagonal(i)).collect();
    Ok(System { op, b, diag })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    compensated_sum(&prods)
}

/// Jacobi-preconditioned conjugate gradients for `-L_0 x = b`.
fn pcg(sys: &System, tol: f64, cap: usize) -> (Vec<f64>, f64, usize, bool) {
    let n = sys.b.len();
    let bnorm = dot(&sys.b, &sys.b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, 0.0, 0, true);
    }
    let apply = |v: &[f64]| -> Vec<f64> { sys.op.apply_homogeneous(v).into_iter().map(|y| -y).collect() };
    let mut r = sys.b.clone();
    let mut z: Vec<f64> = r.iter().zip(&sys.diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut best = (x.clone(), 1.0);
    for it in 1..=cap {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let a = rz / pap;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        if rel <= tol {
            // confirm with a true residual
            let ax = apply(&x);
            let true_rel = dot(
                &sys.b.iter().zip(&ax).map(|(b, y)| b - y).collect::<Vec<_>>(),
                &sys.b.iter().zip(&ax).map(|(b, y)| b - y).collect::<Vec<_>>(),
            )
            .sqrt()
                / bnorm;
            if true_rel <= tol {
                return (x, true_rel, it, true);
            }
            r = sys.b.iter().zip(&ax).map(|(b, y)| b - y).collect();
        }
        z = r.iter().zip(&sys.diag).map(|(a, d)| a / d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (best.0, best.1, cap, false)
}

fn iteration_cap(n: usize) -> usize {
    ((50.0 * (n as f64).sqrt()).ceil() as usize).max(50)
}

fn tail_error(p: &ExteriorPolicy) -> Option<f64> {
    match p {
        ExteriorPolicy::Function(_) | ExteriorPolicy::Unknown => None,
        _ => Some(0.0),
    }
}

fn solve_with(p: &DirichletProblem, tol: f64, extra: f64) -> Result<Solution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidQuery("tolerance must be positive".into()));
    }
    let sys = assemble(p, extra)?;
    let cap = iteration_cap(p.grid.len());
    let (x, residual, iterations, ok) = pcg(&sys, tol, cap);
    if !ok {
        return Err(Error::SolveFailure {
            iterations,
            residual,
        });
    }
    let scale = 2.0 * p.grid.cell_volume() * dot(&sys.b, &sys.b).sqrt();
    Ok(Solution {
        u: GridFunction {
            grid: p.grid.clone(),
            values: x,
            exterior: p.exterior.clone(),
        },
        residual,
        iterations,
        tail_error: tail_error(&p.exterior),
        defect_scale: scale,
    })
}

/// Solves the interior system to relative residual `tol`.
pub fn solve_dirichlet(p: &DirichletProblem, tol: f64) -> Result<Solution> {
    solve_with(p, tol, 0.0)
}

/// Test functions for [`verify_weak_solution`].
#[derive(Debug, Clone)]
pub enum TestSet {
    /// Every node indicator of the grid (the discrete hat functions).
    NodeIndicators,
    Functions(Vec<GridFunction>),
}

/// Weak-form defects `E(u, phi) - (f, phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakDefect {
    pub defects: Vec<f64>,
    pub max_abs: f64,
    /// `max_phi |defect| / (scale |phi|_2)`, `scale = 2 V |b|`.
    pub relative: f64,
    pub min: f64,
}

/// Evaluates `E(u, phi) - (f, phi)` over the test set.
///
/// `u` carries the exterior data `g`; `f` is the right-hand side on the
/// grid of `u`. Test functions must vanish outside the grid.
pub fn verify_weak_solution(
    k: &KernelFamily,
    u: &GridFunction,
    f: &[f64],
    tests: &TestSet,
) -> Result<WeakDefect> {
    let grid = &u.grid;
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: f.len(),
        });
    }
    let vol = grid.cell_volume();
    let op = DiscreteOperator::new(k, grid)?;
    let coupling = op.exterior_coupling(&u.exterior)?;
    let b: Vec<f64> = f.iter().zip(&coupling).map(|(f, c)| 0.5 * f + c).collect();
    let scale = 2.0 * vol * dot(&b, &b).sqrt();
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let (defects, norms): (Vec<f64>, Vec<f64>) = match tests {
        TestSet::NodeIndicators => {
            let lu = op.apply_all(u)?;
            (
                lu.iter()
                    .zip(f)
                    .map(|(l, f)| -2.0 * vol * l - vol * f)
                    .collect(),
                vec![1.0; grid.len()],
            )
        }
        TestSet::Functions(phis) => {
            let mut d = Vec::with_capacity(phis.len());
            let mut n = Vec::with_capacity(phis.len());
            for phi in phis {
                if phi.grid != *grid {
                    return Err(Error::InvalidQuery("test function on a different grid".into()));
                }
                if !phi.exterior.is_zero() {
                    return Err(Error::SupportViolation(
                        "test functions must vanish outside the domain".into(),
                    ));
                }
                let e = crate::energy::energy_form(k, crate::energy::Domain::Whole, u, phi)?;
                let fp = vol * dot(f, &phi.values);
                d.push(e - fp);
                n.push(dot(&phi.values, &phi.values).sqrt().max(f64::MIN_POSITIVE));
            }
            (d, n)
        }
    };
    let max_abs = defects.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let relative = defects
        .iter()
        .zip(&norms)
        .map(|(d, n)| d.abs() / (scale * n))
        .fold(0.0, f64::max);
    let min = defects.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(WeakDefect {
        defects,
        max_abs,
        relative,
        min,
    })
}

/// A supersolution together with the evidence that it is one.
#[derive(Debug, Clone)]
pub struct Supersolution {
    pub solution: Solution,
    /// The right-hand side `f` the certificate refers to.
    pub f: Vec<f64>,
    pub slack: f64,
    pub certificate: Certificate,
}

/// `min_phi E(u, phi) - (f, phi)` over node indicators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub min_margin: f64,
    /// `min_margin / defect_scale`.
    pub relative_margin: f64,
    pub tol: f64,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.relative_margin >= -self.tol
    }
}

/// Solves with right-hand side `f + s`, so that `E(u, phi) - (f, phi) = s (1, phi) >= 0`
/// for nonnegative test functions, and certifies the inequality.
pub fn make_supersolution(p: &DirichletProblem, slack: f64, tol: f64) -> Result<Supersolution> {
    if !(slack >= 0.0) {
        return Err(Error::InvalidQuery("slack must be nonnegative".into()));
    }
    let solution = solve_with(p, tol, slack)?;
    let check = verify_weak_solution(&p.kernel, &solution.u, &p.f, &TestSet::NodeIndicators)?;
    let scale = if solution.defect_scale > 0.0 {
        solution.defect_scale
    } else {
        1.0
    };
    let certificate = Certificate {
        min_margin: check.min,
        relative_margin: check.min / scale,
        tol,
    };
    Ok(Supersolution {
        solution,
        f: p.f.clone(),
        slack,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnisotropyIndices;

    #[test]
    fn constants_are_harmonic() {
        let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
        let k = KernelFamily::Axes(idx.clone());
        let rect = AnisoRect::new(&idx, &[0.0, 0.0], 1.0).unwrap();
        let p = DirichletProblem::new(&k, &rect, &[12, 12], |_| 0.0, ExteriorPolicy::Constant(0.7)).unwrap();
        let s = solve_dirichlet(&p, 1e-12).unwrap();
        for v in &s.u.values {
            assert!((v - 0.7).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn half_line_anchor_one_dimension() {
        // u(x) = sqrt(1 - x^2) / (2 pi) solves -2 L u = 1 on (-1, 1) for alpha = 1
        let idx = AnisotropyIndices::new(vec![1.0]).unwrap();
        let k = KernelFamily::Axes(idx.clone());
        let rect = AnisoRect::new(&idx, &[0.0], 1.0).unwrap();
        let p = DirichletProblem::new(&k, &rect, &[401], |_| 1.0, ExteriorPolicy::Zero).unwrap();
        let s = solve_dirichlet(&p, 1e-12).unwrap();
        let mid = s.u.values[200];
        let exact = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((mid - exact).abs() < 0.01 * exact, "{mid} vs {exact}");
    }

    #[test]
    fn supersolution_certificate() {
        let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
        let k = KernelFamily::Axes(idx.clone());
        let rect = AnisoRect::new(&idx, &[0.0, 0.0], 1.0).unwrap();
        let p = DirichletProblem::new(&k, &rect, &[10, 10], |_| 0.0, ExteriorPolicy::Zero).unwrap();
        let s = make_supersolution(&p, 1.0, 1e-10).unwrap();
        assert!(s.certificate.holds());
        assert!(s.solution.u.values.iter().all(|v| *v >= 0.0));
    }
}
