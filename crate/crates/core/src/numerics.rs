//! Quadrature rules, compensated summation and small regression helpers.

use std::sync::OnceLock;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 16-point rule.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Shared 8-point rule.
pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

/// Shared 32-point rule.
pub fn gl32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice, independent of how the slice was produced.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Composite Gauss–Legendre over `[a, b]` split at the given sorted
/// breakpoints, with at most `max_width` per panel.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    max_width: f64,
    rule: &GaussLegendre,
) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut cuts = vec![a];
    for &t in breaks {
        if t > a && t < b {
            cuts.push(t);
        }
    }
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut acc = CompensatedSum::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let pieces = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        let step = (hi - lo) / pieces as f64;
        for p in 0..pieces {
            let s = lo + p as f64 * step;
            acc.add(rule.integrate(s, s + step, &mut f));
        }
    }
    acc.value()
}

/// `int_0^inf g(t) t^{-1-alpha} dt` for `g` vanishing quadratically at the
/// origin and bounded at infinity.
///
/// The near field `[0, t0]` uses `s = (t/t0)^{2-alpha}` and the far field
/// `[t_far, inf)` uses `s = (t_far/t)^alpha`; both make the weight disappear.
/// The middle uses composite Gauss–Legendre split at `breaks`.
pub fn integrate_power_weight<F: FnMut(f64) -> f64>(
    mut g: F,
    alpha: f64,
    t0: f64,
    t_far: f64,
    breaks: &[f64],
) -> f64 {
    let rule = gl32();
    let near = {
        let e = 1.0 / (2.0 - alpha);
        let scale = t0.powf(2.0 - alpha) / (2.0 - alpha);
        scale
            * rule.integrate(0.0, 1.0, |s| {
                let t = t0 * s.powf(e);
                if t == 0.0 {
                    0.0
                } else {
                    g(t) / (t * t)
                }
            })
    };
    let mid = integrate_panels(
        |t| g(t) * t.powf(-1.0 - alpha),
        t0,
        t_far,
        breaks,
        (t_far - t0).max(1e-300) / 8.0,
        rule,
    );
    let far = {
        let scale = t_far.powf(-alpha) / alpha;
        scale
            * rule.integrate(0.0, 1.0, |s| {
                if s == 0.0 {
                    0.0
                } else {
                    g(t_far * s.powf(-1.0 / alpha))
                }
            })
    };
    near + mid + far
}

/// `int_{t0}^inf f(t) t^{-1-alpha} dt` where `f` equals `far_value` beyond
/// `t_end`. Panels grow geometrically but never exceed `resolution`.
pub fn integrate_ray_tail<F: FnMut(f64) -> f64>(
    mut f: F,
    alpha: f64,
    t0: f64,
    t_end: f64,
    resolution: f64,
    far_value: f64,
) -> f64 {
    let rule = gl8();
    let mut acc = CompensatedSum::new();
    let mut t = t0;
    if t_end > t0 {
        while t < t_end {
            let width = (0.25 * t).min(resolution).max(1e-12);
            let next = (t + width).min(t_end);
            acc.add(rule.integrate(t, next, |s| f(s) * s.powf(-1.0 - alpha)));
            t = next;
        }
    }
    let start = t_end.max(t0);
    acc.add(far_value * start.powf(-alpha) / alpha);
    acc.value()
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (zero for two points).
    pub slope_stderr: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    xb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xa[i].min(xb[j]);
        while i < n && xa[i] <= v {
            i += 1;
        }
        while j < m && xb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}
