//! Independent quadrature oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss–Legendre over `panels` equal panels of [a, b].
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * 0.5 * h * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    s
}

/// Integral over (0, a] with dyadic panels refining toward zero; the
/// integrand may be integrably singular at zero.
pub fn integrate_from_zero(f: impl Fn(f64) -> f64, a: f64) -> f64 {
    let mut s = 0.0;
    let mut hi = a;
    for _ in 0..80 {
        let lo = 0.5 * hi;
        s += integrate(&f, lo, hi, 1);
        hi = lo;
    }
    s
}

/// Symbol constant `alpha (2 - alpha) int_R (1 - cos t) |t|^{-1-alpha} dt`.
pub fn symbol_oracle(alpha: f64) -> f64 {
    let f = |t: f64| (1.0 - t.cos()) * t.powf(-1.0 - alpha);
    let period = 2.0 * PI;
    let periods = 2000;
    let mut s = integrate_from_zero(f, period);
    s += integrate(f, period, period * periods as f64, 4 * periods);
    let t_end = period * periods as f64;
    // Beyond t_end the cosine part is O(t_end^{-2-alpha}).
    s += t_end.powf(-alpha) / alpha;
    2.0 * alpha * (2.0 - alpha) * s
}

/// `int_0^inf xi^alpha exp(-xi^2 / 2) d xi`.
pub fn gaussian_moment(alpha: f64) -> f64 {
    integrate_from_zero(|x| x.powf(alpha) * (-0.5 * x * x).exp(), 1.0)
        + integrate(|x| x.powf(alpha) * (-0.5 * x * x).exp(), 1.0, 14.0, 64)
}

/// `int_a^b alpha (2 - alpha) t^{-1-alpha} dt` by quadrature in `log t`.
pub fn density_mass(alpha: f64, a: f64, b: f64) -> f64 {
    let c = alpha * (2.0 - alpha);
    if b.is_finite() {
        integrate(|s| c * s.exp().powf(-alpha), a.ln(), b.ln(), 64)
    } else {
        integrate(|s| c * s.exp().powf(-alpha), a.ln(), a.ln() + 80.0 / alpha, 2000)
    }
}

/// Second moment of the inner cell `|t| < h/2`, split between the two
/// nearest neighbours at distance `h`: `int_{|t|<h/2} t^2 density / (2 h^2)`.
/// Integrated in `s = log t`, where the integrand is `c e^{(2 - alpha) s}`.
pub fn near_weight(alpha: f64, h: f64) -> f64 {
    let c = alpha * (2.0 - alpha);
    let top = (0.5 * h).ln();
    let depth = 45.0 / (2.0 - alpha);
    let m = integrate(|s| c * (s * (2.0 - alpha)).exp(), top - depth, top, 400);
    2.0 * m / (2.0 * h * h)
}
