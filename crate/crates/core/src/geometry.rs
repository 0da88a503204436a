//! Anisotropy indices, the anisotropic metric, rectangles `M_r(x0)`, the
//! scaling map and metric-ball coverings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-axis stability indices `(alpha_1, ..., alpha_d)`, each in `(0, 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AnisotropyIndices {
    alphas: Vec<f64>,
    alpha_max: f64,
    alpha_min: f64,
}

impl AnisotropyIndices {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidIndex("dimension must be positive".into()));
        }
        for (k, &a) in alphas.iter().enumerate() {
            if !(a > 0.0 && a < 2.0) {
                return Err(Error::InvalidIndex(format!(
                    "alpha_{} = {a} is outside (0, 2)",
                    k + 1
                )));
            }
        }
        let alpha_max = alphas.iter().copied().fold(f64::MIN, f64::max);
        let alpha_min = alphas.iter().copied().fold(f64::MAX, f64::min);
        Ok(Self {
            alphas,
            alpha_max,
            alpha_min,
        })
    }

    /// Isotropic indices `(alpha, ..., alpha)` in dimension `d`.
    pub fn isotropic(alpha: f64, d: usize) -> Result<Self> {
        Self::new(vec![alpha; d])
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alphas[k]
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    /// `alpha_max / alpha_k`, the exponent of `r` in the half-width along axis `k`.
    pub fn axis_exponent(&self, k: usize) -> f64 {
        self.alpha_max / self.alphas[k]
    }

    /// `beta = sum_k 1 / alpha_k`.
    pub fn beta(&self) -> f64 {
        self.alphas.iter().map(|a| 1.0 / a).sum()
    }

    /// `Theta = 2 beta / (beta - 1)`; undefined unless `beta > 1`.
    pub fn theta(&self) -> Result<f64> {
        let beta = self.beta();
        if beta <= 1.0 {
            return Err(Error::SobolevExponentUndefined { beta });
        }
        Ok(2.0 * beta / (beta - 1.0))
    }

    /// Per-axis half-widths `r^{alpha_max / alpha_k}`.
    pub fn half_widths(&self, r: f64) -> Vec<f64> {
        (0..self.dim()).map(|k| r.powf(self.axis_exponent(k))).collect()
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for AnisotropyIndices {
    type Error = Error;

    fn try_from(alphas: Vec<f64>) -> Result<Self> {
        Self::new(alphas)
    }
}

impl From<AnisotropyIndices> for Vec<f64> {
    fn from(idx: AnisotropyIndices) -> Self {
        idx.alphas
    }
}

/// Returns `(beta, Theta)`.
pub fn beta_theta(idx: &AnisotropyIndices) -> Result<(f64, f64)> {
    Ok((idx.beta(), idx.theta()?))
}

/// The anisotropic metric: the supremum over axes of
/// `|x_k - y_k|^{alpha_k / alpha_max}`, where separations above one count as one.
pub fn metric_dist(idx: &AnisotropyIndices, x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), idx.dim());
    debug_assert_eq!(y.len(), idx.dim());
    let mut d: f64 = 0.0;
    for k in 0..idx.dim() {
        let gap = (x[k] - y[k]).abs();
        let term = if gap > 1.0 {
            1.0
        } else {
            gap.powf(idx.alpha(k) / idx.alpha_max())
        };
        d = d.max(term);
    }
    d
}

/// An axis-parallel open box `(lo_1, hi_1) x ... x (lo_d, hi_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidQuery("box with empty extent".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v > *a && *v < *b)
    }
}

/// The anisotropic rectangle `M_r(center)`: the product of intervals
/// `(c_k - r^{alpha_max/alpha_k}, c_k + r^{alpha_max/alpha_k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisoRect {
    center: Vec<f64>,
    r: f64,
    half_widths: Vec<f64>,
}

impl AnisoRect {
    pub fn new(idx: &AnisotropyIndices, center: &[f64], r: f64) -> Result<Self> {
        idx.check_point(center)?;
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidRadius(format!("r = {r} must be positive")));
        }
        Ok(Self {
            center: center.to_vec(),
            r,
            half_widths: idx.half_widths(r),
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `prod_k 2 r^{alpha_max/alpha_k} = 2^d r^{alpha_max beta}`.
    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|w| 2.0 * w).product()
    }

    /// Strict membership; rectangles are open.
    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(&self.center)
            .zip(&self.half_widths)
            .all(|((v, c), w)| (v - c).abs() < *w)
    }

    /// Same center, radius multiplied by `factor`.
    pub fn scaled(&self, idx: &AnisotropyIndices, factor: f64) -> Result<Self> {
        Self::new(idx, &self.center, self.r * factor)
    }

    pub fn lo(&self, k: usize) -> f64 {
        self.center[k] - self.half_widths[k]
    }

    pub fn hi(&self, k: usize) -> f64 {
        self.center[k] + self.half_widths[k]
    }

    pub fn as_box(&self) -> BoxRegion {
        BoxRegion {
            lo: (0..self.dim()).map(|k| self.lo(k)).collect(),
            hi: (0..self.dim()).map(|k| self.hi(k)).collect(),
        }
    }

    /// Whether the closed rectangle lies inside `other` (up to `tol`).
    pub fn is_within(&self, other: &AnisoRect, tol: f64) -> bool {
        (0..self.dim()).all(|k| self.lo(k) >= other.lo(k) - tol && self.hi(k) <= other.hi(k) + tol)
    }
}

/// Convenience constructor mirroring `AnisoRect::new`.
pub fn rect(idx: &AnisotropyIndices, center: &[f64], r: f64) -> Result<AnisoRect> {
    AnisoRect::new(idx, center, r)
}

/// The diagonal scaling `Psi(x)_k = lambda^{alpha_max/alpha_k} x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMap {
    lambda: f64,
    diag: Vec<f64>,
}

impl ScaleMap {
    pub fn new(idx: &AnisotropyIndices, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidRadius(format!(
                "scaling factor {lambda} must be positive"
            )));
        }
        Ok(Self {
            lambda,
            diag: idx.half_widths(lambda),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.diag).map(|(v, s)| v * s).collect()
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.diag).map(|(v, s)| v / s).collect()
    }

    pub fn inverse(&self) -> ScaleMap {
        ScaleMap {
            lambda: 1.0 / self.lambda,
            diag: self.diag.iter().map(|s| 1.0 / s).collect(),
        }
    }

    /// `self o other`.
    pub fn compose(&self, other: &ScaleMap) -> ScaleMap {
        ScaleMap {
            lambda: self.lambda * other.lambda,
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a * b).collect(),
        }
    }

    /// `lambda^{alpha_max beta}`.
    pub fn determinant(&self) -> f64 {
        self.diag.iter().product()
    }

    /// Image of a rectangle centred at the origin is again a rectangle,
    /// `Psi(M_r(c)) = M_{lambda r}(Psi c)`.
    pub fn image(&self, idx: &AnisotropyIndices, rect: &AnisoRect) -> Result<AnisoRect> {
        AnisoRect::new(idx, &self.apply(rect.center()), rect.r() * self.lambda)
    }
}

pub fn scale_map(idx: &AnisotropyIndices, lambda: f64) -> Result<ScaleMap> {
    ScaleMap::new(idx, lambda)
}

/// Covers `region` by metric balls (= rectangles) of radius `rho`.
///
/// Centers sit on an axis-aligned lattice with spacing equal to the ball
/// half-width `rho^{alpha_max/alpha_k}`, so every point of the region is within
/// half a half-width of some center along each axis. Any pair `x, y` in the
/// region with `d(x, y) <= rho` then lies in the doubled ball around the center
/// nearest to `x`.
pub fn cover(idx: &AnisotropyIndices, region: &AnisoRect, rho: f64) -> Result<Vec<AnisoRect>> {
    if !(rho > 0.0 && rho < 0.25) {
        return Err(Error::InvalidRadius(format!("rho = {rho} must lie in (0, 1/4)")));
    }
    idx.check_point(region.center())?;
    let unit = AnisoRect::new(idx, &vec![0.0; idx.dim()], 1.0)?;
    if !region.is_within(&unit, 1e-12) {
        return Err(Error::InvalidQuery("cover region must lie inside M_1".into()));
    }
    let w = idx.half_widths(rho);
    let rw = region.half_widths();
    if rw.iter().zip(&w).all(|(a, b)| a <= b) {
        return Ok(vec![AnisoRect::new(idx, region.center(), rho)?]);
    }
    // per-axis offsets: m centers on each side with m*s + s/2 >= half-width
    let offsets: Vec<Vec<f64>> = (0..idx.dim())
        .map(|k| {
            let s = w[k];
            let m = ((rw[k] - 0.5 * s) / s).ceil().max(0.0) as i64;
            (-m..=m).map(|i| i as f64 * s).collect()
        })
        .collect();
    let mut balls = Vec::new();
    let mut counter = vec![0usize; idx.dim()];
    loop {
        let c: Vec<f64> = (0..idx.dim())
            .map(|k| region.center()[k] + offsets[k][counter[k]])
            .collect();
        balls.push(AnisoRect::new(idx, &c, rho)?);
        let mut k = idx.dim();
        loop {
            if k == 0 {
                return Ok(balls);
            }
            k -= 1;
            counter[k] += 1;
            if counter[k] < offsets[k].len() {
                break;
            }
            counter[k] = 0;
        }
    }
}

/// Index of a ball in `balls` whose double contains both points, if any.
pub fn double_ball_containing(
    idx: &AnisotropyIndices,
    balls: &[AnisoRect],
    x: &[f64],
    y: &[f64],
) -> Option<usize> {
    balls.iter().position(|b| {
        let radius = 2.0 * b.r();
        metric_dist(idx, b.center(), x) < radius && metric_dist(idx, b.center(), y) < radius
    })
}
