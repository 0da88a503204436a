//! Experiment configuration files.
//!
//! A config is a TOML document. Unknown keys are rejected everywhere.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use anilap_core::harness::default_q;
use anilap_core::harness::poincare::Pattern;
use anilap_core::{AnisotropyIndices, BoxRegion, Coefficient, ExteriorBox, ExteriorPolicy, KernelFamily};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stability indices, one per axis.
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Axes,
    Modulated,
    Isotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant { value: f64 },
    Checkerboard { cell: f64, low: f64, high: f64 },
    SmoothBump { center: Vec<f64>, width: f64, low: f64, high: f64 },
}

impl CoefficientSpec {
    pub fn build(&self) -> Coefficient {
        match self.clone() {
            CoefficientSpec::Constant { value } => Coefficient::Constant(value),
            CoefficientSpec::Checkerboard { cell, low, high } => Coefficient::Checkerboard { cell, low, high },
            CoefficientSpec::SmoothBump {
                center,
                width,
                low,
                high,
            } => Coefficient::SmoothBump {
                center,
                width,
                low,
                high,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default)]
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<CoefficientSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per axis; experiments pick their own default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    /// Distance beyond which function-type exterior data takes its far value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "two")]
    pub lambda: f64,
    #[serde(default = "eight")]
    pub theta: f64,
    #[serde(default = "five_quarters")]
    pub sigma: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            center: None,
            r: 1.0,
            lambda: 2.0,
            theta: 8.0,
            sigma: 1.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSpec {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `height * prod (1 - s_k^2)^3_+` with `s = (x - center) / width`.
    Bump { center: Vec<f64>, width: f64, height: f64 },
}

impl SourceSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            SourceSpec::Zero => true,
            SourceSpec::Constant { value } => *value == 0.0,
            SourceSpec::Bump { height, .. } => *height == 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Constant { value } => *value,
            SourceSpec::Bump { center, width, height } => {
                height
                    * x.iter()
                        .zip(center)
                        .map(|(a, c)| {
                            let s = (a - c) / width;
                            (1.0 - s * s).max(0.0).powi(3)
                        })
                        .product::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExteriorSpec {
    #[default]
    Zero,
    Constant { value: f64 },
    /// Box on `axis` starting `distance` beyond the domain edge, of
    /// thickness `width` along the axis and `transverse` across it.
    AxisBump {
        axis: usize,
        distance: f64,
        width: f64,
        #[serde(default = "one")]
        transverse: f64,
        height: f64,
    },
    Boxes { boxes: Vec<BoxSpec> },
    /// Alternating `low`/`high` cells of side `cell` over `[-extent, extent]^d`.
    Checkerboard { extent: f64, cell: f64, low: f64, high: f64 },
    /// `amplitude cos(freq x_axis)` out to the grid reach.
    Cosine { axis: usize, freq: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default)]
    pub f: SourceSpec,
    #[serde(default)]
    pub g: ExteriorSpec,
    /// Integrability exponent of `f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "solver_tol")]
    pub solver: f64,
    /// Slack on fitted exponents.
    #[serde(default = "fit_slack")]
    pub fit: f64,
    /// Relative tolerance for exact identities.
    #[serde(default = "exact_tol")]
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: solver_tol(),
            fit: fit_slack(),
            exact: exact_tol(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn eight() -> f64 {
    8.0
}
fn five_quarters() -> f64 {
    1.25
}
fn solver_tol() -> f64 {
    1e-10
}
fn fit_slack() -> f64 {
    0.1
}
fn exact_tol() -> f64 {
    1e-12
}

fn default_levels() -> Vec<usize> {
    vec![33, 65, 129, 257, 513]
}
fn default_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}
fn default_ts() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}
fn default_radii() -> Vec<f64> {
    vec![1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0]
}
fn default_pattern() -> Pattern {
    Pattern::Linear { axis: 0 }
}
fn default_pbars() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.4]
}
fn default_p0s() -> Vec<f64> {
    anilap_core::harness::harnack::P0_GRID.to_vec()
}
fn default_distances() -> Vec<f64> {
    vec![2.0, 4.0, 8.0]
}
fn members() -> usize {
    20
}
fn bumps() -> usize {
    10
}

/// The experiment to run and its own parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// `|M_{2r}| / |M_r|` against `2^{alpha_max beta}`.
    GeometryDoubling {},
    LevyIntegrability {
        #[serde(default = "points")]
        points: usize,
    },
    SymbolConsistency {
        #[serde(default = "one")]
        xi: f64,
        #[serde(default = "default_levels")]
        levels: Vec<usize>,
    },
    CutoffBound {},
    Sobolev {
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
        #[serde(default = "bumps")]
        bumps: usize,
    },
    WeakTail {
        #[serde(default = "default_ts")]
        ts: Vec<f64>,
        #[serde(default = "per_axis")]
        per_axis: usize,
    },
    Poincare {
        #[serde(default = "default_pattern")]
        pattern: Pattern,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
    },
    Solve {},
    LogMoment {
        #[serde(default = "one")]
        slack: f64,
    },
    Flip {
        #[serde(default = "default_pbars")]
        pbars: Vec<f64>,
        #[serde(default = "members")]
        members: usize,
    },
    Moser {
        #[serde(default = "p0")]
        p0: f64,
        #[serde(default = "steps")]
        steps: usize,
    },
    WeakHarnack {
        #[serde(default = "members")]
        members: usize,
        #[serde(default = "default_p0s")]
        p0s: Vec<f64>,
    },
    HarnackProbe {
        #[serde(default = "default_distances")]
        distances: Vec<f64>,
        #[serde(default = "rows")]
        rows: usize,
        #[serde(default = "one")]
        mass: f64,
        /// Harnack constant and exponent held fixed across the probe.
        #[serde(default = "half")]
        c: f64,
        #[serde(default = "p0")]
        p0: f64,
    },
    OscillationDecay {
        #[serde(default = "max_scales")]
        max_scales: usize,
        #[serde(default = "two")]
        c_a: f64,
        #[serde(default = "p0")]
        p: f64,
    },
    HolderFit {
        #[serde(default = "pairs")]
        pairs: usize,
    },
    Elementary {
        #[serde(default = "samples")]
        samples: usize,
    },
    StableSamples {
        #[serde(default = "samples")]
        samples: usize,
    },
    ExitTime {
        #[serde(default = "paths")]
        paths: usize,
        #[serde(default = "steps_per_unit")]
        steps_per_unit: f64,
        #[serde(default = "horizon")]
        horizon: usize,
    },
    HarmonicMeasure {
        #[serde(default = "paths")]
        paths: usize,
        #[serde(default = "dt")]
        dt: f64,
        #[serde(default = "horizon")]
        horizon: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<Vec<f64>>,
    },
}

fn points() -> usize {
    20
}
fn per_axis() -> usize {
    400
}
fn p0() -> f64 {
    0.1
}
fn steps() -> usize {
    6
}
fn rows() -> usize {
    1
}
fn max_scales() -> usize {
    5
}
fn pairs() -> usize {
    20_000
}
fn samples() -> usize {
    1_000_000
}
fn paths() -> usize {
    100_000
}
fn steps_per_unit() -> f64 {
    200.0
}
fn dt() -> f64 {
    1e-3
}
fn horizon() -> usize {
    1_000_000
}

/// Names accepted in `experiment.kind`, with one-line descriptions.
pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("geometry-doubling", "volume ratio of M_2r and M_r against 2^(alpha_max beta)"),
    ("levy-integrability", "integral of min(|h|^2, 1) against the axes kernel, expected 4d"),
    ("symbol-consistency", "discrete operator on cos(xi x_1) against the symbol, with refinement order"),
    ("cutoff-bound", "carre du champ of the anisotropic cutoff against its bound"),
    ("sobolev", "Sobolev ratio under anisotropic rescaling and over random bumps"),
    ("weak-tail", "measure of the symbol sublevel sets and its power law"),
    ("poincare", "Poincare ratio against r^alpha_max"),
    ("solve", "Dirichlet solve with weak-form defect and maximum principle"),
    ("log-moment", "log-moment estimate for a supersolution"),
    ("flip", "products of positive and negative power means over a supersolution family"),
    ("moser", "Moser iteration table for a supersolution"),
    ("weak-harnack", "weak Harnack deficit over a family of nonnegative supersolutions"),
    ("harnack-probe", "sup/inf ratio for exterior bumps at growing distance"),
    ("oscillation-decay", "oscillation over nested rectangles and the fitted decay rate"),
    ("holder-fit", "Hoelder exponents in the Euclidean and metric gauges"),
    ("elementary", "randomized search for the constants of the two-point inequality"),
    ("stable-samples", "characteristic function and tail index of stable samples"),
    ("exit-time", "mean exit times from M_{r/2} and M_r and their ratio"),
    ("harmonic-measure", "Monte Carlo hitting probability against the solver"),
];

impl Experiment {
    pub fn name(&self) -> &'static str {
        let i = match self {
            Experiment::GeometryDoubling {} => 0,
            Experiment::LevyIntegrability { .. } => 1,
            Experiment::SymbolConsistency { .. } => 2,
            Experiment::CutoffBound {} => 3,
            Experiment::Sobolev { .. } => 4,
            Experiment::WeakTail { .. } => 5,
            Experiment::Poincare { .. } => 6,
            Experiment::Solve {} => 7,
            Experiment::LogMoment { .. } => 8,
            Experiment::Flip { .. } => 9,
            Experiment::Moser { .. } => 10,
            Experiment::WeakHarnack { .. } => 11,
            Experiment::HarnackProbe { .. } => 12,
            Experiment::OscillationDecay { .. } => 13,
            Experiment::HolderFit { .. } => 14,
            Experiment::Elementary { .. } => 15,
            Experiment::StableSamples { .. } => 16,
            Experiment::ExitTime { .. } => 17,
            Experiment::HarmonicMeasure { .. } => 18,
        };
        EXPERIMENTS[i].0
    }

    /// Whether the experiment solves a forced problem, so that the
    /// integrability exponent of `f` matters.
    fn uses_forcing(&self) -> bool {
        matches!(
            self,
            Experiment::Solve {}
                | Experiment::LogMoment { .. }
                | Experiment::Flip { .. }
                | Experiment::Moser { .. }
                | Experiment::WeakHarnack { .. }
                | Experiment::OscillationDecay { .. }
                | Experiment::HolderFit { .. }
        )
    }
}

impl ExperimentConfig {
    /// Parses and validates a config document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML text of the config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn indices(&self) -> AnisotropyIndices {
        AnisotropyIndices::new(self.alpha.clone()).expect("validated")
    }

    pub fn kernel(&self) -> KernelFamily {
        let idx = self.indices();
        let coeff = || self.kernel.coefficient.as_ref().map_or(Coefficient::Constant(1.0), |c| c.build());
        match self.kernel.variant {
            Variant::Axes => KernelFamily::Axes(idx),
            Variant::Modulated => KernelFamily::modulated(idx, coeff()).expect("validated"),
            Variant::Isotropic => KernelFamily::isotropic(self.alpha[0], self.dim(), coeff()).expect("validated"),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.center.clone().unwrap_or_else(|| vec![0.0; self.dim()])
    }

    pub fn nodes_or(&self, per_axis: usize) -> Vec<usize> {
        self.grid.nodes.clone().unwrap_or_else(|| vec![per_axis; self.dim()])
    }

    /// `q` as configured, or the default above `max(2, beta)`.
    pub fn q(&self) -> f64 {
        self.data.q.unwrap_or_else(|| default_q(self.indices().beta()))
    }

    /// Exterior data as a policy around the configured domain.
    pub fn exterior(&self) -> ExteriorPolicy {
        let idx = self.indices();
        let center = self.center();
        let widths = idx.half_widths(self.domain.r);
        match &self.data.g {
            ExteriorSpec::Zero => ExteriorPolicy::Zero,
            ExteriorSpec::Constant { value } => ExteriorPolicy::Constant(*value),
            ExteriorSpec::AxisBump {
                axis,
                distance,
                width,
                transverse,
                height,
            } => {
                let mut lo: Vec<f64> = center.iter().zip(&widths).map(|(c, w)| c - 0.5 * transverse * w).collect();
                let mut hi: Vec<f64> = center.iter().zip(&widths).map(|(c, w)| c + 0.5 * transverse * w).collect();
                lo[*axis] = center[*axis] + widths[*axis] + distance;
                hi[*axis] = lo[*axis] + width;
                ExteriorPolicy::Boxes(vec![ExteriorBox {
                    region: BoxRegion::new(lo, hi).expect("validated"),
                    value: *height,
                }])
            }
            ExteriorSpec::Boxes { boxes } => ExteriorPolicy::Boxes(
                boxes
                    .iter()
                    .map(|b| ExteriorBox {
                        region: BoxRegion::new(b.lo.clone(), b.hi.clone()).expect("validated"),
                        value: b.value,
                    })
                    .collect(),
            ),
            ExteriorSpec::Checkerboard { extent, cell, low, high } => {
                let per = (2.0 * extent / cell).round() as usize;
                let d = self.dim();
                let mut boxes = Vec::new();
                for flat in 0..per.pow(d as u32) {
                    let mut rest = flat;
                    let mut lo = Vec::with_capacity(d);
                    let mut parity = 0;
                    for _ in 0..d {
                        let i = rest % per;
                        rest /= per;
                        parity += i;
                        lo.push(-extent + i as f64 * cell);
                    }
                    let hi: Vec<f64> = lo.iter().map(|l| l + cell).collect();
                    boxes.push(ExteriorBox {
                        region: BoxRegion::new(lo, hi).expect("validated"),
                        value: if parity % 2 == 0 { *high } else { *low },
                    });
                }
                ExteriorPolicy::Boxes(boxes)
            }
            ExteriorSpec::Cosine { axis, freq, amplitude } => {
                let (axis, freq, amplitude) = (*axis, *freq, *amplitude);
                let reach = self.grid.reach.unwrap_or(400.0);
                let resolution = (0.05f64).min(0.25 / freq.abs().max(1e-12));
                ExteriorPolicy::function(move |y: &[f64]| amplitude * (freq * y[axis]).cos(), 0.0, reach, resolution)
            }
        }
    }

    /// Checks every constraint that parsing alone does not enforce.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Invalid {
            field: field.to_string(),
            message: msg,
        });
        let d = self.dim();
        if d == 0 {
            return bad("alpha", "needs at least one index".into());
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a < 2.0)) {
            return bad("alpha", format!("{a} is outside (0, 2)"));
        }
        let beta = self.indices().beta();

        match (&self.kernel.variant, &self.kernel.coefficient) {
            (Variant::Axes, Some(_)) => return bad("kernel.coefficient", "the axes kernel takes no coefficient".into()),
            (Variant::Isotropic, _) if self.alpha.iter().any(|a| *a != self.alpha[0]) => {
                return bad("alpha", "the isotropic kernel needs equal indices".into())
            }
            (_, Some(c)) => {
                c.build()
                    .validate()
                    .or_else(|e| bad("kernel.coefficient", e.to_string()))?;
                if let CoefficientSpec::SmoothBump { center, .. } = c {
                    if center.len() != d {
                        return bad("kernel.coefficient.center", format!("expected {d} coordinates"));
                    }
                }
            }
            _ => {}
        }

        if let Some(n) = &self.grid.nodes {
            if n.len() != d {
                return bad("grid.nodes", format!("expected {d} entries, got {}", n.len()));
            }
            if n.iter().any(|&k| k < 2) {
                return bad("grid.nodes", "every axis needs at least two nodes".into());
            }
            if n.iter().map(|&k| k as f64).product::<f64>() > 5e7 {
                return bad("grid.nodes", "more than 5e7 nodes".into());
            }
        }
        if let Some(r) = self.grid.reach {
            if !(r > 0.0 && r.is_finite()) {
                return bad("grid.reach", "must be positive".into());
            }
        }

        if let Some(c) = &self.domain.center {
            if c.len() != d {
                return bad("domain.center", format!("expected {d} coordinates"));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return bad("domain.center", "must be finite".into());
            }
        }
        let dom = &self.domain;
        if !(dom.r > 0.0 && dom.r <= 1.0) {
            return bad("domain.r", format!("{} is outside (0, 1]", dom.r));
        }
        if !(dom.lambda > 1.0 && dom.lambda.is_finite()) {
            return bad("domain.lambda", "must exceed 1".into());
        }
        if let Experiment::OscillationDecay { .. } = self.experiment {
            if !(dom.theta > dom.lambda && dom.lambda > dom.sigma && dom.sigma > 1.0 && dom.theta.is_finite()) {
                return bad("domain", "needs theta > lambda > sigma > 1".into());
            }
        }

        let t = &self.tolerances;
        for (name, v) in [("tolerances.solver", t.solver), ("tolerances.fit", t.fit), ("tolerances.exact", t.exact)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(name, format!("{v} is outside (0, 1)"));
            }
        }

        if let Some(q) = self.data.q {
            if !(q > 1.0 && q.is_finite()) {
                return bad("data.q", "must exceed 1".into());
            }
        }
        if !self.data.f.is_zero() && self.experiment.uses_forcing() {
            let q = self.q();
            let floor = 2f64.max(beta);
            if q <= floor {
                return bad("data.q", format!("q = {q} must exceed max(2, beta) = {floor} when f is nonzero"));
            }
        }
        match &self.data.f {
            SourceSpec::Bump { center, width, height } => {
                if center.len() != d {
                    return bad("data.f.center", format!("expected {d} coordinates"));
                }
                if !(*width > 0.0) || !height.is_finite() {
                    return bad("data.f", "needs a positive width and a finite height".into());
                }
            }
            SourceSpec::Constant { value } if !value.is_finite() => {
                return bad("data.f.value", "must be finite".into());
            }
            _ => {}
        }
        self.validate_exterior(d)?;
        self.validate_experiment(d, beta)
    }

    fn validate_exterior(&self, d: usize) -> Result<(), CliError> {
        let bad = |field: &str, msg: &str| Err(CliError::Invalid {
            field: field.to_string(),
            message: msg.to_string(),
        });
        let finite = |v: f64| v.is_finite();
        match &self.data.g {
            ExteriorSpec::Zero => {}
            ExteriorSpec::Constant { value } => {
                if !finite(*value) {
                    return bad("data.g.value", "must be finite");
                }
            }
            ExteriorSpec::AxisBump {
                axis,
                distance,
                width,
                transverse,
                height,
            } => {
                if *axis >= d {
                    return bad("data.g.axis", "out of range");
                }
                if !(*distance >= 0.0 && *width > 0.0 && *transverse > 0.0) || !finite(*distance + *width + *transverse) {
                    return bad("data.g", "distance must be nonnegative, width and transverse positive");
                }
                if !finite(*height) {
                    return bad("data.g.height", "must be finite");
                }
            }
            ExteriorSpec::Boxes { boxes } => {
                for b in boxes {
                    if b.lo.len() != d || b.hi.len() != d {
                        return bad("data.g.boxes", "box dimension does not match alpha");
                    }
                    if BoxRegion::new(b.lo.clone(), b.hi.clone()).is_err() || !finite(b.value) {
                        return bad("data.g.boxes", "each box needs lo < hi and a finite value");
                    }
                }
            }
            ExteriorSpec::Checkerboard { extent, cell, low, high } => {
                if !(*extent > 0.0 && *cell > 0.0) || !finite(*extent + *cell + *low + *high) {
                    return bad("data.g", "extent and cell must be positive");
                }
                let per = 2.0 * extent / cell;
                if (per - per.round()).abs() > 1e-9 || per.round().powi(d as i32) > 1e5 {
                    return bad("data.g.cell", "2 extent / cell must be an integer with at most 1e5 cells in total");
                }
            }
            ExteriorSpec::Cosine { axis, freq, amplitude } => {
                if *axis >= d {
                    return bad("data.g.axis", "out of range");
                }
                if !(freq.is_finite() && amplitude.is_finite()) {
                    return bad("data.g", "freq and amplitude must be finite");
                }
            }
        }
        Ok(())
    }

    fn validate_experiment(&self, d: usize, beta: f64) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Invalid {
            field: format!("experiment.{field}"),
            message: msg,
        });
        let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        let nonempty = |n: usize| n > 0;
        match &self.experiment {
            Experiment::GeometryDoubling {} | Experiment::CutoffBound {} | Experiment::Solve {} => {}
            Experiment::LevyIntegrability { points } => {
                if !nonempty(*points) {
                    return bad("points", "must be positive".into());
                }
            }
            Experiment::SymbolConsistency { xi, levels } => {
                if !(xi.is_finite() && *xi != 0.0) {
                    return bad("xi", "must be finite and nonzero".into());
                }
                if levels.len() < 3 || levels.iter().any(|&n| n < 8) {
                    return bad("levels", "needs at least three grids of 8 or more nodes".into());
                }
            }
            Experiment::Sobolev { lambdas, bumps } => {
                if beta <= 1.0 {
                    return bad("kind", format!("the Sobolev exponent needs beta > 1, got {beta}"));
                }
                if lambdas.is_empty() || !positive(lambdas) || !nonempty(*bumps) {
                    return bad("lambdas", "needs positive scales and at least one bump".into());
                }
            }
            Experiment::WeakTail { ts, per_axis } => {
                if ts.len() < 2 || ts.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
                    return bad("ts", "needs at least two values in (0, 1]".into());
                }
                if *per_axis < 8 || (*per_axis as f64).powi(d as i32 - 1) > 1e8 {
                    return bad("per_axis", "between 8 and a lattice of 1e8 points".into());
                }
            }
            Experiment::Poincare { pattern, radii } => {
                pattern
                    .validate(d)
                    .or_else(|e| bad("pattern", e.to_string()))?;
                if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
                    return bad("radii", "needs at least two radii in (0, 1]".into());
                }
            }
            Experiment::LogMoment { slack } => {
                if !(*slack > 0.0 && slack.is_finite()) {
                    return bad("slack", "must be positive".into());
                }
            }
            Experiment::Flip { pbars, members } => {
                if pbars.is_empty() || pbars.iter().any(|p| !(*p > 0.0 && *p < 1.0)) || !nonempty(*members) {
                    return bad("pbars", "needs exponents in (0, 1) and at least one member".into());
                }
            }
            Experiment::Moser { p0, steps } => {
                if !(*p0 > 0.0 && *p0 < 1.0) || *steps == 0 || *steps > 64 {
                    return bad("p0", "needs p0 in (0, 1) and 1..=64 steps".into());
                }
            }
            Experiment::WeakHarnack { members, p0s } => {
                if !nonempty(*members) || p0s.is_empty() || p0s.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
                    return bad("p0s", "needs exponents in (0, 1) and at least one member".into());
                }
            }
            Experiment::HarnackProbe {
                distances,
                rows,
                mass,
                c,
                p0,
            } => {
                if d < 2 {
                    return bad("kind", "the probe needs at least two axes".into());
                }
                if distances.is_empty() || !positive(distances) || *rows == 0 || !(*mass > 0.0 && mass.is_finite()) {
                    return bad("distances", "needs positive distances, mass and row count".into());
                }
                if !(*c > 0.0 && c.is_finite() && *p0 > 0.0 && *p0 < 1.0) {
                    return bad("c", "needs c > 0 and p0 in (0, 1)".into());
                }
            }
            Experiment::OscillationDecay { max_scales, c_a, p } => {
                if *max_scales < 3 || *max_scales > 40 {
                    return bad("max_scales", "between 3 and 40".into());
                }
                if !(*c_a > 0.0 && c_a.is_finite() && *p > 0.0 && *p < 1.0) {
                    return bad("c_a", "needs c_a > 0 and p in (0, 1)".into());
                }
            }
            Experiment::HolderFit { pairs } => {
                if *pairs < 10 {
                    return bad("pairs", "at least 10".into());
                }
            }
            Experiment::Elementary { samples } | Experiment::StableSamples { samples } => {
                if *samples < 100 || *samples > 100_000_000 {
                    return bad("samples", "between 100 and 1e8".into());
                }
            }
            Experiment::ExitTime {
                paths,
                steps_per_unit,
                horizon,
            } => {
                if *paths < 2 || *horizon == 0 || !(*steps_per_unit >= 1.0 && steps_per_unit.is_finite()) {
                    return bad("paths", "needs at least two paths, a horizon and steps_per_unit >= 1".into());
                }
            }
            Experiment::HarmonicMeasure {
                paths,
                dt,
                horizon,
                start,
            } => {
                if *paths < 2 || *horizon == 0 || !(*dt > 0.0 && dt.is_finite()) {
                    return bad("paths", "needs at least two paths, a horizon and dt > 0".into());
                }
                if let Some(s) = start {
                    let rect = anilap_core::AnisoRect::new(&self.indices(), &self.center(), self.domain.r)
                        .map_err(|e| CliError::Invalid {
                            field: "domain".into(),
                            message: e.to_string(),
                        })?;
                    if s.len() != d || !rect.contains(s) {
                        return bad("start", "must be a point of the domain".into());
                    }
                }
                if matches!(self.data.g, ExteriorSpec::Cosine { .. }) {
                    return bad("kind", "hitting sets come from zero, constant, box or checkerboard data".into());
                }
            }
        }
        Ok(())
    }
}
