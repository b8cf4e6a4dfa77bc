//! Experiment configuration files and their checks.

use serde::{Deserialize, Serialize};

use crate::detector::DetectorKernel;
use crate::error::{Error, Result};
use crate::multitime::Pairing;
use crate::probability::Normalization;
use crate::states::LineFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Qsymbol,
    Clock,
    Noise,
    Sagnac,
    MiScan,
    AmplitudeCheck,
    Kolmogorov,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            Self::Qsymbol => "qsymbol",
            Self::Clock => "clock",
            Self::Noise => "noise",
            Self::Sagnac => "sagnac",
            Self::MiScan => "mi-scan",
            Self::AmplitudeCheck => "amplitude-check",
            Self::Kolmogorov => "kolmogorov",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub ring: RingSpec,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default)]
    pub m_max: Option<i64>,
}

fn one() -> f64 {
    1.0
}

impl Default for RingSpec {
    fn default() -> Self {
        Self { mu: 0.0, r: 1.0, m_max: None }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub n_t: Option<usize>,
    pub phi: Option<Vec<f64>>,
    pub n_phi: Option<usize>,
    pub n_theta: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem inside the output directory; defaults to the config name.
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

/// A list of values or an inclusive range with `n` points.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Range { start: f64, stop: f64, n: usize },
}

impl Values {
    pub fn resolve(&self) -> Vec<f64> {
        match *self {
            Self::List(ref v) => v.clone(),
            Self::Range { start, stop, n } => linspace(start, stop, n),
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Coherent {
        xi: f64,
        alpha: f64,
        #[serde(default)]
        theta: f64,
    },
    GaussianLine {
        p: f64,
        sigma: f64,
        #[serde(default = "gaussian_family")]
        family: LineFamily,
        #[serde(default)]
        theta: f64,
    },
    ModeList {
        modes: Vec<ModeAmplitude>,
    },
    /// Equal superposition of the base state and its mirror image.
    Symmetric {
        base: Box<StateSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmplitude {
    pub m: i64,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn gaussian_family() -> LineFamily {
    LineFamily::Gaussian
}

impl StateSpec {
    /// Smallest cutoff that holds the state with a safety margin.
    pub fn reach(&self, r: f64) -> i64 {
        match self {
            Self::Coherent { xi, alpha, .. } => (xi.abs() + 12.0 * alpha + 8.0).ceil() as i64,
            Self::GaussianLine { p, sigma, .. } => ((p * r).abs() + 10.0 * r / sigma + 8.0).ceil() as i64,
            Self::ModeList { modes } => modes.iter().map(|a| a.m.abs()).max().unwrap_or(0).max(1),
            Self::Symmetric { base } => base.reach(r),
        }
    }

    fn check(&self, what: &str, d: &mut Diagnostics) {
        match self {
            &Self::Coherent { xi, alpha, theta } => {
                d.require(alpha > 0.0 && alpha.is_finite(), format!("{what}: alpha must be > 0, got {alpha}"));
                d.require(xi.is_finite() && theta.is_finite(), format!("{what}: xi and theta must be finite"));
            }
            &Self::GaussianLine { p, sigma, theta, .. } => {
                d.require(sigma > 0.0 && sigma.is_finite(), format!("{what}: sigma must be > 0, got {sigma}"));
                d.require(p.is_finite() && theta.is_finite(), format!("{what}: p and theta must be finite"));
            }
            Self::ModeList { modes } => {
                d.require(!modes.is_empty(), format!("{what}: mode-list needs at least one mode"));
                let norm: f64 = modes.iter().map(|a| a.re * a.re + a.im * a.im).sum();
                d.require(norm > 0.0 && norm.is_finite(), format!("{what}: mode amplitudes must not all vanish"));
            }
            Self::Symmetric { base } => {
                if matches!(**base, Self::Symmetric { .. }) {
                    d.error(format!("{what}: symmetric of a symmetric state is not supported"));
                }
                base.check(what, d);
            }
        }
    }
}

/// Localization operator: maximal (L ≡ 1) unless a kernel is given.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    #[serde(default)]
    pub kernel: Option<DetectorKernel>,
    /// Inclusive mode window [lo, hi]; defaults to the whole mode space.
    #[serde(default)]
    pub window: Option<[i64; 2]>,
}

/// A time given directly or in units of T_q or T_rec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub label: String,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub t_over_tq: Option<f64>,
    #[serde(default)]
    pub t_over_trec: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsymbolParams {
    pub xi: f64,
    pub alpha: f64,
    #[serde(default)]
    pub theta: f64,
    pub phi: f64,
    /// θ-profiles at these times; without them a time series at θ is written.
    #[serde(default)]
    pub snapshots: Vec<Snapshot>,
    /// Add the no-overlap image approximation to time series.
    #[serde(default)]
    pub images: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockParams {
    pub state: StateSpec,
    pub phi: f64,
    #[serde(default)]
    pub detector: DetectorSpec,
    #[serde(default)]
    pub prominence: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    /// Decay constants of the ring-exponential kernel.
    pub a: Vec<f64>,
    pub omega_d_r: Values,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SagnacParams {
    pub state: StateSpec,
    pub omega_d: f64,
    /// Replace the state by its m → −m symmetric superposition first.
    #[serde(default = "yes")]
    pub symmetrize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiScanParams {
    pub pairing: Pairing,
    pub states: [StateSpec; 2],
    pub t1: Values,
    #[serde(default)]
    pub phi1: f64,
    #[serde(default)]
    pub phi2: f64,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub detector: DetectorSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oracle {
    #[default]
    Poisson,
    MasslessClosedForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeCheckParams {
    pub xi: f64,
    pub alpha: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub oracle: Oracle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KolmogorovParams {
    pub pairing: Pairing,
    pub states: [StateSpec; 2],
    #[serde(default)]
    pub phi1: f64,
    #[serde(default)]
    pub phi2: f64,
    #[serde(default)]
    pub t1_start: f64,
    /// Defaults to one circulation period of the first particle.
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "default_n_t1")]
    pub n_t1: usize,
    #[serde(default)]
    pub detector: DetectorSpec,
}

fn default_n_t1() -> usize {
    1024
}

/// Experiment-specific parameters after schema validation.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    Qsymbol(QsymbolParams),
    Clock(ClockParams),
    Noise(NoiseParams),
    Sagnac(SagnacParams),
    MiScan(MiScanParams),
    AmplitudeCheck(AmplitudeCheckParams),
    Kolmogorov(KolmogorovParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Warning,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.level {
            Level::Warning => "warning",
            Level::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn warn(&mut self, message: impl Into<String>) {
        self.0.push(Diagnostic { level: Level::Warning, message: message.into() });
    }

    pub fn error(&mut self, message: impl Into<String>) {
        self.0.push(Diagnostic { level: Level::Error, message: message.into() });
    }

    fn require(&mut self, ok: bool, message: impl Into<String>) {
        if !ok {
            self.error(message);
        }
    }

    pub fn has_errors(&self) -> bool {
        self.0.iter().any(|d| d.level == Level::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.0.iter().filter(|d| d.level == Level::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.0.iter().filter(|d| d.level == Level::Warning)
    }
}

/// A config that passed every check, with defaults filled in.
#[derive(Debug, Clone, Serialize)]
pub struct Plan {
    pub experiment: ExperimentKind,
    pub name: String,
    pub mu: f64,
    pub r: f64,
    pub m_max: i64,
    pub params: Params,
    pub grid: GridSpec,
    pub format: Format,
    pub stem: String,
    pub normalization: Normalization,
}

impl Plan {
    /// Uniform time grid from the grid block.
    pub fn times(&self) -> Vec<f64> {
        linspace(self.grid.t_min.unwrap_or(0.0), self.grid.t_max.unwrap_or(0.0), self.grid.n_t.unwrap_or(0))
    }

    pub fn phis(&self) -> Vec<f64> {
        match (&self.grid.phi, self.grid.n_phi) {
            (Some(v), _) => v.clone(),
            (None, Some(n)) => (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect(),
            (None, None) => vec![0.0],
        }
    }
}

/// Reads a config from disk; unreadable files are io failures, malformed JSON is a config error.
pub fn load(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn typed<T: serde::de::DeserializeOwned>(kind: ExperimentKind, v: &serde_json::Value, d: &mut Diagnostics) -> Option<T> {
    match serde_json::from_value(v.clone()) {
        Ok(p) => Some(p),
        Err(e) => {
            d.error(format!("params for {}: {e}", kind.id()));
            None
        }
    }
}

fn check_time_grid(g: &GridSpec, what: &str, d: &mut Diagnostics) {
    match (g.t_min, g.t_max, g.n_t) {
        (Some(a), Some(b), Some(n)) => {
            d.require(a.is_finite() && b.is_finite() && b > a, format!("{what}: need t_max > t_min"));
            d.require(n >= 2, format!("{what}: n_t must be >= 2"));
        }
        _ => d.error(format!("{what}: grid needs t_min, t_max and n_t")),
    }
}

fn check_frame(omega_d: f64, r: f64, d: &mut Diagnostics) {
    let rim = (omega_d * r).abs();
    d.require(rim < 1.0, format!("frame not timelike: |omega_d * r| = {rim} must be < 1"));
}

fn check_detector(det: &DetectorSpec, d: &mut Diagnostics) {
    if let Some(k) = &det.kernel {
        if let Err(e) = k.validate() {
            d.error(format!("detector kernel: {e}"));
        }
    }
    if let Some([lo, hi]) = det.window {
        d.require(lo <= hi, "detector window must satisfy lo <= hi");
    }
}

/// Schema and physics checks. Returns the diagnostics and, when there are no errors, the plan.
pub fn check(cfg: &ExperimentConfig, fallback_name: &str) -> (Diagnostics, Option<Plan>) {
    let mut d = Diagnostics::default();
    let ring = &cfg.ring;
    d.require(ring.mu >= 0.0 && ring.mu.is_finite(), format!("mu must be finite and >= 0, got {}", ring.mu));
    d.require(ring.r > 0.0 && ring.r.is_finite(), format!("r must be > 0, got {}", ring.r));
    let kind = cfg.experiment;
    let g = &cfg.grid;
    let mut reach = 1i64;
    let params = match kind {
        ExperimentKind::Qsymbol => typed::<QsymbolParams>(kind, &cfg.params, &mut d).map(|p| {
            reach = StateSpec::Coherent { xi: p.xi, alpha: p.alpha, theta: 0.0 }.reach(ring.r);
            d.require(p.alpha > 0.0, format!("alpha must be > 0, got {}", p.alpha));
            if p.alpha > 0.0 && p.alpha < 3.0 {
                d.warn(format!("alpha = {} is below recommended alpha >= 3", p.alpha));
            }
            if p.snapshots.is_empty() {
                check_time_grid(g, "qsymbol time series", &mut d);
            }
            for s in &p.snapshots {
                let given = [s.t, s.t_over_tq, s.t_over_trec].iter().filter(|x| x.is_some()).count();
                d.require(given == 1, format!("snapshot {}: give exactly one of t, t_over_tq, t_over_trec", s.label));
                if (s.t_over_tq.is_some() || s.t_over_trec.is_some()) && ring.mu == 0.0 {
                    d.error(format!("snapshot {}: T_q and T_rec are infinite for mu = 0", s.label));
                }
            }
            if let Some(n) = g.n_theta {
                d.require(n >= 8, "n_theta must be >= 8");
            }
            Params::Qsymbol(p)
        }),
        ExperimentKind::Clock => typed::<ClockParams>(kind, &cfg.params, &mut d).map(|p| {
            p.state.check("state", &mut d);
            check_detector(&p.detector, &mut d);
            check_time_grid(g, "clock", &mut d);
            reach = p.state.reach(ring.r);
            Params::Clock(p)
        }),
        ExperimentKind::Noise => typed::<NoiseParams>(kind, &cfg.params, &mut d).map(|p| {
            d.require(!p.a.is_empty(), "noise: list at least one decay constant a");
            for &a in &p.a {
                d.require(a > 0.0, format!("noise: decay constant must be > 0, got {a}"));
            }
            let grid = p.omega_d_r.resolve();
            d.require(!grid.is_empty(), "noise: empty omega_d_r grid");
            for x in grid {
                check_frame(x / ring.r, ring.r, &mut d);
                d.require(x >= 0.0, format!("noise: omega_d_r must be >= 0, got {x}"));
            }
            Params::Noise(p)
        }),
        ExperimentKind::Sagnac => typed::<SagnacParams>(kind, &cfg.params, &mut d).map(|p| {
            p.state.check("state", &mut d);
            check_frame(p.omega_d, ring.r, &mut d);
            check_time_grid(g, "sagnac", &mut d);
            reach = p.state.reach(ring.r);
            Params::Sagnac(p)
        }),
        ExperimentKind::MiScan => typed::<MiScanParams>(kind, &cfg.params, &mut d).map(|p| {
            for (i, s) in p.states.iter().enumerate() {
                s.check(&format!("states[{i}]"), &mut d);
            }
            check_detector(&p.detector, &mut d);
            check_time_grid(g, "mi-scan t2", &mut d);
            d.require(!p.t1.resolve().is_empty(), "mi-scan: empty t1 list");
            reach = p.states.iter().map(|s| s.reach(ring.r)).max().unwrap();
            Params::MiScan(p)
        }),
        ExperimentKind::AmplitudeCheck => typed::<AmplitudeCheckParams>(kind, &cfg.params, &mut d).map(|p| {
            d.require(p.alpha > 0.0, format!("alpha must be > 0, got {}", p.alpha));
            if p.oracle == Oracle::MasslessClosedForm && ring.mu != 0.0 {
                d.error("the massless closed form needs mu = 0");
            }
            check_time_grid(g, "amplitude-check", &mut d);
            reach = StateSpec::Coherent { xi: p.xi, alpha: p.alpha, theta: 0.0 }.reach(ring.r);
            Params::AmplitudeCheck(p)
        }),
        ExperimentKind::Kolmogorov => typed::<KolmogorovParams>(kind, &cfg.params, &mut d).map(|p| {
            for (i, s) in p.states.iter().enumerate() {
                s.check(&format!("states[{i}]"), &mut d);
            }
            check_detector(&p.detector, &mut d);
            check_time_grid(g, "kolmogorov t2", &mut d);
            d.require(p.n_t1 >= 2, "kolmogorov: n_t1 must be >= 2");
            if let Some(w) = p.window {
                d.require(w > 0.0, "kolmogorov: window must be > 0");
            }
            reach = p.states.iter().map(|s| s.reach(ring.r)).max().unwrap();
            Params::Kolmogorov(p)
        }),
    };
    let m_max = match ring.m_max {
        Some(m) => {
            d.require(m >= 1, format!("m_max must be >= 1, got {m}"));
            if m < reach && kind != ExperimentKind::Noise {
                d.warn(format!("m_max = {m} is below the suggested {reach} for these states"));
            }
            m
        }
        None => {
            if kind != ExperimentKind::Noise {
                d.warn(format!("m_max missing; defaulted to {reach}"));
            }
            reach
        }
    };
    let name = cfg.name.clone().unwrap_or_else(|| fallback_name.to_string());
    if name.is_empty() || name.contains(['/', '\\']) {
        d.error(format!("invalid experiment name {name:?}"));
    }
    let stem = cfg.output.path.clone().unwrap_or_else(|| name.clone());
    let plan = match params {
        Some(params) if !d.has_errors() => Some(Plan {
            experiment: kind,
            name,
            mu: ring.mu,
            r: ring.r,
            m_max,
            params,
            grid: cfg.grid.clone(),
            format: cfg.output.format,
            stem,
            normalization: cfg.normalization,
        }),
        _ => None,
    };
    (d, plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(text: &str) -> (Diagnostics, Option<Plan>) {
        check(&parse(text).unwrap(), "t")
    }

    #[test]
    fn frame_not_timelike() {
        let (d, plan) = diag(
            r#"{"experiment":"sagnac","ring":{"mu":0,"r":1,"m_max":100},
                "params":{"state":{"kind":"coherent","xi":50,"alpha":5},"omega_d":1.2},
                "grid":{"t_min":0,"t_max":10,"n_t":100}}"#,
        );
        assert!(plan.is_none());
        assert!(d.errors().any(|e| e.message.contains("frame not timelike")));
    }

    #[test]
    fn missing_m_max_defaults_with_warning() {
        let (d, plan) = diag(
            r#"{"experiment":"clock","params":{"state":{"kind":"coherent","xi":100,"alpha":5},"phi":0},
                "grid":{"t_min":0,"t_max":10,"n_t":100}}"#,
        );
        let plan = plan.unwrap();
        assert_eq!(plan.m_max, 168);
        assert!(d.warnings().any(|w| w.message.contains("m_max missing")));
    }

    #[test]
    fn small_alpha_warns() {
        let (d, plan) = diag(
            r#"{"experiment":"qsymbol","ring":{"mu":1,"m_max":80},
                "params":{"xi":40,"alpha":1,"phi":0},"grid":{"t_min":0,"t_max":1,"n_t":10}}"#,
        );
        assert!(plan.is_some());
        assert!(d.warnings().any(|w| w.message.contains("below recommended alpha >= 3")));
    }

    #[test]
    fn schema_errors_are_reported() {
        assert!(matches!(parse(r#"{"experiment":"nope"}"#), Err(Error::Config(_))));
        assert!(matches!(parse(r#"{"experiment":"noise","bogus":1}"#), Err(Error::Config(_))));
        let (d, plan) = diag(r#"{"experiment":"noise","params":{"a":[1.0]}}"#);
        assert!(plan.is_none() && d.has_errors());
        let (d, _) = diag(r#"{"experiment":"noise","params":{"a":[1.0],"omega_d_r":[0.5, 1.0]}}"#);
        assert!(d.errors().any(|e| e.message.contains("frame not timelike")));
    }

    #[test]
    fn values_resolve() {
        let v: Values = serde_json::from_str(r#"{"start":0,"stop":1,"n":5}"#).unwrap();
        assert_eq!(v.resolve(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let v: Values = serde_json::from_str("[1, 2]").unwrap();
        assert_eq!(v.resolve(), vec![1.0, 2.0]);
    }
}
