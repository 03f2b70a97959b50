//! Scenario files: a TOML document with nested tables for the kernel, grid,
//! nonlinearity and initial data, plus a flat `[params]` table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rslab_core::longtime::DissipativityCertificate;
use rslab_core::{KernelSpec, Nonlinearity, TorusGrid};

/// Upper bounds accepted by `validate`.
pub const MAX_HORIZON: f64 = 1e4;
pub const MAX_INTERVALS: usize = 200_000;
pub const MAX_MEMBERS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    RelaxationTable,
    Wellposedness,
    SemigroupLaw,
    Absorption,
    KernelStability,
    OmegaLimit,
    Diagnostics,
}

impl Experiment {
    pub fn tag(self) -> &'static str {
        match self {
            Self::RelaxationTable => "relaxation-table",
            Self::Wellposedness => "wellposedness",
            Self::SemigroupLaw => "semigroup-law",
            Self::Absorption => "absorption",
            Self::KernelStability => "kernel-stability",
            Self::OmegaLimit => "omega-limit",
            Self::Diagnostics => "diagnostics",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    Zero,
    Fractional { order: f64, weight: f64 },
    ExpSum { weights: Vec<f64>, rates: Vec<f64> },
}

impl KernelConfig {
    pub fn build(&self) -> rslab_core::Result<KernelSpec> {
        match self {
            Self::Zero => Ok(KernelSpec::Zero),
            Self::Fractional { order, weight } => KernelSpec::fractional(*order, *weight),
            Self::ExpSum { weights, rates } => KernelSpec::exp_sum(weights.clone(), rates.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityKind {
    Zero,
    Linear,
    Sine,
    TanhDamped,
    Cubic,
    NegCubic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    #[serde(default = "default_p")]
    pub p: u32,
    pub sigma: f64,
    /// Declared constants; when both are absent they are fitted from samples.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

fn default_p() -> u32 {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    #[serde(rename = "type")]
    pub kind: NonlinearityKind,
    /// Coefficient of `linear`, `sine` and `tanh-damped`.
    pub a: Option<f64>,
    /// Damping of `tanh-damped`.
    pub b: Option<f64>,
    /// Radius of the radial truncation, if any.
    pub truncate: Option<f64>,
    pub certificate: Option<CertificateConfig>,
}

impl NonlinearityConfig {
    fn coefficient(&self, name: &str, v: Option<f64>) -> Result<f64, String> {
        v.ok_or_else(|| format!("nonlinearity.{name} is required for type {:?}", self.kind))
    }

    pub fn build(&self, grid: &TorusGrid) -> Result<Nonlinearity, String> {
        let base = match self.kind {
            NonlinearityKind::Zero => Nonlinearity::zero(),
            NonlinearityKind::Linear => Nonlinearity::linear(self.coefficient("a", self.a)?),
            NonlinearityKind::Sine => Nonlinearity::sine(self.coefficient("a", self.a)?),
            NonlinearityKind::TanhDamped => {
                Nonlinearity::tanh_damped(self.coefficient("a", self.a)?, self.coefficient("b", self.b)?)
            }
            NonlinearityKind::Cubic => Nonlinearity::cubic(),
            NonlinearityKind::NegCubic => Nonlinearity::neg_cubic(),
        };
        match self.truncate {
            Some(r) => base.truncated_on(r, grid).map_err(|e| e.to_string()),
            None => Ok(base),
        }
    }

    pub fn declared_certificate(&self) -> Result<Option<DissipativityCertificate>, String> {
        match &self.certificate {
            Some(CertificateConfig {
                p,
                sigma,
                alpha: Some(a),
                beta: Some(b),
            }) => DissipativityCertificate::declared(*p, *sigma, *a, *b)
                .map(Some)
                .map_err(|e| e.to_string()),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Random,
    Constant,
    Gaussian,
}

/// Initial data. Member `i` of `m` has mean
/// `mean + spread·(2i/(m−1) − 1)`; random members add a smooth Gaussian
/// field scaled by `amplitude`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "default_shape")]
    pub shape: Shape,
    #[serde(default = "one")]
    pub members: usize,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub spread: f64,
    #[serde(default = "one_f")]
    pub amplitude: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_decay")]
    pub decay: f64,
    /// Standard deviation of the `gaussian` shape.
    #[serde(default = "one_f")]
    pub width: f64,
}

fn default_shape() -> Shape {
    Shape::Random
}
fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_modes() -> usize {
    4
}
fn default_decay() -> f64 {
    1.5
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            shape: Shape::Random,
            members: 1,
            mean: 0.0,
            spread: 0.0,
            amplitude: 1.0,
            modes: 4,
            decay: 1.5,
            width: 1.0,
        }
    }
}

impl InitialConfig {
    pub fn member_mean(&self, i: usize) -> f64 {
        if self.members <= 1 {
            self.mean
        } else {
            self.mean + self.spread * (2.0 * i as f64 / (self.members - 1) as f64 - 1.0)
        }
    }
}

/// Numeric parameters; which ones apply depends on the experiment.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    /// Bielecki weight.
    pub gamma: Option<f64>,
    pub tolerance: Option<f64>,
    /// Sample times of the relaxation table.
    pub times: Option<Vec<f64>>,
    pub mus: Option<Vec<f64>>,
    /// `t` and `s` values of the semigroup-law check.
    pub split_times: Option<Vec<f64>>,
    /// Truncation of the history metric series.
    pub n_max: Option<usize>,
    pub delta: Option<f64>,
    pub sample_time: Option<f64>,
    /// Weight exponent of the history norm measured on omega-limit segments.
    pub alpha: Option<f64>,
    pub mu_max: Option<f64>,
    pub t_window: Option<[f64; 2]>,
    pub theta_window: Option<[f64; 2]>,
    pub radius_window: Option<[f64; 2]>,
    pub fit_points: Option<usize>,
    pub check_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFormat {
    #[default]
    None,
    /// Columns `x[, y], value`.
    Csv,
    /// Row-major little-endian `f64` values.
    Binary,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Format of field snapshots (initial members, omega-limit representatives).
    #[serde(default)]
    pub fields: FieldFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    pub kernel: KernelConfig,
    /// Second kernel of a kernel-stability comparison.
    pub comparison_kernel: Option<KernelConfig>,
    pub grid: GridConfig,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Invalid(Vec<String>),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(m) | Self::Parse(m) => f.write_str(m),
            Self::Invalid(problems) => {
                writeln!(f, "invalid scenario:")?;
                for p in problems {
                    writeln!(f, "  - {p}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn parse(text: &str, origin: &str) -> Result<Scenario, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(format!("{origin}: {e}")))
}

pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let scenario = parse(&text, &path.display().to_string())?;
    scenario.validate().map_err(ConfigError::Invalid)?;
    Ok(scenario)
}

fn positive(problems: &mut Vec<String>, field: &str, v: Option<f64>) {
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            problems.push(format!("{field} must be positive and finite, got {x}"));
        }
    }
}

fn window(problems: &mut Vec<String>, field: &str, w: Option<[f64; 2]>) {
    if let Some([a, b]) = w {
        if !(a > 0.0 && b > a && b.is_finite()) {
            problems.push(format!("{field} must satisfy 0 < lo < hi, got [{a}, {b}]"));
        }
    }
}

impl Scenario {
    pub fn horizon(&self) -> f64 {
        self.params.horizon.unwrap_or(1.0)
    }

    pub fn step(&self) -> f64 {
        self.params.step.unwrap_or(0.01)
    }

    pub fn grid(&self) -> Result<TorusGrid, String> {
        TorusGrid::new(self.grid.dim, self.grid.n, self.grid.length).map_err(|e| format!("grid: {e}"))
    }

    /// Radii of the spatial-decay fit: the configured window, else
    /// `[4w, 10w]` for the bump width `w`, capped at `0.45 L`.
    pub fn decay_radius_window(&self) -> [f64; 2] {
        self.params.radius_window.unwrap_or_else(|| {
            let w = self.initial.width;
            [4.0 * w, (10.0 * w).min(0.45 * self.grid.length)]
        })
    }

    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let p = &self.params;
        if self.name.trim().is_empty() {
            problems.push("name must not be empty".into());
        }
        if let Err(e) = self.kernel.build() {
            problems.push(format!("kernel: {e}"));
        }
        if let Some(k) = &self.comparison_kernel {
            if let Err(e) = k.build() {
                problems.push(format!("comparison_kernel: {e}"));
            }
        }
        match self.grid() {
            Ok(g) => {
                if let Err(e) = self.nonlinearity.build(&g) {
                    problems.push(format!("nonlinearity: {e}"));
                }
            }
            Err(e) => problems.push(e),
        }
        if let Err(e) = self.nonlinearity.declared_certificate() {
            problems.push(format!("nonlinearity.certificate: {e}"));
        }
        if let Some(c) = &self.nonlinearity.certificate {
            if c.alpha.is_some() != c.beta.is_some() {
                problems.push("nonlinearity.certificate: give both alpha and beta, or neither".into());
            }
            if ![2, 4, 6].contains(&c.p) {
                problems.push(format!("nonlinearity.certificate.p must be 2, 4 or 6, got {}", c.p));
            }
            if !(c.sigma.is_finite() && c.p as f64 + c.sigma > 2.0) {
                problems.push(format!("nonlinearity.certificate.sigma must give p + σ > 2, got {}", c.sigma));
            }
        }
        positive(&mut problems, "nonlinearity.truncate", self.nonlinearity.truncate);

        let init = &self.initial;
        if init.members > MAX_MEMBERS {
            problems.push(format!("initial.members must be at most {MAX_MEMBERS}, got {}", init.members));
        }
        positive(&mut problems, "initial.width", Some(init.width));
        positive(&mut problems, "initial.decay", Some(init.decay));
        if !(init.amplitude >= 0.0 && init.amplitude.is_finite()) {
            problems.push(format!("initial.amplitude must be non-negative, got {}", init.amplitude));
        }
        if !(init.mean.is_finite() && init.spread.is_finite()) {
            problems.push("initial.mean and initial.spread must be finite".into());
        }

        for (field, v) in [
            ("params.horizon", p.horizon),
            ("params.step", p.step),
            ("params.gamma", p.gamma),
            ("params.tolerance", p.tolerance),
            ("params.delta", p.delta),
            ("params.sample_time", p.sample_time),
            ("params.alpha", p.alpha),
            ("params.mu_max", p.mu_max),
        ] {
            positive(&mut problems, field, v);
        }
        window(&mut problems, "params.t_window", p.t_window);
        window(&mut problems, "params.theta_window", p.theta_window);
        window(&mut problems, "params.radius_window", p.radius_window);
        for (field, v) in [("params.fit_points", p.fit_points), ("params.check_points", p.check_points)] {
            if let Some(n) = v {
                if !(2..=400).contains(&n) {
                    problems.push(format!("{field} must lie in [2, 400], got {n}"));
                }
            }
        }
        for (field, v) in [("params.times", &p.times), ("params.split_times", &p.split_times)] {
            if let Some(xs) = v {
                if xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    problems.push(format!("{field} must hold positive finite values"));
                }
            }
        }
        if let Some(mus) = &p.mus {
            if mus.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                problems.push("params.mus must hold non-negative finite values".into());
            }
        }

        let (t, h) = (self.horizon(), self.step());
        if t > MAX_HORIZON {
            problems.push(format!("params.horizon must be at most {MAX_HORIZON}, got {t}"));
        }
        if t > 0.0 && h > 0.0 {
            let n = (t / h).round();
            if (n * h - t).abs() > 1e-9 * t || n < 1.0 {
                problems.push(format!("params.step {h} must divide params.horizon {t}"));
            } else if n as usize > MAX_INTERVALS {
                problems.push(format!("horizon/step gives {n} intervals, more than {MAX_INTERVALS}"));
            }
        }

        match self.experiment {
            Experiment::Wellposedness | Experiment::KernelStability => {
                if let Ok(g) = self.grid() {
                    if let Ok(f) = self.nonlinearity.build(&g) {
                        if let (Some(l), Some(gamma), Experiment::Wellposedness) =
                            (f.lipschitz(), self.params.gamma, self.experiment)
                        {
                            if gamma <= l {
                                problems.push(format!("params.gamma = {gamma} must exceed L_f = {l}"));
                            }
                        }
                        if f.lipschitz().is_none() {
                            problems.push(format!(
                                "{} needs a globally Lipschitz nonlinearity; set nonlinearity.truncate",
                                self.experiment.tag()
                            ));
                        }
                    }
                }
                if self.experiment == Experiment::KernelStability && self.comparison_kernel.is_none() {
                    problems.push("kernel-stability needs a [comparison_kernel] table".into());
                }
            }
            Experiment::Absorption => match &self.nonlinearity.certificate {
                None => problems.push("absorption needs [nonlinearity.certificate]".into()),
                Some(c) if c.sigma <= 2.0 => problems.push(format!(
                    "absorption needs certificate sigma > 2, got {}",
                    c.sigma
                )),
                _ => {}
            },
            Experiment::OmegaLimit => {
                if p.delta.is_none() && self.nonlinearity.certificate.is_none() {
                    problems.push("omega-limit needs params.delta or a certificate to derive it".into());
                }
            }
            Experiment::SemigroupLaw => {
                if let Some(ts) = &p.split_times {
                    if ts.iter().any(|x| ((x / h).round() * h - x).abs() > 1e-9 * x.max(1.0)) {
                        problems.push("params.split_times must be multiples of params.step".into());
                    }
                }
            }
            Experiment::Diagnostics => {
                let [lo, hi] = self.decay_radius_window();
                if !(lo > 0.0 && hi > lo && hi < 0.5 * self.grid.length) {
                    problems.push(format!(
                        "decay radii [{lo}, {hi}] must satisfy 0 < lo < hi < length/2; adjust params.radius_window or initial.width"
                    ));
                }
            }
            Experiment::RelaxationTable => {}
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "m"
        experiment = "wellposedness"
        [kernel]
        type = "exp-sum"
        weights = [1.0]
        rates = [2.0]
        [grid]
        dim = 1
        n = 16
        length = 1.0
        [nonlinearity]
        type = "tanh-damped"
        a = 1.0
        b = 0.5
    "#;

    #[test]
    fn defaults_fill_optional_tables() {
        let sc = parse(MINIMAL, "inline").unwrap();
        assert_eq!(sc.seed, 0);
        assert_eq!(sc.initial.members, 1);
        assert_eq!((sc.horizon(), sc.step()), (1.0, 0.01));
        sc.validate().unwrap();
    }

    #[test]
    fn validation_reports_every_problem() {
        let text = MINIMAL.replace("b = 0.5", "").replace("n = 16", "n = 10") + "[params]\nstep = 0.3\n";
        let problems = parse(&text, "inline").unwrap().validate().unwrap_err();
        assert_eq!(problems.len(), 2, "{problems:?}");
        let text = MINIMAL.replace("b = 0.5", "");
        let problems = parse(&text, "inline").unwrap().validate().unwrap_err();
        assert!(problems[0].contains("nonlinearity.b"), "{problems:?}");
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let text = MINIMAL.replace("dim = 1", "dim = 1\nspacing = 2");
        assert!(matches!(parse(&text, "inline"), Err(ConfigError::Parse(m)) if m.contains("spacing")));
    }

    #[test]
    fn member_means_span_the_spread() {
        let init = InitialConfig {
            members: 3,
            mean: 1.0,
            spread: 2.0,
            ..Default::default()
        };
        assert_eq!((0..3).map(|i| init.member_mean(i)).collect::<Vec<_>>(), vec![-1.0, 1.0, 3.0]);
    }
}
