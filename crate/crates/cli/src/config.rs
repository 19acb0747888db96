//! The JSON run configuration and its translation into core objects.

use std::fmt;

use ris_core::solver::{SweepSchedule, TimeGrid};
use ris_core::{ContactPotential, Energy, EnergyKind, Gauge, GaugeKind, Loading, Norm, SearchBox, Viscosity, ViscousPotential};
use serde::Deserialize;

/// A configuration problem, located by the dotted path of the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Checked<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceSpec,
    pub gauge: GaugeSpec,
    pub viscous: ViscousSpec,
    pub energy: EnergySpec,
    pub initial: Vec<f64>,
    pub grid: GridSpec,
    #[serde(default)]
    pub solve: SolveSpec,
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(rename = "box")]
    pub search_box: Option<BoxSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    pub contact: Option<ContactGrid>,
    pub jump: Option<JumpSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dim: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeSpec {
    W1 { weights: Vec<f64> },
    Wsup { weights: Vec<f64> },
    Euclid { dim: usize },
    Asym1 { plus: Vec<f64>, minus: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    L1,
    Euclid,
    Sup,
    Lp(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ViscousSpec {
    NormPower { p: f64, norm: NormSpec },
    GaugePower,
    Additive { exponents: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadingSpec {
    Ramp { slope: Vec<f64> },
    Constant { value: Vec<f64> },
    Piecewise { breakpoints: Vec<(f64, Vec<f64>)> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergySpec {
    Quadratic { matrix: Vec<Vec<f64>>, loading: LoadingSpec },
    DoubleWell { loading: LoadingSpec },
    Polynomial { coeffs: Vec<f64>, loading: LoadingSpec },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Viscous,
    Ip0,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    #[serde(default)]
    pub scheme: Scheme,
    /// viscosity for the viscous scheme
    pub eps: Option<f64>,
}

impl Default for SolveSpec {
    fn default() -> Self {
        SolveSpec { scheme: Scheme::Viscous, eps: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauRule {
    /// τ_k = ε_k^exponent
    Power { exponent: f64 },
    /// explicit τ_k per level
    Explicit { tau: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub eps0: f64,
    pub levels: usize,
    pub tau_rule: TauRule,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// membership in K* and contact classification
    pub membership: f64,
    /// bound reported against per-step Fenchel residuals
    pub fenchel: f64,
    /// jump conditions, transition checks and parametrized residuals
    pub jump: f64,
    /// energy balances and solution classification
    pub balance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { membership: 1e-9, fenchel: 1e-8, jump: 1e-3, balance: 1e-2 }
    }
}

impl Tolerances {
    pub fn set(&mut self, key: &str, value: &str) -> Checked<()> {
        let path = format!("tolerances.{key}");
        let v: f64 = value.parse().map_err(|_| ConfigError::new(&path, format!("`{value}` is not a number")))?;
        match key {
            "membership" => self.membership = v,
            "fenchel" => self.fenchel = v,
            "jump" => self.jump = v,
            "balance" => self.balance = v,
            _ => return Err(ConfigError::new(path, "unknown tolerance (expected membership, fenchel, jump or balance)")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Checked<()> {
        for (name, v) in [("membership", self.membership), ("fenchel", self.fenchel), ("jump", self.jump), ("balance", self.balance)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(format!("tolerances.{name}"), format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: String,
    pub format: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: "out".into(), format: "csv".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// path segments for jump costs inside verifiers
    pub nodes: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec { nodes: 256 }
    }
}

/// The Cartesian product of the listed v and w vectors.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactGrid {
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub t: f64,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    #[serde(rename = "N")]
    pub nodes: usize,
}

/// Parse a config document, reporting the failing field path on error.
pub fn parse(text: &str) -> Checked<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { "<root>".to_string() } else { path }, e.into_inner())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn check_dim(path: &str, len: usize, dim: usize) -> Checked<()> {
    if len != dim {
        return Err(ConfigError::new(path, format!("has dimension {len}, expected {dim}")));
    }
    Ok(())
}

impl RunConfig {
    fn validate(&self) -> Checked<()> {
        let d = self.space.dim;
        if d == 0 {
            return Err(ConfigError::new("space.dim", "must be at least 1"));
        }
        self.gauge()?;
        self.viscous()?;
        self.energy()?;
        check_dim("initial", self.initial.len(), d)?;
        self.grid()?;
        self.tolerances.validate()?;
        if let Some(eps) = self.solve.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(ConfigError::new("solve.eps", format!("must be positive, got {eps}")));
            }
        }
        if self.schedule.is_some() {
            self.schedule()?;
        }
        if self.search_box.is_some() {
            self.search_box()?;
        }
        if self.output.format != "csv" {
            return Err(ConfigError::new("output.format", format!("unsupported format `{}` (only csv)", self.output.format)));
        }
        if self.analysis.nodes < 16 {
            return Err(ConfigError::new("analysis.nodes", "must be at least 16"));
        }
        if let Some(c) = &self.contact {
            for (k, v) in c.v.iter().enumerate() {
                check_dim(&format!("contact.v[{k}]"), v.len(), d)?;
            }
            for (k, w) in c.w.iter().enumerate() {
                check_dim(&format!("contact.w[{k}]"), w.len(), d)?;
            }
        }
        if let Some(j) = &self.jump {
            check_dim("jump.u0", j.u0.len(), d)?;
            check_dim("jump.u1", j.u1.len(), d)?;
            if j.nodes < 16 {
                return Err(ConfigError::new("jump.N", "must be at least 16"));
            }
        }
        Ok(())
    }

    pub fn gauge(&self) -> Checked<Gauge> {
        let kind = match &self.gauge {
            GaugeSpec::W1 { weights } => GaugeKind::Weighted1 { weights: weights.clone() },
            GaugeSpec::Wsup { weights } => GaugeKind::WeightedSup { weights: weights.clone() },
            GaugeSpec::Euclid { dim } => GaugeKind::Euclidean { dim: *dim },
            GaugeSpec::Asym1 { plus, minus } => GaugeKind::Asymmetric1 { plus: plus.clone(), minus: minus.clone() },
        };
        let g = Gauge::new(kind).map_err(|e| ConfigError::new("gauge", e))?;
        check_dim("gauge", g.dim(), self.space.dim)?;
        Ok(g)
    }

    pub fn viscous(&self) -> Checked<ViscousPotential> {
        let viscosity = match &self.viscous {
            ViscousSpec::NormPower { p, norm } => Viscosity::NormPower {
                p: *p,
                norm: match norm {
                    NormSpec::L1 => Norm::L1,
                    NormSpec::Euclid => Norm::Euclid,
                    NormSpec::Sup => Norm::Sup,
                    NormSpec::Lp(q) => Norm::Lp(*q),
                },
            },
            ViscousSpec::GaugePower => Viscosity::GaugePower,
            ViscousSpec::Additive { exponents } => Viscosity::Additive { exponents: exponents.clone() },
        };
        ViscousPotential::new(self.gauge()?, viscosity).map_err(|e| ConfigError::new("viscous", e))
    }

    pub fn contact_potential(&self) -> Checked<ContactPotential> {
        Ok(ContactPotential::new(self.viscous()?))
    }

    fn loading(&self, spec: &LoadingSpec) -> Checked<Loading> {
        let path = "energy.loading";
        let l = match spec {
            LoadingSpec::Ramp { slope } => Loading::ramp(slope.clone(), self.grid.horizon),
            LoadingSpec::Constant { value } => Loading::constant(value.clone()),
            LoadingSpec::Piecewise { breakpoints } => Loading::new(breakpoints.clone()).map_err(|e| ConfigError::new(path, e))?,
        };
        check_dim(path, l.dim(), self.space.dim)?;
        Ok(l)
    }

    pub fn energy(&self) -> Checked<Energy> {
        let (kind, loading) = match &self.energy {
            EnergySpec::Quadratic { matrix, loading } => (EnergyKind::QuadraticTracking { matrix: matrix.clone() }, loading),
            EnergySpec::DoubleWell { loading } => (EnergyKind::DoubleWell1d, loading),
            EnergySpec::Polynomial { coeffs, loading } => (EnergyKind::Polynomial { coeffs: coeffs.clone() }, loading),
        };
        let loading = self.loading(loading)?;
        let e = Energy::new(kind, loading, self.grid.horizon).map_err(|e| ConfigError::new("energy", e))?;
        Ok(e)
    }

    pub fn grid(&self) -> Checked<TimeGrid> {
        TimeGrid::new(self.grid.horizon, self.grid.tau).map_err(|e| ConfigError::new("grid", e))
    }

    pub fn schedule(&self) -> Checked<SweepSchedule> {
        let s = self.schedule.as_ref().ok_or_else(|| ConfigError::new("schedule", "required by `sweep`"))?;
        if s.levels == 0 {
            return Err(ConfigError::new("schedule.levels", "must be at least 1"));
        }
        if !(s.eps0 > 0.0 && s.eps0.is_finite()) {
            return Err(ConfigError::new("schedule.eps0", format!("must be positive, got {}", s.eps0)));
        }
        let eps: Vec<f64> = (0..s.levels).map(|k| s.eps0 * 0.5f64.powi(k as i32)).collect();
        let entries: Vec<(f64, f64)> = match &s.tau_rule {
            TauRule::Power { exponent } => eps.iter().map(|e| (*e, e.powf(*exponent))).collect(),
            TauRule::Explicit { tau } => {
                check_dim("schedule.tau_rule.tau", tau.len(), s.levels)?;
                eps.iter().copied().zip(tau.iter().copied()).collect()
            }
        };
        SweepSchedule::new(entries).map_err(|e| ConfigError::new("schedule.tau_rule", e))
    }

    pub fn search_box(&self) -> Checked<SearchBox> {
        let b = self.search_box.as_ref().ok_or_else(|| ConfigError::new("box", "required for stability scans"))?;
        check_dim("box.lower", b.lower.len(), self.space.dim)?;
        check_dim("box.upper", b.upper.len(), self.space.dim)?;
        SearchBox::new(b.lower.clone(), b.upper.clone(), b.cells).map_err(|e| ConfigError::new("box", e))
    }

    pub fn eps(&self) -> Checked<f64> {
        self.solve.eps.ok_or_else(|| ConfigError::new("solve.eps", "required by the viscous scheme"))
    }
}
