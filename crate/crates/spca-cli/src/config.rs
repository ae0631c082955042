//! Run configuration and scenario documents.
//!
//! Both are JSON with a `schema_version` field. Power-like fields ending in
//! `_db` are converted with `x = 10^(x_dB/10)` on load. Rate targets are in
//! nats per channel use.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spca::algorithms::{QosInnerMethod, SolverConfig};
use spca::baselines::SlbmConfig;
use spca::model::{db_to_linear, CellGeometry, GeneratorConfig, Link, RatePowerModel, RateTargets, Scenario};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gee,
    See,
    GeeQos,
    SeeQos,
    Slbm,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Gee => "gee",
            Algorithm::See => "see",
            Algorithm::GeeQos => "gee-qos",
            Algorithm::SeeQos => "see-qos",
            Algorithm::Slbm => "slbm",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(tag.into())).map_err(|_| CliError::Config(format!("unknown algorithm `{tag}`")))
    }

    pub fn has_qos(self) -> bool {
        matches!(self, Algorithm::GeeQos | Algorithm::SeeQos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    #[default]
    Bits,
}

impl Units {
    pub fn from_nats(self, x: f64) -> f64 {
        match self {
            Units::Nats => x,
            Units::Bits => x / std::f64::consts::LN_2,
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "nats" => Ok(Units::Nats),
            "bits" => Ok(Units::Bits),
            _ => Err(CliError::Config(format!("unknown units `{tag}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Ring { radius: f64, user_distance: f64 },
    Explicit { transmitters: Vec<[f64; 2]>, receivers: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatePower {
    Zero,
    Linear { q: f64 },
    PowerLaw { q: f64, exponent: f64 },
}

impl RatePower {
    fn model(&self) -> RatePowerModel<f64> {
        match *self {
            RatePower::Zero => RatePowerModel::Zero,
            RatePower::Linear { q } => RatePowerModel::Linear { q },
            RatePower::PowerLaw { q, exponent } => RatePowerModel::PowerLaw { q, exponent },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    None,
    Uniform(f64),
    PerLink(Vec<f64>),
    FractionOfSingleUser(f64),
    FractionOfUniformPower(f64),
}

/// Inline generator parameters; omitted fields take the seven-link defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub links: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub p0_db: f64,
    pub p_per_antenna_db: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub antenna_gain_db: f64,
    pub pathloss_exponent: f64,
    pub geometry: Geometry,
    pub rate_power: RatePower,
    /// `None` means no targets, or half the single-user rate for QoS algorithms.
    pub targets: Option<Targets>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        GeneratorSpec {
            links: g.links,
            tx_antennas: g.tx_antennas,
            rx_antennas: g.rx_antennas,
            p0_db: g.p0_db,
            p_per_antenna_db: g.p_per_antenna_db,
            rho: g.rho,
            sigma2: g.sigma2,
            antenna_gain_db: g.antenna_gain_db,
            pathloss_exponent: g.pathloss_exponent,
            geometry: Geometry::Ring { radius: 1.0, user_distance: 0.3 },
            rate_power: RatePower::Zero,
            targets: None,
        }
    }
}

impl GeneratorSpec {
    pub fn to_generator(&self, algorithm: Algorithm) -> GeneratorConfig {
        let targets = match &self.targets {
            None if algorithm.has_qos() => RateTargets::FractionOfSingleUser(0.5),
            None | Some(Targets::None) => RateTargets::None,
            Some(Targets::Uniform(r)) => RateTargets::Uniform(*r),
            Some(Targets::PerLink(v)) => RateTargets::PerLink(v.clone()),
            Some(Targets::FractionOfSingleUser(f)) => RateTargets::FractionOfSingleUser(*f),
            Some(Targets::FractionOfUniformPower(f)) => RateTargets::FractionOfUniformPower(*f),
        };
        GeneratorConfig {
            links: self.links,
            tx_antennas: self.tx_antennas,
            rx_antennas: self.rx_antennas,
            p0_db: self.p0_db,
            p_per_antenna_db: self.p_per_antenna_db,
            rho: self.rho,
            sigma2: self.sigma2,
            antenna_gain_db: self.antenna_gain_db,
            pathloss_exponent: self.pathloss_exponent,
            geometry: match &self.geometry {
                Geometry::Ring { radius, user_distance } => CellGeometry::Ring { radius: *radius, user_distance: *user_distance },
                Geometry::Explicit { transmitters, receivers } => {
                    CellGeometry::Explicit { transmitters: transmitters.clone(), receivers: receivers.clone() }
                }
            },
            g: self.rate_power.model(),
            targets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    Generator(GeneratorSpec),
    /// Path to a scenario document, relative to the config file.
    File(PathBuf),
}

/// Overrides of the solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub eps_outer: Option<f64>,
    pub eps_dinkelbach: Option<f64>,
    pub eps_dual: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub dual_step0: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_dinkelbach: Option<usize>,
    pub max_dual: Option<usize>,
    pub trace_tol: Option<f64>,
    pub qos_method: Option<QosMethod>,
    pub warm_start_duals: Option<bool>,
    pub pg_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QosMethod {
    AugmentedLagrangian,
    DualDecomposition,
}

impl SolverSettings {
    pub fn solver(&self) -> SolverConfig<f64> {
        let mut c = SolverConfig::default();
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(eps_outer, eps_dinkelbach, eps_dual, alpha, beta, dual_step0, max_outer, max_dinkelbach, max_dual, trace_tol, warm_start_duals, pg_tol);
        c.c = self.c;
        if let Some(m) = self.qos_method {
            c.qos_method = match m {
                QosMethod::AugmentedLagrangian => QosInnerMethod::AugmentedLagrangian,
                QosMethod::DualDecomposition => QosInnerMethod::DualDecomposition,
            };
        }
        c
    }

    pub fn slbm(&self) -> SlbmConfig<f64> {
        let mut c = SlbmConfig::default();
        if let Some(v) = self.eps_outer {
            c.eps_outer = v;
        }
        if let Some(v) = self.eps_dinkelbach {
            c.eps_dinkelbach = v;
        }
        if let Some(v) = self.max_outer {
            c.max_outer = v;
        }
        if let Some(v) = self.max_dinkelbach {
            c.max_dinkelbach = v;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub algorithm: Option<Algorithm>,
    pub scenario: ScenarioSource,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub units: Units,
    /// Record wall times. Off by default so that outputs are reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", cfg.schema_version)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<Algorithm> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        let alg = self.algorithm.ok_or_else(|| CliError::Config("no algorithm given".into()))?;
        self.solver.solver().validate()?;
        self.solver.slbm().validate()?;
        Ok(alg)
    }

    /// Scenario for one seed; a scenario file ignores the seed.
    pub fn scenario(&self, algorithm: Algorithm, seed: u64) -> Result<Scenario<f64>> {
        match &self.scenario {
            ScenarioSource::Generator(g) => Ok(spca::model::generate_scenario(&g.to_generator(algorithm), seed)?),
            ScenarioSource::File(p) => {
                let path = self.base_dir.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.clone(), e))?;
                ScenarioDoc::from_json(&text)?.build()
            }
        }
    }
}

/// Serialized scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema_version: u32,
    pub links: Vec<LinkDoc>,
    /// `channels[k][j]` maps transmitter `j` to receiver `k`.
    pub channels: Vec<Vec<MatrixDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub sigma2: f64,
    pub p_max_db: f64,
    pub p0_db: f64,
    pub rho: f64,
    #[serde(default = "zero_rate_power")]
    pub rate_power: RatePower,
    #[serde(default)]
    pub r_min: f64,
}

fn zero_rate_power() -> RatePower {
    RatePower::Zero
}

/// Row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    fn to_matrix(&self) -> Result<spca::Matrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        let rect = |m: &Vec<Vec<f64>>| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if !rect(&self.re) || !rect(&self.im) {
            return Err(CliError::Config("channel matrix parts must be rectangular and of equal shape".into()));
        }
        Ok(spca::Matrix::from_fn(rows, cols, |r, c| nalgebra::Complex::new(self.re[r][c], self.im[r][c])))
    }

    fn from_matrix(m: &spca::Matrix) -> Self {
        let part = |f: fn(&nalgebra::Complex<f64>) -> f64| (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect();
        MatrixDoc { re: part(|z| z.re), im: part(|z| z.im) }
    }
}

fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl ScenarioDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!("unsupported scenario schema_version {}", doc.schema_version)));
        }
        Ok(doc)
    }

    pub fn build(&self) -> Result<Scenario<f64>> {
        let links = self
            .links
            .iter()
            .map(|l| Link {
                tx_antennas: l.tx_antennas,
                rx_antennas: l.rx_antennas,
                sigma2: l.sigma2,
                p_max: db_to_linear(l.p_max_db),
                p0: db_to_linear(l.p0_db),
                rho: l.rho,
                g: l.rate_power.model(),
                r_min: l.r_min,
            })
            .collect();
        let h = self.channels.iter().map(|row| row.iter().map(MatrixDoc::to_matrix).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        Ok(Scenario::new(links, h)?)
    }

    pub fn from_scenario(sc: &Scenario<f64>) -> Self {
        let links = sc
            .links()
            .iter()
            .map(|l| LinkDoc {
                tx_antennas: l.tx_antennas,
                rx_antennas: l.rx_antennas,
                sigma2: l.sigma2,
                p_max_db: linear_to_db(l.p_max),
                p0_db: linear_to_db(l.p0),
                rho: l.rho,
                rate_power: match l.g {
                    RatePowerModel::Zero => RatePower::Zero,
                    RatePowerModel::Linear { q } => RatePower::Linear { q },
                    RatePowerModel::PowerLaw { q, exponent } => RatePower::PowerLaw { q, exponent },
                },
                r_min: l.r_min,
            })
            .collect();
        let k = sc.num_links();
        let channels = (0..k).map(|r| (0..k).map(|t| MatrixDoc::from_matrix(sc.channel(r, t))).collect()).collect();
        ScenarioDoc { schema_version: SCHEMA_VERSION, links, channels }
    }
}
