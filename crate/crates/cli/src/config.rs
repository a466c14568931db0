//! Run configuration: TOML with typed sections `domain`, `params`, `data`,
//! `manufactured`, `run` and `tolerances`.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use oseen_core::fields::{ScalarField, VectorField};
use oseen_core::galerkin::{OseenParameters, DEFAULT_SIGMA_PER_MU};
use oseen_core::geometry::Domain;
use serde::Deserialize;

/// Largest basis size the member hierarchy supports.
pub const MAX_N: usize = 255;
pub const DEFAULT_N: usize = 16;
pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    PowerCap {
        q: f64,
    },
    PowerLogCap,
}

fn one() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        Ok(match self {
            DomainSpec::Disk { center, radius } => Domain::disk(*center, *radius)?,
            DomainSpec::Ellipse { center, a, b } => Domain::ellipse(*center, *a, *b)?,
            DomainSpec::PowerCap { q } => Domain::power_cap(*q)?,
            DomainSpec::PowerLogCap => Domain::power_log_cap()?,
        })
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
enum RawFriction {
    Value(f64),
    Keyword(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Friction {
    /// Smallest decade-grid value with a coercive system matrix.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(default = "one")]
    mu: f64,
    #[serde(default = "one")]
    nu: f64,
    #[serde(default = "one")]
    gamma: f64,
    friction: Option<RawFriction>,
}

impl Default for RawParams {
    fn default() -> Self {
        Self { mu: 1.0, nu: 1.0, gamma: 1.0, friction: None }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    force: Option<[String; 2]>,
    source: Option<String>,
    boundary: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManufactured {
    #[serde(default)]
    standard: bool,
    velocity: Option<[String; 2]>,
    density: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RawN {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n: Option<RawN>,
    sigma: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on strong-form residuals; unenforced when absent.
    #[serde(default)]
    pub residual: Option<f64>,
    #[serde(default = "default_energy_ratio")]
    pub energy_ratio: f64,
    /// Factor in `defect <= factor * (|u.n| + error)` for the Helmholtz roundtrip.
    #[serde(default = "default_helmholtz_factor")]
    pub helmholtz_factor: f64,
    /// Relative gap allowed between the Galerkin density and the transport solution.
    #[serde(default = "default_transport_gap")]
    pub transport_gap: f64,
}

fn default_energy_ratio() -> f64 {
    1.5
}

fn default_helmholtz_factor() -> f64 {
    10.0
}

fn default_transport_gap() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: None,
            energy_ratio: default_energy_ratio(),
            helmholtz_factor: default_helmholtz_factor(),
            transport_gap: default_transport_gap(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: DomainSpec,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    data: RawData,
    manufactured: Option<RawManufactured>,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    tolerances: Tolerances,
}

#[derive(Clone, Debug)]
pub enum Manufacture {
    Standard,
    Fields { velocity: VectorField, density: ScalarField, text: [String; 3] },
}

/// Problem data as expressions in `x1, x2`.
#[derive(Clone, Debug)]
pub struct DataSpec {
    pub force: VectorField,
    pub source: ScalarField,
    pub boundary: ScalarField,
    pub text: [String; 4],
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub domain: DomainSpec,
    /// Viscosities and `gamma`; the friction here is a placeholder when `friction` is `Auto`.
    pub params: OseenParameters,
    pub friction: Friction,
    pub data: DataSpec,
    pub manufactured: Option<Manufacture>,
    pub ns: Vec<usize>,
    pub sigma: f64,
    pub seed: u64,
    pub samples: usize,
    pub out: PathBuf,
    pub tolerances: Tolerances,
}

fn parse_expr(key: &str, text: &str) -> Result<ScalarField> {
    ScalarField::parse(text).with_context(|| format!("{key}: cannot parse expression {text:?}"))
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| anyhow!("config: {e}"))?;

    let p = &raw.params;
    let friction = match &p.friction {
        None => Friction::Auto,
        Some(RawFriction::Keyword(k)) if k == "auto" => Friction::Auto,
        Some(RawFriction::Keyword(k)) => bail!("params.friction: expected a number or \"auto\", got {k:?}"),
        Some(RawFriction::Value(f)) => Friction::Fixed(*f),
    };
    let placeholder = match friction {
        Friction::Fixed(f) => f,
        Friction::Auto => 0.0,
    };
    let params = OseenParameters { mu: p.mu, nu: p.nu, gamma: p.gamma, friction: placeholder };
    params.validate().map_err(|e| anyhow!("params: {e}"))?;

    let force_text = raw.data.force.clone().unwrap_or_else(|| ["0".into(), "0".into()]);
    let source_text = raw.data.source.clone().unwrap_or_else(|| "0".into());
    let boundary_text = raw.data.boundary.clone().unwrap_or_else(|| "0".into());
    let data = DataSpec {
        force: VectorField::new(
            parse_expr("data.force[0]", &force_text[0])?,
            parse_expr("data.force[1]", &force_text[1])?,
        ),
        source: parse_expr("data.source", &source_text)?,
        boundary: parse_expr("data.boundary", &boundary_text)?,
        text: [force_text[0].clone(), force_text[1].clone(), source_text, boundary_text],
    };

    let manufactured = match raw.manufactured {
        None => None,
        Some(m) => {
            let has_data = raw.data.force.is_some() || raw.data.source.is_some() || raw.data.boundary.is_some();
            if has_data {
                bail!("manufactured: data are derived from the manufactured fields; remove the [data] entries");
            }
            match (m.standard, m.velocity, m.density) {
                (true, None, None) => Some(Manufacture::Standard),
                (false, Some(v), Some(w)) => Some(Manufacture::Fields {
                    velocity: VectorField::new(
                        parse_expr("manufactured.velocity[0]", &v[0])?,
                        parse_expr("manufactured.velocity[1]", &v[1])?,
                    ),
                    density: parse_expr("manufactured.density", &w)?,
                    text: [v[0].clone(), v[1].clone(), w],
                }),
                (true, _, _) => bail!("manufactured: `standard = true` excludes explicit velocity and density"),
                _ => bail!("manufactured: give either `standard = true` or both `velocity` and `density`"),
            }
        }
    };

    let ns = match raw.run.n.clone().unwrap_or(RawN::One(DEFAULT_N)) {
        RawN::One(n) => vec![n],
        RawN::Many(v) => v,
    };
    validate_ns(&ns)?;
    let sigma = raw.run.sigma.unwrap_or(DEFAULT_SIGMA_PER_MU * params.mu);
    if !(sigma >= 0.0 && sigma.is_finite()) {
        bail!("run.sigma: penalty must be finite and non-negative, got {sigma}");
    }
    let samples = raw.run.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        bail!("run.samples: must be positive");
    }
    let t = &raw.tolerances;
    let positive = |name: &str, v: f64| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            bail!("tolerances.{name}: must be positive, got {v}")
        }
    };
    if let Some(r) = t.residual {
        positive("residual", r)?;
    }
    positive("energy_ratio", t.energy_ratio)?;
    positive("helmholtz_factor", t.helmholtz_factor)?;
    positive("transport_gap", t.transport_gap)?;

    raw.domain.build().map_err(|e| anyhow!("domain: {e}"))?;

    Ok(RunConfig {
        domain: raw.domain,
        params,
        friction,
        data,
        manufactured,
        ns,
        sigma,
        seed: raw.run.seed.unwrap_or(0),
        samples,
        out: raw.run.out.unwrap_or_else(|| PathBuf::from("out")),
        tolerances: raw.tolerances,
    })
}

pub fn validate_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        bail!("run.n: at least one basis size is required");
    }
    for &n in ns {
        if n == 0 || n > MAX_N {
            bail!("run.n: basis size {n} outside 1..={MAX_N}");
        }
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        bail!("run.n: basis sizes must be strictly increasing, got {ns:?}");
    }
    Ok(())
}

/// Parse `8,16,32` as given on the command line.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    let ns = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("--n-override: bad entry {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    validate_ns(&ns)?;
    Ok(ns)
}
