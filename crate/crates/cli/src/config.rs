//! Experiment configuration: one JSON document per run.
//!
//! ```json
//! {"kind": "saw", "seed": 1, "out": "runs/saw", "params": {"k_max": 20}}
//! ```
//!
//! Unknown keys are rejected at every level. Any error raised while parsing or
//! validating a configuration maps to exit code 2.

use onmodel::lattice::{Hex, HexDomain, TorusLattice};
use onmodel::loop_core::Fugacity;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Configuration error (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

macro_rules! cfg_err {
    ($($arg:tt)*) => { return Err(ConfigError(format!($($arg)*))) };
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct Config {
    pub raw: RawConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub experiment: Experiment,
}

#[derive(Clone, Debug)]
pub enum Experiment {
    SpinSample(SpinSample),
    LoopSample(LoopSample),
    Saw(Saw),
    Oracle(Oracle),
    IrIntegral(IrIntegralCfg),
    Hardhex(Hardhex),
    RepairAudit(RepairAudit),
    Dgff(DgffCfg),
    Aizenman(Aizenman),
}

pub const KINDS: [&str; 9] =
    ["spin-sample", "loop-sample", "saw", "oracle", "ir-integral", "hardhex", "repair-audit", "dgff", "aizenman"];

// ---------------------------------------------------------------------------
// Shared pieces
// ---------------------------------------------------------------------------

/// Hexagonal domain description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    /// Type-0 hexagon-shaped domain of sublattice radius r.
    Hexagon { r: i32 },
    /// Type-0 rectangular domain of about w×h hexagons.
    Rectangle { w: i32, h: i32 },
    /// Interior of the boundary of a union of inner faces.
    Faces { hexes: Vec<[i32; 2]> },
    /// Type-0 domain spanned by the given class-0 hexagons.
    Type0 { hexes: Vec<[i32; 2]> },
}

impl DomainSpec {
    pub fn build(&self) -> Result<HexDomain, ConfigError> {
        let hexes = |v: &[[i32; 2]]| -> Result<Vec<Hex>, ConfigError> {
            v.iter().map(|&[a, b]| Hex::new(a, b).map_err(|e| ConfigError(format!("domain: {e}")))).collect()
        };
        let d = match self {
            DomainSpec::Hexagon { r } => HexDomain::hexagon(*r),
            DomainSpec::Rectangle { w, h } => HexDomain::rectangle(*w, *h),
            DomainSpec::Faces { hexes: v } => HexDomain::from_faces(&hexes(v)?),
            DomainSpec::Type0 { hexes: v } => HexDomain::type0_region(&hexes(v)?),
        };
        d.map_err(|e| ConfigError(format!("domain: {e}")))
    }
}

/// Edge weight: a positive number or the string "inf".
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XSpec {
    Number(f64),
    Text(String),
}

impl XSpec {
    pub fn fugacity(&self) -> Result<Fugacity, ConfigError> {
        let v = match self {
            XSpec::Number(v) => *v,
            XSpec::Text(s) if s == "inf" || s == "infinity" => f64::INFINITY,
            XSpec::Text(s) => cfg_err!("x must be a positive number or \"inf\", got {s:?}"),
        };
        Fugacity::parse(v).map_err(|e| ConfigError(e.to_string()))
    }
}

fn torus(d: usize, l: usize) -> Result<TorusLattice, ConfigError> {
    TorusLattice::new(d, l).map_err(|e| ConfigError(format!("torus: {e}")))
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        cfg_err!("{name} must be positive and finite, got {v}");
    }
    Ok(())
}

fn non_negative(name: &str, v: f64) -> Result<(), ConfigError> {
    if !(v >= 0.0 && v.is_finite()) {
        cfg_err!("{name} must be non-negative and finite, got {v}");
    }
    Ok(())
}

fn nonzero(name: &str, v: usize) -> Result<(), ConfigError> {
    if v == 0 {
        cfg_err!("{name} must be at least 1");
    }
    Ok(())
}

fn one() -> usize {
    1
}

// ---------------------------------------------------------------------------
// Experiment kinds
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Ferromagnetic,
    Antiferromagnetic,
    HardSupport,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Metropolis,
    Wolff,
    Mixed,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Ordered,
    Random,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSample {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub n: usize,
    pub beta: f64,
    #[serde(default = "default_potential")]
    pub potential: PotentialKind,
    /// Support threshold for the hard-support potential.
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    /// Wolff updates per sweep for the Wolff and mixed samplers.
    #[serde(default = "one")]
    pub wolff_steps: usize,
    #[serde(default)]
    pub proposal_angle: Option<f64>,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    pub samples: usize,
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default = "default_init")]
    pub init: InitKind,
}

fn default_potential() -> PotentialKind {
    PotentialKind::Ferromagnetic
}
fn default_sampler() -> SamplerKind {
    SamplerKind::Metropolis
}
fn default_init() -> InitKind {
    InitKind::Ordered
}

impl SpinSample {
    fn validate(&self) -> Result<(), ConfigError> {
        torus(self.d, self.l)?;
        nonzero("n", self.n)?;
        non_negative("beta", self.beta)?;
        nonzero("samples", self.samples)?;
        nonzero("thinning", self.thinning)?;
        nonzero("chains", self.chains)?;
        match (self.potential, self.r0) {
            (PotentialKind::HardSupport, Some(r)) if (-1.0..1.0).contains(&r) => {}
            (PotentialKind::HardSupport, _) => cfg_err!("hard-support potential needs r0 in [−1, 1)"),
            (_, Some(_)) => cfg_err!("r0 is only meaningful for the hard-support potential"),
            _ => {}
        }
        if self.sampler != SamplerKind::Metropolis {
            if self.potential != PotentialKind::Ferromagnetic {
                cfg_err!("Wolff updates need the ferromagnetic potential");
            }
            nonzero("wolff_steps", self.wolff_steps)?;
        }
        if let Some(a) = self.proposal_angle {
            if !(a > 0.0 && a <= std::f64::consts::PI) {
                cfg_err!("proposal_angle must lie in (0, π]");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSample {
    pub domain: DomainSpec,
    pub n: f64,
    pub x: XSpec,
    pub steps: u64,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default = "default_record")]
    pub record_every: u64,
    #[serde(default)]
    pub compound_probability: f64,
    #[serde(default = "one")]
    pub chains: usize,
}

fn default_record() -> u64 {
    1000
}

impl LoopSample {
    fn validate(&self) -> Result<(), ConfigError> {
        self.domain.build()?;
        positive("n", self.n)?;
        self.x.fugacity()?;
        nonzero("record_every", self.record_every as usize)?;
        nonzero("chains", self.chains)?;
        if !(0.0..=1.0).contains(&self.compound_probability) {
            cfg_err!("compound_probability must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Saw {
    pub k_max: usize,
}

impl Saw {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.k_max == 0 || self.k_max > onmodel::saw::SAW_MAX_LENGTH {
            cfg_err!("k_max must lie in 1..={}", onmodel::saw::SAW_MAX_LENGTH);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleModel {
    /// Ising model on the torus with side 2L.
    IsingTorus {
        d: usize,
        #[serde(rename = "L")]
        l: usize,
        beta: f64,
    },
    /// Loop O(n) model on a hexagonal domain.
    Loop { domain: DomainSpec, n: f64, x: f64 },
    /// Random-cluster model on the torus graph.
    FkTorus {
        d: usize,
        #[serde(rename = "L")]
        l: usize,
        p: f64,
        q: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Oracle {
    pub model: OracleModel,
    /// Directory of the result cache (disabled when absent).
    #[serde(default)]
    pub cache: Option<PathBuf>,
}

impl Oracle {
    fn validate(&self) -> Result<(), ConfigError> {
        match &self.model {
            OracleModel::IsingTorus { d, l, beta } => {
                let lat = torus(*d, *l)?;
                if lat.len() > onmodel::oracle::ISING_VERTEX_CAP {
                    cfg_err!("torus has {} sites, above the enumeration cap {}", lat.len(), onmodel::oracle::ISING_VERTEX_CAP);
                }
                if !beta.is_finite() {
                    cfg_err!("beta must be finite");
                }
            }
            OracleModel::Loop { domain, n, x } => {
                let d = domain.build()?;
                if d.domain_edges().len() > 63 {
                    cfg_err!("domain has {} edges, above the enumeration cap 63", d.domain_edges().len());
                }
                positive("n", *n)?;
                positive("x", *x)?;
            }
            OracleModel::FkTorus { d, l, p, q } => {
                let lat = torus(*d, *l)?;
                if lat.edges().len() > onmodel::oracle::FK_EDGE_CAP {
                    cfg_err!("torus has {} edges, above the enumeration cap {}", lat.edges().len(), onmodel::oracle::FK_EDGE_CAP);
                }
                if !(0.0..=1.0).contains(p) {
                    cfg_err!("p must lie in [0, 1]");
                }
                positive("q", *q)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrIntegralCfg {
    pub d: Vec<usize>,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    4000
}

impl IrIntegralCfg {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.d.is_empty() || self.d.contains(&0) {
            cfg_err!("d must be a non-empty list of positive dimensions");
        }
        if self.grid < 16 {
            cfg_err!("grid must be at least 16");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum HardhexInit {
    Empty,
    Ordered,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hardhex {
    /// Torus patch side (a multiple of 3).
    pub m: usize,
    pub lambda: f64,
    pub sweeps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default = "default_hh_init")]
    pub init: HardhexInit,
}

fn default_hh_init() -> HardhexInit {
    HardhexInit::Empty
}

impl Hardhex {
    fn validate(&self) -> Result<(), ConfigError> {
        onmodel::representations::HardHexLattice::torus(self.m).map_err(|e| ConfigError(format!("patch: {e}")))?;
        positive("lambda", self.lambda)?;
        nonzero("sweeps", self.sweeps)?;
        nonzero("record_every", self.record_every)?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairAudit {
    pub domain: DomainSpec,
    pub n: f64,
    pub x: f64,
    pub steps: u64,
    #[serde(default)]
    pub burn_in: u64,
    /// Audit the current state every this many steps.
    #[serde(default = "one_u64")]
    pub audit_every: u64,
    /// Counterexamples written to disk at most.
    #[serde(default = "default_dumps")]
    pub max_dumps: usize,
}

fn one_u64() -> u64 {
    1
}
fn default_dumps() -> usize {
    10
}

impl RepairAudit {
    fn validate(&self) -> Result<(), ConfigError> {
        let d = self.domain.build()?;
        if !d.is_type(0) {
            cfg_err!("the repair audit needs a type-0 domain");
        }
        positive("n", self.n)?;
        positive("x", self.x)?;
        nonzero("audit_every", self.audit_every as usize)?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgffCfg {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub beta: f64,
    pub samples: usize,
    /// Sites (linear indices) whose heights are written per sample.
    #[serde(default)]
    pub probes: Vec<usize>,
}

impl DgffCfg {
    fn validate(&self) -> Result<(), ConfigError> {
        let lat = torus(self.d, self.l)?;
        positive("beta", self.beta)?;
        nonzero("samples", self.samples)?;
        if let Some(&p) = self.probes.iter().find(|&&p| p >= lat.len()) {
            cfg_err!("probe site {p} is outside the torus ({} sites)", lat.len());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aizenman {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default)]
    pub beta: f64,
    /// Side of the crossing square (defaults to L).
    #[serde(default)]
    pub ell: Option<usize>,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    pub samples: usize,
    #[serde(default)]
    pub proposal_angle: Option<f64>,
}

fn default_r0() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

impl Aizenman {
    fn validate(&self) -> Result<(), ConfigError> {
        torus(2, self.l)?;
        if !(-1.0..1.0).contains(&self.r0) {
            cfg_err!("r0 must lie in [−1, 1)");
        }
        non_negative("beta", self.beta)?;
        nonzero("samples", self.samples)?;
        nonzero("thinning", self.thinning)?;
        let ell = self.ell.unwrap_or(self.l);
        if ell == 0 || ell > self.l {
            cfg_err!("ell must lie in 1..=L");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

fn parse_params<T: for<'de> Deserialize<'de>>(kind: &str, v: &serde_json::Value) -> Result<T, ConfigError> {
    serde_json::from_value(v.clone()).map_err(|e| ConfigError(format!("{kind} params: {e}")))
}

impl Config {
    /// Parses and validates a configuration; `seed` and `out` override the file.
    pub fn from_str(text: &str, seed: Option<u64>, out: Option<&Path>) -> Result<Config, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        let Some(seed) = seed.or(raw.seed) else { cfg_err!("no seed given (config \"seed\" or --seed)") };
        let Some(out) = out.map(Path::to_path_buf).or_else(|| raw.out.clone()) else {
            cfg_err!("no output directory given (config \"out\" or --out)")
        };
        let p = &raw.params;
        let k = raw.kind.as_str();
        let experiment = match k {
            "spin-sample" => Experiment::SpinSample(parse_params(k, p)?),
            "loop-sample" => Experiment::LoopSample(parse_params(k, p)?),
            "saw" => Experiment::Saw(parse_params(k, p)?),
            "oracle" => Experiment::Oracle(parse_params(k, p)?),
            "ir-integral" => Experiment::IrIntegral(parse_params(k, p)?),
            "hardhex" => Experiment::Hardhex(parse_params(k, p)?),
            "repair-audit" => Experiment::RepairAudit(parse_params(k, p)?),
            "dgff" => Experiment::Dgff(parse_params(k, p)?),
            "aizenman" => Experiment::Aizenman(parse_params(k, p)?),
            other => cfg_err!("unknown experiment kind {other:?} (expected one of {})", KINDS.join(", ")),
        };
        match &experiment {
            Experiment::SpinSample(c) => c.validate()?,
            Experiment::LoopSample(c) => c.validate()?,
            Experiment::Saw(c) => c.validate()?,
            Experiment::Oracle(c) => c.validate()?,
            Experiment::IrIntegral(c) => c.validate()?,
            Experiment::Hardhex(c) => c.validate()?,
            Experiment::RepairAudit(c) => c.validate()?,
            Experiment::Dgff(c) => c.validate()?,
            Experiment::Aizenman(c) => c.validate()?,
        }
        Ok(Config { raw, seed, out, experiment })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys_and_kinds() {
        let ok = r#"{"kind":"saw","seed":1,"out":"x","params":{"k_max":5}}"#;
        assert!(Config::from_str(ok, None, None).is_ok());
        let extra = r#"{"kind":"saw","seed":1,"out":"x","params":{"k_max":5,"bogus":1}}"#;
        assert!(Config::from_str(extra, None, None).unwrap_err().0.contains("bogus"));
        let top = r#"{"kind":"saw","seed":1,"out":"x","extra":0,"params":{"k_max":5}}"#;
        assert!(Config::from_str(top, None, None).is_err());
        let kind = r#"{"kind":"nope","seed":1,"out":"x","params":{}}"#;
        assert!(Config::from_str(kind, None, None).is_err());
        let noseed = r#"{"kind":"saw","out":"x","params":{"k_max":5}}"#;
        assert!(Config::from_str(noseed, None, None).is_err());
        assert_eq!(Config::from_str(noseed, Some(3), None).unwrap().seed, 3);
    }

    #[test]
    fn oracle_and_domain_variants_parse() {
        let c = r#"{"kind":"oracle","seed":1,"out":"x","params":{"model":{"family":"loop","domain":{"shape":"hexagon","r":1},"n":1.5,"x":0.6}}}"#;
        assert!(Config::from_str(c, None, None).is_ok());
        let bad = r#"{"kind":"oracle","seed":1,"out":"x","params":{"model":{"family":"ising-torus","d":2,"L":3,"beta":0.4}}}"#;
        assert!(Config::from_str(bad, None, None).is_err(), "36 sites exceed the cap");
        let x = r#"{"kind":"loop-sample","seed":1,"out":"x","params":{"domain":{"shape":"rectangle","w":6,"h":4},"n":1,"x":"inf","steps":10}}"#;
        assert!(Config::from_str(x, None, None).is_ok());
    }
}
