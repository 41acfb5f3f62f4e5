//! JSON configuration documents.
//!
//! Numbers may be written as JSON numbers or as decimal strings
//! (`"0.1"`); both parse to the same `f64`. Unknown keys are rejected.
//! Parsing fills in every default, so serializing a parsed document echoes
//! the full effective configuration.

use std::fmt;

use levypoll_core::sim::SimConfig;
use levypoll_core::{
    Discipline, JumpBase, JumpSpec, PollingModel, QueueSpec, ServedProcessSpec, SubordinatorSpec, SwitchDuration,
    SwitchSpec, Tolerances,
};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported config version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("invalid model: {0}")]
    Model(#[from] levypoll_core::Error),
    #[error("invalid {0}")]
    Other(String),
}

/// A real number read from a JSON number or a decimal string.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Num(pub f64);

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num(x)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a finite number or a decimal string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v.trim().parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Num(x)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

fn nums(v: &[Num]) -> Vec<f64> {
    v.iter().map(|x| x.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub version: u32,
    pub model: ModelBlock,
    #[serde(default)]
    pub tolerances: TolerancesBlock,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub evaluation: EvaluationBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// Input active in every phase unless a queue overrides it.
    pub input: InputBlock,
    #[serde(default)]
    pub globally_gated: bool,
    pub queues: Vec<QueueBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBlock {
    /// Deterministic drift per queue; omitted means zero.
    #[serde(default)]
    pub drift: Vec<Num>,
    #[serde(default)]
    pub components: Vec<ComponentBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentBlock {
    pub rate: Num,
    pub jump: JumpBlock,
    pub scale: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpBlock {
    Deterministic { value: Num },
    Exponential { mean: Num },
    Discrete { points: Vec<Num>, probs: Vec<Num> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueBlock {
    #[serde(default = "one")]
    pub service_rate: Num,
    #[serde(default)]
    pub brownian_sd: Num,
    #[serde(default = "exhaustive")]
    pub discipline: DisciplineBlock,
    pub switch: SwitchBlock,
    /// Input while this queue is being served, overriding `model.input`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visit_input: Option<InputBlock>,
}

fn one() -> Num {
    Num(1.0)
}

fn exhaustive() -> DisciplineBlock {
    DisciplineBlock::Exhaustive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchBlock {
    pub duration: DurationBlock,
    /// Input during the switch-over, overriding `model.input`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DurationBlock {
    Deterministic { value: Num },
    Exponential { mean: Num },
    Erlang { shape: u32, mean: Num },
}

/// `"gated"`, `"exhaustive"`, `{"p_exhaustive": {"p": 0.5}}`,
/// `{"mixture": {"p": .., "left": .., "right": ..}}` or
/// `{"composition": {"first": .., "second": ..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DisciplineBlock {
    Gated,
    Exhaustive,
    PExhaustive { p: Num },
    Mixture { p: Num, left: Box<DisciplineBlock>, right: Box<DisciplineBlock> },
    Composition { first: Box<DisciplineBlock>, second: Box<DisciplineBlock> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancesBlock {
    pub truncation: Num,
    pub derivative_step: Num,
    pub stability: Num,
    pub max_terms: usize,
}

impl Default for TolerancesBlock {
    fn default() -> Self {
        let t = Tolerances::default();
        TolerancesBlock {
            truncation: Num(t.truncation),
            derivative_step: Num(t.derivative_step),
            stability: Num(t.stability),
            max_terms: t.max_terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationBlock {
    pub warmup_cycles: u64,
    pub measured_cycles: u64,
    pub replications: usize,
    pub seed: u64,
    pub brownian_step: Num,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        let s = SimConfig::default();
        SimulationBlock {
            warmup_cycles: s.warmup_cycles,
            measured_cycles: s.measured_cycles,
            replications: s.replications,
            seed: s.seed,
            brownian_step: Num(s.brownian_step),
        }
    }
}

/// Transform arguments: explicit vectors, plus the tensor product of the
/// per-coordinate lists in `grid` (last coordinate varying fastest).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationBlock {
    pub points: Vec<Vec<Num>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<Vec<Num>>,
}

/// Checked model and run plan built from a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: PollingModel,
    pub simulation: SimConfig,
    pub points: Vec<Vec<f64>>,
}

/// Parse, apply defaults and validate.
pub fn parse_config(text: &str) -> Result<ConfigDocument, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut doc: ConfigDocument = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if doc.version != SCHEMA_VERSION {
        return Err(ConfigError::Version(doc.version));
    }
    if doc.evaluation.points.is_empty() && doc.evaluation.grid.is_empty() {
        let n = doc.model.queues.len();
        doc.evaluation.points = [0.0, 0.5, 1.0].iter().map(|&x| vec![Num(x); n]).collect();
    }
    doc.resolve()?;
    Ok(doc)
}

pub fn to_json(doc: &ConfigDocument) -> String {
    serde_json::to_string_pretty(doc).expect("config documents always serialize")
}

impl InputBlock {
    fn build(&self, n: usize, what: &str) -> Result<SubordinatorSpec, ConfigError> {
        let drift = if self.drift.is_empty() { vec![0.0; n] } else { nums(&self.drift) };
        if drift.len() != n {
            return Err(ConfigError::Other(format!("{what}: drift has {} entries, expected {n}", drift.len())));
        }
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if c.scale.len() != n {
                    return Err(ConfigError::Other(format!(
                        "{what}: component {k} scale has {} entries, expected {n}",
                        c.scale.len()
                    )));
                }
                let base = match &c.jump {
                    JumpBlock::Deterministic { value } => JumpBase::Deterministic { value: value.0 },
                    JumpBlock::Exponential { mean } => JumpBase::Exponential { mean: mean.0 },
                    JumpBlock::Discrete { points, probs } => {
                        JumpBase::Discrete { points: nums(points), probs: nums(probs) }
                    }
                };
                Ok((c.rate.0, JumpSpec::new(base, nums(&c.scale))?))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        Ok(SubordinatorSpec::new(drift, components)?)
    }
}

impl DisciplineBlock {
    pub fn build(&self) -> Discipline {
        match self {
            DisciplineBlock::Gated => Discipline::Gated,
            DisciplineBlock::Exhaustive => Discipline::Exhaustive,
            DisciplineBlock::PExhaustive { p } => Discipline::PExhaustive(p.0),
            DisciplineBlock::Mixture { p, left, right } => Discipline::mixture(p.0, left.build(), right.build()),
            DisciplineBlock::Composition { first, second } => Discipline::composition(first.build(), second.build()),
        }
    }
}

impl DurationBlock {
    fn build(&self) -> SwitchDuration {
        match *self {
            DurationBlock::Deterministic { value } => SwitchDuration::Deterministic { value: value.0 },
            DurationBlock::Exponential { mean } => SwitchDuration::Exponential { mean: mean.0 },
            DurationBlock::Erlang { shape, mean } => SwitchDuration::Erlang { shape, mean: mean.0 },
        }
    }
}

impl ConfigDocument {
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let n = self.model.queues.len();
        if n == 0 {
            return Err(ConfigError::Other("model: at least one queue is required".into()));
        }
        let global = self.model.input.build(n, "model.input")?;
        let queues = self
            .model
            .queues
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let visit = match &q.visit_input {
                    Some(b) => b.build(n, &format!("model.queues[{i}].visit_input"))?,
                    None => global.clone(),
                };
                let switch_input = match &q.switch.input {
                    Some(b) => b.build(n, &format!("model.queues[{i}].switch.input"))?,
                    None => global.clone(),
                };
                Ok(QueueSpec {
                    served: ServedProcessSpec::new(visit, i, q.service_rate.0, q.brownian_sd.0)?,
                    switch: SwitchSpec { duration: q.switch.duration.build(), input: switch_input },
                    discipline: q.discipline.build(),
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let t = &self.tolerances;
        let tolerances = Tolerances {
            truncation: t.truncation.0,
            derivative_step: t.derivative_step.0,
            stability: t.stability.0,
            max_terms: t.max_terms,
        };
        let model = PollingModel::new(queues, self.model.globally_gated, tolerances)?;
        let s = &self.simulation;
        let simulation = SimConfig {
            warmup_cycles: s.warmup_cycles,
            measured_cycles: s.measured_cycles,
            replications: s.replications,
            seed: s.seed,
            brownian_step: s.brownian_step.0,
        };
        simulation.validate()?;
        let points = self.evaluation.expand(n)?;
        Ok(Resolved { model, simulation, points })
    }
}

impl EvaluationBlock {
    pub fn expand(&self, n: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
        let mut out: Vec<Vec<f64>> = self.points.iter().map(|p| nums(p)).collect();
        if !self.grid.is_empty() {
            if self.grid.len() != n || self.grid.iter().any(Vec::is_empty) {
                return Err(ConfigError::Other(format!(
                    "evaluation.grid needs {n} non-empty coordinate lists"
                )));
            }
            let mut product = vec![Vec::new()];
            for axis in &self.grid {
                product = product
                    .into_iter()
                    .flat_map(|prefix: Vec<f64>| {
                        axis.iter().map(move |x| {
                            let mut p = prefix.clone();
                            p.push(x.0);
                            p
                        })
                    })
                    .collect();
            }
            out.extend(product);
        }
        for (k, p) in out.iter().enumerate() {
            if p.len() != n || p.iter().any(|x| x.is_nan() || *x < 0.0) {
                return Err(ConfigError::Other(format!(
                    "evaluation point {k} must be a nonnegative vector of length {n}: {p:?}"
                )));
            }
        }
        Ok(out)
    }
}
