//! JSON descriptors for groups, quasimorphisms, lifts, actions, densities.
//!
//! Rationals travel as `"p/q"` strings so reports stay exact.

use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use crate::circle::{
    circle_triple_action, density_triple_action, CircleLift, Density, GeneratorTable,
    MarkedCircle,
};
use crate::error::{Error, Result};
use crate::ladder::{build_embedding, integerize, ladder_triple_action, LadderEmbedding};
use crate::qmcore::{counting_qm, exponent_sum_qm, Quasimorphism};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::triple::{trivial_z_action, Triple, TripleAction};
use crate::words::{FactorOrder, Presentation, Word};

pub const DEFAULT_MAX_LENGTH: u32 = 4;
pub const DEFAULT_DOUBLINGS: u32 = 12;
pub const DEFAULT_ITERS: u64 = 64;
pub const DEFAULT_TRUNCATION: i64 = 8;
pub const DEFAULT_ELEMENT_LENGTH: u32 = 2;

/// Powers of the witness validated during integerization.
const INTEGERIZE_POWERS: u64 = 8;
const DEFAULT_DENSITY_SAMPLES: u64 = 4;

pub fn serialize_rational<S: Serializer>(
    r: &Rational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

pub fn serialize_rational_opt<S: Serializer>(
    r: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&format_rational(r)),
        None => s.serialize_none(),
    }
}

/// One cyclic-factor order: a positive integer or `"inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderConfig {
    Finite(u32),
    Symbol(String),
}

impl OrderConfig {
    fn to_order(&self) -> Result<FactorOrder> {
        match self {
            OrderConfig::Finite(n) if *n > 0 => Ok(FactorOrder::Finite(*n)),
            OrderConfig::Finite(n) => Err(Error::Config(format!("bad cyclic order {n}"))),
            OrderConfig::Symbol(s) if s == "inf" => Ok(FactorOrder::Infinite),
            OrderConfig::Symbol(s) => Err(Error::Config(format!("bad cyclic order {s:?}"))),
        }
    }
}

/// Group descriptor, e.g. `{"kind":"free","rank":2}` or
/// `{"kind":"cyclic-free-product","orders":[2,3]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupConfig {
    Free {
        rank: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        names: Option<Vec<String>>,
    },
    CyclicFreeProduct {
        orders: Vec<OrderConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        names: Option<Vec<String>>,
    },
    IntegerMatrixGroup { dimension: usize },
}

impl GroupConfig {
    pub fn build(&self) -> Result<Arc<Presentation>> {
        match self {
            GroupConfig::Free { rank, names } => match names {
                Some(names) => {
                    if names.len() != *rank {
                        return Err(Error::Config("rank and names disagree".into()));
                    }
                    Presentation::free_named(names.clone())
                }
                None => Presentation::free(*rank),
            },
            GroupConfig::CyclicFreeProduct { orders, names } => {
                let orders: Result<Vec<_>> = orders.iter().map(|o| o.to_order()).collect();
                match names {
                    Some(names) => {
                        Presentation::cyclic_free_product_named(orders?, names.clone())
                    }
                    None => Presentation::cyclic_free_product(orders?),
                }
            }
            GroupConfig::IntegerMatrixGroup { dimension } => {
                Presentation::integer_matrix_group(*dimension)
            }
        }
    }
}

/// Quasimorphism descriptor, e.g. `{"kind":"counting","pattern":"a b"}`,
/// `{"kind":"hom","weights":{"a":"1","b":"0"}}`, or `{"kind":"rademacher"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QmConfig {
    Counting {
        pattern: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        search_length: Option<u32>,
    },
    Hom {
        weights: std::collections::BTreeMap<String, serde_json::Value>,
    },
    Rademacher,
}

fn weight_value(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => {
            let i = n
                .as_i64()
                .ok_or_else(|| Error::Config(format!("weight {n} is not an integer; use \"p/q\"")))?;
            Ok(crate::rational::rat(i))
        }
        other => Err(Error::Config(format!("bad weight {other}"))),
    }
}

impl QmConfig {
    pub fn build(&self, pres: &Arc<Presentation>) -> Result<Quasimorphism> {
        match self {
            QmConfig::Counting { pattern, search_length } => {
                let pattern = Word::parse(pres, pattern)?;
                match search_length {
                    Some(len) => crate::qmcore::counting_qm_with_budget(&pattern, *len),
                    None => counting_qm(&pattern),
                }
            }
            QmConfig::Hom { weights } => {
                let mut ordered = vec![crate::rational::rat(0); pres.generator_count()];
                for (name, value) in weights {
                    let idx = pres
                        .generator_names()
                        .iter()
                        .position(|n| n == name)
                        .ok_or_else(|| Error::UnknownGenerator { name: name.clone() })?;
                    ordered[idx] = weight_value(value)?;
                }
                exponent_sum_qm(pres, ordered)
            }
            QmConfig::Rademacher => {
                if !pres.has_matrix_realization() {
                    return Err(Error::Config(
                        "the letter-counting quasimorphism needs the order-(2,3) product".into(),
                    ));
                }
                crate::psl2z::rademacher_qm_on(pres)
            }
        }
    }
}

fn rational_pairs(pairs: &[[String; 2]]) -> Result<Vec<(Rational, Rational)>> {
    pairs
        .iter()
        .map(|[x, v]| Ok((parse_rational(x)?, parse_rational(v)?)))
        .collect()
}

/// Circle lift descriptor, e.g. `{"kind":"rotation","angle":"2/5"}` or
/// `{"kind":"pl","breakpoints":[["0","1/4"],["1/2","3/4"]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LiftConfig {
    Rotation { angle: String },
    Pl { breakpoints: Vec<[String; 2]> },
}

impl LiftConfig {
    pub fn build(&self) -> Result<CircleLift> {
        match self {
            LiftConfig::Rotation { angle } => Ok(CircleLift::rotation(parse_rational(angle)?)),
            LiftConfig::Pl { breakpoints } => CircleLift::pl(rational_pairs(breakpoints)?),
        }
    }
}

/// Density descriptor, e.g. `{"kind":"step","pieces":[["0","1/2"],["1/2","3/2"]]}`
/// or `{"kind":"pl","nodes":[["0","1/2"],["1/4","1"],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensityConfig {
    Step { pieces: Vec<[String; 2]> },
    Pl { nodes: Vec<[String; 2]> },
}

impl DensityConfig {
    pub fn build(&self) -> Result<Density> {
        match self {
            DensityConfig::Step { pieces } => Density::step(rational_pairs(pieces)?),
            DensityConfig::Pl { nodes } => Density::pl(rational_pairs(nodes)?),
        }
    }
}

/// A constructed leveled space with its group action, plus the ladder
/// embedding when the action came from one.
pub struct BuiltAction {
    pub triple: Triple,
    pub action: TripleAction,
    pub embedding: Option<LadderEmbedding>,
}

/// Builds the embedding named by group/qm descriptors, rescaled at `witness`.
pub fn build_ladder_embedding(
    group: &GroupConfig,
    qm: &QmConfig,
    witness: &str,
    max_length: u32,
    doublings: u32,
    element_length: u32,
) -> Result<LadderEmbedding> {
    let pres = group.build()?;
    let mu = qm.build(&pres)?;
    let g0 = Word::parse(&pres, witness)?;
    let (iq, _) = integerize(&mu, &g0, doublings, INTEGERIZE_POWERS)?;
    build_embedding(&iq, max_length, element_length)
}

/// Action descriptor.  Built-in kinds: "trivial-z", "ladder",
/// "psl2z-ladder", "circle-lift", "density-line".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ActionConfig {
    TrivialZ {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<i64>,
    },
    Ladder {
        group: GroupConfig,
        qm: QmConfig,
        witness: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_length: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        doublings: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        element_length: Option<u32>,
    },
    Psl2zLadder {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_length: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        element_length: Option<u32>,
    },
    CircleLift {
        offsets: Vec<String>,
        tables: Vec<GeneratorTable>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<i64>,
    },
    DensityLine {
        density: DensityConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<i64>,
    },
}

impl ActionConfig {
    pub fn build(&self) -> Result<BuiltAction> {
        match self {
            ActionConfig::TrivialZ { truncation } => {
                let (triple, action) =
                    trivial_z_action(truncation.unwrap_or(DEFAULT_TRUNCATION))?;
                Ok(BuiltAction { triple, action, embedding: None })
            }
            ActionConfig::Ladder {
                group,
                qm,
                witness,
                max_length,
                doublings,
                element_length,
            } => {
                let e = build_ladder_embedding(
                    group,
                    qm,
                    witness,
                    max_length.unwrap_or(DEFAULT_MAX_LENGTH),
                    doublings.unwrap_or(DEFAULT_DOUBLINGS),
                    element_length.unwrap_or(DEFAULT_ELEMENT_LENGTH),
                )?;
                let (triple, action) = ladder_triple_action(&e);
                Ok(BuiltAction { triple, action, embedding: Some(e) })
            }
            ActionConfig::Psl2zLadder { max_length, element_length } => {
                let e = crate::psl2z::build_psl2z_ladder(
                    max_length.unwrap_or(DEFAULT_MAX_LENGTH),
                    element_length.unwrap_or(DEFAULT_ELEMENT_LENGTH),
                )?;
                let (triple, action) = ladder_triple_action(&e);
                Ok(BuiltAction { triple, action, embedding: Some(e) })
            }
            ActionConfig::CircleLift { offsets, tables, truncation } => {
                let offsets: Result<Vec<Rational>> =
                    offsets.iter().map(|s| parse_rational(s)).collect();
                let circle = MarkedCircle::new(offsets?)?;
                let (triple, action) = circle_triple_action(
                    &circle,
                    tables.clone(),
                    truncation.unwrap_or(DEFAULT_TRUNCATION),
                )?;
                Ok(BuiltAction { triple, action, embedding: None })
            }
            ActionConfig::DensityLine { density, samples, truncation } => {
                let d = density.build()?;
                let (triple, action) = density_triple_action(
                    &d,
                    samples.unwrap_or(DEFAULT_DENSITY_SAMPLES),
                    truncation.unwrap_or(DEFAULT_TRUNCATION),
                )?;
                Ok(BuiltAction { triple, action, embedding: None })
            }
        }
    }
}

/// Shared numeric budgets; omitted fields fall back to per-command defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_length: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doublings: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<i64>,
}

impl BudgetsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_length == Some(0) {
            return Err(Error::Config("max_length must be positive".into()));
        }
        if self.doublings == Some(0) {
            return Err(Error::Config("doublings must be positive".into()));
        }
        if self.iters == Some(0) {
            return Err(Error::Config("iters must be positive".into()));
        }
        if matches!(self.truncation, Some(t) if t <= 0) {
            return Err(Error::Config("truncation must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<std::path::PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

/// Whole-run configuration file.  Every field can instead be supplied as a
/// command-line flag; flags win over the file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qm: Option<QmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qm1: Option<QmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qm2: Option<QmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<LiftConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default)]
    pub budgets: BudgetsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.budgets.validate()?;
        Ok(cfg)
    }
}
