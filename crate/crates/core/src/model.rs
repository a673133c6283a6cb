//! Interpretation models: named component slots, relation specifications,
//! a weight vector, and linear scoring of assignments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::primitives::{Primitive, PrimitiveKind};
use crate::relations::{evaluate, RelationKind, RelationParams};
use crate::scalar::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub name: String,
    pub kind: PrimitiveKind,
    #[serde(default)]
    pub optional: bool,
}

impl ComponentSpec {
    pub fn required(name: &str, kind: PrimitiveKind) -> Self {
        Self {
            name: name.to_owned(),
            kind,
            optional: false,
        }
    }

    pub fn optional(name: &str, kind: PrimitiveKind) -> Self {
        Self {
            name: name.to_owned(),
            kind,
            optional: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RelationSpec<T> {
    #[serde(rename = "relation_kind")]
    pub kind: RelationKind,
    pub operands: Vec<String>,
    #[serde(default)]
    pub params: RelationParams<T>,
}

impl<T: Scalar> RelationSpec<T> {
    pub fn new(kind: RelationKind, operands: &[&str]) -> Self {
        Self {
            kind,
            operands: operands.iter().map(|s| s.to_string()).collect(),
            params: RelationParams::default(),
        }
    }

    pub fn with_params(mut self, params: RelationParams<T>) -> Self {
        self.params = params;
        self
    }

    /// Human-readable label, e.g. `touch(palm-region,torso-region-2)`.
    pub fn label(&self) -> String {
        format!("{}({})", self.kind.id(), self.operands.join(","))
    }
}

/// Component name → assigned primitive, or `None` for null.
pub type Assignment<T> = BTreeMap<String, Option<Primitive<T>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct InterpretationModel<T> {
    pub class_label: String,
    pub components: Vec<ComponentSpec>,
    pub relations: Vec<RelationSpec<T>>,
    pub weights: Vec<T>,
    /// Penalty subtracted for each optional component left null.
    pub null_penalties: BTreeMap<String, T>,
    /// Calibrated classification threshold on the interpretation score.
    pub threshold: Option<T>,
}

/// Result of interpreting one image region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Interpretation<T> {
    pub assignment: Assignment<T>,
    pub score: T,
    pub feature_vector: Vec<T>,
}

/// A violated model invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Defect {
    DuplicateComponent(String),
    UnknownOperand { relation: usize, name: String },
    Arity { relation: usize, expected: usize, actual: usize },
    IncompatibleOperands { relation: usize, kind: RelationKind },
    WeightDimensionMismatch { expected: usize, actual: usize },
    UnreferencedComponent(String),
    PenaltyOnUnknownOrRequired(String),
    NonFinite(String),
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::DuplicateComponent(n) => write!(f, "duplicate component {n:?}"),
            Defect::UnknownOperand { relation, name } => {
                write!(f, "unknown operand {name:?} in relation {relation}")
            }
            Defect::Arity {
                relation,
                expected,
                actual,
            } => write!(f, "relation {relation} takes {expected} operands, has {actual}"),
            Defect::IncompatibleOperands { relation, kind } => {
                write!(f, "operand kinds of relation {relation} incompatible with {kind}")
            }
            Defect::WeightDimensionMismatch { expected, actual } => {
                write!(f, "weight dimension mismatch: expected {expected}, found {actual}")
            }
            Defect::UnreferencedComponent(n) => write!(f, "component {n:?} not referenced by any relation"),
            Defect::PenaltyOnUnknownOrRequired(n) => {
                write!(f, "null penalty for {n:?}, which is not an optional component")
            }
            Defect::NonFinite(what) => write!(f, "non-finite value in {what}"),
        }
    }
}

impl<T: Scalar> InterpretationModel<T> {
    /// A model with zero weights and no penalties.
    pub fn new(class_label: &str, components: Vec<ComponentSpec>, relations: Vec<RelationSpec<T>>) -> Self {
        let dim = relations.iter().map(|r| r.kind.dims()).sum();
        Self {
            class_label: class_label.to_owned(),
            components,
            relations,
            weights: vec![T::zero(); dim],
            null_penalties: BTreeMap::new(),
            threshold: None,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.relations.iter().map(|r| r.kind.dims()).sum()
    }

    /// Start offset of each relation's block in the weight vector.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.relations
            .iter()
            .map(|r| {
                let o = off;
                off += r.kind.dims();
                o
            })
            .collect()
    }

    pub fn block_range(&self, relation: usize) -> std::ops::Range<usize> {
        let start = self.block_offsets()[relation];
        start..start + self.relations[relation].kind.dims()
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn null_penalty(&self, name: &str) -> T {
        self.null_penalties.get(name).copied().unwrap_or(T::zero())
    }

    /// Every defect, not just the first.
    pub fn validate(&self) -> Result<(), Vec<Defect>> {
        let mut defects = Vec::new();
        let mut seen = BTreeSet::new();
        for c in &self.components {
            if !seen.insert(c.name.as_str()) {
                defects.push(Defect::DuplicateComponent(c.name.clone()));
            }
        }
        let mut referenced = BTreeSet::new();
        for (i, r) in self.relations.iter().enumerate() {
            if r.operands.len() != r.kind.arity() {
                defects.push(Defect::Arity {
                    relation: i,
                    expected: r.kind.arity(),
                    actual: r.operands.len(),
                });
            }
            let mut kinds = Vec::new();
            for name in &r.operands {
                match self.components.iter().find(|c| &c.name == name) {
                    Some(c) => {
                        referenced.insert(name.as_str());
                        kinds.push(c.kind);
                    }
                    None => defects.push(Defect::UnknownOperand {
                        relation: i,
                        name: name.clone(),
                    }),
                }
            }
            if kinds.len() == r.operands.len() && r.operands.len() == r.kind.arity() && !r.kind.accepts(&kinds) {
                defects.push(Defect::IncompatibleOperands { relation: i, kind: r.kind });
            }
            let p = &r.params;
            if ![p.tol, p.strength_scale, p.area_scale, p.bound_dist]
                .iter()
                .all(|v| v.is_finite() && *v > T::zero())
            {
                defects.push(Defect::NonFinite(format!("params of relation {i}")));
            }
        }
        if self.weights.len() != self.feature_dim() {
            defects.push(Defect::WeightDimensionMismatch {
                expected: self.feature_dim(),
                actual: self.weights.len(),
            });
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            defects.push(Defect::NonFinite("weights".into()));
        }
        for c in &self.components {
            if !referenced.contains(c.name.as_str()) {
                defects.push(Defect::UnreferencedComponent(c.name.clone()));
            }
        }
        for (name, v) in &self.null_penalties {
            if !self.components.iter().any(|c| &c.name == name && c.optional) {
                defects.push(Defect::PenaltyOnUnknownOrRequired(name.clone()));
            }
            if !v.is_finite() {
                defects.push(Defect::NonFinite(format!("null penalty of {name:?}")));
            }
        }
        if defects.is_empty() {
            Ok(())
        } else {
            Err(defects)
        }
    }

    /// Checks names, kinds and optionality of an assignment. Components
    /// absent from the map count as null.
    pub fn check_assignment(&self, assignment: &Assignment<T>) -> Result<(), ModelError> {
        for name in assignment.keys() {
            if self.component_index(name).is_none() {
                return Err(ModelError::UnknownComponent(name.clone()));
            }
        }
        for c in &self.components {
            match assignment.get(&c.name).and_then(|p| p.as_ref()) {
                Some(p) if p.kind() != c.kind => {
                    return Err(ModelError::KindMismatch {
                        component: c.name.clone(),
                        expected: c.kind.name(),
                        actual: p.kind().name(),
                    })
                }
                None if !c.optional => return Err(ModelError::MissingRequired(c.name.clone())),
                _ => {}
            }
        }
        Ok(())
    }

    /// Concatenated relation values in model order.
    pub fn feature_vector(&self, assignment: &Assignment<T>) -> Result<Vec<T>, ModelError> {
        self.check_assignment(assignment)?;
        let mut out = Vec::with_capacity(self.feature_dim());
        for r in &self.relations {
            let ops: Vec<Option<&Primitive<T>>> = r
                .operands
                .iter()
                .map(|n| assignment.get(n).and_then(|p| p.as_ref()))
                .collect();
            out.extend_from_slice(evaluate(r.kind, &r.params, &ops).values());
        }
        Ok(out)
    }

    /// `w · φ` accumulated left to right.
    pub fn dot(&self, features: &[T]) -> T {
        self.weights
            .iter()
            .zip(features)
            .fold(T::zero(), |acc, (w, f)| acc + *w * *f)
    }

    /// Sum of null penalties over optional components left null, in component order.
    pub fn total_null_penalty(&self, is_null: impl Fn(&str) -> bool) -> T {
        self.components
            .iter()
            .filter(|c| c.optional && is_null(&c.name))
            .fold(T::zero(), |acc, c| acc + self.null_penalty(&c.name))
    }

    pub fn score(&self, assignment: &Assignment<T>) -> Result<Interpretation<T>, ModelError> {
        let features = self.feature_vector(assignment)?;
        let penalty = self.total_null_penalty(|n| assignment.get(n).map_or(true, |p| p.is_none()));
        let score = self.dot(&features) - penalty;
        let mut full = assignment.clone();
        for c in &self.components {
            full.entry(c.name.clone()).or_insert(None);
        }
        Ok(Interpretation {
            assignment: full,
            score,
            feature_vector: features,
        })
    }

    /// Copy with one relation's weight block zeroed.
    pub fn with_block_zeroed(&self, relation: usize) -> Self {
        let mut m = self.clone();
        for i in self.block_range(relation) {
            m.weights[i] = T::zero();
        }
        m
    }

    /// Copy with one relation (and its weight block) removed; components,
    /// penalties and threshold are kept.
    pub fn without_relation(&self, relation: usize) -> Self {
        let range = self.block_range(relation);
        let mut m = self.clone();
        m.relations.remove(relation);
        m.weights.drain(range);
        m
    }

    pub fn is_positive(&self, score: T) -> bool {
        match self.threshold {
            Some(t) => score > t,
            None => score > T::zero(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = ModelFileRef {
            format_version: MODEL_FORMAT_VERSION,
            model: self,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    /// Parses and validates a model file.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile<T> = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Format(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let model = file.model;
        model
            .validate()
            .map_err(|d| ModelError::Invalid(d.iter().map(|x| x.to_string()).collect()))?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Format(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
struct ModelFileRef<'a, T> {
    format_version: u32,
    #[serde(flatten)]
    model: &'a InterpretationModel<T>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
struct ModelFile<T> {
    format_version: u32,
    #[serde(flatten)]
    model: InterpretationModel<T>,
}

/// Component names of the reference "hug" configuration.
pub mod hug {
    pub const TORSO_2: &str = "torso-region-2";
    pub const TORSO_1: &str = "torso-region-1";
    pub const BACK: &str = "back-contour";
    pub const ARM_1: &str = "arm-contour-1";
    pub const ARM_2: &str = "arm-contour-2";
    pub const PALM: &str = "palm-region";
    pub const FACE_1: &str = "face-region-1";
    pub const FACE_2: &str = "face-region-2";

    /// Component order is also the beam-search order: large regions first.
    pub const COMPONENTS: [&str; 8] = [TORSO_2, TORSO_1, BACK, PALM, ARM_1, ARM_2, FACE_1, FACE_2];
}

/// Structure of the shipped "hug" model, with zero weights.
pub fn hug_structure<T: Scalar>() -> InterpretationModel<T> {
    use hug::*;
    use PrimitiveKind::*;
    use RelationKind::*;
    let components = vec![
        ComponentSpec::required(TORSO_2, Region),
        ComponentSpec::required(TORSO_1, Region),
        ComponentSpec::required(BACK, Contour),
        ComponentSpec::required(PALM, Region),
        ComponentSpec::required(ARM_1, Contour),
        ComponentSpec::required(ARM_2, Contour),
        ComponentSpec::optional(FACE_1, Region),
        ComponentSpec::optional(FACE_2, Region),
    ];
    // saturates for any region of a few pixels: an always-present torso
    // makes this a constant, uninformative feature
    let decoy = RelationParams {
        area_scale: T::lit(1e-3),
        ..RelationParams::default()
    };
    let relations = vec![
        RelationSpec::new(Exists, &[ARM_1]),
        RelationSpec::new(Exists, &[ARM_2]),
        RelationSpec::new(Touch, &[PALM, TORSO_2]),
        RelationSpec::new(Relpos, &[PALM, TORSO_2]),
        RelationSpec::new(Bounds, &[BACK, TORSO_2]),
        RelationSpec::new(Continuity, &[ARM_1, ARM_2]),
        RelationSpec::new(Shape, &[PALM]),
        RelationSpec::new(Exists, &[TORSO_1]).with_params(decoy),
        RelationSpec::new(Exists, &[FACE_1]),
        RelationSpec::new(Exists, &[FACE_2]),
        // anchoring relations between the arm, the palm and both bodies
        RelationSpec::new(Relpos, &[TORSO_1, TORSO_2]),
        RelationSpec::new(Relpos, &[TORSO_2, BACK]),
        RelationSpec::new(Relpos, &[ARM_1, ARM_2]),
        RelationSpec::new(Touch, &[ARM_1, PALM]),
        RelationSpec::new(Touch, &[ARM_2, PALM]),
        RelationSpec::new(Shape, &[TORSO_2]),
        RelationSpec::new(Shape, &[TORSO_1]),
        RelationSpec::new(Touch, &[ARM_1, TORSO_1]),
        RelationSpec::new(Touch, &[ARM_2, TORSO_1]),
        RelationSpec::new(Relpos, &[ARM_1, PALM]),
        RelationSpec::new(Relpos, &[ARM_2, PALM]),
    ];
    InterpretationModel::new("hug", components, relations)
}
