//! Run configuration covering every tunable parameter.
//!
//! Loaded from JSON. Missing keys take their defaults; unknown keys are an
//! error at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fullimage::ScanParams;
use crate::learning::TrainParams;
use crate::model::InterpretationModel;
use crate::primitives::ExtractParams;
use crate::relations::RelationParams;
use crate::scalar::Scalar;
use crate::search::SearchParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionParams {
    /// Per-step size and resolution factor.
    pub factor: f64,
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self { factor: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    /// Glyph image size.
    pub dims: (usize, usize),
    pub scene_dims: (usize, usize),
    pub scene_glyphs: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            dims: (30, 30),
            scene_dims: (crate::synthgen::SCENE_SIZE, crate::synthgen::SCENE_SIZE),
            scene_glyphs: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub extract: ExtractParams,
    pub search: SearchParams,
    pub train: TrainParams,
    pub scan: ScanParams,
    /// Re-interpret scan detections at full resolution before combining.
    pub refine: bool,
    /// Relation constants given to freshly built model structures. Relations
    /// with their own constants in the shipped structure keep them.
    pub relations: RelationParams<f64>,
    pub reduction: ReductionParams,
    pub synth: SynthParams,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(std::path::PathBuf, #[source] std::io::Error),
    #[error("invalid config: {0}")]
    Format(String),
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: Self = serde_json::from_str(text).map_err(|e| ConfigError::Format(e.to_string()))?;
        c.check()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Io(p.to_path_buf(), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Range checks that serde cannot express.
    pub fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Format(m.to_string()));
        if self.search.k == 0 {
            return bad("search.k must be at least 1");
        }
        if self.search.beam_width == 0 {
            return bad("search.beam_width must be at least 1");
        }
        let f = self.reduction.factor;
        if !(f > 0.0 && f <= 1.0) {
            return bad("reduction.factor must lie in (0, 1]");
        }
        if self.scan.stride == 0 || self.scan.window < 3 {
            return bad("scan.stride must be positive and scan.window at least 3");
        }
        if self.scan.scales.is_empty() || self.scan.scales.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return bad("scan.scales must be non-empty with every scale in (0, 1]");
        }
        if self.synth.dims.0 < 24 || self.synth.dims.1 < 24 {
            return bad("synth.dims must be at least 24x24");
        }
        Ok(())
    }

    /// The shipped hug structure with this configuration's relation
    /// constants applied to every relation that uses the defaults.
    pub fn hug_structure<T: Scalar>(&self) -> InterpretationModel<T> {
        let mut m = crate::model::hug_structure::<T>();
        let default = RelationParams::<T>::default();
        let p = RelationParams {
            tol: T::lit(self.relations.tol),
            strength_scale: T::lit(self.relations.strength_scale),
            area_scale: T::lit(self.relations.area_scale),
            bound_dist: T::lit(self.relations.bound_dist),
        };
        for r in &mut m.relations {
            if r.params == default {
                r.params = p;
            }
        }
        m
    }
}
