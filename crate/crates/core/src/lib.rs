//! Structured interpretation of minimal image configurations.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod error;
pub mod geometry;
pub mod image;
pub mod primitives;
pub mod scalar;
pub mod relations;
pub mod model;
pub mod search;
pub mod evaluation;
pub mod synthgen;
pub mod learning;
pub mod fullimage;
pub mod config;
pub mod render;

pub use image::Image;

pub type Real = f64;
pub type Model = model::InterpretationModel<Real>;
pub type Interpretation = model::Interpretation<Real>;
pub type Assignment = model::Assignment<Real>;
pub type Primitive = primitives::Primitive<Real>;
pub type PrimitiveSet = primitives::PrimitiveSet<Real>;
pub type GlyphSample = synthgen::GlyphSample<Real>;
pub type Detection = fullimage::DetectedConfiguration<Real>;
pub type GlobalInterpretation = fullimage::GlobalInterpretation<Real>;
