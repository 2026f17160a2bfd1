//! Presence traces: template geometry, segmentation into phases, the
//! descriptive model of breaks in presence, aggregation across participants,
//! and persistence of session records.

pub mod analysis;
pub mod descriptive_model;
pub mod fixtures;
pub mod persistence;
pub mod segmentation;
pub mod trace_model;
