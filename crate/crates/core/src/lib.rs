//! Incremental coreference resolution over fixed-size chunks.

pub mod analysis;
pub mod annotation;
pub mod corpus;
pub mod decode;
pub mod metrics;
pub mod state;
pub mod synth;
