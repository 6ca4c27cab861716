//! Synthetic multi-image interleaved reasoning data.
//!
//! Procedurally generated scenes, motion sequences and scale chains are
//! rendered to images, turned into four-option questions with five-step
//! reasoning annotations, filtered by difficulty and staged for curriculum
//! fine-tuning. An evaluation harness scores model predictions.

pub mod curriculum;
pub mod eval;
pub mod geometry;
pub mod jsonl;
pub mod pipeline;
pub mod qa;
pub mod render;
pub mod rng;
pub mod scene;
pub mod taskgen;
