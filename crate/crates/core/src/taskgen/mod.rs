//! Ground-truthed task facts for the three categories.
//!
//! Generators only produce facts and know how to render their images; the
//! `qa` module turns facts into questions and reasoning text.

mod scale;
mod sequence;
mod spatial;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::{RasterImage, RenderError};
use crate::scene::SceneError;

pub use scale::{
    format_ratio, gen_scale_chain, render_chain_object, render_link, ScaleQuery,
    ChainObject, Ratio, ScaleChainFacts, ScaleImage, ScaleLink, ScaleSpec, OBJECT_CATALOG,
};
pub use sequence::{gen_sequence, inverse_permutation, Heading, Motion, SequenceSpec, SequenceTaskFacts};
pub(crate) use spatial::revealing_views;
pub use spatial::{gen_spatial, spatial_task_from_scene, SpatialImage, SpatialSpec, SpatialTaskFacts};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("scene yields no relation facts")]
    NoRelationAvailable,
    #[error("invalid task spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Spatial,
    Sequential,
    Analytical,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Spatial, Category::Sequential, Category::Analytical];

    pub fn name(self) -> &'static str {
        match self {
            Category::Spatial => "spatial",
            Category::Sequential => "sequential",
            Category::Analytical => "analytical",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Facts for one instance of any category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "category", rename_all = "lowercase")]
pub enum TaskFacts {
    Spatial(SpatialTaskFacts),
    Sequential(SequenceTaskFacts),
    Analytical(ScaleChainFacts),
}

impl TaskFacts {
    pub fn category(&self) -> Category {
        match self {
            TaskFacts::Spatial(_) => Category::Spatial,
            TaskFacts::Sequential(_) => Category::Sequential,
            TaskFacts::Analytical(_) => Category::Analytical,
        }
    }

    pub fn image_count(&self) -> usize {
        match self {
            TaskFacts::Spatial(f) => f.images.len(),
            TaskFacts::Sequential(f) => f.positions.len(),
            TaskFacts::Analytical(f) => f.links.len() + f.fillers.len(),
        }
    }

    /// Render every image in presentation order (index 0 is image1).
    pub fn render_images(&self, size: u32) -> Result<Vec<RasterImage>, TaskError> {
        match self {
            TaskFacts::Spatial(f) => f.render_images(size),
            TaskFacts::Sequential(f) => f.render_images(size),
            TaskFacts::Analytical(f) => f.render_images(size),
        }
    }
}
