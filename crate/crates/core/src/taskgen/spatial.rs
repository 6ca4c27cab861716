use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::render::{project, rasterize, RasterImage, ViewProjection, Window, WINDOW_MARGIN};
use crate::rng;
use crate::scene::{generate_scene, spatial_relations, Relation, RelationFact, Scene, SceneSpec, View};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpatialSpec {
    pub scene: SceneSpec,
    /// Total images; views beyond the two or three full-scene views show a
    /// single primitive.
    pub images: usize,
}

impl Default for SpatialSpec {
    fn default() -> Self {
        SpatialSpec {
            scene: SceneSpec::default(),
            images: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpatialImage {
    /// The whole scene from one view.
    Scene { view: View },
    /// One primitive alone, same window as the full views.
    Isolated { id: u32, view: View },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialTaskFacts {
    pub scene: Scene,
    /// Full-scene projections shown as images, in image order.
    pub views: Vec<ViewProjection>,
    pub images: Vec<SpatialImage>,
    pub queried: RelationFact,
    pub distractors: Vec<RelationFact>,
}

/// World axis compared by a fact; occlusion compares its view's depth axis.
fn fact_axis(f: &RelationFact) -> usize {
    match (f.relation.axis(), f.view) {
        (Some(a), _) => a,
        (None, Some(View::Front)) => 1,
        (None, Some(View::Side)) => 0,
        (None, _) => 2,
    }
}

/// Views whose image plane shows the fact.
pub(crate) fn revealing_views(f: &RelationFact) -> Vec<View> {
    match (f.relation, f.view) {
        (Relation::OccludesInView, Some(v)) => vec![v],
        _ => View::ALL
            .into_iter()
            .filter(|v| {
                let plane = match v {
                    View::Front => [0, 2],
                    View::Side => [1, 2],
                    View::Top => [0, 1],
                };
                plane.contains(&fact_axis(f))
            })
            .collect(),
    }
}

pub fn gen_spatial(spec: &SpatialSpec, seed: u64) -> Result<SpatialTaskFacts, TaskError> {
    if spec.images < 2 {
        return Err(TaskError::InvalidSpec("spatial tasks need at least 2 images".into()));
    }
    let scene = generate_scene(&spec.scene, rng::derive_seed(seed, &[1]))?;
    spatial_task_from_scene(scene, spec.images, seed)
}

/// Build spatial facts over a given scene.
pub fn spatial_task_from_scene(
    scene: Scene,
    image_count: usize,
    seed: u64,
) -> Result<SpatialTaskFacts, TaskError> {
    if image_count < 2 {
        return Err(TaskError::InvalidSpec("spatial tasks need at least 2 images".into()));
    }
    let mut rng = rng::stream(seed, &[2]);
    let facts = spatial_relations(&scene);
    let queried = *facts.choose(&mut rng).ok_or(TaskError::NoRelationAvailable)?;

    // Distractors: the contrary fact plus two false facts on the other axes.
    let contrary = queried.contrary();
    let axis = fact_axis(&queried);
    let mut false_other: Vec<RelationFact> = Relation::AXIS
        .into_iter()
        .filter(|r| r.axis() != Some(axis))
        .map(|r| RelationFact::axis(queried.subject, queried.object, r))
        .filter(|f| !facts.contains(f) && *f != contrary)
        .collect();
    false_other.shuffle(&mut rng);
    let mut distractors = vec![contrary];
    distractors.extend(false_other.into_iter().take(2));
    debug_assert_eq!(distractors.len(), 3);

    let revealing = revealing_views(&queried);
    let must = *revealing.choose(&mut rng).expect("every fact has a revealing view");
    let n_views = rng.gen_range(2..=3).min(image_count);
    let mut others: Vec<View> = View::ALL.into_iter().filter(|v| *v != must).collect();
    others.shuffle(&mut rng);
    let mut chosen: Vec<View> = std::iter::once(must).chain(others).take(n_views).collect();
    chosen.sort();

    let mut images: Vec<SpatialImage> = chosen.iter().map(|&view| SpatialImage::Scene { view }).collect();
    let mut ids: Vec<u32> = scene.primitives.iter().map(|p| p.id).collect();
    ids.shuffle(&mut rng);
    // Queried objects are shown on their own first; each (object, view)
    // pair appears at most once before any repeats.
    ids.sort_by_key(|id| !(*id == queried.subject || *id == queried.object));
    let views: Vec<Vec<View>> = ids
        .iter()
        .map(|_| {
            let mut v = View::ALL.to_vec();
            v.shuffle(&mut rng);
            v
        })
        .collect();
    let pairs: Vec<SpatialImage> = (0..3)
        .flat_map(|round| {
            ids.iter()
                .zip(&views)
                .map(move |(&id, v)| SpatialImage::Isolated { id, view: v[round] })
        })
        .collect();
    let extra = image_count - images.len();
    images.extend((0..extra).map(|k| pairs[k % pairs.len()]));
    let views = chosen.iter().map(|&v| project(&scene, v)).collect();
    Ok(SpatialTaskFacts {
        scene,
        views,
        images,
        queried,
        distractors,
    })
}

impl SpatialTaskFacts {
    pub fn render_images(&self, size: u32) -> Result<Vec<RasterImage>, TaskError> {
        self.images
            .iter()
            .map(|img| {
                let (scene, view) = match *img {
                    SpatialImage::Scene { view } => (self.scene.clone(), view),
                    SpatialImage::Isolated { id, view } => (
                        Scene {
                            primitives: self.scene.get(id).into_iter().cloned().collect(),
                            bounds: self.scene.bounds,
                        },
                        view,
                    ),
                };
                let window = Window::for_scene(&self.scene, view, WINDOW_MARGIN);
                Ok(rasterize(&project(&scene, view), size, size, window)?)
            })
            .collect()
    }

    /// 1-based image indices in which primitive `id` is visible as a region.
    pub fn images_showing(&self, id: u32) -> Vec<usize> {
        self.images
            .iter()
            .enumerate()
            .filter(|(_, img)| match img {
                SpatialImage::Scene { .. } => true,
                SpatialImage::Isolated { id: other, .. } => *other == id,
            })
            .map(|(k, _)| k + 1)
            .collect()
    }
}
