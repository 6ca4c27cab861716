//! 3D scenes of cubes, cylinders and cones, and the spatial-relation facts
//! derived from their coordinates.

use std::collections::HashSet;
use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::footprint;
use crate::rng;

/// Coordinate differences at or below this are ties and produce no facts.
pub const TIE_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_ATTEMPT_BUDGET: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("placed {placed} of {requested} primitives before exhausting {attempts} attempts")]
    PlacementExhausted {
        placed: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cube,
    Cylinder,
    Cone,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Cube, Shape::Cylinder, Shape::Cone];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Cylinder => "cylinder",
            Shape::Cone => "cone",
        }
    }

    pub fn is_cone(self) -> bool {
        self == Shape::Cone
    }
}

/// Fixed eight-colour palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Purple,
    Orange,
    Cyan,
    Gray,
}

impl Color {
    pub const PALETTE: [Color; 8] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Yellow,
        Color::Purple,
        Color::Orange,
        Color::Cyan,
        Color::Gray,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
            Color::Orange => "orange",
            Color::Cyan => "cyan",
            Color::Gray => "gray",
        }
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Red => [220, 40, 40],
            Color::Green => [40, 170, 60],
            Color::Blue => [40, 80, 220],
            Color::Yellow => [235, 200, 30],
            Color::Purple => [140, 60, 180],
            Color::Orange => [245, 130, 20],
            Color::Cyan => [30, 190, 200],
            Color::Gray => [120, 120, 120],
        }
    }
}

/// Per-shape extents. Cylinders and cones stand upright along +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dims {
    Edge { edge: f64 },
    Round { radius: f64, height: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub id: u32,
    pub shape: Shape,
    pub center: [f64; 3],
    pub dims: Dims,
    pub color: Color,
    pub label: String,
}

impl Primitive {
    pub fn half_extents(&self) -> [f64; 3] {
        match self.dims {
            Dims::Edge { edge } => [edge / 2.0; 3],
            Dims::Round { radius, height } => [radius, radius, height / 2.0],
        }
    }

    pub fn aabb(&self) -> Aabb {
        let h = self.half_extents();
        let c = self.center;
        Aabb {
            min: [c[0] - h[0], c[1] - h[1], c[2] - h[2]],
            max: [c[0] + h[0], c[1] + h[1], c[2] + h[2]],
        }
    }

    fn check(&self) -> Result<(), SceneError> {
        let ok = match (self.shape, self.dims) {
            (Shape::Cube, Dims::Edge { edge }) => edge > 0.0 && edge.is_finite(),
            (Shape::Cylinder | Shape::Cone, Dims::Round { radius, height }) => {
                radius > 0.0 && height > 0.0 && radius.is_finite() && height.is_finite()
            }
            _ => false,
        };
        if !ok || self.center.iter().any(|v| !v.is_finite()) {
            return Err(SceneError::InvalidScene(format!(
                "primitive {} has invalid dimensions",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn cube(lo: f64, hi: f64) -> Self {
        Aabb {
            min: [lo; 3],
            max: [hi; 3],
        }
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| other.min[k] >= self.min[k] && other.max[k] <= self.max[k])
    }

    /// Euclidean gap between two boxes, or `None` when their interiors
    /// intersect.
    pub fn gap(&self, other: &Aabb) -> Option<f64> {
        let gaps: [f64; 3] =
            std::array::from_fn(|k| (other.min[k] - self.max[k]).max(self.min[k] - other.max[k]));
        if gaps.iter().all(|&g| g < 0.0) {
            return None;
        }
        Some(gaps.iter().map(|g| g.max(0.0).powi(2)).sum::<f64>().sqrt())
    }

    pub fn size(&self) -> [f64; 3] {
        std::array::from_fn(|k| self.max[k] - self.min[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    pub bounds: Aabb,
}

impl Scene {
    pub fn get(&self, id: u32) -> Option<&Primitive> {
        self.primitives.iter().find(|p| p.id == id)
    }

    pub fn label(&self, id: u32) -> &str {
        self.get(id).map(|p| p.label.as_str()).unwrap_or("?")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let mut ids = HashSet::new();
        let mut labels = HashSet::new();
        for p in &self.primitives {
            p.check()?;
            if !ids.insert(p.id) {
                return Err(SceneError::InvalidScene(format!("duplicate id {}", p.id)));
            }
            if !labels.insert(p.label.as_str()) {
                return Err(SceneError::InvalidScene(format!("duplicate label {:?}", p.label)));
            }
            if !self.bounds.contains(&p.aabb()) {
                return Err(SceneError::InvalidScene(format!(
                    "primitive {} leaves the scene bounds",
                    p.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtentRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeWeights {
    pub cube: f64,
    pub cylinder: f64,
    pub cone: f64,
}

/// Parameters for [`generate_scene`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub count: CountRange,
    pub shape_weights: ShapeWeights,
    /// Minimum Euclidean gap between any two bounding boxes.
    pub min_separation: f64,
    pub bounds: Aabb,
    /// Cube edge, cylinder/cone height and diameter are drawn from this range.
    pub extent: ExtentRange,
    pub attempt_budget: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            count: CountRange { min: 3, max: 5 },
            shape_weights: ShapeWeights {
                cube: 1.0,
                cylinder: 1.0,
                cone: 1.0,
            },
            min_separation: 0.5,
            bounds: Aabb::cube(0.0, 10.0),
            extent: ExtentRange { min: 1.0, max: 2.5 },
            attempt_budget: DEFAULT_ATTEMPT_BUDGET,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidSpec(m.to_string()));
        if self.count.min < 2 {
            return bad("count.min must be at least 2");
        }
        if self.count.min > self.count.max {
            return bad("count.min exceeds count.max");
        }
        if !(self.min_separation >= 0.0 && self.min_separation.is_finite()) {
            return bad("min_separation must be a non-negative number");
        }
        let w = &self.shape_weights;
        let ws = [w.cube, w.cylinder, w.cone];
        if ws.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || ws.iter().sum::<f64>() <= 0.0 {
            return bad("shape weights must be non-negative with a positive sum");
        }
        if self.bounds.size().iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return bad("bounds must have positive size on every axis");
        }
        if !(self.extent.min > 0.0 && self.extent.min <= self.extent.max && self.extent.max.is_finite()) {
            return bad("extent range must satisfy 0 < min <= max");
        }
        if self.extent.min > self.bounds.size().iter().cloned().fold(f64::INFINITY, f64::min) {
            return bad("extent.min does not fit inside the bounds");
        }
        if self.attempt_budget == 0 {
            return bad("attempt_budget must be positive");
        }
        Ok(())
    }
}

fn draw_dims<R: Rng>(shape: Shape, lo: f64, hi: f64, rng: &mut R) -> Dims {
    let mut u = |a: f64, b: f64| if a < b { rng.gen_range(a..=b) } else { a };
    match shape {
        Shape::Cube => Dims::Edge { edge: u(lo, hi) },
        Shape::Cylinder => Dims::Round {
            radius: u(lo / 2.0, hi / 2.0),
            height: u(lo, hi),
        },
        // Cones are never wider than they are tall, which keeps their
        // triangle silhouettes well sampled on the raster.
        Shape::Cone => {
            let height = u(lo, hi);
            Dims::Round {
                radius: u(lo / 2.0, height / 2.0),
                height,
            }
        }
    }
}

/// Place primitives by seeded rejection sampling.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<Scene, SceneError> {
    spec.validate()?;
    let mut rng = rng::stream(seed, &[0x5CE4E]);
    let requested = rng.gen_range(spec.count.min..=spec.count.max);
    let w = &spec.shape_weights;
    let shape_dist = WeightedIndex::new([w.cube, w.cylinder, w.cone])
        .map_err(|e| SceneError::InvalidSpec(e.to_string()))?;
    let smallest_side = spec.bounds.size().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = spec.extent.max.min(smallest_side);
    let lo = spec.extent.min;

    let mut placed: Vec<Primitive> = Vec::with_capacity(requested);
    let mut labels: HashSet<String> = HashSet::new();
    let mut attempts = 0;
    while placed.len() < requested {
        if attempts >= spec.attempt_budget {
            return Err(SceneError::PlacementExhausted {
                placed: placed.len(),
                requested,
                attempts,
            });
        }
        attempts += 1;
        let shape = Shape::ALL[shape_dist.sample(&mut rng)];
        let dims = draw_dims(shape, lo, hi, &mut rng);
        let mut prim = Primitive {
            id: placed.len() as u32,
            shape,
            center: [0.0; 3],
            dims,
            color: Color::Red,
            label: String::new(),
        };
        let half = prim.half_extents();
        prim.center = std::array::from_fn(|k| {
            let a = spec.bounds.min[k] + half[k];
            let b = spec.bounds.max[k] - half[k];
            if a < b {
                rng.gen_range(a..=b)
            } else {
                (spec.bounds.min[k] + spec.bounds.max[k]) / 2.0
            }
        });
        let bbox = prim.aabb();
        let clear = placed.iter().all(|q| {
            bbox.gap(&q.aabb())
                .is_some_and(|g| g >= spec.min_separation)
        });
        if !clear {
            continue;
        }
        let free: Vec<Color> = Color::PALETTE
            .iter()
            .copied()
            .filter(|c| !labels.contains(&format!("{} {}", c.name(), shape.name())))
            .collect();
        let (color, label) = if free.is_empty() {
            let color = Color::PALETTE[rng.gen_range(0..Color::PALETTE.len())];
            let base = format!("{} {}", color.name(), shape.name());
            let n = (2..).find(|n| !labels.contains(&format!("{base} {n}"))).unwrap();
            (color, format!("{base} {n}"))
        } else {
            let color = free[rng.gen_range(0..free.len())];
            (color, format!("{} {}", color.name(), shape.name()))
        };
        prim.color = color;
        prim.label = label.clone();
        labels.insert(label);
        placed.push(prim);
    }
    let scene = Scene {
        primitives: placed,
        bounds: spec.bounds,
    };
    debug_assert!(scene.validate().is_ok());
    Ok(scene)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Front,
    Side,
    Top,
}

impl View {
    pub const ALL: [View; 3] = [View::Front, View::Side, View::Top];

    pub fn name(self) -> &'static str {
        match self {
            View::Front => "front",
            View::Side => "side",
            View::Top => "top",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    LeftOf,
    RightOf,
    Above,
    Below,
    InFrontOf,
    Behind,
    OccludesInView,
}

impl Relation {
    pub const AXIS: [Relation; 6] = [
        Relation::LeftOf,
        Relation::RightOf,
        Relation::Above,
        Relation::Below,
        Relation::InFrontOf,
        Relation::Behind,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::LeftOf => "left-of",
            Relation::RightOf => "right-of",
            Relation::Above => "above",
            Relation::Below => "below",
            Relation::InFrontOf => "in-front-of",
            Relation::Behind => "behind",
            Relation::OccludesInView => "occludes-in-view",
        }
    }

    /// Plain-English phrase used in question text.
    pub fn phrase(self) -> &'static str {
        match self {
            Relation::LeftOf => "to the left of",
            Relation::RightOf => "to the right of",
            Relation::Above => "above",
            Relation::Below => "below",
            Relation::InFrontOf => "in front of",
            Relation::Behind => "behind",
            Relation::OccludesInView => "partly hiding",
        }
    }

    /// World axis an axis relation compares, `None` for occlusion.
    pub fn axis(self) -> Option<usize> {
        match self {
            Relation::LeftOf | Relation::RightOf => Some(0),
            Relation::InFrontOf | Relation::Behind => Some(1),
            Relation::Above | Relation::Below => Some(2),
            Relation::OccludesInView => None,
        }
    }

    /// Same-axis opposite; occlusion is its own inverse with roles swapped.
    pub fn inverse(self) -> Relation {
        match self {
            Relation::LeftOf => Relation::RightOf,
            Relation::RightOf => Relation::LeftOf,
            Relation::Above => Relation::Below,
            Relation::Below => Relation::Above,
            Relation::InFrontOf => Relation::Behind,
            Relation::Behind => Relation::InFrontOf,
            Relation::OccludesInView => Relation::OccludesInView,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationFact {
    pub subject: u32,
    pub object: u32,
    pub relation: Relation,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub view: Option<View>,
}

impl RelationFact {
    pub fn axis(subject: u32, object: u32, relation: Relation) -> Self {
        RelationFact {
            subject,
            object,
            relation,
            view: None,
        }
    }

    pub fn occludes(subject: u32, object: u32, view: View) -> Self {
        RelationFact {
            subject,
            object,
            relation: Relation::OccludesInView,
            view: Some(view),
        }
    }

    /// The fact that cannot hold together with this one: the opposite
    /// relation on the same axis, or for occlusion the roles swapped.
    pub fn contrary(&self) -> Self {
        match self.relation {
            Relation::OccludesInView => RelationFact {
                subject: self.object,
                object: self.subject,
                ..*self
            },
            r => RelationFact::axis(self.subject, self.object, r.inverse()),
        }
    }

    /// Canonical text form with labels, e.g. `right-of(red cone, blue cube)`.
    pub fn describe(&self, scene: &Scene) -> String {
        let base = format!(
            "{}({}, {})",
            self.relation.name(),
            scene.label(self.subject),
            scene.label(self.object)
        );
        match self.view {
            Some(v) => format!("{base} [{} view]", v.name()),
            None => base,
        }
    }
}

impl fmt::Display for RelationFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(#{}, #{})", self.relation.name(), self.subject, self.object)?;
        if let Some(v) = self.view {
            write!(f, " [{}]", v.name())?;
        }
        Ok(())
    }
}

/// All relation facts over ordered pairs of distinct primitives.
///
/// Axis facts compare centres with [`TIE_TOLERANCE`]. Occlusion facts are
/// emitted per view when the silhouettes overlap with positive area and the
/// subject is strictly nearer along that view's depth axis.
pub fn spatial_relations(scene: &Scene) -> Vec<RelationFact> {
    let mut facts = Vec::new();
    let prims = &scene.primitives;
    for a in prims {
        for b in prims {
            if a.id == b.id {
                continue;
            }
            for (axis, neg, pos) in [
                (0, Relation::LeftOf, Relation::RightOf),
                (1, Relation::InFrontOf, Relation::Behind),
                (2, Relation::Below, Relation::Above),
            ] {
                let d = a.center[axis] - b.center[axis];
                if d < -TIE_TOLERANCE {
                    facts.push(RelationFact::axis(a.id, b.id, neg));
                } else if d > TIE_TOLERANCE {
                    facts.push(RelationFact::axis(a.id, b.id, pos));
                }
            }
            for view in View::ALL {
                let (fa, da) = footprint(a, view);
                let (fb, db) = footprint(b, view);
                if db - da > TIE_TOLERANCE && fa.overlaps(&fb) {
                    facts.push(RelationFact::occludes(a.id, b.id, view));
                }
            }
        }
    }
    facts
}
