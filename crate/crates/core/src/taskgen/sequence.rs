use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::render::{project, rasterize, RasterImage, Window, WINDOW_MARGIN};
use crate::rng;
use crate::scene::{Aabb, Color, Dims, ExtentRange, Primitive, Scene, Shape, View};

/// Positions live on a 1/16 world-unit grid so every offset, sum and
/// difference is exact in f64.
const GRID: f64 = 16.0;
const PLANE: f64 = 10.0;
const PUCK_RADIUS: f64 = 0.4;

fn snap(v: f64) -> f64 {
    (v * GRID).round() / GRID
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    Linear,
    /// Two constant-velocity legs; the second leg turns by at most 60°.
    Piecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceSpec {
    /// Number of frames, one image each.
    pub frames: usize,
    pub motion: Motion,
    /// World units per frame.
    pub speed: ExtentRange,
    /// Static context objects drawn in every frame.
    pub landmarks: usize,
    /// Chance of piecewise motion when generating datasets; `motion` is
    /// used when this is `None`.
    pub piecewise_probability: Option<f64>,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        SequenceSpec {
            frames: 6,
            motion: Motion::Linear,
            speed: ExtentRange { min: 0.75, max: 1.75 },
            landmarks: 2,
            piecewise_probability: Some(0.3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heading {
    East,
    West,
    North,
    South,
}

impl Heading {
    /// Dominant direction of a top-view velocity (x east, y north).
    pub fn of(v: [f64; 2]) -> Heading {
        if v[0].abs() >= v[1].abs() {
            if v[0] >= 0.0 {
                Heading::East
            } else {
                Heading::West
            }
        } else if v[1] >= 0.0 {
            Heading::North
        } else {
            Heading::South
        }
    }

    /// Signed distance travelled along the heading.
    pub fn progress(self, p: [f64; 2]) -> f64 {
        match self {
            Heading::East => p[0],
            Heading::West => -p[0],
            Heading::North => p[1],
            Heading::South => -p[1],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Heading::East => "east (right)",
            Heading::West => "west (left)",
            Heading::North => "north (up)",
            Heading::South => "south (down)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTaskFacts {
    pub motion: Motion,
    /// Chronological positions on the top-view plane.
    pub positions: Vec<[f64; 2]>,
    /// `offsets[t] = positions[t + 1] - positions[t]`.
    pub offsets: Vec<[f64; 2]>,
    /// `shuffle[k]` is the chronological frame shown as image k+1.
    pub shuffle: Vec<usize>,
    pub heading: Heading,
    pub object: Primitive,
    pub landmarks: Vec<Primitive>,
}

pub fn inverse_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (k, &t) in p.iter().enumerate() {
        inv[t] = k;
    }
    inv
}

fn velocity<R: Rng>(speed: f64, rng: &mut R) -> [f64; 2] {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut v = [snap(speed * theta.cos()), snap(speed * theta.sin())];
    if v == [0.0, 0.0] {
        v[0] = 1.0 / GRID;
    }
    v
}

fn trajectory(v1: [f64; 2], v2: [f64; 2], brk: usize, frames: usize) -> Vec<[f64; 2]> {
    let mut pos = vec![[0.0, 0.0]];
    for t in 1..frames {
        let v = if t <= brk { v1 } else { v2 };
        let p = pos[t - 1];
        pos.push([p[0] + v[0], p[1] + v[1]]);
    }
    pos
}

pub fn gen_sequence(spec: &SequenceSpec, seed: u64) -> Result<SequenceTaskFacts, TaskError> {
    if spec.frames < 3 {
        return Err(TaskError::InvalidSpec("sequences need at least 3 frames".into()));
    }
    if !(spec.speed.min > 0.0 && spec.speed.min <= spec.speed.max) {
        return Err(TaskError::InvalidSpec("speed range must satisfy 0 < min <= max".into()));
    }
    let mut rng = rng::stream(seed, &[3]);
    let frames = spec.frames;
    let lo = PUCK_RADIUS + 0.1;
    let hi = PLANE - PUCK_RADIUS - 0.1;
    // Keep the whole path inside the plane.
    let cap = 0.9 * (hi - lo) / (frames - 1) as f64;
    let speed = rng.gen_range(spec.speed.min..=spec.speed.max).min(cap);
    let v1 = velocity(speed, &mut rng);
    let (v2, brk) = match spec.motion {
        Motion::Linear => (v1, frames),
        Motion::Piecewise => {
            let turn = rng.gen_range(-std::f64::consts::FRAC_PI_3..=std::f64::consts::FRAC_PI_3);
            let scale = rng.gen_range(0.5..=1.5);
            let (s, c) = turn.sin_cos();
            let mut v2 = [
                snap(scale * (c * v1[0] - s * v1[1])),
                snap(scale * (s * v1[0] + c * v1[1])),
            ];
            // Both legs must advance along the announced heading.
            if Heading::of(v1).progress(v2) <= 0.0 {
                v2 = v1;
            }
            (v2, rng.gen_range(1..frames - 1))
        }
    };
    let (mut v1, mut v2) = (v1, v2);
    let mut rel = trajectory(v1, v2, brk, frames);
    let span = |rel: &[[f64; 2]], k: usize| {
        let lo = rel.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = rel.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    while (0..2).any(|k| {
        let (a, b) = span(&rel, k);
        b - a > hi - lo
    }) {
        v1 = [snap(v1[0] / 2.0), snap(v1[1] / 2.0)];
        v2 = [snap(v2[0] / 2.0), snap(v2[1] / 2.0)];
        rel = trajectory(v1, v2, brk, frames);
    }
    let start: [f64; 2] = std::array::from_fn(|k| {
        let (a, b) = span(&rel, k);
        let first = ((lo - a) * GRID).ceil() as i64;
        let last = ((hi - b) * GRID).floor() as i64;
        rng.gen_range(first..=last.max(first)) as f64 / GRID
    });
    let positions: Vec<[f64; 2]> = rel.iter().map(|p| [start[0] + p[0], start[1] + p[1]]).collect();
    let offsets = positions
        .windows(2)
        .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
        .collect();

    let identity: Vec<usize> = (0..frames).collect();
    let mut shuffle = identity.clone();
    while shuffle == identity {
        shuffle.shuffle(&mut rng);
    }

    let mut colors = Color::PALETTE.to_vec();
    colors.shuffle(&mut rng);
    let object = Primitive {
        id: 0,
        shape: Shape::Cylinder,
        center: [positions[0][0], positions[0][1], 1.5],
        dims: Dims::Round {
            radius: PUCK_RADIUS,
            height: 0.5,
        },
        color: colors[0],
        label: format!("{} puck", colors[0].name()),
    };
    let landmarks = (0..spec.landmarks)
        .map(|i| {
            let color = colors[1 + i % (colors.len() - 1)];
            let edge = rng.gen_range(0.6..=1.2);
            Primitive {
                id: 1 + i as u32,
                shape: Shape::Cube,
                center: [
                    rng.gen_range(edge / 2.0..=PLANE - edge / 2.0),
                    rng.gen_range(edge / 2.0..=PLANE - edge / 2.0),
                    edge / 2.0,
                ],
                dims: Dims::Edge { edge },
                color,
                label: format!("{} block", color.name()),
            }
        })
        .collect();

    Ok(SequenceTaskFacts {
        motion: spec.motion,
        positions,
        offsets,
        shuffle,
        heading: Heading::of(v1),
        object,
        landmarks,
    })
}

impl SequenceTaskFacts {
    /// Chronological frame order as 1-based image numbers.
    pub fn chronological_images(&self) -> Vec<usize> {
        inverse_permutation(&self.shuffle).iter().map(|k| k + 1).collect()
    }

    fn frame_scene(&self, t: usize) -> Scene {
        let mut object = self.object.clone();
        object.center = [self.positions[t][0], self.positions[t][1], 1.5];
        let mut primitives = self.landmarks.clone();
        primitives.push(object);
        Scene {
            primitives,
            bounds: Aabb {
                min: [0.0, 0.0, 0.0],
                max: [PLANE, PLANE, 2.0],
            },
        }
    }

    pub fn render_images(&self, size: u32) -> Result<Vec<RasterImage>, TaskError> {
        self.shuffle
            .iter()
            .map(|&t| {
                let scene = self.frame_scene(t);
                let window = Window::for_scene(&scene, View::Top, WINDOW_MARGIN);
                Ok(rasterize(&project(&scene, View::Top), size, size, window)?)
            })
            .collect()
    }
}
