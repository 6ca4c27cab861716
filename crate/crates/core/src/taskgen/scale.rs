use num_rational::Ratio as NumRatio;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::render::{project, rasterize, RasterImage, Window};
use crate::rng;
use crate::scene::{Aabb, Color, Dims, ExtentRange, Primitive, Scene, Shape, View};

pub type Ratio = NumRatio<u64>;

/// Everyday objects drawn as coloured silhouettes.
pub const OBJECT_CATALOG: &[(&str, Shape, Color)] = &[
    ("palm", Shape::Cube, Color::Orange),
    ("cola can", Shape::Cylinder, Color::Red),
    ("truck", Shape::Cube, Color::Blue),
    ("traffic cone", Shape::Cone, Color::Orange),
    ("mug", Shape::Cylinder, Color::Gray),
    ("book", Shape::Cube, Color::Green),
    ("lamp post", Shape::Cylinder, Color::Gray),
    ("pine tree", Shape::Cone, Color::Green),
    ("water bottle", Shape::Cylinder, Color::Cyan),
    ("house", Shape::Cube, Color::Yellow),
    ("chess pawn", Shape::Cone, Color::Purple),
    ("barrel", Shape::Cylinder, Color::Orange),
    ("crate", Shape::Cube, Color::Yellow),
    ("church spire", Shape::Cone, Color::Gray),
    ("candle", Shape::Cylinder, Color::Yellow),
    ("suitcase", Shape::Cube, Color::Purple),
    ("party hat", Shape::Cone, Color::Red),
    ("water tower", Shape::Cylinder, Color::Blue),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainObject {
    pub label: String,
    pub shape: Shape,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleLink {
    /// 1-based image showing this pair.
    pub image: usize,
    pub smaller: String,
    pub larger: String,
    /// Height of `larger` over height of `smaller`.
    pub ratio: Ratio,
    pub smaller_on_left: bool,
}

impl ScaleLink {
    /// Labels in left-to-right drawing order.
    pub fn left_right(&self) -> (&str, &str) {
        if self.smaller_on_left {
            (&self.smaller, &self.larger)
        } else {
            (&self.larger, &self.smaller)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleQuery {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleChainFacts {
    /// Chain order, smallest first: link i compares objects i and i+1.
    pub objects: Vec<ChainObject>,
    pub links: Vec<ScaleLink>,
    /// Object index shown alone in each image that holds no link, in
    /// image order.
    pub fillers: Vec<usize>,
    pub query: ScaleQuery,
    /// How many times taller the target is than the source.
    pub multiplier: Ratio,
}

/// What one image of a scale chain shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleImage {
    /// Index into `links`.
    Link(usize),
    /// Index into `objects`.
    Single(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleSpec {
    /// Chain length L (number of pairwise images).
    pub links: usize,
    pub ratio: ExtentRange,
    pub max_denominator: u64,
    /// Total images; extra images show single chain objects.
    pub images: usize,
}

impl Default for ScaleSpec {
    fn default() -> Self {
        ScaleSpec {
            links: 2,
            ratio: ExtentRange { min: 1.25, max: 5.0 },
            max_denominator: 8,
            images: 6,
        }
    }
}

fn admissible_ratios(range: ExtentRange, max_den: u64) -> Vec<Ratio> {
    let mut out: Vec<Ratio> = Vec::new();
    for den in 1..=max_den {
        let first = (range.min * den as f64).ceil().max(1.0) as u64;
        let last = (range.max * den as f64).floor() as u64;
        for num in first..=last {
            let r = Ratio::new(num, den);
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    out.sort();
    out
}

pub fn gen_scale_chain(spec: &ScaleSpec, seed: u64) -> Result<ScaleChainFacts, TaskError> {
    if spec.links < 2 {
        return Err(TaskError::InvalidSpec("scale chains need at least 2 links".into()));
    }
    if spec.links + 1 > OBJECT_CATALOG.len() {
        return Err(TaskError::InvalidSpec("scale chain longer than the object catalog".into()));
    }
    if spec.images < spec.links {
        return Err(TaskError::InvalidSpec("fewer images than chain links".into()));
    }
    if !(spec.ratio.min >= 1.0 && spec.ratio.min <= spec.ratio.max) || spec.max_denominator == 0 {
        return Err(TaskError::InvalidSpec(
            "ratio range must satisfy 1 <= min <= max with a positive denominator bound".into(),
        ));
    }
    let choices = admissible_ratios(spec.ratio, spec.max_denominator);
    if choices.is_empty() {
        return Err(TaskError::InvalidSpec("no rational ratio fits the range".into()));
    }
    let mut rng = rng::stream(seed, &[4]);
    let objects: Vec<ChainObject> = OBJECT_CATALOG
        .choose_multiple(&mut rng, spec.links + 1)
        .map(|&(label, shape, color)| ChainObject {
            label: label.to_string(),
            shape,
            color,
        })
        .collect();
    let mut slots: Vec<usize> = (1..=spec.images).collect();
    slots.shuffle(&mut rng);
    let mut multiplier = Ratio::from_integer(1);
    let mut links = Vec::with_capacity(spec.links);
    for i in 0..spec.links {
        // Prefer ratios that keep the running product's denominator small.
        let clean: Vec<Ratio> = choices
            .iter()
            .copied()
            .filter(|r| (multiplier * r).denom() <= &spec.max_denominator)
            .collect();
        let ratio = *clean.choose(&mut rng).or_else(|| choices.choose(&mut rng)).unwrap();
        multiplier *= ratio;
        links.push(ScaleLink {
            image: slots[i],
            smaller: objects[i].label.clone(),
            larger: objects[i + 1].label.clone(),
            ratio,
            smaller_on_left: rng.gen_bool(0.5),
        });
    }
    let mut order: Vec<usize> = (0..objects.len()).collect();
    order.shuffle(&mut rng);
    let fillers = (0..spec.images - spec.links).map(|k| order[k % order.len()]).collect();
    Ok(ScaleChainFacts {
        query: ScaleQuery {
            source: objects[0].label.clone(),
            target: objects[spec.links].label.clone(),
        },
        objects,
        links,
        fillers,
        multiplier,
    })
}

/// Exact decimal when it needs at most three places, otherwise `a/b`.
pub fn format_ratio(r: &Ratio) -> String {
    let (n, d) = (*r.numer(), *r.denom());
    if d == 1 {
        return n.to_string();
    }
    if 1000 % d == 0 {
        let scaled = n * (1000 / d);
        let s = format!("{}.{:03}", scaled / 1000, scaled % 1000);
        return s.trim_end_matches('0').to_string();
    }
    format!("{n}/{d}")
}

// Link images share one layout: the ground is z = 0, the larger object is
// 1.0 tall and each object is centred in its half of the image.
const LINK_WINDOW: Window = Window {
    min: [-1.25, -0.625],
    max: [1.25, 1.875],
};

fn silhouette(obj: &ChainObject, id: u32, x: f64, height: f64) -> Primitive {
    let dims = match obj.shape {
        Shape::Cube => Dims::Edge { edge: height },
        Shape::Cylinder => Dims::Round {
            radius: 0.3 * height,
            height,
        },
        Shape::Cone => Dims::Round {
            radius: 0.4 * height,
            height,
        },
    };
    Primitive {
        id,
        shape: obj.shape,
        center: [x, 0.0, height / 2.0],
        dims,
        color: obj.color,
        label: obj.label.clone(),
    }
}

/// Centre of pixel column `i`, so silhouettes (cone apexes in particular)
/// are symmetric about a sampled column.
fn column_center(i: u32, size: u32) -> f64 {
    LINK_WINDOW.min[0] + (i as f64 + 0.5) * ((LINK_WINDOW.max[0] - LINK_WINDOW.min[0]) / size as f64)
}

fn render_front(primitives: Vec<Primitive>, size: u32) -> Result<RasterImage, TaskError> {
    let scene = Scene {
        primitives,
        bounds: Aabb {
            min: [-1.25, -1.0, 0.0],
            max: [1.25, 1.0, 1.875],
        },
    };
    Ok(rasterize(&project(&scene, View::Front), size, size, LINK_WINDOW)?)
}

/// Two objects side by side, heights in the link's ratio.
pub fn render_link(
    link: &ScaleLink,
    smaller: &ChainObject,
    larger: &ChainObject,
    size: u32,
) -> Result<RasterImage, TaskError> {
    let small_h = 1.0 / (*link.ratio.numer() as f64 / *link.ratio.denom() as f64);
    let left = column_center(size / 4, size);
    let right = column_center(3 * size / 4, size);
    let (xs, xl) = if link.smaller_on_left { (left, right) } else { (right, left) };
    render_front(
        vec![silhouette(smaller, 0, xs, small_h), silhouette(larger, 1, xl, 1.0)],
        size,
    )
}

pub fn render_chain_object(obj: &ChainObject, size: u32) -> Result<RasterImage, TaskError> {
    render_front(vec![silhouette(obj, 0, column_center(size / 2, size), 1.0)], size)
}

impl ScaleChainFacts {
    pub fn object(&self, label: &str) -> Option<&ChainObject> {
        self.objects.iter().find(|o| o.label == label)
    }

    /// Content of each image in presentation order.
    pub fn layout(&self) -> Vec<ScaleImage> {
        let n = self.links.len() + self.fillers.len();
        let mut out: Vec<Option<ScaleImage>> = vec![None; n];
        for (i, l) in self.links.iter().enumerate() {
            out[l.image - 1] = Some(ScaleImage::Link(i));
        }
        let mut fillers = self.fillers.iter();
        out.into_iter()
            .map(|slot| {
                slot.unwrap_or_else(|| ScaleImage::Single(*fillers.next().expect("one filler per free image")))
            })
            .collect()
    }

    pub fn render_images(&self, size: u32) -> Result<Vec<RasterImage>, TaskError> {
        self.layout()
            .into_iter()
            .map(|img| match img {
                ScaleImage::Link(i) => {
                    let link = &self.links[i];
                    let small = self.object(&link.smaller).expect("link objects are in the chain");
                    let large = self.object(&link.larger).expect("link objects are in the chain");
                    render_link(link, small, large, size)
                }
                ScaleImage::Single(k) => render_chain_object(&self.objects[k], size),
            })
            .collect()
    }

    /// 1-based images in which the object with `label` appears.
    pub fn images_showing(&self, label: &str) -> Vec<usize> {
        self.layout()
            .into_iter()
            .enumerate()
            .filter(|(_, img)| match *img {
                ScaleImage::Link(i) => self.links[i].smaller == label || self.links[i].larger == label,
                ScaleImage::Single(k) => self.objects[k].label == label,
            })
            .map(|(k, _)| k + 1)
            .collect()
    }
}
