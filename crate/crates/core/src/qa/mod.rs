//! Multiple-choice questions, five-step reasoning chains and assembled
//! instances.

mod mcq;
mod reasoning;
mod templates;

use serde::de::Deserializer;
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::{image_file_name, ImageFormat};
use crate::scene::Relation;
use crate::taskgen::{Category, ScaleImage, SpatialImage, TaskFacts};

pub use mcq::{build_mcq, image_list, numeric_distractors, order_text, spatial_option_text};
pub use reasoning::annotate_reasoning;
pub use templates::{fill, CategoryTemplates, TemplateCatalog};

#[derive(Debug, Error)]
pub enum QaError {
    #[error("could not find three distinct distractors")]
    DistractorCollision,
    #[error("no {category} question template with id {id}")]
    UnknownTemplate { category: Category, id: usize },
    #[error("template error: {0}")]
    Template(String),
    #[error("invalid instance {id}: {reason}")]
    Invalid { id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnswerKey {
    A,
    B,
    C,
    D,
}

impl AnswerKey {
    pub const ALL: [AnswerKey; 4] = [AnswerKey::A, AnswerKey::B, AnswerKey::C, AnswerKey::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<AnswerKey> {
        Self::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_letter(c: char) -> Option<AnswerKey> {
        match c.to_ascii_uppercase() {
            'A' => Some(AnswerKey::A),
            'B' => Some(AnswerKey::B),
            'C' => Some(AnswerKey::C),
            'D' => Some(AnswerKey::D),
            _ => None,
        }
    }
}

impl std::fmt::Display for AnswerKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Four option texts, serialized as `{"A": .., "B": .., "C": .., "D": ..}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Options(pub [String; 4]);

impl Options {
    pub fn get(&self, key: AnswerKey) -> &str {
        &self.0[key.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (AnswerKey, &str)> {
        AnswerKey::ALL.into_iter().map(move |k| (k, self.get(k)))
    }

    pub fn distinct(&self) -> bool {
        (0..4).all(|i| (i + 1..4).all(|j| self.0[i] != self.0[j]))
    }
}

impl Serialize for Options {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(4))?;
        for (k, v) in self.iter() {
            m.serialize_entry(&k, v)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for Options {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(rename = "A")]
            a: String,
            #[serde(rename = "B")]
            b: String,
            #[serde(rename = "C")]
            c: String,
            #[serde(rename = "D")]
            d: String,
        }
        let r = Raw::deserialize(d)?;
        Ok(Options([r.a, r.b, r.c, r.d]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mcq {
    pub question: String,
    pub options: Options,
    pub answer: AnswerKey,
    /// Index of the question phrasing in the catalog.
    pub template: usize,
}

impl Mcq {
    pub fn answer_text(&self) -> &str {
        self.options.get(self.answer)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningSteps {
    pub summary: String,
    pub caption: String,
    pub text2region: String,
    pub region2region: String,
    pub conclusion: String,
}

impl ReasoningSteps {
    pub const NAMES: [&'static str; 5] = ["summary", "caption", "text2region", "region2region", "conclusion"];

    /// Steps s1..s5 in order.
    pub fn steps(&self) -> [&str; 5] {
        [
            &self.summary,
            &self.caption,
            &self.text2region,
            &self.region2region,
            &self.conclusion,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Segment {
    Text { text: String },
    Image { index: usize, path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
    pub template: usize,
    pub facts: TaskFacts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub category: Category,
    pub task: String,
    /// Interleaved lead-in texts and images, ending with the question.
    pub segments: Vec<Segment>,
    /// Image paths relative to the dataset root, image1 first.
    pub images: Vec<String>,
    pub question: String,
    pub options: Options,
    pub answer: AnswerKey,
    pub reasoning: ReasoningSteps,
    pub provenance: Provenance,
}

pub struct InstanceContext<'a> {
    pub catalog: &'a TemplateCatalog,
    pub format: ImageFormat,
    pub seed: u64,
}

pub fn instance_id(index: usize) -> String {
    format!("inst-{index:06}")
}

pub fn task_name(facts: &TaskFacts) -> &'static str {
    match facts {
        TaskFacts::Spatial(f) if f.queried.relation == Relation::OccludesInView => "occlusion",
        TaskFacts::Spatial(_) => "relative position",
        TaskFacts::Sequential(_) => "temporal ordering",
        TaskFacts::Analytical(_) => "scale chain",
    }
}

fn lead_ins(facts: &TaskFacts, catalog: &TemplateCatalog) -> Result<Vec<String>, QaError> {
    let t = catalog.category(facts.category());
    let mut out = Vec::with_capacity(facts.image_count());
    match facts {
        TaskFacts::Spatial(f) => {
            for (i, img) in f.images.iter().enumerate() {
                let k = (i + 1).to_string();
                out.push(match *img {
                    SpatialImage::Scene { view } => fill(
                        t.phrase("lead_in_scene")?,
                        &[("k", k), ("view", view.name().into())],
                    )?,
                    SpatialImage::Isolated { id, view } => fill(
                        t.phrase("lead_in_isolated")?,
                        &[("k", k), ("label", f.scene.label(id).into()), ("view", view.name().into())],
                    )?,
                });
            }
        }
        TaskFacts::Sequential(f) => {
            for i in 0..f.positions.len() {
                out.push(fill(
                    t.phrase("lead_in")?,
                    &[("k", (i + 1).to_string()), ("object", f.object.label.clone())],
                )?);
            }
        }
        TaskFacts::Analytical(f) => {
            for (i, img) in f.layout().into_iter().enumerate() {
                let k = (i + 1).to_string();
                out.push(match img {
                    ScaleImage::Link(l) => {
                        let (left, right) = f.links[l].left_right();
                        fill(
                            t.phrase("lead_in_link")?,
                            &[("k", k), ("left", left.into()), ("right", right.into())],
                        )?
                    }
                    ScaleImage::Single(obj) => fill(
                        t.phrase("lead_in_single")?,
                        &[("k", k), ("label", f.objects[obj].label.clone())],
                    )?,
                });
            }
        }
    }
    Ok(out)
}

/// Combine facts, question and reasoning into a validated instance.
pub fn assemble_instance(
    id: &str,
    facts: &TaskFacts,
    mcq: Mcq,
    reasoning: ReasoningSteps,
    ctx: &InstanceContext<'_>,
) -> Result<Instance, QaError> {
    let n = facts.image_count();
    let images: Vec<String> = (1..=n)
        .map(|k| format!("images/{}", image_file_name(id, k, ctx.format)))
        .collect();
    let mut segments = Vec::with_capacity(2 * n + 1);
    for (k, text) in lead_ins(facts, ctx.catalog)?.into_iter().enumerate() {
        segments.push(Segment::Text { text });
        segments.push(Segment::Image {
            index: k + 1,
            path: images[k].clone(),
        });
    }
    segments.push(Segment::Text {
        text: mcq.question.clone(),
    });
    let inst = Instance {
        id: id.to_string(),
        category: facts.category(),
        task: task_name(facts).to_string(),
        segments,
        images,
        question: mcq.question,
        options: mcq.options,
        answer: mcq.answer,
        reasoning,
        provenance: Provenance {
            generator: format!("interleaf {}", env!("CARGO_PKG_VERSION")),
            seed: ctx.seed,
            template: mcq.template,
            facts: facts.clone(),
        },
    };
    inst.validate()?;
    Ok(inst)
}

/// Whether `text` mentions `image{k}` as a whole token.
pub fn mentions_image(text: &str, k: usize) -> bool {
    let needle = format!("image{k}");
    text.match_indices(&needle).any(|(i, _)| {
        let before = text[..i].chars().next_back();
        let after = text[i + needle.len()..].chars().next();
        !before.is_some_and(|c| c.is_alphanumeric()) && !after.is_some_and(|c| c.is_ascii_digit())
    })
}

impl Instance {
    pub fn validate(&self) -> Result<(), QaError> {
        let fail = |reason: String| {
            Err(QaError::Invalid {
                id: self.id.clone(),
                reason,
            })
        };
        if self.id.is_empty() {
            return fail("empty id".into());
        }
        let n = self.images.len();
        if n < 2 {
            return fail(format!("{n} images, need at least 2"));
        }
        let mut seen = 0;
        for (i, seg) in self.segments.iter().enumerate() {
            match seg {
                Segment::Image { index, path } => {
                    if *index != seen + 1 || *index > n {
                        return fail(format!("segment {i}: image{index} out of order"));
                    }
                    if *path != self.images[index - 1] {
                        return fail(format!("segment {i}: path does not match image{index}"));
                    }
                    seen = *index;
                }
                Segment::Text { text } if text.trim().is_empty() => {
                    return fail(format!("segment {i}: empty text"));
                }
                Segment::Text { .. } => {}
            }
        }
        if seen != n {
            return fail(format!("segments reference {seen} of {n} images"));
        }
        match self.segments.last() {
            Some(Segment::Text { text }) if *text == self.question => {}
            _ => return fail("segments must end with the question".into()),
        }
        if self.question.trim().is_empty() {
            return fail("empty question".into());
        }
        if self.options.0.iter().any(|o| o.trim().is_empty()) {
            return fail("empty option".into());
        }
        if !self.options.distinct() {
            return fail("options not distinct".into());
        }
        for (name, text) in ReasoningSteps::NAMES.iter().zip(self.reasoning.steps()) {
            if text.trim().is_empty() {
                return fail(format!("reasoning.{name} empty"));
            }
            if text.contains('\n') {
                return fail(format!("reasoning.{name} spans several lines"));
            }
        }
        for k in 1..=n {
            if !mentions_image(&self.reasoning.caption, k) && !mentions_image(&self.reasoning.text2region, k) {
                return fail(format!("image{k} not referenced by caption or text2region"));
            }
        }
        if !self.reasoning.conclusion.contains(self.options.get(self.answer)) {
            return fail("conclusion does not state the answer".into());
        }
        Ok(())
    }

    /// Prompt text with `<imageK>` placeholders followed by lettered options.
    pub fn prompt(&self) -> String {
        let mut lines: Vec<String> = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Text { text } => text.clone(),
                Segment::Image { index, .. } => format!("<image{index}>"),
            })
            .collect();
        lines.extend(self.options.iter().map(|(k, o)| format!("{k}. {o}")));
        lines.join("\n")
    }
}
