use super::mcq::{and_list, motion_word};
use super::{fill, image_list, order_text, Mcq, QaError, ReasoningSteps, TemplateCatalog};
use crate::geometry::footprint;
use crate::scene::{Relation, View};
use crate::taskgen::{
    format_ratio, inverse_permutation, revealing_views, ScaleChainFacts, ScaleImage, SequenceTaskFacts, SpatialImage,
    SpatialTaskFacts, TaskFacts,
};

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn axis_name(axis: usize) -> &'static str {
    match axis {
        0 => "left-right position x",
        1 => "depth y",
        _ => "height z",
    }
}

fn spatial(f: &SpatialTaskFacts, mcq: &Mcq, catalog: &TemplateCatalog) -> Result<ReasoningSteps, QaError> {
    let t = &catalog.spatial;
    let q = f.queried;
    let subject = f.scene.label(q.subject).to_string();
    let object = f.scene.label(q.object).to_string();
    let summary = fill(t.phrase("summary")?, &[("subject", subject.clone()), ("object", object.clone())])?;

    let objects: Vec<String> = f.scene.primitives.iter().map(|p| format!("the {}", p.label)).collect();
    let objects = and_list(&objects);
    let caption = f
        .images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let k = (i + 1).to_string();
            match *img {
                SpatialImage::Scene { view } => fill(
                    t.phrase("caption_scene")?,
                    &[("k", k), ("view", view.name().into()), ("objects", objects.clone())],
                ),
                SpatialImage::Isolated { id, view } => fill(
                    t.phrase("caption_isolated")?,
                    &[("k", k), ("label", f.scene.label(id).into()), ("view", view.name().into())],
                ),
            }
        })
        .collect::<Result<Vec<_>, _>>()?
        .join(" ");

    let items = [q.subject, q.object]
        .iter()
        .map(|&id| {
            let p = f.scene.get(id).expect("queried ids exist");
            fill(
                t.phrase("text2region_item")?,
                &[
                    ("label", p.label.clone()),
                    ("color", p.color.name().into()),
                    ("shape", p.shape.name().into()),
                    ("images", image_list(&f.images_showing(id))),
                ],
            )
        })
        .collect::<Result<Vec<_>, _>>()?
        .join("; ");
    let text2region = fill(t.phrase("text2region")?, &[("items", items)])?;

    let revealing = revealing_views(&q);
    let (k, view) = f
        .images
        .iter()
        .enumerate()
        .find_map(|(i, img)| match *img {
            SpatialImage::Scene { view } if revealing.contains(&view) => Some((i + 1, view)),
            _ => None,
        })
        .expect("a revealing view is always shown");
    let s = f.scene.get(q.subject).expect("queried ids exist");
    let o = f.scene.get(q.object).expect("queried ids exist");
    let mut vars = vec![
        ("k", k.to_string()),
        ("view", view.name().to_string()),
        ("subject", subject),
        ("object", object),
        ("fact", q.describe(&f.scene)),
    ];
    let region2region = match q.relation {
        Relation::OccludesInView => {
            let view = q.view.unwrap_or(View::Front);
            vars.push(("a", num(footprint(s, view).1)));
            vars.push(("b", num(footprint(o, view).1)));
            fill(t.phrase("region2region_occlusion")?, &vars)?
        }
        r => {
            let axis = r.axis().expect("axis relation");
            vars.push(("axis_name", axis_name(axis).into()));
            vars.push(("a", num(s.center[axis])));
            vars.push(("b", num(o.center[axis])));
            fill(t.phrase("region2region_axis")?, &vars)?
        }
    };
    let conclusion = fill(
        t.phrase("conclusion")?,
        &[("answer_text", mcq.answer_text().into()), ("key", mcq.answer.to_string())],
    )?;
    Ok(ReasoningSteps {
        summary,
        caption,
        text2region,
        region2region,
        conclusion,
    })
}

fn sequential(f: &SequenceTaskFacts, mcq: &Mcq, catalog: &TemplateCatalog) -> Result<ReasoningSteps, QaError> {
    let t = &catalog.sequential;
    let n = f.positions.len();
    let object = f.object.label.clone();
    let heading = f.heading.name().to_string();
    let summary = fill(
        t.phrase("summary")?,
        &[
            ("count", n.to_string()),
            ("object", object.clone()),
            ("motion_word", motion_word(f.motion).into()),
            ("heading", heading.clone()),
        ],
    )?;
    let landmark_list = and_list(&f.landmarks.iter().map(|l| format!("the {}", l.label)).collect::<Vec<_>>());
    let (caption_extra, fixed) = if f.landmarks.is_empty() {
        (String::new(), String::new())
    } else {
        (
            fill(t.phrase("caption_landmarks")?, &[("landmark_list", landmark_list.clone())])?,
            fill(t.phrase("text2region_landmarks")?, &[("landmark_list", landmark_list)])?,
        )
    };
    let caption = f
        .shuffle
        .iter()
        .enumerate()
        .map(|(i, &frame)| {
            fill(
                t.phrase("caption")?,
                &[
                    ("k", (i + 1).to_string()),
                    ("object", object.clone()),
                    ("x", f.positions[frame][0].to_string()),
                    ("y", f.positions[frame][1].to_string()),
                    ("landmarks", caption_extra.clone()),
                ],
            )
        })
        .collect::<Result<Vec<_>, _>>()?
        .join(" ");
    let all: Vec<usize> = (1..=n).collect();
    let text2region = fill(
        t.phrase("text2region")?,
        &[
            ("object", object.clone()),
            ("color", f.object.color.name().into()),
            ("images", image_list(&all)),
            ("fixed", fixed),
        ],
    )?;
    let inv = inverse_permutation(&f.shuffle);
    let steps = f
        .offsets
        .iter()
        .enumerate()
        .map(|(frame, off)| {
            fill(
                t.phrase("region2region_step")?,
                &[
                    ("a", (inv[frame] + 1).to_string()),
                    ("b", (inv[frame + 1] + 1).to_string()),
                    ("dx", off[0].to_string()),
                    ("dy", off[1].to_string()),
                ],
            )
        })
        .collect::<Result<Vec<_>, _>>()?
        .join(", ");
    let region2region = fill(t.phrase("region2region")?, &[("steps", steps), ("heading", heading.clone())])?;
    let conclusion = fill(
        t.phrase("conclusion")?,
        &[
            ("object", object),
            ("heading", heading),
            ("order", order_text(&f.chronological_images())),
            ("key", mcq.answer.to_string()),
        ],
    )?;
    Ok(ReasoningSteps {
        summary,
        caption,
        text2region,
        region2region,
        conclusion,
    })
}

fn analytical(f: &ScaleChainFacts, mcq: &Mcq, catalog: &TemplateCatalog) -> Result<ReasoningSteps, QaError> {
    let t = &catalog.analytical;
    let source = f.query.source.clone();
    let target = f.query.target.clone();
    let summary = fill(t.phrase("summary")?, &[("source", source.clone()), ("target", target.clone())])?;
    let captions = f
        .layout()
        .into_iter()
        .enumerate()
        .map(|(i, img)| {
            let k = (i + 1).to_string();
            match img {
                ScaleImage::Link(l) => {
                    let (left, right) = f.links[l].left_right();
                    fill(
                        t.phrase("caption_link")?,
                        &[("k", k), ("left", left.into()), ("right", right.into())],
                    )
                }
                ScaleImage::Single(obj) => fill(
                    t.phrase("caption_single")?,
                    &[("k", k), ("label", f.objects[obj].label.clone())],
                ),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let items = f
        .objects
        .iter()
        .map(|o| {
            fill(
                t.phrase("text2region_item")?,
                &[
                    ("label", o.label.clone()),
                    ("color", o.color.name().into()),
                    ("images", image_list(&f.images_showing(&o.label))),
                ],
            )
        })
        .collect::<Result<Vec<_>, _>>()?
        .join("; ");
    let text2region = fill(t.phrase("text2region")?, &[("items", items)])?;
    let links = f
        .links
        .iter()
        .map(|l| {
            fill(
                t.phrase("region2region_link")?,
                &[
                    ("k", l.image.to_string()),
                    ("larger", l.larger.clone()),
                    ("smaller", l.smaller.clone()),
                    ("ratio", format_ratio(&l.ratio)),
                ],
            )
        })
        .collect::<Result<Vec<_>, _>>()?
        .join("; ");
    let region2region = fill(t.phrase("region2region")?, &[("links", links)])?;
    let product = f.links.iter().map(|l| format_ratio(&l.ratio)).collect::<Vec<_>>().join(" x ");
    let conclusion = fill(
        t.phrase("conclusion")?,
        &[
            ("product", product),
            ("multiplier", format_ratio(&f.multiplier)),
            ("source", source),
            ("target", target),
            ("key", mcq.answer.to_string()),
        ],
    )?;
    Ok(ReasoningSteps {
        summary,
        caption: captions.join(" "),
        text2region,
        region2region,
        conclusion,
    })
}

/// Five grounded reasoning steps for an instance.
pub fn annotate_reasoning(facts: &TaskFacts, mcq: &Mcq, catalog: &TemplateCatalog) -> Result<ReasoningSteps, QaError> {
    match facts {
        TaskFacts::Spatial(f) => spatial(f, mcq, catalog),
        TaskFacts::Sequential(f) => sequential(f, mcq, catalog),
        TaskFacts::Analytical(f) => analytical(f, mcq, catalog),
    }
}
