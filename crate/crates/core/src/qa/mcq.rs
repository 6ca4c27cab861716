use rand::seq::SliceRandom;

use super::{fill, AnswerKey, Mcq, Options, QaError, TemplateCatalog};
use crate::rng;
use crate::scene::{Relation, RelationFact, Scene};
use crate::taskgen::{format_ratio, Motion, Ratio, ScaleChainFacts, SpatialImage, TaskFacts};

/// `a`, `a and b`, `a, b and c`.
pub(super) fn and_list(names: &[String]) -> String {
    match names.split_last() {
        None => String::new(),
        Some((last, [])) => last.clone(),
        Some((last, rest)) => format!("{} and {last}", rest.join(", ")),
    }
}

/// `image1`, `image1 and image2`, `image1, image2 and image3`.
pub fn image_list(images: &[usize]) -> String {
    and_list(&images.iter().map(|k| format!("image{k}")).collect::<Vec<_>>())
}

/// Image order as option text, e.g. `image2, image3, image1`.
pub fn order_text(images: &[usize]) -> String {
    images.iter().map(|k| format!("image{k}")).collect::<Vec<_>>().join(", ")
}

pub fn spatial_option_text(catalog: &TemplateCatalog, fact: &RelationFact, scene: &Scene) -> Result<String, QaError> {
    let t = &catalog.spatial;
    let subject = scene.label(fact.subject).to_string();
    let object = scene.label(fact.object).to_string();
    match (fact.relation, fact.view) {
        (Relation::OccludesInView, Some(v)) => fill(
            t.phrase("option_occlusion")?,
            &[("subject", subject), ("object", object), ("view", v.name().into())],
        ),
        (r, _) => fill(
            t.phrase("option_axis")?,
            &[("subject", subject), ("object", object), ("relation", r.phrase().into())],
        ),
    }
}

/// Wrong multipliers: m·2/3, m·3/2, each link ratio alone, m·2, m/2, m·3,
/// m/3, keeping the first three distinct values that differ from m.
pub fn numeric_distractors(facts: &ScaleChainFacts) -> Result<Vec<Ratio>, QaError> {
    let m = facts.multiplier;
    let mut candidates = vec![m * Ratio::new(2, 3), m * Ratio::new(3, 2)];
    candidates.extend(facts.links.iter().map(|l| l.ratio));
    candidates.extend([
        m * Ratio::from_integer(2),
        m / Ratio::from_integer(2),
        m * Ratio::from_integer(3),
        m / Ratio::from_integer(3),
    ]);
    let mut out: Vec<Ratio> = Vec::with_capacity(3);
    for c in candidates {
        if c != m && !out.contains(&c) {
            out.push(c);
            if out.len() == 3 {
                return Ok(out);
            }
        }
    }
    Err(QaError::DistractorCollision)
}

pub(super) fn motion_word(m: Motion) -> &'static str {
    match m {
        Motion::Linear => "steadily",
        Motion::Piecewise => "with one change of course",
    }
}

/// Question text, correct option text and three distractor texts.
fn parts(facts: &TaskFacts, catalog: &TemplateCatalog, template: usize, seed: u64) -> Result<(String, String, Vec<String>), QaError> {
    let category = facts.category();
    let t = catalog.category(category);
    let question = t
        .questions
        .get(template)
        .ok_or(QaError::UnknownTemplate { category, id: template })?;
    match facts {
        TaskFacts::Spatial(f) => {
            let views: Vec<usize> = f
                .images
                .iter()
                .enumerate()
                .filter(|(_, i)| matches!(i, SpatialImage::Scene { .. }))
                .map(|(k, _)| k + 1)
                .collect();
            let q = fill(
                question,
                &[
                    ("subject", f.scene.label(f.queried.subject).into()),
                    ("object", f.scene.label(f.queried.object).into()),
                    ("view_images", image_list(&views)),
                ],
            )?;
            let correct = spatial_option_text(catalog, &f.queried, &f.scene)?;
            let wrong = f
                .distractors
                .iter()
                .map(|d| spatial_option_text(catalog, d, &f.scene))
                .collect::<Result<_, _>>()?;
            Ok((q, correct, wrong))
        }
        TaskFacts::Sequential(f) => {
            let n = f.positions.len();
            let q = fill(
                question,
                &[
                    ("object", f.object.label.clone()),
                    ("count", n.to_string()),
                    ("motion_word", motion_word(f.motion).into()),
                    ("heading", f.heading.name().into()),
                ],
            )?;
            let option = |order: &[usize]| fill(t.phrase("option")?, &[("order", order_text(order))]);
            let chrono = f.chronological_images();
            let identity: Vec<usize> = (1..=n).collect();
            let mut rng = rng::stream(seed, &[6]);
            let mut wrong_orders: Vec<Vec<usize>> = Vec::new();
            // n >= 3 leaves at least four other permutations.
            while wrong_orders.len() < 3 {
                let mut p = identity.clone();
                p.shuffle(&mut rng);
                if p != identity && p != chrono && !wrong_orders.contains(&p) {
                    wrong_orders.push(p);
                }
            }
            let wrong = wrong_orders.iter().map(|p| option(p)).collect::<Result<_, _>>()?;
            Ok((q, option(&chrono)?, wrong))
        }
        TaskFacts::Analytical(f) => {
            let links: Vec<usize> = f.links.iter().map(|l| l.image).collect();
            let q = fill(
                question,
                &[
                    ("source", f.query.source.clone()),
                    ("target", f.query.target.clone()),
                    ("link_images", image_list(&links)),
                ],
            )?;
            let option = |r: &Ratio| fill(t.phrase("option")?, &[("value", format_ratio(r))]);
            let wrong = numeric_distractors(f)?.iter().map(option).collect::<Result<_, _>>()?;
            Ok((q, option(&f.multiplier)?, wrong))
        }
    }
}

/// Question with four shuffled options, exactly one of them correct.
pub fn build_mcq(facts: &TaskFacts, catalog: &TemplateCatalog, template: usize, seed: u64) -> Result<Mcq, QaError> {
    let (question, correct, wrong) = parts(facts, catalog, template, seed)?;
    let mut texts: Vec<(bool, String)> = std::iter::once((true, correct))
        .chain(wrong.into_iter().map(|w| (false, w)))
        .collect();
    if texts.len() != 4 || (0..4).any(|i| (i + 1..4).any(|j| texts[i].1 == texts[j].1)) {
        return Err(QaError::DistractorCollision);
    }
    texts.shuffle(&mut rng::stream(seed, &[5]));
    let answer = texts.iter().position(|(ok, _)| *ok).and_then(AnswerKey::from_index).expect("four options");
    let options: [String; 4] = std::array::from_fn(|i| std::mem::take(&mut texts[i].1));
    Ok(Mcq {
        question,
        options: Options(options),
        answer,
        template,
    })
}
