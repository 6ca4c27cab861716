//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on
//! any failure.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::{Duration, Instant};

use interleaf_core::curriculum::{
    classify_difficulty, parse_steps, rational_from_decimal, sample_stage_pool, stage_transform,
    CurriculumError, Difficulty, StageMode, TrialLog,
};
use interleaf_core::eval::{match_answer, score, MatchMethod, Prediction};
use interleaf_core::pipeline::{self, PipelineConfig};
use interleaf_core::qa::{spatial_option_text, AnswerKey, Instance, Options, TemplateCatalog};
use interleaf_core::render::{self, project, rasterize, ImageFormat, RasterImage, Window, WHITE, WINDOW_MARGIN};
use interleaf_core::scene::{
    generate_scene, spatial_relations, CountRange, Dims, Primitive, Relation, RelationFact, Scene, SceneSpec,
    Shape, View,
};
use interleaf_core::taskgen::{Category, Ratio, TaskFacts};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t > limit {
        return Err(format!("took {t:.1?}, limit {limit:?}"));
    }
    Ok(t)
}

fn instances(category: Category, n: usize) -> Vec<(Instance, TaskFacts)> {
    let cfg = PipelineConfig::default();
    let catalog = TemplateCatalog::builtin();
    (0..n)
        .map(|i| pipeline::build_instance(&cfg, &catalog, i, category).expect("instance builds"))
        .collect()
}

// 1 ---------------------------------------------------------------------

fn difficulty_filter() -> Check {
    let start = Instant::now();
    let threshold = rational_from_decimal(0.7).map_err(|e| e.to_string())?;
    let logs: Vec<TrialLog> = (0..=10)
        .map(|c| TrialLog {
            question_id: format!("q{c}"),
            trials: 10,
            correct: c,
        })
        .collect();
    let records = classify_difficulty(&logs, threshold).map_err(|e| e.to_string())?;
    for (c, r) in records.iter().enumerate() {
        let want = if c >= 7 { Difficulty::Simple } else { Difficulty::Challenging };
        ensure!(r.class == want, "c={c}: got {:?}", r.class);
    }
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("c=0..10 of 10, Simple iff c >= 7 ({t:.1?})"))
}

// 2 ---------------------------------------------------------------------

fn stage_partition() -> Check {
    let start = Instant::now();
    let mut all = Vec::new();
    for (k, c) in Category::ALL.iter().enumerate() {
        let n = [334, 333, 333][k];
        all.extend(instances(*c, n).into_iter().map(|(i, _)| i));
    }
    ensure!(all.len() == 1000, "built {} instances", all.len());
    for inst in &all {
        let steps: Vec<String> = inst.reasoning.steps().iter().map(|s| s.to_string()).collect();
        let q = inst.prompt();
        for k in 1..=5 {
            let s = stage_transform(inst, k, StageMode::Steps).map_err(|e| e.to_string())?;
            ensure!(s.input.starts_with(&q), "{} stage {k}: input does not start with Q", inst.id);
            let input = parse_steps(&s.input[q.len()..]);
            let target = parse_steps(&s.target);
            ensure!(
                input.len() == 5 - k && target.len() == k,
                "{} stage {k}: counts ({}, {})",
                inst.id,
                input.len(),
                target.len()
            );
            let joined: Vec<String> = input.into_iter().chain(target).map(|(_, t)| t).collect();
            ensure!(joined == steps, "{} stage {k}: steps do not reassemble", inst.id);
            if k == 5 {
                ensure!(s.input == q, "{}: stage 5 input is not the bare question", inst.id);
                for step in &steps {
                    ensure!(!s.input.contains(step.as_str()), "{}: stage 5 input leaks a step", inst.id);
                }
            }
        }
    }
    let t = within(Duration::from_secs(10), start)?;
    Ok(format!("1000 instances x 5 stages reassemble s1..s5 with counts (5-k, k) ({t:.1?})"))
}

// 3 ---------------------------------------------------------------------

fn sampling_contract() -> Check {
    let start = Instant::now();
    let frac = rational_from_decimal(0.4).map_err(|e| e.to_string())?;
    for n in 0..=1000usize {
        let pool: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        // Nearest integer to 0.4 n; 0.4 n is never a half-integer.
        let want = (0.4 * n as f64).round() as usize;
        match sample_stage_pool(&pool, frac, 17, 1) {
            Err(CurriculumError::EmptyPool) if n == 0 => continue,
            Err(e) => return Err(format!("n={n}: {e}")),
            Ok(got) => {
                ensure!(got.len() == want, "n={n}: {} ids, want {want}", got.len());
                let distinct: HashSet<&String> = got.iter().collect();
                ensure!(distinct.len() == got.len(), "n={n}: repeated id");
                ensure!(got.iter().all(|id| pool.contains(id)), "n={n}: id outside pool");
                let again = sample_stage_pool(&pool, frac, 17, 1).map_err(|e| e.to_string())?;
                ensure!(again == got, "n={n}: not deterministic");
            }
        }
    }
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("pool 0..1000, size round(0.4 n), distinct, deterministic; pool 0 -> EmptyPool ({t:.1?})"))
}

// 4 ---------------------------------------------------------------------

/// Distance along the view ray to where it enters the solid, if it hits.
fn entry_depth(p: &Primitive, view: View, u: f64, v: f64) -> Option<f64> {
    let [cx, cy, cz] = p.center;
    match (view, p.dims) {
        (_, Dims::Edge { edge }) => {
            let h = edge / 2.0;
            let (a, b, d) = match view {
                View::Front => (u - cx, v - cz, cy - h),
                View::Side => (u - cy, v - cz, cx - h),
                View::Top => (u - cx, v - cy, -(cz + h)),
            };
            (a.abs() <= h && b.abs() <= h).then_some(d)
        }
        (View::Top, Dims::Round { radius, height }) => {
            let rho = ((u - cx).powi(2) + (v - cy).powi(2)).sqrt();
            if rho > radius {
                return None;
            }
            let top = if p.shape == Shape::Cone {
                cz - height / 2.0 + height * (1.0 - rho / radius)
            } else {
                cz + height / 2.0
            };
            Some(-top)
        }
        (_, Dims::Round { radius, height }) => {
            let (lateral, centre_depth) = match view {
                View::Front => (u - cx, cy),
                _ => (u - cy, cx),
            };
            let base = cz - height / 2.0;
            if v < base || v > base + height {
                return None;
            }
            let r = if p.shape == Shape::Cone {
                radius * (base + height - v) / height
            } else {
                radius
            };
            (lateral.abs() <= r).then(|| centre_depth - (r * r - lateral * lateral).max(0.0).sqrt())
        }
    }
}

fn zbuffer(scene: &Scene, view: View, size: u32, window: Window) -> RasterImage {
    let mut img = RasterImage::filled(size, size, WHITE).unwrap();
    let sx = (window.max[0] - window.min[0]) / size as f64;
    let sy = (window.max[1] - window.min[1]) / size as f64;
    for j in 0..size {
        let v = window.max[1] - (j as f64 + 0.5) * sy;
        for i in 0..size {
            let u = window.min[0] + (i as f64 + 0.5) * sx;
            let nearest = scene
                .primitives
                .iter()
                .filter_map(|p| entry_depth(p, view, u, v).map(|d| (d, p)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((_, p)) = nearest {
                img.set(i, j, p.color.rgb());
            }
        }
    }
    img
}

/// World-space extent of lit pixel centres along each image axis.
fn lit_extent(img: &RasterImage, window: Window) -> Option<([f64; 2], [f64; 2])> {
    let s = [
        (window.max[0] - window.min[0]) / img.width as f64,
        (window.max[1] - window.min[1]) / img.height as f64,
    ];
    let mut u = [f64::INFINITY, f64::NEG_INFINITY];
    let mut v = [f64::INFINITY, f64::NEG_INFINITY];
    for j in 0..img.height {
        for i in 0..img.width {
            if img.get(i, j) != WHITE {
                let (x, y) = (
                    window.min[0] + (i as f64 + 0.5) * s[0],
                    window.max[1] - (j as f64 + 0.5) * s[1],
                );
                u = [u[0].min(x), u[1].max(x)];
                v = [v[0].min(y), v[1].max(y)];
            }
        }
    }
    u[0].is_finite().then_some((u, v))
}

/// Extra distance, at the low and high end of an image axis, over which a
/// footprint is narrower than one pixel and may light no pixel centre.
fn sampling_slack(p: &Primitive, view: View, axis: usize, px: f64) -> [f64; 2] {
    match (p.dims, view, axis) {
        (Dims::Edge { .. }, _, _) => [0.0, 0.0],
        (Dims::Round { radius, .. }, View::Top, _) => [px * px / (8.0 * radius); 2],
        (Dims::Round { radius, height }, _, 1) if p.shape == Shape::Cone => [0.0, height * px / (2.0 * radius)],
        _ => [0.0, 0.0],
    }
}

fn rendering_oracle() -> Check {
    let start = Instant::now();
    let size = 64;
    let spec = SceneSpec {
        count: CountRange { min: 2, max: 5 },
        ..SceneSpec::default()
    };
    let mut shapes = 0;
    for seed in 0..200 {
        let scene = generate_scene(&spec, seed).map_err(|e| e.to_string())?;
        ensure!(scene.primitives.len() <= 5, "seed {seed}: too many primitives");
        let mut extents = BTreeMap::new();
        for view in View::ALL {
            let window = Window::for_scene(&scene, view, WINDOW_MARGIN);
            let painted = rasterize(&project(&scene, view), size, size, window).map_err(|e| e.to_string())?;
            let oracle = zbuffer(&scene, view, size, window);
            if painted != oracle {
                let diff = (0..size * size)
                    .filter(|k| painted.get(k % size, k / size) != oracle.get(k % size, k / size))
                    .count();
                return Err(format!("seed {seed} {} view: {diff} pixels differ", view.name()));
            }
            let px = (window.max[0] - window.min[0]) / size as f64;
            for p in &scene.primitives {
                let alone = Scene {
                    primitives: vec![p.clone()],
                    bounds: scene.bounds,
                };
                let img = rasterize(&project(&alone, view), size, size, window).map_err(|e| e.to_string())?;
                if let Some(e) = lit_extent(&img, window) {
                    extents.insert((p.id, view), (e, px));
                }
            }
        }
        // front (x, z), side (y, z), top (x, y)
        let pairs = [
            (View::Front, 0, View::Top, 0, "x"),
            (View::Front, 1, View::Side, 1, "z"),
            (View::Side, 0, View::Top, 1, "y"),
        ];
        for p in &scene.primitives {
            for (va, aa, vb, ab, name) in pairs {
                let (Some((ea, px)), Some((eb, _))) = (extents.get(&(p.id, va)), extents.get(&(p.id, vb))) else {
                    continue;
                };
                let px = px.max(extents[&(p.id, vb)].1);
                let a = if aa == 0 { ea.0 } else { ea.1 };
                let b = if ab == 0 { eb.0 } else { eb.1 };
                let (lo, hi) = (sampling_slack(p, va, aa, px), sampling_slack(p, vb, ab, px));
                ensure!(
                    (a[0] - b[0]).abs() <= px + lo[0].max(hi[0]) + 1e-9
                        && (a[1] - b[1]).abs() <= px + lo[1].max(hi[1]) + 1e-9,
                    "seed {seed} primitive {}: {name} extent {:?} in {} vs {:?} in {}",
                    p.id,
                    a,
                    va.name(),
                    b,
                    vb.name()
                );
            }
            shapes += 1;
        }
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "200 scenes x 3 views at 64x64 match the depth-buffer oracle; {shapes} footprints agree across views within 1 px plus sub-pixel apex and rim slack ({t:.1?})"
    ))
}

// 5 ---------------------------------------------------------------------

/// Axis facts recomputed from centres, independently of the library.
fn axis_fact_holds(scene: &Scene, f: &RelationFact) -> Option<bool> {
    let s = scene.get(f.subject)?.center;
    let o = scene.get(f.object)?.center;
    let (axis, sign) = match f.relation {
        Relation::LeftOf => (0, -1.0),
        Relation::RightOf => (0, 1.0),
        Relation::InFrontOf => (1, -1.0),
        Relation::Behind => (1, 1.0),
        Relation::Below => (2, -1.0),
        Relation::Above => (2, 1.0),
        Relation::OccludesInView => return None,
    };
    Some(sign * (s[axis] - o[axis]) > 1e-9)
}

fn spatial_soundness() -> Check {
    let start = Instant::now();
    let catalog = TemplateCatalog::builtin();
    let mut occlusion = 0;
    for (inst, facts) in instances(Category::Spatial, 1000) {
        let TaskFacts::Spatial(f) = facts else {
            return Err(format!("{} is not spatial", inst.id));
        };
        let truth = spatial_relations(&f.scene);
        let (a, b) = (f.queried.subject, f.queried.object);
        let mut candidates = Vec::new();
        for (s, o) in [(a, b), (b, a)] {
            candidates.extend(Relation::AXIS.iter().map(|&r| RelationFact::axis(s, o, r)));
            candidates.extend(View::ALL.iter().map(|&v| RelationFact::occludes(s, o, v)));
        }
        for (key, text) in inst.options.iter() {
            let named: Vec<&RelationFact> = candidates
                .iter()
                .filter(|c| spatial_option_text(&catalog, c, &f.scene).map(|t| t == text).unwrap_or(false))
                .collect();
            ensure!(named.len() == 1, "{}: option {key} names {} facts", inst.id, named.len());
            let fact = named[0];
            let keyed = key == inst.answer;
            ensure!(
                truth.contains(fact) == keyed,
                "{}: option {key} ({}) validates={} but keyed={keyed}",
                inst.id,
                fact.describe(&f.scene),
                truth.contains(fact)
            );
            if let Some(holds) = axis_fact_holds(&f.scene, fact) {
                ensure!(holds == keyed, "{}: centre check disagrees on option {key}", inst.id);
            } else if keyed {
                occlusion += 1;
            }
        }
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "1000 instances: keyed fact holds, 3000 distractors fail ({occlusion} occlusion answers) ({t:.1?})"
    ))
}

// 6 ---------------------------------------------------------------------

fn parse_multiplier(option: &str) -> Option<Ratio> {
    let value = option.strip_suffix(" times")?;
    if let Some((n, d)) = value.split_once('/') {
        return Some(Ratio::new(n.parse().ok()?, d.parse().ok()?));
    }
    let (whole, frac) = value.split_once('.').unwrap_or((value, ""));
    let den = 10u64.pow(frac.len() as u32);
    Some(Ratio::new(format!("{whole}{frac}").parse().ok()?, den))
}

fn decode_png(path: &Path) -> Result<RasterImage, String> {
    let file = std::fs::File::open(path).map_err(|e| e.to_string())?;
    let mut reader = png::Decoder::new(std::io::BufReader::new(file)).read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("png too large")?];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    ensure!(info.color_type == png::ColorType::Rgb, "unexpected colour type {:?}", info.color_type);
    buf.truncate(info.buffer_size());
    Ok(RasterImage {
        width: info.width,
        height: info.height,
        pixels: buf,
    })
}

fn lit_rows(img: &RasterImage, cols: std::ops::Range<u32>) -> usize {
    (0..img.height)
        .filter(|&y| cols.clone().any(|x| img.get(x, y) != WHITE))
        .count()
}

fn scale_chains() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let catalog = TemplateCatalog::builtin();
    let mut lengths = BTreeMap::new();
    let mut cfg = PipelineConfig::default();
    let mut measured = 0;
    for i in 0..500 {
        let links = 2 + i % 3;
        cfg.chain_length = CountRange { min: links, max: links };
        cfg.images_per_instance = CountRange { min: links.max(4), max: 8 };
        let (inst, facts) = pipeline::build_instance(&cfg, &catalog, i, Category::Analytical).map_err(|e| e.to_string())?;
        let TaskFacts::Analytical(f) = &facts else {
            return Err(format!("{} is not analytical", inst.id));
        };
        ensure!(f.links.len() == links, "{}: {} links, want {links}", inst.id, f.links.len());
        *lengths.entry(links).or_insert(0) += 1;
        let product = f.links.iter().fold(Ratio::from_integer(1), |acc, l| acc * l.ratio);
        let keyed = parse_multiplier(inst.options.get(inst.answer)).ok_or("unparseable option")?;
        ensure!(keyed == product, "{}: keyed {keyed} vs product {product}", inst.id);
        for w in f.links.windows(2) {
            ensure!(w[0].larger == w[1].smaller, "{}: broken pivot", inst.id);
        }
        let images = facts.render_images(pipeline_size()).map_err(|e| e.to_string())?;
        for link in &f.links {
            let path = dir.path().join(format!("{}_{}.png", inst.id, link.image));
            render::emit_image(&images[link.image - 1], ImageFormat::Png, &path).map_err(|e| e.to_string())?;
            let img = decode_png(&path)?;
            let half = img.width / 2;
            let (left, right) = (lit_rows(&img, 0..half), lit_rows(&img, half..img.width));
            let (small, large) = if link.smaller_on_left { (left, right) } else { (right, left) };
            let rho = *link.ratio.numer() as f64 / *link.ratio.denom() as f64;
            ensure!(
                (large as f64 / rho - small as f64).abs() <= 2.0,
                "{} image{}: heights {large}/{small} vs ratio {rho}",
                inst.id,
                link.image
            );
            measured += 1;
        }
    }
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "500 chains (L=2/3/4: {:?}) keyed = exact product; {measured} link images within 2 px ({t:.1?})",
        lengths.values().collect::<Vec<_>>()
    ))
}

fn pipeline_size() -> u32 {
    PipelineConfig::default().raster_size
}

// 7 ---------------------------------------------------------------------

fn sequences() -> Check {
    let start = Instant::now();
    for (inst, facts) in instances(Category::Sequential, 500) {
        let TaskFacts::Sequential(f) = facts else {
            return Err(format!("{} is not sequential", inst.id));
        };
        ensure!(f.offsets.len() + 1 == f.positions.len(), "{}: offset count", inst.id);
        for (t, off) in f.offsets.iter().enumerate() {
            let want = [f.positions[t + 1][0] - f.positions[t][0], f.positions[t + 1][1] - f.positions[t][1]];
            ensure!(*off == want, "{} t={t}: offset {off:?} vs {want:?}", inst.id);
        }
        // Image k shows frame shuffle[k]; chronological order sorts images by frame.
        let mut order: Vec<usize> = (1..=f.shuffle.len()).collect();
        order.sort_by_key(|&k| f.shuffle[k - 1]);
        let text = order.iter().map(|k| format!("image{k}")).collect::<Vec<_>>().join(", ");
        ensure!(inst.options.get(inst.answer) == text, "{}: keyed {:?} vs {text:?}", inst.id, inst.options.get(inst.answer));
        let identity: Vec<usize> = (0..f.shuffle.len()).collect();
        ensure!(f.shuffle != identity, "{}: identity shuffle", inst.id);
        let progress: Vec<f64> = order.iter().map(|&k| f.heading.progress(f.positions[f.shuffle[k - 1]])).collect();
        ensure!(progress.windows(2).all(|w| w[0] < w[1]), "{}: reordered path not monotone", inst.id);
    }
    let t = within(Duration::from_secs(10), start)?;
    Ok(format!("500 instances: exact offsets, keyed order = inverse shuffle, monotone trajectory ({t:.1?})"))
}

// 8 & 9 -----------------------------------------------------------------

fn dataset_statistics(dir: &Path) -> Check {
    let start = Instant::now();
    let cfg = PipelineConfig {
        count: 1000,
        output_dir: dir.to_path_buf(),
        ..PipelineConfig::default()
    };
    let m = pipeline::cmd_generate(&cfg).map_err(|e| e.to_string())?;
    let stats = pipeline::cmd_stats(dir).map_err(|e| e.to_string())?;
    for (c, share) in [(Category::Spatial, 0.42), (Category::Sequential, 0.245), (Category::Analytical, 0.335)] {
        let got = stats.counts[&c] as f64;
        ensure!((got - 1000.0 * share).abs() <= 1.0, "{c}: {got} instances");
    }
    ensure!(
        (5.5..=6.5).contains(&stats.mean_images_per_instance),
        "mean images {}",
        stats.mean_images_per_instance
    );
    ensure!(m.total_images == stats.total_images, "manifest images disagree");
    let t = within(Duration::from_secs(300), start)?;
    Ok(format!(
        "counts {:?}, mean images {:.3}, {} images ({t:.1?})",
        stats.counts.values().collect::<Vec<_>>(),
        stats.mean_images_per_instance,
        stats.total_images
    ))
}

fn same_files(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    names.sort();
    let other = std::fs::read_dir(b).map_err(|e| e.to_string())?.count();
    ensure!(names.len() == other, "{} vs {} image files", names.len(), other);
    for n in &names {
        let x = std::fs::read(a.join(n)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(n)).map_err(|e| e.to_string())?;
        ensure!(x == y, "{n:?} differs");
    }
    Ok(names.len())
}

fn determinism(first: &Path, second: &Path) -> Check {
    let start = Instant::now();
    let cfg = PipelineConfig {
        count: 1000,
        output_dir: second.to_path_buf(),
        ..PipelineConfig::default()
    };
    let m2 = pipeline::cmd_generate(&cfg).map_err(|e| e.to_string())?;
    let m1 = pipeline::load_manifest(first).map_err(|e| e.to_string())?;
    let a = std::fs::read(first.join(pipeline::INSTANCES_FILE)).map_err(|e| e.to_string())?;
    let b = std::fs::read(second.join(pipeline::INSTANCES_FILE)).map_err(|e| e.to_string())?;
    ensure!(a == b, "instances.jsonl differs");
    ensure!(m1.instances_sha256 == m2.instances_sha256, "manifest hashes differ");
    let ma = std::fs::read(first.join(pipeline::MANIFEST_FILE)).map_err(|e| e.to_string())?;
    let mb = std::fs::read(second.join(pipeline::MANIFEST_FILE)).map_err(|e| e.to_string())?;
    ensure!(ma == mb, "manifest files differ");
    let images = same_files(&first.join(pipeline::IMAGES_DIR), &second.join(pipeline::IMAGES_DIR))?;
    let t = within(Duration::from_secs(300), start)?;
    Ok(format!(
        "identical instances.jsonl ({} bytes), manifest and {images} images, sha256 {} ({t:.1?})",
        a.len(),
        &m1.instances_sha256[..16]
    ))
}

// 10 --------------------------------------------------------------------

fn eval_fixture() -> Check {
    let start = Instant::now();
    let cfg = PipelineConfig::default();
    let catalog = TemplateCatalog::builtin();
    let opts = |a: &str, b: &str, c: &str, d: &str| Options([a.into(), b.into(), c.into(), d.into()]);
    let spatial = opts(
        "The red cube is to the left of the blue cone",
        "The red cube is to the right of the blue cone",
        "The red cube is above the blue cone",
        "The red cube is behind the blue cone",
    );
    let order = opts(
        "image2, image3, image1",
        "image1, image3, image2",
        "image3, image1, image2",
        "image3, image2, image1",
    );
    let scale = opts("12 times", "18 times", "27 times", "1.5 times");
    use AnswerKey::*;
    // (category, options, gold, raw output, expected extraction)
    let fixture: Vec<(Category, &Options, AnswerKey, &str, Option<AnswerKey>)> = vec![
        (Category::Spatial, &spatial, B, "The answer is (B).", Some(B)),
        (Category::Spatial, &spatial, B, "the red cube is to the right of the blue cone", Some(B)),
        (Category::Spatial, &spatial, C, "Either A or B", None),
        (Category::Spatial, &spatial, A, "A", Some(A)),
        (Category::Sequential, &order, A, "image2, image3, image1", Some(A)),
        (Category::Sequential, &order, A, "I think it is c.", Some(C)),
        (Category::Sequential, &order, D, "Answer: D", Some(D)),
        (Category::Sequential, &order, B, "no idea", None),
        (Category::Analytical, &scale, B, "18 times", Some(B)),
        (Category::Analytical, &scale, B, "It is 12 times or 27 times", None),
        (Category::Analytical, &scale, C, "(c) 27 times", Some(C)),
        (Category::Analytical, &scale, D, "B. 18 times", Some(B)),
    ];
    let mut gold = Vec::new();
    let mut preds = Vec::new();
    for (i, (cat, options, answer, raw, want)) in fixture.iter().enumerate() {
        let (mut inst, _) = pipeline::build_instance(&cfg, &catalog, i, *cat).map_err(|e| e.to_string())?;
        inst.options = (*options).clone();
        inst.answer = *answer;
        let (got, method) = match_answer(raw, &inst.options);
        ensure!(got == *want, "item {i} {raw:?}: extracted {got:?}, want {want:?}");
        ensure!(got.is_some() == (method != MatchMethod::Unmatched), "item {i}: method {method:?}");
        preds.push(Prediction {
            question_id: inst.id.clone(),
            raw_output: raw.to_string(),
            extracted: got,
            method,
        });
        gold.push(inst);
    }
    let report = score(&preds, &gold).map_err(|e| e.to_string())?;
    // Hand count: spatial 3/4, sequential 2/4, analytical 2/4; 3 unmatched.
    let acc = |c| report.per_category[&c].accuracy;
    ensure!(acc(Category::Spatial) == 0.75, "spatial {}", acc(Category::Spatial));
    ensure!(acc(Category::Sequential) == 0.5, "sequential {}", acc(Category::Sequential));
    ensure!(acc(Category::Analytical) == 0.5, "analytical {}", acc(Category::Analytical));
    ensure!(report.overall.correct == 7 && report.overall.total == 12, "overall {:?}", report.overall);
    ensure!(report.unmatched == 3, "unmatched {}", report.unmatched);
    let mut shuffled = preds.clone();
    shuffled.reverse();
    ensure!(score(&shuffled, &gold).map_err(|e| e.to_string())? == report, "order dependent");
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("12-item fixture: 0.75 / 0.5 / 0.5, overall 7/12, 3 unmatched ({t:.1?})"))
}

fn main() {
    let first = tempfile::tempdir().expect("tempdir");
    let second = tempfile::tempdir().expect("tempdir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("difficulty filter exactness", Box::new(difficulty_filter)),
        ("stage-transform partition", Box::new(stage_partition)),
        ("sampling contract", Box::new(sampling_contract)),
        ("rendering oracle equivalence", Box::new(rendering_oracle)),
        ("spatial ground-truth soundness", Box::new(spatial_soundness)),
        ("scale-chain correctness", Box::new(scale_chains)),
        ("sequence correctness", Box::new(sequences)),
        ("dataset statistics", Box::new(|| dataset_statistics(first.path()))),
        ("determinism", Box::new(|| determinism(first.path(), second.path()))),
        ("evaluation harness", Box::new(eval_fixture)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)) {
            Ok(Ok(detail)) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: panicked", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
