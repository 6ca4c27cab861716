//! Dataset generation, manifests and the command implementations behind
//! the `interleaf` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::curriculum::{self, CurriculumError, DifficultyRecord, StageMode};
use crate::eval::{self, EvalError, ExternalMatcher, MatcherConfig, RawPrediction, ScoreReport};
use crate::jsonl::{self, JsonlError};
use crate::qa::{self, Instance, InstanceContext, QaError, TemplateCatalog};
use crate::render::{self, project, rasterize, ImageFormat, RenderError, Window, WINDOW_MARGIN};
use crate::rng;
use crate::scene::{generate_scene, CountRange, SceneError, SceneSpec, View};
use crate::taskgen::{
    gen_scale_chain, gen_sequence, gen_spatial, Category, Motion, ScaleSpec, SequenceSpec, SpatialSpec, TaskError,
    TaskFacts,
};

pub const INSTANCES_FILE: &str = "instances.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGES_DIR: &str = "images";
const MAX_FACT_ATTEMPTS: u64 = 32;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config field `{field}`: {reason}")]
    ConfigInvalid { field: &'static str, reason: String },
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Qa(#[from] QaError),
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl PipelineError {
    /// 1 validation, 2 I/O, 3 external service.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. }
            | PipelineError::Jsonl(JsonlError::Io { .. })
            | PipelineError::Curriculum(CurriculumError::Io { .. })
            | PipelineError::Curriculum(CurriculumError::Jsonl(JsonlError::Io { .. }))
            | PipelineError::Render(RenderError::Io { .. }) => 2,
            PipelineError::Eval(EvalError::MatcherNotConfigured) => 3,
            _ => 1,
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMix {
    pub spatial: f64,
    pub sequential: f64,
    pub analytical: f64,
}

impl Default for CategoryMix {
    fn default() -> Self {
        CategoryMix {
            spatial: 0.42,
            sequential: 0.245,
            analytical: 0.335,
        }
    }
}

impl CategoryMix {
    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::Spatial => self.spatial,
            Category::Sequential => self.sequential,
            Category::Analytical => self.analytical,
        }
    }
}

/// Split `count` by largest remainder. Equal remainders go to the larger
/// proportion, then to the earlier category.
pub fn allocate_counts(mix: &CategoryMix, count: usize) -> BTreeMap<Category, usize> {
    let shares: Vec<(Category, f64)> = Category::ALL.iter().map(|&c| (c, mix.get(c) * count as f64)).collect();
    let mut out: BTreeMap<Category, usize> = shares.iter().map(|&(c, s)| (c, s.floor() as usize)).collect();
    let assigned: usize = out.values().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (shares[a].1 - shares[a].1.floor(), shares[b].1 - shares[b].1.floor());
        if (ra - rb).abs() > 1e-9 {
            rb.total_cmp(&ra)
        } else {
            mix.get(shares[b].0).total_cmp(&mix.get(shares[a].0)).then(a.cmp(&b))
        }
    });
    for &i in order.iter().take(count.saturating_sub(assigned)) {
        *out.get_mut(&shares[i].0).unwrap() += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub count: usize,
    pub mix: CategoryMix,
    /// Images per instance, drawn uniformly from this range.
    pub images_per_instance: CountRange,
    pub output_dir: PathBuf,
    pub raster_size: u32,
    pub image_format: ImageFormat,
    /// Success rate at or above which a question is Simple.
    pub threshold: f64,
    /// Share of the challenging pool drawn for each curriculum stage.
    pub stage_fraction: f64,
    pub stage_mode: StageMode,
    /// JSON template catalog; the built-in catalog when unset.
    pub template_catalog: Option<PathBuf>,
    pub scene: SceneSpec,
    pub sequence: SequenceSpec,
    pub scale: ScaleSpec,
    /// Links per scale chain, capped by the image count.
    pub chain_length: CountRange,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            count: 100,
            mix: CategoryMix::default(),
            images_per_instance: CountRange { min: 4, max: 8 },
            output_dir: PathBuf::from("dataset"),
            raster_size: render::DEFAULT_RASTER_SIZE,
            image_format: ImageFormat::Png,
            threshold: 0.7,
            stage_fraction: 0.4,
            stage_mode: StageMode::Steps,
            template_catalog: None,
            scene: SceneSpec::default(),
            sequence: SequenceSpec::default(),
            scale: ScaleSpec::default(),
            chain_length: CountRange { min: 2, max: 4 },
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |field, reason: &str| {
            Err(PipelineError::ConfigInvalid {
                field,
                reason: reason.to_string(),
            })
        };
        let m = &self.mix;
        if [m.spatial, m.sequential, m.analytical].iter().any(|p| !(*p >= 0.0)) {
            return bad("mix", "proportions must be non-negative");
        }
        if (m.spatial + m.sequential + m.analytical - 1.0).abs() > 1e-9 {
            return bad("mix", "proportions must sum to 1");
        }
        if self.count == 0 {
            return bad("count", "must be at least 1");
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return bad("threshold", "must lie in (0, 1]");
        }
        curriculum::rational_from_decimal(self.threshold).map_err(|e| PipelineError::ConfigInvalid {
            field: "threshold",
            reason: e.to_string(),
        })?;
        if !(self.stage_fraction > 0.0 && self.stage_fraction <= 1.0) {
            return bad("stage_fraction", "must lie in (0, 1]");
        }
        curriculum::rational_from_decimal(self.stage_fraction).map_err(|e| PipelineError::ConfigInvalid {
            field: "stage_fraction",
            reason: e.to_string(),
        })?;
        let ipi = self.images_per_instance;
        if ipi.min < 3 || ipi.min > ipi.max {
            return bad("images_per_instance", "need 3 <= min <= max");
        }
        if self.raster_size < 8 {
            return bad("raster_size", "must be at least 8");
        }
        if self.chain_length.min < 2 || self.chain_length.min > self.chain_length.max {
            return bad("chain_length", "need 2 <= min <= max");
        }
        if let Some(p) = self.sequence.piecewise_probability {
            if !(0.0..=1.0).contains(&p) {
                return bad("sequence.piecewise_probability", "must lie in [0, 1]");
            }
        }
        self.scene.validate().or_else(|e| bad("scene", &e.to_string()))?;
        Ok(())
    }

    pub fn catalog(&self) -> Result<TemplateCatalog, PipelineError> {
        Ok(match &self.template_catalog {
            Some(p) => TemplateCatalog::load(p)?,
            None => TemplateCatalog::builtin(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_id: String,
    /// Config used, with `output_dir` reset so the snapshot is location-free.
    pub config: PipelineConfig,
    pub counts: BTreeMap<Category, usize>,
    pub total_instances: usize,
    pub total_images: usize,
    pub mean_images_per_instance: f64,
    pub mean_annotation_chars: f64,
    pub instances_sha256: String,
}

/// Category of every instance index, shuffled under the master seed.
fn category_plan(cfg: &PipelineConfig) -> Vec<Category> {
    let mut plan: Vec<Category> = allocate_counts(&cfg.mix, cfg.count)
        .into_iter()
        .flat_map(|(c, n)| std::iter::repeat(c).take(n))
        .collect();
    plan.shuffle(&mut rng::stream(cfg.seed, &[8]));
    plan
}

/// Facts for instance `index`, retrying with fresh seeds when a scene is
/// degenerate or placement runs out of attempts.
pub fn instance_facts(cfg: &PipelineConfig, index: usize, category: Category) -> Result<TaskFacts, TaskError> {
    let mut r = rng::stream(cfg.seed, &[9, index as u64]);
    let images = r.gen_range(cfg.images_per_instance.min..=cfg.images_per_instance.max);
    let mut last = None;
    for attempt in 0..MAX_FACT_ATTEMPTS {
        let seed = rng::derive_seed(cfg.seed, &[10, index as u64, attempt]);
        let facts = match category {
            Category::Spatial => gen_spatial(
                &SpatialSpec {
                    scene: cfg.scene.clone(),
                    images,
                },
                seed,
            )
            .map(TaskFacts::Spatial),
            Category::Sequential => {
                let mut spec = SequenceSpec {
                    frames: images,
                    ..cfg.sequence.clone()
                };
                if let Some(p) = spec.piecewise_probability {
                    spec.motion = if r.gen_bool(p) { Motion::Piecewise } else { Motion::Linear };
                }
                gen_sequence(&spec, seed).map(TaskFacts::Sequential)
            }
            Category::Analytical => {
                let links = r.gen_range(cfg.chain_length.min..=cfg.chain_length.max).min(images);
                gen_scale_chain(
                    &ScaleSpec {
                        links,
                        images,
                        ..cfg.scale.clone()
                    },
                    seed,
                )
                .map(TaskFacts::Analytical)
            }
        };
        match facts {
            Err(e @ (TaskError::NoRelationAvailable | TaskError::Scene(SceneError::PlacementExhausted { .. }))) => {
                last = Some(e)
            }
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Build and validate instance `index` without touching the disk.
pub fn build_instance(
    cfg: &PipelineConfig,
    catalog: &TemplateCatalog,
    index: usize,
    category: Category,
) -> Result<(Instance, TaskFacts), PipelineError> {
    let facts = instance_facts(cfg, index, category)?;
    let mut r = rng::stream(cfg.seed, &[11, index as u64]);
    let template = r.gen_range(0..catalog.category(category).questions.len());
    let qa_seed = rng::derive_seed(cfg.seed, &[12, index as u64]);
    let mcq = qa::build_mcq(&facts, catalog, template, qa_seed)?;
    let steps = qa::annotate_reasoning(&facts, &mcq, catalog)?;
    let ctx = InstanceContext {
        catalog,
        format: cfg.image_format,
        seed: cfg.seed,
    };
    let inst = qa::assemble_instance(&qa::instance_id(index), &facts, mcq, steps, &ctx)?;
    Ok((inst, facts))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn annotation_chars(inst: &Instance) -> usize {
    inst.reasoning.steps().iter().map(|s| s.chars().count()).sum()
}

fn manifest_for(cfg: &PipelineConfig, instances: &[Instance], jsonl_bytes: &[u8], images: usize) -> Manifest {
    let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    for i in instances {
        *counts.get_mut(&i.category).unwrap() += 1;
    }
    let n = instances.len().max(1) as f64;
    let hash = sha256_hex(jsonl_bytes);
    Manifest {
        dataset_id: format!("ilf-{}", &hash[..12]),
        config: PipelineConfig {
            output_dir: PathBuf::from("."),
            ..cfg.clone()
        },
        counts,
        total_instances: instances.len(),
        total_images: images,
        mean_images_per_instance: images as f64 / n,
        mean_annotation_chars: instances.iter().map(annotation_chars).sum::<usize>() as f64 / n,
        instances_sha256: hash,
    }
}

fn instances_bytes(instances: &[Instance]) -> Vec<u8> {
    let mut out = Vec::new();
    for i in instances {
        serde_json::to_writer(&mut out, i).expect("instances serialize");
        out.push(b'\n');
    }
    out
}

/// Generate `cfg.count` instances with their images and a manifest.
pub fn cmd_generate(cfg: &PipelineConfig) -> Result<Manifest, PipelineError> {
    cfg.validate()?;
    let catalog = cfg.catalog()?;
    let dir = &cfg.output_dir;
    let images_dir = dir.join(IMAGES_DIR);
    std::fs::create_dir_all(&images_dir).map_err(io(&images_dir))?;
    let plan = category_plan(cfg);
    let instances: Vec<Instance> = plan
        .par_iter()
        .enumerate()
        .map(|(index, &category)| {
            let (inst, facts) = build_instance(cfg, &catalog, index, category)?;
            for (img, rel) in facts.render_images(cfg.raster_size)?.iter().zip(&inst.images) {
                render::emit_image(img, cfg.image_format, &dir.join(rel))?;
            }
            Ok(inst)
        })
        .collect::<Result<_, PipelineError>>()?;
    let bytes = instances_bytes(&instances);
    let path = dir.join(INSTANCES_FILE);
    std::fs::write(&path, &bytes).map_err(io(&path))?;
    let total_images = instances.iter().map(|i| i.images.len()).sum();
    let manifest = manifest_for(cfg, &instances, &bytes, total_images);
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    log::info!("wrote {} instances and {} images to {}", instances.len(), total_images, dir.display());
    Ok(manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(io(path))
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, PipelineError> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(PipelineError::ManifestMismatch("missing manifest".into()));
    }
    let text = std::fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Json {
        path,
        message: e.to_string(),
    })
}

pub fn load_instances(dir: &Path) -> Result<Vec<Instance>, PipelineError> {
    let path = dir.join(INSTANCES_FILE);
    if !path.is_file() {
        return Err(PipelineError::ManifestMismatch("missing instances".into()));
    }
    let instances: Vec<Instance> = jsonl::read(&path)?;
    for inst in &instances {
        inst.validate()?;
    }
    Ok(instances)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub dataset_id: String,
    pub counts: BTreeMap<Category, usize>,
    pub total_instances: usize,
    pub total_images: usize,
    pub mean_images_per_instance: f64,
    pub mean_annotation_chars: f64,
}

impl DatasetStats {
    pub fn table(&self) -> String {
        let mut out = format!("dataset {}\n", self.dataset_id);
        let _ = writeln!(out, "{:<12} {:>8} {:>8}", "category", "count", "share");
        let n = self.total_instances.max(1) as f64;
        for (c, k) in &self.counts {
            let _ = writeln!(out, "{:<12} {:>8} {:>7.1}%", c.name(), k, 100.0 * *k as f64 / n);
        }
        let _ = writeln!(out, "{:<12} {:>8}", "total", self.total_instances);
        let _ = writeln!(out, "images: {}", self.total_images);
        let _ = writeln!(out, "mean images per instance: {:.2}", self.mean_images_per_instance);
        let _ = writeln!(out, "mean annotation characters: {:.1}", self.mean_annotation_chars);
        out
    }
}

/// Recompute statistics from the files and check them against the manifest.
pub fn cmd_stats(dir: &Path) -> Result<DatasetStats, PipelineError> {
    let manifest = load_manifest(dir)?;
    let instances = load_instances(dir)?;
    let path = dir.join(INSTANCES_FILE);
    let bytes = std::fs::read(&path).map_err(io(&path))?;
    let present = instances
        .iter()
        .flat_map(|i| &i.images)
        .filter(|rel| dir.join(rel).is_file())
        .count();
    let actual = manifest_for(&manifest.config, &instances, &bytes, present);
    let checks: [(&str, bool); 6] = [
        ("instances hash", actual.instances_sha256 == manifest.instances_sha256),
        ("total instances", actual.total_instances == manifest.total_instances),
        ("counts", actual.counts == manifest.counts),
        ("total images", actual.total_images == manifest.total_images),
        (
            "mean images per instance",
            (actual.mean_images_per_instance - manifest.mean_images_per_instance).abs() < 1e-9,
        ),
        (
            "mean annotation chars",
            (actual.mean_annotation_chars - manifest.mean_annotation_chars).abs() < 1e-9,
        ),
    ];
    // Image files are checked before the hash so a deleted file is named.
    let order = [3, 0, 1, 2, 4, 5];
    if let Some(&i) = order.iter().find(|&&i| !checks[i].1) {
        return Err(PipelineError::ManifestMismatch(checks[i].0.into()));
    }
    Ok(DatasetStats {
        dataset_id: manifest.dataset_id,
        counts: actual.counts,
        total_instances: actual.total_instances,
        total_images: actual.total_images,
        mean_images_per_instance: actual.mean_images_per_instance,
        mean_annotation_chars: actual.mean_annotation_chars,
    })
}

/// Classify dataset questions from trial logs and write the records.
pub fn cmd_filter(
    dir: &Path,
    trial_logs: &Path,
    threshold: f64,
    out: &Path,
) -> Result<Vec<DifficultyRecord>, PipelineError> {
    let threshold = curriculum::rational_from_decimal(threshold)?;
    let logs = curriculum::read_trial_logs(trial_logs)?;
    let known: std::collections::HashSet<String> = load_instances(dir)?.into_iter().map(|i| i.id).collect();
    for log in &logs {
        if !known.contains(&log.question_id) {
            log::warn!("trial log for {} which is not in {}", log.question_id, dir.display());
        }
    }
    let records = curriculum::classify_difficulty(&logs, threshold)?;
    jsonl::write(out, &records)?;
    Ok(records)
}

/// Write curriculum stage files for a dataset; returns rows per stage.
pub fn cmd_stage(
    dir: &Path,
    records: &Path,
    fraction: f64,
    seed: u64,
    mode: StageMode,
    out_dir: &Path,
) -> Result<BTreeMap<usize, usize>, PipelineError> {
    let fraction = curriculum::rational_from_decimal(fraction)?;
    let instances = load_instances(dir)?;
    let records: Vec<DifficultyRecord> = jsonl::read(records)?;
    Ok(curriculum::build_stage_files(&instances, &records, fraction, seed, mode, out_dir)?)
}

/// Score a predictions file against a dataset.
pub fn cmd_eval(dir: &Path, predictions: &Path, external: bool) -> Result<ScoreReport, PipelineError> {
    let gold = load_instances(dir)?;
    let raw: Vec<RawPrediction> = jsonl::read(predictions)?;
    let matcher = if external {
        Some(ExternalMatcher::new(MatcherConfig::from_env()?))
    } else {
        None
    };
    let preds = eval::match_predictions(&gold, &raw, matcher.as_ref())?;
    Ok(eval::score(&preds, &gold)?)
}

/// Render one generated scene from all three views; returns written paths.
pub fn cmd_render_preview(
    spec: &SceneSpec,
    seed: u64,
    size: u32,
    format: ImageFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    let scene = generate_scene(spec, seed)?;
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut paths = Vec::new();
    for view in View::ALL {
        let img = rasterize(
            &project(&scene, view),
            size,
            size,
            Window::for_scene(&scene, view, WINDOW_MARGIN),
        )?;
        let path = out_dir.join(format!("preview_{}.{}", view.name(), format.extension()));
        render::emit_image(&img, format, &path)?;
        paths.push(path);
    }
    write_json(&out_dir.join("preview_scene.json"), &scene)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(mix: CategoryMix, n: usize) -> Vec<usize> {
        allocate_counts(&mix, n).into_values().collect()
    }

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(counts(CategoryMix::default(), 100), [42, 24, 34]);
        assert_eq!(counts(CategoryMix::default(), 1000), [420, 245, 335]);
        assert_eq!(counts(CategoryMix::default(), 1), [1, 0, 0]);
        let thirds = CategoryMix {
            spatial: 1.0 / 3.0,
            sequential: 1.0 / 3.0,
            analytical: 1.0 / 3.0,
        };
        assert_eq!(counts(thirds, 2), [1, 1, 0]);
    }

    #[test]
    fn allocation_sums_and_stays_within_one() {
        for n in 1..500 {
            let c = allocate_counts(&CategoryMix::default(), n);
            assert_eq!(c.values().sum::<usize>(), n);
            for (cat, k) in c {
                let share = CategoryMix::default().get(cat) * n as f64;
                assert!((k as f64 - share).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = PipelineConfig {
            mix: CategoryMix {
                spatial: 0.5,
                sequential: 0.5,
                analytical: 0.5,
            },
            ..PipelineConfig::default()
        };
        assert!(matches!(bad.validate(), Err(PipelineError::ConfigInvalid { field: "mix", .. })));
        let bad = PipelineConfig {
            count: 0,
            ..PipelineConfig::default()
        };
        assert!(matches!(bad.validate(), Err(PipelineError::ConfigInvalid { field: "count", .. })));
        let bad = PipelineConfig {
            threshold: 0.0,
            ..PipelineConfig::default()
        };
        assert!(matches!(bad.validate(), Err(PipelineError::ConfigInvalid { field: "threshold", .. })));
        let partial: PipelineConfig = serde_json::from_str(r#"{"count": 5, "seed": 3}"#).unwrap();
        assert_eq!(partial.count, 5);
        assert_eq!(partial.raster_size, 512);
    }

    #[test]
    fn instances_validate_for_every_category() {
        let cfg = PipelineConfig::default();
        let catalog = TemplateCatalog::builtin();
        for index in 0..60 {
            let category = Category::ALL[index % 3];
            let (inst, facts) = build_instance(&cfg, &catalog, index, category).unwrap();
            assert_eq!(inst.category, category);
            assert_eq!(inst.images.len(), facts.image_count());
            assert!((4..=8).contains(&inst.images.len()));
        }
    }
}
