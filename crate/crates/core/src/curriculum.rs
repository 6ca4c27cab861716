//! Difficulty filtering over repeated-inference logs and the stage-wise
//! curriculum that moves reasoning steps from the input into the target.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl::{self, JsonlError};
use crate::qa::{Instance, ReasoningSteps};
use crate::rng;

pub type Rational = Ratio<u64>;

pub const DEFAULT_TRIALS: u32 = 10;
pub const STEP_HEADERS: [&str; 5] = ["[SUMMARY]", "[CAPTION]", "[TEXT2REGION]", "[REGION2REGION]", "[CONCLUSION]"];

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("duplicate question id {0}")]
    DuplicateQuestionId(String),
    #[error("duplicate trial {trial_index} of model {model_id} on {question_id}")]
    DuplicateTrial {
        question_id: String,
        model_id: String,
        trial_index: u32,
    },
    #[error("invalid trial log for {0}")]
    InvalidLog(String),
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("invalid fraction: {0}")]
    InvalidFraction(String),
    #[error("stage {stage} outside 1..={max}")]
    InvalidStage { stage: usize, max: usize },
    #[error("instance {id} is missing reasoning step {name}")]
    MissingStep { id: String, name: &'static str },
    #[error("challenging pool is empty")]
    EmptyPool,
    #[error("no difficulty record covers instance {0}")]
    UncoveredInstance(String),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One inference attempt as written by an external model runner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub question_id: String,
    pub model_id: String,
    pub trial_index: u32,
    #[serde(default)]
    pub predicted: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLog {
    pub question_id: String,
    pub trials: u32,
    pub correct: u32,
}

/// Sum trial records per question id, in first-seen order.
pub fn aggregate_trials(records: &[TrialRecord]) -> Result<Vec<TrialLog>, CurriculumError> {
    let mut seen = HashSet::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut logs: Vec<TrialLog> = Vec::new();
    for r in records {
        if !seen.insert((&r.question_id, &r.model_id, r.trial_index)) {
            return Err(CurriculumError::DuplicateTrial {
                question_id: r.question_id.clone(),
                model_id: r.model_id.clone(),
                trial_index: r.trial_index,
            });
        }
        let i = *index.entry(&r.question_id).or_insert_with(|| {
            logs.push(TrialLog {
                question_id: r.question_id.clone(),
                trials: 0,
                correct: 0,
            });
            logs.len() - 1
        });
        logs[i].trials += 1;
        logs[i].correct += r.correct as u32;
    }
    Ok(logs)
}

pub fn read_trial_logs(path: &Path) -> Result<Vec<TrialLog>, CurriculumError> {
    aggregate_trials(&jsonl::read::<TrialRecord>(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Simple,
    Challenging,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyRecord {
    pub question_id: String,
    /// Success rate c/n as `[c, n]` in lowest terms.
    pub p: Rational,
    pub class: Difficulty,
}

/// Exact rational for a decimal literal: 0.7 is 7/10, not the nearest double.
pub fn rational_from_decimal(x: f64) -> Result<Rational, CurriculumError> {
    let bad = || CurriculumError::InvalidThreshold(format!("{x} is not a plain decimal in [0, 1]"));
    if !(0.0..=1.0).contains(&x) {
        return Err(bad());
    }
    let text = format!("{x}");
    let (whole, frac) = text.split_once('.').unwrap_or((&text, ""));
    if frac.len() > 18 {
        return Err(bad());
    }
    let digits: u64 = format!("{whole}{frac}").parse().map_err(|_| bad())?;
    Ok(Rational::new(digits, 10u64.pow(frac.len() as u32)))
}

/// Simple when c/n >= threshold, compared exactly.
pub fn classify_difficulty(logs: &[TrialLog], threshold: Rational) -> Result<Vec<DifficultyRecord>, CurriculumError> {
    if threshold > Rational::from_integer(1) {
        return Err(CurriculumError::InvalidThreshold(format!("{threshold} > 1")));
    }
    let mut seen = HashSet::new();
    logs.iter()
        .map(|log| {
            if !seen.insert(&log.question_id) {
                return Err(CurriculumError::DuplicateQuestionId(log.question_id.clone()));
            }
            if log.trials == 0 || log.correct > log.trials {
                return Err(CurriculumError::InvalidLog(log.question_id.clone()));
            }
            let p = Rational::new(log.correct as u64, log.trials as u64);
            Ok(DifficultyRecord {
                question_id: log.question_id.clone(),
                p,
                class: if p >= threshold {
                    Difficulty::Simple
                } else {
                    Difficulty::Challenging
                },
            })
        })
        .collect()
}

/// How steps are split between input and target across stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageMode {
    /// Five stages; stage 1 already has to produce the conclusion.
    #[default]
    Steps,
    /// Six stages; stage 1 carries every step in the input and only the
    /// answer line is generated.
    WithAnswer,
}

impl StageMode {
    pub fn stages(self) -> usize {
        match self {
            StageMode::Steps => 5,
            StageMode::WithAnswer => 6,
        }
    }

    /// Number of leading steps kept in the input at stage `k`.
    fn input_steps(self, k: usize) -> usize {
        self.stages() - k
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSample {
    pub id: String,
    pub stage: usize,
    pub input: String,
    pub target: String,
    pub images: Vec<String>,
}

fn step_block(name: usize, text: &str) -> String {
    format!("{} {}", STEP_HEADERS[name], text)
}

pub fn answer_line(inst: &Instance) -> String {
    format!("Answer: {}", inst.answer)
}

fn check_steps(inst: &Instance) -> Result<[&str; 5], CurriculumError> {
    let steps = inst.reasoning.steps();
    for (i, s) in steps.iter().enumerate() {
        if s.trim().is_empty() {
            return Err(CurriculumError::MissingStep {
                id: inst.id.clone(),
                name: ReasoningSteps::NAMES[i],
            });
        }
    }
    Ok(steps)
}

/// Move the trailing steps of the chain into the target: `k` of them in
/// steps mode, `k - 1` plus the answer line in with-answer mode.
pub fn stage_transform(inst: &Instance, k: usize, mode: StageMode) -> Result<StageSample, CurriculumError> {
    if k == 0 || k > mode.stages() {
        return Err(CurriculumError::InvalidStage {
            stage: k,
            max: mode.stages(),
        });
    }
    let steps = check_steps(inst)?;
    let split = mode.input_steps(k);
    let mut input = vec![inst.prompt()];
    input.extend((0..split).map(|i| step_block(i, steps[i])));
    let mut target: Vec<String> = (split..5).map(|i| step_block(i, steps[i])).collect();
    if mode == StageMode::WithAnswer {
        target.push(answer_line(inst));
    }
    Ok(StageSample {
        id: inst.id.clone(),
        stage: k,
        input: input.join("\n"),
        target: target.join("\n"),
        images: inst.images.clone(),
    })
}

/// Stage 0: a simple instance as plain question and answer.
pub fn stage_zero(inst: &Instance) -> StageSample {
    StageSample {
        id: inst.id.clone(),
        stage: 0,
        input: inst.prompt(),
        target: answer_line(inst),
        images: inst.images.clone(),
    }
}

/// Headed reasoning steps found in a stage input or target, in order.
pub fn parse_steps(text: &str) -> Vec<(usize, String)> {
    text.lines()
        .filter_map(|line| {
            STEP_HEADERS.iter().position(|h| {
                line.strip_prefix(h).is_some_and(|rest| rest.starts_with(' '))
            })
            .map(|i| (i, line[STEP_HEADERS[i].len() + 1..].to_string()))
        })
        .collect()
}

/// round(fraction * n), halves rounded up, in exact arithmetic.
pub fn sample_size(fraction: Rational, n: usize) -> usize {
    let (num, den) = (*fraction.numer() as u128, *fraction.denom() as u128);
    ((2 * num * n as u128 + den) / (2 * den)) as usize
}

/// Seeded draw without replacement; each stage gets its own stream.
pub fn sample_stage_pool(
    pool: &[String],
    fraction: Rational,
    seed: u64,
    stage: usize,
) -> Result<Vec<String>, CurriculumError> {
    if fraction == Rational::from_integer(0) || fraction > Rational::from_integer(1) {
        return Err(CurriculumError::InvalidFraction(format!("{fraction} outside (0, 1]")));
    }
    if pool.is_empty() {
        return Err(CurriculumError::EmptyPool);
    }
    let n = sample_size(fraction, pool.len());
    let mut ids = pool.to_vec();
    let mut rng = rng::stream(seed, &[7, stage as u64]);
    let (picked, _) = ids.partial_shuffle(&mut rng, n);
    Ok(picked.to_vec())
}

/// Stage rows: index 0 holds simple instances, index k the stage-k sample.
pub fn build_stages(
    instances: &[Instance],
    records: &[DifficultyRecord],
    fraction: Rational,
    seed: u64,
    mode: StageMode,
) -> Result<Vec<Vec<StageSample>>, CurriculumError> {
    let class: HashMap<&str, Difficulty> = records.iter().map(|r| (r.question_id.as_str(), r.class)).collect();
    let by_id: HashMap<&str, &Instance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut simple = Vec::new();
    let mut pool = Vec::new();
    for inst in instances {
        match class.get(inst.id.as_str()) {
            None => return Err(CurriculumError::UncoveredInstance(inst.id.clone())),
            Some(Difficulty::Simple) => simple.push(stage_zero(inst)),
            Some(Difficulty::Challenging) => pool.push(inst.id.clone()),
        }
    }
    let mut stages = vec![simple];
    for k in 1..=mode.stages() {
        let ids = match sample_stage_pool(&pool, fraction, seed, k) {
            Ok(ids) => ids,
            Err(CurriculumError::EmptyPool) => {
                log::warn!("no challenging instances; stage {k} is empty");
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        stages.push(
            ids.iter()
                .map(|id| stage_transform(by_id[id.as_str()], k, mode))
                .collect::<Result<_, _>>()?,
        );
    }
    Ok(stages)
}

/// Write `stage0.jsonl` .. `stageN.jsonl` into `dir`; returns rows per stage.
pub fn build_stage_files(
    instances: &[Instance],
    records: &[DifficultyRecord],
    fraction: Rational,
    seed: u64,
    mode: StageMode,
    dir: &Path,
) -> Result<BTreeMap<usize, usize>, CurriculumError> {
    let stages = build_stages(instances, records, fraction, seed, mode)?;
    std::fs::create_dir_all(dir).map_err(|source| CurriculumError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut counts = BTreeMap::new();
    for (k, rows) in stages.iter().enumerate() {
        jsonl::write(&dir.join(format!("stage{k}.jsonl")), rows)?;
        counts.insert(k, rows.len());
    }
    Ok(counts)
}
