use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use interleaf_core::curriculum::StageMode;
use interleaf_core::pipeline::{self, CategoryMix, PipelineConfig, PipelineError};
use interleaf_core::render::ImageFormat;

#[derive(Parser)]
#[command(name = "interleaf", version, about = "Generate, filter, stage and score synthetic multi-image reasoning data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Png,
    Ppm,
}

impl From<Format> for ImageFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Png => ImageFormat::Png,
            Format::Ppm => ImageFormat::Ppm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Steps,
    WithAnswer,
}

impl From<Mode> for StageMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Steps => StageMode::Steps,
            Mode::WithAnswer => StageMode::WithAnswer,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances, images and a manifest.
    Generate {
        /// JSON config; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, short)]
        output_dir: Option<PathBuf>,
        /// Category proportions as spatial,sequential,analytical.
        #[arg(long, value_parser = parse_mix)]
        mix: Option<CategoryMix>,
        #[arg(long)]
        images_min: Option<usize>,
        #[arg(long)]
        images_max: Option<usize>,
        #[arg(long)]
        raster_size: Option<u32>,
        #[arg(long, value_enum)]
        image_format: Option<Format>,
        #[arg(long)]
        template_catalog: Option<PathBuf>,
    },
    /// Recompute dataset statistics and check them against the manifest.
    Stats {
        dir: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Classify questions as simple or challenging from trial logs.
    Filter {
        dir: PathBuf,
        /// Trial log JSONL.
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Output records file [default: DIR/difficulty.jsonl].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write curriculum stage files.
    Stage {
        dir: PathBuf,
        /// Difficulty records JSONL from `filter`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Output directory [default: DIR/stages].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score model predictions.
    Eval {
        dir: PathBuf,
        /// Predictions JSONL with question_id and output.
        #[arg(long)]
        predictions: PathBuf,
        /// Ask the matching service named by INTERLEAF_MATCHER_URL.
        #[arg(long)]
        external: bool,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render one scene from the front, side and top.
    RenderPreview {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        size: Option<u32>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, short, default_value = "preview")]
        out: PathBuf,
    },
}

fn parse_mix(s: &str) -> Result<CategoryMix, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [spatial, sequential, analytical] => Ok(CategoryMix {
            spatial,
            sequential,
            analytical,
        }),
        _ => Err("expected three comma-separated proportions".into()),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Generate {
            config,
            seed,
            count,
            output_dir,
            mix,
            images_min,
            images_max,
            raster_size,
            image_format,
            template_catalog,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = count {
                cfg.count = v;
            }
            if let Some(v) = output_dir {
                cfg.output_dir = v;
            }
            if let Some(v) = mix {
                cfg.mix = v;
            }
            if let Some(v) = images_min {
                cfg.images_per_instance.min = v;
            }
            if let Some(v) = images_max {
                cfg.images_per_instance.max = v;
            }
            if let Some(v) = raster_size {
                cfg.raster_size = v;
            }
            if let Some(v) = image_format {
                cfg.image_format = v.into();
            }
            if template_catalog.is_some() {
                cfg.template_catalog = template_catalog;
            }
            let m = pipeline::cmd_generate(&cfg)?;
            println!(
                "{}: {} instances, {} images, sha256 {}",
                m.dataset_id, m.total_instances, m.total_images, m.instances_sha256
            );
        }
        Command::Stats { dir, json } => {
            let stats = pipeline::cmd_stats(&dir)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            } else {
                print!("{}", stats.table());
            }
        }
        Command::Filter {
            dir,
            logs,
            config,
            threshold,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let out = out.unwrap_or_else(|| dir.join("difficulty.jsonl"));
            let records = pipeline::cmd_filter(&dir, &logs, threshold.unwrap_or(cfg.threshold), &out)?;
            let simple = records
                .iter()
                .filter(|r| r.class == interleaf_core::curriculum::Difficulty::Simple)
                .count();
            println!(
                "{} simple, {} challenging -> {}",
                simple,
                records.len() - simple,
                out.display()
            );
        }
        Command::Stage {
            dir,
            records,
            config,
            fraction,
            seed,
            mode,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let out = out.unwrap_or_else(|| dir.join("stages"));
            let counts = pipeline::cmd_stage(
                &dir,
                &records,
                fraction.unwrap_or(cfg.stage_fraction),
                seed.unwrap_or(cfg.seed),
                mode.map(Into::into).unwrap_or(cfg.stage_mode),
                &out,
            )?;
            for (k, n) in counts {
                println!("stage{k}.jsonl {n}");
            }
        }
        Command::Eval {
            dir,
            predictions,
            external,
            report,
        } => {
            let r = pipeline::cmd_eval(&dir, &predictions, external)?;
            if let Some(path) = report {
                let mut text = serde_json::to_string_pretty(&r).expect("report serializes");
                text.push('\n');
                write_text(&path, &text)?;
            }
            print!("{}", r.table());
        }
        Command::RenderPreview {
            config,
            seed,
            size,
            format,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let paths = pipeline::cmd_render_preview(
                &cfg.scene,
                seed.unwrap_or(cfg.seed),
                size.unwrap_or(cfg.raster_size),
                format.map(Into::into).unwrap_or(cfg.image_format),
                &out,
            )?;
            for p in paths {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
