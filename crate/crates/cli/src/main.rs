//! Command-line interface for the whole toolchain: dataset preparation
//! stages, training, evaluation, synthetic data, and file inspection.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data or format
//! errors, 3 for numeric failures during training or evaluation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stgcn_graph::GraphLayout;
use stgcn_harness::{
    check_compatible, evaluate, generate_synthetic, inspect_file, load_model, read_metrics_file,
    train, windowed_mean, ExperimentConfig, HarnessError, SynthSpec,
};
use stgcn_pipeline::{
    build_label_map, filter_all, normalize_all, pack, parse_annotations, parse_corpus,
    read_bundle_file, read_samples_file, run_all, segment_samples, split_dataset,
    write_bundle_file, write_samples_file, CorpusManifest, KeypointFilter, RawSample, SplitTag,
    DEFAULT_TARGET_FRAMES,
};

#[derive(Parser)]
#[command(
    name = "stgcn",
    version,
    about = "Skeleton-based sign recognition: data preparation, training, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut annotated sign segments out of per-video pose sequences
    Segment(SegmentArgs),
    /// Keep a configured subset of keypoints in every frame
    Filter(FilterArgs),
    /// Shuffle samples and divide them into train and test files
    Split(SplitArgs),
    /// Bring every sample to a fixed frame count by truncation or tiling
    Normalize(NormalizeArgs),
    /// Pack prepared samples into a binary dataset bundle
    Pack(PackArgs),
    /// Run segment, filter, split, normalize, and pack from one manifest
    RunAll(RunAllArgs),
    /// Train a model from an experiment configuration
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset bundle
    Eval(EvalArgs),
    /// Generate a synthetic train/test dataset pair
    Synth(SynthArgs),
    /// Summarize a dataset bundle or checkpoint
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SegmentArgs {
    /// Directory holding one pose-JSON video per subdirectory or file
    #[arg(long)]
    poses: PathBuf,
    /// Annotation table with columns label,video_id,start_frame,end_frame,signer_id,articulation_id
    #[arg(long)]
    annotations: PathBuf,
    /// Keypoints every frame must carry
    #[arg(long)]
    keypoints: usize,
    /// Output samples file (JSON lines)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    /// Builtin filter name or a filter description file
    #[arg(long)]
    filter: String,
    /// Input samples file (JSON lines)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Fraction of samples that train, in (0, 1)
    #[arg(long)]
    ratio: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Frames every output sample has
    #[arg(long, default_value_t = DEFAULT_TARGET_FRAMES)]
    frames: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PackArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Builtin layout name or a layout file
    #[arg(long)]
    layout: String,
    /// Which split this bundle is: train or test
    #[arg(long, value_parser = parse_split)]
    split: SplitTag,
    /// Extra samples files whose labels join the label map, so paired
    /// bundles agree on class ids
    #[arg(long)]
    labels_from: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunAllArgs {
    /// Corpus manifest (JSON)
    #[arg(long)]
    manifest: PathBuf,
    /// Directory receiving train.stgs and test.stgs
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset bundle to score
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated ranks to report accuracy at
    #[arg(long, value_delimiter = ',', default_value = "1,5")]
    topk: Vec<usize>,
    /// Also report mean accuracy over epochs A..=B of the metrics log
    /// next to the checkpoint, as A:B
    #[arg(long, value_parser = parse_window)]
    window: Option<(usize, usize)>,
    /// Batch size used while scoring
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: usize,
    /// Training samples per class
    #[arg(long)]
    spc: usize,
    /// Test samples per class
    #[arg(long, default_value_t = 0)]
    test_spc: usize,
    #[arg(long, default_value_t = DEFAULT_TARGET_FRAMES)]
    frames: usize,
    #[arg(long, default_value_t = 27)]
    joints: usize,
    #[arg(long)]
    seed: u64,
    /// Directory receiving train.stgs (and test.stgs when test-spc > 0)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    /// Dataset bundle or checkpoint
    file: PathBuf,
}

fn parse_split(value: &str) -> Result<SplitTag, String> {
    match value {
        "train" => Ok(SplitTag::Train),
        "test" => Ok(SplitTag::Test),
        other => Err(format!("split must be train or test, not {other:?}")),
    }
}

fn parse_window(value: &str) -> Result<(usize, usize), String> {
    let (from, to) = value
        .split_once(':')
        .ok_or_else(|| format!("window must be A:B, not {value:?}"))?;
    let from = from
        .parse()
        .map_err(|_| format!("window start {from:?} is not a whole number"))?;
    let to = to
        .parse()
        .map_err(|_| format!("window end {to:?} is not a whole number"))?;
    Ok((from, to))
}

fn io_error(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run_segment(args: &SegmentArgs) -> Result<(), HarnessError> {
    let videos = parse_corpus(&args.poses, args.keypoints)?;
    let annotations = parse_annotations(&args.annotations)?;
    let samples = segment_samples(&annotations, &videos)?;
    write_samples_file(&args.out, &samples)?;
    println!(
        "segmented {} samples from {} videos",
        samples.len(),
        videos.len()
    );
    Ok(())
}

fn run_filter(args: &FilterArgs) -> Result<(), HarnessError> {
    let filter = KeypointFilter::resolve(&args.filter)?;
    let samples = read_samples_file(&args.input)?;
    let filtered = filter_all(&samples, &filter)?;
    write_samples_file(&args.out, &filtered)?;
    println!(
        "kept {} of {} keypoints in {} samples",
        filter.output_count(),
        filter.source_count,
        filtered.len()
    );
    Ok(())
}

fn run_split(args: &SplitArgs) -> Result<(), HarnessError> {
    let samples = read_samples_file(&args.input)?;
    let total = samples.len();
    let (train, test) = split_dataset(samples, args.ratio, args.seed)?;
    write_samples_file(&args.train_out, &train)?;
    write_samples_file(&args.test_out, &test)?;
    println!(
        "split {} samples into {} train / {} test",
        total,
        train.len(),
        test.len()
    );
    Ok(())
}

fn run_normalize(args: &NormalizeArgs) -> Result<(), HarnessError> {
    let samples = read_samples_file(&args.input)?;
    let normalized = normalize_all(&samples, args.frames)?;
    write_samples_file(&args.out, &normalized)?;
    println!(
        "normalized {} samples to {} frames",
        normalized.len(),
        args.frames
    );
    Ok(())
}

fn run_pack(args: &PackArgs) -> Result<(), HarnessError> {
    let samples = read_samples_file(&args.input)?;
    let layout = GraphLayout::resolve(&args.layout)
        .map_err(stgcn_pipeline::PipelineError::from)?
        .to_spec();
    let mut label_sources: Vec<RawSample> = samples.clone();
    for path in &args.labels_from {
        label_sources.extend(read_samples_file(path)?);
    }
    let label_map = build_label_map(&label_sources);
    let bundle = pack(&samples, &label_map, &layout, args.split, None)?;
    write_bundle_file(&args.out, &bundle)?;
    println!(
        "packed {} samples over {} classes into {}",
        bundle.samples.len(),
        bundle.label_map.len(),
        args.out.display()
    );
    Ok(())
}

fn run_run_all(args: &RunAllArgs) -> Result<(), HarnessError> {
    let manifest = CorpusManifest::from_file(&args.manifest)?;
    std::fs::create_dir_all(&args.out).map_err(|source| io_error(&args.out, source))?;
    let report = run_all(&manifest, &args.out)?;
    println!("videos: {}", report.videos);
    println!("annotations: {}", report.annotations);
    println!("segmented: {}", report.segmented);
    println!(
        "after articulation selection: {}",
        report.after_articulation_selection
    );
    println!("filtered: {}", report.filtered);
    println!("train samples: {}", report.train_samples);
    println!("test samples: {}", report.test_samples);
    println!("classes: {}", report.classes);
    println!("train bundle: {}", report.train_path.display());
    println!("test bundle: {}", report.test_path.display());
    Ok(())
}

fn run_train(args: &TrainArgs) -> Result<(), HarnessError> {
    let config = ExperimentConfig::from_file(&args.config)?;
    let outcome = train(&config)?;
    println!(
        "trained {} epochs{}",
        outcome.epochs_run,
        if outcome.stopped_early {
            " (reached the stop threshold)"
        } else {
            ""
        }
    );
    println!("final train top-1: {:.4}", outcome.final_train_accuracy);
    println!("best accuracy: {:.4}", outcome.best_accuracy);
    println!("metrics: {}", outcome.metrics_path.display());
    println!("final checkpoint: {}", outcome.final_checkpoint.display());
    println!("best checkpoint: {}", outcome.best_checkpoint.display());
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<(), HarnessError> {
    let bundle = read_bundle_file(&args.data)?;
    let layout = GraphLayout::from_spec(&bundle.descriptor.layout)
        .map_err(stgcn_pipeline::PipelineError::from)?;
    let model = load_model(&args.checkpoint, layout)?;
    check_compatible(model.config(), &bundle, &args.data)?;
    let accuracies = evaluate(&model, &bundle, &args.topk, args.batch_size)?;
    println!("samples: {}", bundle.samples.len());
    for (k, accuracy) in args.topk.iter().zip(&accuracies) {
        println!("top-{k} accuracy: {accuracy:.4}");
    }
    if let Some((from, to)) = args.window {
        let metrics_path = args
            .checkpoint
            .parent()
            .unwrap_or(Path::new("."))
            .join("metrics.jsonl");
        let records = read_metrics_file(&metrics_path)?;
        let report = windowed_mean(&records, from, to)?;
        println!(
            "window {}..{} over {} records: top-1 mean {:.4}, top-5 mean {:.4}",
            report.from, report.to, report.records, report.top1_mean, report.top5_mean
        );
    }
    Ok(())
}

fn run_synth(args: &SynthArgs) -> Result<(), HarnessError> {
    let spec = SynthSpec {
        classes: args.classes,
        train_per_class: args.spc,
        test_per_class: args.test_spc,
        frames: args.frames,
        joints: args.joints,
        seed: args.seed,
    };
    let (train_bundle, test_bundle) = generate_synthetic(&spec)?;
    std::fs::create_dir_all(&args.out).map_err(|source| io_error(&args.out, source))?;
    let train_path = args.out.join("train.stgs");
    write_bundle_file(&train_path, &train_bundle)?;
    println!(
        "wrote {} train samples over {} classes to {}",
        train_bundle.samples.len(),
        train_bundle.label_map.len(),
        train_path.display()
    );
    if test_bundle.samples.is_empty() {
        println!("no test samples requested");
    } else {
        let test_path = args.out.join("test.stgs");
        write_bundle_file(&test_path, &test_bundle)?;
        println!(
            "wrote {} test samples to {}",
            test_bundle.samples.len(),
            test_path.display()
        );
    }
    Ok(())
}

fn run_inspect(args: &InspectArgs) -> Result<(), HarnessError> {
    print!("{}", inspect_file(&args.file)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Segment(args) => run_segment(args),
        Command::Filter(args) => run_filter(args),
        Command::Split(args) => run_split(args),
        Command::Normalize(args) => run_normalize(args),
        Command::Pack(args) => run_pack(args),
        Command::RunAll(args) => run_run_all(args),
        Command::Train(args) => run_train(args),
        Command::Eval(args) => run_eval(args),
        Command::Synth(args) => run_synth(args),
        Command::Inspect(args) => run_inspect(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_numeric() => {
            eprintln!("numeric failure: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
