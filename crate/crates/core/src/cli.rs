//! The `dtsnn` command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::encoder::{encode_image, EncoderConfig, Image};
use crate::error::Error;
use crate::idx;
use crate::layer_pipeline::{CycleReport, Network};
use crate::model::NetworkConfig;
use crate::report;
use crate::synth;
use crate::trace::CSV_HEADER;
use crate::verify::run_equivalence;
use crate::weight_file::{load_weights, save_weights};
use crate::DEFAULT_CLOCK_HZ;

/// Environment variable capping batch parallelism.
pub const THREADS_ENV: &str = "DTSN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "dtsnn",
    version,
    about = "Differential-time SNN accelerator model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify IDX images and emit a cycle report.
    Infer(InferArgs),
    /// Check the pipeline against the fixed-point reference on random networks.
    Verify(VerifyArgs),
    /// Time batch inference on the host.
    Bench(BenchArgs),
    /// Write synthetic weights and digit images.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub limit: Option<usize>,
    /// Expected patch size; must agree with the weight file.
    #[arg(long)]
    pub patch: Option<usize>,
    /// Write a `layer,neuron_index,absolute_time` trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CLOCK_HZ)]
    pub clock_hz: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub cases: u64,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Weight file; synthetic weights when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, requires = "labels")]
    pub images: Option<PathBuf>,
    #[arg(long, requires = "images")]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 9)]
    pub patch: usize,
    #[arg(long, default_value_t = 100)]
    pub limit: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CLOCK_HZ)]
    pub clock_hz: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 9)]
    pub patch: usize,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
}

/// A loaded encoder + network pair.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: NetworkConfig,
    pub encoder: EncoderConfig,
    pub network: Network,
}

impl Model {
    /// Load a weight file whose first layer is the encoder.
    pub fn load(path: &Path, expected_patch: Option<usize>) -> Result<Model, Error> {
        let (fragment, mut layers) = load_weights(path)?;
        let (Some(patch), Some(side)) = (fragment.patch_size, fragment.image_side) else {
            return Err(Error::Shape(format!(
                "layer 0 of {} is not a square-patch TERNARY/POW2 encoder",
                path.display()
            )));
        };
        if let Some(p) = expected_patch {
            if p != patch {
                return Err(Error::Shape(format!(
                    "--patch {p} but encoder weights are {}x{} (patch {patch}, Y = {})",
                    patch * patch,
                    fragment.layer_sizes[0],
                    fragment.layer_sizes[0]
                )));
            }
        }
        if layers.len() < 2 {
            return Err(Error::Shape(
                "weight file has no network layers after the encoder".into(),
            ));
        }
        let network_layers = layers.split_off(1);
        let config = NetworkConfig::new(side, patch, &fragment.layer_sizes[1..])?;
        let encoder = EncoderConfig::new(side, patch, layers.pop().unwrap())?;
        let network = Network::from_config(&config, network_layers)?;
        Ok(Model {
            config,
            encoder,
            network,
        })
    }

    pub fn from_layers(
        side: usize,
        patch: usize,
        mut layers: Vec<crate::WeightMatrix>,
    ) -> Result<Model, Error> {
        let network_layers = layers.split_off(1);
        let tail: Vec<usize> = network_layers.iter().map(|w| w.out_count()).collect();
        let config = NetworkConfig::new(side, patch, &tail)?;
        let encoder = EncoderConfig::new(side, patch, layers.pop().unwrap())?;
        let network = Network::from_config(&config, network_layers)?;
        Ok(Model {
            config,
            encoder,
            network,
        })
    }
}

/// Result of one image.
#[derive(Debug, Clone)]
pub struct ImageResult {
    pub class: usize,
    pub report: CycleReport,
    pub trace_records: String,
}

pub fn classify(model: &Model, img: &Image) -> Result<ImageResult, Error> {
    let input = encode_image(img, &model.encoder)?;
    let inf = model.network.infer(&input)?;
    Ok(ImageResult {
        class: inf.class,
        trace_records: inf.trace().to_csv_records(),
        report: inf.report,
    })
}

/// Run `f` on a pool capped by `DTSN_THREADS` when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .unwrap_or_else(|e| panic!("cannot build thread pool: {e}")),
        None => f(),
    }
}

/// Classify a batch in parallel; results keep input order.
pub fn classify_batch(model: &Model, images: &[(Image, u8)]) -> Result<Vec<ImageResult>, Error> {
    with_pool(|| {
        images
            .par_iter()
            .map(|(img, _)| classify(model, img))
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct InferOutcome {
    pub correct: u64,
    pub total: u64,
    pub report: CycleReport,
    pub report_text: String,
    pub trace_text: String,
}

pub fn run_infer(args: &InferArgs) -> Result<InferOutcome, Error> {
    let model = Model::load(&args.weights, args.patch)?;
    let mut data = idx::load_mnist(&args.images, &args.labels, model.config.potential)?;
    if let Some(limit) = args.limit {
        data.truncate(limit);
    }
    if let Some((img, _)) = data.first() {
        if img.side() != model.config.image_side {
            return Err(Error::Shape(format!(
                "images are {0}x{0}, weights expect {1}x{1}",
                img.side(),
                model.config.image_side
            )));
        }
    }
    let results = classify_batch(&model, &data)?;

    let mut report = CycleReport::default();
    let mut correct = 0;
    let mut trace_text = format!("{CSV_HEADER}\n");
    for (i, (res, (_, label))) in results.iter().zip(&data).enumerate() {
        report.merge(&res.report);
        correct += u64::from(res.class == *label as usize);
        trace_text.push_str(&format!("# image {i} label {label} class {}\n", res.class));
        trace_text.push_str(&res.trace_records);
    }
    let total = data.len() as u64;
    let report_text = report::render(&report, args.clock_hz, Some((correct, total)));
    Ok(InferOutcome {
        correct,
        total,
        report,
        report_text,
        trace_text,
    })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn infer_cmd(args: &InferArgs) -> Result<i32, Error> {
    let out = run_infer(args)?;
    let pct = if out.total == 0 {
        0.0
    } else {
        100.0 * out.correct as f64 / out.total as f64
    };
    println!("accuracy: {pct:.2}% ({}/{})", out.correct, out.total);
    println!(
        "estimated images/s at {:.0} Hz: {:.1} pipelined, {:.1} sequential",
        args.clock_hz,
        out.report.pipelined_images_per_second(args.clock_hz),
        out.report.images_per_second(args.clock_hz)
    );
    if let Some(path) = &args.trace {
        write(path, &out.trace_text)?;
    }
    match &args.report {
        Some(path) => write(path, &out.report_text)?,
        None => print!("{}", out.report_text),
    }
    Ok(0)
}

fn verify_cmd(args: &VerifyArgs) -> i32 {
    let summary = with_pool(|| run_equivalence(args.seed, args.cases));
    println!("{}/{} traces match", summary.matched, summary.cases);
    for m in summary.mismatches.iter().take(10) {
        println!("  case {} diverges at layer {}", m.case, m.layer);
    }
    if summary.all_match() {
        0
    } else {
        1
    }
}

fn bench_cmd(args: &BenchArgs) -> Result<i32, Error> {
    let model = match &args.weights {
        Some(path) => Model::load(path, None)?,
        None => Model::from_layers(
            28,
            args.patch,
            synth::random_network_weights(args.seed, 28, args.patch, &NetworkConfig::MNIST_TAIL),
        )?,
    };
    let mut data = match (&args.images, &args.labels) {
        (Some(i), Some(l)) => idx::load_mnist(i, l, model.config.potential)?,
        _ => {
            let (imgs, labels) = synth::digit_dataset(args.seed, args.limit);
            imgs.iter()
                .zip(labels)
                .map(|(px, l)| Ok((Image::from_u8(28, px, model.config.potential)?, l)))
                .collect::<Result<_, Error>>()?
        }
    };
    data.truncate(args.limit);
    let start = Instant::now();
    let results = classify_batch(&model, &data)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut report = CycleReport::default();
    for r in &results {
        report.merge(&r.report);
    }
    println!("images: {}", data.len());
    println!("host_seconds: {elapsed:.3}");
    println!(
        "host_images_per_second: {:.1}",
        data.len() as f64 / elapsed.max(1e-9)
    );
    println!(
        "model_images_per_second_pipelined: {:.1}",
        report.pipelined_images_per_second(args.clock_hz)
    );
    println!(
        "model_images_per_second_sequential: {:.1}",
        report.images_per_second(args.clock_hz)
    );
    Ok(0)
}

fn synth_cmd(args: &SynthArgs) -> Result<i32, Error> {
    fs::create_dir_all(&args.out_dir).map_err(|source| Error::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let layers =
        synth::random_network_weights(args.seed, 28, args.patch, &NetworkConfig::MNIST_TAIL);
    save_weights(args.out_dir.join("weights.dtsn"), &layers)?;
    let (imgs, labels) = synth::digit_dataset(args.seed, args.count);
    let bytes = idx::encode_images(28, &imgs);
    fs::write(args.out_dir.join("images.idx"), bytes).map_err(|source| Error::Io {
        path: args.out_dir.join("images.idx"),
        source,
    })?;
    fs::write(args.out_dir.join("labels.idx"), idx::encode_labels(&labels)).map_err(|source| {
        Error::Io {
            path: args.out_dir.join("labels.idx"),
            source,
        }
    })?;
    println!(
        "wrote weights.dtsn, images.idx, labels.idx to {}",
        args.out_dir.display()
    );
    Ok(0)
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Infer(a) => infer_cmd(a),
        Command::Verify(a) => Ok(verify_cmd(a)),
        Command::Bench(a) => bench_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
