use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use kds::config::{FilterMode, Layout, PipelineConfig, SamplerMode};
use kds::ingest::{check_consistency, load_scan};
use kds::pipeline::{analyze_scan, run_pipeline};
use kds::stats::compute_stats;

#[derive(Parser)]
#[command(name = "kds", version, about = "CT slice-stack preprocessing and kernel-density slice sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Min,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Area,
    Index,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Tree,
    Flat,
}

impl From<LayoutArg> for Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Tree => Layout::LabeledTree,
            LayoutArg::Flat => Layout::Flat,
        }
    }
}

#[derive(clap::Args)]
struct Overrides {
    /// JSON file with pipeline parameters; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mask threshold on the 8-bit scale
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    filter: Option<FilterArg>,
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
    /// Slices kept per scan
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long, value_enum)]
    layout: Option<LayoutArg>,
}

impl Overrides {
    fn resolve(&self) -> kds::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_json_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if let Some(f) = self.filter {
            cfg.filter_mode = match f {
                FilterArg::Min => FilterMode::Minimum,
                FilterArg::Mean => FilterMode::WeightedMean,
            };
        }
        if let Some(s) = self.sampler {
            cfg.sampler_mode = match s {
                SamplerArg::Area => SamplerMode::AreaQuantile,
                SamplerArg::Index => SamplerMode::IndexWeighted,
            };
        }
        if let Some(n) = self.slices {
            cfg.n_select = n;
        }
        if let Some(l) = self.layout {
            cfg.layout = l.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Process a dataset and write selected slices plus manifest.json
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Worker threads (defaults to the number of CPUs)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Count scans and slices per source and label
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "tree")]
        layout: LayoutArg,
        /// Print JSON instead of tables
        #[arg(long)]
        json: bool,
    },
    /// Show QC, lung areas and the selection for one scan directory
    Inspect {
        #[arg(long)]
        scan: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

const EXIT_PARTIAL: u8 = 1;
const EXIT_FATAL: u8 = 2;

fn run(input: &Path, output: &Path, cfg: &PipelineConfig, workers: usize) -> kds::Result<ExitCode> {
    let report = run_pipeline(input, cfg, output, workers)?;
    let m = &report.manifest;
    for e in &m.excluded {
        let reasons: Vec<String> = e
            .reasons
            .iter()
            .map(|r| serde_json::to_value(r).map(|v| v.as_str().unwrap_or_default().to_owned()))
            .collect::<Result<_, _>>()?;
        println!("excluded {}: {}", e.scan_id, reasons.join(", "));
    }
    if let Some(s) = &m.summary {
        println!(
            "{} of {} scans accepted; {} slices selected from {}",
            s.scans_accepted, s.scans_found, s.slices_selected, s.slices_in_accepted
        );
        if let Some(r) = s.redundancy_percent {
            println!("redundancy reduction: {r:.2}%");
        }
    }
    println!("manifest: {}", report.manifest_path.display());
    Ok(if report.has_exclusions() {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    })
}

fn inspect(dir: &Path, cfg: &PipelineConfig) -> kds::Result<ExitCode> {
    let scan_id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("scan")
        .to_string();
    let volume = load_scan(dir, &scan_id)?;
    let qc = check_consistency(&volume);
    println!("scan: {scan_id}");
    println!("slices: {}", volume.len());
    for f in &volume.unreadable {
        println!("unreadable: {f}");
    }
    println!("qc: {}", serde_json::to_string(&qc)?);
    if !qc.accepted {
        return Ok(ExitCode::from(EXIT_PARTIAL));
    }
    let a = analyze_scan(&volume, cfg)?;
    println!("crop: {:?}{}", a.crop.to_array(), if a.full_frame { " (full frame)" } else { "" });
    println!("areas: {:?}", a.areas);
    println!(
        "bandwidth: {}{}",
        a.selection.bandwidth.h,
        if a.selection.bandwidth.degenerate { " (degenerate)" } else { "" }
    );
    for (&i, &p) in a.selection.indices.iter().zip(&a.selection.per_index_quantile) {
        println!("selected: index {i:>4}  p={p:.4}  area={}  file={}", a.areas[i], volume.slice_files[i]);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            input,
            output,
            overrides,
            workers,
        } => overrides.resolve().and_then(|cfg| {
            let workers = workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            run(&input, &output, &cfg, workers)
        }),
        Command::Stats {
            input,
            layout,
            json,
        } => compute_stats(&input, layout.into()).and_then(|stats| {
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                print!("{}", stats.render());
            }
            Ok(ExitCode::SUCCESS)
        }),
        Command::Inspect { scan, overrides } => overrides.resolve().and_then(|cfg| inspect(&scan, &cfg)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
