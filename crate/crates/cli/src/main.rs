use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mmsample::pipeline::{
    run_pipeline, run_sweep, write_sweep_csv, ClustererKind, RunConfig, SamplerChoice, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "mmsample",
    version,
    about = "Minimax distances under linear memory via MST sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline once and write result.json, labels.csv, spectrum.csv, samples.json.
    Run(RunArgs),
    /// Run every configuration in a JSON sweep file and print the results table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// CSV path or gen:<two_blobs|three_spirals>:<n>[:<data_seed>]
    #[arg(long)]
    data: String,
    #[arg(long, value_parser = parse::<SamplerChoice>)]
    sampler: SamplerChoice,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    label_col: Option<String>,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    num_samples: Option<usize>,
    #[arg(long, default_value_t = mmsample::embedding::DEFAULT_MAX_DIM)]
    max_dim: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, value_parser = parse::<ClustererKind>, default_value = "gmm")]
    clusterer: ClustererKind,
    /// Lift the dense cap for `--sampler none`.
    #[arg(long)]
    allow_dense: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse<T: std::str::FromStr<Err = mmsample::Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: mmsample::Error| e.to_string())
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}%", 100.0 * v))
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = RunConfig::new(args.data, args.sampler, args.k, args.seed);
    cfg.label_col = args.label_col;
    cfg.standardize = args.standardize;
    cfg.num_samples = args.num_samples;
    cfg.max_dim = args.max_dim;
    cfg.restarts = args.restarts;
    cfg.clusterer = args.clusterer;
    cfg.allow_dense = args.allow_dense;
    cfg.output = Some(args.out.clone());
    let out = run_pipeline(&cfg)?;
    let r = &out.result;
    println!("dataset   {}", r.dataset);
    println!(
        "sampler   {}  (N={}, samples={}, d'={})",
        r.sampler, r.n_objects, r.n_samples, r.d_prime
    );
    println!("M1 (ARI)  {}", pct(r.m1));
    println!("M2 (AMI)  {}", pct(r.m2));
    println!("M3 (V)    {}", pct(r.m3));
    println!(
        "memory    peak {} entries ({:.2} per object)",
        r.peak_aux_entries,
        out.memory.ratio()
    );
    println!("artifacts {}", args.out.display());
    Ok(())
}

fn sweep(path: PathBuf) -> Result<()> {
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: SweepConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let rows = run_sweep(&cfg)?;
    for r in &rows {
        eprintln!(
            "{:<40} {:<7} M1 {:>8} M2 {:>8} M3 {:>8}  {}",
            r.dataset,
            r.sampler,
            pct(r.m1),
            pct(r.m2),
            pct(r.m3),
            r.status
        );
    }
    write_sweep_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Sweep { config } => sweep(config),
    }
}
