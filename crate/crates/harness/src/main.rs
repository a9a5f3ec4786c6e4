use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qclab_harness::aggregate::{aggregate_files, write_summary};
use qclab_harness::convert::{convert_dataset, ConvertOptions};
use qclab_harness::{run, ExperimentConfig, HarnessError, Result};

#[derive(Parser)]
#[command(name = "qclab", version, about = "Quantum encoding experiments")]
struct Cli {
    /// Replace the config's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Mean and std across seeds for result CSVs matching a glob.
    Aggregate {
        pattern: String,
        /// Write here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Convert an .npz file or a directory of .npy files to a dataset directory.
    ConvertDataset {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        max_train: Option<usize>,
        #[arg(long)]
        max_val: Option<usize>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| HarnessError::config(None, config.display().to_string(), e))?;
            let mut cfg = ExperimentConfig::parse(&text)?;
            if let Some(seed) = cli.seed {
                cfg.seeds = vec![seed];
            }
            if let Some(dir) = cli.out_dir {
                cfg.output_dir = dir;
            }
            let out = run(&cfg)?;
            for f in out.csv_files.iter().chain(&out.plot_files) {
                println!("{}", f.display());
            }
        }
        Command::Aggregate { pattern, output } => {
            let (summary, inputs) = aggregate_files(&pattern)?;
            let output = output.or(cli.out_dir.map(|d| d.join("summary.csv")));
            match output {
                Some(path) => {
                    write_summary(&summary, &inputs, &path)?;
                    println!("{}", path.display());
                }
                None => {
                    let mut w = csv::Writer::from_writer(std::io::stdout());
                    let to_err = |e| HarnessError::csv("<stdout>", e);
                    w.write_record(&summary.header).map_err(to_err)?;
                    for row in &summary.rows {
                        w.write_record(row).map_err(to_err)?;
                    }
                    w.flush().map_err(|e| HarnessError::io("<stdout>", e))?;
                }
            }
        }
        Command::ConvertDataset { input, output, max_train, max_val } => {
            let ds = convert_dataset(&input, &output, ConvertOptions { max_train, max_val })?;
            println!(
                "{}: {}x{}, {} classes, {} train / {} val",
                output.display(),
                ds.height,
                ds.width,
                ds.n_classes,
                ds.train.len(),
                ds.val.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be >= 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(jobs);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
