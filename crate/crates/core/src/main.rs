use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fdi_lab::cli::{self, RunOptions};
use fdi_lab::par::{self, Execution};

/// Run one study of the oscillator-bath laboratory on a JSON scenario.
#[derive(Debug, Parser)]
#[command(name = "fdi-lab", version)]
struct Args {
    /// Study name, e.g. fd-scan or d-scan.
    study: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the scenario's `out`, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "FDI_LAB_THREADS")]
    threads: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate cells on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("fdi-lab: --threads must be >= 1");
            return ExitCode::from(2);
        }
        par::init_threads(n);
    }
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let opts = RunOptions {
        study: args.study,
        out_dir: args.out,
        seed: args.seed,
        exec: if args.sequential { Execution::Sequential } else { Execution::Parallel },
        threads,
    };
    match cli::run_file(&args.config, &opts) {
        Ok(report) => {
            for v in &report.verdicts {
                let status = serde_json::to_string(&v.status).unwrap_or_default();
                println!("{:<48} {}", v.claim, status.trim_matches('"'));
            }
            println!("wrote {} and {}", report.csv_path.display(), report.summary_path.display());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("fdi-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
