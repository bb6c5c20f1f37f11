use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use polyloop_analysis::report::{corpus_report, render_text, write_reports};
use polyloop_core::sequence::read_jsonl;

/// Summarize exported evaluation sequences.
#[derive(Parser)]
struct Args {
    /// JSONL export, one sequence per line.
    #[arg(long)]
    input: PathBuf,
    /// Directory for report.txt, report.csv and rating_hist.csv.
    #[arg(long)]
    out: PathBuf,
    /// Significance level of the Mann-Kendall trend test.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        eprintln!("error: --alpha must be in (0, 1)");
        return ExitCode::from(2);
    }
    let file = match File::open(&args.input) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {}: {e}", args.input.display());
            return ExitCode::FAILURE;
        }
    };
    let sequences = match read_jsonl(BufReader::new(file)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.input.display());
            return ExitCode::FAILURE;
        }
    };
    let report = corpus_report(&sequences, args.alpha);
    if let Err(e) = write_reports(&report, &args.out) {
        eprintln!("error: {}: {e}", args.out.display());
        return ExitCode::FAILURE;
    }
    print!("{}", render_text(&report));
    ExitCode::SUCCESS
}
