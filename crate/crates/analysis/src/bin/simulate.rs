use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use polyloop_analysis::experiment::{objective_corpus, synthetic_corpus, ExperimentOptions};
use polyloop_core::fixtures;
use polyloop_core::mesh::load_obj;
use polyloop_core::rater::RaterConfig;
use polyloop_core::sequence::write_jsonl;
use polyloop_core::session::DEFAULT_MAX_ITERATIONS;
use polyloop_core::simulate::MeshObjective;

/// Run simulated sessions for every rater config in a directory and export
/// them as JSONL.
#[derive(Parser)]
struct Args {
    /// Directory of rater JSON documents (*.json).
    #[arg(long)]
    config_dir: PathBuf,
    /// Output JSONL file.
    #[arg(long)]
    out: PathBuf,
    /// Sessions per rater, seeded 0..n.
    #[arg(long, default_value_t = 50)]
    seeds: u64,
    /// `synthetic`, a bundled fixture name, or a path to an OBJ file.
    #[arg(long, default_value = "synthetic")]
    objective: String,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// Keep iterating after the satisfaction rule fires.
    #[arg(long)]
    run_to_cap: bool,
}

fn load_configs(dir: &Path) -> Result<Vec<(String, RaterConfig)>, String> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
            let cfg = RaterConfig::from_json(&text).map_err(|e| format!("{}: {e}", p.display()))?;
            let label = if cfg.name.is_empty() {
                p.file_stem().unwrap_or_default().to_string_lossy().into_owned()
            } else {
                cfg.name.clone()
            };
            Ok((label, cfg))
        })
        .collect()
}

fn run(args: Args) -> Result<(), String> {
    let configs = load_configs(&args.config_dir)?;
    if configs.is_empty() {
        return Err(format!("{}: no *.json rater configs", args.config_dir.display()));
    }
    let opts = ExperimentOptions {
        seeds: 0..args.seeds,
        max_iterations: args.max_iterations,
        stop_on_satisfaction: !args.run_to_cap,
    };
    let objective = if args.objective == "synthetic" {
        None
    } else {
        let mesh = match fixtures::by_name(&args.objective) {
            Some(m) => m,
            None => {
                let f = File::open(&args.objective).map_err(|e| format!("{}: {e}", args.objective))?;
                load_obj(BufReader::new(f)).map_err(|e| format!("{}: {e}", args.objective))?
            }
        };
        let name = Path::new(&args.objective)
            .file_stem()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        Some(MeshObjective::new(name, mesh).map_err(|e| e.to_string())?)
    };

    let mut sequences = Vec::new();
    for (label, cfg) in &configs {
        let batch = match &objective {
            None => synthetic_corpus(label, cfg, &opts),
            Some(o) => objective_corpus(label, o, cfg, &opts),
        }
        .map_err(|e| format!("{label}: {e}"))?;
        let satisfied = batch.iter().filter(|s| s.satisfied_at.is_some()).count();
        eprintln!(
            "{label}: {} sessions, satisfaction rule fired in {satisfied}",
            batch.len()
        );
        sequences.extend(batch);
    }
    let file = File::create(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    write_jsonl(&sequences, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| format!("{}: {e}", args.out.display()))
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
