use std::net::IpAddr;
use std::path::PathBuf;

use clap::Parser;
use polyloop_core::render::QUALITY_RESOLUTION;
use polyloop_core::session::DEFAULT_MAX_ITERATIONS;

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Session service for the preference-guided reduction loop.
#[derive(Debug, Clone, Parser)]
#[command(name = "polyloop-service", version)]
pub struct ServiceConfig {
    #[arg(long, env = "POLYLOOP_BIND", default_value = "127.0.0.1")]
    pub bind: IpAddr,
    /// 0 picks a free port.
    #[arg(long, env = "POLYLOOP_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Concurrent decimation jobs across all sessions.
    #[arg(long, env = "POLYLOOP_WORKERS", default_value_t = default_workers())]
    pub workers: usize,
    #[arg(long, env = "POLYLOOP_MAX_ITERATIONS", default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: usize,
    /// Event log and variant meshes live here.
    #[arg(long, env = "POLYLOOP_DATA_DIR", default_value = "polyloop-data")]
    pub data_dir: PathBuf,
    #[arg(long, env = "POLYLOOP_MAX_UPLOAD_BYTES", default_value_t = 16 * 1024 * 1024)]
    pub max_upload_bytes: usize,
    /// Side length of the SSIM renders.
    #[arg(long, env = "POLYLOOP_QUALITY_RESOLUTION", default_value_t = QUALITY_RESOLUTION)]
    pub quality_resolution: usize,
}

impl ServiceConfig {
    /// Defaults with the given data directory, bound to an ephemeral local port.
    pub fn for_data_dir(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            bind: IpAddr::from([127, 0, 0, 1]),
            port: 0,
            workers: default_workers(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            data_dir: data_dir.into(),
            max_upload_bytes: 16 * 1024 * 1024,
            quality_resolution: QUALITY_RESOLUTION,
        }
    }
}
