use serde::Serialize;

use ering_core::SourceConfig;

/// Everything needed to rerun a command and get byte-identical outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    /// Effective configuration after file and `--set` overrides, SI units.
    pub config: SourceConfig,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(config: &SourceConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            config: config.clone(),
            seed: None,
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }
}
