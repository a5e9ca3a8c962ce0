//! Settings file: flat `key = value` TOML. Command-line flags win over the
//! file, the file wins over built-in defaults.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub qo_max: Option<f64>,
    /// Foveal size, e.g. `"fw/8"` or `"170px"`.
    pub w: Option<String>,
    pub base_q: Option<f64>,
    pub fps: Option<f64>,
    pub frames: Option<usize>,
    pub bind: Option<String>,
    pub gaze_port: Option<u16>,
    pub endpoint: Option<String>,
    pub pacing_hz: Option<f64>,
    pub alpha_min: Option<f64>,
    pub v_ref: Option<f64>,
    pub max_age_ms: Option<u64>,
    pub accept_timeout_ms: Option<u64>,
    pub radius: Option<Vec<String>>,
    pub cell_px: Option<u32>,
    pub bandwidth_px: Option<f64>,
    pub weight_scale_px: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Flag, else file value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
