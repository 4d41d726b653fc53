//! Run configuration as read from JSON.

use std::path::{Path, PathBuf};

use compass_core::compass::CompassConfig;
use compass_core::fermion_ops::{CsoSpec, Sector};
use compass_core::noise::DEFAULT_SAMPLES;
use compass_core::vqe::VqeSettings;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodSpec {
    Compass {
        eps1: f64,
        eps2: f64,
        #[serde(default = "default_sector")]
        sector: Sector,
        #[serde(default)]
        cso: Option<CsoSpec>,
    },
    Uccsd,
    Fci,
}

fn default_sector() -> Sector {
    Sector::OppositeSpin
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Compass { .. } => self.compass().expect("compass").to_string(),
            MethodSpec::Uccsd => "UCCSD".into(),
            MethodSpec::Fci => "FCI".into(),
        }
    }

    pub fn compass(&self) -> Option<CompassConfig> {
        match self {
            MethodSpec::Compass { eps1, eps2, sector, cso } => {
                Some(CompassConfig { eps1: *eps1, eps2: *eps2, sector: *sector, cso: cso.clone() })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSettings {
    #[serde(default = "default_sds")]
    pub sds: Vec<f64>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

fn default_sds() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self { sds: default_sds(), n_samples: default_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Paths or glob patterns, relative to the config file.
    pub fixtures: Vec<String>,
    pub methods: Vec<MethodSpec>,
    /// Spatial orbitals to freeze; absent means the fixture's recommendation.
    #[serde(default)]
    pub frozen: Option<Vec<usize>>,
    #[serde(default)]
    pub vqe: VqeSettings,
    #[serde(default)]
    pub noise: Option<NoiseSettings>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut c: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("config: {e}")))?;
        c.base_dir = base_dir.to_path_buf();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.methods.is_empty() {
            return Err(CliError::Input("config lists no methods".into()));
        }
        for m in &self.methods {
            if let Some(c) = m.compass() {
                c.validate().map_err(|e| CliError::Input(format!("{}: {e}", m.label())))?;
            }
        }
        if let Some(n) = &self.noise {
            if n.n_samples == 0 || n.sds.iter().any(|&s| !(s > 0.0)) {
                return Err(CliError::Input("noise needs n_samples ≥ 1 and positive sds".into()));
            }
        }
        Ok(())
    }

    pub fn output_path(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    /// Expands the fixture list into existing files, sorted by path.
    pub fn resolve_fixtures(&self) -> Result<Vec<PathBuf>, CliError> {
        let mut out = Vec::new();
        for pattern in &self.fixtures {
            let full = self.base_dir.join(pattern);
            let text = full.to_string_lossy().to_string();
            if pattern.contains(['*', '?', '[']) {
                let mut hits: Vec<PathBuf> = glob::glob(&text)
                    .map_err(|e| CliError::Input(format!("bad pattern {pattern}: {e}")))?
                    .filter_map(|p| p.ok())
                    .collect();
                if hits.is_empty() {
                    return Err(CliError::Input(format!("no fixture matches {pattern}")));
                }
                hits.sort();
                out.extend(hits);
            } else if full.is_file() {
                out.push(full);
            } else {
                return Err(CliError::Input(format!("missing fixture {}", full.display())));
            }
        }
        out.dedup();
        if out.is_empty() {
            return Err(CliError::Input("empty geometry list".into()));
        }
        Ok(out)
    }
}
