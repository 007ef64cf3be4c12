//! Engine configuration file (TOML).
//!
//! ```toml
//! seed = 0
//!
//! [assigner]
//! metric = "gcd"
//! band_lower = 0.60
//! band_upper = 0.95
//!
//! [focal]
//! gamma = 2.0
//!
//! [[fpn]]
//! name = "P3"
//! stride = 8
//! trf_diameter = 107.0
//!
//! [[fpn]]
//! name = "P4"
//! stride = 16
//! layers = [{ kernel = 7, stride = 2 }, { kernel = 3, stride = 2 }]
//! ```
//!
//! Every section is optional. A level may give its TRF directly, derive it
//! from `layers`, or both, in which case `trf_diameter` wins.

use std::path::Path;

use serde::Deserialize;

use crate::assigner::AssignerConfig;
use crate::error::{Error, Result};
use crate::geometry::{compute_trf, default_fpn_levels, ConvLayerSpec, FpnLevelSpec};
use crate::loss::FocalParams;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevel {
    name: String,
    stride: u32,
    trf_diameter: Option<f64>,
    layers: Option<Vec<ConvLayerSpec>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawEngineConfig {
    seed: u64,
    assigner: AssignerConfig,
    focal: FocalParams,
    fpn: Option<Vec<RawLevel>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub fpn_specs: Vec<FpnLevelSpec>,
    pub assigner: AssignerConfig,
    pub focal: FocalParams,
    /// Seed for synthetic fixtures.
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            fpn_specs: default_fpn_levels(),
            assigner: AssignerConfig::default(),
            focal: FocalParams::default(),
            seed: 0,
        }
    }
}

fn resolve_level(i: usize, raw: RawLevel) -> Result<FpnLevelSpec> {
    let field = |name: &str| format!("fpn[{i}].{name}");
    let trf = match (raw.trf_diameter, raw.layers) {
        (Some(d), _) => d,
        (None, Some(layers)) => {
            compute_trf(&layers).map_err(|e| Error::config(field("layers"), e.to_string()))?
        }
        (None, None) => {
            return Err(Error::config(
                field("trf_diameter"),
                "give trf_diameter or layers",
            ))
        }
    };
    FpnLevelSpec::new(raw.name, raw.stride, trf)
        .map_err(|e| Error::config(field("trf_diameter"), e.to_string()))
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawEngineConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<file>".to_string());
            Error::config(field, e.message().to_string())
        })?;
        let fpn_specs = match raw.fpn {
            None => default_fpn_levels(),
            Some(levels) => {
                if levels.is_empty() {
                    return Err(Error::config("fpn", "at least one level is required"));
                }
                levels
                    .into_iter()
                    .enumerate()
                    .map(|(i, l)| resolve_level(i, l))
                    .collect::<Result<_>>()?
            }
        };
        let cfg = EngineConfig {
            fpn_specs,
            assigner: raw.assigner,
            focal: raw.focal,
            seed: raw.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.assigner.validate().map_err(|e| match e {
            Error::Config { field, reason } => Error::config(format!("assigner.{field}"), reason),
            other => other,
        })?;
        self.focal.validate()?;
        if self.fpn_specs.is_empty() {
            return Err(Error::config("fpn", "at least one level is required"));
        }
        Ok(())
    }
}

/// `[[level]]` tables for the `trf` command.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    #[serde(default)]
    level: Vec<LayerFileLevel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFileLevel {
    name: String,
    layers: Vec<ConvLayerSpec>,
}

/// Parses a layer-stack file into `(name, layers)` pairs.
pub fn parse_layer_file(path: &Path, text: &str) -> Result<Vec<(String, Vec<ConvLayerSpec>)>> {
    let load_err = |record: String, reason: String| Error::Load {
        path: path.to_path_buf(),
        record,
        reason,
    };
    let file: LayerFile =
        toml::from_str(text).map_err(|e| load_err("<root>".into(), e.message().to_string()))?;
    if file.level.is_empty() {
        return Err(load_err("level".into(), "no [[level]] entries".into()));
    }
    file.level
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            if l.layers.is_empty() {
                Err(load_err(format!("level[{i}]"), "empty layer list".into()))
            } else {
                Ok((l.name, l.layers))
            }
        })
        .collect()
}
