//! The run configuration: one JSON document per run, echoed into every
//! output directory.
//!
//! Everything has a default except `pixel_size` and the paths. Keys not
//! listed here are rejected.
//!
//! ```json
//! {
//!   "pixel_size": 5.0,
//!   "crs": "EPSG:3006",
//!   "paths": { "synth_dir": "run/synth", "map": null, "labels": null, "out": "run/cv" },
//!   "train": { "epochs": 150, "batch_size": 128, "micro_batch": 16, "learning_rate": 0.0001,
//!              "dropout_rate": 0.3, "validation_fraction": 0.2,
//!              "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8, "seed": 0 },
//!   "synth": { "seed": 42, "rows": 1024, "cols": 1024, "origin": [440002.5, 6410002.5],
//!              "wetland_fraction": 0.2, "clutter_density": 0.5, "palette": { ... } },
//!   "fold_axis": "north_south",
//!   "overlap_margin": 0,
//!   "hidden_channels": [128, 64, 64, 32, 32, 32],
//!   "postproc": { "threshold": 0.5, "min_area_m2": 1000.0, "connectivity": "eight" }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use wetmap_core::folds::SplitAxis;
use wetmap_core::model::{NetSpec, DEFAULT_HIDDEN};
use wetmap_core::optim::TrainConfig;
use wetmap_core::postproc::{Connectivity, DEFAULT_CUT, DEFAULT_MIN_AREA_M2};
use wetmap_core::synth::{Palette, SynthConfig};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Where `synth` writes; later commands fall back to its map and truth.
    pub synth_dir: Option<PathBuf>,
    pub map: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Generator settings; pixel size and CRS come from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub origin: (f64, f64),
    pub wetland_fraction: f64,
    pub clutter_density: f64,
    pub palette: Palette,
}

impl Default for SynthSettings {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSettings {
            seed: d.seed,
            rows: d.rows,
            cols: d.cols,
            origin: d.origin,
            wetland_fraction: d.wetland_fraction,
            clutter_density: d.clutter_density,
            palette: d.palette,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocSettings {
    pub threshold: f32,
    pub min_area_m2: f64,
    pub connectivity: Connectivity,
}

impl Default for PostprocSettings {
    fn default() -> Self {
        PostprocSettings {
            threshold: DEFAULT_CUT,
            min_area_m2: DEFAULT_MIN_AREA_M2,
            connectivity: Connectivity::Eight,
        }
    }
}

pub fn default_crs() -> String {
    SynthConfig::default().crs
}

fn default_hidden() -> Vec<usize> {
    DEFAULT_HIDDEN.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Ground metres per map pixel.
    pub pixel_size: f64,
    #[serde(default = "default_crs")]
    pub crs: String,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub synth: SynthSettings,
    #[serde(default)]
    pub fold_axis: SplitAxis,
    /// Extra context pixels around each window beyond the network halo.
    #[serde(default)]
    pub overlap_margin: usize,
    #[serde(default = "default_hidden")]
    pub hidden_channels: Vec<usize>,
    #[serde(default)]
    pub postproc: PostprocSettings,
}

impl RunConfig {
    /// A config with every default and the given pixel size.
    pub fn with_pixel_size(pixel_size: f64) -> Self {
        serde_json::from_value(serde_json::json!({ "pixel_size": pixel_size })).expect("defaults deserialize")
    }

    /// Read `path`, apply `key.path=value` overrides and validate.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let bad = |msg: String| Error::Config {
            path: path.to_path_buf(),
            msg,
        };
        let mut doc: Value =
            serde_json::from_str(&text).map_err(|e| bad(format!("line {} column {}: {e}", e.line(), e.column())))?;
        for o in overrides {
            apply_override(&mut doc, o).map_err(bad)?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| bad(e.to_string()))?;
        cfg.validate().map_err(bad)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.pixel_size.is_finite() && self.pixel_size > 0.0) {
            return Err(format!(
                "pixel_size must be finite and positive, got {}",
                self.pixel_size
            ));
        }
        self.train.validate().map_err(|e| e.to_string())?;
        self.synth_config().validate().map_err(|e| e.to_string())?;
        self.netspec()?;
        let p = &self.postproc;
        if !(0.0..=1.0).contains(&p.threshold) {
            return Err(format!("postproc.threshold must lie in [0, 1], got {}", p.threshold));
        }
        if !(p.min_area_m2 >= 0.0) {
            return Err(format!(
                "postproc.min_area_m2 must be non-negative, got {}",
                p.min_area_m2
            ));
        }
        Ok(())
    }

    pub fn netspec(&self) -> std::result::Result<NetSpec, String> {
        NetSpec::with_hidden(&self.hidden_channels).map_err(|e| e.to_string())
    }

    pub fn synth_config(&self) -> SynthConfig {
        let s = &self.synth;
        SynthConfig {
            seed: s.seed,
            rows: s.rows,
            cols: s.cols,
            pixel_size: self.pixel_size,
            origin: s.origin,
            crs: self.crs.clone(),
            wetland_fraction: s.wetland_fraction,
            clutter_density: s.clutter_density,
            palette: s.palette,
        }
    }

    /// The effective config as pretty JSON.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Set `a.b.c` in `doc` to `value`, parsed as JSON when it parses and taken
/// as a string otherwise.
fn apply_override(doc: &mut Value, assignment: &str) -> std::result::Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override {assignment:?} is not KEY=VALUE"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| format!("override {key:?}: {} is not an object", parts[..i].join(".")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(format!("override {assignment:?} has an empty key"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> std::result::Result<RunConfig, String> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn defaults_and_required_pixel_size() {
        let c = parse(r#"{"pixel_size": 5}"#).unwrap();
        assert_eq!(c.train, TrainConfig::default());
        assert_eq!(c.hidden_channels, DEFAULT_HIDDEN);
        assert_eq!(c.overlap_margin, 0);
        assert_eq!(c.synth_config(), SynthConfig::default());
        assert!(parse("{}").unwrap_err().contains("pixel_size"));
        assert!(parse(r#"{"pixel_size": 0}"#).is_err());
    }

    #[test]
    fn unknown_keys_rejected_at_every_level() {
        assert!(parse(r#"{"pixel_size": 5, "epochs": 3}"#)
            .unwrap_err()
            .contains("unknown field"));
        assert!(parse(r#"{"pixel_size": 5, "train": {"epoch": 3}}"#)
            .unwrap_err()
            .contains("unknown field"));
        assert!(parse(r#"{"pixel_size": 5, "synth": {"pixel_size": 3}}"#)
            .unwrap_err()
            .contains("unknown field"));
    }

    #[test]
    fn echo_round_trips() {
        let c = parse(r#"{"pixel_size": 2.5, "hidden_channels": [16,8,8,8,8,8], "fold_axis": "east_west"}"#).unwrap();
        assert_eq!(parse(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn overrides() {
        let mut v = serde_json::json!({"pixel_size": 5});
        apply_override(&mut v, "train.epochs=3").unwrap();
        apply_override(&mut v, "crs=EPSG:3021").unwrap();
        let c: RunConfig = serde_json::from_value(v.clone()).unwrap();
        assert_eq!((c.train.epochs, c.crs.as_str()), (3, "EPSG:3021"));
        assert!(apply_override(&mut v, "pixel_size.x=1").is_err());
        assert!(apply_override(&mut v, "oops").is_err());
    }
}
