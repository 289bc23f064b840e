use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bayesopt::{OptConfig, TargetTransform};
use crate::error::{Error, Result};
use crate::loss::{LossWeights, StatsConfig};
use crate::morphology::{CanopyLayout, MorphologyProfile, PlantParams, Species};
use crate::render::{PinholeCamera, DEFAULT_HEIGHT, DEFAULT_VFOV_DEG, DEFAULT_WIDTH};
use crate::rng::RandomSeed;
use crate::rowfit::{LabNormalization, RowFitConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 100 random + 200 guided evaluations, 5 runs.
    #[default]
    Desk,
    /// 200 random + 300 guided evaluations, 10 runs.
    Paper,
}

impl Preset {
    /// Loss values are heavy-tailed, so the surrogate models their logarithm.
    pub fn opt_config(self) -> OptConfig {
        let base = match self {
            Preset::Desk => OptConfig::desk(),
            Preset::Paper => OptConfig::default(),
        };
        OptConfig { target_transform: TargetTransform::Log, ..base }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            _ => Err(Error::config(format!("unknown preset '{s}' (expected desk or paper)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub vfov_deg: f64,
    /// Camera height above the ground plane, m.
    pub render_height: f64,
}

impl RenderConfig {
    pub fn preset(species: Species) -> Self {
        RenderConfig {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            vfov_deg: DEFAULT_VFOV_DEG,
            render_height: match species {
                Species::Soybean => 1.0,
                Species::Maize => 5.0,
            },
        }
    }

    /// Downward camera above the layout origin with its x-axis along the rows.
    pub fn camera(&self) -> PinholeCamera {
        PinholeCamera::looking_down(self.render_height)
            .with_resolution(self.width, self.height)
            .with_vfov(self.vfov_deg)
    }
}

/// Color and coordinate rule that marks observed pixels as background.
/// A pixel is background when `a' < a_below` (and `L' > l_above` if set) and its depth
/// is more than `render_height - ground_margin`, or its depth is below `min_depth`, or
/// its lateral offset is at least `max_abs_y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskThresholds {
    pub normalization: LabNormalization,
    pub a_below: f64,
    pub l_above: Option<f64>,
    pub ground_margin: f64,
    pub min_depth: f64,
    pub max_abs_y: f64,
}

impl MaskThresholds {
    pub fn preset(species: Species) -> Self {
        match species {
            Species::Soybean => MaskThresholds {
                normalization: LabNormalization::SOYBEAN,
                a_below: -8.0,
                l_above: None,
                ground_margin: 0.25,
                min_depth: 0.1,
                max_abs_y: 0.5,
            },
            Species::Maize => MaskThresholds {
                normalization: LabNormalization::MAIZE,
                a_below: -8.0,
                l_above: Some(40.0),
                ground_margin: 2.0,
                min_depth: 0.1,
                max_abs_y: 3.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObservationSource {
    /// Render a hidden canopy; `layout` defaults to the scene layout.
    Synthetic {
        values: Vec<f64>,
        #[serde(default)]
        layout: Option<CanopyLayout>,
        seed: RandomSeed,
    },
    /// Ingest a CDM1 depth map with its camera, plus a PGM mask or a PPM color render.
    Files {
        depth: PathBuf,
        camera: PathBuf,
        #[serde(default)]
        mask: Option<PathBuf>,
        #[serde(default)]
        rgb: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub species: Species,
    pub observation: ObservationSource,
    pub layout: CanopyLayout,
    /// Morphology profile file; the built-in profile when absent.
    #[serde(default)]
    pub profile: Option<PathBuf>,
    pub render: RenderConfig,
    pub rowfit: RowFitConfig,
    /// Histogram binning; derived from species and render height when absent.
    #[serde(default)]
    pub stats: Option<StatsConfig>,
    pub weights: LossWeights,
    pub opt: OptConfig,
    pub mask_thresholds: MaskThresholds,
    pub reporting_seed: RandomSeed,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

pub fn nominal_params(species: Species) -> PlantParams {
    match species {
        Species::Soybean => PlantParams::Soybean(crate::morphology::SoybeanParams::unit(10.0)),
        Species::Maize => PlantParams::Maize(crate::morphology::MaizeParams::unit(14.0)),
    }
}

impl SceneConfig {
    pub fn preset(species: Species, preset: Preset) -> Self {
        SceneConfig {
            species,
            observation: ObservationSource::Synthetic {
                values: nominal_params(species).to_vec(),
                layout: None,
                seed: RandomSeed(1),
            },
            layout: CanopyLayout::default_for(species),
            profile: None,
            render: RenderConfig::preset(species),
            rowfit: RowFitConfig::preset(species),
            stats: None,
            weights: LossWeights::preset(species),
            opt: preset.opt_config(),
            mask_thresholds: MaskThresholds::preset(species),
            reporting_seed: RandomSeed(0x5eed),
            output_dir: None,
        }
    }

    /// Builds a config from preset defaults, a partial JSON document and `key=value` overrides.
    /// The document may carry `species` and `preset`; overrides use dotted paths.
    pub fn resolve(doc: Option<Value>, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc = doc.unwrap_or_else(|| Value::Object(Default::default()));
        if !doc.is_object() {
            return Err(Error::config("scene config must be a JSON object"));
        }
        for (k, v) in overrides {
            apply_override(&mut doc, k, v)?;
        }
        let obj = doc.as_object_mut().expect("checked object");
        let species: Species = match obj.get("species") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::config(format!("species: {e}")))?,
            None => Species::Soybean,
        };
        let preset: Preset = match obj.remove("preset") {
            Some(Value::String(s)) => s.parse()?,
            Some(v) => return Err(Error::config(format!("preset must be a string, got {v}"))),
            None => Preset::Desk,
        };
        let defaults = SceneConfig::preset(species, preset);
        let mut base = serde_json::to_value(&defaults)?;
        // A partial stats block is completed from the species preset at the resolved render height.
        if obj.get("stats").is_some_and(Value::is_object) {
            let height = match obj.get("render").and_then(|r| r.get("render_height")) {
                Some(h) => h.as_f64().ok_or_else(|| Error::config("render.render_height must be a number"))?,
                None => defaults.render.render_height,
            };
            base["stats"] = serde_json::to_value(StatsConfig::preset(species, height))?;
        }
        merge(&mut base, doc);
        let cfg: SceneConfig = serde_json::from_value(base).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn stats_config(&self) -> StatsConfig {
        self.stats.clone().unwrap_or_else(|| StatsConfig::preset(self.species, self.render.render_height))
    }

    pub fn load_profile(&self) -> Result<MorphologyProfile> {
        let p = match &self.profile {
            Some(path) => MorphologyProfile::load(path)?,
            None => MorphologyProfile::default_for(self.species),
        };
        if p.species != self.species {
            return Err(Error::config(format!("profile is for {}, scene is {}", p.species, self.species)));
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.render.camera().validate()?;
        self.rowfit.validate()?;
        self.stats_config().validate()?;
        self.weights.validate()?;
        self.opt.validate()?;
        if let Some(s) = &self.stats {
            if s.render_height != self.render.render_height {
                return Err(Error::config(format!(
                    "stats.render_height {} differs from render.render_height {}",
                    s.render_height, self.render.render_height
                )));
            }
        }
        match &self.observation {
            ObservationSource::Synthetic { values, layout, .. } => {
                PlantParams::from_slice(self.species, values)?;
                if let Some(l) = layout {
                    l.validate()?;
                }
            }
            ObservationSource::Files { depth, camera, mask, rgb } => {
                for p in [Some(depth), Some(camera), mask.as_ref(), rgb.as_ref()].into_iter().flatten() {
                    if !p.exists() {
                        return Err(Error::config(format!("observation file {} does not exist", p.display())));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Recursively overlays `patch` onto `base`; non-object values replace.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Sets the dotted `key` in `root` to `raw`, parsed as JSON when possible and as a string otherwise.
/// Numeric path segments index into existing arrays.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config(format!("invalid override key '{key}'")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if let Value::Array(arr) = cur {
            let idx: usize = part
                .parse()
                .map_err(|_| Error::config(format!("override '{key}': '{part}' is not an array index")))?;
            let len = arr.len();
            let slot = arr
                .get_mut(idx)
                .ok_or_else(|| Error::config(format!("override '{key}': index {idx} out of range ({len})")))?;
            if last {
                *slot = value;
                return Ok(());
            }
            cur = slot;
            continue;
        }
        if !cur.is_object() {
            *cur = Value::Object(Default::default());
        }
        let obj = cur.as_object_mut().expect("object");
        if last {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_follow_dotted_paths() {
        let mut v = json!({"opt": {"n_runs": 3}, "observation": {"values": [1, 2]}});
        apply_override(&mut v, "opt.n_runs", "7").unwrap();
        apply_override(&mut v, "opt.seed", "42").unwrap();
        apply_override(&mut v, "observation.values.1", "9.5").unwrap();
        apply_override(&mut v, "output_dir", "out/run").unwrap();
        assert_eq!(v, json!({"opt": {"n_runs": 7, "seed": 42}, "observation": {"values": [1, 9.5]}, "output_dir": "out/run"}));
        assert!(apply_override(&mut v, "observation.values.5", "1").is_err());
        assert!(apply_override(&mut v, "a..b", "1").is_err());
    }

    #[test]
    fn resolve_presets() {
        let c = SceneConfig::resolve(None, &[]).unwrap();
        assert_eq!(c.species, Species::Soybean);
        assert_eq!((c.opt.n_initial, c.opt.n_total, c.opt.n_runs), (100, 300, 5));
        assert_eq!(c.weights, LossWeights::SOYBEAN);
        assert_eq!(c.stats_config().depth.bins, 20);

        let c = SceneConfig::resolve(Some(json!({"species": "maize", "preset": "paper"})), &[]).unwrap();
        assert_eq!((c.opt.n_initial, c.opt.n_total, c.opt.n_runs), (200, 500, 10));
        assert_eq!(c.render.render_height, 5.0);
        assert_eq!(c.stats_config().depth.bins, 10);
        assert_eq!(c.weights, LossWeights::MAIZE);

        let c = SceneConfig::resolve(None, &[("opt.n_runs".into(), "2".into()), ("render.width".into(), "320".into())]).unwrap();
        assert_eq!(c.opt.n_runs, 2);
        assert_eq!(c.render.camera().width, 320);

        let over = |k: &str, v: &str| (k.to_string(), v.to_string());
        let c = SceneConfig::resolve(
            Some(json!({"species": "maize"})),
            &[over("stats.depth.bins", "7"), over("render.render_height", "4"), over("rowfit.render_height", "4")],
        )
        .unwrap();
        let s = c.stats_config();
        assert_eq!((s.depth.bins, s.depth.lower, s.depth.upper), (7, 2.0, 4.0));
        assert_eq!(s.blur_kernel, 55);
    }

    #[test]
    fn resolve_rejects_bad_input() {
        assert!(SceneConfig::resolve(Some(json!({"species": "wheat"})), &[]).is_err());
        assert!(SceneConfig::resolve(Some(json!({"preset": "huge"})), &[]).is_err());
        assert!(SceneConfig::resolve(Some(json!({"observation": {"kind": "synthetic", "values": [1.0], "seed": 1}})), &[]).is_err());
        assert!(SceneConfig::resolve(
            Some(json!({"observation": {"kind": "files", "depth": "/nonexistent.cdm", "camera": "/nonexistent.json"}})),
            &[]
        )
        .is_err());
    }

    #[test]
    fn config_round_trips() {
        let c = SceneConfig::preset(Species::Maize, Preset::Paper);
        let back: SceneConfig = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
