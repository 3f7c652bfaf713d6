//! Pipeline configuration document.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use monoseal::analysis::OcclusionRegion;
use monoseal::capture::{phase_shifts, ArrayConfig};
use monoseal::operator::Psf;
use monoseal::sr::SrConfig;
use serde::{Deserialize, Serialize};

use crate::exit::Rejection;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Profile {
    #[default]
    #[serde(rename = "paper4x4")]
    #[value(name = "paper4x4")]
    Paper4x4,
    #[serde(rename = "paper6x6")]
    #[value(name = "paper6x6")]
    Paper6x6,
    #[serde(rename = "tiny")]
    #[value(name = "tiny")]
    Tiny,
}

impl Profile {
    pub fn array(self) -> ArrayConfig {
        match self {
            Profile::Paper4x4 => ArrayConfig::default_4x4(),
            Profile::Paper6x6 => ArrayConfig::grid_6x6(),
            Profile::Tiny => ArrayConfig::tiny(),
        }
    }

    /// Synthetic scene size used when no source image is given.
    pub fn scene_dims(self) -> (usize, usize) {
        match self {
            Profile::Paper4x4 | Profile::Paper6x6 => (96, 96),
            Profile::Tiny => (24, 24),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    #[default]
    Chart,
    Natural,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureSettings {
    #[serde(default)]
    pub noise_sigma: f64,
    /// Rows of `R`/`G`/`B` letters separated by `/`.
    pub channel_map: Option<String>,
    pub gamma: Option<usize>,
    pub psf: Option<Psf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSettings {
    #[serde(default)]
    pub kind: SceneKind,
    pub width: Option<usize>,
    pub height: Option<usize>,
}

fn default_occlusion() -> Vec<f64> {
    vec![0.3, 0.7]
}

fn default_region() -> String {
    OcclusionRegion::default().name().into()
}

fn default_delta() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSettings {
    #[serde(default = "default_occlusion")]
    pub occlusion: Vec<f64>,
    #[serde(default = "default_region")]
    pub occlusion_region: String,
    /// Initial-state offset used for the chaos sensitivity rows.
    #[serde(default = "default_delta")]
    pub chaos_delta: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            occlusion: default_occlusion(),
            occlusion_region: default_region(),
            chaos_delta: default_delta(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Colour scene; a synthetic one is rendered when absent.
    pub source: Option<PathBuf>,
    /// Key file; a default key is generated when absent.
    pub key: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub capture: CaptureSettings,
    #[serde(default)]
    pub scene: SceneSettings,
    #[serde(default)]
    pub sr: SrConfig,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub paths: Paths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            seed: 0,
            profile: Profile::default(),
            capture: CaptureSettings::default(),
            scene: SceneSettings::default(),
            sr: SrConfig::default(),
            analysis: AnalysisSettings::default(),
            paths: Paths::default(),
        }
    }
}

impl PipelineConfig {
    /// Parse a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::from_text(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.paths.source, &mut cfg.paths.key, &mut cfg.paths.out] {
            if let Some(rel) = p.as_ref().filter(|p| p.is_relative()) {
                *p = Some(base.join(rel));
            }
        }
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self, Rejection> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Rejection::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Rejection::Config(format!("unsupported config version {}", cfg.version)));
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn array(&self) -> Result<ArrayConfig, Rejection> {
        let mut a = self.profile.array();
        if let Some(g) = self.capture.gamma {
            a.gamma = g;
        }
        if let Some(text) = &self.capture.channel_map {
            let (rows, cols, map) = ArrayConfig::parse_channel_map(text).map_err(Rejection::config)?;
            (a.rows, a.cols, a.channel_map) = (rows, cols, map);
        }
        if let Some(psf) = &self.capture.psf {
            a.psf = psf.clone();
        }
        a.shifts = phase_shifts(&a.channel_map, a.gamma);
        a.noise_sigma = self.capture.noise_sigma;
        a.validate().map_err(Rejection::config)?;
        Ok(a)
    }

    pub fn scene_dims(&self) -> (usize, usize) {
        let (w, h) = self.profile.scene_dims();
        (self.scene.width.unwrap_or(w), self.scene.height.unwrap_or(h))
    }

    pub fn occlusion_region(&self) -> Result<OcclusionRegion, Rejection> {
        self.analysis.occlusion_region.parse().map_err(Rejection::config)
    }

    pub fn validate(&self) -> Result<(), Rejection> {
        self.array()?;
        self.sr.validate().map_err(Rejection::config)?;
        self.occlusion_region()?;
        if let Some(f) = self.analysis.occlusion.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Rejection::Config(format!("occlusion fraction {f} is outside [0, 1]")));
        }
        if !(self.analysis.chaos_delta.is_finite() && self.analysis.chaos_delta != 0.0) {
            return Err(Rejection::Config("chaos_delta must be finite and nonzero".into()));
        }
        let (w, h) = self.scene_dims();
        if w == 0 || h == 0 {
            return Err(Rejection::Config("scene dimensions must be positive".into()));
        }
        for p in [&self.paths.source, &self.paths.key].into_iter().flatten() {
            if !p.is_file() {
                return Err(Rejection::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}
