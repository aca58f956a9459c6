//! Run manifest: one TOML document describing inputs, model settings and
//! the study grid. Relative paths resolve against the manifest's directory.
//!
//! ```toml
//! seed = 42
//! output_dir = "out"
//! n = 5
//! k = 5
//! styles = ["pointwise", "pairwise"]
//!
//! [paths]
//! triples = "triples.nt"
//! ratings = "ratings.csv"
//! mapping = "mapping.tsv"
//!
//! [kg]
//! mode = "both"
//!
//! [train]
//! epochs = 1000
//! learning_rate = 0.03
//!
//! [study]
//! arms = ["pairwise/semantic", "popularity/semantic"]
//! candidate_sample = 30
//! per_arm = 73
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use semauto_core::explain::DEFAULT_K;
use semauto_core::study::{Arm, ArmPolicy, PreferenceModel, StudyConfig};
use semauto_core::{KgConfig, StyleTag, TrainConfig, TripleFormat};
use serde::{Deserialize, Serialize};

pub const DEFAULT_N: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_styles")]
    pub styles: Vec<StyleTag>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub kg: KgConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub triples: Option<PathBuf>,
    #[serde(default = "default_triples_format")]
    pub triples_format: TripleFormat,
    pub ratings: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
}

/// Training settings. The seed comes from the top-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub loss: semauto_core::semauto::LossMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    /// `style/mode` labels; empty means the full 12-arm grid.
    #[serde(default)]
    pub arms: Vec<String>,
    /// Assign every session to this arm instead of drawing one.
    pub forced_arm: Option<String>,
    #[serde(default = "default_candidates")]
    pub candidate_sample: usize,
    #[serde(default = "default_per_arm")]
    pub per_arm: usize,
    #[serde(default)]
    pub preference: PreferenceModel,
}

fn default_seed() -> u64 {
    42
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_n() -> usize {
    DEFAULT_N
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_styles() -> Vec<StyleTag> {
    StyleTag::ALL.to_vec()
}
fn default_triples_format() -> TripleFormat {
    TripleFormat::NTriples
}
fn default_epochs() -> usize {
    TrainConfig::default().epochs
}
fn default_lr() -> f64 {
    TrainConfig::default().learning_rate
}
fn default_candidates() -> usize {
    StudyConfig::default().candidate_sample
}
fn default_per_arm() -> usize {
    73
}

impl Default for Paths {
    fn default() -> Self {
        Paths { triples: None, triples_format: default_triples_format(), ratings: None, mapping: None }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection { epochs: default_epochs(), learning_rate: default_lr(), loss: Default::default() }
    }
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            arms: Vec::new(),
            forced_arm: None,
            candidate_sample: default_candidates(),
            per_arm: default_per_arm(),
            preference: PreferenceModel::default(),
        }
    }
}

impl Default for RunManifest {
    fn default() -> Self {
        toml::from_str("").expect("empty manifest uses defaults")
    }
}

impl RunManifest {
    /// Reads a manifest and resolves its relative paths against the
    /// directory that holds it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: RunManifest =
            toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.resolve(base);
        Ok(m)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [&mut self.paths.triples, &mut self.paths.ratings, &mut self.paths.mapping].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            seed: self.seed,
            loss: self.train.loss,
        }
    }

    pub fn arms(&self) -> Result<Vec<Arm>> {
        if self.study.arms.is_empty() {
            return Ok(Arm::full_grid());
        }
        let mut arms = Vec::with_capacity(self.study.arms.len());
        for label in &self.study.arms {
            let arm: Arm = label.parse().with_context(|| "field `study.arms`".to_string())?;
            if arms.contains(&arm) {
                bail!("field `study.arms`: arm {arm} is listed twice");
            }
            arms.push(arm);
        }
        Ok(arms)
    }

    pub fn study_config(&self) -> Result<StudyConfig> {
        let policy = match &self.study.forced_arm {
            None => ArmPolicy::Random,
            Some(label) => ArmPolicy::Forced(label.parse().context("field `study.forced_arm`")?),
        };
        Ok(StudyConfig {
            arms: self.arms()?,
            policy,
            candidate_sample: self.study.candidate_sample,
            k: self.k,
            train: self.train_config(),
            seed: self.seed,
        })
    }

    /// Checks that a required input is configured and exists.
    pub fn input(&self, field: &str) -> Result<&Path> {
        let value = match field {
            "paths.triples" => &self.paths.triples,
            "paths.ratings" => &self.paths.ratings,
            "paths.mapping" => &self.paths.mapping,
            _ => unreachable!("unknown manifest field {field}"),
        };
        let Some(path) = value else {
            bail!("manifest field `{field}` is missing");
        };
        if !path.is_file() {
            bail!("manifest field `{field}`: {} does not exist", path.display());
        }
        Ok(path)
    }

    /// Validates every field that does not depend on the command.
    pub fn validate(&self) -> Result<()> {
        for field in ["paths.triples", "paths.ratings", "paths.mapping"] {
            self.input(field)?;
        }
        if self.n == 0 {
            bail!("manifest field `n` must be positive");
        }
        if self.k == 0 {
            bail!("manifest field `k` must be positive");
        }
        if self.styles.is_empty() {
            bail!("manifest field `styles` is empty");
        }
        self.train_config().validate().context("section `train`")?;
        self.study_config()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    /// Writes the effective manifest into the output directory.
    pub fn write_provenance(&self) -> Result<()> {
        std::fs::create_dir_all(&self.output_dir)
            .with_context(|| format!("creating {}", self.output_dir.display()))?;
        let path = self.output_dir.join("manifest.toml");
        std::fs::write(&path, self.to_toml()).with_context(|| format!("writing {}", path.display()))
    }
}
