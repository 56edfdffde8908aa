//! JSON documents accepted by the command-line tools: stack files, tag files
//! and design problems.
//!
//! A material reference is either `{"csv": "materials/ag.csv"}` or
//! `{"constant": {"n": 1.57, "k": 0.0}}`. Relative CSV paths resolve against a
//! data directory.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets;
use crate::designer::{DesignSpace, DesignTarget, TargetKind};
use crate::materials::{parse_material, MaterialDispersion, MaterialError};
use crate::tag::{EcLevel, LiquidCrystal};
use crate::tmm::{Channel, Layer, StackSpec, TmmError};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Material {
        path: PathBuf,
        source: MaterialError,
    },
    #[error(transparent)]
    Tmm(#[from] TmmError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantIndex {
    pub n: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialRef {
    Csv(String),
    Constant(ConstantIndex),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub material: MaterialRef,
    pub thickness_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackDoc {
    pub ambient: MaterialRef,
    pub layers: Vec<LayerDoc>,
    pub exit: MaterialRef,
}

impl StackDoc {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Loads CSV materials once per path and hands out shared references.
#[derive(Debug)]
pub struct MaterialResolver {
    data_dir: Option<PathBuf>,
    cache: HashMap<String, Arc<MaterialDispersion>>,
}

impl MaterialResolver {
    /// Resolves relative CSV paths against `data_dir`.
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: Some(data_dir.into()),
            cache: HashMap::new(),
        }
    }

    /// Serves only the tables compiled into the library
    /// (`materials/ag.csv`, `materials/zno.csv`).
    pub fn bundled() -> Self {
        let mut cache = HashMap::new();
        cache.insert("materials/ag.csv".to_string(), Arc::new(assets::silver()));
        cache.insert("materials/zno.csv".to_string(), Arc::new(assets::zno()));
        Self {
            data_dir: None,
            cache,
        }
    }

    pub fn resolve(&mut self, reference: &MaterialRef) -> Result<Arc<MaterialDispersion>, FileError> {
        match reference {
            MaterialRef::Constant(c) => {
                let name = format!("n={} k={}", c.n, c.k);
                let m = MaterialDispersion::constant(name, c.n, c.k).map_err(|source| FileError::Material {
                    path: PathBuf::from("<constant>"),
                    source,
                })?;
                Ok(Arc::new(m))
            }
            MaterialRef::Csv(path) => {
                if let Some(m) = self.cache.get(path) {
                    return Ok(m.clone());
                }
                let dir = self.data_dir.as_ref().ok_or_else(|| {
                    FileError::Invalid(format!("material {path} is not bundled and no data directory is set"))
                })?;
                let full = dir.join(path);
                let text = fs::read_to_string(&full).map_err(|source| FileError::Io {
                    path: full.clone(),
                    source,
                })?;
                let name = Path::new(path)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.clone());
                let m = Arc::new(
                    parse_material(&name, &text).map_err(|source| FileError::Material { path: full, source })?,
                );
                self.cache.insert(path.clone(), m.clone());
                Ok(m)
            }
        }
    }

    pub fn stack(&mut self, doc: &StackDoc) -> Result<StackSpec, FileError> {
        let ambient = self.resolve(&doc.ambient)?;
        let exit = self.resolve(&doc.exit)?;
        let layers = doc
            .layers
            .iter()
            .map(|l| Ok(Layer::new(self.resolve(&l.material)?, l.thickness_nm)?))
            .collect::<Result<Vec<_>, FileError>>()?;
        Ok(StackSpec::new(ambient, layers, exit))
    }
}

/// The bundled ZnO 30 / Ag 30 / ZnO 150 / Ag 30 nanocavity on PET.
pub fn paper_stack() -> StackSpec {
    let doc = StackDoc::parse(assets::PAPER_STACK_JSON).expect("bundled stack file parses");
    MaterialResolver::bundled().stack(&doc).expect("bundled stack resolves")
}

pub fn read_to_string(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagDoc {
    pub stack: StackDoc,
    #[serde(default)]
    pub payload: Option<String>,
    #[serde(default = "default_ec")]
    pub ec_level: EcLevel,
    pub lc: LiquidCrystal,
    #[serde(default)]
    pub seed: u64,
}

fn default_ec() -> EcLevel {
    EcLevel::M
}

impl TagDoc {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetDoc {
    PeakAt {
        lambda_nm: f64,
        channel: ChannelDoc,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
    ValueAt {
        lambda_nm: f64,
        channel: ChannelDoc,
        target: f64,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
    ModeColorSeparation {
        min_distance: f64,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelDoc {
    R,
    T,
}

impl From<ChannelDoc> for Channel {
    fn from(c: ChannelDoc) -> Self {
        match c {
            ChannelDoc::R => Channel::R,
            ChannelDoc::T => Channel::T,
        }
    }
}

impl From<&TargetDoc> for DesignTarget {
    fn from(doc: &TargetDoc) -> Self {
        match *doc {
            TargetDoc::PeakAt { lambda_nm, channel, weight } => DesignTarget {
                kind: TargetKind::PeakAt {
                    wavelength_nm: lambda_nm,
                    channel: channel.into(),
                },
                weight,
            },
            TargetDoc::ValueAt {
                lambda_nm,
                channel,
                target,
                weight,
            } => DesignTarget {
                kind: TargetKind::ValueAt {
                    wavelength_nm: lambda_nm,
                    channel: channel.into(),
                    target,
                },
                weight,
            },
            TargetDoc::ModeColorSeparation { min_distance, weight } => DesignTarget {
                kind: TargetKind::ModeColorSeparation { min_distance },
                weight,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDoc {
    pub stack: StackDoc,
    pub bounds: Vec<[f64; 2]>,
    pub frozen: Vec<bool>,
    pub targets: Vec<TargetDoc>,
    pub budget: usize,
    pub seed: u64,
}

impl DesignDoc {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(
        &self,
        resolver: &mut MaterialResolver,
    ) -> Result<(DesignSpace, Vec<DesignTarget>), FileError> {
        let template = resolver.stack(&self.stack)?;
        let bounds = self.bounds.iter().map(|b| (b[0], b[1])).collect();
        let space = DesignSpace::new(template, bounds, self.frozen.clone())
            .map_err(|e| FileError::Invalid(e.to_string()))?;
        Ok((space, self.targets.iter().map(DesignTarget::from).collect()))
    }
}
