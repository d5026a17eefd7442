use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use crate::clip::ClipSet;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::file::read_features;
use super::toy::{ToyExtractor, ToyExtractorConfig};

/// Maps a clip set to one feature row per clip.
pub trait Extractor: Send + Sync {
    fn tag(&self) -> String;

    fn extract(&self, clips: &ClipSet) -> Result<FeatureMatrix>;

    /// Whether clips of `frames` frames can be fed to this extractor.
    fn accepts_length(&self, frames: usize) -> bool {
        let _ = frames;
        true
    }
}

impl Extractor for ToyExtractor {
    fn tag(&self) -> String {
        ToyExtractor::tag(self)
    }

    fn extract(&self, clips: &ClipSet) -> Result<FeatureMatrix> {
        ToyExtractor::extract(self, clips)
    }
}

struct FnExtractor<F> {
    tag: String,
    f: F,
}

impl<F> Extractor for FnExtractor<F>
where
    F: Fn(&ClipSet) -> Result<FeatureMatrix> + Send + Sync,
{
    fn tag(&self) -> String {
        self.tag.clone()
    }

    fn extract(&self, clips: &ClipSet) -> Result<FeatureMatrix> {
        (self.f)(clips)
    }
}

/// Precomputed features looked up by clip id.
pub struct FileExtractor {
    path: PathBuf,
    features: FeatureMatrix,
    index: HashMap<String, usize>,
}

impl FileExtractor {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let features = read_features(&path)?;
        let ids = features.ids().ok_or_else(|| {
            Error::InvalidInput(format!("{} carries no row ids", path.display()))
        })?;
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(Self {
            path,
            features,
            index,
        })
    }
}

impl Extractor for FileExtractor {
    fn tag(&self) -> String {
        format!("file:{}", self.path.display())
    }

    /// Rows in clip-set order; every clip id must be present in the file.
    fn extract(&self, clips: &ClipSet) -> Result<FeatureMatrix> {
        let mut rows = Vec::with_capacity(clips.len());
        let mut missing = Vec::new();
        for id in clips.ids() {
            match self.index.get(&id) {
                Some(&i) => rows.push(i),
                None => missing.push(id),
            }
        }
        if !missing.is_empty() {
            return Err(Error::IdMismatch { missing });
        }
        let (data, _, tag) = self.features.select_rows(&rows)?.into_parts();
        FeatureMatrix::new(data, Some(clips.ids()), tag)
    }
}

/// Extractors by tag. Populated at startup, read-only afterwards.
///
/// Besides registered tags, [`ExtractorRegistry::resolve`] understands `file:<path>` (a
/// feature file aligned by clip id) and any toy tag such as `toy-v1-64-g4`.
#[derive(Clone, Default)]
pub struct ExtractorRegistry {
    entries: BTreeMap<String, Arc<dyn Extractor>>,
}

impl ExtractorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with the default toy extractor under `toy-v1-128`.
    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        let toy = ToyExtractor::new(ToyExtractorConfig::default()).expect("default toy config is valid");
        reg.register(toy.tag(), Arc::new(toy)).expect("empty registry");
        reg
    }

    pub fn register(&mut self, tag: impl Into<String>, extractor: Arc<dyn Extractor>) -> Result<()> {
        let tag = tag.into();
        if self.entries.contains_key(&tag) || tag.starts_with("file:") {
            return Err(Error::DuplicateTag(tag));
        }
        self.entries.insert(tag, extractor);
        Ok(())
    }

    pub fn register_fn<F>(&mut self, tag: impl Into<String>, f: F) -> Result<()>
    where
        F: Fn(&ClipSet) -> Result<FeatureMatrix> + Send + Sync + 'static,
    {
        let tag = tag.into();
        let ext = FnExtractor { tag: tag.clone(), f };
        self.register(tag, Arc::new(ext))
    }

    pub fn tags(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn resolve(&self, tag: &str) -> Result<Arc<dyn Extractor>> {
        if let Some(e) = self.entries.get(tag) {
            return Ok(Arc::clone(e));
        }
        if let Some(path) = tag.strip_prefix("file:") {
            return Ok(Arc::new(FileExtractor::open(path)?));
        }
        if let Some(cfg) = ToyExtractorConfig::from_tag(tag) {
            return Ok(Arc::new(ToyExtractor::new(cfg)?));
        }
        Err(Error::ExtractorUnavailable(tag.to_string()))
    }
}
