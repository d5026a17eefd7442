//! On-disk formats (feature files, clip manifests) and feature extractors.

pub mod file;
pub mod manifest;
pub mod registry;
pub mod toy;

pub use file::{decode_features, encode_features, read_features, write_features, write_features_as, Dtype};
pub use manifest::{load_clipset, save_clipset, ClipEntry, DatasetManifest};
pub use registry::{Extractor, ExtractorRegistry, FileExtractor};
pub use toy::{toy_blocks, toy_extract, ToyBlocks, ToyExtractor, ToyExtractorConfig};
