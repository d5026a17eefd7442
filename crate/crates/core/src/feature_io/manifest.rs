//! Clip sets on disk: a JSON manifest plus one directory of numbered PNG frames per clip
//! (`0001.png`, `0002.png`, ...).

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, ImageEncoder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clip::{Clip, ClipSet, Frame};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipEntry {
    pub id: String,
    /// Clip directory relative to the manifest.
    pub path: String,
    pub frame_count: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// SHA-256 over the concatenated frame files, hex encoded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub clips: Vec<ClipEntry>,
}

impl DatasetManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let manifest: Self = serde_json::from_slice(&fs::read(path)?)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.clips.first().ok_or(Error::EmptyClipSet)?;
        for e in &self.clips {
            if e.frame_count == 0 {
                return Err(Error::InvalidInput(format!("clip {:?} has zero frames", e.id)));
            }
            if (e.height, e.width, e.channels) != (first.height, first.width, first.channels) {
                return Err(Error::dims(
                    format!("{}x{}x{}", first.height, first.width, first.channels),
                    format!("{}x{}x{} (clip {:?})", e.height, e.width, e.channels, e.id),
                ));
            }
        }
        Ok(())
    }
}

/// Accepts either the manifest file or the directory holding `manifest.json`.
pub fn resolve_manifest_path(path: impl AsRef<Path>) -> PathBuf {
    let path = path.as_ref();
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn frame_file_name(index: usize) -> String {
    format!("{index:04}.png")
}

fn load_clip(root: &Path, entry: &ClipEntry) -> Result<Clip> {
    let dir = root.join(&entry.path);
    let mut hasher = Sha256::new();
    let mut frames = Vec::with_capacity(entry.frame_count);
    for index in 1..=entry.frame_count {
        let path = dir.join(frame_file_name(index));
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFrame {
                clip: entry.id.clone(),
                index,
                path: path.clone(),
            },
            _ => Error::Io(e),
        })?;
        hasher.update(&bytes);
        let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
            .map_err(|source| Error::Image { path: path.clone(), source })?;
        if (img.height() as usize, img.width() as usize) != (entry.height, entry.width) {
            return Err(Error::dims(
                format!("{}x{} (clip {:?})", entry.height, entry.width, entry.id),
                format!("{}x{} ({})", img.height(), img.width(), path.display()),
            ));
        }
        let data = match entry.channels {
            1 => img.into_luma8().into_raw(),
            3 => img.into_rgb8().into_raw(),
            c => return Err(Error::InvalidInput(format!("unsupported channel count {c}"))),
        };
        frames.push(Frame::new(entry.height, entry.width, entry.channels, data)?);
    }
    if let Some(expected) = &entry.checksum {
        let actual = hex::encode(hasher.finalize());
        if !expected.eq_ignore_ascii_case(&actual) {
            return Err(Error::ChecksumMismatch {
                clip: entry.id.clone(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    Clip::new(entry.id.clone(), frames)
}

/// Loads every clip listed in the manifest, in manifest order.
pub fn load_clipset(manifest_path: impl AsRef<Path>) -> Result<ClipSet> {
    let path = resolve_manifest_path(manifest_path);
    let manifest = DatasetManifest::read(&path)?;
    let root = path.parent().unwrap_or(Path::new("."));
    let clips = manifest
        .clips
        .par_iter()
        .map(|e| load_clip(root, e))
        .collect::<Result<Vec<_>>>()?;
    ClipSet::new(manifest.name, clips)
}

pub fn encode_png(frame: &Frame) -> Result<Vec<u8>> {
    let color = match frame.channels() {
        1 => ColorType::L8,
        _ => ColorType::Rgb8,
    };
    let mut out = Cursor::new(Vec::new());
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(frame.data(), frame.width() as u32, frame.height() as u32, color.into())
        .map_err(|source| Error::Image {
            path: PathBuf::from("<memory>"),
            source,
        })?;
    Ok(out.into_inner())
}

fn clip_dir_name(id: &str) -> String {
    id.chars()
        .map(|c| if matches!(c, '/' | '\\' | ':') { '_' } else { c })
        .collect()
}

/// Writes the clips under `dir` and returns the manifest (also written to
/// `dir/manifest.json`). Checksums are always recorded.
pub fn save_clipset(clips: &ClipSet, dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let entries = clips
        .clips()
        .par_iter()
        .map(|clip| {
            let rel = clip_dir_name(&clip.id);
            let clip_dir = dir.join(&rel);
            fs::create_dir_all(&clip_dir)?;
            let mut hasher = Sha256::new();
            for (t, frame) in clip.frames().iter().enumerate() {
                let png = encode_png(frame)?;
                hasher.update(&png);
                fs::write(clip_dir.join(frame_file_name(t + 1)), &png)?;
            }
            Ok(ClipEntry {
                id: clip.id.clone(),
                path: rel,
                frame_count: clip.frame_count(),
                height: clip.height(),
                width: clip.width(),
                channels: clip.channels(),
                checksum: Some(hex::encode(hasher.finalize())),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        name: clips.name.clone(),
        clips: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(manifest)
}

/// Decodes an image file into a frame, for callers that bring their own layout.
pub fn frame_from_image(img: DynamicImage, channels: usize) -> Result<Frame> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match channels {
        1 => img.into_luma8().into_raw(),
        _ => img.into_rgb8().into_raw(),
    };
    Frame::new(h, w, channels, data)
}
