//! In-memory video clips: sequences of 8-bit frames with a shared shape.

use crate::error::{Error, Result};

/// One 8-bit image, row-major, channels interleaved (`H × W × C`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!("frame must be non-empty, got {height}x{width}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!("channels must be 1 or 3, got {channels}")));
        }
        if data.len() != height * width * channels {
            return Err(Error::dims(
                format!("{} bytes", height * width * channels),
                format!("{} bytes", data.len()),
            ));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Rec.601 luma with integer weights: `(77 R + 150 G + 29 B) >> 8`.
    pub fn luma(&self) -> Vec<u8> {
        match self.channels {
            1 => self.data.clone(),
            _ => self
                .data
                .chunks_exact(3)
                .map(|p| ((77 * p[0] as u32 + 150 * p[1] as u32 + 29 * p[2] as u32) >> 8) as u8)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clip {
    pub id: String,
    frames: Vec<Frame>,
}

impl Clip {
    pub fn new(id: impl Into<String>, frames: Vec<Frame>) -> Result<Self> {
        let id = id.into();
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidInput(format!("clip {id:?} has no frames")))?;
        if let Some(bad) = frames.iter().find(|f| !f.same_shape(first)) {
            return Err(Error::dims(shape_str(first), shape_str(bad)));
        }
        Ok(Self { id, frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn channels(&self) -> usize {
        self.frames[0].channels
    }

    /// Frames `start..end` as a new clip with the same id.
    pub fn slice(&self, start: usize, end: usize) -> Result<Clip> {
        if start >= end || end > self.frames.len() {
            return Err(Error::ChunkOutOfRange {
                start,
                end,
                len: self.frames.len(),
            });
        }
        Ok(Clip {
            id: self.id.clone(),
            frames: self.frames[start..end].to_vec(),
        })
    }

    pub fn is_frozen(&self) -> bool {
        self.frames.iter().all(|f| f == &self.frames[0])
    }
}

fn shape_str(f: &Frame) -> String {
    format!("{}x{}x{}", f.height, f.width, f.channels)
}

/// An ordered set of clips that share height, width and channel count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipSet {
    pub name: String,
    clips: Vec<Clip>,
}

impl ClipSet {
    pub fn new(name: impl Into<String>, clips: Vec<Clip>) -> Result<Self> {
        let first = clips.first().ok_or(Error::EmptyClipSet)?;
        let shape = &first.frames[0];
        for clip in &clips {
            if !clip.frames[0].same_shape(shape) {
                return Err(Error::dims(shape_str(shape), shape_str(&clip.frames[0])));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for clip in &clips {
            if !seen.insert(clip.id.as_str()) {
                return Err(Error::DuplicateId(clip.id.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            clips,
        })
    }

    pub fn clips(&self) -> &[Clip] {
        &self.clips
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.clips.iter().map(|c| c.id.clone()).collect()
    }

    pub fn height(&self) -> usize {
        self.clips[0].height()
    }

    pub fn width(&self) -> usize {
        self.clips[0].width()
    }

    pub fn channels(&self) -> usize {
        self.clips[0].channels()
    }

    /// Shortest clip length in the set.
    pub fn min_frames(&self) -> usize {
        self.clips.iter().map(Clip::frame_count).min().unwrap_or(0)
    }

    pub fn max_frames(&self) -> usize {
        self.clips.iter().map(Clip::frame_count).max().unwrap_or(0)
    }

    /// Every frame of every clip as its own one-frame clip, ids `<clip>@<frame>`.
    ///
    /// Used to pool frames for FID.
    pub fn frames_as_clips(&self) -> ClipSet {
        let clips = self
            .clips
            .iter()
            .flat_map(|c| {
                c.frames.iter().enumerate().map(move |(t, f)| Clip {
                    id: format!("{}@{:04}", c.id, t + 1),
                    frames: vec![f.clone()],
                })
            })
            .collect();
        ClipSet {
            name: format!("{}/frames", self.name),
            clips,
        }
    }

    pub fn slice_frames(&self, start: usize, end: usize) -> Result<ClipSet> {
        let clips = self
            .clips
            .iter()
            .map(|c| c.slice(start, end))
            .collect::<Result<Vec<_>>>()?;
        Ok(ClipSet {
            name: format!("{}[{start}..{end}]", self.name),
            clips,
        })
    }
}
