use serde::{Deserialize, Serialize};

use crate::clip::ClipSet;
use crate::error::{Error, Result};
use crate::feature_io::Extractor;
use crate::frechet::compute_fvd;

use super::report::{delta_pct_opt, Cell, Report, Table, REPORT_VERSION};
use super::sensitivity::check_length;

/// Which frame windows to evaluate: `chunk_length` frames starting every `stride` frames,
/// or at explicit `offsets`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkSchedule {
    pub chunk_length: usize,
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<usize>>,
    /// Also evaluate every frame at once.
    #[serde(default)]
    pub full_length: bool,
}

impl Default for ChunkSchedule {
    fn default() -> Self {
        Self {
            chunk_length: 16,
            stride: 64,
            offsets: None,
            full_length: false,
        }
    }
}

impl ChunkSchedule {
    /// Chunk start offsets for clips of `total` frames.
    pub fn offsets_for(&self, total: usize) -> Result<Vec<usize>> {
        if self.chunk_length == 0 {
            return Err(Error::InvalidConfig("chunk_length must be >= 1".into()));
        }
        let offsets = match &self.offsets {
            Some(explicit) => {
                if explicit.is_empty() || explicit.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidConfig(
                        "chunk offsets must be non-empty and strictly increasing".into(),
                    ));
                }
                explicit.clone()
            }
            None => {
                if self.stride == 0 {
                    return Err(Error::InvalidConfig("stride must be >= 1".into()));
                }
                (0..)
                    .map(|i| i * self.stride)
                    .take_while(|o| o + self.chunk_length <= total)
                    .collect()
            }
        };
        if let Some(&bad) = offsets.iter().find(|&&o| o + self.chunk_length > total) {
            return Err(Error::ChunkOutOfRange {
                start: bad,
                end: bad + self.chunk_length,
                len: total,
            });
        }
        if offsets.is_empty() {
            return Err(Error::ChunkOutOfRange {
                start: 0,
                end: self.chunk_length,
                len: total,
            });
        }
        Ok(offsets)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub offset: usize,
    pub end: usize,
    pub fvd: f64,
    /// Change relative to the first chunk, in percent.
    pub change_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullLengthRecord {
    pub frames: usize,
    pub fvd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongVideoReport {
    pub report_version: u32,
    pub kind: String,
    pub extractor_tag: String,
    pub schedule: ChunkSchedule,
    pub chunks: Vec<ChunkRecord>,
    pub full_length: Option<FullLengthRecord>,
}

impl Report for LongVideoReport {
    fn table(&self) -> Table {
        let mut t = Table::new(
            format!("chunked FVD (extractor {})", self.extractor_tag),
            &["frames", "FVD", "Δ vs first"],
        );
        for c in &self.chunks {
            t.push(vec![
                Cell::Text(format!("{}->{}", c.offset, c.end)),
                Cell::Num(c.fvd),
                Cell::Pct(c.change_pct),
            ]);
        }
        if let Some(full) = &self.full_length {
            t.push(vec![
                Cell::Text(format!("all {}", full.frames)),
                Cell::Num(full.fvd),
                Cell::Text(String::new()),
            ]);
        }
        t
    }
}

/// FVD between matching frame windows of the two sets, plus optionally over all frames.
pub fn run_long_video(
    reference: &ClipSet,
    generated: &ClipSet,
    schedule: &ChunkSchedule,
    video_extractor: &dyn Extractor,
) -> Result<LongVideoReport> {
    let total = reference.min_frames().min(generated.min_frames());
    let offsets = schedule.offsets_for(total)?;
    check_length(video_extractor, schedule.chunk_length)?;
    if schedule.full_length {
        for set in [reference, generated] {
            check_length(video_extractor, set.max_frames())?;
        }
    }
    let mut chunks: Vec<ChunkRecord> = Vec::with_capacity(offsets.len());
    for &offset in &offsets {
        let end = offset + schedule.chunk_length;
        let r = video_extractor.extract(&reference.slice_frames(offset, end)?)?;
        let g = video_extractor.extract(&generated.slice_frames(offset, end)?)?;
        let fvd = compute_fvd(&r, &g)?.value;
        let change_pct = match chunks.first() {
            Some(first) => delta_pct_opt(first.fvd, fvd),
            None => Some(0.0),
        };
        chunks.push(ChunkRecord {
            offset,
            end,
            fvd,
            change_pct,
        });
    }
    let full_length = if schedule.full_length {
        let r = video_extractor.extract(reference)?;
        let g = video_extractor.extract(generated)?;
        Some(FullLengthRecord {
            frames: reference.max_frames().max(generated.max_frames()),
            fvd: compute_fvd(&r, &g)?.value,
        })
    } else {
        None
    };
    Ok(LongVideoReport {
        report_version: REPORT_VERSION,
        kind: "long_video".into(),
        extractor_tag: video_extractor.tag(),
        schedule: schedule.clone(),
        chunks,
        full_length,
    })
}
