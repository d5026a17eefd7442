//! A deterministic stand-in for pretrained video networks.
//!
//! Each clip becomes two blocks computed on a `G × G` grid of block-averaged luma:
//! a content block (the grid averaged over frames) and a temporal block (the mean absolute
//! difference between consecutive grids). The concatenation goes through a fixed seeded
//! orthonormal projection. A clip without motion has an all-zero temporal block.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clip::{Clip, ClipSet, Frame};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;

pub const TOY_VERSION: &str = "toy-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyExtractorConfig {
    pub patch_grid: usize,
    pub include_temporal_block: bool,
    pub projection_seed: u64,
    pub output_dim: usize,
}

impl Default for ToyExtractorConfig {
    fn default() -> Self {
        Self {
            patch_grid: 8,
            include_temporal_block: true,
            projection_seed: 0,
            output_dim: 128,
        }
    }
}

impl ToyExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_grid == 0 || self.output_dim == 0 {
            return Err(Error::InvalidConfig("patch_grid and output_dim must be >= 1".into()));
        }
        Ok(())
    }

    /// Length of the concatenated blocks before projection.
    pub fn block_dim(&self) -> usize {
        let g2 = self.patch_grid * self.patch_grid;
        if self.include_temporal_block {
            2 * g2
        } else {
            g2
        }
    }

    /// `toy-v1-<D>`, with `-g<G>`, `-nt` and `-p<seed>` appended for non-default grid,
    /// disabled temporal block and non-default projection seed.
    pub fn tag(&self) -> String {
        let mut tag = format!("{TOY_VERSION}-{}", self.output_dim);
        if self.patch_grid != 8 {
            tag.push_str(&format!("-g{}", self.patch_grid));
        }
        if !self.include_temporal_block {
            tag.push_str("-nt");
        }
        if self.projection_seed != 0 {
            tag.push_str(&format!("-p{}", self.projection_seed));
        }
        tag
    }

    /// Inverse of [`ToyExtractorConfig::tag`].
    pub fn from_tag(tag: &str) -> Option<Self> {
        let rest = tag.strip_prefix(TOY_VERSION)?.strip_prefix('-')?;
        let mut parts = rest.split('-');
        let mut cfg = Self {
            output_dim: parts.next()?.parse().ok()?,
            ..Self::default()
        };
        for part in parts {
            if let Some(g) = part.strip_prefix('g') {
                cfg.patch_grid = g.parse().ok()?;
            } else if part == "nt" {
                cfg.include_temporal_block = false;
            } else {
                let p = part.strip_prefix('p')?;
                cfg.projection_seed = p.parse().ok()?;
            }
        }
        (cfg.validate().is_ok() && cfg.tag() == tag).then_some(cfg)
    }
}

/// Block-averaged luma in `[0, 1]`, row-major `G × G`.
pub fn downsample(frame: &Frame, grid: usize) -> Result<Vec<f64>> {
    let (h, w) = (frame.height(), frame.width());
    if h < grid || w < grid {
        return Err(Error::InvalidConfig(format!(
            "{h}x{w} frames are smaller than the {grid}x{grid} grid"
        )));
    }
    let luma = frame.luma();
    let mut out = Vec::with_capacity(grid * grid);
    for gy in 0..grid {
        let (y0, y1) = (gy * h / grid, (gy + 1) * h / grid);
        for gx in 0..grid {
            let (x0, x1) = (gx * w / grid, (gx + 1) * w / grid);
            let mut sum = 0u64;
            for y in y0..y1 {
                sum += luma[y * w + x0..y * w + x1].iter().map(|&v| v as u64).sum::<u64>();
            }
            out.push(sum as f64 / ((y1 - y0) * (x1 - x0)) as f64 / 255.0);
        }
    }
    Ok(out)
}

/// Content and temporal blocks of one clip, before projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyBlocks {
    pub content: Vec<f64>,
    pub temporal: Vec<f64>,
}

pub fn toy_blocks(clip: &Clip, grid: usize) -> Result<ToyBlocks> {
    let grids = clip
        .frames()
        .iter()
        .map(|f| downsample(f, grid))
        .collect::<Result<Vec<_>>>()?;
    let g2 = grid * grid;
    let t = grids.len() as f64;
    let mut content = vec![0.0; g2];
    for g in &grids {
        content.iter_mut().zip(g).for_each(|(c, v)| *c += v);
    }
    content.iter_mut().for_each(|c| *c /= t);
    let mut temporal = vec![0.0; g2];
    if grids.len() > 1 {
        for pair in grids.windows(2) {
            for (acc, (a, b)) in temporal.iter_mut().zip(pair[0].iter().zip(&pair[1])) {
                *acc += (b - a).abs();
            }
        }
        let pairs = (grids.len() - 1) as f64;
        temporal.iter_mut().for_each(|v| *v /= pairs);
    }
    Ok(ToyBlocks { content, temporal })
}

#[derive(Debug, Clone)]
pub struct ToyExtractor {
    config: ToyExtractorConfig,
    projection: DMatrix<f64>,
}

impl ToyExtractor {
    pub fn new(config: ToyExtractorConfig) -> Result<Self> {
        config.validate()?;
        let (out, inp) = (config.output_dim, config.block_dim());
        let mut r = rng::derived(config.projection_seed, &[out as u64, inp as u64]);
        let projection = if out >= inp {
            let g = DMatrix::<f64>::from_fn(out, inp, |_, _| r.sample(StandardNormal));
            g.qr().q()
        } else {
            let g = DMatrix::<f64>::from_fn(inp, out, |_, _| r.sample(StandardNormal));
            g.qr().q().transpose()
        };
        Ok(Self { config, projection })
    }

    pub fn config(&self) -> &ToyExtractorConfig {
        &self.config
    }

    pub fn tag(&self) -> String {
        self.config.tag()
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn extract_clip(&self, clip: &Clip) -> Result<Vec<f64>> {
        let blocks = toy_blocks(clip, self.config.patch_grid)?;
        let mut x = blocks.content;
        if self.config.include_temporal_block {
            x.extend(blocks.temporal);
        }
        let y = &self.projection * DVector::from_vec(x);
        Ok(y.iter().copied().collect())
    }

    pub fn extract(&self, clips: &ClipSet) -> Result<FeatureMatrix> {
        if clips.is_empty() {
            return Err(Error::EmptyClipSet);
        }
        let rows = clips
            .clips()
            .par_iter()
            .map(|c| self.extract_clip(c))
            .collect::<Result<Vec<_>>>()?;
        FeatureMatrix::from_rows(&rows, Some(clips.ids()), self.tag())
    }
}

pub fn toy_extract(clips: &ClipSet, config: &ToyExtractorConfig) -> Result<FeatureMatrix> {
    ToyExtractor::new(*config)?.extract(clips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::freeze_clipset;
    use crate::synthetic::moving_clips;

    #[test]
    fn tag_round_trip() {
        let d = ToyExtractorConfig::default();
        assert_eq!(d.tag(), "toy-v1-128");
        assert_eq!(ToyExtractorConfig::from_tag("toy-v1-128"), Some(d));
        let c = ToyExtractorConfig {
            patch_grid: 4,
            include_temporal_block: false,
            projection_seed: 3,
            output_dim: 16,
        };
        assert_eq!(c.tag(), "toy-v1-16-g4-nt-p3");
        assert_eq!(ToyExtractorConfig::from_tag(&c.tag()), Some(c));
        assert_eq!(ToyExtractorConfig::from_tag("toy-v1-16-g8"), None);
        assert_eq!(ToyExtractorConfig::from_tag("i3d"), None);
    }

    #[test]
    fn projection_is_orthonormal() {
        let e = ToyExtractor::new(ToyExtractorConfig::default()).unwrap();
        let p = e.projection();
        assert_eq!(p.shape(), (128, 128));
        assert!((p.transpose() * p - DMatrix::identity(128, 128)).amax() < 1e-12);
        let narrow = ToyExtractor::new(ToyExtractorConfig {
            output_dim: 32,
            ..Default::default()
        })
        .unwrap();
        let p = narrow.projection();
        assert!((p * p.transpose() - DMatrix::identity(32, 32)).amax() < 1e-12);
    }

    #[test]
    fn frozen_clip_has_zero_temporal_block() {
        let frozen = freeze_clipset(&moving_clips(3, 5, 16, 16, 3, 2)).unwrap();
        for c in frozen.clips() {
            assert!(toy_blocks(c, 8).unwrap().temporal.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn mid_gray_content_block() {
        let f = Frame::filled(16, 16, 3, 128).unwrap();
        let clip = Clip::new("g", vec![f; 3]).unwrap();
        let b = toy_blocks(&clip, 8).unwrap();
        assert!(b.content.iter().all(|&v| v == 128.0 / 255.0));
    }

    #[test]
    fn frame_order_changes_only_temporal_block() {
        let clip = moving_clips(1, 4, 16, 16, 3, 5).clips()[0].clone();
        let mut frames = clip.frames().to_vec();
        frames.swap(1, 3);
        let swapped = Clip::new("s", frames).unwrap();
        let a = toy_blocks(&clip, 8).unwrap();
        let b = toy_blocks(&swapped, 8).unwrap();
        for (x, y) in a.content.iter().zip(&b.content) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_ne!(a.temporal, b.temporal);
    }

    #[test]
    fn extraction_is_deterministic() {
        let set = moving_clips(4, 3, 16, 16, 3, 6);
        let a = toy_extract(&set, &ToyExtractorConfig::default()).unwrap();
        let b = toy_extract(&set, &ToyExtractorConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.rows(), a.dim()), (4, 128));
        assert_eq!(a.ids().unwrap(), set.ids());
        assert_eq!(a.extractor_tag(), "toy-v1-128");
    }

    #[test]
    fn grid_larger_than_frame() {
        let set = moving_clips(1, 1, 4, 4, 1, 0);
        assert!(toy_extract(&set, &ToyExtractorConfig::default()).is_err());
    }
}
