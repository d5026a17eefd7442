//! Paired video corruptions.
//!
//! A *spatial* distortion draws one set of corruption parameters per clip and applies it to
//! every frame, so frames degrade but stay temporally consistent. A *spatiotemporal*
//! distortion draws fresh parameters for every frame at the same severity, so per-frame
//! quality matches the spatial version in distribution while consecutive frames disagree.
//!
//! Random draws are keyed by `(seed, clip index)` in spatial mode and
//! `(seed, clip index, frame index)` in spatiotemporal mode. Severity does not enter the key,
//! so the same clip sees the same noise pattern at every level, only scaled.

mod blur;
mod elastic;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use blur::{apply_kernel, motion_blur_kernel, BlurKernel};
pub use elastic::{elastic_field, warp_frame, DisplacementField};

use crate::clip::{Clip, ClipSet, Frame};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Elastic,
    MotionBlur,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Spatial,
    Spatiotemporal,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Elastic => "elastic",
            Family::MotionBlur => "motion_blur",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elastic" => Ok(Family::Elastic),
            "motion_blur" | "motion-blur" | "blur" => Ok(Family::MotionBlur),
            _ => Err(Error::InvalidConfig(format!("unknown distortion family {s:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Spatial => "spatial",
            Mode::Spatiotemporal => "spatiotemporal",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial" => Ok(Mode::Spatial),
            "spatiotemporal" => Ok(Mode::Spatiotemporal),
            _ => Err(Error::InvalidConfig(format!("unknown distortion mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticLevel {
    /// Largest displacement as a fraction of `min(H, W)`.
    pub alpha: f64,
    /// Smoothing standard deviation as a fraction of `min(H, W)`.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlurLevel {
    pub kernel_length: usize,
    /// Angles are drawn uniformly from `[0, angle_range)`.
    pub angle_range: f64,
}

/// Corruption parameters per severity level; index 0 is level 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeverityTable {
    pub elastic: Vec<ElasticLevel>,
    pub motion_blur: Vec<BlurLevel>,
}

impl Default for SeverityTable {
    fn default() -> Self {
        Self {
            elastic: [0.02, 0.04, 0.06, 0.08, 0.10]
                .into_iter()
                .map(|alpha| ElasticLevel { alpha, sigma: 0.05 })
                .collect(),
            motion_blur: [5, 9, 13, 17, 21]
                .into_iter()
                .map(|kernel_length| BlurLevel {
                    kernel_length,
                    angle_range: std::f64::consts::PI,
                })
                .collect(),
        }
    }
}

impl SeverityTable {
    pub fn levels(&self, family: Family) -> usize {
        match family {
            Family::Elastic => self.elastic.len(),
            Family::MotionBlur => self.motion_blur.len(),
        }
    }

    /// Whether the dominant parameter (alpha, kernel length) strictly increases with level.
    pub fn is_monotone(&self) -> bool {
        self.elastic.windows(2).all(|w| w[0].alpha < w[1].alpha)
            && self
                .motion_blur
                .windows(2)
                .all(|w| w[0].kernel_length < w[1].kernel_length)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.elastic.iter().enumerate() {
            if !(l.alpha >= 0.0 && l.alpha.is_finite() && l.sigma > 0.0 && l.sigma.is_finite()) {
                return Err(Error::InvalidConfig(format!("elastic level {}: {l:?}", i + 1)));
            }
        }
        for (i, l) in self.motion_blur.iter().enumerate() {
            if l.kernel_length % 2 == 0 || !(l.angle_range >= 0.0 && l.angle_range.is_finite()) {
                return Err(Error::InvalidConfig(format!("motion blur level {}: {l:?}", i + 1)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionSpec {
    pub family: Family,
    /// 1-based severity level.
    pub severity: usize,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default)]
    pub table: SeverityTable,
}

impl DistortionSpec {
    pub fn new(family: Family, severity: usize, mode: Mode, seed: u64) -> Self {
        Self {
            family,
            severity,
            mode,
            seed,
            table: SeverityTable::default(),
        }
    }

    pub fn with_table(mut self, table: SeverityTable) -> Self {
        self.table = table;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.table.validate()?;
        let levels = self.table.levels(self.family);
        if self.severity == 0 || self.severity > levels {
            return Err(Error::InvalidConfig(format!(
                "severity {} outside 1..={levels}",
                self.severity
            )));
        }
        Ok(())
    }

    /// Suffix appended to distorted clip ids, e.g. `+elastic-s3-spatial`.
    pub fn suffix(&self) -> String {
        format!("+{}-s{}-{}", self.family, self.severity, self.mode)
    }
}

/// One parameter draw, applied to one frame or to all frames of a clip.
enum Draw {
    Warp(DisplacementField),
    Blur(BlurKernel),
}

impl Draw {
    fn sample(spec: &DistortionSpec, height: usize, width: usize, seed: u64) -> Result<Self> {
        let level = spec.severity - 1;
        match spec.family {
            Family::Elastic => {
                let p = spec.table.elastic[level];
                Ok(Draw::Warp(elastic_field(height, width, p.alpha, p.sigma, seed)?))
            }
            Family::MotionBlur => {
                let p = spec.table.motion_blur[level];
                let angle = if p.angle_range > 0.0 {
                    rng::seeded(seed).random_range(0.0..p.angle_range)
                } else {
                    0.0
                };
                Ok(Draw::Blur(motion_blur_kernel(p.kernel_length, angle)?))
            }
        }
    }

    fn apply(&self, frame: &Frame) -> Result<Frame> {
        match self {
            Draw::Warp(field) => warp_frame(frame, field),
            Draw::Blur(kernel) => Ok(apply_kernel(frame, kernel)),
        }
    }
}

fn distort_clip(clip: &Clip, index: usize, spec: &DistortionSpec) -> Result<Clip> {
    let (h, w) = (clip.height(), clip.width());
    let frames = match spec.mode {
        Mode::Spatial => {
            let draw = Draw::sample(spec, h, w, rng::derive_seed(spec.seed, &[index as u64]))?;
            clip.frames().iter().map(|f| draw.apply(f)).collect::<Result<Vec<_>>>()?
        }
        Mode::Spatiotemporal => clip
            .frames()
            .iter()
            .enumerate()
            .map(|(t, f)| {
                let seed = rng::derive_seed(spec.seed, &[index as u64, t as u64]);
                Draw::sample(spec, h, w, seed)?.apply(f)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Clip::new(format!("{}{}", clip.id, spec.suffix()), frames)
}

/// Distorts every clip. Clips are processed in parallel; output order and bytes depend only
/// on `(clips, spec)`.
pub fn distort_clipset(clips: &ClipSet, spec: &DistortionSpec) -> Result<ClipSet> {
    if clips.is_empty() {
        return Err(Error::EmptyClipSet);
    }
    spec.validate()?;
    let out = clips
        .clips()
        .par_iter()
        .enumerate()
        .map(|(i, c)| distort_clip(c, i, spec))
        .collect::<Result<Vec<_>>>()?;
    ClipSet::new(format!("{}{}", clips.name, spec.suffix()), out)
}

/// Replaces every frame of every clip by the clip's first frame, keeping the clip length.
pub fn freeze_clipset(clips: &ClipSet) -> Result<ClipSet> {
    if clips.is_empty() {
        return Err(Error::EmptyClipSet);
    }
    let out = clips
        .clips()
        .iter()
        .map(|c| Clip::new(c.id.clone(), vec![c.frames()[0].clone(); c.frame_count()]))
        .collect::<Result<Vec<_>>>()?;
    ClipSet::new(clips.name.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn set() -> ClipSet {
        synthetic::moving_clips(4, 6, 24, 24, 3, 17)
    }

    fn mean_abs_diff(a: &Frame, b: &Frame) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (*x as f64 - *y as f64).abs())
            .sum::<f64>()
            / a.data().len() as f64
    }

    #[test]
    fn default_table_is_monotone() {
        let t = SeverityTable::default();
        assert!(t.is_monotone());
        assert_eq!(t.levels(Family::Elastic), 5);
        assert_eq!(t.levels(Family::MotionBlur), 5);
    }

    #[test]
    fn severity_out_of_range() {
        let s = set();
        for sev in [0, 6] {
            let spec = DistortionSpec::new(Family::Elastic, sev, Mode::Spatial, 0);
            assert!(matches!(distort_clipset(&s, &spec), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn deterministic_and_suffixed() {
        let s = set();
        let spec = DistortionSpec::new(Family::MotionBlur, 3, Mode::Spatiotemporal, 5);
        let a = distort_clipset(&s, &spec).unwrap();
        assert_eq!(a, distort_clipset(&s, &spec).unwrap());
        assert!(a.clips()[0].id.ends_with("+motion_blur-s3-spatiotemporal"));
        let other = distort_clipset(&s, &DistortionSpec { seed: 6, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn spatial_mode_keeps_frozen_clips_frozen() {
        let frozen = freeze_clipset(&set()).unwrap();
        for family in [Family::Elastic, Family::MotionBlur] {
            let out = distort_clipset(&frozen, &DistortionSpec::new(family, 4, Mode::Spatial, 1)).unwrap();
            assert!(out.clips().iter().all(Clip::is_frozen));
        }
    }

    #[test]
    fn spatiotemporal_elastic_breaks_frozen_clips() {
        let frozen = freeze_clipset(&set()).unwrap();
        let inter = |cs: &ClipSet| {
            let mut total = 0.0;
            let mut n = 0;
            for c in cs.clips() {
                for w in c.frames().windows(2) {
                    total += mean_abs_diff(&w[0], &w[1]);
                    n += 1;
                }
            }
            total / n as f64
        };
        let st = distort_clipset(&frozen, &DistortionSpec::new(Family::Elastic, 3, Mode::Spatiotemporal, 1))
            .unwrap();
        let sp = distort_clipset(&frozen, &DistortionSpec::new(Family::Elastic, 3, Mode::Spatial, 1)).unwrap();
        assert_eq!(inter(&sp), 0.0);
        assert!(inter(&st) > 0.0);
    }

    #[test]
    fn identity_levels_are_bit_exact() {
        let s = set();
        let table = SeverityTable {
            elastic: vec![ElasticLevel { alpha: 0.0, sigma: 0.05 }],
            motion_blur: vec![BlurLevel { kernel_length: 1, angle_range: 3.0 }],
        };
        for family in [Family::Elastic, Family::MotionBlur] {
            for mode in [Mode::Spatial, Mode::Spatiotemporal] {
                let spec = DistortionSpec::new(family, 1, mode, 3).with_table(table.clone());
                let out = distort_clipset(&s, &spec).unwrap();
                for (a, b) in out.clips().iter().zip(s.clips()) {
                    assert_eq!(a.frames(), b.frames());
                }
            }
        }
    }

    #[test]
    fn severity_is_monotone_in_pixel_deviation() {
        let s = synthetic::moving_clips(16, 4, 32, 32, 3, 8);
        for family in [Family::Elastic, Family::MotionBlur] {
            let mut prev = 0.0;
            for level in 1..=5 {
                let out = distort_clipset(&s, &DistortionSpec::new(family, level, Mode::Spatial, 2)).unwrap();
                let mut dev = 0.0;
                let mut n = 0;
                for (a, b) in out.clips().iter().zip(s.clips()) {
                    for (fa, fb) in a.frames().iter().zip(b.frames()) {
                        dev += mean_abs_diff(fa, fb);
                        n += 1;
                    }
                }
                let dev = dev / n as f64;
                assert!(dev >= prev, "{family} level {level}: {dev} < {prev}");
                prev = dev;
            }
        }
    }

    #[test]
    fn freeze_is_idempotent() {
        let s = set();
        let once = freeze_clipset(&s).unwrap();
        assert_eq!(freeze_clipset(&once).unwrap(), once);
        for (c, orig) in once.clips().iter().zip(s.clips()) {
            assert_eq!(c.frame_count(), orig.frame_count());
            assert!(c.frames().iter().all(|f| f == &orig.frames()[0]));
        }
    }

    #[test]
    fn family_and_mode_parse() {
        assert_eq!("elastic".parse::<Family>().unwrap(), Family::Elastic);
        assert_eq!("motion_blur".parse::<Family>().unwrap(), Family::MotionBlur);
        assert_eq!("spatiotemporal".parse::<Mode>().unwrap(), Mode::Spatiotemporal);
        assert!("fog".parse::<Family>().is_err());
    }
}
