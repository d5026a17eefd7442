use serde::{Deserialize, Serialize};

use crate::clip::ClipSet;
use crate::distortion::{distort_clipset, DistortionSpec, Family, Mode, SeverityTable};
use crate::error::{Error, Result};
use crate::feature_io::Extractor;
use crate::features::FeatureMatrix;
use crate::frechet::compute_fvd;

use super::report::{delta_pct_opt, Cell, Report, Table, REPORT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub family: Family,
    pub levels: Vec<usize>,
    pub seed: u64,
    #[serde(default)]
    pub table: SeverityTable,
}

impl SensitivityConfig {
    pub fn new(family: Family, seed: u64) -> Self {
        Self {
            family,
            levels: (1..=5).collect(),
            seed,
            table: SeverityTable::default(),
        }
    }
}

/// FID and FVD of the spatially and spatiotemporally distorted sets at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub fid_spatial: f64,
    pub fid_spatiotemporal: f64,
    pub fid_delta_pct: Option<f64>,
    pub fvd_spatial: f64,
    pub fvd_spatiotemporal: f64,
    pub fvd_delta_pct: Option<f64>,
}

impl LevelRecord {
    fn new(level: usize, fid: (f64, f64), fvd: (f64, f64)) -> Self {
        Self {
            level,
            fid_spatial: fid.0,
            fid_spatiotemporal: fid.1,
            fid_delta_pct: delta_pct_opt(fid.0, fid.1),
            fvd_spatial: fvd.0,
            fvd_spatiotemporal: fvd.1,
            fvd_delta_pct: delta_pct_opt(fvd.0, fvd.1),
        }
    }
}

/// Level-averaged values. Deltas are computed from the averaged values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRecord {
    pub fid_spatial: f64,
    pub fid_spatiotemporal: f64,
    pub fid_delta_pct: Option<f64>,
    pub fvd_spatial: f64,
    pub fvd_spatiotemporal: f64,
    pub fvd_delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub report_version: u32,
    pub kind: String,
    pub family: Family,
    pub extractor_tag: String,
    pub frame_extractor_tag: String,
    pub clip_count: usize,
    pub seed: u64,
    pub severity_table: SeverityTable,
    pub levels: Vec<LevelRecord>,
    pub average: AverageRecord,
}

impl Report for SensitivityReport {
    fn table(&self) -> Table {
        let mut t = Table::new(
            format!(
                "temporal sensitivity: {} ({} clips, extractor {}, frames {})",
                self.family, self.clip_count, self.extractor_tag, self.frame_extractor_tag
            ),
            &["level", "FID S", "FID ST", "FID Δ", "FVD S", "FVD ST", "FVD Δ"],
        );
        for r in &self.levels {
            t.push(vec![
                Cell::Int(r.level as u64),
                Cell::Num(r.fid_spatial),
                Cell::Num(r.fid_spatiotemporal),
                Cell::Pct(r.fid_delta_pct),
                Cell::Num(r.fvd_spatial),
                Cell::Num(r.fvd_spatiotemporal),
                Cell::Pct(r.fvd_delta_pct),
            ]);
        }
        let a = &self.average;
        t.push(vec![
            Cell::Text("avg".into()),
            Cell::Num(a.fid_spatial),
            Cell::Num(a.fid_spatiotemporal),
            Cell::Pct(a.fid_delta_pct),
            Cell::Num(a.fvd_spatial),
            Cell::Num(a.fvd_spatiotemporal),
            Cell::Pct(a.fvd_delta_pct),
        ]);
        t
    }
}

pub(crate) fn check_length(extractor: &dyn Extractor, frames: usize) -> Result<()> {
    if extractor.accepts_length(frames) {
        Ok(())
    } else {
        Err(Error::ExtractorLengthUnsupported {
            tag: extractor.tag(),
            frames,
        })
    }
}

/// Distorts `reference` spatially and spatiotemporally at every requested level and measures
/// both sets against the clean originals: FVD on clip features, FID on all frames pooled.
pub fn run_sensitivity(
    reference: &ClipSet,
    config: &SensitivityConfig,
    video_extractor: &dyn Extractor,
    frame_extractor: &dyn Extractor,
) -> Result<SensitivityReport> {
    if reference.is_empty() {
        return Err(Error::EmptyClipSet);
    }
    if config.levels.is_empty() {
        return Err(Error::InvalidConfig("no severity levels requested".into()));
    }
    for &frames in &[reference.min_frames(), reference.max_frames()] {
        check_length(video_extractor, frames)?;
    }
    check_length(frame_extractor, 1)?;

    let ref_video = video_extractor.extract(reference)?;
    let ref_frames = frame_extractor.extract(&reference.frames_as_clips())?;
    let measure = |set: &ClipSet| -> Result<(f64, f64)> {
        let fid = compute_fvd(&ref_frames, &frame_extractor.extract(&set.frames_as_clips())?)?.value;
        let fvd = compute_fvd(&ref_video, &video_extractor.extract(set)?)?.value;
        Ok((fid, fvd))
    };

    let mut levels = Vec::with_capacity(config.levels.len());
    for &level in &config.levels {
        let spec = |mode| DistortionSpec::new(config.family, level, mode, config.seed).with_table(config.table.clone());
        let (fid_s, fvd_s) = measure(&distort_clipset(reference, &spec(Mode::Spatial))?)?;
        let (fid_st, fvd_st) = measure(&distort_clipset(reference, &spec(Mode::Spatiotemporal))?)?;
        log::info!("{} level {level}: FVD {fvd_s:.4} -> {fvd_st:.4}", config.family);
        levels.push(LevelRecord::new(level, (fid_s, fid_st), (fvd_s, fvd_st)));
    }

    let n = levels.len() as f64;
    let mean = |f: fn(&LevelRecord) -> f64| levels.iter().map(f).sum::<f64>() / n;
    let (fid_s, fid_st) = (mean(|r| r.fid_spatial), mean(|r| r.fid_spatiotemporal));
    let (fvd_s, fvd_st) = (mean(|r| r.fvd_spatial), mean(|r| r.fvd_spatiotemporal));
    let average = AverageRecord {
        fid_spatial: fid_s,
        fid_spatiotemporal: fid_st,
        fid_delta_pct: delta_pct_opt(fid_s, fid_st),
        fvd_spatial: fvd_s,
        fvd_spatiotemporal: fvd_st,
        fvd_delta_pct: delta_pct_opt(fvd_s, fvd_st),
    };

    Ok(SensitivityReport {
        report_version: REPORT_VERSION,
        kind: "sensitivity".into(),
        family: config.family,
        extractor_tag: video_extractor.tag(),
        frame_extractor_tag: frame_extractor.tag(),
        clip_count: reference.len(),
        seed: config.seed,
        severity_table: config.table.clone(),
        levels,
        average,
    })
}

/// Features of every frame of every clip, one row per frame.
pub fn frame_features(clips: &ClipSet, extractor: &dyn Extractor) -> Result<FeatureMatrix> {
    extractor.extract(&clips.frames_as_clips())
}
