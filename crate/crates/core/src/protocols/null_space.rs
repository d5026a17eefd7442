use serde::{Deserialize, Serialize};

use crate::clip::ClipSet;
use crate::distortion::freeze_clipset;
use crate::error::Result;
use crate::feature_io::Extractor;
use crate::resampler::{probe_null_space, ResampleConfig, ResampleReport, WeightVector};

use super::report::{format_pct, Cell, Report, Table, REPORT_VERSION};
use super::sensitivity::check_length;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpaceReport {
    pub report_version: u32,
    pub kind: String,
    pub extractor_tag: String,
    /// `candidate_multiple × sample_size` from the config.
    pub expected_candidates: usize,
    pub resample: ResampleReport,
}

impl Report for NullSpaceReport {
    fn table(&self) -> Table {
        let r = &self.resample;
        let mut t = Table::new(
            format!(
                "null-space probe: {} candidates, {} sampled, extractor {} ({})",
                r.candidate_count,
                r.config.sample_size,
                self.extractor_tag,
                format_pct(r.change_pct)
            ),
            &["metric", "value"],
        );
        t.push(vec![Cell::Text("FVD (uniform)".into()), Cell::Num(r.fvd_uniform)]);
        t.push(vec![Cell::Text("weighted objective".into()), Cell::Num(r.fvd_weighted_objective)]);
        t.push(vec![Cell::Text("FVD*".into()), Cell::Num(r.fvd_star)]);
        t.push(vec![Cell::Text("change".into()), Cell::Pct(Some(r.change_pct))]);
        t
    }
}

#[derive(Debug, Clone)]
pub struct NullSpaceOutcome {
    pub report: NullSpaceReport,
    pub weights: WeightVector,
}

/// Optionally freezes the candidates, extracts clip features and runs the resampling probe.
///
/// A candidate count other than `candidate_multiple × sample_size` is logged, not rejected.
pub fn run_null_space_probe(
    reference: &ClipSet,
    candidates: &ClipSet,
    config: &ResampleConfig,
    video_extractor: &dyn Extractor,
    freeze: bool,
) -> Result<NullSpaceOutcome> {
    let expected = config.expected_candidates();
    if candidates.len() != expected {
        log::warn!(
            "candidate count {} differs from candidate_multiple x sample_size = {expected}",
            candidates.len()
        );
    }
    let frozen;
    let candidates = if freeze {
        frozen = freeze_clipset(candidates)?;
        &frozen
    } else {
        candidates
    };
    for set in [reference, candidates] {
        check_length(video_extractor, set.max_frames())?;
        check_length(video_extractor, set.min_frames())?;
    }
    let ref_features = video_extractor.extract(reference)?;
    let cand_features = video_extractor.extract(candidates)?;
    let outcome = probe_null_space(&ref_features, &cand_features, config)?;
    Ok(NullSpaceOutcome {
        report: NullSpaceReport {
            report_version: REPORT_VERSION,
            kind: "null_space".into(),
            extractor_tag: video_extractor.tag(),
            expected_candidates: expected,
            resample: outcome.report,
        },
        weights: outcome.weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_io::{ToyExtractor, ToyExtractorConfig};
    use crate::synthetic::moving_clips;

    #[test]
    fn freezing_static_candidates_changes_nothing() {
        let refs = moving_clips(12, 3, 16, 16, 1, 1);
        let cands = freeze_clipset(&moving_clips(24, 3, 16, 16, 1, 2)).unwrap();
        let toy = ToyExtractor::new(ToyExtractorConfig {
            output_dim: 8,
            patch_grid: 2,
            ..Default::default()
        })
        .unwrap();
        let cfg = ResampleConfig {
            steps: 5,
            sample_size: 12,
            candidate_multiple: 2,
            ..Default::default()
        };
        let a = run_null_space_probe(&refs, &cands, &cfg, &toy, true).unwrap();
        let b = run_null_space_probe(&refs, &cands, &cfg, &toy, false).unwrap();
        assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
        assert_eq!(a.report.resample.objective_trace.len(), 6);
        assert_eq!(a.report.resample.top_ids.len(), 10);
        assert!(a.report.resample.top_ids[0].starts_with("clip"));
    }

    #[test]
    fn planted_clones_pull_fvd_down() {
        use crate::clip::ClipSet;
        use crate::distortion::{distort_clipset, DistortionSpec, Family, Mode};

        let refs = moving_clips(48, 8, 32, 32, 3, 1);
        let others = moving_clips(144, 8, 32, 32, 3, 2);
        let bad = distort_clipset(&others, &DistortionSpec::new(Family::MotionBlur, 5, Mode::Spatiotemporal, 3)).unwrap();
        let mut clips: Vec<_> = refs
            .clips()
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.id = format!("clone-{}", c.id);
                c
            })
            .collect();
        clips.extend(bad.clips().iter().cloned());
        let cands = ClipSet::new("planted", clips).unwrap();
        let toy = ToyExtractor::new(ToyExtractorConfig {
            patch_grid: 4,
            output_dim: 32,
            ..Default::default()
        })
        .unwrap();
        // toy features live at the 1e-2 scale, so the step size is scaled up accordingly
        let cfg = ResampleConfig {
            lr0: 100.0,
            sample_size: 48,
            candidate_multiple: 4,
            seed: 5,
            ..Default::default()
        };
        let out = run_null_space_probe(&refs, &cands, &cfg, &toy, false).unwrap();
        let r = &out.report.resample;
        assert!(r.fvd_star <= 0.6 * r.fvd_uniform, "{} vs {}", r.fvd_star, r.fvd_uniform);
        assert!(r.change_pct <= -40.0);
        // oracle: the clones alone reproduce the reference exactly
        let clone_mass: f64 = out.weights.probabilities()[..48].iter().sum();
        assert!(clone_mass > 0.25);
        assert!(r.top_ids.iter().all(|id| id.starts_with("clone-")));
    }

    #[test]
    fn defaults_echo_protocol_sizes() {
        let cfg = ResampleConfig::default();
        assert_eq!(cfg.expected_candidates(), 16_384);
        assert_eq!(cfg.sample_size, 2048);
    }
}
