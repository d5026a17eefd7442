use std::fs;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use fvdlens::distortion::{distort_clipset, freeze_clipset, DistortionSpec};
use fvdlens::feature_io::{load_clipset, read_features, save_clipset, write_features_as, Dtype, Extractor, ExtractorRegistry};
use fvdlens::protocols::long_video::{run_long_video, ChunkSchedule};
use fvdlens::protocols::null_space::{run_null_space_probe, NullSpaceReport};
use fvdlens::protocols::report::{Report, REPORT_VERSION};
use fvdlens::protocols::sensitivity::{run_sensitivity, SensitivityConfig};
use fvdlens::resampler::{probe_null_space, ResampleConfig};
use fvdlens::{compute_fvd, ClipSet, Error, FeatureMatrix, Result};

use crate::config::{
    ChunksArgs, CommandArgs, ComputeArgs, DistortArgs, ExtractArgs, Format, FreezeArgs, ProbeArgs, RunConfig,
    SensitivityArgs, RUN_FILE,
};
use crate::reports::{ClipsReport, ComputeReport, ExtractReport};

const CLIPS_DIR: &str = "clips";
const FEATURES_FILE: &str = "features.fvdf";

/// A command argument naming either a feature file or a clip directory / manifest.
enum Input {
    Features(FeatureMatrix),
    Clips(ClipSet),
}

fn is_clip_source(path: &Path) -> bool {
    path.is_dir() || path.extension().is_some_and(|e| e == "json")
}

fn load_input(path: &Path) -> Result<Input> {
    if is_clip_source(path) {
        Ok(Input::Clips(load_clipset(path)?))
    } else {
        Ok(Input::Features(read_features(path)?))
    }
}

fn load_clips(path: &Path) -> Result<ClipSet> {
    match load_input(path)? {
        Input::Clips(c) => Ok(c),
        Input::Features(_) => Err(Error::InvalidInput(format!(
            "{} is a feature file; this command needs clips",
            path.display()
        ))),
    }
}

struct Context {
    registry: ExtractorRegistry,
}

impl Context {
    fn extractor(&self, tag: &str) -> Result<Arc<dyn Extractor>> {
        self.registry.resolve(tag)
    }

    fn features(&self, input: Input, tag: &str, frames: bool) -> Result<FeatureMatrix> {
        match input {
            Input::Features(f) => Ok(f),
            Input::Clips(c) => {
                let ext = self.extractor(tag)?;
                if frames {
                    ext.extract(&c.frames_as_clips())
                } else {
                    ext.extract(&c)
                }
            }
        }
    }
}

fn render<R: Report>(report: &R, format: Format) -> Result<String> {
    match format {
        Format::Json => report.to_json(),
        Format::Table => Ok(report.to_text()),
        Format::Csv => report.to_csv(),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the resolved command, writing `report.<ext>` and `run.json` into the output directory.
pub fn execute(run: &RunConfig) -> Result<()> {
    if let Some(n) = run.global.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("threads must be >= 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already initialized: {e}");
        }
    }
    let out = &run.global.output;
    fs::create_dir_all(out)?;
    let ctx = Context {
        registry: ExtractorRegistry::with_defaults(),
    };
    let seed = run.global.seed;
    let format = run.global.format;
    let text = match &run.command {
        CommandArgs::Compute(a) => render(&compute(&ctx, a)?, format)?,
        CommandArgs::Distort(a) => render(&distort(a, seed, out)?, format)?,
        CommandArgs::Freeze(a) => render(&freeze(a, out)?, format)?,
        CommandArgs::Extract(a) => render(&extract(&ctx, a, out)?, format)?,
        CommandArgs::Sensitivity(a) => render(&sensitivity(&ctx, a, seed)?, format)?,
        CommandArgs::Probe(a) => render(&probe(&ctx, a, seed)?, format)?,
        CommandArgs::Chunks(a) => render(&chunks(&ctx, a)?, format)?,
    };
    fs::write(out.join(format!("report.{}", format.extension())), &text)?;
    let mut run_json = serde_json::to_string_pretty(&run.to_json())?;
    run_json.push('\n');
    fs::write(out.join(RUN_FILE), run_json)?;
    print!("{text}");
    if !text.ends_with('\n') {
        println!();
    }
    Ok(())
}

fn compute(ctx: &Context, a: &ComputeArgs) -> Result<ComputeReport> {
    let reference = ctx.features(load_input(&a.reference)?, &a.extractor, a.frames)?;
    let generated = ctx.features(load_input(&a.gen)?, &a.extractor, a.frames)?;
    if reference.extractor_tag() != generated.extractor_tag() {
        log::warn!(
            "extractor tags differ: {:?} vs {:?}",
            reference.extractor_tag(),
            generated.extractor_tag()
        );
    }
    let result = compute_fvd(&reference, &generated)?;
    Ok(ComputeReport::new(
        if a.frames { "FID" } else { "FVD" },
        (reference.extractor_tag().to_string(), generated.extractor_tag().to_string()),
        (reference.rows(), generated.rows()),
        reference.dim(),
        result,
    ))
}

fn write_clips(kind: &'static str, spec: Option<DistortionSpec>, clips: &ClipSet, out: &Path) -> Result<ClipsReport> {
    let manifest = save_clipset(clips, out.join(CLIPS_DIR))?;
    Ok(ClipsReport {
        report_version: REPORT_VERSION,
        kind,
        spec,
        clip_count: clips.len(),
        frame_count: clips.clips().iter().map(|c| c.frame_count()).sum(),
        manifest: format!("{CLIPS_DIR}/manifest.json"),
        checksums: manifest.clips.into_iter().filter_map(|e| e.checksum).collect(),
    })
}

fn distort(a: &DistortArgs, seed: u64, out: &Path) -> Result<ClipsReport> {
    let clips = load_clips(&a.input)?;
    let spec = DistortionSpec::new(a.family, a.severity, a.mode, seed);
    let distorted = distort_clipset(&clips, &spec)?;
    write_clips("distort", Some(spec), &distorted, out)
}

fn freeze(a: &FreezeArgs, out: &Path) -> Result<ClipsReport> {
    let frozen = freeze_clipset(&load_clips(&a.input)?)?;
    write_clips("freeze", None, &frozen, out)
}

fn extract(ctx: &Context, a: &ExtractArgs, out: &Path) -> Result<ExtractReport> {
    let clips = load_clips(&a.input)?;
    let features = ctx.features(Input::Clips(clips), &a.extractor, a.frames)?;
    let dtype = if a.f32 { Dtype::F32 } else { Dtype::F64 };
    let path = out.join(FEATURES_FILE);
    write_features_as(&features, &path, dtype)?;
    Ok(ExtractReport {
        report_version: REPORT_VERSION,
        kind: "extract",
        extractor_tag: features.extractor_tag().to_string(),
        rows: features.rows(),
        dim: features.dim(),
        dtype: if a.f32 { "f32" } else { "f64" },
        frames: a.frames,
        file: FEATURES_FILE.into(),
        sha256: sha256_hex(&fs::read(&path)?),
    })
}

fn sensitivity(ctx: &Context, a: &SensitivityArgs, seed: u64) -> Result<fvdlens::protocols::sensitivity::SensitivityReport> {
    let clips = load_clips(&a.input)?;
    let video = ctx.extractor(&a.extractor)?;
    let frame = ctx.extractor(a.frame_extractor.as_deref().unwrap_or(&a.extractor))?;
    let mut config = SensitivityConfig::new(a.family, seed);
    config.levels = a.levels.0.clone();
    run_sensitivity(&clips, &config, video.as_ref(), frame.as_ref())
}

fn probe(ctx: &Context, a: &ProbeArgs, seed: u64) -> Result<NullSpaceReport> {
    let config = ResampleConfig {
        steps: a.steps,
        lr0: a.lr0,
        decay_factor: a.decay_factor,
        decay_every: a.decay_every,
        sample_size: a.sample_size,
        candidate_multiple: a.candidate_multiple,
        seed,
    };
    let ext = ctx.extractor(&a.extractor)?;
    match (load_input(&a.reference)?, load_input(&a.candidates)?) {
        (Input::Clips(r), Input::Clips(c)) => {
            Ok(run_null_space_probe(&r, &c, &config, ext.as_ref(), a.freeze)?.report)
        }
        (reference, candidates) => {
            let candidates = match candidates {
                Input::Clips(c) if a.freeze => Input::Clips(freeze_clipset(&c)?),
                Input::Features(_) if a.freeze => {
                    return Err(Error::InvalidInput("--freeze needs candidate clips, not features".into()))
                }
                other => other,
            };
            let reference = ctx.features(reference, &a.extractor, false)?;
            let candidates = ctx.features(candidates, &a.extractor, false)?;
            let expected = config.expected_candidates();
            if candidates.rows() != expected {
                log::warn!(
                    "candidate count {} differs from candidate_multiple x sample_size = {expected}",
                    candidates.rows()
                );
            }
            let outcome = probe_null_space(&reference, &candidates, &config)?;
            Ok(NullSpaceReport {
                report_version: REPORT_VERSION,
                kind: "null_space".into(),
                extractor_tag: candidates.extractor_tag().to_string(),
                expected_candidates: expected,
                resample: outcome.report,
            })
        }
    }
}

fn chunks(ctx: &Context, a: &ChunksArgs) -> Result<fvdlens::protocols::long_video::LongVideoReport> {
    let reference = load_clips(&a.reference)?;
    let generated = load_clips(&a.gen)?;
    let schedule = ChunkSchedule {
        chunk_length: a.chunk_length,
        stride: a.stride,
        offsets: a.offsets.as_ref().map(|o| o.0.clone()),
        full_length: a.full_length,
    };
    run_long_video(&reference, &generated, &schedule, ctx.extractor(&a.extractor)?.as_ref())
}
