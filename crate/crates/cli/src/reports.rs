//! Reports for the commands that are not one of the protocol experiments.

use serde::Serialize;

use fvdlens::distortion::DistortionSpec;
use fvdlens::protocols::report::{Cell, Report, Table, REPORT_VERSION};
use fvdlens::FrechetResult;

#[derive(Debug, Clone, Serialize)]
pub struct ComputeReport {
    pub report_version: u32,
    pub kind: &'static str,
    /// `FVD` for clip rows, `FID` for frame rows.
    pub metric: &'static str,
    pub reference_tag: String,
    pub generated_tag: String,
    pub reference_rows: usize,
    pub generated_rows: usize,
    pub dim: usize,
    pub value: f64,
    pub mean_term: f64,
    pub trace_term: f64,
    pub clamped: bool,
}

impl ComputeReport {
    pub fn new(metric: &'static str, tags: (String, String), rows: (usize, usize), dim: usize, r: FrechetResult) -> Self {
        Self {
            report_version: REPORT_VERSION,
            kind: "compute",
            metric,
            reference_tag: tags.0,
            generated_tag: tags.1,
            reference_rows: rows.0,
            generated_rows: rows.1,
            dim,
            value: r.value,
            mean_term: r.mean_term,
            trace_term: r.trace_term,
            clamped: r.clamped,
        }
    }
}

impl Report for ComputeReport {
    fn table(&self) -> Table {
        let mut t = Table::new(
            format!(
                "{} ({} vs {} rows, dim {})",
                self.metric, self.reference_rows, self.generated_rows, self.dim
            ),
            &["term", "value"],
        );
        t.push(vec![Cell::Text(self.metric.into()), Cell::Num(self.value)]);
        t.push(vec![Cell::Text("mean".into()), Cell::Num(self.mean_term)]);
        t.push(vec![Cell::Text("trace".into()), Cell::Num(self.trace_term)]);
        t
    }
}

/// Output of `distort` and `freeze`: what was written where.
#[derive(Debug, Clone, Serialize)]
pub struct ClipsReport {
    pub report_version: u32,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<DistortionSpec>,
    pub clip_count: usize,
    pub frame_count: usize,
    /// Relative to the output directory.
    pub manifest: String,
    /// Per-clip frame checksums, in clip order.
    pub checksums: Vec<String>,
}

impl Report for ClipsReport {
    fn table(&self) -> Table {
        let mut t = Table::new(
            format!("{}: {} clips -> {}", self.kind, self.clip_count, self.manifest),
            &["clip", "sha256"],
        );
        for (i, c) in self.checksums.iter().enumerate() {
            t.push(vec![Cell::Int(i as u64), Cell::Text(c.clone())]);
        }
        t
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractReport {
    pub report_version: u32,
    pub kind: &'static str,
    pub extractor_tag: String,
    pub rows: usize,
    pub dim: usize,
    pub dtype: &'static str,
    pub frames: bool,
    /// Relative to the output directory.
    pub file: String,
    pub sha256: String,
}

impl Report for ExtractReport {
    fn table(&self) -> Table {
        let mut t = Table::new(format!("extract -> {}", self.file), &["field", "value"]);
        t.push(vec![Cell::Text("extractor".into()), Cell::Text(self.extractor_tag.clone())]);
        t.push(vec![Cell::Text("rows".into()), Cell::Int(self.rows as u64)]);
        t.push(vec![Cell::Text("dim".into()), Cell::Int(self.dim as u64)]);
        t.push(vec![Cell::Text("dtype".into()), Cell::Text(self.dtype.into())]);
        t.push(vec![Cell::Text("sha256".into()), Cell::Text(self.sha256.clone())]);
        t
    }
}
