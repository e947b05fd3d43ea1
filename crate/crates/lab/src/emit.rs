//! CSV, SVG and JSON artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vqc_core::TrainReport;

use crate::config::SweepAxis;
use crate::error::{LabError, Result};
use crate::sweep::{variance, CellFailure, RunOutcome, SweepOutput, VarianceRecord};

pub const CSV_HEADER: &str = "dataset,strategy,axis,axis_value,epoch,variance,n_samples";

pub fn records_to_csv(records: &[VarianceRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Emit(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Emit(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<VarianceRecord>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(LabError::Emit(format!(
            "unexpected header `{}`",
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

fn failures_to_csv(failures: &[CellFailure]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for f in failures {
        w.serialize(f)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Emit(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Emit(e.to_string()))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Line chart of log₁₀ variance against the sweep axis, one polyline per
/// strategy. Each point averages the variance over the recorded epochs.
pub fn records_to_svg(records: &[VarianceRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(LabError::Emit("no records to plot".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut curves: BTreeMap<&str, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        if !order.contains(&r.strategy.as_str()) {
            order.push(&r.strategy);
        }
        curves
            .entry(&r.strategy)
            .or_default()
            .entry(r.axis_value)
            .or_default()
            .push(r.variance);
    }
    let points: Vec<(&str, Vec<(f64, f64)>)> = order
        .iter()
        .map(|s| {
            let pts = curves[s]
                .iter()
                .filter_map(|(&x, vs)| {
                    let mean = vs.iter().sum::<f64>() / vs.len() as f64;
                    (mean > 0.0).then(|| (x as f64, mean.log10()))
                })
                .collect();
            (*s, pts)
        })
        .collect();

    let all = points.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let axis = records[0].axis;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#
    );
    let mut ticks: Vec<f64> = points
        .iter()
        .flat_map(|(_, p)| p.iter().map(|q| q.0))
        .collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            px(x),
            bottom + 18.0
        );
    }
    let mut y = y0;
    while y <= y1 + 1e-9 {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{y}</text>"#,
            left - 6.0,
            py(y) + 4.0
        );
        y += 1.0;
    }
    let label = match axis {
        SweepAxis::Qubits => "qubits",
        SweepAxis::Layers => "layers",
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">first-layer gradient variance (log10)</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );
    for (i, (name, pts)) in points.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(name)
        );
        let ly = top + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            right,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[derive(Debug, Serialize)]
pub struct ProbeSummary {
    pub epoch: usize,
    pub variance: f64,
}

/// Per-run JSON document.
#[derive(Debug, Serialize)]
pub struct RunDocument<'a> {
    pub dataset: &'a str,
    pub strategy: &'a str,
    pub axis: Option<SweepAxis>,
    pub axis_value: usize,
    pub repeat: usize,
    pub seed: u64,
    /// Pooled first-layer variance of this run alone, per recorded epoch.
    pub probe: Vec<ProbeSummary>,
    pub report: Option<&'a TrainReport>,
}

pub fn run_document<'a>(
    dataset: &'a str,
    axis: Option<SweepAxis>,
    run: &'a RunOutcome,
) -> RunDocument<'a> {
    let probe = run
        .probe
        .epochs
        .iter()
        .zip(&run.probe.grads)
        .map(|(&epoch, rows)| ProbeSummary {
            epoch,
            variance: variance(&rows.iter().flatten().copied().collect::<Vec<_>>()),
        })
        .collect();
    RunDocument {
        dataset,
        strategy: &run.strategy,
        axis,
        axis_value: run.axis_value,
        repeat: run.repeat,
        seed: run.seed,
        probe,
        report: run.report.as_ref(),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn run_file_name(run: &RunOutcome, axis: Option<SweepAxis>) -> String {
    let axis = axis.map_or("value", SweepAxis::as_str);
    format!(
        "{}-{}{}-r{}.json",
        run.strategy, axis, run.axis_value, run.repeat
    )
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| LabError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| LabError::io(path, e))
}

/// Writes `variance.csv`, `variance.svg`, `runs/*.json` and, when cells
/// failed, `failures.csv` into `dir`. Returns the written paths.
pub fn write_sweep(dir: &Path, out: &SweepOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: PathBuf, body: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
        Ok(())
    };
    put("variance.csv".into(), records_to_csv(&out.records)?)?;
    if !out.records.is_empty() {
        put("variance.svg".into(), records_to_svg(&out.records)?)?;
    }
    for run in &out.runs {
        let doc = run_document(&out.dataset, out.axis, run);
        put(
            Path::new("runs").join(run_file_name(run, out.axis)),
            to_json(&doc)?,
        )?;
    }
    if !out.failures.is_empty() {
        put("failures.csv".into(), failures_to_csv(&out.failures)?)?;
    }
    Ok(written)
}
