use std::path::Path;

use occlupose::bop::write_atomic;
use occlupose::metrics::N_DECILES;
use serde::Deserialize;

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::svg::{color, linear_ticks, Chart};

/// The report fields the plots read. Missing fields leave a method out of
/// the plots that need them.
#[derive(Debug, Clone, Default, Deserialize)]
struct PlotEntry {
    #[serde(default)]
    method: String,
    #[serde(rename = "UAR")]
    uar: Option<f64>,
    mean_time: Option<f64>,
    decile_counts: Option<[usize; N_DECILES]>,
    per_decile: Option<[f64; N_DECILES]>,
}

/// A report file holds one evaluation report or a list of them.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ReportFile {
    Many(Vec<PlotEntry>),
    One(PlotEntry),
}

fn scatter(entries: &[PlotEntry]) -> String {
    let pts: Vec<(f64, f64, &str)> = entries
        .iter()
        .filter_map(|e| Some((e.mean_time?, e.uar?, e.method.as_str())))
        .collect();
    let t_max = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let t_max = if t_max > 0.0 { t_max * 1.1 } else { 1.0 };
    let mut c = Chart::new("UAR versus inference time", "time per estimate (s)", "UAR", (0.0, t_max), (0.0, 1.0));
    c.x_ticks(&linear_ticks(0.0, t_max, 5, 3));
    c.y_ticks(&linear_ticks(0.0, 1.0, 5, 1));
    for (i, (t, u, name)) in pts.iter().enumerate() {
        c.point(*t, *u, color(i), name);
    }
    c.finish()
}

fn decile_ticks() -> Vec<(f64, String)> {
    (0..N_DECILES).map(|d| (d as f64 + 0.5, format!("{}-{}", d * 10, (d + 1) * 10))).collect()
}

fn histogram(entries: &[PlotEntry]) -> String {
    let counts = entries.iter().find_map(|e| e.decile_counts);
    let top = counts.map_or(0, |c| c.iter().copied().max().unwrap_or(0)).max(1) as f64;
    let mut c = Chart::new("Instances per visibility decile", "visible fraction (%)", "instances", (0.0, N_DECILES as f64), (0.0, top));
    c.x_ticks(&decile_ticks());
    c.y_ticks(&linear_ticks(0.0, top, 4, 0));
    if let Some(counts) = counts {
        for (d, n) in counts.iter().enumerate() {
            c.bar(d as f64 + 0.1, d as f64 + 0.9, *n as f64, color(0));
        }
    }
    c.finish()
}

fn decile_bars(entries: &[PlotEntry]) -> String {
    let methods: Vec<(&str, [f64; N_DECILES])> = entries.iter().filter_map(|e| Some((e.method.as_str(), e.per_decile?))).collect();
    let mut c = Chart::new("Recall per visibility decile", "visible fraction (%)", "recall", (0.0, N_DECILES as f64), (0.0, 1.0));
    c.x_ticks(&decile_ticks());
    c.y_ticks(&linear_ticks(0.0, 1.0, 5, 1));
    let width = 0.8 / methods.len().max(1) as f64;
    for (m, (_, vals)) in methods.iter().enumerate() {
        for (d, v) in vals.iter().enumerate() {
            if *v >= 0.0 {
                let x0 = d as f64 + 0.1 + m as f64 * width;
                c.bar(x0, x0 + width, *v, color(m));
            }
        }
    }
    c.legend(&methods.iter().enumerate().map(|(i, (n, _))| (n.to_string(), color(i))).collect::<Vec<_>>());
    c.finish()
}

pub fn cmd_report(g: &Globals, report: &Path, out_dir: &Path) -> CliResult<()> {
    let mut manifest = RunManifest::new("report", g.seed, g.threads, &g.config);
    manifest.input("report", report);
    let text = std::fs::read_to_string(report).map_err(|e| CliError::io(e).context(format!("reading {}", report.display())))?;
    let entries = match serde_json::from_str::<ReportFile>(&text)
        .map_err(|_| CliError::msg(crate::error::ExitKind::Validation, format!("{}: not an evaluation report or list of reports", report.display())))?
    {
        ReportFile::Many(v) => v,
        ReportFile::One(e) => vec![e],
    };
    for (name, svg) in [
        ("uar_vs_time.svg", scatter(&entries)),
        ("visibility_histogram.svg", histogram(&entries)),
        ("decile_recall.svg", decile_bars(&entries)),
    ] {
        let path = out_dir.join(name);
        write_atomic(&path, svg.as_bytes())?;
        manifest.output(name, &path);
    }
    manifest.detail("methods", entries.iter().map(|e| e.method.clone()).collect::<Vec<_>>());
    manifest.write(&out_dir.join("manifest.json"))
}
