//! Static SVG line charts for generation logs and per-step metrics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::records::{
    read_aggregate, read_generation_log, read_metrics, RecordError, AGGREGATE_HEADER, GENERATION_HEADER,
    METRICS_HEADER,
};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_Y: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = extent(all().map(|p| p.0));
        let (y0, y1) = extent(all().map(|p| p.1));
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - 2.0 * MARGIN_Y;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| HEIGHT - MARGIN_Y - (y - y0) / (y1 - y0) * plot_h;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_Y}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(xv),
                HEIGHT - MARGIN_Y + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 6.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                pts.join(" ")
            );
            let ly = MARGIN_Y + 14.0 + 16.0 * i as f64;
            let lx = WIDTH - MARGIN_RIGHT + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    GenerationLog,
    Aggregate,
    Metrics,
}

fn classify(path: &Path) -> Result<InputKind, RecordError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| RecordError::Io {
        path: shown.clone(),
        source,
    })?;
    let header = text.lines().next().unwrap_or("").trim_end_matches('\r');
    let matches = |h: &[&str]| header == h.join(",");
    if matches(&GENERATION_HEADER) {
        Ok(InputKind::GenerationLog)
    } else if matches(&AGGREGATE_HEADER) {
        Ok(InputKind::Aggregate)
    } else if matches(&METRICS_HEADER) {
        Ok(InputKind::Metrics)
    } else if header.is_empty() {
        Err(RecordError::Format {
            path: shown,
            reason: "empty file".into(),
        })
    } else {
        Err(RecordError::Format {
            path: shown,
            reason: format!("unrecognised header `{header}`"),
        })
    }
}

fn stem(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    match path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str()) {
        Some(parent) => format!("{parent}-{stem}"),
        None => stem.to_string(),
    }
}

/// Reads and validates every input, then renders charts into `out_dir`.
/// Nothing is written if any input fails to parse.
pub fn plot_files(inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>, RecordError> {
    let mut charts: Vec<(String, Chart)> = Vec::new();
    let mut fitness = Vec::new();
    for path in inputs {
        match classify(path)? {
            InputKind::GenerationLog => {
                let log = read_generation_log(path)?;
                let label = stem(path);
                fitness.push(Series {
                    label: format!("{label} avg"),
                    points: log.iter().map(|r| (r.generation as f64, r.avg_fitness)).collect(),
                    dashed: false,
                });
                fitness.push(Series {
                    label: format!("{label} best"),
                    points: log.iter().map(|r| (r.generation as f64, r.best_fitness)).collect(),
                    dashed: true,
                });
            }
            InputKind::Aggregate => {
                let rows = read_aggregate(path)?;
                fitness.push(Series {
                    label: "mean avg".into(),
                    points: rows.iter().map(|r| (r.generation as f64, r.mean_avg_fitness)).collect(),
                    dashed: false,
                });
                fitness.push(Series {
                    label: "mean best".into(),
                    points: rows.iter().map(|r| (r.generation as f64, r.mean_best_fitness)).collect(),
                    dashed: true,
                });
            }
            InputKind::Metrics => {
                let rows = read_metrics(path)?;
                let name = stem(path);
                charts.push((
                    format!("{name}-components.svg"),
                    Chart {
                        title: "Largest connected ground component".into(),
                        x_label: "timestep".into(),
                        y_label: "ground agents".into(),
                        series: vec![Series {
                            label: name.clone(),
                            points: rows.iter().map(|r| (r.0 as f64, r.1 as f64)).collect(),
                            dashed: false,
                        }],
                    },
                ));
                charts.push((
                    format!("{name}-targets.svg"),
                    Chart {
                        title: "Targets reached".into(),
                        x_label: "timestep".into(),
                        y_label: "cumulative targets".into(),
                        series: vec![Series {
                            label: name,
                            points: rows.iter().map(|r| (r.0 as f64, r.2 as f64)).collect(),
                            dashed: false,
                        }],
                    },
                ));
            }
        }
    }
    if !fitness.is_empty() {
        charts.push((
            "fitness.svg".into(),
            Chart {
                title: "Fitness per generation".into(),
                x_label: "generation".into(),
                y_label: "fitness".into(),
                series: fitness,
            },
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|source| RecordError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, chart) in charts {
        let path = out_dir.join(name);
        std::fs::write(&path, chart.to_svg()).map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
