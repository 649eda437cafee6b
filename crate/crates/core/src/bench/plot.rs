//! Self-contained SVG line charts of error probability.
//!
//! Each instance with more than one budget gets its own chart with budget on
//! the x axis. When every instance has a single budget, one chart lists the
//! instances along a categorical x axis instead. Every point carries its exact
//! values in `data-x` / `data-y` attributes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::algorithms::Algorithm;
use crate::error::{Error, Result};

use super::report::{BenchReport, CellResult};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlotOptions {
    pub log_y: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Series {
    algorithm: Algorithm,
    /// (x position value, label for data-x, error rate)
    points: Vec<(f64, String, f64)>,
}

struct Chart {
    title: String,
    x_label: String,
    categories: Option<Vec<String>>,
    series: Vec<Series>,
}

fn ok_cells(report: &BenchReport) -> Vec<&CellResult> {
    report.cells.iter().filter(|c| c.error_rate.is_some()).collect()
}

fn ordered<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

fn build_charts(report: &BenchReport) -> Result<Vec<Chart>> {
    let cells = ok_cells(report);
    if cells.is_empty() {
        return Err(Error::EmptyReport);
    }
    let instances = ordered(cells.iter().map(|c| c.instance.clone()));
    let algorithms = ordered(cells.iter().map(|c| c.algorithm));
    let single_budget = instances.iter().all(|inst| {
        ordered(cells.iter().filter(|c| &c.instance == inst).map(|c| c.budget)).len() == 1
    });

    if single_budget && instances.len() > 1 {
        let series = algorithms
            .iter()
            .map(|&algorithm| Series {
                algorithm,
                points: instances
                    .iter()
                    .enumerate()
                    .filter_map(|(i, inst)| {
                        cells
                            .iter()
                            .find(|c| &c.instance == inst && c.algorithm == algorithm)
                            .map(|c| (i as f64, inst.clone(), c.error_rate.unwrap()))
                    })
                    .collect(),
            })
            .collect();
        return Ok(vec![Chart {
            title: "error probability by instance".into(),
            x_label: "instance".into(),
            categories: Some(instances),
            series,
        }]);
    }

    Ok(instances
        .iter()
        .map(|inst| Chart {
            title: inst.clone(),
            x_label: "budget T".into(),
            categories: None,
            series: algorithms
                .iter()
                .map(|&algorithm| {
                    let mut points: Vec<(f64, String, f64)> = cells
                        .iter()
                        .filter(|c| &c.instance == inst && c.algorithm == algorithm)
                        .map(|c| (c.budget as f64, c.budget.to_string(), c.error_rate.unwrap()))
                        .collect();
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series { algorithm, points }
                })
                .filter(|s| !s.points.is_empty())
                .collect(),
        })
        .collect())
}

fn render(chart: &Chart, opts: &PlotOptions) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let xs: Vec<f64> = chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.2)).collect();
    let (mut x_lo, mut x_hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if x_hi <= x_lo {
        x_lo -= 0.5;
        x_hi += 0.5;
    }

    // log scale: zeros sit on a floor below the smallest positive rate
    let min_pos = ys.iter().copied().filter(|&y| y > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if min_pos.is_finite() { (min_pos / 2.0).min(1e-3) } else { 1e-3 };
    let (y_lo, y_hi) = if opts.log_y {
        let hi = ys.iter().copied().fold(floor, f64::max).max(floor * 10.0);
        (floor.log10(), hi.log10())
    } else {
        let hi = ys.iter().copied().fold(0.0, f64::max);
        (0.0, if hi > 0.0 { hi * 1.05 } else { 1.0 })
    };
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| {
        let v = if opts.log_y { y.max(floor).log10() } else { y };
        TOP + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"#,
        b = TOP + plot_h,
        r = LEFT + plot_w
    );

    // y ticks
    let ticks: Vec<f64> = if opts.log_y {
        (y_lo.floor() as i32..=y_hi.ceil() as i32).map(|e| 10f64.powi(e)).filter(|v| {
            let l = v.log10();
            l >= y_lo - 1e-9 && l <= y_hi + 1e-9
        }).collect()
    } else {
        (0..=4).map(|i| y_hi * i as f64 / 4.0).collect()
    };
    for t in ticks {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            format_tick(t)
        );
    }

    // x ticks
    let x_ticks: Vec<(f64, String)> = match &chart.categories {
        Some(cats) => cats.iter().enumerate().map(|(i, c)| (i as f64, c.clone())).collect(),
        None => ordered(xs.iter().map(|x| x.to_bits()))
            .into_iter()
            .map(|b| (f64::from_bits(b), f64::from_bits(b).to_string()))
            .collect(),
    };
    for (x, label) in x_ticks {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px}" y1="{b}" x2="{px}" y2="{}" stroke="black"/><text x="{px}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            escape(&label),
            b = TOP + plot_h
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&chart.x_label)
    );
    let y_label = if opts.log_y { "error probability (log scale)" } else { "error probability" };
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{mid}" text-anchor="middle" transform="rotate(-90 18 {mid})">{y_label}</text>"#,
        mid = TOP + plot_h / 2.0
    );

    for (i, s) in chart.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let name = s.algorithm.name();
        let pts: Vec<String> = s.points.iter().map(|p| format!("{},{}", sx(p.0), sy(p.2))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-algo="{name}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for p in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle data-algo="{name}" data-x="{}" data-y="{}" cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                escape(&p.1),
                p.2,
                sx(p.0),
                sy(p.2)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{name}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn chart_path(base: &Path, idx: usize, total: usize) -> PathBuf {
    if total == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
    let ext = base.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "svg".into());
    base.with_file_name(format!("{stem}-{idx}.{ext}"))
}

/// Writes one SVG per chart and returns the paths written.
pub fn render_plot(report: &BenchReport, path: &Path, opts: &PlotOptions) -> Result<Vec<PathBuf>> {
    let charts = build_charts(report)?;
    let mut written = Vec::with_capacity(charts.len());
    for (i, chart) in charts.iter().enumerate() {
        let p = chart_path(path, i, charts.len());
        fs::write(&p, render(chart, opts))?;
        written.push(p);
    }
    Ok(written)
}
