//! Minimal, dependency-free SVG rendering for histogram overlays.
//!
//! The output is a fixed-size canvas with histogram bars, an optional
//! reference-density polyline, axes with tick labels, and a legend.
//! All coordinates are formatted with fixed precision so the same
//! inputs always produce the same bytes.

use crate::localstats::SpectralHistogram;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 52.0;

const BAR_FILL: &str = "#9ecae1";
const BAR_STROKE: &str = "#4292c6";
const CURVE_STROKE: &str = "#d7301f";
const AXIS_STROKE: &str = "#333333";

/// A named reference curve to draw over the bars.
pub struct ReferenceCurve<'a> {
    pub label: &'a str,
    /// (x, density) pairs in data coordinates, ordered by x.
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = self.y_max.max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - v / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 1000.0 || a < 0.01 {
        format!("{v:.1e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders a histogram with optional reference overlays as an SVG
/// document.
#[must_use]
pub fn render_overlay(
    histogram: &SpectralHistogram,
    curves: &[ReferenceCurve<'_>],
    title: &str,
    x_label: &str,
) -> String {
    let edges = &histogram.bin_edges;
    let x_min = edges.first().copied().unwrap_or(0.0);
    let x_max = edges.last().copied().unwrap_or(1.0);
    let mut y_max = histogram.density.iter().cloned().fold(0.0_f64, f64::max);
    for curve in curves {
        for &(_, d) in &curve.points {
            y_max = y_max.max(d);
        }
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    let frame = Frame {
        x_min,
        x_max,
        y_max: y_max * 1.08,
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" \
         height=\"{HEIGHT:.0}\" viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\">\n"
    );
    let _ = write!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" \
         fill=\"#ffffff\"/>\n"
    );
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );

    for (i, &density) in histogram.density.iter().enumerate() {
        if density <= 0.0 {
            continue;
        }
        let left = frame.x(edges[i]);
        let right = frame.x(edges[i + 1]);
        let top = frame.y(density);
        let base = frame.y(0.0);
        let _ = write!(
            svg,
            "<rect x=\"{left:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"{BAR_FILL}\" stroke=\"{BAR_STROKE}\" stroke-width=\"0.5\"/>\n",
            right - left,
            base - top
        );
    }

    for curve in curves {
        if curve.points.is_empty() {
            continue;
        }
        let mut path = String::new();
        for (i, &(x, d)) in curve.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.2},{:.2} ", frame.x(x), frame.y(d));
        }
        let _ = write!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"{CURVE_STROKE}\" \
             stroke-width=\"1.8\"/>\n",
            path.trim_end()
        );
    }

    let base = frame.y(0.0);
    let _ = write!(
        svg,
        "<line x1=\"{:.1}\" y1=\"{base:.1}\" x2=\"{:.1}\" y2=\"{base:.1}\" \
         stroke=\"{AXIS_STROKE}\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT
    );
    let _ = write!(
        svg,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{base:.1}\" \
         stroke=\"{AXIS_STROKE}\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT, MARGIN_TOP, MARGIN_LEFT
    );

    let n_ticks = 5;
    for t in 0..=n_ticks {
        let xv = x_min + (x_max - x_min) * t as f64 / n_ticks as f64;
        let xp = frame.x(xv);
        let _ = write!(
            svg,
            "<line x1=\"{xp:.1}\" y1=\"{base:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" \
             stroke=\"{AXIS_STROKE}\" stroke-width=\"1\"/>\n",
            base + 5.0
        );
        let _ = write!(
            svg,
            "<text x=\"{xp:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" \
             font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            base + 18.0,
            fmt_tick(xv)
        );
        let yv = frame.y_max * t as f64 / n_ticks as f64;
        let yp = frame.y(yv);
        let _ = write!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{:.1}\" y2=\"{yp:.1}\" \
             stroke=\"{AXIS_STROKE}\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT
        );
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" \
             font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 8.0,
            yp + 4.0,
            fmt_tick(yv)
        );
    }

    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );

    let legend_x = WIDTH - MARGIN_RIGHT - 180.0;
    let mut legend_y = MARGIN_TOP + 10.0;
    let _ = write!(
        svg,
        "<rect x=\"{legend_x:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" \
         fill=\"{BAR_FILL}\" stroke=\"{BAR_STROKE}\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" \
         font-size=\"12\">data</text>\n",
        legend_y - 10.0,
        legend_x + 18.0,
        legend_y
    );
    for curve in curves {
        legend_y += 18.0;
        let _ = write!(
            svg,
            "<line x1=\"{legend_x:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
             stroke=\"{CURVE_STROKE}\" stroke-width=\"1.8\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>\n",
            legend_y - 4.0,
            legend_x + 12.0,
            legend_y - 4.0,
            legend_x + 18.0,
            legend_y,
            escape(curve.label)
        );
    }

    svg.push_str("</svg>\n");
    svg
}

/// Samples a density function on an even grid for plotting.
#[must_use]
pub fn sample_curve(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            (x, f(x))
        })
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
