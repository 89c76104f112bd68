//! Deterministic SVG rendering for the study and pipeline artifacts.
//!
//! Output is plain text with coordinates rounded to two decimals and no
//! timestamps or generated ids, so the same inputs produce byte-identical
//! files on every run.

use chrono::NaiveDate;

use crate::cluster::Merge;
use crate::simulate::PlotPoint;

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 70.0;

const COLOR_OBSERVED: &str = "#777777";
const COLOR_NAIVE: &str = "#d95f02";
const COLOR_HIER: &str = "#1b9e77";
const COLOR_REFERENCE: &str = "#bbbbbb";

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data-to-pixel mapping for the plotting area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Frame {
        let mut frame = Frame { x0: f64::INFINITY, x1: f64::NEG_INFINITY, y0: f64::INFINITY, y1: f64::NEG_INFINITY };
        for x in xs {
            frame.x0 = frame.x0.min(x);
            frame.x1 = frame.x1.max(x);
        }
        for y in ys {
            frame.y0 = frame.y0.min(y);
            frame.y1 = frame.y1.max(y);
        }
        if !frame.x0.is_finite() || frame.x0 == frame.x1 {
            frame.x0 -= 0.5;
            frame.x1 += 0.5;
        }
        if !frame.y0.is_finite() || frame.y0 == frame.y1 {
            frame.y0 -= 0.5;
            frame.y1 += 0.5;
        }
        // headroom so points do not sit on the border
        let pad = (frame.y1 - frame.y0) * 0.05;
        frame.y0 -= pad;
        frame.y1 += pad;
        frame
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open_svg(out: &mut String, title: &str) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        fmt(WIDTH / 2.0),
        escape(title)
    ));
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let left = MARGIN_LEFT;
    let right = WIDTH - MARGIN_RIGHT;
    let top = MARGIN_TOP;
    let bottom = HEIGHT - MARGIN_BOTTOM;
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(left), fmt(bottom), fmt(right), fmt(bottom)
    ));
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(left), fmt(top), fmt(left), fmt(bottom)
    ));
    for i in 0..=4 {
        let fx = frame.x0 + (frame.x1 - frame.x0) * i as f64 / 4.0;
        let px = frame.sx(fx);
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
            fmt(px), fmt(bottom), fmt(bottom + 5.0)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt(px), fmt(bottom + 20.0), fmt(fx)
        ));
        let fy = frame.y0 + (frame.y1 - frame.y0) * i as f64 / 4.0;
        let py = frame.sy(fy);
        out.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n",
            fmt(py), fmt(left - 5.0), fmt(left)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt(left - 8.0), fmt(py + 4.0), fmt(fy)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        fmt((left + right) / 2.0),
        fmt(HEIGHT - 25.0),
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        fmt((top + bottom) / 2.0),
        fmt((top + bottom) / 2.0),
        escape(y_label)
    ));
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    let mut y = MARGIN_TOP + 8.0;
    for (label, color) in entries {
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n",
            fmt(WIDTH - MARGIN_RIGHT - 170.0),
            fmt(y),
            color
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            fmt(WIDTH - MARGIN_RIGHT - 150.0),
            fmt(y + 11.0),
            escape(label)
        ));
        y += 20.0;
    }
}

fn polyline(out: &mut String, frame: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str, width: f64) {
    let coords: Vec<String> = pts.map(|(x, y)| format!("{},{}", fmt(frame.sx(x)), fmt(frame.sy(y)))).collect();
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
        coords.join(" "),
        color,
        fmt(width)
    ));
}

fn band(out: &mut String, frame: &Frame, xs: &[f64], lo: &[f64], hi: &[f64], color: &str) {
    let mut coords = Vec::with_capacity(xs.len() * 2);
    for (x, h) in xs.iter().zip(hi) {
        coords.push(format!("{},{}", fmt(frame.sx(*x)), fmt(frame.sy(*h))));
    }
    for (x, l) in xs.iter().zip(lo).rev() {
        coords.push(format!("{},{}", fmt(frame.sx(*x)), fmt(frame.sy(*l))));
    }
    out.push_str(&format!(
        "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n",
        coords.join(" "),
        color
    ));
}

fn dots(out: &mut String, frame: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str, r: f64) {
    for (x, y) in pts {
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
            fmt(frame.sx(x)),
            fmt(frame.sy(y)),
            fmt(r),
            color
        ));
    }
}

/// Which arm of a paired comparison a plot shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotArm {
    WithProxy,
    WithoutProxy,
}

impl PlotArm {
    pub fn label(&self) -> &'static str {
        match self {
            PlotArm::WithProxy => "two-layer forest",
            PlotArm::WithoutProxy => "direct forest",
        }
    }

    fn color(&self) -> &'static str {
        match self {
            PlotArm::WithProxy => COLOR_HIER,
            PlotArm::WithoutProxy => COLOR_NAIVE,
        }
    }
}

/// One arm's test-set predictions and 90% interval against the first
/// covariate, with the observed responses behind them.
pub fn scenario_plot(points: &[PlotPoint], arm: PlotArm, title: &str) -> String {
    let pick = |p: &PlotPoint| match arm {
        PlotArm::WithProxy => (p.hier_pred, p.hier_lo, p.hier_hi),
        PlotArm::WithoutProxy => (p.naive_pred, p.naive_lo, p.naive_hi),
    };
    let xs: Vec<f64> = points.iter().map(|p| p.x1).collect();
    let ys = points.iter().flat_map(|p| {
        let (_, lo, hi) = pick(p);
        [p.observed, lo, hi]
    });
    let frame = Frame::new(xs.iter().copied(), ys);
    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, "x1", "response");
    let lo: Vec<f64> = points.iter().map(|p| pick(p).1).collect();
    let hi: Vec<f64> = points.iter().map(|p| pick(p).2).collect();
    band(&mut out, &frame, &xs, &lo, &hi, arm.color());
    dots(&mut out, &frame, points.iter().map(|p| (p.x1, p.observed)), COLOR_OBSERVED, 2.5);
    polyline(&mut out, &frame, points.iter().map(|p| (p.x1, pick(p).0)), arm.color(), 1.8);
    legend(&mut out, &[("observed", COLOR_OBSERVED), (arm.label(), arm.color())]);
    out.push_str("</svg>\n");
    out
}

/// Recovered latent values against the truth, with the identity line.
pub fn protected_plot(pairs: &[(f64, f64)], title: &str) -> String {
    let frame = Frame::new(
        pairs.iter().map(|p| p.0),
        pairs.iter().flat_map(|p| [p.0, p.1]),
    );
    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, "true value", "recovered value");
    let lo = frame.x0.max(frame.y0);
    let hi = frame.x1.min(frame.y1);
    polyline(&mut out, &frame, [(lo, lo), (hi, hi)].into_iter(), COLOR_REFERENCE, 1.5);
    dots(&mut out, &frame, pairs.iter().copied(), COLOR_HIER, 2.5);
    out.push_str("</svg>\n");
    out
}

/// Within-cost curve with the chosen k marked.
pub fn elbow_plot(curve: &[f64], chosen_k: usize, title: &str) -> String {
    let frame = Frame::new(
        (1..=curve.len()).map(|k| k as f64),
        curve.iter().copied(),
    );
    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, "k", "within-cluster cost");
    polyline(
        &mut out,
        &frame,
        curve.iter().enumerate().map(|(i, w)| ((i + 1) as f64, *w)),
        COLOR_HIER,
        1.8,
    );
    dots(
        &mut out,
        &frame,
        curve.iter().enumerate().map(|(i, w)| ((i + 1) as f64, *w)),
        COLOR_HIER,
        3.0,
    );
    if chosen_k >= 1 && chosen_k <= curve.len() {
        let px = frame.sx(chosen_k as f64);
        out.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{3}\" stroke-dasharray=\"4 3\"/>\n",
            fmt(px),
            fmt(MARGIN_TOP),
            fmt(HEIGHT - MARGIN_BOTTOM),
            COLOR_NAIVE
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">k = {}</text>\n",
            fmt(px + 6.0),
            fmt(MARGIN_TOP + 14.0),
            COLOR_NAIVE,
            chosen_k
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Leaf order of the merge tree: left subtree before right, starting at
/// the final merge.
fn dendrogram_leaf_order(n: usize, merges: &[Merge]) -> Vec<usize> {
    if n == 1 {
        return vec![0];
    }
    let root = n + merges.len() - 1;
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if id < n {
            order.push(id);
        } else {
            let m = &merges[id - n];
            // right pushed first so the left child is visited first
            stack.push(m.b);
            stack.push(m.a);
        }
    }
    order
}

/// Classic dendrogram: leaves along the bottom, merges drawn as brackets
/// at their heights.
pub fn dendrogram(labels: &[String], merges: &[Merge], title: &str) -> String {
    let n = labels.len();
    let leaf_order = dendrogram_leaf_order(n, merges);
    let max_height = merges.iter().map(|m| m.height).fold(0.0, f64::max);
    let frame = Frame::new([0.0, (n.max(2) - 1) as f64].into_iter(), [0.0, max_height.max(1e-9)].into_iter());
    let mut out = String::new();
    open_svg(&mut out, title);
    // y axis only; leaf positions carry the labels
    axes(&mut out, &frame, "", "merge height");

    // x slot and current top height per cluster id
    let mut pos = vec![(0.0f64, 0.0f64); n + merges.len()];
    for (slot, &leaf) in leaf_order.iter().enumerate() {
        pos[leaf] = (slot as f64, 0.0);
        let px = frame.sx(slot as f64);
        let py = HEIGHT - MARGIN_BOTTOM + 12.0;
        out.push_str(&format!(
            "<text x=\"{0}\" y=\"{1}\" font-size=\"10\" text-anchor=\"start\" transform=\"rotate(55 {0} {1})\">{2}</text>\n",
            fmt(px),
            fmt(py),
            escape(&labels[leaf])
        ));
    }
    for (i, m) in merges.iter().enumerate() {
        let (xa, ha) = pos[m.a];
        let (xb, hb) = pos[m.b];
        let y = fmt(frame.sy(m.height));
        out.push_str(&format!(
            "<path d=\"M {} {} V {} H {} V {}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"/>\n",
            fmt(frame.sx(xa)),
            fmt(frame.sy(ha)),
            y,
            fmt(frame.sx(xb)),
            fmt(frame.sy(hb)),
            COLOR_HIER
        ));
        pos[n + i] = ((xa + xb) / 2.0, m.height);
    }
    out.push_str("</svg>\n");
    out
}

/// Daily series over a date range: observed counts with one forecast line
/// per model arm.
/// One forecast arm: a prediction line with an optional interval band.
pub struct ForecastSeries<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
    pub color: &'a str,
    pub band: Option<(&'a [f64], &'a [f64])>,
}

pub fn forecast_plot(
    dates: &[NaiveDate],
    truth: &[f64],
    series: &[ForecastSeries],
    title: &str,
) -> String {
    let frame = Frame::new(
        (0..dates.len()).map(|i| i as f64),
        truth
            .iter()
            .copied()
            .chain(series.iter().flat_map(|s| {
                let band = s.band.into_iter().flat_map(|(lo, hi)| {
                    lo.iter().copied().chain(hi.iter().copied())
                });
                s.values.iter().copied().chain(band)
            })),
    );
    let mut out = String::new();
    open_svg(&mut out, title);
    axes(&mut out, &frame, "", "count");
    // overwrite the numeric x ticks with dates at five positions
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"24\" fill=\"white\"/>\n",
        fmt(MARGIN_LEFT - 20.0),
        fmt(HEIGHT - MARGIN_BOTTOM + 8.0),
        fmt(WIDTH - MARGIN_LEFT - MARGIN_RIGHT + 40.0)
    ));
    if !dates.is_empty() {
        for i in 0..=4 {
            let idx = (dates.len() - 1) * i / 4;
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                fmt(frame.sx(idx as f64)),
                fmt(HEIGHT - MARGIN_BOTTOM + 20.0),
                dates[idx]
            ));
        }
    }
    let xs: Vec<f64> = (0..dates.len()).map(|i| i as f64).collect();
    for s in series {
        if let Some((lo, hi)) = s.band {
            band(&mut out, &frame, &xs, lo, hi, s.color);
        }
    }
    dots(&mut out, &frame, truth.iter().enumerate().map(|(i, v)| (i as f64, *v)), COLOR_OBSERVED, 2.0);
    for s in series {
        polyline(
            &mut out,
            &frame,
            s.values.iter().enumerate().map(|(i, v)| (i as f64, *v)),
            s.color,
            1.5,
        );
    }
    let mut entries = vec![("observed", COLOR_OBSERVED)];
    entries.extend(series.iter().map(|s| (s.name, s.color)));
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Palette shared by callers that plot the two arms side by side.
pub fn arm_colors() -> (&'static str, &'static str, &'static str) {
    (COLOR_OBSERVED, COLOR_NAIVE, COLOR_HIER)
}
