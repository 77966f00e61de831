//! Result rows, CSV output and a dependency-free SVG line plot.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One method's score on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Sweep name (`vary_n`, ...) or the layer subset of a real-data run.
    pub sweep: String,
    /// Value of the swept quantity (number of layers for real data).
    pub value: usize,
    pub method: String,
    pub replicate: usize,
    pub seed: u64,
    pub nmi: f64,
    pub ccr: f64,
    pub misclustering_rate: f64,
    pub elbo: Option<f64>,
    /// Seconds; only recorded on request, since it breaks byte-identical
    /// reruns.
    pub wall_time_s: Option<f64>,
}

pub const CSV_HEADER: [&str; 10] = [
    "sweep",
    "value",
    "method",
    "replicate",
    "seed",
    "nmi",
    "ccr",
    "misclustering_rate",
    "elbo",
    "wall_time_s",
];

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Writes rows with a header line; an empty slice gives a header-only file.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, file).map_err(|source| Error::Csv { path: path.to_path_buf(), source })
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::invalid(format!("{}: unexpected header {header:?}", path.display())));
    }
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Nmi,
    Ccr,
    MisclusteringRate,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Nmi => "nmi",
            Metric::Ccr => "ccr",
            Metric::MisclusteringRate => "misclustering_rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Metric::Nmi, Metric::Ccr, Metric::MisclusteringRate]
            .into_iter()
            .find(|m| m.name() == s)
    }

    pub fn of(self, row: &ResultRow) -> f64 {
        match self {
            Metric::Nmi => row.nmi,
            Metric::Ccr => row.ccr,
            Metric::MisclusteringRate => row.misclustering_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single observation.
    pub sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub method: String,
    pub points: Vec<SeriesPoint>,
}

/// Mean and sd of `metric` per (method, value). Methods keep their order of
/// first appearance; points are sorted by value.
pub fn summarize(rows: &[ResultRow], metric: Metric) -> Vec<Series> {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let mut values: Vec<usize> = rows.iter().filter(|r| r.method == method).map(|r| r.value).collect();
            values.sort_unstable();
            values.dedup();
            let points = values
                .into_iter()
                .map(|v| {
                    let obs: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.method == method && r.value == v)
                        .map(|r| metric.of(r))
                        .collect();
                    let count = obs.len();
                    let mean = obs.iter().sum::<f64>() / count as f64;
                    let sd = if count > 1 {
                        (obs.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
                    } else {
                        0.0
                    };
                    SeriesPoint { x: v as f64, mean, sd, count }
                })
                .collect();
            Series { method: method.to_owned(), points }
        })
        .collect()
}

/// Affine map from data coordinates to the SVG canvas (y grows downwards).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotFrame {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl PlotFrame {
    /// Frame for the given series; `y` spans `[0, 1]` widened to fit every
    /// mean ± sd.
    pub fn fit(series: &[Series]) -> Self {
        let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.x));
        let (mut x_lo, mut x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if !x_lo.is_finite() {
            (x_lo, x_hi) = (0.0, 1.0);
        }
        if x_hi - x_lo < 1e-12 {
            x_lo -= 0.5;
            x_hi += 0.5;
        }
        let (mut y_lo, mut y_hi) = (0.0f64, 1.0f64);
        for p in series.iter().flat_map(|s| &s.points) {
            y_lo = y_lo.min(p.mean - p.sd);
            y_hi = y_hi.max(p.mean + p.sd);
        }
        PlotFrame {
            x_range: (x_lo, x_hi),
            y_range: (y_lo, y_hi),
            left: 60.0,
            top: 20.0,
            width: 480.0,
            height: 320.0,
        }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        (
            self.left + (x - x0) / (x1 - x0) * self.width,
            self.top + (y1 - y) / (y1 - y0) * self.height,
        )
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Mean ± sd line plot, one polyline per method.
pub fn render_svg(series: &[Series], x_label: &str, y_label: &str) -> String {
    let f = PlotFrame::fit(series);
    let total_w = f.left + f.width + 160.0;
    let total_h = f.top + f.height + 50.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        f.left, f.top, f.width, f.height
    );
    // Axis extremes only; the plot is meant for quick inspection.
    let (x0, x1) = f.x_range;
    let (y0, y1) = f.y_range;
    let bottom = f.top + f.height;
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x0}</text>"#, f.left, bottom + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x1}</text>"#, f.left + f.width, bottom + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.2}</text>"#, f.left - 6.0, bottom);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.2}</text>"#, f.left - 6.0, f.top + 10.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        f.left + f.width / 2.0,
        bottom + 36.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        f.top + f.height / 2.0,
        f.top + f.height / 2.0,
        escape(y_label)
    );
    for (idx, ser) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let name = escape(&ser.method);
        for p in &ser.points {
            if p.sd > 0.0 {
                let (px, lo) = f.map(p.x, p.mean - p.sd);
                let (_, hi) = f.map(p.x, p.mean + p.sd);
                let _ = writeln!(
                    s,
                    r#"<line class="sd" data-method="{name}" x1="{px:.3}" y1="{lo:.3}" x2="{px:.3}" y2="{hi:.3}" stroke="{color}"/>"#
                );
            }
        }
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|p| {
                let (px, py) = f.map(p.x, p.mean);
                format!("{px:.3},{py:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="mean" data-method="{name}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = f.top + 16.0 * (idx as f64 + 1.0);
        let lx = f.left + f.width + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, lx + 26.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the plot of `metric` against the swept value, grouped by method.
pub fn emit_svg_lineplot(rows: &[ResultRow], metric: Metric, path: &Path) -> Result<()> {
    let x_label = rows.first().map(|r| r.sweep.as_str()).unwrap_or("value");
    let svg = render_svg(&summarize(rows, metric), x_label, metric.name());
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
