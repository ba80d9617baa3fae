//! CSV and SVG writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Round-trip float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Renders rows of already formatted fields as CSV.
pub fn csv_string(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
}

/// Files produced by a command, written together once everything is computed.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let io = |path: PathBuf| move |source| CliError::Io { path, source };
        std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(io(path.clone()))?;
            log::info!("wrote {}", path.display());
        }
        Ok(())
    }
}

/// One curve or point cloud of a [`Plot`].
#[derive(Debug, Clone)]
pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    /// Markers instead of a line.
    pub scatter: bool,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Same scale on both axes.
    pub equal_axes: bool,
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if lo > hi {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-6);
    (lo - pad, hi + pad)
}

impl Plot {
    fn render(&self, out: &mut String, x0: f64) {
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let (mut xl, mut xh) = extent(pts().map(|p| p.0));
        let (mut yl, mut yh) = extent(pts().map(|p| p.1));
        if self.equal_axes {
            let half = (xh - xl).max(yh - yl) / 2.0;
            let (cx, cy) = ((xl + xh) / 2.0, (yl + yh) / 2.0);
            (xl, xh, yl, yh) = (cx - half, cx + half, cy - half, cy + half);
        }
        let (w, h) = (PANEL_W - 2.0 * MARGIN, PANEL_H - 2.0 * MARGIN);
        let sx = |x: f64| x0 + MARGIN + (x - xl) / (xh - xl) * w;
        let sy = |y: f64| MARGIN + (1.0 - (y - yl) / (yh - yl)) * h;

        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{MARGIN:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#,
            x0 + MARGIN
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle">{}</text>"#,
            x0 + PANEL_W / 2.0,
            self.title
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x0 + PANEL_W / 2.0,
            PANEL_H - 12.0,
            self.x_label
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            x0 + 16.0,
            PANEL_H / 2.0,
            x0 + 16.0,
            PANEL_H / 2.0,
            self.y_label
        );
        for (v, anchor) in [(xl, "start"), (xh, "end")] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="{anchor}">{v:.3}</text>"#,
                sx(v),
                MARGIN + h + 14.0
            );
        }
        for v in [yl, yh] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{v:.3}</text>"#,
                x0 + MARGIN - 4.0,
                sy(v) + 4.0
            );
        }
        for s in &self.series {
            let finite = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite());
            if s.scatter {
                for &(x, y) in finite {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}"/>"#,
                        sx(x),
                        sy(y),
                        s.color
                    );
                }
            } else {
                let coords: Vec<String> = finite
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    coords.join(" "),
                    s.color
                );
            }
        }
    }
}

/// Static SVG document with the plots side by side.
pub fn svg_document(plots: &[Plot]) -> String {
    let width = PANEL_W * plots.len().max(1) as f64;
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{PANEL_H:.0}\" viewBox=\"0 0 {width:.0} {PANEL_H:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, p) in plots.iter().enumerate() {
        p.render(&mut out, i as f64 * PANEL_W);
    }
    out.push_str("</svg>\n");
    out
}

/// Palette cycled over curves.
pub const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];
