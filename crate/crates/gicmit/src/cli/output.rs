//! File and report plumbing: atomic writes, summary statistics, and the
//! static SVG charts emitted by the study driver.

use std::fs;
use std::io;
use std::path::Path;

/// Write a file atomically: the content lands under a temporary name in
/// the same directory and is renamed over the target, so readers never see
/// a half-written file.
pub fn write_atomic(path: &Path, content: &str) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let base = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("artifact");
    let tmp = dir.join(format!(".{base}.tmp"));
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)
}

/// Population summary of a sample; empty input yields NaNs.
#[derive(Debug, Clone, Copy)]
pub struct Stats {
    pub avg: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

pub fn stats(xs: &[f64]) -> Stats {
    if xs.is_empty() {
        return Stats { avg: f64::NAN, min: f64::NAN, max: f64::NAN, std: f64::NAN };
    }
    let n = xs.len() as f64;
    let avg = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - avg) * (x - avg)).sum::<f64>() / n;
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Stats { avg, min, max, std: var.sqrt() }
}

const PALETTE: [&str; 6] = ["#1f6fb2", "#c23b22", "#2e8b57", "#8a5fbf", "#b8860b", "#444444"];

/// A fixed-size line chart: one polyline per labelled series, light axes,
/// tick labels, and a legend. Self-contained SVG, no external assets.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let (w, h) = (720.0, 480.0);
    let (x0, x1, y0, y1) = (80.0, 690.0, 420.0, 50.0);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, pts) in series {
        for &(x, y) in pts {
            if x.is_finite() && y.is_finite() {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    let (xmin, xmax) = span(&xs);
    let (ymin, ymax) = span(&ys);
    let sx = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
    let sy = |y: f64| y0 + (y - ymin) / (ymax - ymin) * (y1 - y0);
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    s.push_str(&format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (x0 + x1) / 2.0,
        xml_escape(title)
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#333\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#333\"/>\n"
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = xmin + f * (xmax - xmin);
        let yv = ymin + f * (ymax - ymin);
        let xp = sx(xv);
        let yp = sy(yv);
        s.push_str(&format!(
            "<line x1=\"{xp}\" y1=\"{y0}\" x2=\"{xp}\" y2=\"{}\" stroke=\"#ccc\"/>\n",
            y0 + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 22.0,
            tick(xv)
        ));
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{yp}\" x2=\"{x1}\" y2=\"{yp}\" stroke=\"#eee\"/>\n",
            x0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 8.0,
            yp + 4.0,
            tick(yv)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        h - 14.0,
        xml_escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"20\" y=\"{}\" transform=\"rotate(-90 20 {})\" text-anchor=\"middle\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        xml_escape(y_label)
    ));
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if !path.is_empty() {
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                path.join(" ")
            ));
            for p in &path {
                let (px, py) = p.split_once(',').unwrap();
                s.push_str(&format!(
                    "<circle cx=\"{px}\" cy=\"{py}\" r=\"3\" fill=\"{color}\"/>\n"
                ));
            }
        }
        let ly = y1 + 18.0 * i as f64;
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            x1 - 150.0,
            ly - 10.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{ly}\">{}</text>\n",
            x1 - 132.0,
            xml_escape(label)
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn span(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else if v.abs() >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
