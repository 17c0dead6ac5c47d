//! Minimal SVG line plots of curve files, with the confidence band shaded.

use std::fs;
use std::path::{Path, PathBuf};

use riskfair::curve::CurveSeries;

use crate::Failure;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

pub fn run(input: &Path, out: Option<&Path>) -> Result<(), Failure> {
    if input.is_dir() {
        if out.is_some() {
            return Err(Failure::Usage("--out applies to a single curve file only".into()));
        }
        let mut files = Vec::new();
        collect_csv(input, &mut files)?;
        files.retain(|p| p.components().any(|c| c.as_os_str() == "curves"));
        for f in &files {
            render_file(f, &f.with_extension("svg"))?;
        }
        eprintln!("rendered {} curves", files.len());
        Ok(())
    } else {
        let target = out
            .map(Path::to_path_buf)
            .unwrap_or_else(|| input.with_extension("svg"));
        render_file(input, &target)
    }
}

fn collect_csv(dir: &Path, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_csv(&p, files)?;
        } else if p.extension().is_some_and(|e| e == "csv") {
            files.push(p);
        }
    }
    Ok(())
}

fn render_file(input: &Path, output: &Path) -> Result<(), Failure> {
    let file = fs::File::open(input).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
    let curve = CurveSeries::read_csv(file).map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?;
    let title = input
        .parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned());
    fs::write(output, svg(&curve, title.as_deref().unwrap_or("")))
        .map_err(|e| Failure::Runtime(format!("{}: {e}", output.display())))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the curve as an SVG document.
pub fn svg(curve: &CurveSeries, title: &str) -> String {
    let pts = &curve.points;
    let xs = pts.iter().map(|p| p.x);
    let ys = pts
        .iter()
        .flat_map(|p| [Some(p.y), p.band.map(|b| b.lower), p.band.map(|b| b.upper)])
        .flatten();
    let span = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = span(&mut xs.into_iter());
    let (y0, y1) = span(&mut ys.into_iter());
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    let banded: Vec<_> = pts.iter().filter_map(|p| p.band.map(|b| (p.x, b))).collect();
    if !banded.is_empty() {
        let upper = banded.iter().map(|(x, b)| format!("{:.2},{:.2}", px(*x), py(b.upper)));
        let lower = banded
            .iter()
            .rev()
            .map(|(x, b)| format!("{:.2},{:.2}", px(*x), py(b.lower)));
        let poly: Vec<String> = upper.chain(lower).collect();
        s.push_str(&format!(
            "<polygon points=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n",
            poly.join(" ")
        ));
    }
    let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.y))).collect();
    s.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"/>\n",
        line.join(" ")
    ));
    let text = |x: f64, y: f64, anchor: &str, body: &str| {
        format!(
            "<text x=\"{x:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{}</text>\n",
            escape(body)
        )
    };
    s.push_str(&text(WIDTH / 2.0, MARGIN / 2.0, "middle", title));
    s.push_str(&text(WIDTH / 2.0, HEIGHT - 12.0, "middle", &curve.x_label));
    s.push_str(&text(MARGIN, HEIGHT - MARGIN + 14.0, "middle", &format!("{x0:.3}")));
    s.push_str(&text(
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 14.0,
        "middle",
        &format!("{x1:.3}"),
    ));
    s.push_str(&text(MARGIN - 4.0, HEIGHT - MARGIN, "end", &format!("{y0:.3}")));
    s.push_str(&text(MARGIN - 4.0, MARGIN + 4.0, "end", &format!("{y1:.3}")));
    s.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&curve.y_label)
    ));
    s.push_str("</svg>\n");
    s
}
