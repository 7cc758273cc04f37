//! Static SVG line charts of convergence traces, rendered directly as path
//! and text elements so the output needs no plotting stack or external
//! assets.

use std::path::{Path, PathBuf};

use crate::trace_io::read_trace_csv;
use crate::CliError;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 210.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 64.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub output: PathBuf,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn load_series(files: &[PathBuf]) -> Result<Vec<Series>, CliError> {
    let mut series = Vec::with_capacity(files.len());
    for file in files {
        let rows = read_trace_csv(file)?;
        let label = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.display().to_string());
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.param_error.is_finite() && r.param_error > 0.0)
            .map(|r| (r.iter as f64, r.param_error.ln()))
            .collect();
        if points.is_empty() {
            return Err(CliError::SchemaMismatch(format!(
                "{}: no finite positive param_error values to plot",
                file.display()
            )));
        }
        series.push(Series { label, points });
    }
    Ok(series)
}

fn tick_values(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

/// Renders ln‖θ_t − θ*‖₂ against iteration, one polyline per input trace.
/// Single-point series (closed-form fits) become horizontal reference
/// lines. Returns the output path.
pub fn emit_plot(files: &[PathBuf], spec: &PlotSpec) -> Result<PathBuf, CliError> {
    if files.is_empty() {
        return Err(CliError::SchemaMismatch(
            "no trace files provided to plot".into(),
        ));
    }
    let mut series = load_series(files)?;

    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(1.0f64, f64::max);
    // broadcast single-point series across the x range as reference lines
    for s in &mut series {
        if s.points.len() == 1 {
            let y = s.points[0].1;
            s.points = vec![(0.0, y), (x_max, y)];
        }
    }
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in series.iter().flat_map(|s| s.points.iter()) {
        y_min = y_min.min(p.1);
        y_max = y_max.max(p.1);
    }
    if y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + plot_w * x / x_max;
    let sy = |y: f64| MARGIN_TOP + plot_h * (y_max - y) / (y_max - y_min);

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="26" text-anchor="middle" font-size="17">{}</text>
"#,
        MARGIN_LEFT + plot_w / 2.0,
        xml_escape(&spec.title)
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n<line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h,
    ));

    for x in tick_values(0.0, x_max, 6) {
        let px = sx(x);
        let py = MARGIN_TOP + plot_h;
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{py:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.0}</text>\n",
            py + 6.0,
            py + 22.0,
            x
        ));
        if x > 0.0 {
            svg.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{py:.1}\" stroke=\"#dddddd\"/>\n",
                MARGIN_TOP
            ));
        }
    }
    for y in tick_values(y_min, y_max, 6) {
        let py = sy(y);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"black\"/>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{y:.2}</text>\n",
            MARGIN_LEFT - 6.0,
            MARGIN_LEFT,
            MARGIN_LEFT - 10.0,
            py + 4.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#dddddd\"/>\n",
            MARGIN_LEFT + 1.0,
            MARGIN_LEFT + plot_w
        ));
    }

    // axis labels
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">iteration</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{c:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {c:.1})\">ln of parameter error</text>\n",
        c = MARGIN_TOP + plot_h / 2.0
    ));

    // series polylines and legend
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            path.join(" ")
        ));
        let ly = MARGIN_TOP + 14.0 + 20.0 * idx as f64;
        let lx = MARGIN_LEFT + plot_w + 14.0;
        svg.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2.5\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            lx + 26.0,
            lx + 32.0,
            ly + 4.0,
            xml_escape(&s.label)
        ));
    }

    svg.push_str("</svg>\n");
    if let Some(parent) = spec.output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    std::fs::write(&spec.output, svg).map_err(|e| CliError::io(&spec.output, e))?;
    Ok(spec.output.clone())
}

/// Minimal structural check that a file is a well-formed standalone SVG:
/// every opened tag closes and no external references appear.
pub fn validate_svg(path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text.as_str();
    while let Some(start) = rest.find('<') {
        rest = &rest[start + 1..];
        let end = rest.find('>').ok_or_else(|| {
            CliError::SchemaMismatch(format!("{}: unterminated tag", path.display()))
        })?;
        let tag = &rest[..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name => {}
                other => {
                    return Err(CliError::SchemaMismatch(format!(
                        "{}: mismatched </{name}> after <{Z}>",
                        path.display(),
                        Z = other.unwrap_or_default()
                    )))
                }
            }
        } else if !tag.ends_with('/') {
            let name: String = tag.split_whitespace().next().unwrap_or("").to_string();
            stack.push(name);
        }
    }
    if !stack.is_empty() {
        return Err(CliError::SchemaMismatch(format!(
            "{}: unclosed tags {stack:?}",
            path.display()
        )));
    }
    if text.contains("href=") || text.contains("url(") {
        return Err(CliError::SchemaMismatch(format!(
            "{}: output should not reference external assets",
            path.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace_io::TRACE_HEADER;

    fn write_trace(dir: &Path, name: &str, rows: &[(usize, f64)]) -> PathBuf {
        let mut text = String::from(TRACE_HEADER);
        text.push('\n');
        for (iter, err) in rows {
            text.push_str(&format!("{iter},1,0.1,0.01,-1,{err},false,0\n"));
        }
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn empty_input_is_schema_mismatch() {
        let spec = PlotSpec {
            title: "x".into(),
            output: PathBuf::from("/tmp/never.svg"),
        };
        assert!(matches!(
            emit_plot(&[], &spec),
            Err(CliError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn plots_series_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_trace(dir.path(), "rnm_eps0.1_seed0.csv", &[(0, 10.0), (1, 1.0), (2, 0.1)]);
        let b = write_trace(dir.path(), "ols_eps0.1_seed0.csv", &[(0, 0.9)]);
        let out = dir.path().join("fig.svg");
        let spec = PlotSpec {
            title: "convergence <test> & sample".into(),
            output: out.clone(),
        };
        emit_plot(&[a, b], &spec).unwrap();
        validate_svg(&out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.contains("polyline"));
        assert!(text.contains("rnm_eps0.1_seed0"));
        assert!(text.contains("&lt;test&gt;"));
        // reference line spans the x range
        assert_eq!(text.matches("<polyline").count(), 2);
    }

    #[test]
    fn constant_series_renders_horizontal_line() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_trace(dir.path(), "flat.csv", &[(0, 2.0), (1, 2.0), (2, 2.0)]);
        let out = dir.path().join("flat.svg");
        emit_plot(
            &[a],
            &PlotSpec {
                title: "flat".into(),
                output: out.clone(),
            },
        )
        .unwrap();
        validate_svg(&out).unwrap();
    }
}
