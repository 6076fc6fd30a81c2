//! Artifact writers. Every file is written to a temporary sibling and renamed
//! into place, so readers never observe a partial file.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use tempfile::NamedTempFile;
use ultralocal::simulation::{write_trace_csv, TraceRecord};

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[TraceRecord<f64>]) -> Result<()> {
    let mut buf = Vec::with_capacity(trace.len() * 96);
    write_trace_csv(&mut buf, trace)?;
    write_atomic(path, &buf)
}

pub fn write_json<S: serde::Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// (legend, colour, points)
type Series<'a> = (&'a str, &'a str, Vec<(f64, f64)>);

struct Panel<'a> {
    title: &'a str,
    series: Vec<Series<'a>>,
}

fn bounds(panel: &Panel) -> (f64, f64) {
    let (lo, hi) = panel
        .series
        .iter()
        .flat_map(|(_, _, pts)| pts.iter().map(|p| p.1))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-3);
    (lo - pad, hi + pad)
}

/// Two stacked panels: reference and position, then the control input.
pub fn trace_svg(title: &str, trace: &[TraceRecord<f64>]) -> String {
    let (w, ph, margin) = (900.0, 260.0, 56.0);
    let t_end = trace.last().map_or(1.0, |r| r.t).max(1e-9);
    let panels = [
        Panel {
            title: "Reference trajectory and position",
            series: vec![
                ("reference", "#d62728", trace.iter().map(|r| (r.t, r.y_ref)).collect()),
                ("position", "#1f77b4", trace.iter().map(|r| (r.t, r.y_measured)).collect()),
            ],
        },
        Panel {
            title: "Control input",
            series: vec![("u", "#2ca02c", trace.iter().map(|r| (r.t, r.u)).collect())],
        },
    ];
    let height = margin + panels.len() as f64 * (ph + margin);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" viewBox="0 0 {w} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    for (i, panel) in panels.iter().enumerate() {
        let top = margin + i as f64 * (ph + margin);
        let (x0, x1) = (margin + 10.0, w - 20.0);
        let (lo, hi) = bounds(panel);
        let sx = |t: f64| x0 + (x1 - x0) * t / t_end;
        let sy = |v: f64| top + ph - ph * (v - lo) / (hi - lo);
        let _ = writeln!(s, r#"<text x="{x0}" y="{}">{}</text>"#, top - 8.0, panel.title);
        let _ = writeln!(
            s,
            r##"<rect x="{x0}" y="{top}" width="{}" height="{ph}" fill="none" stroke="#888"/>"##,
            x1 - x0
        );
        for v in [lo, 0.5 * (lo + hi), hi] {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#, x0 - 4.0, sy(v) + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{x1}" y="{}" text-anchor="end">t = {t_end:.2} s</text>"#, top + ph + 16.0);
        for (j, (name, color, pts)) in panel.series.iter().enumerate() {
            let mut d = String::with_capacity(pts.len() * 16);
            // thin dense traces to about one point per horizontal pixel
            let stride = (pts.len() / (x1 - x0) as usize).max(1);
            for (k, &(t, v)) in pts.iter().step_by(stride).enumerate() {
                let _ = write!(d, "{}{:.1},{:.1}", if k == 0 { "M" } else { " L" }, sx(t), sy(v));
            }
            let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.3"/>"#);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{name}</text>"#,
                x1 - 6.0,
                top + 16.0 + 14.0 * j as f64
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// File-system friendly version of a controller label.
pub fn slug(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("iPID K_I=0.1"), "ipid_k_i_0.1");
        assert_eq!(slug("iPD backward-difference"), "ipd_backward-difference");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a").join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn svg_has_both_panels() {
        let s: ultralocal::Scenario = ultralocal::builtin_scenario("4").unwrap();
        let out = s.run().unwrap();
        let svg = trace_svg("scenario 4", &out.trace);
        assert!(svg.contains("Reference trajectory and position"));
        assert!(svg.contains("Control input"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
