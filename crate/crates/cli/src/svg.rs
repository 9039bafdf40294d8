//! Minimal native SVG plotting: stacked panels of polylines, no plotting
//! dependency. Log-scale norms are handled upstream by plotting the values
//! the series already stores in log domain.

use std::fmt::Write as _;

use shearlab_core::diagnostics::NormSeries;

const WIDTH: f64 = 820.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_V: f64 = 40.0;

struct Panel {
    label: &'static str,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        // Degenerate range: pad so the flat line sits mid-panel.
        return (lo - 1.0, hi + 1.0);
    }
    (lo, hi)
}

fn render_panel(out: &mut String, panel: &Panel, top: f64, t_span: (f64, f64)) {
    let (t0, t1) = t_span;
    let (v0, v1) = span(panel.points.iter().map(|p| p.1));
    let inner_w = WIDTH - MARGIN_L - MARGIN_R;
    let x = |t: f64| MARGIN_L + (t - t0) / (t1 - t0) * inner_w;
    let y = |v: f64| top + (1.0 - (v - v0) / (v1 - v0)) * PANEL_H;

    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{top}" width="{inner_w}" height="{PANEL_H}" fill="none" stroke="#999"/>"##
    );
    let mut path = String::new();
    for (t, v) in &panel.points {
        let _ = write!(path, "{:.2},{:.2} ", x(*t), y(*v));
    }
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
        path.trim_end(),
        panel.color
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="{}">{}</text>"#,
        MARGIN_L + 6.0,
        top + 16.0,
        panel.color,
        panel.label
    );
    for (v, anchor_y) in [(v1, top + 12.0), (v0, top + PANEL_H - 4.0)] {
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{anchor_y}" font-family="monospace" font-size="11" fill="#444" text-anchor="end">{v:.4}</text>"##,
            MARGIN_L - 6.0
        );
    }
    for (t, anchor) in [(t0, "start"), (t1, "end")] {
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{}" font-family="monospace" font-size="11" fill="#444" text-anchor="{anchor}">t={t:.3}</text>"##,
            x(t),
            top + PANEL_H + 14.0
        );
    }
}

/// Renders the log L^2 curve and, when the column is recorded, the mixing
/// scale curve beneath it.
pub fn render(series: &NormSeries, title: &str) -> String {
    let log_l2: Vec<(f64, f64)> = series.rows().iter().map(|r| (r.t, r.log_l2)).collect();
    let mix: Vec<(f64, f64)> = series
        .rows()
        .iter()
        .filter_map(|r| r.mix_scale.map(|m| (r.t, m)))
        .collect();

    let mut panels = vec![Panel { label: "log ||rho||_L2", color: "#1d4ed8", points: log_l2 }];
    if !mix.is_empty() {
        panels.push(Panel { label: "mixing scale H^-1/L^2", color: "#b45309", points: mix });
    }

    let t_span = span(series.rows().iter().map(|r| r.t));
    let height = MARGIN_V + panels.len() as f64 * (PANEL_H + MARGIN_V);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<text x="{MARGIN_L}" y="24" font-family="monospace" font-size="14" fill="#111">{title}</text>"##
    );
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, MARGIN_V + i as f64 * (PANEL_H + MARGIN_V), t_span);
    }
    let _ = writeln!(out, "</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use shearlab_core::diagnostics::{NormRow, NormSeries};

    #[test]
    fn renders_two_panels_with_finite_coordinates() {
        let mut series = NormSeries::new("plot");
        for i in 0..20 {
            let t = i as f64 * 0.25;
            let mut row = NormRow::new(t, -1.3 * t);
            row.mix_scale = Some(1.0 / (1.0 + t));
            series.push(row);
        }
        let svg = render(&series, "demo");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn single_row_series_still_renders() {
        let mut series = NormSeries::new("tiny");
        series.push(NormRow::new(0.0, 0.0));
        let svg = render(&series, "tiny");
        assert!(svg.contains("<polyline") && !svg.contains("NaN"));
    }
}
