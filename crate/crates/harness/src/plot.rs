//! Best-effort SVG figures. Failures are reported to the caller, which logs
//! and carries on; CSV output never depends on them.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{HarnessError, Result};

pub type Series = (String, Vec<(f64, f64)>);

fn bounds(series: &[Series]) -> Option<((f64, f64), (f64, f64))> {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if pts.is_empty() {
        return None;
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.05).max(1e-3);
        (lo - pad, hi + pad)
    };
    Some((fold(|p| p.0), fold(|p| p.1)))
}

fn plot_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Plot(e.to_string())
}

/// One polyline with markers per series.
pub fn line_plot(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<()> {
    draw(path, title, x_label, y_label, series, true)
}

/// Point clouds, one colour per group.
pub fn scatter_plot(path: &Path, title: &str, x_label: &str, y_label: &str, groups: &[Series]) -> Result<()> {
    draw(path, title, x_label, y_label, groups, false)
}

fn draw(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series], lines: bool) -> Result<()> {
    let Some(((x0, x1), (y0, y1))) = bounds(series) else {
        return Err(HarnessError::Plot(format!("{title}: nothing to draw")));
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(plot_err)?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        if lines {
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(name)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        }
        let anno = chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, if lines { 3 } else { 2 }, color.filled())))
            .map_err(plot_err)?;
        if !lines {
            anno.label(name).legend(move |(x, y)| Circle::new((x + 9, y), 3, color.filled()));
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}
