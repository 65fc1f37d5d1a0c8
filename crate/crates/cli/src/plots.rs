//! Static SVG charts for violation counts and DTW spreads.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;
use plotters::style::text_anchor::{HPos, Pos, VPos};

use crate::error::CliError;

fn plot_err<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Stage(format!("plot {}: {e}", path.display()))
}

fn axis_label<DB: DrawingBackend>(
    root: &DrawingArea<DB, plotters::coord::Shift>,
    at: (i32, i32),
    label: &str,
) -> Result<(), DrawingAreaErrorKind<DB::ErrorType>> {
    let style = TextStyle::from(("sans-serif", 12)).pos(Pos::new(HPos::Center, VPos::Top));
    root.draw(&Text::new(label.to_string(), (at.0, at.1 + 6), style))
}

/// Vertical bars, one per label.
pub fn bar_chart(path: &Path, title: &str, y_label: &str, bars: &[(String, f64)]) -> Result<(), CliError> {
    let width = (120 + 70 * bars.len()).max(480) as u32;
    let root = SVGBackend::new(path, (width, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err(path))?;
    let top = bars.iter().map(|b| b.1).fold(0.0, f64::max).max(1.0) * 1.1;
    let n = bars.len().max(1);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(70)
        .y_label_area_size(50)
        .build_cartesian_2d(0f64..n as f64, 0f64..top)
        .map_err(plot_err(path))?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(0)
        .y_desc(y_label)
        .draw()
        .map_err(plot_err(path))?;
    chart
        .draw_series(bars.iter().enumerate().map(|(i, (_, v))| {
            Rectangle::new([(i as f64 + 0.15, 0.0), (i as f64 + 0.85, *v)], BLUE.mix(0.7).filled())
        }))
        .map_err(plot_err(path))?;
    for (i, (label, _)) in bars.iter().enumerate() {
        axis_label(&root, chart.backend_coord(&(i as f64 + 0.5, 0.0)), label).map_err(plot_err(path))?;
    }
    root.present().map_err(plot_err(path))
}

/// Box plot per group from precomputed `[min, q1, median, q3, max]`.
pub fn box_plot(path: &Path, title: &str, y_label: &str, groups: &BTreeMap<String, Vec<f64>>) -> Result<(), CliError> {
    let width = (120 + 90 * groups.len()).max(480) as u32;
    let root = SVGBackend::new(path, (width, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err(path))?;
    let top = groups.values().flatten().copied().fold(0.0, f64::max).max(1.0) * 1.1;
    let n = groups.len().max(1);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..n as f64, 0f64..top)
        .map_err(plot_err(path))?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(0)
        .y_desc(y_label)
        .draw()
        .map_err(plot_err(path))?;
    for (i, (label, q)) in groups.iter().enumerate() {
        let [lo, q1, med, q3, hi] = [q[0], q[1], q[2], q[3], q[4]];
        let (x0, xc, x1) = (i as f64 + 0.25, i as f64 + 0.5, i as f64 + 0.75);
        let line = BLACK.stroke_width(1);
        chart
            .draw_series([Rectangle::new([(x0, q1), (x1, q3)], BLUE.mix(0.3).filled())])
            .map_err(plot_err(path))?;
        chart
            .draw_series([
                PathElement::new(vec![(x0, q1), (x1, q1), (x1, q3), (x0, q3), (x0, q1)], line),
                PathElement::new(vec![(x0, med), (x1, med)], RED.stroke_width(2)),
                PathElement::new(vec![(xc, q3), (xc, hi)], line),
                PathElement::new(vec![(xc, q1), (xc, lo)], line),
                PathElement::new(vec![(x0 + 0.1, hi), (x1 - 0.1, hi)], line),
                PathElement::new(vec![(x0 + 0.1, lo), (x1 - 0.1, lo)], line),
            ])
            .map_err(plot_err(path))?;
        axis_label(&root, chart.backend_coord(&(xc, 0.0)), label).map_err(plot_err(path))?;
    }
    root.present().map_err(plot_err(path))
}
