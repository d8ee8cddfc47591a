//! Profile plots of `u` and `v` against `x`, rendered in-process to PNG.

use std::path::{Path, PathBuf};
use std::sync::Once;

use plotters::prelude::*;
use plotters::style::{register_font, FontStyle};

use crate::output::{read_snapshot, SnapshotData};
use crate::CliError;

static FONT: &[u8] = include_bytes!("../assets/DejaVuSans.ttf");
static REGISTER: Once = Once::new();

pub const DEFAULT_SIZE: (u32, u32) = (900, 600);

const U_COLOR: RGBColor = RGBColor(31, 119, 180);
const V_COLOR: RGBColor = RGBColor(214, 39, 40);

fn ensure_font() {
    REGISTER.call_once(|| {
        if register_font("sans-serif", FontStyle::Normal, FONT).is_err() {
            panic!("embedded font failed to load");
        }
    });
}

/// Parses `WxH`.
pub fn parse_size(text: &str) -> Result<(u32, u32), String> {
    let (w, h) = text.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {text:?}"))?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad width in {text:?}"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad height in {text:?}"))?;
    if w < 100 || h < 100 {
        return Err(format!("plot size {w}x{h} is too small (minimum 100x100)"));
    }
    Ok((w, h))
}

fn plot_err(e: impl std::fmt::Display) -> CliError {
    CliError::Plot(e.to_string())
}

fn y_top(snap: &SnapshotData) -> f64 {
    let top = snap.u.iter().chain(&snap.v).copied().fold(0.0, f64::max);
    if top > 0.0 {
        top * 1.1
    } else {
        1.0
    }
}

fn draw_panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    snap: &SnapshotData,
    title: &str,
    y_max: f64,
) -> Result<(), CliError>
where
    DB::ErrorType: 'static,
{
    let x0 = snap.x.first().copied().unwrap_or(0.0);
    let x1 = snap.x.last().copied().unwrap_or(1.0);
    let half_cell = if snap.x.len() > 1 { 0.5 * (snap.x[1] - snap.x[0]) } else { 0.5 };
    let (lo, hi) = (x0 - half_cell, x1 + half_cell);
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(lo..hi, 0.0..y_max)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("x").y_desc("density").label_style(("sans-serif", 14)).draw().map_err(plot_err)?;
    for (name, values, color) in [("u", &snap.u, U_COLOR), ("v", &snap.v, V_COLOR)] {
        chart
            .draw_series(LineSeries::new(snap.x.iter().copied().zip(values.iter().copied()), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .label_font(("sans-serif", 14))
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

/// Title line for a snapshot: time plus an optional parameter summary.
pub fn title_for(t: f64, params: Option<&str>) -> String {
    match params {
        Some(p) if !p.is_empty() => format!("t = {t}   {p}"),
        _ => format!("t = {t}"),
    }
}

/// Renders one snapshot to `path`.
pub fn render_snapshot(path: &Path, snap: &SnapshotData, size: (u32, u32), params: Option<&str>) -> Result<(), CliError> {
    ensure_font();
    let root = BitMapBackend::new(path, size).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    draw_panel(&root, snap, &title_for(snap.t, params), y_top(snap))?;
    root.present().map_err(plot_err)
}

/// Renders snapshots side by side on a shared vertical scale, one panel per
/// snapshot; each panel has the size `size`.
pub fn render_panels(path: &Path, snaps: &[SnapshotData], size: (u32, u32), params: Option<&str>) -> Result<(), CliError> {
    ensure_font();
    let n = snaps.len().max(1) as u32;
    let root = BitMapBackend::new(path, (size.0 * n, size.1)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let y_max = snaps.iter().map(y_top).fold(0.0, f64::max);
    for (area, snap) in root.split_evenly((1, n as usize)).iter().zip(snaps) {
        draw_panel(area, snap, &title_for(snap.t, params), y_max)?;
    }
    root.present().map_err(plot_err)
}

/// Reads `snapshots`, writes `<stem>.png` for each into `out_dir` (next to the
/// input when `None`), and `panels.png` when there are several. Returns the
/// written paths.
pub fn cmd_plot(
    snapshots: &[PathBuf],
    out_dir: Option<&Path>,
    size: (u32, u32),
    params: Option<&str>,
) -> Result<Vec<PathBuf>, CliError> {
    let mut data = Vec::with_capacity(snapshots.len());
    for p in snapshots {
        data.push(read_snapshot(p)?);
    }
    let mut written = Vec::new();
    for (p, snap) in snapshots.iter().zip(&data) {
        let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| p.parent().map(Path::to_path_buf).unwrap_or_default());
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
        let png = dir.join(p.with_extension("png").file_name().expect("snapshot paths name a file"));
        render_snapshot(&png, snap, size, params)?;
        written.push(png);
    }
    if data.len() > 1 {
        let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| written[0].parent().map(Path::to_path_buf).unwrap_or_default());
        let png = dir.join("panels.png");
        render_panels(&png, &data, size, params)?;
        written.push(png);
    }
    Ok(written)
}
