//! SVG figures: loss curves, per-method metric panels, error maps, HSS
//! heatmaps and cosine-weighted global-mean series.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{MonthlyField, Stamp};
use crate::error::{DuneError, Result};
use crate::train::EpochRecord;
use crate::verify::{acc, rmse, RegionMask, ScoreReport};

/// Largest number of longitude columns drawn in a map.
const MAP_MAX_COLUMNS: usize = 360;

const SERIES_COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

type LossSeries = (&'static str, fn(&EpochRecord) -> f64);

/// What was drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotOutput {
    pub path: PathBuf,
    pub panels: usize,
    pub series: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmse,
    Acc,
    Hss,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::Rmse => "RMSE (K)",
            Metric::Acc => "ACC",
            Metric::Hss => "HSS",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = DuneError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmse" => Ok(Metric::Rmse),
            "acc" => Ok(Metric::Acc),
            "hss" => Ok(Metric::Hss),
            _ => Err(DuneError::InvalidArgument(format!("unknown metric `{s}`"))),
        }
    }
}

fn plot_err<E: std::fmt::Display>(e: E) -> DuneError {
    DuneError::Plot(e.to_string())
}

fn prepare(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Finite range of `values` widened so that it is never empty.
fn padded(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-6 * lo.abs().max(1.0));
    (lo - pad, hi + pad)
}

/// Decimal year at the middle of the stamp's period.
pub fn decimal_year(stamp: Stamp) -> f64 {
    let slots = stamp.cadence().slots() as f64;
    stamp.year() as f64 + (stamp.slot() as f64 + 0.5) / slots
}

/// Mean over finite cells weighted by the cosine of latitude.
pub fn cosine_weighted_mean(field: &MonthlyField) -> f64 {
    let n_lon = field.grid.n_lon();
    let (mut num, mut den) = (0.0, 0.0);
    for (j, &lat) in field.grid.lat().iter().enumerate() {
        let w = lat.to_radians().cos().max(0.0);
        for v in &field.values[j * n_lon..(j + 1) * n_lon] {
            if v.is_finite() {
                num += w * *v as f64;
                den += w;
            }
        }
    }
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

pub fn global_mean_series(fields: &[MonthlyField]) -> Result<Vec<(Stamp, f64)>> {
    fields
        .iter()
        .map(|f| Ok((f.stamp_or_err()?, cosine_weighted_mean(f))))
        .collect()
}

/// Training and validation loss against epoch.
pub fn loss_curve(history: &[EpochRecord], path: &Path) -> Result<PlotOutput> {
    if history.is_empty() {
        return Err(DuneError::InvalidArgument("empty training history".into()));
    }
    prepare(path)?;
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (lo, hi) = padded(history.iter().flat_map(|r| [r.train_loss, r.val_loss]));
    let x_max = history.last().map_or(1, |r| r.epoch.max(1)) as f64;
    let mut chart = ChartBuilder::on(&root)
        .caption("Training and validation loss", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..x_max, lo..hi)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("epoch")
        .y_desc("loss (normalized)")
        .draw()
        .map_err(plot_err)?;
    let series: [LossSeries; 2] = [("train", |r| r.train_loss), ("validation", |r| r.val_loss)];
    for (i, (name, get)) in series.into_iter().enumerate() {
        let color = SERIES_COLORS[i];
        chart
            .draw_series(LineSeries::new(
                history.iter().map(|r| (r.epoch as f64, get(r))),
                color.stroke_width(2),
            ))
            .map_err(plot_err)?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    if let Some(best) = history.iter().find(|r| r.is_best) {
        chart
            .draw_series(std::iter::once(Circle::new(
                (best.epoch as f64, best.val_loss),
                5,
                BLACK.filled(),
            )))
            .map_err(plot_err)?
            .label("restored")
            .legend(|(x, y)| Circle::new((x + 10, y), 4, BLACK.filled()));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(PlotOutput {
        path: path.to_path_buf(),
        panels: 1,
        series: 2,
    })
}

fn metric_of(row: &crate::verify::ScoreRow, metric: Metric) -> Option<f64> {
    match metric {
        Metric::Rmse => Some(row.rmse),
        Metric::Acc => Some(row.acc),
        Metric::Hss => row.hss,
    }
}

/// Method labels in report order, `name` or `name@h` for leads above one.
fn method_keys(report: &ScoreReport, region: &str) -> Vec<(String, usize)> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in report.rows.iter().filter(|r| r.region == region) {
        if !keys.iter().any(|(m, h)| *m == r.method && *h == r.horizon) {
            keys.push((r.method.clone(), r.horizon));
        }
    }
    keys
}

fn key_label(method: &str, horizon: usize) -> String {
    if horizon == 1 {
        method.to_string()
    } else {
        format!("{method}@{horizon}")
    }
}

/// One time-series panel per method of `metric` over the scored stamps
/// in `region`, with the method's mean in the caption.
pub fn metric_panels(report: &ScoreReport, metric: Metric, region: &str, path: &Path) -> Result<PlotOutput> {
    let keys = method_keys(report, region);
    if keys.is_empty() {
        return Err(DuneError::InvalidArgument(format!("no scores for region `{region}`")));
    }
    prepare(path)?;
    let rows_of = |m: &str, h: usize| -> Vec<(f64, f64)> {
        report
            .rows
            .iter()
            .filter(|r| r.region == region && r.method == m && r.horizon == h)
            .filter_map(|r| Some((decimal_year(r.stamp?), metric_of(r, metric)?)))
            .collect()
    };
    let all: Vec<(f64, f64)> = keys.iter().flat_map(|(m, h)| rows_of(m, *h)).collect();
    let (x_lo, x_hi) = padded(all.iter().map(|p| p.0));
    let (y_lo, y_hi) = padded(all.iter().map(|p| p.1));
    let root = SVGBackend::new(path, (900, 260 * keys.len() as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let panels = root.split_evenly((keys.len(), 1));
    for (i, ((m, h), area)) in keys.iter().zip(&panels).enumerate() {
        let pts = rows_of(m, *h);
        let caption = match report.aggregate(m, region, *h).and_then(|r| metric_of(r, metric)) {
            Some(v) => format!("{} ({region}): mean {} {v:.3}", key_label(m, *h), metric.label()),
            None => format!("{} ({region})", key_label(m, *h)),
        };
        let mut chart = ChartBuilder::on(area)
            .caption(caption, ("sans-serif", 18))
            .margin(8)
            .x_label_area_size(30)
            .y_label_area_size(60)
            .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .y_desc(metric.label())
            .x_label_formatter(&|x| format!("{x:.1}"))
            .draw()
            .map_err(plot_err)?;
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?;
        chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(PlotOutput {
        path: path.to_path_buf(),
        panels: keys.len(),
        series: keys.len(),
    })
}

/// Blue-white-red colour for `t` in [-1, 1].
fn diverging(t: f64) -> RGBColor {
    let t = t.clamp(-1.0, 1.0);
    let fade = |c: f64| (255.0 * (1.0 - t.abs()) + c * t.abs()).round() as u8;
    if t < 0.0 {
        RGBColor(fade(33.0), fade(102.0), fade(172.0))
    } else {
        RGBColor(fade(178.0), fade(24.0), fade(43.0))
    }
}

/// Forecast minus truth on a lat/lon map; the caption carries the
/// latitude-weighted global RMSE and ACC.
pub fn error_map(forecast: &MonthlyField, truth: &MonthlyField, path: &Path) -> Result<PlotOutput> {
    forecast.grid.ensure_same(&truth.grid, "error map truth")?;
    let grid = &forecast.grid;
    let weights = grid.latitude_weights();
    let region = RegionMask::global(grid);
    let e_rmse = rmse(&forecast.values, &truth.values, &weights, &region)?;
    let e_acc = acc(&forecast.values, &truth.values, &weights, &region)?;
    let diff: Vec<f32> = forecast.values.iter().zip(&truth.values).map(|(a, b)| a - b).collect();
    let diff = forecast.with_values(diff)?;
    let factor = if grid.n_lon() > MAP_MAX_COLUMNS {
        grid.coarsen_factor(360.0 / MAP_MAX_COLUMNS as f64)
    } else {
        1
    };
    let shown = if factor > 1 { diff.coarsen(factor)? } else { diff };
    let scale = shown
        .values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs() as f64))
        .max(1e-6);
    prepare(path)?;
    let root = SVGBackend::new(path, (1000, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let stamp = forecast.stamp.map_or("-".to_string(), |s| s.to_string());
    let mut chart = ChartBuilder::on(&root)
        .caption(
            format!("Forecast error {stamp}: RMSE {e_rmse:.3} K, ACC {e_acc:.3} (colour range ±{scale:.2} K)"),
            ("sans-serif", 20),
        )
        .margin(12)
        .x_label_area_size(35)
        .y_label_area_size(45)
        .build_cartesian_2d(0.0..360.0, -90.0..90.0)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("longitude")
        .y_desc("latitude")
        .disable_mesh()
        .draw()
        .map_err(plot_err)?;
    let g = &shown.grid;
    let (dlat, dlon) = (g.lat_spacing(), g.resolution());
    let n_lon = g.n_lon();
    let cells = g.lat().iter().enumerate().flat_map(|(j, &lat)| {
        let vals = &shown.values;
        g.lon().iter().enumerate().filter_map(move |(k, &lon)| {
            let v = vals[j * n_lon + k];
            v.is_finite().then(|| {
                let (x0, x1) = (lon - dlon / 2.0, lon + dlon / 2.0);
                let (y0, y1) = ((lat - dlat / 2.0).max(-90.0), (lat + dlat / 2.0).min(90.0));
                Rectangle::new([(x0, y0), (x1, y1)], diverging(v as f64 / scale).filled())
            })
        })
    });
    chart.draw_series(cells).map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(PlotOutput {
        path: path.to_path_buf(),
        panels: 1,
        series: 1,
    })
}

/// HSS per method (rows) and year (columns) in `region`: the mean HSS of
/// the year's scored stamps.
pub fn hss_heatmap(report: &ScoreReport, region: &str, path: &Path) -> Result<PlotOutput> {
    let keys = method_keys(report, region);
    let mut cells: BTreeMap<(usize, i32), (f64, usize)> = BTreeMap::new();
    for (i, (m, h)) in keys.iter().enumerate() {
        for r in report
            .rows
            .iter()
            .filter(|r| r.region == region && r.method == *m && r.horizon == *h)
        {
            if let (Some(s), Some(v)) = (r.stamp, r.hss) {
                let e = cells.entry((i, s.year())).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
    }
    if cells.is_empty() {
        return Err(DuneError::InvalidArgument(format!(
            "no HSS values for region `{region}`"
        )));
    }
    let mut years: Vec<i32> = cells.keys().map(|k| k.1).collect();
    years.sort_unstable();
    years.dedup();
    prepare(path)?;
    let root = SVGBackend::new(path, (220 + 90 * years.len() as u32, 120 + 50 * keys.len() as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let labels: Vec<String> = keys.iter().map(|(m, h)| key_label(m, *h)).collect();
    let years_fmt = years.clone();
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("HSS by year ({region})"), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(30)
        .y_label_area_size(160)
        .build_cartesian_2d(0.0..years.len() as f64, 0.0..keys.len() as f64)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_labels(years.len() * 2 + 1)
        .y_labels(keys.len() * 2 + 1)
        .x_label_formatter(&|x| {
            let i = x.floor() as usize;
            if (x - x.floor() - 0.5).abs() < 1e-6 && i < years_fmt.len() {
                years_fmt[i].to_string()
            } else {
                String::new()
            }
        })
        .y_label_formatter(&|y| {
            let i = y.floor() as usize;
            if (y - y.floor() - 0.5).abs() < 1e-6 && i < labels.len() {
                labels[i].clone()
            } else {
                String::new()
            }
        })
        .draw()
        .map_err(plot_err)?;
    // HSS spans [-50, 100]; zero (no skill) is white.
    let colour = |v: f64| diverging(if v >= 0.0 { v / 100.0 } else { v / 50.0 });
    chart
        .draw_series(cells.iter().map(|(&(i, y), &(sum, n))| {
            let x = years.iter().position(|&v| v == y).expect("collected") as f64;
            Rectangle::new(
                [(x, i as f64), (x + 1.0, i as f64 + 1.0)],
                colour(sum / n as f64).filled(),
            )
        }))
        .map_err(plot_err)?;
    chart
        .draw_series(cells.iter().map(|(&(i, y), &(sum, n))| {
            let x = years.iter().position(|&v| v == y).expect("collected") as f64;
            Text::new(
                format!("{:.1}", sum / n as f64),
                (x + 0.3, i as f64 + 0.55),
                ("sans-serif", 14),
            )
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(PlotOutput {
        path: path.to_path_buf(),
        panels: 1,
        series: keys.len(),
    })
}

/// Cosine-weighted global-mean series against time, one line each.
pub fn global_mean_trend(series: &[(String, Vec<(Stamp, f64)>)], path: &Path) -> Result<PlotOutput> {
    if series.iter().all(|(_, s)| s.is_empty()) {
        return Err(DuneError::InvalidArgument("no global-mean values to plot".into()));
    }
    prepare(path)?;
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|(_, s)| s.iter().map(|&(t, v)| (decimal_year(t), v)).collect())
        .collect();
    let (x_lo, x_hi) = padded(pts.iter().flatten().map(|p| p.0));
    let (y_lo, y_hi) = padded(pts.iter().flatten().map(|p| p.1));
    let root = SVGBackend::new(path, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Cosine-weighted global mean temperature", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("year")
        .y_desc("K")
        .x_label_formatter(&|x| format!("{x:.0}"))
        .draw()
        .map_err(plot_err)?;
    for (i, ((name, _), p)) in series.iter().zip(&pts).enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        chart
            .draw_series(LineSeries::new(p.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(PlotOutput {
        path: path.to_path_buf(),
        panels: 1,
        series: series.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::data::{GridSpec, VariableId};

    #[test]
    fn constant_field_has_constant_mean() {
        let g = Arc::new(GridSpec::regular(16, 32).unwrap());
        for c in [0.0f32, 1.5, 287.25] {
            let f = MonthlyField::filled(VariableId::BlendedT, Some(Stamp::month(2000, 1)), g.clone(), c);
            assert!((cosine_weighted_mean(&f) - c as f64).abs() <= 1e-12 * (c as f64).abs().max(1.0));
        }
    }

    #[test]
    fn loss_curve_writes_svg() {
        let dir = tempfile::tempdir().unwrap();
        let h: Vec<EpochRecord> = (0..5)
            .map(|e| EpochRecord {
                epoch: e,
                lr: 1e-3,
                train_loss: 1.0 / (e + 1) as f64,
                val_loss: 1.2 / (e + 1) as f64,
                is_best: e == 4,
            })
            .collect();
        let p = dir.path().join("loss.svg");
        let out = loss_curve(&h, &p).unwrap();
        assert_eq!(out.panels, 1);
        let svg = std::fs::read_to_string(&p).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("validation"));
    }
}
