//! Static SVG figures: confusion heatmaps, sparsity curves, fraction vs
//! grade scatter plots and the grade histogram.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;
use popsent_core::experiments::SparsityRow;
use popsent_core::ConfusionMatrix;

fn draw_err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow!("plotting failed: {e:?}")
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(d)?;
    }
    Ok(())
}

/// 2x2 heatmap, truth on rows (populist first), prediction on columns.
pub fn confusion_heatmap(path: &Path, title: &str, cm: &ConfusionMatrix) -> Result<()> {
    ensure_parent(path)?;
    let root = SVGBackend::new(path, (420, 400)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(90)
        .build_cartesian_2d(0i32..2, 0i32..2)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_labels(2)
        .y_labels(2)
        .x_label_formatter(&|x| ["populist", "non-populist"].get(*x as usize).unwrap_or(&"").to_string())
        .y_label_formatter(&|y| ["non-populist", "populist"].get(*y as usize).unwrap_or(&"").to_string())
        .x_desc("predicted")
        .y_desc("human")
        .draw()
        .map_err(draw_err)?;
    // (column, row from bottom, count)
    let cells = [(0, 1, cm.tp), (1, 1, cm.fn_), (0, 0, cm.fp), (1, 0, cm.tn)];
    let max = cells.iter().map(|c| c.2).max().unwrap_or(0).max(1) as f64;
    chart
        .draw_series(cells.iter().map(|&(x, y, n)| {
            let shade = 1.0 - 0.8 * n as f64 / max;
            let c = RGBColor((255.0 * shade) as u8, (255.0 * shade) as u8, 255);
            Rectangle::new([(x, y), (x + 1, y + 1)], c.filled())
        }))
        .map_err(draw_err)?;
    let area = chart.plotting_area();
    for &(x, y, n) in &cells {
        let (px, py) = area.map_coordinate(&(x, y + 1));
        let (qx, qy) = area.map_coordinate(&(x + 1, y));
        root.draw(&Text::new(
            n.to_string(),
            ((px + qx) / 2, (py + qy) / 2),
            ("sans-serif", 24).into_font().color(&BLACK).pos(plotters::style::text_anchor::Pos::new(
                plotters::style::text_anchor::HPos::Center,
                plotters::style::text_anchor::VPos::Center,
            )),
        ))
        .map_err(draw_err)?;
    }
    root.present().map_err(draw_err)?;
    Ok(())
}

/// Three side-by-side panels (accuracy, F1, MCC) against sentences per
/// class.
pub fn sparsity_curves(path: &Path, rows: &[SparsityRow]) -> Result<()> {
    ensure_parent(path)?;
    let root = SVGBackend::new(path, (1200, 380)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let panels = root.split_evenly((1, 3));
    let max_n = rows.iter().map(|r| r.sentences_per_class).max().unwrap_or(1) as f64;
    type Panel = (&'static str, fn(&SparsityRow) -> f64, (f64, f64));
    let series: [Panel; 3] = [
        ("Accuracy", |r| r.metrics.accuracy, (0.0, 1.0)),
        ("F1", |r| r.metrics.f1, (0.0, 1.0)),
        ("MCC", |r| r.metrics.mcc, (-1.0, 1.0)),
    ];
    let mut sorted: Vec<&SparsityRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.sentences_per_class);
    for (panel, (name, get, (lo, hi))) in panels.iter().zip(series) {
        let mut chart = ChartBuilder::on(panel)
            .caption(name, ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(45)
            .build_cartesian_2d(0f64..max_n * 1.05, lo..hi)
            .map_err(draw_err)?;
        chart
            .configure_mesh()
            .x_desc("sentences per class")
            .y_desc(name)
            .draw()
            .map_err(draw_err)?;
        let pts: Vec<(f64, f64)> = sorted.iter().map(|r| (r.sentences_per_class as f64, get(r))).collect();
        chart.draw_series(LineSeries::new(pts.clone(), &BLUE)).map_err(draw_err)?;
        chart
            .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, BLUE.filled())))
            .map_err(draw_err)?;
    }
    root.present().map_err(draw_err)?;
    Ok(())
}

/// Predicted populist fraction (x) against human grade (y), annotated with
/// r².
pub fn fraction_scatter(path: &Path, title: &str, points: &[(f64, f64)], r2: Option<f64>) -> Result<()> {
    ensure_parent(path)?;
    let root = SVGBackend::new(path, (520, 440)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let caption = match r2 {
        Some(r) => format!("{title} (r² = {r:.2})"),
        None => title.to_string(),
    };
    let mut chart = ChartBuilder::on(&root)
        .caption(caption, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(45)
        .build_cartesian_2d(0f64..1f64, 0f64..2f64)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("share of sentences predicted populist")
        .y_desc("human grade")
        .draw()
        .map_err(draw_err)?;
    chart
        .draw_series(points.iter().map(|&p| Circle::new(p, 3, BLUE.mix(0.7).filled())))
        .map_err(draw_err)?;
    chart
        .draw_series(LineSeries::new(vec![(0.0, 0.5), (1.0, 0.5)], RED.mix(0.5)))
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}

/// Counts of grades in tenths, 0.0 through 2.0.
pub fn grade_histogram(path: &Path, tenths: &[u8]) -> Result<()> {
    ensure_parent(path)?;
    let mut counts = [0u32; 21];
    for &t in tenths {
        counts[usize::from(t.min(20))] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1);
    let root = SVGBackend::new(path, (720, 400)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Distribution of human grades", ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(45)
        .build_cartesian_2d((0u32..20u32).into_segmented(), 0u32..top + top / 10 + 1)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(11)
        .x_label_formatter(&|v| match v {
            SegmentValue::CenterOf(t) | SegmentValue::Exact(t) => format!("{:.1}", *t as f64 / 10.0),
            SegmentValue::Last => String::new(),
        })
        .x_desc("grade")
        .y_desc("speeches")
        .draw()
        .map_err(draw_err)?;
    chart
        .draw_series(
            Histogram::vertical(&chart)
                .style(BLUE.mix(0.6).filled())
                .margin(2)
                .data(counts.iter().enumerate().map(|(t, &c)| (t as u32, c))),
        )
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use popsent_core::SentenceMetrics;

    #[test]
    fn figures_are_written_and_stable() {
        let dir = tempfile::tempdir().unwrap();
        let cm = ConfusionMatrix::new(17, 3, 2, 23);
        let a = dir.path().join("a.svg");
        let b = dir.path().join("b.svg");
        confusion_heatmap(&a, "speeches", &cm).unwrap();
        confusion_heatmap(&b, "speeches", &cm).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let svg = std::fs::read_to_string(&a).unwrap();
        assert!(svg.contains(">\n17\n<") || svg.contains(">17<"), "count label missing");

        let m = SentenceMetrics { accuracy: 0.6, precision: 0.6, recall: 0.6, f1: 0.6, mcc: 0.4 };
        let rows: Vec<SparsityRow> = [30, 60, 90]
            .into_iter()
            .map(|n| SparsityRow { sentences_per_class: n, n_train: 0, n_test: 0, metrics: m })
            .collect();
        sparsity_curves(&dir.path().join("s.svg"), &rows).unwrap();
        fraction_scatter(&dir.path().join("p.svg"), "speeches", &[(0.1, 0.2), (0.5, 1.0)], Some(0.58)).unwrap();
        assert!(std::fs::read_to_string(dir.path().join("p.svg")).unwrap().contains("0.58"));
        grade_histogram(&dir.path().join("h.svg"), &[0, 0, 5, 12, 20]).unwrap();
    }
}
