//! Static SVG plots of win rate against guess/drawing cutoffs.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::metrics::{HumanAiScores, ScoreRow};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn cutoff_label(c: Option<usize>) -> String {
    c.map_or_else(|| "∞".to_string(), |c| c.to_string())
}

fn panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    title: &str,
    x_desc: &str,
    rows: &[ScoreRow],
    soft: bool,
) -> Result<(), Box<dyn std::error::Error>>
where
    DB::ErrorType: 'static,
{
    let labels: Vec<String> = rows
        .first()
        .map(|r| r.points.iter().map(|p| cutoff_label(p.cutoff)).collect())
        .unwrap_or_default();
    let n = labels.len().max(1);
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(44)
        .build_cartesian_2d(-0.5f64..(n as f64 - 0.5), 0f64..100f64)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(if soft { "soft win %" } else { "win %" })
        .x_labels(n)
        .x_label_formatter(&|x| {
            let i = x.round();
            if (x - i).abs() < 1e-6 && i >= 0.0 {
                labels.get(i as usize).cloned().unwrap_or_default()
            } else {
                String::new()
            }
        })
        .draw()?;
    for (k, row) in rows.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = row
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    i as f64,
                    100.0 * if soft { p.soft_win_rate } else { p.win_rate },
                )
            })
            .collect();
        chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))?
            .label(format!("{} (n={})", row.label, row.games))
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2))
            });
        chart.draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    Ok(())
}

fn render(
    path: &Path,
    title: &str,
    x_desc: &str,
    rows: &[ScoreRow],
) -> Result<(), Box<dyn std::error::Error>> {
    let root = SVGBackend::new(path, (960, 420)).into_drawing_area();
    root.fill(&WHITE)?;
    let halves = root.split_evenly((1, 2));
    panel(&halves[0], &format!("{title}: win"), x_desc, rows, false)?;
    panel(
        &halves[1],
        &format!("{title}: soft win"),
        x_desc,
        rows,
        true,
    )?;
    root.present()?;
    Ok(())
}

/// Writes `guesser_curves.svg` (win rate by guess cutoff) and
/// `drawer_curves.svg` (by drawing cutoff) under `dir`.
pub fn write_cutoff_plots(scores: &HumanAiScores, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (role, rows, axis) in [
        ("guesser", &scores.guesser, "guesses"),
        ("drawer", &scores.drawer, "drawings"),
    ] {
        let path = dir.join(format!("{role}_curves.svg"));
        render(
            &path,
            &format!("by {role}"),
            &format!("{axis} cutoff"),
            rows,
        )
        .map_err(|e| anyhow::anyhow!("plotting {}: {e}", path.display()))?;
        out.push(path);
    }
    Ok(out)
}
