//! Static SVG box plots of score overlap: one panel per assigned category,
//! one horizontal box-and-whisker glyph per scored category, all on a fixed
//! [0, 1] axis. Layout and formatting are fixed so identical input yields
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::pipeline::Failure;

#[derive(Debug, Clone)]
struct Row {
    assigned: String,
    scored: String,
    count: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

const WIDTH: f64 = 640.0;
const LEFT: f64 = 180.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 34.0;
const ROW_H: f64 = 22.0;
const TITLE_H: f64 = 20.0;
const PANEL_GAP: f64 = 14.0;

fn parse_rows(text: &str) -> Result<(Vec<Row>, Option<String>), Failure> {
    let mut stamp = None;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (ix, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if stamp.is_none() && comment.contains("config_hash=") {
                stamp = Some(comment.trim().to_string());
            }
            continue;
        }
        if !saw_header {
            if line != "assigned,scored,count,min,q1,median,q3,max" {
                return Err(Failure::data(
                    "plot",
                    format!("unexpected header {line:?}"),
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Failure::data(
                "plot",
                format!("line {}: expected 8 fields, got {}", ix + 1, fields.len()),
            ));
        }
        let number = |s: &str| -> Result<f64, Failure> {
            s.parse::<f64>()
                .map_err(|_| Failure::data("plot", format!("line {}: bad number {s:?}", ix + 1)))
        };
        rows.push(Row {
            assigned: fields[0].to_string(),
            scored: fields[1].to_string(),
            count: fields[2].parse().map_err(|_| {
                Failure::data("plot", format!("line {}: bad count {:?}", ix + 1, fields[2]))
            })?,
            min: number(fields[3])?,
            q1: number(fields[4])?,
            median: number(fields[5])?,
            q3: number(fields[6])?,
            max: number(fields[7])?,
        });
    }
    if rows.is_empty() {
        return Err(Failure::data("plot", "no data rows"));
    }
    for row in &rows {
        if row.count == 0 {
            return Err(Failure::data(
                "plot",
                format!("category {:?} is empty", row.assigned),
            ));
        }
    }
    Ok((rows, stamp))
}

fn x_of(value: f64) -> f64 {
    LEFT + value.clamp(0.0, 1.0) * (WIDTH - LEFT - RIGHT)
}

pub fn plot_overlap(input: &Path, output: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| Failure::data("plot", format!("{}: {e}", input.display())))?;
    let (rows, stamp) = parse_rows(&text)?;

    // assigned categories in first-appearance order, scored likewise
    let mut assigned: Vec<String> = Vec::new();
    for row in &rows {
        if !assigned.contains(&row.assigned) {
            assigned.push(row.assigned.clone());
        }
    }

    let panel_heights: Vec<(String, Vec<&Row>)> = assigned
        .iter()
        .map(|a| {
            let panel_rows: Vec<&Row> = rows.iter().filter(|r| &r.assigned == a).collect();
            (a.clone(), panel_rows)
        })
        .collect();
    let total_rows: usize = panel_heights.iter().map(|(_, r)| r.len()).sum();
    let height = TOP
        + panel_heights.len() as f64 * (TITLE_H + PANEL_GAP)
        + total_rows as f64 * ROW_H
        + 10.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height:.0}\" viewBox=\"0 0 {WIDTH} {height:.0}\">"
    );
    if let Some(stamp) = stamp {
        let _ = writeln!(svg, "<!-- {} -->", stamp.replace("--", "-"));
    }
    let _ = writeln!(
        svg,
        "<style>text{{font-family:monospace;font-size:11px;fill:#222}}.t{{font-size:12px;font-weight:bold}}</style>"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{height:.0}\" fill=\"white\"/>"
    );

    // shared top axis
    let axis_y = TOP - 12.0;
    let _ = writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{axis_y:.2}\" x2=\"{:.2}\" y2=\"{axis_y:.2}\" stroke=\"#888\"/>",
        x_of(0.0),
        x_of(1.0)
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let x = x_of(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#888\"/>",
            axis_y - 3.0,
            axis_y + 3.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{tick}</text>",
            axis_y - 7.0
        );
    }

    let mut y = TOP;
    for (assigned_category, panel_rows) in &panel_heights {
        let _ = writeln!(
            svg,
            "<text class=\"t\" x=\"8\" y=\"{:.2}\">assigned: {}</text>",
            y + 12.0,
            assigned_category
        );
        y += TITLE_H;
        for row in panel_rows {
            let mid = y + ROW_H / 2.0;
            let _ = writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
                LEFT - 8.0,
                mid + 4.0,
                row.scored
            );
            // whiskers with end ticks
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{mid:.2}\" x2=\"{:.2}\" y2=\"{mid:.2}\" stroke=\"#666\"/>",
                x_of(row.min),
                x_of(row.q1)
            );
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{mid:.2}\" x2=\"{:.2}\" y2=\"{mid:.2}\" stroke=\"#666\"/>",
                x_of(row.q3),
                x_of(row.max)
            );
            for v in [row.min, row.max] {
                let _ = writeln!(
                    svg,
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#666\"/>",
                    x_of(v),
                    mid - 4.0,
                    x_of(v),
                    mid + 4.0
                );
            }
            // interquartile box and median
            let box_w = (x_of(row.q3) - x_of(row.q1)).max(0.5);
            let _ = writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{box_w:.2}\" height=\"{:.2}\" fill=\"#9ecae1\" stroke=\"#3182bd\"/>",
                x_of(row.q1),
                mid - 7.0,
                14.0
            );
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#08519c\" stroke-width=\"2\"/>",
                x_of(row.median),
                mid - 7.0,
                x_of(row.median),
                mid + 7.0
            );
            y += ROW_H;
        }
        y += PANEL_GAP;
    }
    let _ = writeln!(svg, "</svg>");

    std::fs::write(output, svg)
        .map_err(|e| Failure::data("plot", format!("{}: {e}", output.display())))?;
    Ok(())
}
