//! Text renderings of evaluation results: CSV, markdown, SVG.

use std::collections::HashMap;
use std::fmt::Write;

use cefrscore::grader::{AnalyticScoreTable, AspectId, EssayScores, PromptCondition};
use cefrscore::stats::{CorrelationCell, CorrelationReport, FriedmanResult, NemenyiResult, ReconstructionGrid};

pub const SIGNIFICANCE: f64 = 0.05;

fn csv_value(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn md_value(cell: &CorrelationCell, bold: bool) -> String {
    match cell.value {
        Some(v) if bold => format!("**{v:.3}**"),
        Some(v) => format!("{v:.3}"),
        None => "–".into(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn condition_label(c: PromptCondition) -> &'static str {
    match c {
        PromptCondition::GroundTruthScore => "GT",
        PromptCondition::PredictedScore => "predicted",
        PromptCondition::NoScore => "-",
    }
}

fn notes(out: &mut String, labels: impl Iterator<Item = (String, CorrelationCell)>) {
    let mut first = true;
    for (label, cell) in labels {
        if let (None, Some(note)) = (cell.value, &cell.note) {
            if first {
                out.push_str("\nAbsent cells:\n\n");
                first = false;
            }
            let _ = writeln!(out, "- {label}: {note} (n = {}, dropped = {})", cell.n, cell.dropped);
        }
    }
}

pub fn correlation_csv(r: &CorrelationReport) -> String {
    let mut out = String::from("score");
    for c in &r.column_labels {
        out.push(',');
        out.push_str(&csv_escape(c));
    }
    out.push('\n');
    for (label, row) in r.row_labels.iter().zip(&r.cells) {
        out.push_str(&csv_escape(label));
        for cell in row {
            out.push(',');
            out.push_str(&csv_value(cell.value));
        }
        out.push('\n');
    }
    out
}

pub fn correlation_markdown(r: &CorrelationReport) -> String {
    let mut out = format!(
        "# Aspect × feature Spearman correlations (prompt holistic score: {})\n\nBold: two highest aspect correlations per feature column. `holistic` is the ground-truth holistic score.\n\n",
        condition_label(r.condition)
    );
    let _ = writeln!(out, "| score | {} |", r.column_labels.join(" | "));
    let _ = writeln!(out, "|---|{}", "---:|".repeat(r.column_labels.len()));
    for (i, (label, row)) in r.row_labels.iter().zip(&r.cells).enumerate() {
        let cells: Vec<String> = row.iter().zip(&r.bold[i]).map(|(c, &b)| md_value(c, b)).collect();
        let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
    }
    notes(
        &mut out,
        r.row_labels.iter().zip(&r.cells).flat_map(|(rl, row)| {
            r.column_labels
                .iter()
                .zip(row)
                .map(move |(cl, cell)| (format!("{rl} × {cl}"), cell.clone()))
        }),
    );
    out
}

const REFERENCES: [&str; 2] = ["GT", "predicted"];

pub fn reconstruction_csv(g: &ReconstructionGrid) -> String {
    let mut out = String::from("prompt_score,GT,predicted\n");
    for (c, cells) in g.conditions.iter().zip(&g.cells) {
        let _ = writeln!(
            out,
            "{},{},{}",
            c.as_str(),
            csv_value(cells[0].value),
            csv_value(cells[1].value)
        );
    }
    out
}

pub fn reconstruction_markdown(g: &ReconstructionGrid) -> String {
    let mut out = String::from(
        "# Holistic reconstruction\n\nSpearman correlation between the mean of the nine aspect bands and each holistic reference.\n\n| prompt holistic score | GT | predicted |\n|---|---:|---:|\n",
    );
    for (c, cells) in g.conditions.iter().zip(&g.cells) {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            condition_label(*c),
            md_value(&cells[0], false),
            md_value(&cells[1], false)
        );
    }
    notes(
        &mut out,
        g.conditions.iter().zip(&g.cells).flat_map(|(c, cells)| {
            REFERENCES
                .iter()
                .zip(cells.iter())
                .map(move |(r, cell)| (format!("{} × {r}", condition_label(*c)), cell.clone()))
        }),
    );
    out
}

pub fn friedman_json(
    condition: PromptCondition,
    groups: &[AspectId],
    n: usize,
    result: Result<&FriedmanResult, String>,
) -> String {
    let value = match result {
        Ok(r) => serde_json::json!({
            "condition": condition.as_str(),
            "groups": groups.iter().map(|a| a.key()).collect::<Vec<_>>(),
            "essays": n,
            "statistic": r.statistic,
            "dof": r.dof,
            "p_value": r.p_value,
            "significant": r.p_value < SIGNIFICANCE,
            "mean_ranks": groups
                .iter()
                .zip(&r.mean_ranks)
                .map(|(a, m)| serde_json::json!({"group": a.key(), "mean_rank": m}))
                .collect::<Vec<_>>(),
        }),
        Err(e) => serde_json::json!({
            "condition": condition.as_str(),
            "essays": n,
            "error": e,
        }),
    };
    serde_json::to_string_pretty(&value).expect("serializable") + "\n"
}

pub fn nemenyi_csv(labels: &[&str], r: &NemenyiResult) -> String {
    let mut out = String::new();
    for l in labels {
        out.push(',');
        out.push_str(&csv_escape(l));
    }
    out.push('\n');
    for (l, row) in labels.iter().zip(&r.p_values) {
        out.push_str(&csv_escape(l));
        for p in row {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}

fn shade(p: f64) -> String {
    // p = 0 → dark red, p = 1 → near white
    let t = p.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(178.0, 247.0),
        lerp(24.0, 247.0),
        lerp(43.0, 247.0)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Heatmap of pairwise p-values; cells below the significance level are
/// outlined.
pub fn nemenyi_svg(labels: &[&str], r: &NemenyiResult, title: &str) -> String {
    let k = labels.len();
    let cell = 56.0;
    let left = 100.0;
    let top = 110.0;
    let size = left + cell * k as f64 + 20.0;
    let height = top + cell * k as f64 + 50.0;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{height}\" viewBox=\"0 0 {size} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    let _ = writeln!(out, "<title>{}</title>", xml_escape(title));
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{left}\" y=\"18\" font-size=\"13\">{}</text>",
        xml_escape(title)
    );
    for (i, l) in labels.iter().enumerate() {
        let y = top + cell * (i as f64 + 0.5) + 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            xml_escape(l)
        );
        let x = left + cell * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            "<text x=\"{x}\" y=\"{}\" transform=\"rotate(-45 {x} {})\">{}</text>",
            top - 8.0,
            top - 8.0,
            xml_escape(l)
        );
    }
    for (i, row) in r.p_values.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            let x = left + cell * j as f64;
            let y = top + cell * i as f64;
            let _ = writeln!(
                out,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\" stroke=\"#999999\" stroke-width=\"0.5\"/>",
                shade(p)
            );
            let text = if p < 0.001 {
                "<.001".to_string()
            } else {
                format!("{p:.3}")
            };
            let colour = if p < 0.5 { "white" } else { "black" };
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{colour}\">{}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                xml_escape(&text)
            );
        }
    }
    for (i, row) in r.p_values.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p < SIGNIFICANCE {
                let _ = writeln!(
                    out,
                    "<rect class=\"significant\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2.5\"/>",
                    left + cell * j as f64 + 1.25,
                    top + cell * i as f64 + 1.25,
                    cell - 2.5,
                    cell - 2.5
                );
            }
        }
    }
    let _ = writeln!(
        out,
        "<text x=\"{left}\" y=\"{}\">Cell shade: Nemenyi p-value (dark = small). Outlined: p &lt; {SIGNIFICANCE}.</text>",
        top + cell * k as f64 + 30.0
    );
    out.push_str("</svg>\n");
    out
}

/// Essays whose aspect bands span at least `gap`, in table order.
pub fn discrepancies(table: &AnalyticScoreTable, gap: u8) -> Vec<&EssayScores> {
    table
        .rows
        .iter()
        .filter(|r| r.spread().is_some_and(|s| s >= gap))
        .collect()
}

pub fn discrepancies_markdown(table: &AnalyticScoreTable, gap: u8, holistic: &HashMap<String, f64>) -> String {
    let rows = discrepancies(table, gap);
    let mut out = format!(
        "# Aspect-score discrepancies (prompt holistic score: {})\n\nEssays whose nine aspect bands span at least {gap} levels: {} of {}.\n",
        condition_label(table.condition),
        rows.len(),
        table.rows.len()
    );
    for r in rows {
        let _ = write!(out, "\n## {}\n\n", r.id);
        if let Some(h) = holistic.get(&r.id) {
            let _ = writeln!(out, "holistic score: {h}\n");
        }
        for g in &r.grades {
            let _ = writeln!(out, "- {}: {}", g.aspect.name(), g.level.numeric());
        }
        if let Ok(mean) = r.mean() {
            let _ = writeln!(out, "\nmean of aspect scores: {mean:.3}");
        }
    }
    out
}

pub fn discrepancies_csv(table: &AnalyticScoreTable, gap: u8) -> String {
    let mut out = String::from("id,min,max,spread");
    for a in AspectId::ALL {
        out.push(',');
        out.push_str(a.key());
    }
    out.push('\n');
    for r in discrepancies(table, gap) {
        let values: Vec<u8> = r.grades.iter().map(|g| g.level.numeric()).collect();
        let _ = write!(
            out,
            "{},{},{},{}",
            csv_escape(&r.id),
            values.iter().min().expect("non-empty"),
            values.iter().max().expect("non-empty"),
            r.spread().expect("non-empty")
        );
        for a in AspectId::ALL {
            out.push(',');
            if let Some(l) = r.level(a) {
                out.push_str(&l.numeric().to_string());
            }
        }
        out.push('\n');
    }
    out
}
