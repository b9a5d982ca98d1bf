use std::fmt::Write as _;

use super::ResultTable;
use crate::fairness::FairnessWeights;
use crate::round2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// CSV with two-decimal columns followed by full-precision columns.
    Delimited,
    MarkdownTable,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.2}", round2(v)))
}

fn exact(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

fn fs_key(w: &FairnessWeights) -> String {
    format!("fs_a{}_b{}", w.alpha(), w.beta())
}

/// Render a table with columns Train | Model | Normal | Mild | Moderate |
/// Severe | CLP | Pooled | FS per weight pair.
pub fn emit_report(table: &ResultTable, format: ReportFormat) -> String {
    let weights = table.weight_columns();
    let rows: Vec<(Vec<String>, Vec<Option<f64>>)> = table
        .rows
        .iter()
        .map(|r| {
            let mut values = vec![
                Some(r.w_normal),
                r.w_mild,
                r.w_moderate,
                r.w_severe,
                Some(r.w_clp),
                Some(r.pooled),
            ];
            values.extend(weights.iter().map(|w| r.fs_for(*w).map(|f| f.score)));
            (vec![r.composition.label(), r.model_label.clone()], values)
        })
        .collect();

    let mut out = String::new();
    match format {
        ReportFormat::MarkdownTable => {
            let mut header: Vec<String> = ["Train", "Model", "Normal", "Mild", "Moderate", "Severe", "CLP", "Pooled"]
                .map(String::from)
                .to_vec();
            header.extend(weights.iter().map(|w| format!("FS (α={}, β={})", w.alpha(), w.beta())));
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(
                out,
                "|{}",
                header
                    .iter()
                    .enumerate()
                    .map(|(i, _)| if i < 2 { "---|" } else { "---:|" })
                    .collect::<String>()
            );
            for (labels, values) in &rows {
                let cells: Vec<String> = labels
                    .iter()
                    .cloned()
                    .chain(values.iter().map(|v| cell(*v)))
                    .collect();
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
        }
        ReportFormat::Delimited => {
            let mut names: Vec<String> = ["normal", "mild", "moderate", "severe", "clp", "pooled"]
                .map(String::from)
                .to_vec();
            names.extend(weights.iter().map(fs_key));
            let exact_names: Vec<String> = names.iter().map(|n| format!("{n}_exact")).collect();
            let _ = writeln!(
                out,
                "train,model,{},{}",
                names.join(","),
                exact_names.join(",")
            );
            let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
            for (labels, values) in &rows {
                let record: Vec<String> = labels
                    .iter()
                    .cloned()
                    .chain(values.iter().map(|v| cell(*v)))
                    .chain(values.iter().map(|v| exact(*v)))
                    .collect();
                writer.write_record(&record).expect("in-memory write");
            }
            let bytes = writer.into_inner().expect("in-memory flush");
            out.push_str(&String::from_utf8(bytes).expect("utf-8 fields"));
        }
    }
    out
}
