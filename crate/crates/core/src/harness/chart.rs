use std::fmt::Write as _;

use super::ResultTable;
use crate::fairness::{fairness_score, FairnessWeights};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#ffbf00", "#2ca02c", "#9467bd", "#8c564b"];
const BAR_WIDTH: f64 = 28.0;
const BAR_GAP: f64 = 4.0;
const GROUP_GAP: f64 = 36.0;
const PLOT_HEIGHT: f64 = 240.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 60.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Grouped bar chart of FS per training composition and model, as a
/// standalone SVG document.
///
/// Scores are recomputed from each row's group rates for `weights`. The
/// zero line sits at the top of the plot and bars extend downward with
/// length proportional to |FS|.
pub fn emit_fs_chart(table: &ResultTable, weights: FairnessWeights) -> String {
    let row_labels: Vec<String> = table.rows.iter().map(|r| r.composition.short_label()).collect();
    let compositions = first_appearance(row_labels.iter().map(String::as_str));
    let models = first_appearance(table.rows.iter().map(|r| r.model_label.as_str()));
    let bars: Vec<(usize, usize, f64)> = table
        .rows
        .iter()
        .zip(&row_labels)
        .map(|(r, label)| {
            let c = compositions.iter().position(|x| x == label).unwrap_or(0);
            let m = models.iter().position(|&x| x == r.model_label).unwrap_or(0);
            let fs = fairness_score(r.w_normal, r.w_clp, weights).map_or(f64::NAN, |f| f.score);
            (c, m, fs)
        })
        .collect();
    let max_abs = bars
        .iter()
        .map(|b| b.2.abs())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);

    let group_width = models.len().max(1) as f64 * (BAR_WIDTH + BAR_GAP) - BAR_GAP;
    let plot_width = compositions.len() as f64 * (group_width + GROUP_GAP) + GROUP_GAP;
    let width = LEFT + plot_width + 150.0;
    let height = TOP + PLOT_HEIGHT + 70.0;
    let scale = if max_abs > 0.0 { PLOT_HEIGHT / max_abs } else { 0.0 };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">Fairness score (α={}, β={})</text>"#,
        LEFT + plot_width / 2.0,
        weights.alpha(),
        weights.beta()
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="black"/>"#,
        TOP + PLOT_HEIGHT
    );
    let _ = writeln!(
        svg,
        r#"<line class="zero" x1="{LEFT:.1}" y1="{TOP:.1}" x2="{:.1}" y2="{TOP:.1}" stroke="black"/>"#,
        LEFT + plot_width
    );
    for t in 0..=TICKS {
        let frac = t as f64 / TICKS as f64;
        let y = TOP + frac * PLOT_HEIGHT;
        let value = crate::round2(-frac * max_abs);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{value:.1}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="18" y="{:.1}" transform="rotate(-90 18 {:.1})" text-anchor="middle">FS</text>"#,
        TOP + PLOT_HEIGHT / 2.0,
        TOP + PLOT_HEIGHT / 2.0
    );

    for (c, m, fs) in &bars {
        let x = LEFT + GROUP_GAP + *c as f64 * (group_width + GROUP_GAP) + *m as f64 * (BAR_WIDTH + BAR_GAP);
        let h = if fs.is_finite() { fs.abs() * scale } else { 0.0 };
        let _ = writeln!(
            svg,
            r#"<rect class="bar" data-model="{}" data-composition="{}" data-fs="{:.2}" x="{x:.2}" y="{TOP:.2}" width="{BAR_WIDTH:.2}" height="{h:.4}" fill="{}"/>"#,
            escape(models[*m]),
            escape(compositions[*c]),
            crate::round2(*fs),
            PALETTE[*m % PALETTE.len()]
        );
    }
    for (c, label) in compositions.iter().enumerate() {
        let x = LEFT + GROUP_GAP + c as f64 * (group_width + GROUP_GAP) + group_width / 2.0;
        let _ = writeln!(
            svg,
            r#"<text class="group-label" x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + PLOT_HEIGHT + 20.0,
            escape(label)
        );
    }
    for (m, label) in models.iter().enumerate() {
        let y = TOP + 10.0 + m as f64 * 20.0;
        let x = LEFT + plot_width + 20.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 10.0,
            PALETTE[m % PALETTE.len()],
            x + 18.0,
            y,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ResultRow;
    use crate::manifest::Composition;

    fn bar_heights(svg: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.contains(r#"class="bar""#))
            .map(|l| {
                let start = l.find("height=\"").unwrap() + 8;
                let end = start + l[start..].find('"').unwrap();
                l[start..end].parse().unwrap()
            })
            .collect()
    }

    fn row(comp: &str, model: &str, w_n: f64, w_c: f64) -> ResultRow {
        ResultRow::from_rates("p", model, comp.parse().unwrap(), w_n, w_c, &[FairnessWeights::BALANCED]).unwrap()
    }

    #[test]
    fn single_row_single_bar() {
        let svg = emit_fs_chart(&ResultTable::new(vec![row("Normal", "GMM-HMM", 2.39, 42.89)]), FairnessWeights::BALANCED);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(bar_heights(&svg), vec![PLOT_HEIGHT]);
        assert!(svg.contains(r#"data-fs="-31.57""#));
        assert!(svg.contains(">FS</text>"));
    }

    #[test]
    fn bar_lengths_are_linear() {
        // FS = -(avg + disp)/2: (20, 60) gives -40, (10, 30) gives -20
        let t = ResultTable::new(vec![row("Normal", "A", 20.0, 60.0), row("Mild+Normal", "A", 10.0, 30.0)]);
        let h = bar_heights(&emit_fs_chart(&t, FairnessWeights::BALANCED));
        assert!((h[0] / h[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn five_composition_groups_in_order() {
        let labels = ["Normal", "CLP", "Mild+Normal", "Mild+Moderate+Normal", "Mild+Moderate+Severe+Normal"];
        let rows = labels.iter().map(|l| row(l, "GMM-HMM", 2.0, 30.0)).collect();
        let svg = emit_fs_chart(&ResultTable::new(rows), FairnessWeights::BALANCED);
        let groups: Vec<&str> = svg
            .lines()
            .filter(|l| l.contains("group-label"))
            .map(|l| &l[l.find('>').unwrap() + 1..l.rfind('<').unwrap()])
            .collect();
        assert_eq!(groups, ["No", "CLP", "Mi+No", "Mi+Mo+No", "Mi+Mo+Se+No"]);
        assert_eq!(Composition::all().short_label(), "Mi+Mo+Se+No");
    }

    #[test]
    fn deterministic_and_escaped() {
        let t = ResultTable::new(vec![row("Normal", "A<B", 1.0, 2.0)]);
        let a = emit_fs_chart(&t, FairnessWeights::BALANCED);
        assert_eq!(a, emit_fs_chart(&t, FairnessWeights::BALANCED));
        assert!(a.contains("A&lt;B"));
    }
}
