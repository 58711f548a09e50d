use std::fmt::Write;

use allocplan::harness::PilotReport;

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 40.0;
const BAR_W: f64 = 16.0;
const COLORS: [&str; 6] = ["#1b6ca8", "#d9822b", "#3f9142", "#a23b72", "#6c757d", "#c0392b"];

/// Bar chart with one panel per multiplier and, within each panel, a pair of
/// bars (max-group loss, population loss) per strategy.
pub fn pilot_chart(report: &PilotReport) -> String {
    let panels = report.multipliers.len().max(1);
    let width = MARGIN + panels as f64 * (PANEL_W + MARGIN);
    let height = PANEL_H + 3.0 * MARGIN;
    let top = report
        .multipliers
        .iter()
        .flat_map(|m| m.strategies.iter())
        .flat_map(|s| [s.max_group_loss.mean, s.population_loss.mean])
        .flatten()
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, m) in report.multipliers.iter().enumerate() {
        let x0 = MARGIN + i as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let base = y0 + PANEL_H;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}x (n = {})</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 10.0,
            m.multiplier,
            m.n_new
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{x0:.1}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="black"/>"#,
            x0 + PANEL_W
        );
        let slot = PANEL_W / m.strategies.len().max(1) as f64;
        for (j, s) in m.strategies.iter().enumerate() {
            let color = COLORS[j % COLORS.len()];
            let cx = x0 + (j as f64 + 0.5) * slot;
            for (k, (value, opacity)) in [(s.max_group_loss.mean, 1.0), (s.population_loss.mean, 0.5)]
                .into_iter()
                .enumerate()
            {
                let Some(v) = value else { continue };
                let h = PANEL_H * v / top;
                let x = cx - BAR_W + k as f64 * BAR_W;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{x:.1}" y="{:.1}" width="{BAR_W:.1}" height="{h:.1}" fill="{color}" fill-opacity="{opacity}"><title>{} {}: {v:.6}</title></rect>"#,
                    base - h,
                    s.name,
                    if k == 0 { "max-group" } else { "population" },
                );
            }
            let _ = writeln!(
                svg,
                r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                base + 14.0,
                s.name
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN:.1}" y="{:.1}">solid: mean max-group loss; faded: mean population loss</text>"#,
        height - 12.0
    );
    svg.push_str("</svg>\n");
    svg
}
