//! Minimal hand-written SVG for the report plots.

use std::fmt::Write;

use super::metrics::Confusion;
use crate::selftrain::SelfTrainRun;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// 2x2 confusion heat table, rows = gold, columns = predicted.
pub fn confusion_heat(c: &Confusion, title: &str) -> String {
    let cells = [[c.tp, c.fn_], [c.fp, c.tn]];
    let max = cells.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let (x0, y0, side) = (140.0, 70.0, 110.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="400" height="340" viewBox="0 0 400 340" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<text x="200" y="24" text-anchor="middle" font-size="15">{}</text>"#, escape(title));
    let _ = writeln!(s, r#"<text x="250" y="50" text-anchor="middle" font-size="12">predicted</text>"#);
    let _ = writeln!(
        s,
        r#"<text x="40" y="180" text-anchor="middle" font-size="12" transform="rotate(-90 40 180)">gold</text>"#
    );
    let names = ["1 (suggestive)", "0"];
    for (i, name) in names.iter().enumerate() {
        let centre = x0 + side * (i as f64 + 0.5);
        let _ = writeln!(s, r#"<text x="{centre}" y="66" text-anchor="middle" font-size="11">{name}</text>"#);
        let middle = y0 + side * (i as f64 + 0.5);
        let _ = writeln!(s, r#"<text x="{}" y="{middle}" text-anchor="end" font-size="11">{name}</text>"#, x0 - 6.0);
    }
    for (r, row) in cells.iter().enumerate() {
        for (col, &count) in row.iter().enumerate() {
            let shade = count as f64 / max;
            let level = (255.0 - 200.0 * shade).round() as u8;
            let (x, y) = (x0 + side * col as f64, y0 + side * r as f64);
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{x}" y="{y}" width="{side}" height="{side}" fill="rgb({level},{level},255)" stroke="black"/>"#
            );
            let ink = if shade > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" font-size="16" fill="{ink}">{count}</text>"#,
                x + side / 2.0,
                y + side / 2.0 + 6.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Validation precision/recall/F1 per iteration; the best iteration's F1
/// point is drawn larger and labelled.
pub fn validation_curve(run: &SelfTrainRun) -> String {
    let (w, h, left, right, top, bottom) = (520.0, 320.0, 60.0, 20.0, 40.0, 50.0);
    let n = run.iterations.len();
    let series = |f: fn(&crate::eval::ClassMetrics) -> f64| -> Vec<f64> {
        run.iterations.iter().map(|r| f(&r.validation)).collect()
    };
    let lines = [
        ("precision", "#1f77b4", series(|m| m.macro_precision)),
        ("recall", "#2ca02c", series(|m| m.macro_recall)),
        ("f1", "#d62728", series(|m| m.macro_f1)),
    ];
    let all = lines.iter().flat_map(|(_, _, v)| v.iter().copied());
    let lo = all.clone().fold(f64::INFINITY, f64::min);
    let hi = all.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = ((lo - 0.02).max(0.0), (hi + 0.02).min(1.0));
    let (lo, hi) = if hi - lo < 1e-9 { (lo - 0.05, hi + 0.05) } else { (lo, hi) };
    let px = |i: usize| {
        if n <= 1 {
            left + (w - left - right) / 2.0
        } else {
            left + (w - left - right) * i as f64 / (n - 1) as f64
        }
    };
    let py = |v: f64| top + (h - top - bottom) * (hi - v) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">Validation scores during self-training</text>"#,
        w / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - bottom,
        w - right,
        h - bottom
    );
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, h - bottom);
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{v:.3}</text>"#,
            left - 6.0,
            py(v) + 3.0
        );
    }
    for (i, r) in run.iterations.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
            px(i),
            h - bottom + 16.0,
            r.iteration
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">iteration</text>"#,
        w / 2.0,
        h - 10.0
    );
    for (k, (name, colour, values)) in lines.iter().enumerate() {
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v)))
            .collect();
        let dash = if *name == "f1" { "" } else { r#" stroke-dasharray="4 3""# };
        let _ = writeln!(
            s,
            r#"<polyline class="series-{name}" fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" fill="{colour}">macro {name}</text>"#,
            w - right - 80.0,
            top + 12.0 * k as f64
        );
    }
    for (i, r) in run.iterations.iter().enumerate() {
        let (x, y) = (px(i), py(r.validation.macro_f1));
        if r.iteration == run.best_iteration {
            let _ = writeln!(
                s,
                r##"<circle class="point best" data-iteration="{}" cx="{x:.2}" cy="{y:.2}" r="6" fill="none" stroke="#d62728" stroke-width="2"/>"##,
                r.iteration
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="10">best</text>"#,
                y - 10.0
            );
        } else {
            let _ = writeln!(
                s,
                r##"<circle class="point" data-iteration="{}" cx="{x:.2}" cy="{y:.2}" r="3.5" fill="#d62728"/>"##,
                r.iteration
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
