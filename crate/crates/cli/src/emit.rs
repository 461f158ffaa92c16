//! CSV, JSON and SVG renderings of a [`Report`].

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::scenarios::{Plot, Report};
use crate::CliError;

/// `%.15g`: fifteen significant digits, trailing zeros dropped.
pub fn format_g15(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.14e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..15).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    } else {
        trim(&format!("{x:.*}", (14 - exp) as usize))
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => "no data".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (_, Some(i)) => i.to_string(),
            _ => format_g15(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Header then one line per row; every row carries the resolved
/// configuration in `cfg_`-prefixed columns.
pub fn emit_csv(report: &Report) -> String {
    let cfg: Vec<(String, Value)> = match report.config.to_json() {
        Value::Object(m) => m.into_iter().map(|(k, v)| (format!("cfg_{k}"), v)).collect(),
        _ => vec![],
    };
    let mut out = String::new();
    let header: Vec<&str> = report
        .table
        .columns
        .iter()
        .map(String::as_str)
        .chain(cfg.iter().map(|(k, _)| k.as_str()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &report.table.rows {
        let cells: Vec<String> = row.iter().chain(cfg.iter().map(|(_, v)| v)).map(csv_cell).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn report_json(report: &Report) -> Value {
    let mut m = Map::new();
    m.insert("scenario".into(), Value::from(report.config.scenario.name()));
    m.insert("config".into(), report.config.to_json());
    m.insert("result".into(), report.result.clone());
    Value::Object(m)
}

pub fn emit_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(&report_json(report)).expect("JSON values serialize");
    s.push('\n');
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: [f64; 4] = [60.0, 170.0, 50.0, 70.0];
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn short(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e4) {
        format!("{x:.1e}")
    } else {
        format!("{:.3}", x)
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

/// Line plot with markers; only finite points are drawn.
pub fn emit_svg(report: &Report) -> Result<String, CliError> {
    let plot: &Plot = report.plot.as_ref().ok_or_else(|| {
        CliError::Usage(format!(
            "svg output is available for sweep, decoherence and resolution, not {}",
            report.config.scenario
        ))
    })?;
    let tx = |x: f64| if plot.log_x { x.log10() } else { x };
    let pts: Vec<(f64, f64)> = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(x, y)| (tx(x), y)))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let range = |vals: Vec<f64>| -> (f64, f64) {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match (lo.is_finite(), hi > lo) {
            (false, _) => (0.0, 1.0),
            (true, false) => (lo - 0.5, lo + 0.5),
            (true, true) => (lo, hi),
        }
    };
    let (x0, x1) = range(pts.iter().map(|p| p.0).collect());
    let (y0, y1) = range(pts.iter().map(|p| p.1).collect());
    let [top, right, bottom, left] = MARGIN;
    let (pw, ph) = (WIDTH - left - right, HEIGHT - top - bottom);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>{}</title>", xml_escape(&plot.title));
    let cfg = serde_json::to_string(&report.config.to_json()).expect("JSON values serialize");
    let _ = writeln!(s, "<desc>{} {}</desc>", report.config.scenario, xml_escape(&cfg));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let xl = if plot.log_x {
            format!("1e{}", short(xv))
        } else {
            short(xv)
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            top + ph + 18.0,
            xml_escape(&xl)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            xml_escape(&short(yv))
        );
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#ddd"/>"##,
            sy(yv),
            left + pw
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        HEIGHT - 18.0,
        xml_escape(&if plot.log_x {
            format!("{} (log10)", plot.x_label)
        } else {
            plot.x_label.clone()
        })
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        xml_escape(&plot.y_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="30" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        xml_escape(&plot.title)
    );
    for (i, series) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| (tx(x), y))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#);
        }
        let ly = top + 12.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            xml_escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(format_g15(864.0), "864");
        assert_eq!(format_g15(0.5), "0.5");
        assert_eq!(format_g15(2e-8), "2e-08");
        assert_eq!(format_g15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_g15(123456.789), "123456.789");
        assert_eq!(format_g15(1e15), "1e+15");
        assert_eq!(format_g15(-0.000125), "-0.000125");
        assert_eq!(format_g15(0.0), "0");
        assert_eq!(format_g15(0.1 + 0.2), "0.3");
    }

    #[test]
    fn csv_cells() {
        assert_eq!(csv_cell(&Value::Null), "no data");
        assert_eq!(csv_cell(&Value::from(3u64)), "3");
        assert_eq!(csv_cell(&Value::from("a,b")), "\"a,b\"");
        assert_eq!(csv_cell(&Value::from(true)), "true");
    }
}
