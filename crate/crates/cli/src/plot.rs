//! SVG figures from run artifacts. Coordinates are printed with fixed
//! precision so identical artifacts give identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::artifacts;
use crate::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let (ml, mr, mt, mb) = MARGIN;
    let (x0, x1) = (ml, WIDTH - mr);
    let (y0, y1) = (top + HEIGHT - mb, top + mt);
    let ty = |y: f64| if panel.log_y { y.log10() } else { y };
    let usable = |p: &&(f64, f64)| p.0.is_finite() && ty(p.1).is_finite();
    let all = || panel.series.iter().flat_map(|s| s.points.iter()).filter(usable);
    let Some((xa, xb)) = bounds(all().map(|p| p.0)) else {
        return;
    };
    let Some((ya, yb)) = bounds(all().map(|p| ty(p.1))) else {
        return;
    };
    let sx = |x: f64| x0 + (x - xa) / (xb - xa) * (x1 - x0);
    let sy = |y: f64| y0 + (y - ya) / (yb - ya) * (y1 - y0);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        top + 22.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="dimgray"/>"#,
        x1 - x0,
        y0 - y1
    );
    for k in 0..=4 {
        let fx = xa + (xb - xa) * k as f64 / 4.0;
        let fy = ya + (yb - ya) * k as f64 / 4.0;
        let ylab = if panel.log_y { format!("1e{fy:.2}") } else { format!("{fy:.3e}") };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{fx:.3e}</text>"#,
            sx(fx),
            y0 + 14.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{ylab}</text>"#,
            x0 - 4.0,
            sy(fy) + 3.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        y0 + 34.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&panel.y_label)
    );
    for (k, s) in panel.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(usable)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(ty(y))))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let dash = if s.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" fill="{color}">{}</text>"#,
            x0 + 8.0,
            y1 + 14.0 + 12.0 * k as f64,
            escape(&s.label)
        );
    }
}

/// Stack panels vertically into one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let total = HEIGHT * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{total:.0}" viewBox="0 0 {WIDTH:.0} {total:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, HEIGHT * k as f64);
    }
    out.push_str("</svg>\n");
    out
}

/// Parsed trajectory CSV: column names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Csv {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Config("empty trajectory".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("trajectory row {}: {e}", k + 1)))?;
            if row.len() != header.len() {
                return Err(CliError::Config(format!("trajectory row {} has {} cells", k + 1, row.len())));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CliError::Config("trajectory has no samples".into()));
        }
        Ok(Csv { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

fn read_value(path: &Path) -> Result<Option<Value>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    artifacts::read_json_value(path).map(Some)
}

fn trajectory_panels(csv: &Csv, meta: Option<&Value>, blowup: Option<&Value>) -> Result<Vec<Panel>, CliError> {
    let t = csv.column("t").ok_or_else(|| CliError::Config("trajectory lacks a t column".into()))?;
    if let Some(i) = csv.column("I") {
        let sigma = meta
            .and_then(|m| m.pointer("/config/params/sigma"))
            .and_then(Value::as_f64)
            .unwrap_or(1.0);
        let limit = blowup.and_then(|b| b.get("T_num")).and_then(Value::as_f64);
        let y: Vec<(f64, f64)> = t
            .iter()
            .zip(&i)
            .filter(|(tt, _)| limit.is_none_or(|l| **tt < l))
            .map(|(&tt, &ii)| (tt, ii.powf(-0.5 * sigma)))
            .collect();
        let mut series = vec![Series {
            label: format!("I(t)^(-{sigma}/2)"),
            points: y.clone(),
            dashed: false,
        }];
        if let Some(b) = blowup {
            let t1 = b.get("t1").and_then(Value::as_f64);
            let i1 = b.get("I_t1").and_then(Value::as_f64);
            let d1 = b.get("Iprime_t1").and_then(Value::as_f64);
            let tp = b.get("T_pred").and_then(Value::as_f64);
            if let (Some(t1), Some(i1), Some(d1), Some(tp)) = (t1, i1, d1, tp) {
                let y1 = i1.powf(-0.5 * sigma);
                let slope = -0.5 * sigma * i1.powf(-0.5 * sigma - 1.0) * d1;
                series.push(Series {
                    label: "tangent at t1 (zero at T_pred)".into(),
                    points: vec![(t1, y1), (tp, y1 + slope * (tp - t1))],
                    dashed: true,
                });
            }
        }
        let mut panels = vec![Panel {
            title: "blow-up functional".into(),
            x_label: "t".into(),
            y_label: "I^(-sigma/2)".into(),
            log_y: false,
            series,
        }];
        if let Some(e) = csv.column("energy") {
            panels.push(Panel {
                title: "energy".into(),
                x_label: "t".into(),
                y_label: "E".into(),
                log_y: false,
                series: vec![Series {
                    label: "E(t)".into(),
                    points: t.iter().copied().zip(e).collect(),
                    dashed: false,
                }],
            });
        }
        return Ok(panels);
    }
    let mut series = Vec::new();
    for name in &csv.header {
        for (prefix, dashed) in [("norm_", false), ("pair_norm_", false), ("bound_", true)] {
            if let Some(p) = name.strip_prefix(prefix) {
                if prefix == "norm_" && name.starts_with("pair_") {
                    continue;
                }
                let values = csv.column(name).expect("header entry");
                series.push(Series {
                    label: format!("{} {p}", prefix.trim_end_matches('_')),
                    points: t.iter().copied().zip(values).collect(),
                    dashed,
                });
            }
        }
    }
    if series.is_empty() {
        return Err(CliError::Config("trajectory has no norm columns to plot".into()));
    }
    Ok(vec![Panel {
        title: "l^p norms with bound envelopes".into(),
        x_label: "t".into(),
        y_label: "norm".into(),
        log_y: true,
        series,
    }])
}

fn kernel_panels(summary: &Value) -> Vec<Panel> {
    let mut panels = Vec::new();
    let empty = Vec::new();
    for sweep in summary.get("sweeps").and_then(Value::as_array).unwrap_or(&empty) {
        let d = sweep.get("d").and_then(Value::as_u64).unwrap_or(0);
        let records = sweep.get("records").and_then(Value::as_array).unwrap_or(&empty);
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| Some((r.get("h")?.as_f64()?.ln().abs(), r.get("l1_norm")?.as_f64()?)))
            .collect();
        let alpha = summary.get("alpha").and_then(Value::as_f64).unwrap_or(1.0);
        let c = sweep.pointer("/report/fitted_constant").and_then(Value::as_f64).unwrap_or(f64::NAN);
        let envelope: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(x, _)| (x, c * (1.0 + x).powf(d as f64 * alpha)))
            .collect();
        panels.push(Panel {
            title: format!("kernel l1 norm, d = {d}"),
            x_label: "|ln h|".into(),
            y_label: "||b||_1".into(),
            log_y: false,
            series: vec![
                Series {
                    label: "||b(h)||_1".into(),
                    points: pts,
                    dashed: false,
                },
                Series {
                    label: "C (1 + |ln h|)^(d alpha)".into(),
                    points: envelope,
                    dashed: true,
                },
            ],
        });
    }
    panels
}

fn growth_panels(summary: &Value) -> Vec<Panel> {
    let empty = Vec::new();
    let rows = summary.get("rows").and_then(Value::as_array).unwrap_or(&empty);
    let mut ps: Vec<String> = Vec::new();
    for r in rows {
        let p = r.get("p").map(|v| v.to_string()).unwrap_or_default();
        if !ps.contains(&p) {
            ps.push(p);
        }
    }
    ps.iter()
        .map(|p| {
            let mut keys: Vec<(String, u64)> = Vec::new();
            for r in rows.iter().filter(|r| r.get("p").map(|v| v.to_string()).as_ref() == Some(p)) {
                let key = (
                    r.get("flow").and_then(Value::as_str).unwrap_or("").to_string(),
                    r.get("d").and_then(Value::as_u64).unwrap_or(0),
                );
                if !keys.contains(&key) {
                    keys.push(key);
                }
            }
            let series = keys
                .iter()
                .map(|(flow, d)| Series {
                    label: format!("{flow}, d = {d}"),
                    points: rows
                        .iter()
                        .filter(|r| {
                            r.get("p").map(|v| v.to_string()).as_ref() == Some(p)
                                && r.get("flow").and_then(Value::as_str) == Some(flow)
                                && r.get("d").and_then(Value::as_u64) == Some(*d)
                        })
                        .filter_map(|r| Some((r.get("h")?.as_f64()?, r.get("worst_ratio")?.as_f64()?)))
                        .collect(),
                    dashed: false,
                })
                .collect();
            Panel {
                title: format!("worst achieved/bound ratio, p = {}", p.trim_matches('"')),
                x_label: "h".into(),
                y_label: "ratio".into(),
                log_y: false,
                series,
            }
        })
        .collect()
}

/// Render every figure that the artifacts in `input` support into `out`;
/// returns the files written.
pub fn emit_plots(input: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !input.is_dir() {
        return Err(CliError::Io(format!("{} is not an artifact directory", input.display())));
    }
    let meta = read_value(&input.join(artifacts::METADATA_FILE))?;
    let mut written = Vec::new();
    artifacts::ensure_dir(out)?;
    let traj = input.join(artifacts::TRAJECTORY_FILE);
    if traj.exists() {
        let text = std::fs::read_to_string(&traj).map_err(|e| CliError::Io(format!("{}: {e}", traj.display())))?;
        let csv = Csv::parse(&text)?;
        let blowup = read_value(&input.join(artifacts::BLOWUP_FILE))?;
        let panels = trajectory_panels(&csv, meta.as_ref(), blowup.as_ref())?;
        let path = out.join("trajectory.svg");
        artifacts::write_text(&path, &render(&panels))?;
        written.push(path);
    }
    if let Some(summary) = read_value(&input.join(artifacts::KERNEL_FILE))? {
        let panels = kernel_panels(&summary);
        if !panels.is_empty() {
            let path = out.join("kernel_sweep.svg");
            artifacts::write_text(&path, &render(&panels))?;
            written.push(path);
        }
    }
    if let Some(summary) = read_value(&input.join(artifacts::GROWTH_FILE))? {
        let panels = growth_panels(&summary);
        if !panels.is_empty() {
            let path = out.join("growth_sweep.svg");
            artifacts::write_text(&path, &render(&panels))?;
            written.push(path);
        }
    }
    if written.is_empty() {
        return Err(CliError::Io(format!("no plottable artifacts in {}", input.display())));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trajectory_is_an_error() {
        assert!(Csv::parse("").is_err());
        assert!(Csv::parse("t,norm_p2\n").is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let panel = Panel {
            title: "x".into(),
            x_label: "t".into(),
            y_label: "y".into(),
            log_y: true,
            series: vec![Series {
                label: "a < b".into(),
                points: vec![(0.0, 1.0), (1.0, 10.0), (2.0, 0.0)],
                dashed: false,
            }],
        };
        let a = render(std::slice::from_ref(&panel));
        assert_eq!(a, render(&[panel]));
        assert!(a.contains("a &lt; b"));
        assert!(a.starts_with("<svg"));
    }
}
