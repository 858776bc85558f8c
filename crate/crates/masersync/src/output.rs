//! CSV, JSON manifest, SVG and phase-distribution outputs.
//!
//! Floats are written with 17 significant digits in exponent form, so a rerun of
//! the same configuration reproduces the CSV byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SweepConfig;
use crate::error::{CliError, CliResult};
use crate::sweep::SweepRow;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

type Extract = fn(&SweepRow) -> String;

/// Columns present for a configuration, in the fixed order.
fn columns(config: &SweepConfig) -> Vec<(&'static str, Extract)> {
    let m = config.measures;
    let solve = m.needs_solve();
    let all: [(&'static str, bool, Extract); 16] = [
        ("theta", true, |r| fmt_f64(r.point.theta)),
        ("N", true, |r| fmt_f64(r.point.n_atoms)),
        ("eps", true, |r| fmt_f64(r.point.eps)),
        ("coupling", true, |r| r.point.coupling.as_str().to_string()),
        ("n_max", solve, |r| r.n_max.map(|n| n.to_string()).unwrap_or_default()),
        ("mean_n", m.mean_n, |r| fmt_opt(r.mean_n)),
        ("fano", m.fano, |r| fmt_opt(r.fano)),
        ("S_quantum", m.s_quantum, |r| fmt_opt(r.s_quantum)),
        ("S_perturb", m.s_perturb, |r| fmt_opt(r.s_perturb)),
        ("S_semiclassical", m.s_semiclassical, |r| fmt_opt(r.s_semiclassical)),
        ("peak_location", m.s_quantum, |r| fmt_opt(r.peak_location)),
        ("mutual_info", m.mutual_info, |r| fmt_opt(r.mutual_info)),
        ("log_negativity", m.log_negativity, |r| fmt_opt(r.log_negativity)),
        ("residual", solve, |r| fmt_opt(r.residual)),
        ("wall_time_ms", config.include_wall_time, |r| fmt_f64(r.wall_time_ms)),
        ("status", m.any(), |r| if r.ok() { "ok".to_string() } else { quote(&r.errors.join("; ")) }),
    ];
    all.into_iter().filter(|c| c.1).map(|c| (c.0, c.2)).collect()
}

pub fn render_csv(rows: &[SweepRow], config: &SweepConfig) -> String {
    let cols = columns(config);
    let mut out = String::new();
    out.push_str(&cols.iter().map(|c| c.0).collect::<Vec<_>>().join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&cols.iter().map(|c| (c.1)(row)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    config: &'a SweepConfig,
    points: usize,
    failed_points: Vec<usize>,
    wall_time_ms: f64,
    point_wall_time_ms: Vec<f64>,
}

pub fn render_manifest(rows: &[SweepRow], config: &SweepConfig, wall_time_ms: f64) -> String {
    let manifest = Manifest {
        tool: "masersync",
        version: env!("CARGO_PKG_VERSION"),
        core_version: masersync_core::VERSION,
        config,
        points: rows.len(),
        failed_points: rows.iter().filter(|r| !r.ok()).map(|r| r.point.index).collect(),
        wall_time_ms,
        point_wall_time_ms: rows.iter().map(|r| r.wall_time_ms).collect(),
    };
    serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"
}

/// Writes every output named in the config and returns the paths written.
pub fn emit_outputs(rows: &[SweepRow], config: &SweepConfig, wall_time_ms: f64) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let out = &config.output;
    if let Some(path) = &out.csv {
        write(path, &render_csv(rows, config))?;
        written.push(path.clone());
    }
    if let Some(path) = &out.manifest {
        write(path, &render_manifest(rows, config, wall_time_ms))?;
        written.push(path.clone());
    }
    if let Some(dir) = &out.phase_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for row in rows {
            if let Some(dist) = &row.phase {
                let path = dir.join(format!("phase_{:05}.csv", row.point.index));
                let mut buf = Vec::new();
                dist.write_csv(&mut buf).map_err(|e| CliError::io(&path, e))?;
                write(&path, &String::from_utf8(buf).expect("ascii"))?;
                written.push(path);
            }
        }
    }
    if let Some(prefix) = &out.svg {
        for (suffix, svg) in render_plots(rows) {
            let mut name = prefix.as_os_str().to_owned();
            name.push(suffix);
            let path = PathBuf::from(name);
            write(&path, &svg)?;
            written.push(path);
        }
    }
    Ok(written)
}

type Series = BTreeMap<String, Vec<(f64, f64)>>;

/// S vs theta per (coupling, N, eps); I vs eps per (coupling, N, theta); E_N vs theta per (coupling, N, eps).
fn render_plots(rows: &[SweepRow]) -> Vec<(&'static str, String)> {
    let mut s_theta = Series::new();
    let mut mi_eps = Series::new();
    let mut en_theta = Series::new();
    for r in rows {
        let p = &r.point;
        let by_eps = format!("{} N={} eps={}", p.coupling, p.n_atoms, p.eps);
        if let Some(s) = r.s_quantum {
            s_theta.entry(format!("{by_eps} quantum")).or_default().push((p.theta, s));
        }
        if let Some(s) = r.s_semiclassical {
            s_theta.entry(format!("{by_eps} semiclassical")).or_default().push((p.theta, s));
        }
        if let Some(i) = r.mutual_info {
            let key = format!("{} N={} theta={:.3}", p.coupling, p.n_atoms, p.theta);
            mi_eps.entry(key).or_default().push((p.eps, i));
        }
        if let Some(e) = r.log_negativity {
            en_theta.entry(by_eps).or_default().push((p.theta, e));
        }
    }
    let mut out = Vec::new();
    for (suffix, series, x, y) in [
        ("_s_theta.svg", s_theta, "Theta", "S"),
        ("_mi_eps.svg", mi_eps, "eps", "I (nats)"),
        ("_en_theta.svg", en_theta, "Theta", "E_N"),
    ] {
        if series.values().any(|s| s.len() > 1) {
            out.push((suffix, line_plot(&series, x, y)));
        }
    }
    out
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Minimal static line plot.
pub fn line_plot(series: &Series, x_label: &str, y_label: &str) -> String {
    let (w, h, left, right, top, bottom) = (720.0, 440.0, 70.0, 220.0, 20.0, 50.0);
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.3}</text>"#,
            sx(fx),
            h - bottom + 16.0
        );
        let _ =
            writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.3e}</text>"#, left - 6.0, sy(fy) + 4.0);
    }
    let _ =
        writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#, left + pw / 2.0, h - 10.0);
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{y_label}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if label.ends_with("semiclassical") { r#" stroke-dasharray="5,3""# } else { "" };
        let path: Vec<String> = points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}"{dash} points="{}"/>"#, path.join(" "));
        let ly = top + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}"{dash}/>"#,
            w - right + 10.0,
            w - right + 30.0
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{label}</text>"#, w - right + 34.0, ly + 4.0);
    }
    svg.push_str("</svg>\n");
    svg
}
