//! CSV tables, JSON documents and SVG figures.  Every artifact carries the
//! configuration that produced it.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::consistency::ConvergenceFit;
use crate::continuation::{BifurcationKind, Branch, Stability};
use crate::models::{SubgridSnapshot, Trajectory};

pub type ExportResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

/// A JSON document with the producing configuration attached.
#[derive(Serialize)]
pub struct Artifact<'a, T: Serialize> {
    pub config: &'a Value,
    pub warnings: &'a [String],
    pub data: &'a T,
}

pub fn write_json<T: Serialize>(w: impl Write, config: &Value, warnings: &[String], data: &T) -> ExportResult<()> {
    serde_json::to_writer_pretty(
        w,
        &Artifact {
            config,
            warnings,
            data,
        },
    )?;
    Ok(())
}

fn header(w: &mut impl Write, config: &Value) -> ExportResult<()> {
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    Ok(())
}

/// `t, u_0, u_1, ...` with one row per stored state.
pub fn write_trajectory_csv(mut w: impl Write, config: &Value, traj: &Trajectory) -> ExportResult<()> {
    header(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    let n = traj.states.first().map_or(0, |s| s.values().len());
    let mut head = vec!["t".to_string()];
    head.extend((0..n).map(|k| format!("u{k}")));
    out.write_record(&head)?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![t.to_string()];
        row.extend(s.values().iter().map(|v| v.to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per branch point and per detected bifurcation.
pub fn write_branches_csv(mut w: impl Write, config: &Value, branches: &[Branch]) -> ExportResult<()> {
    header(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["branch", "row", "alpha", "rms", "stability", "unstable_count"])?;
    for b in branches {
        for p in &b.points {
            out.write_record([
                b.label.clone(),
                "point".into(),
                p.alpha.to_string(),
                p.norm.to_string(),
                stability_name(p.stability).into(),
                p.unstable.to_string(),
            ])?;
        }
        for f in &b.bifurcations {
            out.write_record([
                b.label.clone(),
                match f.kind {
                    BifurcationKind::BranchPoint => "branch_point".into(),
                    BifurcationKind::Fold => "fold".into(),
                },
                f.alpha.to_string(),
                f.u.rms().to_string(),
                String::new(),
                String::new(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Marginal => "marginal",
    }
}

/// `model, m, h, error, projection, misfit`.
pub fn write_consistency_csv(mut w: impl Write, config: &Value, fits: &[(String, ConvergenceFit)]) -> ExportResult<()> {
    header(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "m", "h", "error", "projection", "misfit"])?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for (label, fit) in fits {
        for s in &fit.samples {
            out.write_record([
                label.clone(),
                s.m.to_string(),
                s.h.to_string(),
                s.error.to_string(),
                opt(s.projection),
                opt(s.misfit),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Generic table with a config header.
pub fn write_table_csv(mut w: impl Write, config: &Value, head: &[&str], rows: &[Vec<String>]) -> ExportResult<()> {
    header(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(head)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 60.0;

fn svg_open(s: &mut String, config: &Value, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", escape(&config.to_string()));
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Affine or logarithmic map from data to pixels.
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(mut lo: f64, mut hi: f64, log: bool, p0: f64, p1: f64) -> Axis {
        if log {
            lo = lo.log10().floor();
            hi = hi.log10().ceil();
        }
        if !(hi > lo) {
            hi = lo + 1.0;
        }
        Axis { lo, hi, log, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            (self.lo as i32..=self.hi as i32)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            (0..=5)
                .map(|k| {
                    let v = self.lo + (self.hi - self.lo) * k as f64 / 5.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

fn axes(s: &mut String, x: &Axis, y: &Axis, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    for (v, label) in x.ticks() {
        let px = x.map(v);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">{label}</text>"#,
            H - M,
            H - M + 5.0,
            H - M + 18.0
        );
    }
    for (v, label) in y.ticks() {
        let py = y.map(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{py:.1}" x2="{M}" y2="{py:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{label}</text>"#,
            M - 5.0,
            M - 7.0,
            py + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Branch norms against `alpha`; stable segments solid blue, unstable dashed
/// red, bifurcations as squares.
pub fn svg_bifurcation(config: &Value, title: &str, branches: &[Branch]) -> String {
    let mut s = String::new();
    svg_open(&mut s, config, title);
    let pts = branches.iter().flat_map(|b| &b.points);
    let (amin, amax, nmax) = pts.fold((f64::INFINITY, f64::NEG_INFINITY, 0.0f64), |(a, b, c), p| {
        (a.min(p.alpha), b.max(p.alpha), c.max(p.norm))
    });
    let x = Axis::new(amin.min(0.0), amax, false, M, W - M);
    let y = Axis::new(0.0, nmax.max(1e-3) * 1.05, false, H - M, M);
    axes(&mut s, &x, &y, "alpha", "rms(u)");
    for b in branches {
        for w in b.points.windows(2) {
            let stable = w[0].stability != Stability::Unstable && w[1].stability != Stability::Unstable;
            let style = if stable {
                r##"stroke="#1f77b4" stroke-width="2""##
            } else {
                r##"stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4""##
            };
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" {style}/>"#,
                x.map(w[0].alpha),
                y.map(w[0].norm),
                x.map(w[1].alpha),
                y.map(w[1].norm)
            );
        }
        for f in &b.bifurcations {
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="8" height="8" fill="black"><title>alpha = {:.4}</title></rect>"#,
                x.map(f.alpha) - 4.0,
                y.map(f.u.rms()) - 4.0,
                f.alpha
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Log-log error curves, one per labelled series of `(h, error)`.
pub fn svg_loglog(config: &Value, title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut s = String::new();
    svg_open(&mut s, config, title);
    let all = series.iter().flat_map(|(_, p)| p).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let (hmin, hmax, emin, emax) = all.fold(
        (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64),
        |(a, b, c, d), &(h, e)| (a.min(h), b.max(h), c.min(e), d.max(e)),
    );
    let x = Axis::new(hmin, hmax, true, M, W - M);
    let y = Axis::new(emin, emax, true, H - M, M);
    axes(&mut s, &x, &y, "h", "max error");
    for (k, (label, pts)) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|&(h, e)| format!("{:.1},{:.1}", x.map(h), y.map(e)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for p in &path {
            let (px, py) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{px}" cy="{py}" r="3" fill="{colour}"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            M + 10.0,
            M + 16.0 * (k + 1) as f64,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn colour_map(t: f64) -> String {
    // blue - white - red
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t < 0.0 {
        (1.0 + t, 1.0 + t, 1.0)
    } else {
        (1.0, 1.0 - t, 1.0 - t)
    };
    format!("rgb({},{},{})", (255.0 * r) as u8, (255.0 * g) as u8, (255.0 * b) as u8)
}

/// Heat map of a subgrid snapshot: each element drawn over its own cell
/// `|x - x_i| <= h/2`, so jumps between elements show at the cell borders.
pub fn svg_subgrid(config: &Value, title: &str, snap: &SubgridSnapshot) -> String {
    let mut s = String::new();
    svg_open(&mut s, config, title);
    let (nx, ny) = snap.grid.stored_shape();
    let n = snap.n as i32;
    let half = n / 2;
    let cells_per = (2 * half + 1) as f64;
    let size = ((W - 2.0 * M) / nx as f64).min((H - 2.0 * M) / ny as f64);
    let cell = size / cells_per;
    let vmax = snap
        .elements
        .iter()
        .flatten()
        .filter(|v| v.is_finite())
        .fold(1e-12f64, |m, v| m.max(v.abs()));
    for q in 0..ny {
        for p in 0..nx {
            let e = q * nx + p;
            let x0 = M + p as f64 * size;
            let y0 = H - M - (q + 1) as f64 * size;
            for l in -half..=half {
                for k in -half..=half {
                    let v = snap.node(e, k, l);
                    if !v.is_finite() {
                        continue;
                    }
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                        x0 + (k + half) as f64 * cell,
                        y0 + (half - l) as f64 * cell,
                        cell + 0.3,
                        cell + 0.3,
                        colour_map(v / vmax)
                    );
                }
            }
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{size:.2}" height="{size:.2}" fill="none" stroke="black" stroke-width="0.5"/>"#
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">max interelement jump {:.3e}, colour range +-{:.3}</text>"#,
        W / 2.0,
        H - 15.0,
        snap.max_jump,
        vmax
    );
    s.push_str("</svg>\n");
    s
}
