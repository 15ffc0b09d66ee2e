//! Serialization and the thin SVG renderer.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use coulomb_core::stability::{RayOutcome, StabilityDiagram, VerdictState};
use serde::Serialize;

/// RFC 4180 quoting for a single field.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, body: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, body),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()
        }
    }
}

const W: f64 = 480.0;
const PAD: f64 = 48.0;

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if !(lo.is_finite() && hi.is_finite()) {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let m = 0.05 * (hi - lo);
                (lo - m, hi + m)
            }
        };
        Self { x: span(&mut xs.clone()), y: span(&mut ys.clone()) }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        W - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (W - 2.0 * PAD)
    }

    fn frame(&self, out: &mut String, title: &str) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{W}" viewBox="0 0 {W} {W}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{W}" height="{W}" fill="white"/>"#);
        let (l, r, t, b) = (PAD, W - PAD, PAD, W - PAD);
        let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{title}</text>"#, W / 2.0, PAD / 2.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">q1</text>"#, W / 2.0, W - 12.0);
        let _ = writeln!(out, r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">q2</text>"#, W / 2.0, W / 2.0);
        for (v, anchor_x, anchor_y) in [(self.x.0, l, b + 16.0), (self.x.1, r, b + 16.0)] {
            let _ = writeln!(out, r#"<text x="{anchor_x}" y="{anchor_y}" text-anchor="middle">{v:.3}</text>"#);
        }
        for (v, anchor_y) in [(self.y.0, b), (self.y.1, t)] {
            let _ = writeln!(out, r#"<text x="{}" y="{anchor_y}" text-anchor="end">{v:.3}</text>"#, l - 4.0);
        }
    }
}

fn colour(state: VerdictState) -> &'static str {
    match state {
        VerdictState::CertifiedStable => "#2a9d2a",
        VerdictState::CriterionUnstable => "#c0392b",
        VerdictState::Undecided => "#999999",
    }
}

/// Scatter of the diagram, one colour per verdict class.
pub fn diagram_svg(d: &StabilityDiagram) -> String {
    let axes = Axes::fit(d.points.iter().map(|p| p.q1), d.points.iter().map(|p| p.q2));
    let mut out = String::new();
    axes.frame(&mut out, "stability diagram");
    for p in &d.points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"><title>{}</title></circle>"#,
            axes.px(p.q1),
            axes.py(p.q2),
            colour(p.state),
            p.state.as_str()
        );
    }
    legend(&mut out);
    out.push_str("</svg>\n");
    out
}

fn legend(out: &mut String) {
    let states = [VerdictState::CertifiedStable, VerdictState::Undecided, VerdictState::CriterionUnstable];
    for (i, s) in states.into_iter().enumerate() {
        let y = PAD + 14.0 + 16.0 * i as f64;
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="4" fill="{}"/>"#, W - PAD - 120.0, y - 4.0, colour(s));
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, W - PAD - 110.0, s.as_str());
    }
}

/// Border brackets as short segments between the two sides of each ray.
pub fn border_svg(rays: &[(f64, f64, f64, f64)]) -> String {
    let axes = Axes::fit(rays.iter().flat_map(|r| [r.0, r.2]), rays.iter().flat_map(|r| [r.1, r.3]));
    let mut out = String::new();
    axes.frame(&mut out, "stability border");
    for &(x0, y0, x1, y1) in rays {
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="2"/>"##,
            axes.px(x0),
            axes.py(y0),
            axes.px(x1),
            axes.py(y1)
        );
        let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#2a9d2a"/>"##, axes.px(x1), axes.py(y1));
    }
    out.push_str("</svg>\n");
    out
}

/// `(ray, kind, unstable_side, stable_side, margins...)` rows for the border table.
pub fn border_rows(rays: &[RayOutcome]) -> Vec<[String; 6]> {
    rays.iter()
        .map(|r| match r {
            RayOutcome::Border(b) => [
                b.fixed.to_string(),
                "border".into(),
                b.unstable_side.to_string(),
                b.stable_side.to_string(),
                format!("{:e}", b.margin_unstable_side),
                format!("{:e}", b.margin_stable_side),
            ],
            RayOutcome::NoBorderOnRay { fixed, all_certified } => [
                fixed.to_string(),
                if *all_certified { "all_certified" } else { "none_certified" }.into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_row(&["1".into(), "x,y".into()]), "1,\"x,y\"\n");
    }

    #[test]
    fn svg_is_closed() {
        let s = border_svg(&[(0.5, 1.0, 0.6, 1.0)]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<line").count(), 1);
    }
}
