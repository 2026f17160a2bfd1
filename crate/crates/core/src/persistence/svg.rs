//! Standalone SVG documents with millimeter user units.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::Value;
use thiserror::Error;

use super::to_line;
use crate::analysis::{intensity_ordering, AggregateStats, SessionRecord};
use crate::trace_model::Template;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("nothing to render: no record retains a normalized trace")]
    EmptyInput,
}

const MARGIN_LEFT: f64 = 20.0;
const MARGIN_RIGHT: f64 = 25.0;
const MARGIN_TOP: f64 = 12.0;
const MARGIN_BOTTOM: f64 = 22.0;

/// Known group colors; other groups cycle through the fallback palette in name order.
const GROUP_COLORS: [(&str, &str); 3] = [("A", "#2ca02c"), ("B", "#d62728"), ("C", "#1f77b4")];
const FALLBACK_COLORS: [&str; 5] = ["#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Formats a coordinate with at most three decimals.
fn n(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn grey_hex(level: f64) -> String {
    let v = (255.0 * (1.0 - level.clamp(0.0, 1.0))).round() as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

fn open_document(out: &mut String, width: f64, height: f64, run_config: Option<&Value>) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}mm" height="{h}mm" viewBox="0 0 {w} {h}">"#,
        w = n(width),
        h = n(height)
    );
    if let Some(cfg) = run_config {
        let _ = writeln!(
            out,
            "<metadata>{}</metadata>",
            escape(&to_line(cfg).expect("config serializes"))
        );
    }
}

/// Maps sheet millimeters into document coordinates.
struct Sheet<'a> {
    template: &'a Template,
}

impl Sheet<'_> {
    fn width(&self) -> f64 {
        MARGIN_LEFT + self.template.time_axis_len_mm * 1.05 + MARGIN_RIGHT
    }

    fn height(&self) -> f64 {
        MARGIN_TOP + self.template.presence_half_range_mm + self.template.negative_range_mm() + MARGIN_BOTTOM
    }

    fn x(&self, x_mm: f64) -> f64 {
        MARGIN_LEFT + x_mm
    }

    fn y(&self, y_mm: f64) -> f64 {
        MARGIN_TOP + self.template.presence_half_range_mm - y_mm
    }

    fn point(&self, t: f64, p: f64) -> (f64, f64) {
        (
            self.x(self.template.time_to_mm(t)),
            self.y(self.template.presence_to_mm(p)),
        )
    }

    fn draw(&self, out: &mut String) {
        let t = self.template;
        let len = t.time_axis_len_mm;
        let (top, mid, bottom) = (self.y(t.presence_half_range_mm), self.y(0.0), self.y(-t.negative_range_mm()));
        let (from, to) = (grey_hex(t.gradient.from_grey), grey_hex(t.gradient.to_grey));

        out.push_str("<defs>\n");
        let _ = writeln!(
            out,
            r#"<linearGradient id="toward-virtual" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{from}"/><stop offset="1" stop-color="{to}"/></linearGradient>"#
        );
        let _ = writeln!(
            out,
            r#"<linearGradient id="toward-real" x1="0" y1="0" x2="0" y2="1"><stop offset="0" stop-color="{from}"/><stop offset="1" stop-color="{to}"/></linearGradient>"#
        );
        out.push_str("</defs>\n");

        out.push_str("<g id=\"gradient\">\n");
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="url(#toward-virtual)"/>"#,
            n(self.x(0.0)),
            n(top),
            n(len),
            n(mid - top)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="url(#toward-real)"/>"#,
            n(self.x(0.0)),
            n(mid),
            n(len),
            n(bottom - mid)
        );
        out.push_str("</g>\n");

        out.push_str("<g id=\"axes\" stroke=\"#000000\" fill=\"none\">\n");
        let _ = writeln!(
            out,
            r#"<line id="time-axis" x1="{}" y1="{m}" x2="{}" y2="{m}" stroke-width="0.4"/>"#,
            n(self.x(0.0)),
            n(self.x(len)),
            m = n(mid)
        );
        let _ = writeln!(
            out,
            r#"<line id="hmd-off" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke-width="0.3" stroke-dasharray="2 1.5"/>"#,
            n(top),
            n(bottom),
            x = n(self.x(len))
        );
        out.push_str("</g>\n");
        let _ = writeln!(
            out,
            r##"<rect id="hmd-on-symbol" x="{}" y="{}" width="8" height="5" rx="1.5" fill="#404040"/>"##,
            n(self.x(0.0) - 4.0),
            n(bottom + 3.0)
        );
        let _ = writeln!(
            out,
            r##"<rect id="hmd-off-symbol" x="{}" y="{}" width="8" height="5" rx="1.5" fill="none" stroke="#404040" stroke-width="0.4"/>"##,
            n(self.x(len) - 4.0),
            n(bottom + 3.0)
        );
        let _ = writeln!(
            out,
            r##"<circle id="start-dot" cx="{}" cy="{}" r="1.5" fill="#000000"/>"##,
            n(self.x(0.0)),
            n(mid)
        );

        if !t.event_ticks.is_empty() {
            out.push_str("<g id=\"ticks\" stroke=\"#000000\" stroke-width=\"0.3\">\n");
            for tick in &t.event_ticks {
                let x = n(self.x(tick.x_mm));
                let _ = writeln!(
                    out,
                    r#"<line class="tick" data-fraction="{}" x1="{x}" y1="{}" x2="{x}" y2="{}"/>"#,
                    n(tick.x_mm / len),
                    n(mid - 2.5),
                    n(mid + 2.5)
                );
                let _ = writeln!(
                    out,
                    r#"<text x="{x}" y="{}" font-size="3" text-anchor="middle" stroke="none">{}</text>"#,
                    n(bottom + 12.0),
                    escape(&tick.label)
                );
            }
            out.push_str("</g>\n");
        }
    }
}

/// The blank drawing sheet.
pub fn render_template(template: &Template) -> String {
    render_template_with(template, None)
}

pub fn render_template_with(template: &Template, run_config: Option<&Value>) -> String {
    let sheet = Sheet { template };
    let mut out = String::new();
    open_document(&mut out, sheet.width(), sheet.height(), run_config);
    sheet.draw(&mut out);
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Default)]
pub struct OverlayOptions {
    pub template: Template,
    /// Marks the end of the transition and the start of the exit on every trace.
    pub mark_points: bool,
    pub run_config: Option<Value>,
}

fn group_colors<'a>(groups: impl Iterator<Item = &'a str>) -> BTreeMap<String, String> {
    let mut colors = BTreeMap::new();
    let mut fallback = FALLBACK_COLORS.iter().cycle();
    let mut unknown: Vec<&str> = Vec::new();
    for g in groups {
        if let Some((_, c)) = GROUP_COLORS.iter().find(|(name, _)| *name == g) {
            colors.insert(g.to_owned(), (*c).to_owned());
        } else if !unknown.contains(&g) {
            unknown.push(g);
        }
    }
    unknown.sort_unstable();
    for g in unknown {
        colors.insert(g.to_owned(), (*fallback.next().expect("cycle")).to_owned());
    }
    colors
}

/// All traces drawn over one sheet, colored by group.
pub fn render_overlay(records: &[SessionRecord], options: &OverlayOptions) -> Result<String, RenderError> {
    let mut drawable: Vec<&SessionRecord> = records.iter().filter(|r| r.trace.is_some()).collect();
    if drawable.is_empty() {
        return Err(RenderError::EmptyInput);
    }
    drawable.sort_by_key(|r| r.key());

    let sheet = Sheet {
        template: &options.template,
    };
    let colors = group_colors(drawable.iter().map(|r| r.group.as_str()));
    let mut out = String::new();
    open_document(&mut out, sheet.width(), sheet.height(), options.run_config.as_ref());
    sheet.draw(&mut out);

    out.push_str("<g id=\"traces\" fill=\"none\" stroke-width=\"0.35\">\n");
    for r in &drawable {
        let trace = r.trace.as_ref().expect("filtered");
        let pts: Vec<String> = trace
            .samples
            .iter()
            .map(|s| {
                let (x, y) = sheet.point(s.t, s.p);
                format!("{},{}", n(x), n(y))
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline data-participant="{}" data-group="{}" stroke="{}" points="{}"/>"#,
            escape(&r.participant_id),
            escape(&r.group),
            colors[&r.group],
            pts.join(" ")
        );
    }
    out.push_str("</g>\n");

    if options.mark_points {
        out.push_str("<g id=\"points\" fill=\"#000000\">\n");
        for r in &drawable {
            let Some(points) = &r.points else { continue };
            for (name, p) in [("p_experience", points.p_experience), ("p_mentalexit", points.p_mentalexit)] {
                let (x, y) = sheet.point(p.t, p.p);
                let _ = writeln!(
                    out,
                    r#"<circle class="point" data-point="{name}" data-participant="{}" cx="{}" cy="{}" r="1"/>"#,
                    escape(&r.participant_id),
                    n(x),
                    n(y)
                );
            }
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g id=\"legend\" font-size=\"3\">\n");
    for (i, (group, color)) in colors.iter().enumerate() {
        let y = MARGIN_TOP + 4.0 * i as f64;
        let x = sheet.x(options.template.time_axis_len_mm * 1.05) + 3.0;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="0.8"/><text x="{}" y="{}">{}</text>"#,
            n(x),
            n(x + 5.0),
            n(x + 6.5),
            n(y + 1.0),
            escape(group),
            y = n(y)
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

const BOX_PITCH: f64 = 30.0;
const BOX_WIDTH: f64 = 14.0;
/// Document units per presence unit.
const PRESENCE_SCALE: f64 = 50.0;

/// Box plots of the presence at the break, strongest event first.
pub fn render_boxplot(stats: &AggregateStats, run_config: Option<&Value>) -> String {
    let ordering = intensity_ordering(stats);
    let boxes: Vec<_> = ordering
        .ordered
        .iter()
        .filter_map(|o| {
            stats
                .intensity
                .iter()
                .find(|e| e.event == o.event)
                .and_then(|e| e.p_break.as_ref().map(|b| (o.event.as_str(), b)))
        })
        .collect();

    let width = MARGIN_LEFT + BOX_PITCH * boxes.len().max(1) as f64 + 10.0;
    let height = MARGIN_TOP + 2.0 * PRESENCE_SCALE + MARGIN_BOTTOM;
    let y = |p: f64| MARGIN_TOP + (1.0 - p) * PRESENCE_SCALE;
    let right = width - 10.0;

    let mut out = String::new();
    open_document(&mut out, width, height, run_config);
    out.push_str("<g id=\"axis\" stroke=\"#000000\" stroke-width=\"0.3\" font-size=\"3\">\n");
    let _ = writeln!(
        out,
        r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}"/>"#,
        n(y(1.0)),
        n(y(-1.0)),
        x = n(MARGIN_LEFT)
    );
    for level in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{yy}" x2="{}" y2="{yy}" stroke="{}"/><text x="{}" y="{}" text-anchor="end" stroke="none">{}</text>"#,
            n(MARGIN_LEFT - 1.5),
            n(if level == 0.0 { right } else { MARGIN_LEFT }),
            if level == 0.0 { "#808080" } else { "#000000" },
            n(MARGIN_LEFT - 2.5),
            n(y(level) + 1.0),
            n(level),
            yy = n(y(level))
        );
    }
    out.push_str("</g>\n<g id=\"boxes\" stroke=\"#000000\" stroke-width=\"0.3\" font-size=\"3\">\n");
    for (i, (event, b)) in boxes.iter().enumerate() {
        let cx = MARGIN_LEFT + BOX_PITCH * (i as f64 + 0.5);
        let (l, r) = (cx - BOX_WIDTH / 2.0, cx + BOX_WIDTH / 2.0);
        let _ = writeln!(out, r#"<g class="box" data-event="{}">"#, escape(event));
        let _ = writeln!(
            out,
            r#"<line x1="{c}" y1="{}" x2="{c}" y2="{}"/><line x1="{c}" y1="{}" x2="{c}" y2="{}"/>"#,
            n(y(b.whisker_high)),
            n(y(b.q3)),
            n(y(b.q1)),
            n(y(b.whisker_low)),
            c = n(cx)
        );
        for w in [b.whisker_low, b.whisker_high] {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{yy}" x2="{}" y2="{yy}"/>"#,
                n(cx - BOX_WIDTH / 4.0),
                n(cx + BOX_WIDTH / 4.0),
                yy = n(y(w))
            );
        }
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#d9d9d9"/>"##,
            n(l),
            n(y(b.q3)),
            n(BOX_WIDTH),
            n(y(b.q1) - y(b.q3))
        );
        let _ = writeln!(
            out,
            r#"<line class="median" x1="{}" y1="{m}" x2="{}" y2="{m}" stroke-width="0.6"/>"#,
            n(l),
            n(r),
            m = n(y(b.median))
        );
        for o in &b.outliers {
            let _ = writeln!(
                out,
                r#"<circle class="outlier" cx="{}" cy="{}" r="0.8" fill="none"/>"#,
                n(cx),
                n(y(*o))
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" stroke="none">{}</text>"#,
            n(cx),
            n(y(-1.0) + 8.0),
            escape(event)
        );
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace_model::{build_template, EventTick, TemplateConfig};

    #[test]
    fn number_formatting() {
        assert_eq!(n(200.0), "200");
        assert_eq!(n(1.25), "1.25");
        assert_eq!(n(-0.0001), "0");
        assert_eq!(n(0.3333333), "0.333");
    }

    #[test]
    fn grey_levels() {
        assert_eq!(grey_hex(0.0), "#ffffff");
        assert_eq!(grey_hex(0.25), "#bfbfbf");
    }

    #[test]
    fn default_template_geometry() {
        let svg = render_template(&Template::default());
        // Time axis spans 200 user units starting at the left margin.
        assert!(svg.contains(r#"<line id="time-axis" x1="20" y1="52" x2="220" y2="52""#), "{svg}");
        // Presence half-range of 40 above and below the middle line.
        assert!(svg.contains(r#"<line id="hmd-off" x1="220" y1="12" x2="220" y2="92""#));
        assert!(svg.contains(r#"id="start-dot" cx="20" cy="52""#));
        assert!(svg.contains("#bfbfbf"));
        assert!(!svg.contains("id=\"ticks\""));
    }

    #[test]
    fn ticks_are_labeled_at_fractions() {
        let ticks = (1..=6)
            .map(|i| EventTick {
                label: format!("task {i}"),
                x_mm: 25.0 * i as f64,
            })
            .collect();
        let t = build_template(TemplateConfig {
            event_ticks: ticks,
            ..Default::default()
        })
        .unwrap();
        let svg = render_template(&t);
        assert_eq!(svg.matches("class=\"tick\"").count(), 6);
        assert!(svg.contains(r#"data-fraction="0.125""#));
        assert!(svg.contains(">task 6</text>"));
    }

    #[test]
    fn overlay_requires_traces() {
        assert_eq!(render_overlay(&[], &OverlayOptions::default()), Err(RenderError::EmptyInput));
    }

    #[test]
    fn palette_assignment() {
        let colors = group_colors(["C", "Z", "A", "Y"].into_iter());
        assert_eq!(colors["A"], "#2ca02c");
        assert_eq!(colors["C"], "#1f77b4");
        assert_eq!(colors["Y"], FALLBACK_COLORS[0]);
        assert_eq!(colors["Z"], FALLBACK_COLORS[1]);
    }
}
