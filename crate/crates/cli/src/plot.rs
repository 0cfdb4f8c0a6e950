//! SVG rendering of routes over node positions.

use std::fmt::Write as _;

use emdarp_core::graph::{ExpandedGraph, NodeId, NodeKind};
use emdarp_core::instance::{Instance, Point};
use emdarp_core::plan::RoutePlan;

/// Node classes with their own glyph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Glyph {
    Start,
    Pickup,
    Delivery,
    Station,
    Depot,
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub node_radius: f64,
    /// Stroke color per agent, reused cyclically.
    pub agent_colors: Vec<String>,
    pub rejected_opacity: f64,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 800.0,
            margin: 40.0,
            node_radius: 6.0,
            agent_colors: ["#000000", "#1f4fd1", "#c0392b", "#1e8449", "#8e44ad", "#d35400"].map(String::from).to_vec(),
            rejected_opacity: 0.3,
        }
    }
}

impl PlotSpec {
    pub fn color(&self, agent: usize) -> &str {
        &self.agent_colors[agent % self.agent_colors.len()]
    }
}

fn glyph(kind: NodeKind) -> Glyph {
    match kind {
        NodeKind::Start { .. } => Glyph::Start,
        NodeKind::Pickup { .. } => Glyph::Pickup,
        NodeKind::Delivery { .. } => Glyph::Delivery,
        NodeKind::Station { .. } => Glyph::Station,
        NodeKind::Depot { .. } => Glyph::Depot,
    }
}

/// Positions of the physical nodes; nodes without coordinates go on a circle.
fn layout(instance: &Instance) -> Vec<Point> {
    let raw = instance.physical_positions();
    let n = raw.len().max(1) as f64;
    raw.iter()
        .enumerate()
        .map(|(i, p)| {
            p.unwrap_or_else(|| {
                let a = std::f64::consts::TAU * i as f64 / n;
                Point::new(a.cos(), a.sin())
            })
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(instance: &Instance, graph: &ExpandedGraph, plan: Option<&RoutePlan>, spec: &PlotSpec) -> String {
    let g = graph;
    let pts = layout(instance);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    if pts.is_empty() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = ((spec.width - 2.0 * spec.margin).min(spec.height - 2.0 * spec.margin)) / span;
    // SVG y grows downwards
    let at = |node: NodeId| -> Option<(f64, f64)> {
        let p = pts[g.physical(node)?];
        Some((spec.margin + (p.x - x0) * scale, spec.height - spec.margin - (p.y - y0) * scale))
    };

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = spec.width,
        h = spec.height
    )
    .unwrap();
    writeln!(out, "<defs>").unwrap();
    for k in 0..g.num_agents() {
        writeln!(
            out,
            r#"<marker id="arrow{k}" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="{}"/></marker>"#,
            spec.color(k)
        )
        .unwrap();
    }
    writeln!(out, "</defs>").unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    if let Some(plan) = plan {
        for a in &plan.agents {
            let color = spec.color(a.agent);
            for w in a.visits.windows(2) {
                if instance.config.open_vrp && matches!(g.kind(w[1].node), NodeKind::Depot { .. }) {
                    continue;
                }
                let (Some((ax, ay)), Some((bx, by))) = (at(w[0].node), at(w[1].node)) else { continue };
                let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
                if len < 1e-9 {
                    continue;
                }
                // stop the arrow at the glyph's edge
                let cut = (spec.node_radius / len).min(0.5);
                let (ex, ey) = (bx - (bx - ax) * cut, by - (by - ay) * cut);
                writeln!(
                    out,
                    r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{ex:.2}" y2="{ey:.2}" stroke="{color}" stroke-width="2" marker-end="url(#arrow{})"/>"#,
                    a.agent
                )
                .unwrap();
            }
        }
    }

    let rejected = |node: NodeId| -> bool {
        match (plan, g.request_of(node)) {
            (Some(p), Some(r)) => !p.requests[r].accepted,
            _ => false,
        }
    };
    let mut drawn = vec![false; instance.num_physical_nodes()];
    for n in 0..g.num_nodes() {
        let node = NodeId(n);
        let Some(phys) = g.physical(node) else { continue };
        if std::mem::replace(&mut drawn[phys], true) {
            continue;
        }
        let Some((x, y)) = at(node) else { continue };
        let r = spec.node_radius;
        let opacity = if rejected(node) { spec.rejected_opacity } else { 1.0 };
        let style = format!(r#"fill="white" stroke="black" stroke-width="1.5" opacity="{opacity}""#);
        let shape = match glyph(g.kind(node)) {
            Glyph::Start => format!(
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
                x - r,
                y - r,
                2.0 * r,
                2.0 * r
            ),
            Glyph::Pickup => format!(r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" {style}/>"#),
            Glyph::Delivery => format!(
                r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" {style}/>"#,
                x,
                y - r,
                x + r,
                y + r,
                x - r,
                y + r
            ),
            Glyph::Station => format!(
                r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" {style}/>"#,
                x,
                y - r,
                x + r,
                y,
                x,
                y + r,
                x - r,
                y
            ),
            Glyph::Depot => format!(
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" {style} fill-opacity="0.5"/>"#,
                x - r,
                y - r,
                2.0 * r,
                2.0 * r
            ),
        };
        let label = match g.kind(node) {
            NodeKind::Station { station, .. } => format!("f{station}"),
            _ => g.label(node),
        };
        writeln!(out, "{shape}").unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" opacity="{opacity}">{}</text>"#,
            x + r + 2.0,
            y - r,
            escape(&label)
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use emdarp_core::generator::{generate, GenConfig};
    use emdarp_core::graph::expand_graph;
    use emdarp_core::plan::idle_plan;

    #[test]
    fn idle_plan_renders_every_node_faded() {
        let inst = generate(&GenConfig { seed: 3, n_requests: 2, ..GenConfig::default() }).unwrap();
        let g = expand_graph(&inst).unwrap();
        let plan = idle_plan(&inst, &g);
        let svg = render_svg(&inst, &g, Some(&plan), &PlotSpec::default());
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches(r#"opacity="0.3""#).count(), 8);
        assert!(!svg.contains("<line"));
    }

    #[test]
    fn colors_cycle() {
        let spec = PlotSpec::default();
        assert_eq!(spec.color(0), spec.color(spec.agent_colors.len()));
    }
}
