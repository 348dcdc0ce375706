//! Layout JSON documents and SVG export.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

/// Community colors, cycled by community id.
pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf", "#393b79", "#637939",
];

pub fn community_color(community: usize) -> &'static str {
    PALETTE[community % PALETTE.len()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub community: usize,
}

/// `{"params":{...},"nodes":[...],"edges":[[idA,idB],...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub params: serde_json::Value,
    pub nodes: Vec<LayoutNode>,
    pub edges: Vec<[String; 2]>,
}

impl LayoutDocument {
    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.nodes.iter().map(|n| [n.x, n.y]).collect()
    }

    pub fn communities(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.community).collect()
    }

    /// Edges as node indices; fails on an id that is not a node.
    pub fn edge_indices(&self) -> Result<Vec<(usize, usize)>, String> {
        let index: std::collections::HashMap<&str, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        self.edges
            .iter()
            .map(|[a, b]| match (index.get(a.as_str()), index.get(b.as_str())) {
                (Some(&u), Some(&v)) => Ok((u, v)),
                _ => Err(format!("edge ({a}, {b}) references an unknown node")),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout documents always serialize")
    }
}

const CANVAS: f64 = 1000.0;
const MARGIN: f64 = 40.0;

fn to_canvas(v: f64) -> f64 {
    MARGIN + v * (CANVAS - 2.0 * MARGIN)
}

/// Edges as line segments under community-colored circles, `viewBox 0 0 1000 1000`.
/// The y axis points down, as in the unit-square coordinates.
pub fn layout_svg(doc: &LayoutDocument) -> Result<String, String> {
    let edges = doc.edge_indices()?;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1000 1000" width="1000" height="1000">"#
    )
    .unwrap();
    writeln!(out, r##"<rect width="1000" height="1000" fill="#ffffff"/>"##).unwrap();
    writeln!(out, r##"<g stroke="#999999" stroke-opacity="0.6" stroke-width="1">"##).unwrap();
    for (u, v) in edges {
        let (a, b) = (&doc.nodes[u], &doc.nodes[v]);
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            to_canvas(a.x),
            to_canvas(a.y),
            to_canvas(b.x),
            to_canvas(b.y)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    writeln!(out, r##"<g stroke="#ffffff" stroke-width="1">"##).unwrap();
    for n in &doc.nodes {
        writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="6" fill="{}"><title>{}</title></circle>"#,
            to_canvas(n.x),
            to_canvas(n.y),
            community_color(n.community),
            escape(&n.id)
        )
        .unwrap();
    }
    writeln!(out, "</g>\n</svg>").unwrap();
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> LayoutDocument {
        LayoutDocument {
            params: serde_json::json!({}),
            nodes: vec![
                LayoutNode { id: "a<b".into(), x: 0.0, y: 0.0, community: 0 },
                LayoutNode { id: "c".into(), x: 1.0, y: 1.0, community: 13 },
            ],
            edges: vec![["a<b".into(), "c".into()]],
        }
    }

    #[test]
    fn svg_has_one_element_per_item() {
        let svg = layout_svg(&doc()).unwrap();
        assert!(svg.contains(r#"viewBox="0 0 1000 1000""#));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<line").count(), 1);
        assert!(svg.contains(PALETTE[1]));
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn unknown_edge_endpoint() {
        let mut d = doc();
        d.edges.push(["c".into(), "zz".into()]);
        assert!(layout_svg(&d).is_err());
    }
}
