//! Static SVG pictures of result files.

use std::fmt::Write;

use crate::io::ResultFile;

#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Width of the picture in pixels; height follows the aspect ratio.
    pub width: f64,
    /// Allow orthographic projection of 3-d results onto the xy-plane.
    pub project: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 640.0,
            project: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Svg {
    pub bytes: Vec<u8>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RenderError {
    UnsupportedDimension(usize),
    Empty,
}

impl std::fmt::Display for RenderError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::UnsupportedDimension(d) => write!(f, "cannot draw dimension {d}; pass --project for 3-d results"),
            Self::Empty => write!(f, "result holds no geometry"),
        }
    }
}

impl std::error::Error for RenderError {}

const MARGIN: f64 = 24.0;
const DASH: &str = "6 4";

/// Maps plane coordinates to pixels with the y-axis pointing up.
struct Frame {
    lo: (f64, f64),
    scale: f64,
    height: f64,
}

impl Frame {
    fn px(&self, p: &[f64]) -> (f64, f64) {
        (MARGIN + (p[0] - self.lo.0) * self.scale, self.height - MARGIN - (p[1] - self.lo.1) * self.scale)
    }

    fn len(&self, l: f64) -> f64 {
        l * self.scale
    }
}

pub fn render_svg(result: &ResultFile, opts: &RenderOptions) -> Result<Svg, RenderError> {
    let warning = match result.dim {
        2 => None,
        3 if opts.project => Some("3-d result drawn by orthographic projection onto the xy-plane".to_string()),
        d => return Err(RenderError::UnsupportedDimension(d)),
    };
    let tube = result.network.as_ref().map_or(0.0, |n| n.r);
    let mut all: Vec<&[f64]> = Vec::new();
    if let Some(t) = &result.tree {
        all.extend(t.terminals.iter().map(Vec::as_slice));
        all.extend(t.steiner_points.iter().map(Vec::as_slice));
    }
    if let Some(n) = &result.network {
        all.extend(n.vertices.iter().map(Vec::as_slice));
        all.extend(n.compact.iter().map(Vec::as_slice));
    }
    if all.is_empty() {
        return Err(RenderError::Empty);
    }
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &all {
        lo = (lo.0.min(p[0] - tube), lo.1.min(p[1] - tube));
        hi = (hi.0.max(p[0] + tube), hi.1.max(p[1] + tube));
    }
    let span = (hi.0 - lo.0).max(hi.1 - lo.1);
    let span = if span > 0.0 { span } else { 1.0 };
    let inner = opts.width - 2.0 * MARGIN;
    let scale = inner / span;
    let height = (hi.1 - lo.1) * scale + 2.0 * MARGIN;
    let frame = Frame { lo, scale, height };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
        w = opts.width,
        h = height.ceil()
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if let Some(net) = &result.network {
        compact_set(&mut s, &frame, net);
        tube_outline(&mut s, &frame, net);
        for &(u, v) in &net.edges {
            edge(&mut s, &frame, &net.vertices[u], &net.vertices[v]);
        }
        let mut degree = vec![0usize; net.vertices.len()];
        for &(u, v) in &net.edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        for (p, _) in net.vertices.iter().zip(&degree).filter(|(_, &d)| d >= 3) {
            let (x, y) = frame.px(p);
            let _ = writeln!(s, r#"<circle class="steiner" cx="{x:.3}" cy="{y:.3}" r="4" fill="white" stroke="black" stroke-width="2"/>"#);
        }
        for e in &result.report.energetic_points {
            let (x, y) = frame.px(&e.x);
            let _ = writeln!(s, r#"<rect class="energetic" x="{:.3}" y="{:.3}" width="6" height="6" fill="crimson"/>"#, x - 3.0, y - 3.0);
        }
    }
    if let Some(tree) = &result.tree {
        let n = tree.terminals.len();
        let node = |i: usize| if i < n { &tree.terminals[i] } else { &tree.steiner_points[i - n] };
        for &(u, v) in &tree.edges {
            edge(&mut s, &frame, node(u), node(v));
        }
        for p in &tree.terminals {
            let (x, y) = frame.px(p);
            let _ = writeln!(s, r#"<circle class="terminal" cx="{x:.3}" cy="{y:.3}" r="5" fill="black"/>"#);
        }
        for p in &tree.steiner_points {
            let (x, y) = frame.px(p);
            let _ = writeln!(s, r#"<circle class="steiner" cx="{x:.3}" cy="{y:.3}" r="4" fill="white" stroke="black" stroke-width="2"/>"#);
        }
    }
    s.push_str("</svg>\n");
    Ok(Svg {
        bytes: s.into_bytes(),
        warning,
    })
}

fn edge(s: &mut String, f: &Frame, a: &[f64], b: &[f64]) {
    let (ax, ay) = f.px(a);
    let (bx, by) = f.px(b);
    let _ = writeln!(
        s,
        r#"<path class="edge" d="M {ax:.3} {ay:.3} L {bx:.3} {by:.3}" stroke="black" stroke-width="3" stroke-linecap="round" fill="none"/>"#
    );
}

/// `M` dashed: a closed outline for curves, small rings for finite sets.
fn compact_set(s: &mut String, f: &Frame, net: &crate::io::NetworkJson) {
    if net.closed && net.compact.len() > 2 {
        let pts: Vec<String> = net
            .compact
            .iter()
            .map(|p| {
                let (x, y) = f.px(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon class="compact" points="{}" fill="none" stroke="steelblue" stroke-width="1.5" stroke-dasharray="{DASH}"/>"#,
            pts.join(" ")
        );
    } else {
        for p in &net.compact {
            let (x, y) = f.px(p);
            let _ = writeln!(
                s,
                r#"<rect class="compact" x="{:.3}" y="{:.3}" width="5" height="5" fill="steelblue"/>"#,
                x - 2.5,
                y - 2.5
            );
        }
    }
}

/// Dashed outline of the `r`-neighbourhood: offset lines along every edge
/// and a ring around every vertex that is not an interior point of a path.
fn tube_outline(s: &mut String, f: &Frame, net: &crate::io::NetworkJson) {
    let r = f.len(net.r);
    let _ = writeln!(s, r#"<g class="tube" fill="none" stroke="gray" stroke-width="1" stroke-dasharray="{DASH}">"#);
    let mut degree = vec![0usize; net.vertices.len()];
    for &(u, v) in &net.edges {
        degree[u] += 1;
        degree[v] += 1;
        let (ax, ay) = f.px(&net.vertices[u]);
        let (bx, by) = f.px(&net.vertices[v]);
        let (dx, dy) = (bx - ax, by - ay);
        let l = dx.hypot(dy);
        if l <= 0.0 {
            continue;
        }
        let (nx, ny) = (-dy / l * r, dx / l * r);
        for sign in [1.0, -1.0] {
            let _ = writeln!(
                s,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                ax + sign * nx,
                ay + sign * ny,
                bx + sign * nx,
                by + sign * ny
            );
        }
    }
    for (p, d) in net.vertices.iter().zip(&degree) {
        if *d != 2 {
            let (x, y) = f.px(p);
            let _ = writeln!(s, r#"<ellipse cx="{x:.3}" cy="{y:.3}" rx="{r:.3}" ry="{r:.3}"/>"#);
        }
    }
    s.push_str("</g>\n");
}
