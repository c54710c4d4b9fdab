//! SVG rendering of a clipped diagram. Curves are flattened adaptively so
//! that no chord strays more than a set distance (in pixels) from the curve.

use std::fmt::Write as _;

use crate::clip::ClippedDiagram;
use crate::geometry::{Vec2, Window};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    pub width: usize,
    pub height: usize,
    /// Maximum chord error in pixels.
    pub chord_error: f64,
    pub generators: bool,
    pub vertices: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { width: 800, height: 800, chord_error: 0.1, generators: true, vertices: false }
    }
}

struct Viewport {
    win: Window,
    sx: f64,
    sy: f64,
}

impl Viewport {
    fn px(&self, p: Vec2) -> Vec2 {
        Vec2::new((p.x - self.win.xmin) * self.sx, (self.win.ymax - p.y) * self.sy)
    }
}

const MAX_DEPTH: u32 = 20;

/// Polyline through `f` on `[a, b]` (in pixel space) whose chords deviate
/// from the curve by at most `tol` at every chord midpoint parameter.
pub fn flatten<F: Fn(f64) -> Vec2>(f: F, a: f64, b: f64, tol: f64) -> Vec<Vec2> {
    const INITIAL: usize = 8;
    let mut out = vec![f(a)];
    for k in 0..INITIAL {
        let u0 = a + (b - a) * k as f64 / INITIAL as f64;
        let u1 = a + (b - a) * (k + 1) as f64 / INITIAL as f64;
        subdivide(&f, u0, f(u0), u1, f(u1), tol, 0, &mut out);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn subdivide<F: Fn(f64) -> Vec2>(
    f: &F,
    u0: f64,
    p0: Vec2,
    u1: f64,
    p1: Vec2,
    tol: f64,
    depth: u32,
    out: &mut Vec<Vec2>,
) {
    let um = 0.5 * (u0 + u1);
    let pm = f(um);
    if depth < MAX_DEPTH && chord_distance(pm, p0, p1) > tol {
        subdivide(f, u0, p0, um, pm, tol, depth + 1, out);
        subdivide(f, um, pm, u1, p1, tol, depth + 1, out);
    } else {
        out.push(p1);
    }
}

/// Distance from `p` to the segment `a b`.
pub fn chord_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let s = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance(a + d * s)
}

fn polyline(buf: &mut String, pts: &[Vec2], class: &str) {
    let _ = write!(buf, r#"<polyline class="{class}" points=""#);
    for (k, p) in pts.iter().enumerate() {
        if k > 0 {
            buf.push(' ');
        }
        let _ = write!(buf, "{:.3},{:.3}", p.x, p.y);
    }
    buf.push_str("\"/>\n");
}

/// Renders edges, optionally generator contours `(x − p)ᵀM(x − p) = 1 + w`
/// and the given vertex positions.
pub fn render_svg(c: &ClippedDiagram, vertices: &[Vec2], opts: &SvgOptions) -> String {
    let win = c.window;
    let vp = Viewport { win, sx: opts.width as f64 / win.width(), sy: opts.height as f64 / win.height() };
    let mut buf = String::new();
    let _ = writeln!(
        buf,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = opts.width,
        h = opts.height
    );
    buf.push_str("<style>.edge{fill:none;stroke:#000;stroke-width:1}.gen{fill:none;stroke:#c33;stroke-width:0.75}.vertex{fill:#36c}</style>\n");
    let _ = writeln!(buf, r#"<rect width="{}" height="{}" fill="white" stroke="black"/>"#, opts.width, opts.height);
    for e in &c.edges {
        let pts = flatten(|u| vp.px(e.curve.point(u)), e.u_a, e.u_b, opts.chord_error);
        polyline(&mut buf, &pts, "edge");
    }
    if opts.generators {
        for g in &c.generators {
            let Ok(ell) = g.ellipse() else { continue };
            let pts = flatten(|u| vp.px(ell.point_at(u)), 0.0, std::f64::consts::TAU, opts.chord_error);
            polyline(&mut buf, &pts, "gen");
        }
    }
    if opts.vertices {
        for &v in vertices {
            if win.contains(v) {
                let p = vp.px(v);
                let _ = writeln!(buf, r#"<circle class="vertex" cx="{:.3}" cy="{:.3}" r="2"/>"#, p.x, p.y);
            }
        }
    }
    buf.push_str("</svg>\n");
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::clip_to_window;
    use crate::diagram::{build_diagram, Tolerances};

    #[test]
    fn flattening_meets_tolerance() {
        let circle = |u: f64| Vec2::new(100.0 * u.cos(), 100.0 * u.sin());
        let pts = flatten(circle, 0.0, std::f64::consts::TAU, 0.1);
        // Check the curve between polyline vertices against the chords.
        for w in pts.windows(2) {
            let a0 = w[0].y.atan2(w[0].x);
            let mut a1 = w[1].y.atan2(w[1].x);
            if a1 < a0 {
                a1 += std::f64::consts::TAU;
            }
            for k in 1..10 {
                let u = a0 + (a1 - a0) * k as f64 / 10.0;
                assert!(chord_distance(circle(u), w[0], w[1]) <= 0.1 + 1e-9);
            }
        }
        // Sagitta r(1 − cos(θ/2)) ≤ 0.1 needs at least π/acos(0.999) chords.
        assert!(pts.len() as f64 >= std::f64::consts::PI / (1.0f64 - 0.001).acos());
    }

    #[test]
    fn renders_edges_and_generators() {
        let win = Window::square(400.0);
        let scene = crate::scene::generate(crate::scene::Preset::PaperWeights, 16, 1, win);
        let g = build_diagram(&scene, &Tolerances::default());
        let c = clip_to_window(&g, win);
        let vs: Vec<Vec2> = g.vertices.iter().map(|v| v.pos).collect();
        let svg = render_svg(&c, &vs, &SvgOptions { vertices: true, ..Default::default() });
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("class=\"edge\"").count(), c.edges.len());
        assert_eq!(svg.matches("class=\"gen\"").count(), 16);
        assert!(svg.contains("class=\"vertex\""));
    }
}
