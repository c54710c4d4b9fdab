//! Restriction of a diagram to a rectangular window. Every cell of the
//! result is bounded: its boundary consists of edge pieces and pieces of
//! the window frame, oriented so that the cell lies on the left.

use std::f64::consts::PI;

use crate::diagram::{nearest, representative_param, DiagramGraph, EdgeCurve, Endpoint};
use crate::generator::Generator;
use crate::geometry::{Line2, Vec2, Window};

/// Identity of a boundary node, used to chain pieces into components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    Vertex(usize),
    /// Where an edge crosses the window frame.
    Crossing(usize),
    /// Window corners counter-clockwise from `(xmin, ymin)`.
    Corner(usize),
    /// Start/end of a closed loop that never meets the frame.
    Loop(usize),
    /// An end at infinity (only for windows that fail to contain an
    /// unbounded edge, which then cannot be measured).
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceSource {
    Edge(usize),
    /// Frame side: 0 bottom, 1 right, 2 top, 3 left.
    Window(usize),
}

/// A boundary piece of one cell, traversed with the cell on its left:
/// `u_a → u_b`, or `u_b → u_a` when `reversed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub cell: usize,
    pub source: PieceSource,
    pub curve: EdgeCurve,
    pub u_a: f64,
    pub u_b: f64,
    pub reversed: bool,
    pub start: NodeKey,
    pub end: NodeKey,
}

impl Piece {
    pub fn is_finite(&self) -> bool {
        self.u_a.is_finite() && self.u_b.is_finite() && self.start != NodeKey::Open && self.end != NodeKey::Open
    }

    pub fn is_loop(&self) -> bool {
        matches!(self.start, NodeKey::Loop(_))
    }

    pub fn start_point(&self) -> Vec2 {
        self.curve.point(if self.reversed { self.u_b } else { self.u_a })
    }

    pub fn end_point(&self) -> Vec2 {
        self.curve.point(if self.reversed { self.u_a } else { self.u_b })
    }

    pub fn midpoint(&self) -> Vec2 {
        self.curve.point(representative_param(self.u_a, self.u_b))
    }
}

/// Part of an edge that lies inside the window.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedEdge {
    pub edge: usize,
    pub pair: (usize, usize),
    pub curve: EdgeCurve,
    pub u_a: f64,
    pub u_b: f64,
    pub start: NodeKey,
    pub end: NodeKey,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClippedDiagram {
    pub window: Window,
    pub generators: Vec<Generator>,
    pub edges: Vec<ClippedEdge>,
    /// Frame pieces, counter-clockwise, each owned by one cell.
    pub frame_pieces: Vec<Piece>,
    /// Frame crossing points by [`NodeKey::Crossing`] index.
    pub crossings: Vec<Vec2>,
}

impl ClippedDiagram {
    pub fn cell_count(&self) -> usize {
        self.generators.len()
    }

    /// Boundary pieces of `cell`, cell on the left.
    pub fn cell_pieces(&self, cell: usize) -> Vec<Piece> {
        let mut out = Vec::new();
        for e in &self.edges {
            if e.left != cell && e.right != cell {
                continue;
            }
            let reversed = e.right == cell;
            out.push(Piece {
                cell,
                source: PieceSource::Edge(e.edge),
                curve: e.curve.clone(),
                u_a: e.u_a,
                u_b: e.u_b,
                reversed,
                start: if reversed { e.end } else { e.start },
                end: if reversed { e.start } else { e.end },
            });
        }
        out.extend(self.frame_pieces.iter().filter(|p| p.cell == cell).cloned());
        out
    }

    /// Cells sharing an edge piece with `cell`, ascending.
    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.left == cell {
                    Some(e.right)
                } else if e.right == cell {
                    Some(e.left)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Cells that own some part of the window.
    pub fn is_present(&self, cell: usize) -> bool {
        self.edges.iter().any(|e| e.left == cell || e.right == cell) || self.frame_pieces.iter().any(|p| p.cell == cell)
    }
}

/// Frame side `k` as a line `coordinate = value`; `axis` 0 is `x`.
fn side_constraint(win: &Window, k: usize) -> (usize, f64) {
    match k {
        0 => (1, win.ymin),
        1 => (0, win.xmax),
        2 => (1, win.ymax),
        _ => (0, win.xmin),
    }
}

/// Parameters in `[lo, hi]` where coordinate `axis` of the curve equals `value`.
pub fn axis_crossings(curve: &EdgeCurve, axis: usize, value: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    match curve {
        EdgeCurve::Line(l) => {
            let (o, d) = if axis == 0 { (l.origin.x, l.dir.x) } else { (l.origin.y, l.dir.y) };
            if d != 0.0 {
                let s = (value - o) / d;
                if s >= lo && s <= hi {
                    out.push(s);
                }
            }
        }
        EdgeCurve::Conic(c) => {
            // Homogeneous coordinate minus value·û is a cos u + b sin u + c.
            let row = if axis == 0 { c.x_hat() } else { c.y_hat() };
            let u = c.u_hat();
            let poly = [row[0] - value * u[0], row[1] - value * u[1], row[2] - value * u[2]];
            // Back from t-polynomial coefficients (p0 + p1 t + p2 t²) to the
            // trigonometric form: p0 = k2 + k0, p1 = 2 k1, p2 = k2 − k0.
            let a = 0.5 * (poly[0] - poly[2]);
            let b = 0.5 * poly[1];
            let cc = 0.5 * (poly[0] + poly[2]);
            for phi in trig_roots(a, b, cc) {
                let mut phi = phi;
                while phi < lo {
                    phi += 2.0 * PI;
                }
                while phi - 2.0 * PI >= lo {
                    phi -= 2.0 * PI;
                }
                if phi <= hi {
                    out.push(phi);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Solutions of `a cos φ + b sin φ + c = 0` in `[-π, π)`.
pub fn trig_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let r = a.hypot(b);
    if !(r > 0.0) {
        return Vec::new();
    }
    let q = -c / r;
    if q.abs() > 1.0 {
        return Vec::new();
    }
    let base = b.atan2(a);
    let delta = q.acos();
    let mut out = vec![crate::geometry::wrap_angle(base + delta)];
    if delta > 0.0 {
        out.push(crate::geometry::wrap_angle(base - delta));
    }
    out
}

/// Clips every edge to `win` and assigns the pieces of the window frame to
/// the cells owning them.
pub fn clip_to_window(g: &DiagramGraph, win: Window) -> ClippedDiagram {
    let mut crossings: Vec<Vec2> = Vec::new();
    // Per frame side: (position along the side, node).
    let mut side_nodes: [Vec<(f64, NodeKey)>; 4] = Default::default();
    let mut edges = Vec::new();

    for (id, e) in g.edges.iter().enumerate() {
        let (lo, hi) = (e.u_a, e.u_b);
        let mut cuts: Vec<(f64, usize)> = Vec::new();
        for side in 0..4 {
            let (axis, value) = side_constraint(&win, side);
            for u in axis_crossings(&e.curve, axis, value, lo, hi) {
                if u > lo && u < hi {
                    cuts.push((u, side));
                }
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));

        let end_key = |ep: Endpoint| match ep {
            Endpoint::Vertex(v) => NodeKey::Vertex(v),
            Endpoint::Loop => NodeKey::Loop(id),
            Endpoint::Unbounded => NodeKey::Open,
        };
        // Bounds refer either to a fixed node or to a cut by index.
        enum Bound {
            Node(NodeKey),
            Cut(usize),
        }
        let mut bounds: Vec<(f64, Bound)> = Vec::with_capacity(cuts.len() + 2);
        if e.is_loop() && !cuts.is_empty() {
            // Restart the loop at its first crossing.
            bounds.extend(cuts.iter().enumerate().map(|(k, c)| (c.0, Bound::Cut(k))));
            bounds.push((cuts[0].0 + 2.0 * PI, Bound::Cut(0)));
        } else {
            bounds.push((lo, Bound::Node(end_key(e.start))));
            bounds.extend(cuts.iter().enumerate().map(|(k, c)| (c.0, Bound::Cut(k))));
            bounds.push((hi, Bound::Node(end_key(e.end))));
        }

        // Crossings are registered only when they end an inside piece.
        let mut cut_keys: Vec<Option<NodeKey>> = vec![None; cuts.len()];
        let mut key_of = |b: &Bound, crossings: &mut Vec<Vec2>, side_nodes: &mut [Vec<(f64, NodeKey)>; 4]| match *b {
            Bound::Node(k) => k,
            Bound::Cut(k) => *cut_keys[k].get_or_insert_with(|| {
                let (u, side) = cuts[k];
                let p = e.curve.point(u);
                let key = NodeKey::Crossing(crossings.len());
                crossings.push(p);
                let along = if side % 2 == 0 { p.x } else { p.y };
                side_nodes[side].push((along, key));
                key
            }),
        };

        for w in bounds.windows(2) {
            let (a, ref ba) = w[0];
            let (b, ref bb) = w[1];
            if !(b > a) {
                continue;
            }
            let mid = e.curve.point(representative_param(a, b));
            if !win.contains(mid) {
                continue;
            }
            let start = key_of(ba, &mut crossings, &mut side_nodes);
            let end = key_of(bb, &mut crossings, &mut side_nodes);
            edges.push(ClippedEdge {
                edge: id,
                pair: e.pair,
                curve: e.curve.clone(),
                u_a: a,
                u_b: b,
                start,
                end,
                left: e.left,
                right: e.right,
            });
        }
    }

    let frame_pieces = frame_pieces(&g.generators, &win, side_nodes);
    ClippedDiagram { window: win, generators: g.generators.clone(), edges, frame_pieces, crossings }
}

fn frame_pieces(scene: &[Generator], win: &Window, mut side_nodes: [Vec<(f64, NodeKey)>; 4]) -> Vec<Piece> {
    let corners = win.corners();
    let mut out = Vec::new();
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        let nodes = &mut side_nodes[side];
        // Sort along the traversal direction of the side.
        let forward = matches!(side, 0 | 1);
        nodes.sort_by(|x, y| if forward { x.0.total_cmp(&y.0) } else { y.0.total_cmp(&x.0) });
        let mut pts: Vec<(Vec2, NodeKey)> = vec![(a, NodeKey::Corner(side))];
        for &(along, key) in nodes.iter() {
            let p = if side % 2 == 0 { Vec2::new(along, a.y) } else { Vec2::new(a.x, along) };
            pts.push((p, key));
        }
        pts.push((b, NodeKey::Corner((side + 1) % 4)));
        for w in pts.windows(2) {
            let (p, kp) = w[0];
            let (q, kq) = w[1];
            let len = p.distance(q);
            if !(len > 0.0) {
                continue;
            }
            let line = Line2 { origin: p, dir: (q - p) / len };
            let owner = nearest(scene, (p + q) * 0.5);
            out.push(Piece {
                cell: owner,
                source: PieceSource::Window(side),
                curve: EdgeCurve::Line(line),
                u_a: 0.0,
                u_b: len,
                reversed: false,
                start: kp,
                end: kq,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_diagram, Tolerances};
    use crate::geometry::SymMat2;

    #[test]
    fn trig_roots_solve_equation() {
        for &(a, b, c) in &[(1.0, 0.0, 0.0), (0.3, -2.0, 0.5), (1.0, 1.0, -1.0)] {
            let r = trig_roots(a, b, c);
            assert!(!r.is_empty());
            for phi in r {
                assert!((a * phi.cos() + b * phi.sin() + c).abs() < 1e-12);
            }
        }
        assert!(trig_roots(1.0, 0.0, 2.0).is_empty());
    }

    #[test]
    fn two_symmetric_generators_split_the_window() {
        let scene = [
            Generator::new(0, Vec2::new(100.0, 200.0), SymMat2::IDENTITY, 0.0),
            Generator::new(1, Vec2::new(300.0, 200.0), SymMat2::IDENTITY, 0.0),
        ];
        let g = build_diagram(&scene, &Tolerances::default());
        let c = clip_to_window(&g, Window::square(400.0));
        assert_eq!(c.edges.len(), 1);
        let e = &c.edges[0];
        let (p, q) = (e.curve.point(e.u_a), e.curve.point(e.u_b));
        let ys = [p.y.min(q.y), p.y.max(q.y)];
        assert!(ys[0].abs() < 1e-9 && (ys[1] - 400.0).abs() < 1e-9);
        assert_eq!(c.crossings.len(), 2);
        // Bottom and top sides are split, left and right are not.
        assert_eq!(c.frame_pieces.len(), 6);
        assert_eq!(c.cell_pieces(0).len(), 4);
        assert_eq!(c.cell_pieces(1).len(), 4);
    }

    #[test]
    fn single_generator_owns_the_window() {
        let scene = [Generator::new(0, Vec2::new(50.0, 50.0), SymMat2::IDENTITY, 0.0)];
        let g = build_diagram(&scene, &Tolerances::default());
        let c = clip_to_window(&g, Window::square(400.0));
        assert!(c.edges.is_empty());
        assert_eq!(c.cell_pieces(0).len(), 4);
    }

    #[test]
    fn pieces_chain_into_cycles() {
        let scene = crate::scene::generate(crate::scene::Preset::PaperRandom, 16, 5, Window::square(400.0));
        let g = build_diagram(&scene, &Tolerances::default());
        let c = clip_to_window(&g, Window::square(400.0));
        for cell in 0..scene.len() {
            let pieces = c.cell_pieces(cell);
            for p in &pieces {
                assert!(p.is_finite());
                // Every piece end is the start of another piece of the cell.
                if !p.is_loop() {
                    assert!(pieces.iter().any(|q| q.start == p.end), "cell {cell}: dangling {:?}", p.end);
                }
            }
        }
    }
}
