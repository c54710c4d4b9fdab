//! Cell perimeters and areas. The area of a cell is the shoelace area of
//! its boundary nodes plus, for every curved piece, the signed area between
//! the piece and its chord, integrated in a frame aligned with the chord.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::clip::{ClippedDiagram, NodeKey, Piece, PieceSource};
use crate::diagram::{DiagramGraph, EdgeCurve, EdgeSegment, Endpoint};
use crate::quadrature::integrate;

pub const EPS_QUAD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("cell {0} is unbounded; clip the diagram to a window first")]
    UnboundedCell(usize),
    #[error("edge segment is unbounded")]
    NonFiniteSegment,
}

/// One connected boundary component of a cell. Outer boundaries have
/// positive area, holes negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentMeasure {
    pub area: f64,
    pub perimeter: f64,
    pub pieces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMeasure {
    pub cell_id: usize,
    pub perimeter: f64,
    pub area: f64,
    pub components: Vec<ComponentMeasure>,
}

impl CellMeasure {
    /// Number of connected regions: each has exactly one outer boundary.
    pub fn regions(&self) -> usize {
        self.components.iter().filter(|c| c.area > 0.0).count()
    }
}

/// Arc length of a curve piece; straight pieces in closed form.
pub fn curve_length(curve: &EdgeCurve, u_a: f64, u_b: f64) -> f64 {
    match curve {
        EdgeCurve::Line(_) => (u_b - u_a).abs(),
        EdgeCurve::Conic(_) => integrate(|u| curve.derivative(u).norm(), u_a, u_b, EPS_QUAD),
    }
}

pub fn edge_arc_length(e: &EdgeSegment) -> Result<f64, MeasureError> {
    if !e.is_bounded() {
        return Err(MeasureError::NonFiniteSegment);
    }
    Ok(curve_length(&e.curve, e.u_a, e.u_b))
}

/// Signed area between a piece (traversed `u_a → u_b`) and its chord;
/// positive when the piece bulges to the right of the chord, which enlarges
/// the cell on its left.
fn chord_correction(curve: &EdgeCurve, u_a: f64, u_b: f64, is_loop: bool) -> f64 {
    let EdgeCurve::Conic(_) = curve else {
        return 0.0;
    };
    let a = curve.point(u_a);
    if is_loop {
        // ½ ∮ (P − A) × P′
        return 0.5 * integrate(|u| (curve.point(u) - a).cross(curve.derivative(u)), u_a, u_b, EPS_QUAD);
    }
    let b = curve.point(u_b);
    let chord = b - a;
    let len = chord.norm();
    if !(len > 0.0) {
        return 0.5 * integrate(|u| (curve.point(u) - a).cross(curve.derivative(u)), u_a, u_b, EPS_QUAD);
    }
    // Chord frame: x̄ along the chord, ȳ to its left. Green's theorem over
    // the region between arc and chord gives −∫ ȳ x̄′.
    let ex = chord / len;
    let ey = ex.perp();
    -integrate(
        |u| {
            let q = curve.point(u) - a;
            q.dot(ey) * curve.derivative(u).dot(ex)
        },
        u_a,
        u_b,
        EPS_QUAD,
    )
}

/// `½ ∫ P × P′` along the piece in its traversal direction.
pub fn piece_area(p: &Piece) -> f64 {
    let a = p.curve.point(p.u_a);
    let b = p.curve.point(p.u_b);
    let forward = 0.5 * a.cross(b) + chord_correction(&p.curve, p.u_a, p.u_b, p.is_loop());
    if p.reversed {
        -forward
    } else {
        forward
    }
}

pub fn piece_length(p: &Piece) -> f64 {
    curve_length(&p.curve, p.u_a, p.u_b)
}

/// Measures a closed set of oriented boundary pieces of one cell.
pub fn measure_pieces(cell_id: usize, pieces: &[Piece]) -> Result<CellMeasure, MeasureError> {
    if pieces.iter().any(|p| !p.is_finite()) {
        return Err(MeasureError::UnboundedCell(cell_id));
    }
    let mut components = Vec::new();
    for group in group_pieces(pieces) {
        let mut area = 0.0;
        let mut perimeter = 0.0;
        for &k in &group {
            area += piece_area(&pieces[k]);
            perimeter += piece_length(&pieces[k]);
        }
        components.push(ComponentMeasure { area, perimeter, pieces: group.len() });
    }
    let area = components.iter().map(|c| c.area).sum::<f64>();
    let perimeter = components.iter().map(|c| c.perimeter).sum::<f64>();
    Ok(CellMeasure { cell_id, perimeter, area, components })
}

/// Connected groups of pieces, linked through shared nodes.
fn group_pieces(pieces: &[Piece]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..pieces.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut seen: HashMap<NodeKey, usize> = HashMap::new();
    for (k, p) in pieces.iter().enumerate() {
        for node in [p.start, p.end] {
            if matches!(node, NodeKey::Open | NodeKey::Loop(_)) {
                continue;
            }
            if let Some(&other) = seen.get(&node) {
                let (a, b) = (find(&mut parent, k), find(&mut parent, other));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            } else {
                seen.insert(node, k);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for k in 0..pieces.len() {
        let r = find(&mut parent, k);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(k);
    }
    groups
}

/// Boundary pieces of a cell of the unclipped diagram.
pub fn graph_cell_pieces(g: &DiagramGraph, cell: usize) -> Result<Vec<Piece>, MeasureError> {
    if !g.is_cell_bounded(cell) {
        return Err(MeasureError::UnboundedCell(cell));
    }
    let key = |ep: Endpoint, id: usize| match ep {
        Endpoint::Vertex(v) => NodeKey::Vertex(v),
        Endpoint::Loop => NodeKey::Loop(id),
        Endpoint::Unbounded => NodeKey::Open,
    };
    Ok(g.cells[cell]
        .edges
        .iter()
        .map(|&id| {
            let e = &g.edges[id];
            let reversed = e.right == cell;
            let (s, t) = (key(e.start, id), key(e.end, id));
            Piece {
                cell,
                source: PieceSource::Edge(id),
                curve: e.curve.clone(),
                u_a: e.u_a,
                u_b: e.u_b,
                reversed,
                start: if reversed { t } else { s },
                end: if reversed { s } else { t },
            }
        })
        .collect())
}

/// Area of a bounded cell of the unclipped diagram.
pub fn cell_area(g: &DiagramGraph, cell: usize) -> Result<CellMeasure, MeasureError> {
    measure_pieces(cell, &graph_cell_pieces(g, cell)?)
}

pub fn cell_perimeter(g: &DiagramGraph, cell: usize) -> Result<f64, MeasureError> {
    Ok(cell_area(g, cell)?.perimeter)
}

/// Area and perimeter of a cell restricted to the window; frame pieces
/// count towards the perimeter.
pub fn clipped_cell_measure(c: &ClippedDiagram, cell: usize) -> Result<CellMeasure, MeasureError> {
    measure_pieces(cell, &c.cell_pieces(cell))
}

/// All cells of a clipped diagram, in generator order.
pub fn measure_all(c: &ClippedDiagram) -> Result<Vec<CellMeasure>, MeasureError> {
    use rayon::prelude::*;
    (0..c.cell_count()).into_par_iter().map(|k| clipped_cell_measure(c, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::clip_to_window;
    use crate::diagram::{build_diagram, Tolerances};
    use crate::generator::Generator;
    use crate::geometry::{Line2, SymMat2, Vec2, Window};
    use std::f64::consts::PI;

    fn concentric() -> Vec<Generator> {
        vec![
            Generator::new(0, Vec2::ZERO, SymMat2::scaled_identity(2.0), 1.0),
            Generator::new(1, Vec2::ZERO, SymMat2::IDENTITY, 0.0),
        ]
    }

    #[test]
    fn unit_disk_cell() {
        let g = build_diagram(&concentric(), &Tolerances::default());
        let m = cell_area(&g, 0).unwrap();
        assert!((m.area - PI).abs() < 1e-9, "{}", m.area);
        assert!((m.perimeter - 2.0 * PI).abs() < 1e-9, "{}", m.perimeter);
        assert_eq!(cell_area(&g, 1), Err(MeasureError::UnboundedCell(1)));
        assert_eq!(edge_arc_length(&g.edges[0]).unwrap(), m.perimeter);
    }

    #[test]
    fn enclosing_cell_loses_the_disk() {
        let g = build_diagram(&concentric(), &Tolerances::default());
        let c = clip_to_window(&g, Window::new(-2.0, -2.0, 2.0, 2.0).unwrap());
        let outer = clipped_cell_measure(&c, 1).unwrap();
        assert!((outer.area - (16.0 - PI)).abs() < 1e-9);
        assert!((outer.perimeter - (16.0 + 2.0 * PI)).abs() < 1e-9);
        assert_eq!(outer.regions(), 1);
        assert_eq!(outer.components.len(), 2);
    }

    #[test]
    fn straight_edge_length() {
        let line = Line2 { origin: Vec2::ZERO, dir: Vec2::new(0.6, 0.8) };
        assert_eq!(curve_length(&EdgeCurve::Line(line), 0.0, 5.0), 5.0);
    }

    #[test]
    fn half_window_cells() {
        let scene = [
            Generator::new(0, Vec2::new(100.0, 200.0), SymMat2::IDENTITY, 0.0),
            Generator::new(1, Vec2::new(300.0, 200.0), SymMat2::IDENTITY, 0.0),
        ];
        let g = build_diagram(&scene, &Tolerances::default());
        let c = clip_to_window(&g, Window::square(400.0));
        for k in 0..2 {
            let m = clipped_cell_measure(&c, k).unwrap();
            assert!((m.area - 80_000.0).abs() <= 1e-6 * 80_000.0);
            assert!((m.perimeter - 1200.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn conic_arc_length_matches_polyline() {
        let scene = crate::scene::generate(crate::scene::Preset::PaperRandom, 6, 11, Window::square(400.0));
        let g = build_diagram(&scene, &Tolerances::default());
        let c = clip_to_window(&g, Window::square(400.0));
        let mut checked = 0;
        for e in c.edges.iter().filter(|e| matches!(e.curve, EdgeCurve::Conic(_))) {
            let exact = curve_length(&e.curve, e.u_a, e.u_b);
            let n = 200_000;
            let mut poly = 0.0;
            let mut prev = e.curve.point(e.u_a);
            for k in 1..=n {
                let p = e.curve.point(e.u_a + (e.u_b - e.u_a) * k as f64 / n as f64);
                poly += p.distance(prev);
                prev = p;
            }
            assert!((exact - poly).abs() <= 1e-7 * exact, "{exact} vs {poly}");
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn clipped_areas_partition_the_window() {
        let win = Window::square(400.0);
        let scene = crate::scene::generate(crate::scene::Preset::PaperRandom, 16, 2, win);
        let g = build_diagram(&scene, &Tolerances::default());
        let c = clip_to_window(&g, win);
        let total: f64 = measure_all(&c).unwrap().iter().map(|m| m.area).sum();
        assert!((total - win.area()).abs() <= 1e-6 * win.area(), "{total}");
    }
}
