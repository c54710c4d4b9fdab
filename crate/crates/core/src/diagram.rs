//! Construction of the diagram topology: candidate vertices from all
//! generator triples, visible pieces of every bisector, and per-cell
//! bookkeeping.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bisector::{angle_to_param, Bisector, BisectorShape, ConicImplicit, ParametrizedConic, EPS_RANK, EPS_RES};
use crate::generator::Generator;
use crate::geometry::{Frame, Line2, Vec2};
use crate::intersect::{intersect_conics_in, is_gbpd_vertex, IntersectError, Vertex, EPS_DEDUP, EPS_VERT};

/// Numerical tolerances of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_rank: f64,
    pub eps_vert: f64,
    /// Dedup and vertex-merge radius relative to the scene diameter.
    pub eps_dedup: f64,
    /// Vertex angles closer than this on one bisector are merged.
    pub eps_param: f64,
    pub eps_res: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eps_rank: EPS_RANK, eps_vert: EPS_VERT, eps_dedup: EPS_DEDUP, eps_param: 1e-9, eps_res: EPS_RES }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoint {
    Vertex(usize),
    /// The edge runs off to infinity.
    Unbounded,
    /// Closed loop without vertices.
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    /// `t` is the rational parameter of the conic.
    Conic,
    /// `t` is arc length along the line from its foot point.
    Line,
}

/// Geometry an edge lives on. Conics are evaluated in the angle `φ = 2 atan t`
/// so that the point at `t = ±∞` is an ordinary interior point.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCurve {
    Conic(ParametrizedConic),
    Line(Line2),
}

impl EdgeCurve {
    pub fn kind(&self) -> ParamKind {
        match self {
            EdgeCurve::Conic(_) => ParamKind::Conic,
            EdgeCurve::Line(_) => ParamKind::Line,
        }
    }

    #[inline]
    pub fn point(&self, u: f64) -> Vec2 {
        match self {
            EdgeCurve::Conic(c) => c.point_at_angle(u),
            EdgeCurve::Line(l) => l.point_at(u),
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> Vec2 {
        match self {
            EdgeCurve::Conic(c) => c.derivative_at_angle(u),
            EdgeCurve::Line(l) => l.dir,
        }
    }

    /// External parameter for the internal one.
    pub fn param(&self, u: f64) -> f64 {
        match self {
            EdgeCurve::Conic(_) => angle_to_param(u),
            EdgeCurve::Line(_) => u,
        }
    }

    /// Internal parameter of a point on the curve.
    pub fn locate(&self, p: Vec2) -> f64 {
        match self {
            EdgeCurve::Conic(c) => c.angle_of_point(p),
            EdgeCurve::Line(l) => l.project(p),
        }
    }
}

/// A visible piece of the bisector of `pair`, traversed from `u_a` to `u_b`
/// (`u_a < u_b`). For conics `u` is the angle and may exceed `π` on pieces
/// that pass through the point at `t = ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSegment {
    pub pair: (usize, usize),
    /// Which line of a line pair; 0 otherwise.
    pub line: usize,
    pub conic: ConicImplicit,
    pub curve: EdgeCurve,
    pub u_a: f64,
    pub u_b: f64,
    pub start: Endpoint,
    pub end: Endpoint,
    /// Cell to the left in the direction of traversal.
    pub left: usize,
    pub right: usize,
}

impl EdgeSegment {
    pub fn kind(&self) -> ParamKind {
        self.curve.kind()
    }

    pub fn t_a(&self) -> f64 {
        match self.curve {
            EdgeCurve::Conic(_) if self.start == Endpoint::Loop => f64::NEG_INFINITY,
            _ => self.curve.param(self.u_a),
        }
    }

    pub fn t_b(&self) -> f64 {
        match self.curve {
            EdgeCurve::Conic(_) if self.end == Endpoint::Loop => f64::INFINITY,
            _ => self.curve.param(self.u_b),
        }
    }

    /// The piece passes through `t = ∞`, so `t_a > t_b`.
    pub fn wraps(&self) -> bool {
        matches!(self.curve, EdgeCurve::Conic(_)) && self.start != Endpoint::Loop && self.u_b > PI
    }

    pub fn is_loop(&self) -> bool {
        self.start == Endpoint::Loop
    }

    pub fn is_bounded(&self) -> bool {
        self.start != Endpoint::Unbounded && self.end != Endpoint::Unbounded
    }

    pub fn representative(&self) -> Vec2 {
        self.curve.point(representative_param(self.u_a, self.u_b))
    }

    pub fn other_cell(&self, cell: usize) -> usize {
        if self.pair.0 == cell {
            self.pair.1
        } else {
            self.pair.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub edges: Vec<usize>,
    /// Edge ids grouped into connected boundary components.
    pub components: Vec<Vec<usize>>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramGraph {
    pub generators: Vec<Generator>,
    /// Conditioning frame used for all bisectors.
    pub frame: Frame,
    pub tolerances: Tolerances,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<EdgeSegment>,
    pub cells: Vec<Cell>,
    /// Generator pairs `(i, j)`, `i < j`, sharing at least one edge.
    pub adjacency: Vec<(usize, usize)>,
}

impl DiagramGraph {
    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .adjacency
            .iter()
            .filter_map(|&(a, b)| match (a == cell, b == cell) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Index of the nearest generator (smallest index on ties).
    pub fn owner(&self, q: Vec2) -> usize {
        nearest(&self.generators, q)
    }

    /// A cell is bounded when none of its edges escapes to infinity and it
    /// does not own the far field.
    pub fn is_cell_bounded(&self, cell: usize) -> bool {
        let c = &self.cells[cell];
        if c.empty {
            return true;
        }
        if c.edges.iter().any(|&e| !self.edges[e].is_bounded()) {
            return false;
        }
        // Beyond every vertex and loop, ownership no longer changes.
        let mut reach = self.frame.scale;
        for v in &self.vertices {
            reach = reach.max((v.pos - self.frame.origin).norm());
        }
        for e in &self.edges {
            if e.is_loop() {
                for k in 0..8 {
                    let u = -PI + k as f64 * PI / 4.0;
                    reach = reach.max((e.curve.point(u) - self.frame.origin).norm());
                }
            }
        }
        let far = self.frame.origin + Vec2::new(0.6, 0.8) * (10.0 * reach);
        self.owner(far) != cell
    }
}

pub(crate) fn nearest(scene: &[Generator], q: Vec2) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, g) in scene.iter().enumerate() {
        let d = g.distance(q);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

/// Midpoint of a parameter interval; unbounded ends are replaced by a point
/// one unit (then doubling) beyond the finite end.
pub fn representative_param(a: f64, b: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a + 1.0,
        (false, true) => b - 1.0,
        (false, false) => 0.0,
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    // Row-major index of (i, j), i < j, in the strict upper triangle.
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Builds the diagram of `scene` with the given tolerances.
pub fn build_diagram(scene: &[Generator], tol: &Tolerances) -> DiagramGraph {
    let frame = Frame::around(scene.iter().map(|g| g.p));
    build_diagram_in(scene, tol, frame)
}

/// As [`build_diagram`], with an explicit conditioning frame.
pub fn build_diagram_in(scene: &[Generator], tol: &Tolerances, frame: Frame) -> DiagramGraph {
    let n = scene.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let bisectors: Vec<Bisector> =
        pairs.par_iter().map(|&(i, j)| Bisector::new(i, &scene[i], j, &scene[j], &frame, tol.eps_rank)).collect();
    let dedup = tol.eps_dedup * 2.0 * frame.scale;

    let candidates = triple_candidates(scene, &bisectors, &frame, tol, dedup);
    let mut vertices = merge_vertices(candidates, dedup);
    add_line_crossings(scene, &bisectors, tol, dedup, &mut vertices);

    // Vertices incident to each pair.
    let mut on_pair: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (id, v) in vertices.iter().enumerate() {
        for (a, &gi) in v.gens.iter().enumerate() {
            for &gj in &v.gens[a + 1..] {
                on_pair.entry((gi, gj)).or_default().push(id);
            }
        }
    }

    let per_pair: Vec<(Vec<EdgeSegment>, Vec<VertexParam>)> = bisectors
        .par_iter()
        .map(|b| {
            let ids = on_pair.get(&(b.i, b.j)).map_or(&[][..], Vec::as_slice);
            visible_segments(b, ids, &vertices, scene, tol, &frame)
        })
        .collect();

    let mut edges = Vec::new();
    for (segs, params) in per_pair {
        edges.extend(segs);
        for (v, pair, t) in params {
            vertices[v].params.push((pair, t));
        }
    }
    assemble(scene.to_vec(), frame, *tol, vertices, edges)
}

/// Vertex id, generator pair and the vertex parameter on that pair's bisector.
type VertexParam = (usize, (usize, usize), f64);

fn triple_candidates(
    scene: &[Generator],
    bisectors: &[Bisector],
    frame: &Frame,
    tol: &Tolerances,
    dedup: f64,
) -> Vec<(Vec2, [usize; 3])> {
    let n = scene.len();
    let usable = |b: &Bisector| !matches!(b.shape, BisectorShape::Empty | BisectorShape::WholePlane);
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut found = Vec::new();
            for j in i + 1..n {
                let bij = &bisectors[pair_index(n, i, j)];
                if !usable(bij) {
                    continue;
                }
                for k in j + 1..n {
                    let bjk = &bisectors[pair_index(n, j, k)];
                    let bik = &bisectors[pair_index(n, i, k)];
                    if !usable(bjk) || !usable(bik) {
                        continue;
                    }
                    let points = match intersect_conics_in(&bij.implicit, &bjk.implicit, frame, dedup) {
                        Ok(p) => p,
                        Err(IntersectError::OverlappingConics) => {
                            match intersect_conics_in(&bij.implicit, &bik.implicit, frame, dedup) {
                                Ok(p) => p,
                                Err(_) => continue,
                            }
                        }
                    };
                    for q in points {
                        if is_gbpd_vertex(q, [i, j, k], scene, tol.eps_vert) {
                            found.push((q, [i, j, k]));
                        }
                    }
                }
            }
            found.into_iter()
        })
        .collect()
}

/// Collapses candidates closer than `radius` into one vertex whose generator
/// set is the union. Processed in triple order, so the result is
/// independent of scheduling.
fn merge_vertices(candidates: Vec<(Vec2, [usize; 3])>, radius: f64) -> Vec<Vertex> {
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Vec2| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    let mut out: Vec<(Vertex, usize)> = Vec::new();
    for (q, triple) in candidates {
        let (kx, ky) = key(q);
        let mut hit = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                    for &id in list {
                        if out[id].0.pos.distance(q) <= radius {
                            hit = Some(id);
                            break 'search;
                        }
                    }
                }
            }
        }
        match hit {
            Some(id) => {
                let (v, _) = &mut out[id];
                for g in triple {
                    if !v.gens.contains(&g) {
                        v.gens.push(g);
                    }
                }
            }
            None => {
                grid.entry((kx, ky)).or_default().push(out.len());
                out.push((Vertex { pos: q, gens: triple.to_vec(), params: Vec::new() }, 0));
            }
        }
    }
    out.into_iter()
        .map(|(mut v, _)| {
            v.gens.sort_unstable();
            v
        })
        .collect()
}

/// The crossing of a visible pair of intersecting lines is a vertex shared
/// by two cells only.
fn add_line_crossings(
    scene: &[Generator],
    bisectors: &[Bisector],
    tol: &Tolerances,
    radius: f64,
    vertices: &mut Vec<Vertex>,
) {
    for b in bisectors {
        let BisectorShape::Lines { lines, .. } = &b.shape else {
            continue;
        };
        if lines.len() != 2 {
            continue;
        }
        let Some(q) = lines[0].intersect(&lines[1]) else {
            continue;
        };
        let level = 0.5 * (scene[b.i].distance(q) + scene[b.j].distance(q));
        let slack = tol.eps_vert * crate::intersect::distance_scale(q, &[&scene[b.i], &scene[b.j]]);
        if scene.iter().any(|g| g.distance(q) < level - slack) {
            continue;
        }
        if let Some(v) = vertices.iter_mut().find(|v| v.pos.distance(q) <= radius) {
            for g in [b.i, b.j] {
                if !v.gens.contains(&g) {
                    v.gens.push(g);
                }
            }
            v.gens.sort_unstable();
        } else {
            vertices.push(Vertex { pos: q, gens: vec![b.i, b.j], params: Vec::new() });
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Stop {
    Vertex(usize),
    Singular,
}

impl Stop {
    fn endpoint(self) -> Endpoint {
        match self {
            Stop::Vertex(v) => Endpoint::Vertex(v),
            Stop::Singular => Endpoint::Unbounded,
        }
    }
}

/// True iff `q` is strictly closer to `i` and `j` than to every other
/// generator.
pub fn two_nearest_are(scene: &[Generator], q: Vec2, i: usize, j: usize) -> bool {
    if !q.is_finite() {
        return false;
    }
    let level = scene[i].distance(q).max(scene[j].distance(q));
    scene.iter().enumerate().all(|(k, g)| k == i || k == j || g.distance(q) > level)
}

/// Visible pieces of bisector `b` given the ids of the vertices on it.
/// Also returns the parameter each vertex received on this bisector.
pub fn visible_segments(
    b: &Bisector,
    vertex_ids: &[usize],
    vertices: &[Vertex],
    scene: &[Generator],
    tol: &Tolerances,
    frame: &Frame,
) -> (Vec<EdgeSegment>, Vec<VertexParam>) {
    let mut segs = Vec::new();
    let mut params = Vec::new();
    let pair = (b.i, b.j);
    let radius = tol.eps_dedup * 2.0 * frame.scale;
    match &b.shape {
        BisectorShape::Conic(conic) => {
            let curve = EdgeCurve::Conic(conic.clone());
            let mut stops: Vec<(f64, Stop)> = conic.singular_angles().iter().map(|&a| (a, Stop::Singular)).collect();
            for &v in vertex_ids {
                let phi = conic.angle_of_point(vertices[v].pos);
                params.push((v, pair, angle_to_param(phi)));
                stops.push((phi, Stop::Vertex(v)));
            }
            stops.sort_by(|a, b| a.0.total_cmp(&b.0));
            let stops = merge_stops(stops, tol.eps_param, true);
            if stops.is_empty() {
                let seg = make_segment(b, &curve, 0, -PI, PI, Endpoint::Loop, Endpoint::Loop, scene);
                segs.extend(seg);
            } else {
                let m = stops.len();
                for k in 0..m {
                    let (a, sa) = stops[k];
                    let (bb, sb) = if k + 1 < m { stops[k + 1] } else { (stops[0].0 + 2.0 * PI, stops[0].1) };
                    if bb - a <= 0.0 {
                        continue;
                    }
                    segs.extend(make_segment(b, &curve, 0, a, bb, sa.endpoint(), sb.endpoint(), scene));
                }
            }
        }
        BisectorShape::Lines { lines, .. } => {
            for (li, line) in lines.iter().enumerate() {
                let curve = EdgeCurve::Line(*line);
                let mut stops: Vec<(f64, Stop)> = Vec::new();
                for &v in vertex_ids {
                    let pos = vertices[v].pos;
                    if line.distance_to(pos) <= radius.max(1e-9 * (1.0 + pos.norm())) {
                        let s = line.project(pos);
                        params.push((v, pair, s));
                        stops.push((s, Stop::Vertex(v)));
                    }
                }
                stops.sort_by(|a, b| a.0.total_cmp(&b.0));
                let stops = merge_stops(stops, tol.eps_param * (1.0 + frame.scale), false);
                let mut bounds = vec![(f64::NEG_INFINITY, Stop::Singular)];
                bounds.extend(stops);
                bounds.push((f64::INFINITY, Stop::Singular));
                for w in bounds.windows(2) {
                    let (a, sa) = w[0];
                    let (bb, sb) = w[1];
                    if !(bb > a) {
                        continue;
                    }
                    segs.extend(make_segment(b, &curve, li, a, bb, sa.endpoint(), sb.endpoint(), scene));
                }
            }
        }
        BisectorShape::Empty | BisectorShape::WholePlane => {}
    }
    (segs, params)
}

/// Drops stops within `eps` of their predecessor, keeping vertices over
/// singular markers. With `circular`, the last stop is also compared
/// against the first across the `±π` seam.
fn merge_stops(stops: Vec<(f64, Stop)>, eps: f64, circular: bool) -> Vec<(f64, Stop)> {
    let mut out: Vec<(f64, Stop)> = Vec::with_capacity(stops.len());
    for s in stops {
        match out.last_mut() {
            Some(last) if s.0 - last.0 <= eps => {
                if matches!(last.1, Stop::Singular) {
                    last.1 = s.1;
                }
            }
            _ => out.push(s),
        }
    }
    if circular && out.len() > 1 {
        let first = out[0].0;
        let last = out[out.len() - 1];
        if first + 2.0 * PI - last.0 <= eps {
            out.pop();
            if matches!(out[0].1, Stop::Singular) {
                out[0].1 = last.1;
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn make_segment(
    b: &Bisector,
    curve: &EdgeCurve,
    line: usize,
    u_a: f64,
    u_b: f64,
    start: Endpoint,
    end: Endpoint,
    scene: &[Generator],
) -> Option<EdgeSegment> {
    let u = representative_param(u_a, u_b);
    let q = curve.point(u);
    if !two_nearest_are(scene, q, b.i, b.j) {
        return None;
    }
    // E = dᵢ − dⱼ is positive on the side of j.
    let normal_left = curve.derivative(u).perp();
    let (left, right) = if b.implicit.gradient(q).dot(normal_left) > 0.0 { (b.j, b.i) } else { (b.i, b.j) };
    Some(EdgeSegment {
        pair: (b.i, b.j),
        line,
        conic: b.implicit,
        curve: curve.clone(),
        u_a,
        u_b,
        start,
        end,
        left,
        right,
    })
}

fn assemble(
    generators: Vec<Generator>,
    frame: Frame,
    tolerances: Tolerances,
    vertices: Vec<Vertex>,
    mut edges: Vec<EdgeSegment>,
) -> DiagramGraph {
    let n = generators.len();
    // Keep vertices that terminate at least one edge; renumber in order.
    let mut used = vec![false; vertices.len()];
    for e in &edges {
        for end in [e.start, e.end] {
            if let Endpoint::Vertex(v) = end {
                used[v] = true;
            }
        }
    }
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    for (old, v) in vertices.into_iter().enumerate() {
        if used[old] {
            remap[old] = kept.len();
            let mut v = v;
            v.params.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            kept.push(v);
        }
    }
    for e in &mut edges {
        for end in [&mut e.start, &mut e.end] {
            if let Endpoint::Vertex(v) = end {
                *v = remap[*v];
            }
        }
    }
    edges.sort_by(|a, b| a.pair.cmp(&b.pair).then(a.line.cmp(&b.line)).then(a.u_a.total_cmp(&b.u_a)));

    let adjacency: Vec<(usize, usize)> = edges.iter().map(|e| e.pair).collect::<BTreeSet<_>>().into_iter().collect();

    let mut cell_edges = vec![Vec::new(); n];
    for (id, e) in edges.iter().enumerate() {
        cell_edges[e.pair.0].push(id);
        cell_edges[e.pair.1].push(id);
    }
    let cells = cell_edges
        .into_iter()
        .enumerate()
        .map(|(id, list)| {
            let components = boundary_components(&list, &edges);
            Cell { id, empty: n >= 2 && list.is_empty(), edges: list, components }
        })
        .collect();

    DiagramGraph { generators, frame, tolerances, vertices: kept, edges, cells, adjacency }
}

/// Groups edges into components that are connected through shared vertices.
fn boundary_components(list: &[usize], edges: &[EdgeSegment]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..list.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut by_vertex: HashMap<usize, usize> = HashMap::new();
    for (k, &e) in list.iter().enumerate() {
        for end in [edges[e].start, edges[e].end] {
            if let Endpoint::Vertex(v) = end {
                match by_vertex.get(&v) {
                    Some(&other) => {
                        let (ra, rb) = (find(&mut parent, k), find(&mut parent, other));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                    None => {
                        by_vertex.insert(v, k);
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (k, &e) in list.iter().enumerate() {
        let r = find(&mut parent, k);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(e);
    }
    groups
}
