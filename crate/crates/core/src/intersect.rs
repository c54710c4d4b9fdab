//! Conic–conic intersection through a degenerate member of the pencil
//! `C₁ + λC₂`, and the vertex membership test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bisector::{ConicImplicit, EPS_RES};
use crate::generator::Generator;
use crate::geometry::{adjugate3, det3, frobenius3, solve_quadratic, Frame, Line2, Vec2};

/// Dedup radius relative to the frame diameter.
pub const EPS_DEDUP: f64 = 1e-6;
pub const EPS_VERT: f64 = 1e-9;

/// Relative determinant below which a homogeneous conic counts as degenerate.
const DEGENERATE_DET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntersectError {
    #[error("conics share a curve component; the intersection is not finite")]
    OverlappingConics,
}

/// A point equidistant to three or more generators with no generator closer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub pos: Vec2,
    /// Scene indices, ascending.
    pub gens: Vec<usize>,
    /// Parameter of the vertex on the bisector of each generator pair.
    pub params: Vec<((usize, usize), f64)>,
}

/// All real intersection points, in a frame picked from the two conics.
pub fn conic_conic_intersections(c1: &ConicImplicit, c2: &ConicImplicit) -> Result<Vec<Vec2>, IntersectError> {
    let f1 = c1.balancing_frame();
    let f2 = c2.balancing_frame();
    let frame = Frame::new(Vec2::ZERO, (f1.scale * f2.scale).sqrt());
    intersect_conics_in(c1, c2, &frame, EPS_DEDUP * 2.0 * frame.scale)
}

/// All real intersection points of `c1` and `c2`, computed in `frame` and
/// deduplicated within `dedup` (world units). Sorted by `x`, then `y`.
pub fn intersect_conics_in(
    c1: &ConicImplicit,
    c2: &ConicImplicit,
    frame: &Frame,
    dedup: f64,
) -> Result<Vec<Vec2>, IntersectError> {
    let l1 = normalized(&c1.in_frame(frame));
    let l2 = normalized(&c2.in_frame(frame));
    let (Some(l1), Some(l2)) = (l1, l2) else {
        return Err(IntersectError::OverlappingConics);
    };
    let d1 = l1.homogeneous();
    let d2 = l2.homogeneous();
    if same_up_to_sign(&d1, &d2) {
        return Err(IntersectError::OverlappingConics);
    }

    let (member, other) = degenerate_member(&d1, &d2, &l1, &l2);
    let mut candidates = Vec::new();
    match split_degenerate(&member) {
        Split::Lines(lines) => {
            for l in lines {
                intersect_line(&l, &other, &mut candidates)?;
            }
        }
        Split::Point(p) => {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if p[2].abs() > 1e-12 * n {
                candidates.push(Vec2::new(p[0] / p[2], p[1] / p[2]));
            }
        }
    }

    let local_dedup = dedup / frame.scale;
    let mut out: Vec<Vec2> = Vec::with_capacity(4);
    for q in candidates {
        let q = polish(&l1, &l2, q);
        if !q.is_finite() || l1.scaled_residual(q) > EPS_RES || l2.scaled_residual(q) > EPS_RES {
            continue;
        }
        if out.iter().all(|p| p.distance(q) > local_dedup) {
            out.push(q);
        }
    }
    let mut out: Vec<Vec2> = out.into_iter().map(|q| frame.to_world(q)).collect();
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    Ok(out)
}

fn normalized(c: &ConicImplicit) -> Option<ConicImplicit> {
    let m = c.max_coefficient();
    (m > 0.0 && m.is_finite()).then(|| c.scaled(1.0 / m))
}

fn same_up_to_sign(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> bool {
    let mut diff = 0.0f64;
    let mut sum = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            diff = diff.max((a[i][j] - b[i][j]).abs());
            sum = sum.max((a[i][j] + b[i][j]).abs());
        }
    }
    diff <= 1e-12 || sum <= 1e-12
}

fn relative_det(d: &[[f64; 3]; 3]) -> f64 {
    let n = frobenius3(d);
    det3(d).abs() / (n * n * n)
}

/// Picks a degenerate conic through the intersection points and the conic
/// its lines are intersected with.
fn degenerate_member(
    d1: &[[f64; 3]; 3],
    d2: &[[f64; 3]; 3],
    l1: &ConicImplicit,
    l2: &ConicImplicit,
) -> ([[f64; 3]; 3], ConicImplicit) {
    if relative_det(d2) <= DEGENERATE_DET {
        return (*d2, *l1);
    }
    if relative_det(d1) <= DEGENERATE_DET {
        return (*d1, *l2);
    }
    // det(D₁ + λD₂) = det D₁ + λ tr(adj(D₁) D₂) + λ² tr(D₁ adj(D₂)) + λ³ det D₂
    let adj1 = adjugate3(d1);
    let adj2 = adjugate3(d2);
    let tr = |a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]| {
        let mut s = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                s += a[i][k] * b[k][i];
            }
        }
        s
    };
    let coeffs = [det3(d1), tr(&adj1, d2), tr(d1, &adj2), det3(d2)];
    let roots = solve_cubic(coeffs);

    // Prefer the member farthest from rank one: the line split is most stable there.
    let mut best: Option<([[f64; 3]; 3], f64)> = None;
    for lambda in roots {
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = d1[i][j] + lambda * d2[i][j];
            }
        }
        let n = frobenius3(&g);
        if n == 0.0 {
            continue;
        }
        let margin = frobenius3(&adjugate3(&g)) / (n * n);
        if best.as_ref().is_none_or(|(_, m)| margin > *m) {
            best = Some((g, margin));
        }
    }
    match best {
        Some((g, _)) => (g, *l1),
        None => (*d2, *l1),
    }
}

/// Real roots of `c₀ + c₁λ + c₂λ² + c₃λ³` (`c₃ ≠ 0`), polished by Newton.
pub(crate) fn solve_cubic(c: [f64; 4]) -> Vec<f64> {
    let [d, cc, b, a] = c;
    let (b, cc, d) = (b / a, cc / a, d / a);
    // Depressed cubic x = y − b/3: y³ + p y + q = 0.
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let mut roots = Vec::with_capacity(3);
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if p.abs() < 1e-300 && q.abs() < 1e-300 {
        roots.push(-shift);
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        roots.push(u + v - shift);
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = if r > 0.0 { (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0) } else { 0.0 };
        let theta = arg.acos() / 3.0;
        for k in 0..3 {
            roots.push(2.0 * r * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift);
        }
    }
    let f = |x: f64| ((x + b) * x + cc) * x + d;
    let df = |x: f64| (3.0 * x + 2.0 * b) * x + cc;
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let fd = df(*r);
            if fd == 0.0 {
                break;
            }
            let step = f(*r) / fd;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

enum Split {
    Lines(Vec<[f64; 3]>),
    /// Complex conjugate line pair; only their common point is real.
    Point([f64; 3]),
}

/// Splits a (numerically) rank ≤ 2 symmetric matrix into its lines via the
/// adjugate: for `G = l mᵀ + m lᵀ`, `adj G = −p pᵀ` with `p = l × m`, and
/// `G + [p]ₓ` has rank one with row/column `l`, `m`.
fn split_degenerate(g: &[[f64; 3]; 3]) -> Split {
    let n = frobenius3(g);
    let b = adjugate3(g);
    let i = (0..3).max_by(|&x, &y| b[x][x].abs().total_cmp(&b[y][y].abs())).unwrap();
    if b[i][i].abs() <= 1e-10 * n * n {
        // Double line: G = ±l lᵀ.
        let k = (0..3).max_by(|&x, &y| g[x][x].abs().total_cmp(&g[y][y].abs())).unwrap();
        let s = g[k][k].abs().sqrt();
        if s == 0.0 {
            return Split::Lines(Vec::new());
        }
        return Split::Lines(vec![[g[k][0] / s, g[k][1] / s, g[k][2] / s]]);
    }
    if b[i][i] > 0.0 {
        let s = b[i][i].sqrt();
        return Split::Point([b[0][i] / s, b[1][i] / s, b[2][i] / s]);
    }
    let beta = (-b[i][i]).sqrt();
    let p = [-b[0][i] / beta, -b[1][i] / beta, -b[2][i] / beta];
    let cross = [[0.0, -p[2], p[1]], [p[2], 0.0, -p[0]], [-p[1], p[0], 0.0]];
    let mut c = [[0.0; 3]; 3];
    let (mut r, mut col, mut big) = (0, 0, -1.0);
    for a in 0..3 {
        for k in 0..3 {
            c[a][k] = g[a][k] + cross[a][k];
            if c[a][k].abs() > big {
                big = c[a][k].abs();
                r = a;
                col = k;
            }
        }
    }
    let l = c[r];
    let m = [c[0][col], c[1][col], c[2][col]];
    Split::Lines(vec![l, m])
}

fn intersect_line(l: &[f64; 3], conic: &ConicImplicit, out: &mut Vec<Vec2>) -> Result<(), IntersectError> {
    let norm = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
    if l[0].hypot(l[1]) <= 1e-12 * norm {
        return Ok(());
    }
    let Some(line) = Line2::from_coefficients(l[0], l[1], l[2]) else {
        return Ok(());
    };
    let (p0, d) = (line.origin, line.dir);
    let alpha = conic.a11 * d.x * d.x + 2.0 * conic.a12 * d.x * d.y + conic.a22 * d.y * d.y;
    let beta = conic.gradient(p0).dot(d);
    let gamma = conic.eval(p0);
    let scale = 1.0 + conic.magnitude(p0);
    if alpha.abs().max(beta.abs()).max(gamma.abs()) <= 1e-11 * scale {
        return Err(IntersectError::OverlappingConics);
    }
    for s in solve_quadratic(alpha, beta, gamma) {
        out.push(line.point_at(s));
    }
    Ok(())
}

/// Newton iterations on `(E₁, E₂) = 0`; keeps the best point seen.
fn polish(c1: &ConicImplicit, c2: &ConicImplicit, mut q: Vec2) -> Vec2 {
    let res = |p: Vec2| c1.scaled_residual(p) + c2.scaled_residual(p);
    let mut best = res(q);
    for _ in 0..6 {
        if best == 0.0 {
            break;
        }
        let (g1, g2) = (c1.gradient(q), c2.gradient(q));
        let det = g1.cross(g2);
        if det.abs() <= 1e-14 * (g1.norm() * g2.norm()) || det == 0.0 {
            break;
        }
        let (e1, e2) = (c1.eval(q), c2.eval(q));
        let step = Vec2::new((-e1 * g2.y + e2 * g1.y) / det, (-e2 * g1.x + e1 * g2.x) / det);
        let next = q + step;
        let r = res(next);
        if !(r < best) {
            break;
        }
        q = next;
        best = r;
    }
    q
}

/// Distance scale at `v` used for vertex tolerances.
pub fn distance_scale(v: Vec2, gens: &[&Generator]) -> f64 {
    1.0 + gens.iter().map(|g| g.m.quad_form(v - g.p) + g.w.abs()).fold(0.0f64, f64::max)
}

/// True iff no generator is closer to `v` than the triple (within `eps`,
/// relative to [`distance_scale`]).
pub fn is_gbpd_vertex(v: Vec2, triple: [usize; 3], scene: &[Generator], eps: f64) -> bool {
    let gens = triple.map(|k| &scene[k]);
    let level = gens.iter().map(|g| g.distance(v)).sum::<f64>() / 3.0;
    let tol = eps * distance_scale(v, &gens);
    scene.iter().all(|g| g.distance(v) >= level - tol)
}
