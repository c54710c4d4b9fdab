//! Bisector conics between two generators and their rational
//! parametrization.
//!
//! The implicit form `a11 x² + 2 a12 xy + a22 y² + b11 x + b12 y + c = 0` is
//! homogenized into a symmetric 3×3 matrix `D`, which is orthogonally
//! diagonalized. Rank-deficient `D` splits into lines. Otherwise the
//! eigenvalues are brought to the sign pattern `(+, +, −)` by a global
//! negation and a permutation of eigenvector columns, and the conic is
//!
//! ```text
//! (x̂, ŷ, û)(t) = T · ((1 − t²) μ₁, 2t μ₂, (1 + t²) μ₃),   μₖ = 1/√|λₖ|
//! x(t) = x̂(t)/û(t),  y(t) = ŷ(t)/û(t).
//! ```
//!
//! Internally points are addressed by the angle `φ = 2 atan t`, for which the
//! homogeneous point is `K (cos φ, sin φ, 1)` with `K = F T diag(μ)` and `F`
//! the conditioning frame. The angle domain is a circle; `φ = π` is the point
//! `t = ±∞`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::Generator;
use crate::geometry::{mat3_mul, mat3_vec, wrap_angle, Frame, Line2, Vec2};

pub const EPS_RANK: f64 = 1e-10;
pub const EPS_DEN: f64 = 1e-12;
pub const EPS_RES: f64 = 1e-8;

/// Relative tolerance on `|c| / √(a² + b²)` of `û(φ) = a cos φ + b sin φ + c`
/// below which the conic is taken to touch the line at infinity once.
const PARABOLA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BisectorError {
    #[error("parameter {t} maps to the line at infinity")]
    SingularParameter { t: f64 },
    #[error("point ({}, {}) does not lie on the conic", .point.x, .point.y)]
    NoSolution { point: Vec2 },
}

/// `a11 x² + 2 a12 xy + a22 y² + b11 x + b12 y + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicImplicit {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    pub b11: f64,
    pub b12: f64,
    pub c: f64,
}

impl ConicImplicit {
    pub const fn new(a11: f64, a12: f64, a22: f64, b11: f64, b12: f64, c: f64) -> Self {
        Self { a11, a12, a22, b11, b12, c }
    }

    /// Points where `gi` and `gj` are equally far: `A = Mᵢ − Mⱼ`,
    /// `B = −2(Mᵢpᵢ − Mⱼpⱼ)`, `c = pᵢᵀMᵢpᵢ − pⱼᵀMⱼpⱼ − wᵢ + wⱼ`.
    pub fn between(gi: &Generator, gj: &Generator) -> Self {
        let a = gi.m - gj.m;
        let mpi = gi.m.mul_vec(gi.p);
        let mpj = gj.m.mul_vec(gj.p);
        let c = gi.m.quad_form(gi.p) - gj.m.quad_form(gj.p) - gi.w + gj.w;
        Self::new(a.m11, a.m12, a.m22, -2.0 * (mpi.x - mpj.x), -2.0 * (mpi.y - mpj.y), c)
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a11, self.a12, self.a22, self.b11, self.b12, self.c]
    }

    pub fn from_coefficients(v: [f64; 6]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    #[inline]
    pub fn eval(&self, p: Vec2) -> f64 {
        let (x, y) = (p.x, p.y);
        self.a11 * x * x + 2.0 * self.a12 * x * y + self.a22 * y * y + self.b11 * x + self.b12 * y + self.c
    }

    #[inline]
    pub fn gradient(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            2.0 * (self.a11 * p.x + self.a12 * p.y) + self.b11,
            2.0 * (self.a12 * p.x + self.a22 * p.y) + self.b12,
        )
    }

    /// Sum of the absolute values of the individual terms at `p`; the natural
    /// scale for residuals.
    pub fn magnitude(&self, p: Vec2) -> f64 {
        let (x, y) = (p.x.abs(), p.y.abs());
        self.a11.abs() * x * x
            + 2.0 * self.a12.abs() * x * y
            + self.a22.abs() * y * y
            + self.b11.abs() * x
            + self.b12.abs() * y
            + self.c.abs()
    }

    /// `|E(p)| / (1 + magnitude(p))`.
    pub fn scaled_residual(&self, p: Vec2) -> f64 {
        self.eval(p).abs() / (1.0 + self.magnitude(p))
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coefficients().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let v = self.coefficients().map(|x| x * s);
        Self::from_coefficients(v)
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// `a12² − a11 a22`: negative for ellipses, positive for hyperbolas.
    pub fn discriminant(&self) -> f64 {
        self.a12 * self.a12 - self.a11 * self.a22
    }

    /// The symmetric matrix `D` with `(x, y, 1) D (x, y, 1)ᵀ = E(x, y)`.
    pub fn homogeneous(&self) -> [[f64; 3]; 3] {
        [
            [self.a11, self.a12, 0.5 * self.b11],
            [self.a12, self.a22, 0.5 * self.b12],
            [0.5 * self.b11, 0.5 * self.b12, self.c],
        ]
    }

    pub fn from_homogeneous(d: &[[f64; 3]; 3]) -> Self {
        Self::new(d[0][0], 0.5 * (d[0][1] + d[1][0]), d[1][1], d[0][2] + d[2][0], d[1][2] + d[2][1], d[2][2])
    }

    /// Coefficients in the local coordinates of `frame`.
    pub fn in_frame(&self, frame: &Frame) -> Self {
        let s = frame.scale;
        let o = frame.origin;
        let g = self.gradient(o);
        Self::new(self.a11 * s * s, self.a12 * s * s, self.a22 * s * s, g.x * s, g.y * s, self.eval(o))
    }

    /// A frame that balances the quadratic, linear and constant terms.
    pub fn balancing_frame(&self) -> Frame {
        let alpha = self.a11.abs().max(self.a12.abs()).max(self.a22.abs());
        let beta = self.b11.abs().max(self.b12.abs());
        let gamma = self.c.abs();
        let s = if alpha > 0.0 && gamma > 0.0 {
            (gamma / alpha).sqrt()
        } else if alpha > 0.0 && beta > 0.0 {
            beta / alpha
        } else if beta > 0.0 && gamma > 0.0 {
            gamma / beta
        } else {
            1.0
        };
        if s.is_finite() && s > 0.0 {
            Frame::new(Vec2::ZERO, s)
        } else {
            Frame::default()
        }
    }
}

/// `bisector_implicit`.
pub fn bisector_implicit(gi: &Generator, gj: &Generator) -> ConicImplicit {
    ConicImplicit::between(gi, gj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConicClass {
    Ellipse,
    Hyperbola,
    Parabola,
    SingleLine,
    TwoParallelLines,
    TwoIntersectingLines,
    Empty,
    WholePlane,
}

impl ConicClass {
    pub fn is_line(&self) -> bool {
        matches!(self, ConicClass::SingleLine | ConicClass::TwoParallelLines | ConicClass::TwoIntersectingLines)
    }
}

/// Rational quadratic parametrization of a non-degenerate real conic.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrizedConic {
    class: ConicClass,
    /// Maps `(cos φ, sin φ, 1)` to world homogeneous coordinates.
    k: [[f64; 3]; 3],
    k_inv: [[f64; 3]; 3],
    singular_angles: Vec<f64>,
    lambdas: [f64; 3],
    mus: [f64; 3],
}

impl ParametrizedConic {
    pub fn class(&self) -> ConicClass {
        self.class
    }

    /// Canonical eigenvalues (signs `+, +, −`, normalized conic) and the
    /// matching `μₖ = 1/√|λₖ|`.
    pub fn canonical_form(&self) -> ([f64; 3], [f64; 3]) {
        (self.lambdas, self.mus)
    }

    /// Coefficients `(c₀, c₁, c₂)` of `x̂(t)`, `ŷ(t)`, `û(t)` (rows 0, 1, 2).
    pub fn polynomial(&self, row: usize) -> [f64; 3] {
        let r = self.k[row];
        [r[0] + r[2], 2.0 * r[1], r[2] - r[0]]
    }

    pub fn x_hat(&self) -> [f64; 3] {
        self.polynomial(0)
    }

    pub fn y_hat(&self) -> [f64; 3] {
        self.polynomial(1)
    }

    pub fn u_hat(&self) -> [f64; 3] {
        self.polynomial(2)
    }

    /// Real roots of `û(t)`, ascending; `+∞` stands for a root at `t = ±∞`.
    pub fn singular_params(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.singular_angles.iter().map(|&a| angle_to_param(a)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Roots of `û` as angles in `[-π, π)`, ascending.
    pub fn singular_angles(&self) -> &[f64] {
        &self.singular_angles
    }

    /// Cartesian point for parameter `t` (`±∞` gives the limit point).
    pub fn eval_param(&self, t: f64) -> Result<Vec2, BisectorError> {
        if t.is_infinite() {
            // Leading coefficients, i.e. K·(−1, 0, 1).
            let z = [self.x_hat()[2], self.y_hat()[2], self.u_hat()[2]];
            let scale = self.k[2][0].abs() + self.k[2][2].abs();
            if z[2].abs() <= EPS_DEN * scale {
                return Err(BisectorError::SingularParameter { t });
            }
            return Ok(Vec2::new(z[0] / z[2], z[1] / z[2]));
        }
        let eval = |c: [f64; 3]| c[0] + t * (c[1] + t * c[2]);
        let u = self.u_hat();
        let uh = eval(u);
        let scale = u[0].abs() + u[1].abs() * t.abs() + u[2].abs() * t * t;
        if uh.abs() <= EPS_DEN * scale {
            return Err(BisectorError::SingularParameter { t });
        }
        Ok(Vec2::new(eval(self.x_hat()) / uh, eval(self.y_hat()) / uh))
    }

    pub fn homogeneous_at_angle(&self, phi: f64) -> [f64; 3] {
        let (s, c) = phi.sin_cos();
        mat3_vec(&self.k, [c, s, 1.0])
    }

    /// Point at angle `φ`. Not finite at singular angles.
    #[inline]
    pub fn point_at_angle(&self, phi: f64) -> Vec2 {
        let z = self.homogeneous_at_angle(phi);
        Vec2::new(z[0] / z[2], z[1] / z[2])
    }

    /// `dP/dφ`.
    pub fn derivative_at_angle(&self, phi: f64) -> Vec2 {
        let (s, c) = phi.sin_cos();
        let z = mat3_vec(&self.k, [c, s, 1.0]);
        let dz = mat3_vec(&self.k, [-s, c, 0.0]);
        let inv = 1.0 / (z[2] * z[2]);
        Vec2::new((dz[0] * z[2] - z[0] * dz[2]) * inv, (dz[1] * z[2] - z[1] * dz[2]) * inv)
    }

    /// Angle of a point lying on the conic.
    pub fn angle_of_point(&self, v: Vec2) -> f64 {
        let z = mat3_vec(&self.k_inv, [v.x, v.y, 1.0]);
        let s = z[2].signum();
        wrap_angle((z[1] * s).atan2(z[0] * s))
    }

    /// `(ζ₀² + ζ₁² − ζ₂²) / (ζ₀² + ζ₁² + ζ₂²)` for `ζ = K⁻¹(v, 1)`; zero on the conic.
    pub fn canonical_residual(&self, v: Vec2) -> f64 {
        let z = mat3_vec(&self.k_inv, [v.x, v.y, 1.0]);
        let a = z[0] * z[0] + z[1] * z[1];
        let b = z[2] * z[2];
        (a - b) / (a + b)
    }

    /// `û` at angle `φ` up to the positive factor `1 + t²`.
    pub fn u_at_angle(&self, phi: f64) -> f64 {
        self.homogeneous_at_angle(phi)[2]
    }

    /// All real `t` whose image lies within `eps·(1 + |v|)` of `v`, from the
    /// quadratics `v.x û(t) − x̂(t)` and `v.y û(t) − ŷ(t)`.
    pub fn param_of_point(&self, v: Vec2, eps: f64) -> Result<Vec<f64>, BisectorError> {
        let tol = eps * (1.0 + v.norm());
        let u = self.u_hat();
        let mut candidates = Vec::new();
        for (coord, poly) in [(v.x, self.x_hat()), (v.y, self.y_hat())] {
            let q = [coord * u[0] - poly[0], coord * u[1] - poly[1], coord * u[2] - poly[2]];
            let scale = (coord.abs() + 1.0) * u.iter().chain(poly.iter()).fold(0.0f64, |m, c| m.max(c.abs()));
            if q.iter().all(|c| c.abs() <= 1e-14 * scale) {
                continue;
            }
            candidates.extend(crate::geometry::solve_quadratic(q[2], q[1], q[0]));
            if q[2].abs() <= 1e-10 * q.iter().fold(0.0f64, |m, c| m.max(c.abs())) {
                candidates.push(f64::INFINITY);
            }
        }
        let mut found: Vec<f64> = Vec::new();
        for t in candidates {
            let t = if t.is_finite() { self.refine_param(t, v) } else { t };
            let Ok(p) = self.eval_param(t) else { continue };
            if (p - v).norm() > tol {
                continue;
            }
            let dup =
                found.iter().any(|&f| (f.is_infinite() && t.is_infinite()) || (f - t).abs() <= 1e-9 * (1.0 + t.abs()));
            if !dup {
                found.push(t);
            }
        }
        if found.is_empty() {
            return Err(BisectorError::NoSolution { point: v });
        }
        found.sort_by(f64::total_cmp);
        Ok(found)
    }

    /// Gauss-Newton polish of `t` towards the point `v`.
    fn refine_param(&self, mut t: f64, v: Vec2) -> f64 {
        for _ in 0..3 {
            let phi = param_to_angle(t);
            let p = self.point_at_angle(phi);
            let d = self.derivative_at_angle(phi);
            let dd = d.norm_sq();
            if !(dd > 0.0) || !p.is_finite() {
                break;
            }
            let step = (v - p).dot(d) / dd;
            let next = wrap_angle(phi + step);
            let nt = angle_to_param(next);
            if !nt.is_finite() {
                break;
            }
            t = nt;
        }
        t
    }

    /// Arcs of the parameter circle between consecutive singular angles.
    /// Ellipses yield a single arc of length 2π starting at `φ = π`.
    pub fn branches(&self) -> Vec<(f64, f64)> {
        let s = &self.singular_angles;
        match s.len() {
            0 => vec![(-PI, PI)],
            1 => vec![(s[0], s[0] + 2.0 * PI)],
            _ => {
                let mut out = Vec::new();
                for i in 0..s.len() {
                    let a = s[i];
                    let b = if i + 1 < s.len() { s[i + 1] } else { s[0] + 2.0 * PI };
                    out.push((a, b));
                }
                out
            }
        }
    }
}

/// `t = tan(φ/2)`, with `φ = ±π` mapped to `+∞`.
pub fn angle_to_param(phi: f64) -> f64 {
    let phi = wrap_angle(phi);
    if (phi + PI).abs() <= 4.0 * f64::EPSILON {
        f64::INFINITY
    } else {
        (0.5 * phi).tan()
    }
}

/// `φ = 2 atan t`, with `±∞` mapped to `π`.
pub fn param_to_angle(t: f64) -> f64 {
    if t.is_infinite() {
        -PI
    } else {
        2.0 * t.atan()
    }
}

/// Geometric content of a bisector.
#[derive(Debug, Clone, PartialEq)]
pub enum BisectorShape {
    Conic(ParametrizedConic),
    Lines { class: ConicClass, lines: Vec<Line2> },
    Empty,
    WholePlane,
}

impl BisectorShape {
    pub fn class(&self) -> ConicClass {
        match self {
            BisectorShape::Conic(c) => c.class(),
            BisectorShape::Lines { class, .. } => *class,
            BisectorShape::Empty => ConicClass::Empty,
            BisectorShape::WholePlane => ConicClass::WholePlane,
        }
    }

    /// Points spread over every component: `n` per conic, `n` per line
    /// across `[-span, span]` around the line origin.
    pub fn sample(&self, n: usize, span: f64) -> Vec<Vec2> {
        match self {
            BisectorShape::Conic(c) => {
                let mut out = Vec::new();
                let branches = c.branches();
                let per = n.div_ceil(branches.len()).max(1);
                for (a, b) in branches {
                    for k in 0..per {
                        let f = (k as f64 + 0.5) / per as f64;
                        out.push(c.point_at_angle(a + f * (b - a)));
                    }
                }
                out.truncate(n.max(1));
                out
            }
            BisectorShape::Lines { lines, .. } => lines
                .iter()
                .flat_map(|l| {
                    (0..n).map(move |k| {
                        let f = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.5 };
                        l.point_at(-span + 2.0 * span * f)
                    })
                })
                .collect(),
            BisectorShape::Empty | BisectorShape::WholePlane => Vec::new(),
        }
    }
}

/// Classification and parametrization in the conic's own balancing frame.
pub fn classify_and_parametrize(c: &ConicImplicit, eps_rank: f64) -> BisectorShape {
    classify_and_parametrize_in(c, &c.balancing_frame(), eps_rank)
}

/// Classification and parametrization, computed in the local coordinates of
/// `frame` and mapped back.
pub fn classify_and_parametrize_in(c: &ConicImplicit, frame: &Frame, eps_rank: f64) -> BisectorShape {
    let local = c.in_frame(frame);
    let norm = local.max_coefficient();
    if norm == 0.0 || !norm.is_finite() {
        return BisectorShape::WholePlane;
    }
    let local = local.scaled(1.0 / norm);
    let d = local.homogeneous();
    let eig = Matrix3::from_fn(|i, j| d[i][j]).symmetric_eigen();
    let values = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    let vector = |k: usize| [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)], eig.eigenvectors[(2, k)]];
    let lmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lmax == 0.0 {
        return BisectorShape::WholePlane;
    }
    let significant: Vec<usize> = (0..3).filter(|&k| values[k].abs() > eps_rank * lmax).collect();

    match significant.len() {
        3 => {
            let positive = values.iter().filter(|v| **v > 0.0).count();
            if positive == 0 || positive == 3 {
                return BisectorShape::Empty;
            }
            let sign = if positive == 2 { 1.0 } else { -1.0 };
            let mut order: Vec<usize> = (0..3).collect();
            // Two positive eigenvalues first (larger first), then the negative one.
            order.sort_by(|&a, &b| (sign * values[b]).total_cmp(&(sign * values[a])));
            let vecs = [vector(order[0]), vector(order[1]), vector(order[2])];
            let lambdas = [sign * values[order[0]], sign * values[order[1]], sign * values[order[2]]];
            let mus = lambdas.map(|l| 1.0 / l.abs().sqrt());
            // K = F T diag(μ), K⁻¹ = diag(1/μ) Tᵀ F⁻¹ (T orthogonal).
            let mut tm = [[0.0; 3]; 3];
            let mut tinv = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    tm[r][c] = vecs[c][r] * mus[c];
                    tinv[r][c] = vecs[r][c] / mus[r];
                }
            }
            let k = mat3_mul(&frame.matrix(), &tm);
            let k_inv = mat3_mul(&tinv, &frame.inverse_matrix());

            let u = [k[2][0], k[2][1], k[2][2]];
            let r = u[0].hypot(u[1]);
            let ratio = if r > 0.0 { u[2].abs() / r } else { f64::INFINITY };
            let psi = u[1].atan2(u[0]);
            let (class, mut singular) = if ratio > 1.0 + PARABOLA_TOL {
                (ConicClass::Ellipse, Vec::new())
            } else if ratio >= 1.0 - PARABOLA_TOL {
                let phi = if -u[2] / r > 0.0 { psi } else { psi + PI };
                (ConicClass::Parabola, vec![wrap_angle(phi)])
            } else {
                let delta = (-u[2] / r).clamp(-1.0, 1.0).acos();
                (ConicClass::Hyperbola, vec![wrap_angle(psi - delta), wrap_angle(psi + delta)])
            };
            singular.sort_by(f64::total_cmp);
            BisectorShape::Conic(ParametrizedConic { class, k, k_inv, singular_angles: singular, lambdas, mus })
        }
        2 => {
            let (ka, kb) = (significant[0], significant[1]);
            if values[ka].signum() == values[kb].signum() {
                // Complex conjugate pair: at most one real point.
                return BisectorShape::Empty;
            }
            let (kp, kn) = if values[ka] > 0.0 { (ka, kb) } else { (kb, ka) };
            let p = vector(kp).map(|x| x * values[kp].abs().sqrt());
            let n = vector(kn).map(|x| x * values[kn].abs().sqrt());
            let candidates = [[p[0] - n[0], p[1] - n[1], p[2] - n[2]], [p[0] + n[0], p[1] + n[1], p[2] + n[2]]];
            let lines: Vec<Line2> = candidates.iter().filter_map(|l| local_line_to_world(l, frame)).collect();
            lines_shape(lines)
        }
        1 => {
            let l = vector(significant[0]);
            match local_line_to_world(&l, frame) {
                Some(line) => BisectorShape::Lines { class: ConicClass::SingleLine, lines: vec![line] },
                None => BisectorShape::Empty,
            }
        }
        _ => BisectorShape::WholePlane,
    }
}

fn lines_shape(lines: Vec<Line2>) -> BisectorShape {
    match lines.len() {
        0 => BisectorShape::Empty,
        1 => BisectorShape::Lines { class: ConicClass::SingleLine, lines },
        _ => {
            let parallel = lines[0].dir.cross(lines[1].dir).abs() <= 1e-12;
            let class = if parallel { ConicClass::TwoParallelLines } else { ConicClass::TwoIntersectingLines };
            BisectorShape::Lines { class, lines }
        }
    }
}

/// Converts a homogeneous local line to a world [`Line2`]; `None` for the
/// line at infinity.
fn local_line_to_world(l: &[f64; 3], frame: &Frame) -> Option<Line2> {
    let norm = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
    if l[0].hypot(l[1]) <= 1e-9 * norm {
        return None;
    }
    let local = Line2::from_coefficients(l[0], l[1], l[2])?;
    Some(Line2 { origin: frame.to_world(local.origin), dir: local.dir })
}

/// The bisector of generators `i < j` (scene indices).
#[derive(Debug, Clone, PartialEq)]
pub struct Bisector {
    pub i: usize,
    pub j: usize,
    pub implicit: ConicImplicit,
    pub shape: BisectorShape,
}

impl Bisector {
    pub fn new(i: usize, gi: &Generator, j: usize, gj: &Generator, frame: &Frame, eps_rank: f64) -> Self {
        let implicit = ConicImplicit::between(gi, gj);
        let shape = classify_and_parametrize_in(&implicit, frame, eps_rank);
        Bisector { i, j, implicit, shape }
    }
}
