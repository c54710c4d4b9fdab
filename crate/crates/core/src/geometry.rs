//! Planar primitives shared by every module: points, symmetric 2×2
//! matrices with a closed-form eigen-decomposition, lines, and the
//! similarity frames used to condition conic computations.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Symmetric 2×2 matrix `[[m11, m12], [m12, m22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

/// Eigen-decomposition of a [`SymMat2`]: `values[0] >= values[1]`, and
/// `angle` in `[0, π)` is the direction of the eigenvector for `values[0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen2 {
    pub values: [f64; 2],
    pub angle: f64,
}

impl SymEigen2 {
    /// Unit eigenvector belonging to `values[k]`.
    pub fn vector(&self, k: usize) -> Vec2 {
        let (s, c) = self.angle.sin_cos();
        if k == 0 {
            Vec2::new(c, s)
        } else {
            Vec2::new(-s, c)
        }
    }
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2 { m11: 1.0, m12: 0.0, m22: 1.0 };

    pub const fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Self { m11, m12, m22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, d2)
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::new(s, 0.0, s)
    }

    /// `U diag(d1, d2) Uᵀ` with `U` the rotation by `angle`.
    pub fn from_rotation(angle: f64, d1: f64, d2: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * c * d1 + s * s * d2, c * s * (d1 - d2), s * s * d1 + c * c * d2)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn is_positive_definite(&self) -> bool {
        self.m11 > 0.0 && self.det() > 0.0
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.m11 * v.x + self.m12 * v.y, self.m12 * v.x + self.m22 * v.y)
    }

    /// `vᵀ M v`.
    #[inline]
    pub fn quad_form(&self, v: Vec2) -> f64 {
        self.m11 * v.x * v.x + 2.0 * self.m12 * v.x * v.y + self.m22 * v.y * v.y
    }

    pub fn scale(&self, s: f64) -> SymMat2 {
        SymMat2::new(self.m11 * s, self.m12 * s, self.m22 * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m22.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m22.is_finite()
    }

    /// Closed-form eigen-decomposition from trace and determinant. When the
    /// eigenvalues agree within `1e-12` relative the angle is pinned to 0.
    pub fn eigen(&self) -> SymEigen2 {
        let half_trace = 0.5 * self.trace();
        let half_diff = 0.5 * (self.m11 - self.m22);
        let radius = half_diff.hypot(self.m12);
        let values = [half_trace + radius, half_trace - radius];
        let scale = values[0].abs().max(values[1].abs());
        let angle = if radius <= 1e-12 * scale || radius == 0.0 {
            0.0
        } else {
            let a = 0.5 * self.m12.atan2(half_diff);
            if a < 0.0 {
                a + PI
            } else if a >= PI {
                a - PI
            } else {
                a
            }
        };
        SymEigen2 { values, angle }
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, rhs: SymMat2) -> SymMat2 {
        SymMat2::new(self.m11 - rhs.m11, self.m12 - rhs.m12, self.m22 - rhs.m22)
    }
}

/// Oriented straight line `origin + s * dir`, with `dir` of unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line2 {
    pub origin: Vec2,
    pub dir: Vec2,
}

impl Line2 {
    /// Line `a x + b y + c = 0`; `None` when `(a, b)` vanishes.
    pub fn from_coefficients(a: f64, b: f64, c: f64) -> Option<Line2> {
        let nn = a * a + b * b;
        if !(nn > 0.0) || !nn.is_finite() {
            return None;
        }
        let n = nn.sqrt();
        let origin = Vec2::new(-c * a / nn, -c * b / nn);
        Some(Line2 { origin, dir: Vec2::new(-b / n, a / n) })
    }

    #[inline]
    pub fn point_at(&self, s: f64) -> Vec2 {
        self.origin + self.dir * s
    }

    /// Parameter of the orthogonal projection of `p`.
    #[inline]
    pub fn project(&self, p: Vec2) -> f64 {
        (p - self.origin).dot(self.dir)
    }

    #[inline]
    pub fn distance_to(&self, p: Vec2) -> f64 {
        (p - self.origin).cross(self.dir).abs()
    }

    pub fn intersect(&self, other: &Line2) -> Option<Vec2> {
        let denom = self.dir.cross(other.dir);
        if denom.abs() <= 1e-14 {
            return None;
        }
        let s = (other.origin - self.origin).cross(other.dir) / denom;
        Some(self.point_at(s))
    }
}

/// Similarity frame `x = origin + scale * x'`. Conic computations run in the
/// normalized coordinates `x'` so that coefficients stay balanced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: Vec2,
    pub scale: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Frame { origin: Vec2::ZERO, scale: 1.0 }
    }
}

impl Frame {
    pub fn new(origin: Vec2, scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "frame scale must be positive");
        Frame { origin, scale }
    }

    /// Frame centred on the bounding box of `points`.
    pub fn around(points: impl IntoIterator<Item = Vec2>) -> Frame {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Frame::default();
        }
        let half = (hi - lo) * 0.5;
        let scale = half.norm().max(1.0);
        Frame::new((lo + hi) * 0.5, scale)
    }

    #[inline]
    pub fn to_local(&self, p: Vec2) -> Vec2 {
        (p - self.origin) / self.scale
    }

    #[inline]
    pub fn to_world(&self, p: Vec2) -> Vec2 {
        self.origin + p * self.scale
    }

    /// Homogeneous matrix mapping local to world coordinates.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [[self.scale, 0.0, self.origin.x], [0.0, self.scale, self.origin.y], [0.0, 0.0, 1.0]]
    }

    pub fn inverse_matrix(&self) -> [[f64; 3]; 3] {
        let s = 1.0 / self.scale;
        [[s, 0.0, -self.origin.x * s], [0.0, s, -self.origin.y * s], [0.0, 0.0, 1.0]]
    }
}

/// Axis-aligned clipping and rendering window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Window {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Option<Window> {
        let ok = [xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) && xmin < xmax && ymin < ymax;
        ok.then_some(Window { xmin, ymin, xmax, ymax })
    }

    /// `[0, size]²`.
    pub fn square(size: f64) -> Window {
        Window::new(0.0, 0.0, size, size).expect("positive window size")
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Counter-clockwise corners starting at `(xmin, ymin)`.
    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.xmin, self.ymin),
            Vec2::new(self.xmax, self.ymin),
            Vec2::new(self.xmax, self.ymax),
            Vec2::new(self.xmin, self.ymax),
        ]
    }

    pub fn frame(&self) -> Frame {
        Frame::new(self.center(), 0.5 * self.diagonal())
    }
}

/// Real roots of `a t² + b t + c`, ascending. Degrades to the linear case
/// when `a` is negligible; a slightly negative discriminant (relative
/// `1e-12`) is treated as a double root.
pub fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let (an, bn) = (a / scale, b / scale);
    if an.abs() <= 1e-14 {
        if bn.abs() <= 1e-14 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    let slack = 1e-12 * (b * b + (4.0 * a * c).abs());
    if disc < -slack {
        return Vec::new();
    }
    if disc <= slack {
        return vec![-b / (2.0 * a)];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, c / q] };
    roots.sort_by(f64::total_cmp);
    roots
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = (a + PI).rem_euclid(two_pi) - PI;
    if r >= PI {
        r -= two_pi;
    }
    r
}

pub(crate) fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub(crate) fn mat3_vec(a: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub(crate) fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn adjugate3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ]
}

pub(crate) fn frobenius3(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_axis_aligned() {
        let e = SymMat2::diag(0.25, 1.0).eigen();
        assert_eq!(e.values, [1.0, 0.25]);
        assert!((e.angle - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_tie_pins_angle() {
        let e = SymMat2::scaled_identity(3.0).eigen();
        assert_eq!(e.angle, 0.0);
        assert_eq!(e.values, [3.0, 3.0]);
    }

    #[test]
    fn eigen_reconstructs() {
        for &(a, b, c) in &[(2.0, 1.0, 3.0), (1.0, -0.7, 0.2), (5.0, 0.0, 1.0), (1e-3, 2e-4, 4.0)] {
            let m = SymMat2::new(a, b, c);
            let e = m.eigen();
            let r = SymMat2::from_rotation(e.angle, e.values[0], e.values[1]);
            assert!((r - m).max_abs() <= 1e-14 * m.max_abs(), "{m:?} vs {r:?}");
            assert!((0.0..PI).contains(&e.angle));
        }
    }

    #[test]
    fn quadratic_roots() {
        assert_eq!(solve_quadratic(1.0, -3.0, 2.0), vec![1.0, 2.0]);
        assert_eq!(solve_quadratic(0.0, 2.0, -4.0), vec![2.0]);
        assert_eq!(solve_quadratic(1.0, -2.0, 1.0), vec![1.0]);
        assert!(solve_quadratic(1.0, 0.0, 1.0).is_empty());
    }

    #[test]
    fn line_from_coefficients() {
        let l = Line2::from_coefficients(1.0, 0.0, -1.0).unwrap();
        assert_eq!(l.origin, Vec2::new(1.0, 0.0));
        assert!(l.distance_to(Vec2::new(1.0, 7.0)) < 1e-15);
        let m = Line2::from_coefficients(0.0, 1.0, -2.0).unwrap();
        let p = l.intersect(&m).unwrap();
        assert!((p - Vec2::new(1.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn adjugate_matches_inverse() {
        let m = [[2.0, 1.0, 0.5], [1.0, 3.0, -1.0], [0.5, -1.0, 4.0]];
        let adj = adjugate3(&m);
        let prod = mat3_mul(&m, &adj);
        let d = det3(&m);
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = if i == j { d } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) + PI).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_angle(-0.5 - 2.0 * PI) + 0.5).abs() < 1e-12);
    }
}
