//! Weighted elliptical generators and the distance functions they induce.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{SymMat2, Vec2};

/// A weighted ellipse `(p, M, w)`. Its distance is `(x − p)ᵀ M (x − p) − w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: i64,
    pub p: Vec2,
    pub m: SymMat2,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("generator {id}: matrix is not positive definite ({m:?})")]
    NotPositiveDefinite { id: i64, m: SymMat2 },
    #[error("generator {id}: non-finite value")]
    NonFinite { id: i64 },
    #[error("generator {id}: contour is not renderable because 1 + w = {value} <= 0")]
    NonRenderable { id: i64, value: f64 },
}

impl Generator {
    pub fn new(id: i64, p: Vec2, m: SymMat2, w: f64) -> Self {
        Self { id, p, m, w }
    }

    /// Checked constructor used at scene load.
    pub fn try_new(id: i64, p: Vec2, m: SymMat2, w: f64) -> Result<Self, GeneratorError> {
        let g = Self::new(id, p, m, w);
        g.validate()?;
        Ok(g)
    }

    /// Laguerre (power) generator: `M = I`, `w = r²`.
    pub fn laguerre(id: i64, p: Vec2, radius: f64) -> Self {
        Self::new(id, p, SymMat2::IDENTITY, radius * radius)
    }

    /// Multiplicatively weighted Voronoi generator: `M = I / σ²`, `w = 0`.
    pub fn multiplicative(id: i64, p: Vec2, sigma: f64) -> Self {
        Self::new(id, p, SymMat2::scaled_identity(1.0 / (sigma * sigma)), 0.0)
    }

    /// Generator whose unweighted contour is the ellipse with the given
    /// semi-axes, the first one pointing along `angle`.
    pub fn from_axes(id: i64, p: Vec2, angle: f64, semi_major: f64, semi_minor: f64, w: f64) -> Self {
        let m = SymMat2::from_rotation(angle, 1.0 / (semi_major * semi_major), 1.0 / (semi_minor * semi_minor));
        Self::new(id, p, m, w)
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if !(self.p.is_finite() && self.m.is_finite() && self.w.is_finite()) {
            return Err(GeneratorError::NonFinite { id: self.id });
        }
        if !self.m.is_positive_definite() {
            return Err(GeneratorError::NotPositiveDefinite { id: self.id, m: self.m });
        }
        Ok(())
    }

    /// The generalized balanced power distance; may be negative.
    #[inline]
    pub fn distance(&self, x: Vec2) -> f64 {
        self.m.quad_form(x - self.p) - self.w
    }

    /// Scaled contour `(x − p)ᵀ M (x − p) = 1 + w`.
    pub fn ellipse(&self) -> Result<EllipseGeom, GeneratorError> {
        let factor = 1.0 + self.w;
        if !(factor > 0.0) {
            return Err(GeneratorError::NonRenderable { id: self.id, value: factor });
        }
        Ok(EllipseGeom::from_matrix(self.p, &self.m, factor))
    }

    /// Unscaled contour `(x − p)ᵀ M (x − p) = 1`; always defined.
    pub fn unscaled_ellipse(&self) -> EllipseGeom {
        EllipseGeom::from_matrix(self.p, &self.m, 1.0)
    }

    pub fn with_weight(&self, w: f64) -> Generator {
        Generator { w, ..*self }
    }
}

#[inline]
pub fn dist_g(x: Vec2, g: &Generator) -> f64 {
    g.distance(x)
}

/// The classical distances the generalized one specializes to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialDistance {
    /// `‖x − p‖`.
    Voronoi,
    /// `‖x − p‖² − r²`.
    Laguerre { radius: f64 },
    /// `‖x − p‖ / σ`.
    MultiplicativelyWeighted { sigma: f64 },
}

impl SpecialDistance {
    pub fn eval(&self, x: Vec2, p: Vec2) -> f64 {
        let d = x - p;
        match *self {
            SpecialDistance::Voronoi => d.norm(),
            SpecialDistance::Laguerre { radius } => d.norm_sq() - radius * radius,
            SpecialDistance::MultiplicativelyWeighted { sigma } => d.norm() / sigma,
        }
    }

    /// The generator reproducing this distance. For the multiplicatively
    /// weighted case the generalized distance is the square of `eval`, which
    /// induces the same diagram.
    pub fn generator(&self, id: i64, p: Vec2) -> Generator {
        match *self {
            SpecialDistance::Voronoi => Generator::laguerre(id, p, 0.0),
            SpecialDistance::Laguerre { radius } => Generator::laguerre(id, p, radius),
            SpecialDistance::MultiplicativelyWeighted { sigma } => Generator::multiplicative(id, p, sigma),
        }
    }
}

pub fn special_distance(x: Vec2, center: Vec2, kind: SpecialDistance) -> f64 {
    kind.eval(x, center)
}

/// Geometric ellipse: centre, orientation of the major axis in `[0, π)`, and
/// semi-axis lengths with `semi_axes[0] >= semi_axes[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseGeom {
    pub center: Vec2,
    pub angle: f64,
    pub semi_axes: [f64; 2],
}

impl EllipseGeom {
    /// Contour `(x − p)ᵀ M (x − p) = factor`.
    pub fn from_matrix(center: Vec2, m: &SymMat2, factor: f64) -> EllipseGeom {
        let eig = m.eigen();
        // The major axis belongs to the smaller eigenvalue of M.
        let major = (factor / eig.values[1]).sqrt();
        let minor = (factor / eig.values[0]).sqrt();
        let mut angle = if eig.values[0] == eig.values[1] { 0.0 } else { eig.angle + 0.5 * PI };
        if angle >= PI {
            angle -= PI;
        }
        EllipseGeom { center, angle, semi_axes: [major, minor] }
    }

    /// `M = U diag(1/a₁, 1/a₂) Uᵀ` for the contour at the given level.
    pub fn to_matrix(&self, factor: f64) -> SymMat2 {
        let a1 = self.semi_axes[0] * self.semi_axes[0] / factor;
        let a2 = self.semi_axes[1] * self.semi_axes[1] / factor;
        SymMat2::from_rotation(self.angle, 1.0 / a1, 1.0 / a2)
    }

    pub fn point_at(&self, phi: f64) -> Vec2 {
        let local = Vec2::new(self.semi_axes[0] * phi.cos(), self.semi_axes[1] * phi.sin());
        self.center + local.rotated(self.angle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(p: Vec2, m: SymMat2, w: f64) -> Generator {
        Generator::new(0, p, m, w)
    }

    #[test]
    fn distance_examples() {
        let g = gen(Vec2::new(1.0, 2.0), SymMat2::new(2.0, 1.0, 3.0), 2.0);
        assert_eq!(g.distance(g.p), -2.0);
        let unit = gen(Vec2::ZERO, SymMat2::IDENTITY, 0.0);
        assert_eq!(unit.distance(Vec2::new(3.0, 4.0)), 25.0);
        assert_eq!(g.distance(Vec2::new(2.0, 3.0)), 5.0);
    }

    #[test]
    fn special_distance_examples() {
        let x = Vec2::new(3.0, 4.0);
        assert_eq!(special_distance(x, Vec2::ZERO, SpecialDistance::Laguerre { radius: 5.0 }), 0.0);
        assert_eq!(special_distance(x, Vec2::ZERO, SpecialDistance::Voronoi), 5.0);
        assert_eq!(special_distance(x, Vec2::ZERO, SpecialDistance::MultiplicativelyWeighted { sigma: 5.0 }), 1.0);
    }

    #[test]
    fn special_distances_agree_with_generalized() {
        let p = Vec2::new(-1.0, 0.5);
        let x = Vec2::new(2.5, -3.0);
        let lag = SpecialDistance::Laguerre { radius: 1.5 };
        assert!((lag.generator(0, p).distance(x) - lag.eval(x, p)).abs() < 1e-12);
        let mw = SpecialDistance::MultiplicativelyWeighted { sigma: 2.0 };
        let squared = mw.eval(x, p).powi(2);
        assert!((mw.generator(0, p).distance(x) - squared).abs() < 1e-12);
    }

    #[test]
    fn ellipse_examples() {
        let e = gen(Vec2::ZERO, SymMat2::IDENTITY, 0.0).ellipse().unwrap();
        assert_eq!(e.semi_axes, [1.0, 1.0]);
        let e = gen(Vec2::ZERO, SymMat2::diag(0.25, 1.0), 0.0).ellipse().unwrap();
        assert_eq!(e.semi_axes, [2.0, 1.0]);
        assert_eq!(e.angle, 0.0);
        let e = gen(Vec2::ZERO, SymMat2::IDENTITY, 3.0).ellipse().unwrap();
        assert_eq!(e.semi_axes, [2.0, 2.0]);
    }

    #[test]
    fn ellipse_rejects_nonpositive_scale() {
        let g = gen(Vec2::ZERO, SymMat2::IDENTITY, -1.0);
        assert!(matches!(g.ellipse(), Err(GeneratorError::NonRenderable { .. })));
        assert_eq!(g.unscaled_ellipse().semi_axes, [1.0, 1.0]);
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let err = Generator::try_new(4, Vec2::ZERO, SymMat2::new(1.0, 2.0, 1.0), 0.0).unwrap_err();
        assert!(matches!(err, GeneratorError::NotPositiveDefinite { id: 4, .. }));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_generator() -> impl Strategy<Value = Generator> {
            (-100.0..100.0f64, -100.0..100.0f64, 0.0..PI, 0.5..20.0f64, 0.5..20.0f64, -5.0..50.0f64)
                .prop_map(|(x, y, a, s1, s2, w)| Generator::from_axes(0, Vec2::new(x, y), a, s1, s2, w))
        }

        proptest! {
            #[test]
            fn weight_shift_identity(g in arb_generator(), x in -200.0..200.0f64, y in -200.0..200.0f64, c in -30.0..30.0f64) {
                let q = Vec2::new(x, y);
                let lhs = g.distance(q) + c;
                let rhs = g.with_weight(g.w - c).distance(q);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }

            #[test]
            fn ellipse_roundtrip(g in arb_generator()) {
                let e = g.unscaled_ellipse();
                prop_assert!(e.semi_axes[0] >= e.semi_axes[1]);
                prop_assert!((0.0..PI).contains(&e.angle));
                let m = e.to_matrix(1.0);
                prop_assert!((m - g.m).max_abs() <= 1e-12 * g.m.max_abs());
            }

            #[test]
            fn laguerre_is_power_distance(x in -50.0..50.0f64, y in -50.0..50.0f64, r in 0.0..10.0f64) {
                let p = Vec2::new(1.0, -2.0);
                let q = Vec2::new(x, y);
                let g = Generator::laguerre(0, p, r);
                prop_assert_eq!(g.distance(q), (q - p).norm_sq() - r * r);
            }
        }
    }
}
