//! Generators recovered from a label image by principal component analysis
//! of each labelled region.

use serde::Serialize;
use thiserror::Error;

use crate::generator::Generator;
use crate::geometry::{SymMat2, Vec2};
use crate::oracle::LabelImage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("image holds no labelled pixels")]
    NoRegions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitWarning {
    /// Fewer than three pixels or a zero-variance direction; the generator
    /// falls back to `M = I / scale`.
    DegenerateRegion { label: u32, pixels: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// One generator per label present, ordered by label; ids equal labels.
    pub generators: Vec<Generator>,
    pub warnings: Vec<FitWarning>,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: usize,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

/// For every label: centroid `p`, covariance `U diag(e₁, e₂) Uᵀ`, and
/// `M = U diag(1/(scale·e₁), 1/(scale·e₂)) Uᵀ`; `w = default_weight`.
pub fn fit_generators_from_labels(img: &LabelImage, scale: f64, default_weight: f64) -> Result<FitResult, FitError> {
    let mut moments: Vec<Moments> = Vec::new();
    // Accumulate relative to the window origin to keep sums small.
    let origin = img.origin();
    for row in 0..img.height {
        for col in 0..img.width {
            let l = img.get(col, row);
            if l == img.background {
                continue;
            }
            let l = l as usize;
            if moments.len() <= l {
                moments.resize(l + 1, Moments::default());
            }
            let q = img.pixel_center(col, row) - origin;
            let m = &mut moments[l];
            m.n += 1;
            m.sx += q.x;
            m.sy += q.y;
            m.sxx += q.x * q.x;
            m.sxy += q.x * q.y;
            m.syy += q.y * q.y;
        }
    }
    if moments.iter().all(|m| m.n == 0) {
        return Err(FitError::NoRegions);
    }
    let mut generators = Vec::new();
    let mut warnings = Vec::new();
    for (label, m) in moments.iter().enumerate() {
        if m.n == 0 {
            continue;
        }
        let n = m.n as f64;
        let c = Vec2::new(m.sx / n, m.sy / n);
        let cov = SymMat2::new(m.sxx / n - c.x * c.x, m.sxy / n - c.x * c.y, m.syy / n - c.y * c.y);
        let eig = cov.eigen();
        let tiny = 1e-12 * (1.0 + cov.max_abs());
        let mat = if m.n < 3 || eig.values[1] <= tiny {
            warnings.push(FitWarning::DegenerateRegion { label: label as u32, pixels: m.n });
            SymMat2::scaled_identity(1.0 / scale)
        } else {
            SymMat2::from_rotation(eig.angle, 1.0 / (scale * eig.values[0]), 1.0 / (scale * eig.values[1]))
        };
        generators.push(Generator::new(label as i64, origin + c, mat, default_weight));
    }
    Ok(FitResult { generators, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;

    fn canvas() -> LabelImage {
        LabelImage::new(100, 100, Window::square(100.0), 9)
    }

    #[test]
    fn rectangle_axis_ratio() {
        let mut img = canvas();
        for row in 40..50 {
            for col in 20..60 {
                img.set(col, row, 0);
            }
        }
        let fit = fit_generators_from_labels(&img, 1.0, 0.0).unwrap();
        assert!(fit.warnings.is_empty());
        let g = fit.generators[0];
        assert!(g.p.distance(Vec2::new(40.0, 45.0)) < 1e-9);
        let e = g.unscaled_ellipse();
        assert!(e.angle.abs() < 1e-9 || (e.angle - std::f64::consts::PI).abs() < 1e-9);
        // Discrete uniform variance (L² − 1)/12 per axis.
        let (v1, v2) = ((1600.0 - 1.0) / 12.0, (100.0 - 1.0) / 12.0);
        assert!((e.semi_axes[0] - f64::sqrt(v1)).abs() < 1e-9);
        assert!((e.semi_axes[1] - f64::sqrt(v2)).abs() < 1e-9);
        let ratio = (e.semi_axes[0] / e.semi_axes[1]).powi(2);
        assert!((ratio - 16.0).abs() / 16.0 < 0.06, "{ratio}");
    }

    #[test]
    fn disk_is_isotropic() {
        let mut img = canvas();
        for row in 0..100 {
            for col in 0..100 {
                let q = img.pixel_center(col, row) - Vec2::new(50.0, 50.0);
                if q.norm() < 30.0 {
                    img.set(col, row, 3);
                }
            }
        }
        let fit = fit_generators_from_labels(&img, 2.0, 0.5).unwrap();
        let g = fit.generators[0];
        assert_eq!((g.id, g.w), (3, 0.5));
        let e = g.m.eigen();
        assert!((e.values[0] - e.values[1]).abs() <= 0.02 * e.values[0]);
    }

    #[test]
    fn degenerate_regions_fall_back() {
        let mut img = canvas();
        img.set(5, 5, 0);
        img.set(6, 5, 0);
        for col in 10..30 {
            img.set(col, 70, 1);
        }
        let fit = fit_generators_from_labels(&img, 4.0, 0.0).unwrap();
        assert_eq!(fit.warnings.len(), 2);
        assert_eq!(fit.generators[0].m, SymMat2::scaled_identity(0.25));
        assert!(fit_generators_from_labels(&canvas(), 1.0, 0.0).is_err());
    }

    #[test]
    fn transposition_swaps_axes() {
        let mut img = canvas();
        let mut t = canvas();
        for row in 10..30 {
            for col in 20..70 {
                if (row + 2 * col) % 7 != 0 {
                    img.set(col, row, 0);
                    t.set(row, col, 0);
                }
            }
        }
        let a = fit_generators_from_labels(&img, 1.0, 0.0).unwrap().generators[0];
        let b = fit_generators_from_labels(&t, 1.0, 0.0).unwrap().generators[0];
        assert!((a.m.m11 - b.m.m22).abs() < 1e-12 && (a.m.m12 - b.m.m12).abs() < 1e-12);
        assert!((a.p.x - b.p.y).abs() < 1e-9 && (a.p.y - b.p.x).abs() < 1e-9);
    }
}
