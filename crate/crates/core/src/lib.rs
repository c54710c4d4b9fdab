//! Analytic construction of two-dimensional generalized balanced power
//! diagrams: tessellations induced by weighted elliptical generators with
//! distance `(x − p)ᵀ M (x − p) − w`.
//!
//! The pipeline is [`bisector`] (conic bisectors and their rational
//! parametrization) → [`intersect`] (conic intersections and the vertex
//! test) → [`diagram`] (topology) → [`clip`] / [`measure`] (bounded cells,
//! perimeters, areas). [`oracle`] provides the brute-force label image used
//! to validate the analytic result and [`fit`] recovers generators from a
//! label image.

// Negated float comparisons are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bisector;
pub mod clip;
pub mod diagram;
pub mod fit;
pub mod generator;
pub mod geometry;
pub mod intersect;
pub mod measure;
pub mod oracle;
pub mod output;
pub mod quadrature;
pub mod scene;
pub mod svg;

pub use bisector::{Bisector, BisectorShape, ConicClass, ConicImplicit, ParametrizedConic};
pub use clip::{clip_to_window, ClippedDiagram};
pub use diagram::{build_diagram, DiagramGraph, Tolerances};
pub use generator::{dist_g, EllipseGeom, Generator, SpecialDistance};
pub use geometry::{Frame, Line2, SymMat2, Vec2, Window};
pub use measure::{measure_all, CellMeasure};
pub use oracle::{compare_labels, rasterize, rasterize_analytic, LabelImage};
pub use output::DiagramDocument;
