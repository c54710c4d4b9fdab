//! JSON form of a diagram. Reals are written with 17 significant digits so
//! that reading them back reproduces the same `f64`; infinite parameters
//! are written as the strings `"inf"` and `"-inf"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diagram::{DiagramGraph, EdgeCurve, Endpoint, ParamKind};

/// An `f64` with lossless JSON formatting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_nan() {
            return s.serialize_str("nan");
        }
        if v.is_infinite() {
            return s.serialize_str(if v > 0.0 { "inf" } else { "-inf" });
        }
        let raw = serde_json::value::RawValue::from_string(format!("{v:.16e}")).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Real(v)),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(Real(f64::INFINITY)),
                "-inf" => Ok(Real(f64::NEG_INFINITY)),
                "nan" => Ok(Real(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("invalid real {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub x: Real,
    pub y: Real,
    pub scale: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDoc {
    pub id: i64,
    pub px: Real,
    pub py: Real,
    pub m11: Real,
    pub m12: Real,
    pub m22: Real,
    pub w: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDoc {
    pub id: usize,
    pub x: Real,
    pub y: Real,
    /// Generator ids.
    pub gens: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineDoc {
    pub x: Real,
    pub y: Real,
    pub dx: Real,
    pub dy: Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    Unbounded,
    Loop,
}

/// A vertex id, or `"unbounded"` / `"loop"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndpointDoc {
    Vertex(usize),
    Marker(Marker),
}

impl From<Endpoint> for EndpointDoc {
    fn from(e: Endpoint) -> Self {
        match e {
            Endpoint::Vertex(v) => EndpointDoc::Vertex(v),
            Endpoint::Unbounded => EndpointDoc::Marker(Marker::Unbounded),
            Endpoint::Loop => EndpointDoc::Marker(Marker::Loop),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: usize,
    /// Generator ids.
    pub pair: [i64; 2],
    pub a11: Real,
    pub a12: Real,
    pub a22: Real,
    pub b11: Real,
    pub b12: Real,
    pub c: Real,
    pub param_kind: ParamKind,
    pub t_a: Real,
    pub t_b: Real,
    /// The piece passes through `t = ∞` (then `t_a > t_b`).
    pub wraps: bool,
    pub endpoints: [EndpointDoc; 2],
    /// Generator id of the cell to the left when moving from `t_a` to `t_b`.
    pub left: i64,
    /// The supporting line, for line edges (`t` is the distance from
    /// `(x, y)` along `(dx, dy)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<LineDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDoc {
    pub id: i64,
    pub edges: Vec<usize>,
    pub components: Vec<Vec<usize>>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramDocument {
    /// Frame in which conic parameters are defined.
    pub frame: FrameDoc,
    pub generators: Vec<GeneratorDoc>,
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
    /// Pairs of generator ids.
    pub adjacency: Vec<[i64; 2]>,
    pub cells: Vec<CellDoc>,
}

impl DiagramDocument {
    pub fn from_graph(g: &DiagramGraph) -> Self {
        let id = |k: usize| g.generators[k].id;
        DiagramDocument {
            frame: FrameDoc { x: Real(g.frame.origin.x), y: Real(g.frame.origin.y), scale: Real(g.frame.scale) },
            generators: g
                .generators
                .iter()
                .map(|s| GeneratorDoc {
                    id: s.id,
                    px: Real(s.p.x),
                    py: Real(s.p.y),
                    m11: Real(s.m.m11),
                    m12: Real(s.m.m12),
                    m22: Real(s.m.m22),
                    w: Real(s.w),
                })
                .collect(),
            vertices: g
                .vertices
                .iter()
                .enumerate()
                .map(|(k, v)| VertexDoc {
                    id: k,
                    x: Real(v.pos.x),
                    y: Real(v.pos.y),
                    gens: v.gens.iter().map(|&s| id(s)).collect(),
                })
                .collect(),
            edges: g
                .edges
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    let [a11, a12, a22, b11, b12, c] = e.conic.coefficients().map(Real);
                    EdgeDoc {
                        id: k,
                        pair: [id(e.pair.0), id(e.pair.1)],
                        a11,
                        a12,
                        a22,
                        b11,
                        b12,
                        c,
                        param_kind: e.kind(),
                        t_a: Real(e.t_a()),
                        t_b: Real(e.t_b()),
                        wraps: e.wraps(),
                        endpoints: [e.start.into(), e.end.into()],
                        left: id(e.left),
                        line: match &e.curve {
                            EdgeCurve::Line(l) => Some(LineDoc {
                                x: Real(l.origin.x),
                                y: Real(l.origin.y),
                                dx: Real(l.dir.x),
                                dy: Real(l.dir.y),
                            }),
                            EdgeCurve::Conic(_) => None,
                        },
                    }
                })
                .collect(),
            adjacency: g.adjacency.iter().map(|&(a, b)| [id(a), id(b)]).collect(),
            cells: g
                .cells
                .iter()
                .map(|c| CellDoc {
                    id: id(c.id),
                    edges: c.edges.clone(),
                    components: c.components.clone(),
                    empty: c.empty,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
