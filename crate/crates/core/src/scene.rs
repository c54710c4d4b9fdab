//! Generator scene files and seeded random scene presets.
//!
//! The scene format is CSV with the header `id,px,py,m11,m12,m22,w`, one
//! generator per row. Values are written in plain decimal notation using the
//! shortest representation that parses back to the same `f64`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{Generator, GeneratorError};
use crate::geometry::{SymMat2, Vec2, Window};

pub const SCENE_HEADER: [&str; 7] = ["id", "px", "py", "m11", "m12", "m22", "w"];

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: u64,
        #[source]
        source: GeneratorError,
    },
    #[error("line {line}: duplicate generator id {id}")]
    DuplicateId { line: u64, id: i64 },
    #[error("unexpected header {found:?}, expected id,px,py,m11,m12,m22,w")]
    Header { found: Vec<String> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: i64,
    px: f64,
    py: f64,
    m11: f64,
    m12: f64,
    m22: f64,
    w: f64,
}

pub fn read_scene<R: Read>(reader: R) -> Result<Vec<Generator>, SceneError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != SCENE_HEADER {
        return Err(SceneError::Header { found: header });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record
            .map_err(|e| SceneError::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record.deserialize(None).map_err(|e| SceneError::Parse { line, message: e.to_string() })?;
        if !seen.insert(row.id) {
            return Err(SceneError::DuplicateId { line, id: row.id });
        }
        let g = Generator::try_new(row.id, Vec2::new(row.px, row.py), SymMat2::new(row.m11, row.m12, row.m22), row.w)
            .map_err(|source| SceneError::Invalid { line, source })?;
        out.push(g);
    }
    Ok(out)
}

pub fn write_scene<W: Write>(writer: W, scene: &[Generator]) -> Result<(), SceneError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SCENE_HEADER)?;
    for g in scene {
        wtr.write_record([
            g.id.to_string(),
            g.p.x.to_string(),
            g.p.y.to_string(),
            g.m.m11.to_string(),
            g.m.m12.to_string(),
            g.m.m22.to_string(),
            g.w.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn scene_to_string(scene: &[Generator]) -> String {
    let mut buf = Vec::new();
    write_scene(&mut buf, scene).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Random scene recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Centres uniform on the window, orientation uniform on `[0, π]`, major
    /// semi-axis uniform on `[10, 20]`, minor semi-axis uniform on
    /// `[0.5, 10]`, weight uniform on `[0, 50]`.
    PaperRandom,
    /// As `PaperRandom` but with weights uniform on `(-1, 3)`.
    PaperWeights,
    /// Unit matrices and zero weights at uniform centres.
    Isotropic,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::PaperRandom, Preset::PaperWeights, Preset::Isotropic];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::PaperRandom => "paper-random",
            Preset::PaperWeights => "paper-weights",
            Preset::Isotropic => "isotropic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown preset {0:?} (expected paper-random, paper-weights or isotropic)")]
pub struct UnknownPreset(pub String);

impl FromStr for Preset {
    type Err = UnknownPreset;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| UnknownPreset(s.to_owned()))
    }
}

pub const MINOR_AXIS_FLOOR: f64 = 0.5;

/// Deterministic scene of `n` generators with ids `0..n`.
pub fn generate(preset: Preset, n: usize, seed: u64, window: Window) -> Vec<Generator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let p = Vec2::new(rng.gen_range(window.xmin..=window.xmax), rng.gen_range(window.ymin..=window.ymax));
            match preset {
                Preset::Isotropic => Generator::new(i as i64, p, SymMat2::IDENTITY, 0.0),
                Preset::PaperRandom | Preset::PaperWeights => {
                    let theta = rng.gen_range(0.0..=PI);
                    let major = rng.gen_range(10.0..=20.0);
                    let minor = rng.gen_range(MINOR_AXIS_FLOOR..=10.0);
                    let w = match preset {
                        Preset::PaperRandom => rng.gen_range(0.0..=50.0),
                        _ => {
                            let mut w = rng.gen_range(-1.0..3.0);
                            while w <= -1.0 {
                                w = rng.gen_range(-1.0..3.0);
                            }
                            w
                        }
                    };
                    Generator::from_axes(i as i64, p, theta, major, minor, w)
                }
            }
        })
        .collect()
}
