//! Brute-force label images: every pixel centre is assigned to its nearest
//! generator. Used to validate the analytic construction.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::clip::{axis_crossings, ClippedDiagram, PieceSource};
use crate::diagram::nearest;
use crate::generator::Generator;
use crate::geometry::{Vec2, Window};

/// Row-major labels; row 0 is the bottom row (`y = ymin`).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelImage {
    pub width: usize,
    pub height: usize,
    pub window: Window,
    pub labels: Vec<u32>,
    /// Label for pixels owned by no generator; also the PGM maxval.
    pub background: u32,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabelImage {
    pub fn new(width: usize, height: usize, window: Window, background: u32) -> Self {
        LabelImage { width, height, window, labels: vec![background; width * height], background }
    }

    pub fn origin(&self) -> Vec2 {
        Vec2::new(self.window.xmin, self.window.ymin)
    }

    /// Pixel extent in window units along `x` and `y`.
    pub fn pixel_size(&self) -> Vec2 {
        Vec2::new(self.window.width() / self.width as f64, self.window.height() / self.height as f64)
    }

    pub fn pixel_center(&self, col: usize, row: usize) -> Vec2 {
        let s = self.pixel_size();
        Vec2::new(self.window.xmin + (col as f64 + 0.5) * s.x, self.window.ymin + (row as f64 + 0.5) * s.y)
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, label: u32) {
        self.labels[row * self.width + col] = label;
    }
}

fn empty_window_image(width: usize, height: usize, win: Window, n: usize) -> LabelImage {
    assert!(width >= 1 && height >= 1, "image must have at least one pixel");
    LabelImage::new(width, height, win, n as u32)
}

/// Nearest generator at every pixel centre; ties go to the smaller index.
pub fn rasterize(scene: &[Generator], win: Window, width: usize, height: usize) -> LabelImage {
    let mut img = empty_window_image(width, height, win, scene.len());
    if scene.is_empty() {
        return img;
    }
    let probe = img.clone();
    img.labels.par_chunks_mut(width).enumerate().for_each(|(row, out)| {
        for (col, slot) in out.iter_mut().enumerate() {
            *slot = nearest(scene, probe.pixel_center(col, row)) as u32;
        }
    });
    img
}

/// Label image of a clipped diagram, built from the analytic edges alone:
/// each row is cut at the points where it crosses an edge, and the side of
/// each crossing follows from the gradient of the bisector equation.
pub fn rasterize_analytic(c: &ClippedDiagram, width: usize, height: usize) -> LabelImage {
    let n = c.cell_count();
    let mut img = empty_window_image(width, height, c.window, n);
    if n == 0 {
        return img;
    }
    let probe = img.clone();
    let left_side: Vec<_> = c.frame_pieces.iter().filter(|p| p.source == PieceSource::Window(3)).collect();
    img.labels.par_chunks_mut(width).enumerate().for_each(|(row, out)| {
        let y = probe.pixel_center(0, row).y;
        // (x, label to the right of the crossing)
        let mut cuts: Vec<(f64, u32)> = Vec::new();
        for e in &c.edges {
            for u in axis_crossings(&e.curve, 1, y, e.u_a, e.u_b) {
                let p = e.curve.point(u);
                let (i, j) = e.pair;
                // E = dᵢ − dⱼ grows towards j.
                let right = if e_gradient_x(c, i, j, p) > 0.0 { j } else { i };
                cuts.push((p.x, right as u32));
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut label = left_side
            .iter()
            .find(|p| {
                let (a, b) = (p.start_point().y, p.end_point().y);
                y <= a.max(b) && y >= a.min(b)
            })
            .map_or(0, |p| p.cell as u32);
        let mut next = 0;
        for (col, slot) in out.iter_mut().enumerate() {
            let x = probe.pixel_center(col, row).x;
            while next < cuts.len() && cuts[next].0 < x {
                label = cuts[next].1;
                next += 1;
            }
            *slot = label;
        }
    });
    img
}

fn e_gradient_x(c: &ClippedDiagram, i: usize, j: usize, p: Vec2) -> f64 {
    let (gi, gj) = (&c.generators[i], &c.generators[j]);
    let di = gi.m.mul_vec(p - gi.p);
    let dj = gj.m.mul_vec(p - gj.p);
    2.0 * (di.x - dj.x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchStats {
    pub count: usize,
    pub total: usize,
    pub fraction: f64,
    /// `histogram[d]`: mismatched pixels at Chebyshev distance `d` from the
    /// nearest boundary pixel of the first image (last bin collects the rest).
    pub histogram: Vec<usize>,
    /// Mismatched pixels within one pixel of a boundary of the first image.
    pub within_one: usize,
}

impl MismatchStats {
    pub fn within_one_fraction(&self) -> f64 {
        if self.count == 0 {
            1.0
        } else {
            self.within_one as f64 / self.count as f64
        }
    }
}

const HISTOGRAM_BINS: usize = 8;

/// Pixels with a 4-neighbour of a different label.
pub fn boundary_mask(img: &LabelImage) -> Vec<bool> {
    let (w, h) = (img.width, img.height);
    let mut mask = vec![false; w * h];
    for row in 0..h {
        for col in 0..w {
            let l = img.get(col, row);
            let differs = (col > 0 && img.get(col - 1, row) != l)
                || (col + 1 < w && img.get(col + 1, row) != l)
                || (row > 0 && img.get(col, row - 1) != l)
                || (row + 1 < h && img.get(col, row + 1) != l);
            mask[row * w + col] = differs;
        }
    }
    mask
}

/// Chebyshev distance of every pixel to the nearest `true` pixel of `mask`.
fn chebyshev_distance(mask: &[bool], w: usize, h: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; w * h];
    let mut queue = VecDeque::new();
    for (k, &m) in mask.iter().enumerate() {
        if m {
            dist[k] = 0;
            queue.push_back(k);
        }
    }
    while let Some(k) = queue.pop_front() {
        let (col, row) = ((k % w) as isize, (k / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (c, r) = (col + dx, row + dy);
                if c < 0 || r < 0 || c >= w as isize || r >= h as isize {
                    continue;
                }
                let nk = r as usize * w + c as usize;
                if dist[nk] == u32::MAX {
                    dist[nk] = dist[k] + 1;
                    queue.push_back(nk);
                }
            }
        }
    }
    dist
}

pub fn compare_labels(a: &LabelImage, b: &LabelImage) -> Result<MismatchStats, OracleError> {
    if a.width != b.width || a.height != b.height {
        return Err(OracleError::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    let total = a.labels.len();
    let mismatched: Vec<usize> = (0..total).filter(|&k| a.labels[k] != b.labels[k]).collect();
    let mut histogram = vec![0usize; HISTOGRAM_BINS];
    let mut within_one = 0;
    if !mismatched.is_empty() {
        let dist = chebyshev_distance(&boundary_mask(a), a.width, a.height);
        for &k in &mismatched {
            let d = dist[k];
            histogram[(d as usize).min(HISTOGRAM_BINS - 1)] += 1;
            if d <= 1 {
                within_one += 1;
            }
        }
    }
    Ok(MismatchStats {
        count: mismatched.len(),
        total,
        fraction: mismatched.len() as f64 / total as f64,
        histogram,
        within_one,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterCellStats {
    /// Pixel count per label, background included at index `background`.
    pub counts: Vec<usize>,
    /// Lower-left pixel `(col, row)` of each 2×2 block holding ≥ 3 labels.
    pub junctions: Vec<(usize, usize)>,
    /// The shared corner of each junction block, in window coordinates.
    pub junction_points: Vec<Vec2>,
}

pub fn raster_cell_stats(img: &LabelImage) -> RasterCellStats {
    let max = img.labels.iter().copied().max().unwrap_or(0).max(img.background) as usize;
    let mut counts = vec![0usize; max + 1];
    for &l in &img.labels {
        counts[l as usize] += 1;
    }
    let mut junctions = Vec::new();
    let mut junction_points = Vec::new();
    let s = img.pixel_size();
    for row in 0..img.height.saturating_sub(1) {
        for col in 0..img.width.saturating_sub(1) {
            let mut block =
                [img.get(col, row), img.get(col + 1, row), img.get(col, row + 1), img.get(col + 1, row + 1)];
            block.sort_unstable();
            let distinct = 1 + block.windows(2).filter(|w| w[0] != w[1]).count();
            if distinct >= 3 {
                junctions.push((col, row));
                junction_points.push(Vec2::new(
                    img.window.xmin + (col + 1) as f64 * s.x,
                    img.window.ymin + (row + 1) as f64 * s.y,
                ));
            }
        }
    }
    RasterCellStats { counts, junctions, junction_points }
}

/// Plain (P2) PGM with `maxval = background` and the window in a comment.
/// Rows are written top-down.
pub fn write_pgm<W: Write>(mut w: W, img: &LabelImage) -> std::io::Result<()> {
    let win = img.window;
    writeln!(w, "P2")?;
    writeln!(w, "# window {} {} {} {}", win.xmin, win.ymin, win.xmax, win.ymax)?;
    writeln!(w, "{} {}", img.width, img.height)?;
    writeln!(w, "{}", img.background)?;
    let mut line = String::new();
    for row in (0..img.height).rev() {
        for col in 0..img.width {
            let mut tok = String::new();
            write!(tok, "{}", img.get(col, row)).expect("formatting");
            if !line.is_empty() && line.len() + 1 + tok.len() > 70 {
                writeln!(w, "{line}")?;
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&tok);
        }
        writeln!(w, "{line}")?;
        line.clear();
    }
    Ok(())
}

pub fn pgm_to_string(img: &LabelImage) -> String {
    let mut buf = Vec::new();
    write_pgm(&mut buf, img).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Reads a P2 PGM. Without a window comment the window is the pixel grid.
pub fn read_pgm<R: BufRead>(r: R) -> Result<LabelImage, OracleError> {
    let mut window = None;
    let mut tokens: Vec<String> = Vec::new();
    for line in r.lines() {
        let line = line?;
        let (content, comment) = match line.find('#') {
            Some(k) => (&line[..k], Some(&line[k + 1..])),
            None => (&line[..], None),
        };
        if let Some(c) = comment {
            let parts: Vec<&str> = c.split_whitespace().collect();
            if parts.len() == 5 && parts[0] == "window" {
                let v: Result<Vec<f64>, _> = parts[1..].iter().map(|s| s.parse::<f64>()).collect();
                let v = v.map_err(|e| OracleError::Pgm(format!("bad window comment: {e}")))?;
                window = Some(
                    Window::new(v[0], v[1], v[2], v[3]).ok_or_else(|| OracleError::Pgm("degenerate window".into()))?,
                );
            }
        }
        tokens.extend(content.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    if it.next().as_deref() != Some("P2") {
        return Err(OracleError::Pgm("expected P2 magic".into()));
    }
    let mut num = |what: &str| -> Result<u64, OracleError> {
        it.next()
            .ok_or_else(|| OracleError::Pgm(format!("missing {what}")))?
            .parse::<u64>()
            .map_err(|e| OracleError::Pgm(format!("bad {what}: {e}")))
    };
    let width = num("width")? as usize;
    let height = num("height")? as usize;
    let maxval = num("maxval")? as u32;
    if width == 0 || height == 0 {
        return Err(OracleError::Pgm("empty image".into()));
    }
    let window = window.unwrap_or_else(|| Window::new(0.0, 0.0, width as f64, height as f64).expect("positive size"));
    let mut img = LabelImage::new(width, height, window, maxval);
    for k in 0..width * height {
        let v = num("pixel")? as u32;
        if v > maxval {
            return Err(OracleError::Pgm(format!("pixel value {v} exceeds maxval {maxval}")));
        }
        let (row_from_top, col) = (k / width, k % width);
        img.set(col, height - 1 - row_from_top, v);
    }
    Ok(img)
}
