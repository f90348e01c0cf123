//! Rasterize a two-dimensional slice of the variety, one acceptance verdict
//! per pixel, into a binary portable pixmap.
//!
//! Pixels are evaluated independently and in parallel; the output grid is a
//! pure function of the slice specification, so worker count and scheduling
//! cannot change a single byte.

use crate::algebra::{derived_constants, MarkoffTriple, MuParams};
use crate::bq::{bq_search, BqError, BqVerdict, RejectReason, SearchBudget, Tolerances};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid slice spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which root of the z-quadratic a pixel takes: `Plus` is the one built
/// with the principal square root of the discriminant, `Minus` its mate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZBranch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneSpec {
    /// Fixed `x`; the pixel is the complex `y`, and `z` solves the vertex
    /// quadratic `z^2 + (xy - r) z + (x^2 + y^2 - px - qy - s) = 0` on the
    /// selected branch.
    XyPlane { x: Complex64, z_branch: ZBranch },
    /// The pixel is a complex parameter `w`; the triple is
    /// `base + w * direction` componentwise.
    Line {
        base: MarkoffTriple,
        direction: (Complex64, Complex64, Complex64),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub mu: MuParams,
    pub plane: PlaneSpec,
    /// (re_min, re_max, im_min, im_max) of the slice parameter.
    pub window: (f64, f64, f64, f64),
    pub width: usize,
    pub height: usize,
    pub budget: SearchBudget,
    pub tol: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelKind {
    Accepted,
    RejectedSegment,
    RejectedDegenerate,
    RejectedSmallRay,
    Undetermined,
    OffVariety,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelVerdict {
    pub kind: PixelKind,
    /// Vertices used by the search at this pixel.
    pub depth: usize,
}

/// Row-major, top-to-bottom grid of verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<PixelVerdict>,
    /// Vertex budget the pixels ran with; used to grade undetermined cells.
    pub budget_vertices: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Palette {
    pub accepted: [u8; 3],
    pub rejected_segment: [u8; 3],
    pub rejected_degenerate: [u8; 3],
    pub rejected_small_ray: [u8; 3],
    /// Base hue for undetermined pixels; graded down with depth for the
    /// usual escape-time look.
    pub undetermined: [u8; 3],
    pub off_variety: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            accepted: [255, 255, 255],
            rejected_segment: [0, 0, 0],
            rejected_degenerate: [0, 0, 255],
            rejected_small_ray: [64, 64, 64],
            undetermined: [0, 255, 0],
            off_variety: [255, 0, 0],
        }
    }
}

impl Palette {
    pub fn color_of(&self, p: PixelVerdict, budget_vertices: usize) -> [u8; 3] {
        match p.kind {
            PixelKind::Accepted => self.accepted,
            PixelKind::RejectedSegment => self.rejected_segment,
            PixelKind::RejectedDegenerate => self.rejected_degenerate,
            PixelKind::RejectedSmallRay => self.rejected_small_ray,
            PixelKind::OffVariety => self.off_variety,
            PixelKind::Undetermined => {
                let max = budget_vertices.max(1) as u64;
                let d = (p.depth as u64).min(max);
                let fade = (d * 191 / max) as u8;
                let scale =
                    |c: u8| -> u8 { c.saturating_sub((c as u64 * fade as u64 / 255) as u8) };
                [
                    scale(self.undetermined[0]),
                    scale(self.undetermined[1]),
                    scale(self.undetermined[2]),
                ]
            }
        }
    }
}

/// The triple a pixel evaluates, or `None` when the pixel parameterization
/// degenerates (non-finite z root in plane mode).
pub fn pixel_triple(spec: &SliceSpec, col: usize, row: usize) -> Option<MarkoffTriple> {
    let (re_min, re_max, im_min, im_max) = spec.window;
    let u = re_min + (re_max - re_min) * ((col as f64 + 0.5) / spec.width as f64);
    let v = im_max - (im_max - im_min) * ((row as f64 + 0.5) / spec.height as f64);
    let w = Complex64::new(u, v);
    match spec.plane {
        PlaneSpec::XyPlane { x, z_branch } => {
            let mu = spec.mu;
            let b = x * w - mu.r;
            let c = x * x + w * w - mu.p * x - mu.q * w - mu.s;
            let sd = (b * b - 4.0 * c).sqrt();
            let z = match z_branch {
                ZBranch::Plus => (-b + sd) / 2.0,
                ZBranch::Minus => (-b - sd) / 2.0,
            };
            if !(z.re.is_finite() && z.im.is_finite()) {
                return None;
            }
            Some(MarkoffTriple::new(x, w, z))
        }
        PlaneSpec::Line { base, direction } => Some(MarkoffTriple::new(
            base.x + w * direction.0,
            base.y + w * direction.1,
            base.z + w * direction.2,
        )),
    }
}

fn evaluate_pixel(spec: &SliceSpec, col: usize, row: usize) -> PixelVerdict {
    let Some(triple) = pixel_triple(spec, col, row) else {
        return PixelVerdict {
            kind: PixelKind::OffVariety,
            depth: 0,
        };
    };
    match bq_search(triple, spec.mu, spec.tol, spec.budget, 0.0) {
        Ok(report) => {
            let kind = match report.verdict {
                BqVerdict::Accepted { .. } => PixelKind::Accepted,
                BqVerdict::Rejected { reason, .. } => match reason {
                    RejectReason::SegmentHit => PixelKind::RejectedSegment,
                    RejectReason::DegenerateHit => PixelKind::RejectedDegenerate,
                    RejectReason::SmallRay => PixelKind::RejectedSmallRay,
                },
                BqVerdict::Undetermined { .. } => PixelKind::Undetermined,
            };
            PixelVerdict {
                kind,
                depth: report.vertices_used,
            }
        }
        Err(BqError::ResidualTooLarge { .. }) => PixelVerdict {
            kind: PixelKind::OffVariety,
            depth: 0,
        },
        Err(_) => PixelVerdict {
            kind: PixelKind::Undetermined,
            depth: 0,
        },
    }
}

/// Evaluate every pixel of the slice. Parallel, deterministic: the result
/// depends only on the spec.
pub fn evaluate_slice(spec: &SliceSpec) -> Result<Grid, RenderError> {
    if spec.width < 1 || spec.height < 1 {
        return Err(RenderError::InvalidSpec(
            "width and height must be at least 1".to_string(),
        ));
    }
    let (re_min, re_max, im_min, im_max) = spec.window;
    if !(re_min < re_max && im_min < im_max) {
        return Err(RenderError::InvalidSpec(
            "window must satisfy re_min < re_max and im_min < im_max".to_string(),
        ));
    }
    if !spec.mu.is_finite() {
        return Err(RenderError::InvalidSpec("mu must be finite".to_string()));
    }
    derived_constants(spec.mu)
        .map_err(|e| RenderError::InvalidSpec(format!("degenerate locus failed: {e}")))?;

    let pixels: Vec<PixelVerdict> = (0..spec.width * spec.height)
        .into_par_iter()
        .map(|idx| evaluate_pixel(spec, idx % spec.width, idx / spec.width))
        .collect();
    Ok(Grid {
        width: spec.width,
        height: spec.height,
        pixels,
        budget_vertices: spec.budget.max_vertices,
    })
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), std::io::Error> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Encode the grid as a binary portable pixmap (`P6`, 8-bit), written
/// atomically. Returns the number of bytes written.
pub fn write_ppm(grid: &Grid, palette: &Palette, path: &Path) -> Result<u64, RenderError> {
    if grid.pixels.is_empty() {
        return Err(RenderError::InvalidSpec("empty grid".to_string()));
    }
    let bytes = ppm_bytes(grid, palette);
    atomic_write(path, &bytes)?;
    Ok(bytes.len() as u64)
}

/// The exact PPM byte stream: header `P6\n<width> <height>\n255\n`, then
/// three bytes per pixel, row-major top-to-bottom.
pub fn ppm_bytes(grid: &Grid, palette: &Palette) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    for p in &grid.pixels {
        out.extend_from_slice(&palette.color_of(*p, grid.budget_vertices));
    }
    out
}

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a SliceSpec,
    width: usize,
    height: usize,
    kinds: Vec<PixelKind>,
    depths: Vec<usize>,
}

/// Reproducibility sidecar: the spec echo plus per-pixel kind and depth
/// arrays, as JSON. Returns the number of bytes written.
pub fn write_sidecar_json(grid: &Grid, spec: &SliceSpec, path: &Path) -> Result<u64, RenderError> {
    let doc = Sidecar {
        spec,
        width: grid.width,
        height: grid.height,
        kinds: grid.pixels.iter().map(|p| p.kind).collect(),
        depths: grid.pixels.iter().map(|p| p.depth).collect(),
    };
    let bytes = serde_json::to_vec_pretty(&doc).expect("sidecar serialization");
    atomic_write(path, &bytes)?;
    Ok(bytes.len() as u64)
}
