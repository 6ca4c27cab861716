//! Orthographic front/side/top projections and a small painter's-algorithm
//! rasterizer with PPM and PNG output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{footprint, Outline, Point2};
use crate::scene::{Color, Scene, View};

pub const DEFAULT_RASTER_SIZE: u32 = 512;
pub const WINDOW_MARGIN: f64 = 0.05;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("degenerate world window {min:?}..{max:?}")]
    DegenerateWindow { min: Point2, max: Point2 },
    #[error("image size must be positive, got {0}x{1}")]
    EmptyImage(u32, u32),
    #[error("i/o failure writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error("malformed ppm: {0}")]
    MalformedPpm(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape2d {
    pub id: u32,
    pub outline: Outline,
    pub depth: f64,
    pub color: Color,
}

/// One orthographic view, shapes in painter's order (farthest first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewProjection {
    pub view: View,
    pub shapes: Vec<Shape2d>,
}

pub fn project(scene: &Scene, view: View) -> ViewProjection {
    let mut shapes: Vec<Shape2d> = scene
        .primitives
        .iter()
        .map(|p| {
            let (outline, depth) = footprint(p, view);
            Shape2d {
                id: p.id,
                outline,
                depth,
                color: p.color,
            }
        })
        .collect();
    shapes.sort_by(|a, b| b.depth.total_cmp(&a.depth).then(a.id.cmp(&b.id)));
    ViewProjection { view, shapes }
}

/// Axis-aligned region of the view plane mapped onto the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub min: Point2,
    pub max: Point2,
}

impl Window {
    /// The scene bounds seen from `view`, padded by `margin` of the extent
    /// on every side.
    pub fn for_scene(scene: &Scene, view: View, margin: f64) -> Window {
        let (lo, _) = view.drop_axis(scene.bounds.min);
        let (hi, _) = view.drop_axis(scene.bounds.max);
        let min = [lo[0].min(hi[0]), lo[1].min(hi[1])];
        let max = [lo[0].max(hi[0]), lo[1].max(hi[1])];
        let pad = [(max[0] - min[0]) * margin, (max[1] - min[1]) * margin];
        Window {
            min: [min[0] - pad[0], min[1] - pad[1]],
            max: [max[0] + pad[0], max[1] + pad[1]],
        }
    }

    fn check(&self) -> Result<(), RenderError> {
        let w = self.max[0] - self.min[0];
        let h = self.max[1] - self.min[1];
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return Err(RenderError::DegenerateWindow {
                min: self.min,
                max: self.max,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB, row 0 at the top.
    pub pixels: Vec<u8>,
}

pub const WHITE: [u8; 3] = [255, 255, 255];

impl RasterImage {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, RenderError> {
        if width == 0 || height == 0 {
            return Err(RenderError::EmptyImage(width, height));
        }
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(3 * n);
        for _ in 0..n {
            pixels.extend_from_slice(&rgb);
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Fill shapes back to front. Pixels are sampled at their centres with no
/// anti-aliasing; image row 0 is the top of the window.
pub fn rasterize(
    projection: &ViewProjection,
    width: u32,
    height: u32,
    window: Window,
) -> Result<RasterImage, RenderError> {
    window.check()?;
    let mut img = RasterImage::filled(width, height, WHITE)?;
    let sx = (window.max[0] - window.min[0]) / width as f64;
    let sy = (window.max[1] - window.min[1]) / height as f64;
    for shape in &projection.shapes {
        let (lo, hi) = shape.outline.bounds();
        let col = |u: f64| ((u - window.min[0]) / sx - 0.5).clamp(-1.0, width as f64);
        let row = |v: f64| ((window.max[1] - v) / sy - 0.5).clamp(-1.0, height as f64);
        let c0 = col(lo[0]).floor().max(0.0) as u32;
        let c1 = (col(hi[0]).ceil() as i64).min(width as i64 - 1);
        let r0 = row(hi[1]).floor().max(0.0) as u32;
        let r1 = (row(lo[1]).ceil() as i64).min(height as i64 - 1);
        if c1 < 0 || r1 < 0 {
            continue;
        }
        let rgb = shape.color.rgb();
        for j in r0..=r1 as u32 {
            let v = window.max[1] - (j as f64 + 0.5) * sy;
            for i in c0..=c1 as u32 {
                let u = window.min[0] + (i as f64 + 0.5) * sx;
                if shape.outline.contains([u, v]) {
                    img.set(i, j, rgb);
                }
            }
        }
    }
    Ok(img)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Ppm,
    #[default]
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Ppm => "ppm",
            ImageFormat::Png => "png",
        }
    }
}

/// `<instance_id>_img<k>.<ext>`, k 1-based.
pub fn image_file_name(instance_id: &str, k: usize, format: ImageFormat) -> String {
    format!("{instance_id}_img{k}.{}", format.extension())
}

pub fn encode_ppm(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width, img.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| RenderError::Png(e.to_string()))?;
        writer
            .write_image_data(&img.pixels)
            .map_err(|e| RenderError::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn encode(img: &RasterImage, format: ImageFormat) -> Result<Vec<u8>, RenderError> {
    match format {
        ImageFormat::Ppm => Ok(encode_ppm(img)),
        ImageFormat::Png => encode_png(img),
    }
}

pub fn emit_image(img: &RasterImage, format: ImageFormat, path: &Path) -> Result<(), RenderError> {
    let bytes = encode(img, format)?;
    let io = |source| RenderError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = BufWriter::new(File::create(path).map_err(io)?);
    f.write_all(&bytes).map_err(io)?;
    f.flush().map_err(io)
}

/// Parse a binary P6 image with maxval 255.
pub fn parse_ppm(bytes: &[u8]) -> Result<RasterImage, RenderError> {
    let bad = |m: &str| RenderError::MalformedPpm(m.to_string());
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != "P6" {
        return Err(bad("magic is not P6"));
    }
    let num = |s: &str| s.parse::<u32>().map_err(|_| bad("bad number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    let len = 3 * width as usize * height as usize;
    if width == 0 || height == 0 || bytes.len() < pos + len {
        return Err(bad("pixel data length mismatch"));
    }
    Ok(RasterImage {
        width,
        height,
        pixels: bytes[pos..pos + len].to_vec(),
    })
}
