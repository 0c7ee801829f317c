//! Overlapping tile grids and tile/image coordinate remapping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::raster::RasterImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGridSpec {
    pub tile_w: u32,
    pub tile_h: u32,
    pub stride_x: u32,
    pub stride_y: u32,
}

impl Default for TileGridSpec {
    /// 320x240 tiles at 50% overlap.
    fn default() -> Self {
        Self {
            tile_w: 320,
            tile_h: 240,
            stride_x: 160,
            stride_y: 120,
        }
    }
}

impl TileGridSpec {
    pub fn new(tile_w: u32, tile_h: u32, stride_x: u32, stride_y: u32) -> Result<Self> {
        if tile_w == 0 || tile_h == 0 || stride_x == 0 || stride_y == 0 {
            return Err(Error::Config(format!(
                "tile {tile_w}x{tile_h} / stride {stride_x}x{stride_y} must be positive"
            )));
        }
        Ok(Self {
            tile_w,
            tile_h,
            stride_x,
            stride_y,
        })
    }

    /// A single tile covering the whole image.
    pub fn whole(img_w: u32, img_h: u32) -> Self {
        Self {
            tile_w: img_w,
            tile_h: img_h,
            stride_x: img_w,
            stride_y: img_h,
        }
    }
}

/// `W`x`H` pair as used on the command line (`320x240`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub w: u32,
    pub h: u32,
}

impl FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected WxH, got {s:?}"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let w: u32 = w.trim().parse().map_err(|_| bad())?;
        let h: u32 = h.trim().parse().map_err(|_| bad())?;
        if w == 0 || h == 0 {
            return Err(bad());
        }
        Ok(Dims { w, h })
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub index: usize,
    pub x0: u32,
    pub y0: u32,
    pub w: u32,
    pub h: u32,
}

impl Tile {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x0 + self.w && y >= self.y0 && y < self.y0 + self.h
    }
}

fn origins(len: u32, tile: u32, stride: u32) -> Vec<u32> {
    let last = len - tile;
    let mut out: Vec<u32> = (0..).map(|i| i * stride).take_while(|&o| o < last).collect();
    out.push(last);
    out
}

/// Row-major grid; the last column/row is clamped flush to the image edge.
pub fn plan_grid(img_w: u32, img_h: u32, spec: &TileGridSpec) -> Result<Vec<Tile>> {
    if spec.stride_x == 0 || spec.stride_y == 0 || spec.tile_w == 0 || spec.tile_h == 0 {
        return Err(Error::Config("tile size and stride must be positive".into()));
    }
    if spec.tile_w > img_w || spec.tile_h > img_h {
        return Err(Error::Config(format!(
            "tile {}x{} larger than image {img_w}x{img_h}",
            spec.tile_w, spec.tile_h
        )));
    }
    if spec.stride_x > spec.tile_w || spec.stride_y > spec.tile_h {
        return Err(Error::Config(format!(
            "stride {}x{} exceeds tile {}x{}; tiles would leave gaps",
            spec.stride_x, spec.stride_y, spec.tile_w, spec.tile_h
        )));
    }
    let xs = origins(img_w, spec.tile_w, spec.stride_x);
    let ys = origins(img_h, spec.tile_h, spec.stride_y);
    let mut tiles = Vec::with_capacity(xs.len() * ys.len());
    for &y0 in &ys {
        for &x0 in &xs {
            tiles.push(Tile {
                index: tiles.len(),
                x0,
                y0,
                w: spec.tile_w,
                h: spec.tile_h,
            });
        }
    }
    Ok(tiles)
}

/// Exact copy of the tile's pixels.
pub fn crop(image: &RasterImage, tile: &Tile) -> Result<RasterImage> {
    image.window(tile.x0, tile.y0, tile.w, tile.h)
}

/// Moves a tile-local mask onto the `img_w`x`img_h` canvas.
pub fn remap_mask(tile: &Tile, local: &BinaryMask, img_w: u32, img_h: u32) -> Result<BinaryMask> {
    if local.width() != tile.w || local.height() != tile.h {
        return Err(Error::SizeMismatch {
            a_w: local.width(),
            a_h: local.height(),
            b_w: tile.w,
            b_h: tile.h,
        });
    }
    local.paste(img_w, img_h, tile.x0, tile.y0)
}

/// Restricts a global mask to a tile, in tile-local coordinates.
pub fn localize_mask(tile: &Tile, global: &BinaryMask) -> Result<BinaryMask> {
    global.crop(tile.x0, tile.y0, tile.w, tile.h)
}

/// True iff every pixel lies in at least one tile.
pub fn verify_coverage(img_w: u32, img_h: u32, grid: &[Tile]) -> bool {
    // Sweep rows; per row, merge the x-intervals of tiles covering it.
    let mut spans: Vec<(u32, u32)> = Vec::new();
    for y in 0..img_h {
        spans.clear();
        spans.extend(
            grid.iter()
                .filter(|t| y >= t.y0 && y < t.y0.saturating_add(t.h))
                .map(|t| (t.x0, t.x0.saturating_add(t.w))),
        );
        spans.sort_unstable();
        let mut reach = 0u32;
        for &(s, e) in &spans {
            if s > reach {
                return false;
            }
            reach = reach.max(e);
        }
        if reach < img_w {
            return false;
        }
    }
    true
}
