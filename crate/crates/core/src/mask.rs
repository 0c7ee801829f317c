//! Run-length-encoded binary masks.
//!
//! Runs are counted in row-major scan order and alternate background and
//! foreground, starting with a (possibly empty) background run. The canonical
//! form has no zero-length run other than the leading one, which makes the
//! encoding of a given bitmap unique.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tight axis-aligned bound of a mask, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    /// Longer side.
    pub fn side(&self) -> u32 {
        self.w.max(self.h)
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        !self.is_empty()
            && !other.is_empty()
            && self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    runs: Vec<u32>,
}

impl BinaryMask {
    /// All-background mask.
    pub fn empty(width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            runs: vec![width * height],
        })
    }

    /// Validates an externally supplied run sequence.
    pub fn from_runs(width: u32, height: u32, runs: Vec<u32>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as u64 * height as u64;
        let sum: u64 = runs.iter().map(|&r| r as u64).sum();
        if sum != expected {
            return Err(Error::RleCorrupt { sum, expected });
        }
        if let Some(pos) = runs.iter().skip(1).position(|&r| r == 0) {
            return Err(Error::Validation(format!(
                "zero-length run at position {} (only the leading run may be empty)",
                pos + 1
            )));
        }
        Ok(Self {
            width,
            height,
            runs,
        })
    }

    /// Run-length encodes a row-major bitmap.
    pub fn encode(width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "bitmap has {} pixels, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        let mut runs = Vec::new();
        let mut current = false;
        let mut count = 0u32;
        for &b in bits {
            if b != current {
                runs.push(count);
                count = 0;
                current = b;
            }
            count += 1;
        }
        runs.push(count);
        Ok(Self {
            width,
            height,
            runs,
        })
    }

    /// Builds a mask from sorted, non-overlapping foreground intervals
    /// `[start, end)` over linear pixel indices. Adjacent intervals are merged.
    pub(crate) fn from_intervals<I>(width: u32, height: u32, intervals: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let total = width * height;
        let mut runs = Vec::new();
        let mut cursor = 0u32;
        let mut open: Option<(u32, u32)> = None;
        for (s, e) in intervals {
            debug_assert!(s < e && e <= total);
            match open {
                Some((os, oe)) if s <= oe => open = Some((os, oe.max(e))),
                Some((os, oe)) => {
                    runs.push(os - cursor);
                    runs.push(oe - os);
                    cursor = oe;
                    open = Some((s, e));
                }
                None => open = Some((s, e)),
            }
        }
        if let Some((os, oe)) = open {
            runs.push(os - cursor);
            runs.push(oe - os);
            cursor = oe;
        }
        if cursor < total || runs.is_empty() {
            runs.push(total - cursor);
        }
        Self {
            width,
            height,
            runs,
        }
    }

    /// Builds a mask from per-row spans `(y, x_start, x_end)` in scan order.
    pub(crate) fn from_row_spans<I>(width: u32, height: u32, spans: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32, u32)>,
    {
        Self::from_intervals(
            width,
            height,
            spans
                .into_iter()
                .filter(|&(_, x0, x1)| x0 < x1)
                .map(move |(y, x0, x1)| (y * width + x0, y * width + x1)),
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    pub fn into_runs(self) -> Vec<u32> {
        self.runs
    }

    /// Expands to a row-major bitmap.
    pub fn decode(&self) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.width as usize * self.height as usize);
        let mut value = false;
        for &r in &self.runs {
            bits.extend(std::iter::repeat_n(value, r as usize));
            value = !value;
        }
        bits
    }

    /// Foreground intervals `[start, end)` over linear pixel indices.
    pub fn intervals(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let mut pos = 0u32;
        self.runs.iter().enumerate().filter_map(move |(i, &r)| {
            let start = pos;
            pos += r;
            (i % 2 == 1).then_some((start, pos))
        })
    }

    /// Foreground spans split per row: `(y, x_start, x_end)`.
    pub fn row_spans(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        let w = self.width;
        self.intervals().flat_map(move |(s, e)| {
            let first = s / w;
            let last = (e - 1) / w;
            (first..=last).map(move |y| {
                let row0 = y * w;
                (y, s.max(row0) - row0, e.min(row0 + w) - row0)
            })
        })
    }

    pub fn is_empty(&self) -> bool {
        self.runs.len() < 2
    }

    pub fn area(&self) -> u64 {
        self.runs.iter().skip(1).step_by(2).map(|&r| r as u64).sum()
    }

    /// Tight bounding box; `(0, 0, 0, 0)` for an empty mask.
    pub fn bbox(&self) -> BBox {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
        for (y, s, e) in self.row_spans() {
            x0 = x0.min(s);
            x1 = x1.max(e);
            y0 = y0.min(y);
            y1 = y1.max(y + 1);
        }
        if x0 == u32::MAX {
            return BBox::default();
        }
        BBox {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }

    fn check_same_size(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::SizeMismatch {
                a_w: self.width,
                a_h: self.height,
                b_w: other.width,
                b_h: other.height,
            });
        }
        Ok(())
    }

    /// Number of pixels set in both masks, computed run-wise.
    pub fn intersection_area(&self, other: &Self) -> Result<u64> {
        self.check_same_size(other)?;
        let mut a = self.intervals().peekable();
        let mut b = other.intervals().peekable();
        let mut inter = 0u64;
        while let (Some(&(as_, ae)), Some(&(bs, be))) = (a.peek(), b.peek()) {
            let lo = as_.max(bs);
            let hi = ae.min(be);
            if lo < hi {
                inter += (hi - lo) as u64;
            }
            if ae <= be {
                a.next();
            } else {
                b.next();
            }
        }
        Ok(inter)
    }

    /// Intersection over union; 0 when both masks are empty.
    pub fn iou(&self, other: &Self) -> Result<f64> {
        let inter = self.intersection_area(other)?;
        let union = self.area() + other.area() - inter;
        Ok(if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        })
    }

    /// Translates the foreground by `(dx, dy)`; pixels leaving the canvas are dropped.
    pub fn shift(&self, dx: i64, dy: i64) -> Self {
        if dx == 0 && dy == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as i64, self.height as i64);
        let spans = self.row_spans().filter_map(|(y, s, e)| {
            let ny = y as i64 + dy;
            let ns = (s as i64 + dx).max(0);
            let ne = (e as i64 + dx).min(w);
            (ny >= 0 && ny < h && ns < ne).then_some((ny as u32, ns as u32, ne as u32))
        });
        Self::from_row_spans(self.width, self.height, spans)
    }

    /// The `w`x`h` window at `(x0, y0)` as a mask of that size.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<Self> {
        check_dims(w, h)?;
        if x0 as u64 + w as u64 > self.width as u64 || y0 as u64 + h as u64 > self.height as u64 {
            return Err(Error::OutOfBounds(format!(
                "crop {w}x{h} at ({x0},{y0}) outside {}x{} mask",
                self.width, self.height
            )));
        }
        let spans = self.row_spans().filter_map(|(y, s, e)| {
            if y < y0 || y >= y0 + h {
                return None;
            }
            let s = s.max(x0);
            let e = e.min(x0 + w);
            (s < e).then(|| (y - y0, s - x0, e - x0))
        });
        Ok(Self::from_row_spans(w, h, spans))
    }

    /// Places this mask onto a larger `width`x`height` canvas at `(x0, y0)`.
    pub fn paste(&self, width: u32, height: u32, x0: u32, y0: u32) -> Result<Self> {
        check_dims(width, height)?;
        if x0 as u64 + self.width as u64 > width as u64 || y0 as u64 + self.height as u64 > height as u64 {
            return Err(Error::OutOfBounds(format!(
                "{}x{} mask at ({x0},{y0}) does not fit {width}x{height}",
                self.width, self.height
            )));
        }
        let spans = self.row_spans().map(|(y, s, e)| (y + y0, s + x0, e + x0));
        Ok(Self::from_row_spans(width, height, spans))
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!("mask {width}x{height} is empty")));
    }
    if width as u64 * height as u64 > u32::MAX as u64 {
        return Err(Error::Dimension(format!("mask {width}x{height} too large")));
    }
    Ok(())
}

/// Mask of an axis-aligned filled rectangle, clipped to the canvas.
pub fn rect_mask(width: u32, height: u32, x: u32, y: u32, w: u32, h: u32) -> Result<BinaryMask> {
    check_dims(width, height)?;
    let x1 = (x + w).min(width);
    let y1 = (y + h).min(height);
    Ok(BinaryMask::from_row_spans(
        width,
        height,
        (y.min(height)..y1).map(|row| (row, x.min(width), x1)),
    ))
}
