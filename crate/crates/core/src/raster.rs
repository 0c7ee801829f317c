//! Plain row-major sample buffers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u8,
    depth: u8,
    samples: Vec<u16>,
}

impl RasterImage {
    /// Builds an image, checking buffer length and sample range.
    pub fn new(width: u32, height: u32, channels: u8, depth: u8, samples: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("image {width}x{height} is empty")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Dimension(format!("unsupported channel count {channels}")));
        }
        if depth != 8 && depth != 16 {
            return Err(Error::Dimension(format!("unsupported bit depth {depth}")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(Error::Dimension(format!(
                "sample buffer has {} entries, expected {expected}",
                samples.len()
            )));
        }
        if depth == 8 {
            if let Some(v) = samples.iter().find(|&&v| v > 255) {
                return Err(Error::Dimension(format!("sample {v} exceeds 8-bit range")));
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            depth,
            samples,
        })
    }

    /// A constant-valued image.
    pub fn filled(width: u32, height: u32, channels: u8, depth: u8, value: u16) -> Result<Self> {
        let n = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, depth, vec![value; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn max_value(&self) -> u16 {
        if self.depth == 8 {
            255
        } else {
            u16::MAX
        }
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    /// Samples of one pixel (1 or 3 values).
    pub fn pixel(&self, x: u32, y: u32) -> &[u16] {
        let o = self.offset(x, y);
        &self.samples[o..o + self.channels as usize]
    }

    /// Overwrites one pixel. Values must already be in range for the depth.
    pub fn set_pixel(&mut self, x: u32, y: u32, value: &[u16]) {
        debug_assert_eq!(value.len(), self.channels as usize);
        let o = self.offset(x, y);
        self.samples[o..o + self.channels as usize].copy_from_slice(value);
    }

    /// Copies the `w`x`h` window whose top-left corner is `(x0, y0)`.
    pub fn window(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 || x0 as u64 + w as u64 > self.width as u64 || y0 as u64 + h as u64 > self.height as u64 {
            return Err(Error::OutOfBounds(format!(
                "window {w}x{h} at ({x0},{y0}) outside {}x{} image",
                self.width, self.height
            )));
        }
        let c = self.channels as usize;
        let mut samples = Vec::with_capacity(w as usize * h as usize * c);
        for y in y0..y0 + h {
            let start = self.offset(x0, y);
            samples.extend_from_slice(&self.samples[start..start + w as usize * c]);
        }
        Ok(Self {
            width: w,
            height: h,
            channels: self.channels,
            depth: self.depth,
            samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(RasterImage::new(2, 2, 1, 8, vec![0; 3]).is_err());
        assert!(RasterImage::new(2, 2, 1, 8, vec![0, 0, 0, 256]).is_err());
        assert!(RasterImage::new(0, 2, 1, 8, vec![]).is_err());
        assert!(RasterImage::new(1, 1, 2, 8, vec![0, 0]).is_err());
        assert!(RasterImage::new(1, 1, 1, 16, vec![65535]).is_ok());
    }

    #[test]
    fn window_copies_rows() {
        let samples: Vec<u16> = (0..12).collect();
        let img = RasterImage::new(4, 3, 1, 8, samples).unwrap();
        let w = img.window(1, 1, 2, 2).unwrap();
        assert_eq!(w.samples(), &[5, 6, 9, 10]);
        assert!(img.window(3, 0, 2, 1).is_err());
    }
}
