//! Ground truth from instance-labelled rasters, plus XS/S/M size categories.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::pnm;
use crate::raster::RasterImage;

/// Lower bound of category S: 22.5² pixels.
pub const S_MIN_AREA: f64 = 506.25;
/// Upper bound of category S: 32² pixels. M is strictly larger.
pub const S_MAX_AREA: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeCategory {
    XS,
    S,
    M,
}

impl SizeCategory {
    pub const ALL: [SizeCategory; 3] = [SizeCategory::XS, SizeCategory::S, SizeCategory::M];
}

impl fmt::Display for SizeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeCategory::XS => "XS",
            SizeCategory::S => "S",
            SizeCategory::M => "M",
        })
    }
}

/// XS below 506.25 px, M above 1024 px, S in between (inclusive).
pub fn size_category(area: u64) -> Result<SizeCategory> {
    if area == 0 {
        return Err(Error::ZeroArea);
    }
    Ok(if (area as f64) < S_MIN_AREA {
        SizeCategory::XS
    } else if area > S_MAX_AREA {
        SizeCategory::M
    } else {
        SizeCategory::S
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthObject {
    pub instance_id: u32,
    pub mask: BinaryMask,
    pub area: u64,
    pub category: SizeCategory,
}

impl GroundTruthObject {
    pub fn new(instance_id: u32, mask: BinaryMask) -> Result<Self> {
        let area = mask.area();
        let category = size_category(area)?;
        Ok(Self {
            instance_id,
            mask,
            area,
            category,
        })
    }
}

/// Row-major grid of 16-bit instance ids; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMap {
    width: u32,
    height: u32,
    labels: Vec<u16>,
}

impl InstanceMap {
    pub fn new(width: u32, height: u32, labels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("instance map {width}x{height} is empty")));
        }
        if labels.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "instance map has {} labels, expected {width}x{height}",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn from_raster(img: &RasterImage) -> Result<Self> {
        if img.channels() != 1 {
            return Err(Error::Pnm("instance map must be single-channel".into()));
        }
        Self::new(img.width(), img.height(), img.samples().to_vec())
    }

    pub fn to_raster(&self) -> RasterImage {
        RasterImage::new(self.width, self.height, 1, 16, self.labels.clone())
            .expect("instance map dimensions already validated")
    }

    /// Loads a 16-bit `P5` file where each sample is an instance id.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_raster(&pnm::read(path)?)
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        pnm::write(&self.to_raster(), path)
    }
}

/// One object per distinct nonzero id, sorted by id.
pub fn extract_instances(map: &InstanceMap) -> Vec<GroundTruthObject> {
    let w = map.width;
    let mut spans: BTreeMap<u16, Vec<(u32, u32)>> = BTreeMap::new();
    for (y, row) in map.labels.chunks_exact(w as usize).enumerate() {
        let base = y as u32 * w;
        let mut x = 0usize;
        while x < row.len() {
            let id = row[x];
            let start = x;
            while x < row.len() && row[x] == id {
                x += 1;
            }
            if id != 0 {
                spans
                    .entry(id)
                    .or_default()
                    .push((base + start as u32, base + x as u32));
            }
        }
    }
    spans
        .into_iter()
        .map(|(id, iv)| {
            let mask = BinaryMask::from_intervals(w, map.height, iv);
            GroundTruthObject::new(id as u32, mask).expect("nonempty by construction")
        })
        .collect()
}
