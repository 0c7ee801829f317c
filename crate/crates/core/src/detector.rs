//! Simulated proposal generator.
//!
//! A feature-pyramid proposal network slides fixed `10x10`-cell windows over
//! each pyramid level; at a level downsampled by `d` a window spans `10·d`
//! input pixels, so each level can only localize objects within a band of
//! sizes. The simulator keeps exactly that geometry: an object is proposed
//! iff its side, after rescaling the region to the detector input, lies in
//! `[fill_min·10·min(levels), fill_max·10·max(levels)]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotations::GroundTruthObject;
use crate::error::{Error, Result};
use crate::pipeline::Proposal;
use crate::rng::SplitMix64;
use crate::tiling::Dims;

/// Downsampling factors a pyramid level may have.
pub const ALLOWED_LEVELS: [u32; 6] = [4, 8, 16, 32, 64, 128];
pub const WINDOW_CELLS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Attentionmask,
    #[serde(rename = "attentionmask-4-16")]
    Attentionmask4To16,
    Fastmask,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Attentionmask, Preset::Attentionmask4To16, Preset::Fastmask];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Attentionmask => "attentionmask",
            Preset::Attentionmask4To16 => "attentionmask-4-16",
            Preset::Fastmask => "fastmask",
        }
    }

    pub fn levels(self) -> &'static [u32] {
        match self {
            Preset::Attentionmask => &[8, 16, 32, 64, 128],
            Preset::Attentionmask4To16 => &[4, 8, 16],
            Preset::Fastmask => &[16, 32, 64, 128],
        }
    }

    pub fn profile(self) -> DetectorProfile {
        DetectorProfile {
            name: self.name().to_string(),
            levels: self.levels().to_vec(),
            ..DetectorProfile::default()
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s || p.name().replace('-', "_") == s)
            .ok_or_else(|| Error::Config(format!("unknown detector {s:?}")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorProfile {
    pub name: String,
    pub input_w: u32,
    pub input_h: u32,
    pub levels: Vec<u32>,
    pub window_cells: u32,
    pub fill_min: f64,
    pub fill_max: f64,
    pub jitter: u32,
    pub objectness_noise: f64,
    pub seed: u64,
}

impl Default for DetectorProfile {
    fn default() -> Self {
        Self {
            name: Preset::Attentionmask.name().to_string(),
            input_w: 1280,
            input_h: 960,
            levels: Preset::Attentionmask.levels().to_vec(),
            window_cells: WINDOW_CELLS,
            fill_min: 0.4,
            fill_max: 1.0,
            jitter: 2,
            objectness_noise: 0.1,
            seed: 0,
        }
    }
}

impl DetectorProfile {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("detector needs at least one pyramid level".into()));
        }
        if let Some(l) = self.levels.iter().find(|l| !ALLOWED_LEVELS.contains(l)) {
            return Err(Error::Config(format!(
                "pyramid level {l} not in {ALLOWED_LEVELS:?}"
            )));
        }
        if self.window_cells == 0 {
            return Err(Error::Config("window_cells must be positive".into()));
        }
        if self.input_w == 0 || self.input_h == 0 {
            return Err(Error::Config("detector input size must be positive".into()));
        }
        if !(self.fill_min > 0.0 && self.fill_min < self.fill_max && self.fill_max <= 1.0) {
            return Err(Error::Config(format!(
                "need 0 < fill_min < fill_max <= 1, got {} / {}",
                self.fill_min, self.fill_max
            )));
        }
        if !(0.0..1.0).contains(&self.objectness_noise) {
            return Err(Error::Config(format!(
                "objectness_noise {} outside [0, 1)",
                self.objectness_noise
            )));
        }
        Ok(())
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} {value:?}"));
        match key {
            "name" => self.name = value.to_string(),
            "input" => {
                let d: Dims = value.parse()?;
                self.input_w = d.w;
                self.input_h = d.h;
            }
            "input_w" => self.input_w = value.parse().map_err(|_| bad(key))?,
            "input_h" => self.input_h = value.parse().map_err(|_| bad(key))?,
            "levels" => {
                let mut levels = value
                    .split(',')
                    .map(|v| v.trim().parse::<u32>().map_err(|_| bad(key)))
                    .collect::<Result<Vec<_>>>()?;
                levels.sort_unstable();
                levels.dedup();
                self.levels = levels;
            }
            "window_cells" => self.window_cells = value.parse().map_err(|_| bad(key))?,
            "fill_min" => self.fill_min = value.parse().map_err(|_| bad(key))?,
            "fill_max" => self.fill_max = value.parse().map_err(|_| bad(key))?,
            "jitter" => self.jitter = value.parse().map_err(|_| bad(key))?,
            "objectness_noise" => self.objectness_noise = value.parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            _ => return Err(Error::Config(format!("unknown detector key {key:?}"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    fn min_level(&self) -> u32 {
        *self.levels.iter().min().expect("validated nonempty")
    }

    fn max_level(&self) -> u32 {
        *self.levels.iter().max().expect("validated nonempty")
    }

    /// Window side in input pixels at pyramid level `d`.
    pub fn window_side(&self, level: u32) -> f64 {
        (self.window_cells * level) as f64
    }

    /// `(s_min, s_max)` in detector-input pixels.
    pub fn detectable_range(&self) -> (f64, f64) {
        (
            self.fill_min * self.window_side(self.min_level()),
            self.fill_max * self.window_side(self.max_level()),
        )
    }

    /// Confidence in `(0, 1]` for an object of side `s` input pixels; 1 at
    /// the geometric center of some level's band, `e^-1` at band edges.
    pub fn band_score(&self, s: f64) -> f64 {
        let half = 0.5 * (self.fill_max / self.fill_min).ln();
        let center_fill = (self.fill_min * self.fill_max).sqrt();
        self.levels
            .iter()
            .map(|&d| {
                let z = (s / (center_fill * self.window_side(d))).ln() / half;
                (-z * z).exp()
            })
            .fold(f64::MIN_POSITIVE, f64::max)
    }
}

/// Free-function form of [`DetectorProfile::detectable_range`].
pub fn detectable_range(profile: &DetectorProfile) -> (f64, f64) {
    profile.detectable_range()
}

/// Area of the image handed to the detector, in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x0: u32,
    pub y0: u32,
    pub w: u32,
    pub h: u32,
}

/// Rounds to the 6 decimals carried by the exchange format.
pub fn quantize_objectness(v: f64) -> f64 {
    ((v.clamp(0.0, 1.0) * 1e6).round() / 1e6).clamp(0.0, 1.0)
}

/// Simulated proposals for the ground truth of one region.
///
/// `gt` masks are in region coordinates; so are the returned proposals.
pub fn simulate(profile: &DetectorProfile, region: Region, gt: &[GroundTruthObject]) -> Vec<Proposal> {
    let scale = (profile.input_w as f64 / region.w as f64).min(profile.input_h as f64 / region.h as f64);
    let (s_min, s_max) = profile.detectable_range();
    let jitter = profile.jitter as i64;
    gt.iter()
        .filter_map(|obj| {
            let side = obj.mask.bbox().side() as f64 * scale;
            if side < s_min || side > s_max {
                return None;
            }
            let mut rng = SplitMix64::keyed(
                profile.seed,
                &[region.x0 as u64, region.y0 as u64, obj.instance_id as u64],
            );
            let dx = rng.range_i64(-jitter, jitter);
            let dy = rng.range_i64(-jitter, jitter);
            let u = rng.next_f64();
            let mask = obj.mask.shift(dx, dy);
            if mask.is_empty() {
                return None;
            }
            let objectness = quantize_objectness((1.0 - profile.objectness_noise * u) * profile.band_score(side));
            Some(Proposal { mask, objectness })
        })
        .collect()
}
