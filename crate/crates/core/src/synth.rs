//! Deterministic synthetic orchard scenes: red disks ("apples") on a foliage
//! background, partially hidden by elliptical leaves, with a per-pixel
//! instance map of what remains visible.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotations::{extract_instances, GroundTruthObject, InstanceMap, S_MIN_AREA};
use crate::error::{Error, Result};
use crate::pnm;
use crate::raster::RasterImage;
use crate::rng::{mix64, SplitMix64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    pub n_apples: u32,
    pub radius_min: f64,
    pub radius_max: f64,
    pub xs_fraction: f64,
    pub n_leaves: u32,
    pub min_visible: u32,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 1280,
            height: 720,
            n_apples: 45,
            radius_min: 4.0,
            radius_max: 24.0,
            xs_fraction: 0.51,
            n_leaves: 40,
            min_visible: 16,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Dimension(format!(
                "scene canvas {}x{} has zero area",
                self.width, self.height
            )));
        }
        if !(self.radius_min >= 2.0) {
            return Err(Error::Config(format!("radius_min {} < 2", self.radius_min)));
        }
        if !(self.radius_max >= self.radius_min) {
            return Err(Error::Config(format!(
                "radius_max {} < radius_min {}",
                self.radius_max, self.radius_min
            )));
        }
        if !(0.0..=1.0).contains(&self.xs_fraction) {
            return Err(Error::Config(format!("xs_fraction {} outside [0, 1]", self.xs_fraction)));
        }
        if self.n_apples > u16::MAX as u32 {
            return Err(Error::Config(format!("at most {} apples per scene", u16::MAX)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: RasterImage,
    pub instances: InstanceMap,
    pub objects: Vec<GroundTruthObject>,
}

/// Radius whose disk area equals the XS/S boundary (22.5² px).
pub fn xs_radius() -> f64 {
    (S_MIN_AREA / std::f64::consts::PI).sqrt()
}

fn sample_radius(rng: &mut SplitMix64, spec: &SceneSpec) -> f64 {
    let split = xs_radius();
    let small = (spec.radius_min, split.min(spec.radius_max));
    let large = (split.max(spec.radius_min), spec.radius_max);
    let pick_small = rng.next_f64() < spec.xs_fraction;
    let u = rng.next_f64();
    let (lo, hi) = match (pick_small, small.0 < small.1, large.0 < large.1) {
        (true, true, _) | (false, true, false) => small,
        (_, _, true) => large,
        _ => (spec.radius_min, spec.radius_max),
    };
    lo + (hi - lo) * u
}

struct Canvas {
    w: u32,
    h: u32,
    rgb: Vec<u16>,
    labels: Vec<u16>,
}

impl Canvas {
    fn paint(&mut self, x: u32, y: u32, color: [u16; 3], label: u16) {
        let i = (y * self.w + x) as usize;
        self.rgb[3 * i..3 * i + 3].copy_from_slice(&color);
        self.labels[i] = label;
    }

    /// Calls `f` for every pixel whose center lies in the axis-aligned
    /// ellipse with center `(cx, cy)` and semi-axes `(ax, ay)`.
    fn for_ellipse(&mut self, cx: f64, cy: f64, ax: f64, ay: f64, mut f: impl FnMut(&mut Self, u32, u32, f64)) {
        let x0 = (cx - ax).floor().max(0.0) as u32;
        let y0 = (cy - ay).floor().max(0.0) as u32;
        let x1 = ((cx + ax).ceil().max(0.0) as u32).min(self.w);
        let y1 = ((cy + ay).ceil().max(0.0) as u32).min(self.h);
        for y in y0..y1 {
            let ny = (y as f64 + 0.5 - cy) / ay;
            for x in x0..x1 {
                let nx = (x as f64 + 0.5 - cx) / ax;
                let d2 = nx * nx + ny * ny;
                if d2 <= 1.0 {
                    f(self, x, y, d2);
                }
            }
        }
    }
}

fn jitter_channel(rng: &mut SplitMix64, base: u16, spread: u16) -> u16 {
    let v = base as i64 + rng.range_i64(-(spread as i64), spread as i64);
    v.clamp(0, 255) as u16
}

/// Renders a scene. Pure function of `spec`.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let n = w as usize * h as usize;
    let mut rng = SplitMix64::new(spec.seed);
    let mut canvas = Canvas {
        w,
        h,
        rgb: vec![0; 3 * n],
        labels: vec![0; n],
    };

    // foliage background with a vertical gradient and per-pixel noise
    for y in 0..h {
        let shade = 30 + (40 * y / h) as u16;
        for x in 0..w {
            let noise = rng.next_u64();
            let c = [
                shade + (noise & 0x1f) as u16,
                shade + 50 + ((noise >> 8) & 0x3f) as u16,
                shade / 2 + ((noise >> 16) & 0x1f) as u16,
            ];
            canvas.paint(x, y, c, 0);
        }
    }

    // apples, painter's order: later ones occlude earlier ones
    for id in 1..=spec.n_apples {
        let cx = rng.uniform(0.0, w as f64);
        let cy = rng.uniform(0.0, h as f64);
        let r = sample_radius(&mut rng, spec);
        let base = [
            rng.range_i64(170, 230) as u16,
            rng.range_i64(20, 70) as u16,
            rng.range_i64(20, 50) as u16,
        ];
        canvas.for_ellipse(cx, cy, r, r, |c, x, y, d2| {
            // darker toward the rim
            let k = 1.0 - 0.35 * d2;
            let color = base.map(|v| (v as f64 * k).round() as u16);
            c.paint(x, y, color, id as u16);
        });
    }

    // leaves drawn last; some take apple-like hues
    for _ in 0..spec.n_leaves {
        let cx = rng.uniform(0.0, w as f64);
        let cy = rng.uniform(0.0, h as f64);
        let long = rng.uniform(6.0, 30.0);
        let short = rng.uniform(3.0, 12.0);
        let (ax, ay) = if rng.next_f64() < 0.5 { (long, short) } else { (short, long) };
        let reddish = rng.next_f64() < 0.2;
        let base: [u16; 3] = if reddish { [150, 70, 40] } else { [60, 140, 50] };
        let color = [
            jitter_channel(&mut rng, base[0], 20),
            jitter_channel(&mut rng, base[1], 20),
            jitter_channel(&mut rng, base[2], 15),
        ];
        canvas.for_ellipse(cx, cy, ax, ay, |c, x, y, _| c.paint(x, y, color, 0));
    }

    // drop barely visible apples from the annotation
    let mut visible = vec![0u32; spec.n_apples as usize + 1];
    for &l in &canvas.labels {
        visible[l as usize] += 1;
    }
    for l in canvas.labels.iter_mut() {
        if *l != 0 && visible[*l as usize] < spec.min_visible {
            *l = 0;
        }
    }

    let image = RasterImage::new(w, h, 3, 8, canvas.rgb)?;
    let instances = InstanceMap::new(w, h, canvas.labels)?;
    let objects = extract_instances(&instances);
    Ok(Scene {
        image,
        instances,
        objects,
    })
}

/// Seed of the `index`-th scene in a batch started from `base`.
pub fn scene_seed(base: u64, index: u32) -> u64 {
    mix64(base ^ mix64(index as u64 + 1))
}

/// `scene_<seed>_<index>`.
pub fn scene_id(base_seed: u64, index: u32) -> String {
    format!("scene_{base_seed}_{index}")
}

/// Image and instance-map paths of one scene on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneFiles {
    pub id: String,
    pub image: PathBuf,
    pub instances: PathBuf,
}

impl SceneFiles {
    pub fn in_dir(dir: &Path, id: &str) -> Self {
        Self {
            id: id.to_string(),
            image: dir.join(format!("{id}.ppm")),
            instances: dir.join(format!("{id}.pgm")),
        }
    }
}

pub fn write_scene(scene: &Scene, dir: &Path, id: &str) -> Result<SceneFiles> {
    let files = SceneFiles::in_dir(dir, id);
    pnm::write(&scene.image, &files.image)?;
    scene.instances.write_pgm(&files.instances)?;
    Ok(files)
}

/// Every `*.pgm` instance map in `dir`, sorted by id. The paired image may be absent.
pub fn list_scenes(dir: &Path) -> Result<Vec<SceneFiles>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(format!("listing {}", dir.display()), e))?.path();
        if path.extension().is_some_and(|e| e == "pgm") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push(SceneFiles::in_dir(dir, stem));
            }
        }
    }
    out.sort_by_key(|f| natural_key(&f.id));
    Ok(out)
}

/// Orders `scene_42_10` after `scene_42_9`.
fn natural_key(id: &str) -> (String, u64, String) {
    match id.rsplit_once('_') {
        Some((head, tail)) if tail.parse::<u64>().is_ok() => (head.to_string(), tail.parse().unwrap(), String::new()),
        _ => (id.to_string(), 0, id.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::SizeCategory;

    fn small_spec(seed: u64) -> SceneSpec {
        SceneSpec {
            width: 200,
            height: 150,
            n_apples: 25,
            n_leaves: 10,
            seed,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn no_apples_no_objects() {
        let s = generate_scene(&SceneSpec { n_apples: 0, ..small_spec(1) }).unwrap();
        assert!(s.objects.is_empty());
        assert!(s.instances.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn deterministic() {
        let a = generate_scene(&small_spec(9)).unwrap();
        let b = generate_scene(&small_spec(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(pnm::encode(&a.image).unwrap(), pnm::encode(&b.image).unwrap());
        let c = generate_scene(&small_spec(10)).unwrap();
        assert_ne!(a.instances, c.instances);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(generate_scene(&SceneSpec { width: 0, ..small_spec(1) }).is_err());
        assert!(generate_scene(&SceneSpec { radius_min: 1.0, ..small_spec(1) }).is_err());
        assert!(generate_scene(&SceneSpec { radius_max: 3.0, ..small_spec(1) }).is_err());
        assert!(generate_scene(&SceneSpec { xs_fraction: 1.5, ..small_spec(1) }).is_err());
    }

    #[test]
    fn objects_respect_min_visible_and_disks() {
        let spec = small_spec(3);
        let s = generate_scene(&spec).unwrap();
        assert!(!s.objects.is_empty());
        for o in &s.objects {
            assert!(o.area >= spec.min_visible as u64);
            assert!(o.mask.bbox().side() as f64 <= 2.0 * spec.radius_max + 1.0);
        }
    }

    #[test]
    fn xs_fraction_near_target() {
        let spec = SceneSpec {
            n_apples: 200,
            seed: 42,
            ..SceneSpec::default()
        };
        let s = generate_scene(&spec).unwrap();
        let xs = s.objects.iter().filter(|o| o.category == SizeCategory::XS).count();
        let frac = xs as f64 / s.objects.len() as f64;
        assert!((0.40..=0.62).contains(&frac), "XS fraction {frac}");
    }

    #[test]
    fn scene_listing_is_natural_order() {
        let dir = tempfile::tempdir().unwrap();
        let scene = generate_scene(&SceneSpec { n_apples: 2, ..small_spec(1) }).unwrap();
        for i in [10, 2, 1] {
            write_scene(&scene, dir.path(), &scene_id(5, i)).unwrap();
        }
        let ids: Vec<String> = list_scenes(dir.path()).unwrap().into_iter().map(|f| f.id).collect();
        assert_eq!(ids, vec!["scene_5_1", "scene_5_2", "scene_5_10"]);
    }
}
