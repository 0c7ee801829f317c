//! Tiled and whole-image proposal pipelines.
//!
//! Per tile: produce tile-local proposals, remap them to image coordinates.
//! Then over the whole image: concatenate, suppress near-duplicates, rank by
//! objectness and keep the top `k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotations::GroundTruthObject;
use crate::detector::{simulate, DetectorProfile, Region};
use crate::error::{Error, Result};
use crate::exchange::ProposalRecord;
use crate::mask::{BBox, BinaryMask};
use crate::tiling::{localize_mask, plan_grid, remap_mask, Tile, TileGridSpec};

pub const DEFAULT_NMS_IOU: f64 = 0.7;
pub const DEFAULT_TOP_K: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub mask: BinaryMask,
    pub objectness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum GridMode {
    Whole,
    Tiled(TileGridSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub grid: GridMode,
    pub nms_iou: f64,
    pub top_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: GridMode::Tiled(TileGridSpec::default()),
            nms_iou: DEFAULT_NMS_IOU,
            top_k: DEFAULT_TOP_K,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nms_iou > 0.0 && self.nms_iou <= 1.0) {
            return Err(Error::Config(format!("nms_iou {} outside (0, 1]", self.nms_iou)));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }

    /// Tile grid for an image of the given size.
    pub fn tiles(&self, img_w: u32, img_h: u32) -> Result<Vec<Tile>> {
        let spec = match self.grid {
            GridMode::Whole => TileGridSpec::whole(img_w, img_h),
            GridMode::Tiled(s) => s,
        };
        plan_grid(img_w, img_h, &spec)
    }
}

/// Where tile-local proposals come from.
#[derive(Debug, Clone, Copy)]
pub enum ProposalSource<'a> {
    /// Simulated detector run on the ground truth of each tile.
    Simulated(&'a DetectorProfile),
    /// Records produced elsewhere for this image.
    Exchange(&'a [ProposalRecord]),
}

/// Ground truth restricted to a tile, in tile coordinates.
pub fn tile_ground_truth(tile: &Tile, gt: &[GroundTruthObject], boxes: &[BBox]) -> Vec<GroundTruthObject> {
    let tb = BBox {
        x: tile.x0,
        y: tile.y0,
        w: tile.w,
        h: tile.h,
    };
    gt.iter()
        .zip(boxes)
        .filter(|(_, b)| b.intersects(&tb))
        .filter_map(|(o, _)| {
            let local = localize_mask(tile, &o.mask).ok()?;
            GroundTruthObject::new(o.instance_id, local).ok()
        })
        .collect()
}

/// Greedy non-maximum suppression.
///
/// Candidates are visited by objectness (descending), then mask area
/// (descending), then input order; one is kept iff its IoU with every kept
/// proposal is below `threshold`.
pub fn nms(proposals: Vec<Proposal>, threshold: f64) -> Vec<Proposal> {
    let mut ranked: Vec<(Proposal, u64, BBox)> = proposals
        .into_iter()
        .map(|p| {
            let area = p.mask.area();
            let bbox = p.mask.bbox();
            (p, area, bbox)
        })
        .collect();
    // stable: equal keys keep insertion order
    ranked.sort_by(|a, b| b.0.objectness.total_cmp(&a.0.objectness).then(b.1.cmp(&a.1)));

    let mut kept: Vec<(Proposal, u64, BBox)> = Vec::new();
    for cand in ranked {
        let suppressed = kept.iter().any(|k| {
            k.2.intersects(&cand.2) && k.0.mask.iou(&cand.0.mask).map(|v| v >= threshold).unwrap_or(false)
        });
        if !suppressed {
            kept.push(cand);
        }
    }
    kept.into_iter().map(|k| k.0).collect()
}

fn tile_proposals(
    tile: &Tile,
    img_w: u32,
    img_h: u32,
    gt: &[GroundTruthObject],
    boxes: &[BBox],
    profile: &DetectorProfile,
) -> Result<Vec<Proposal>> {
    let local_gt = tile_ground_truth(tile, gt, boxes);
    let region = Region {
        x0: tile.x0,
        y0: tile.y0,
        w: tile.w,
        h: tile.h,
    };
    simulate(profile, region, &local_gt)
        .into_iter()
        .map(|p| {
            Ok(Proposal {
                mask: remap_mask(tile, &p.mask, img_w, img_h)?,
                objectness: p.objectness,
            })
        })
        .collect()
}

fn exchange_proposals(records: &[ProposalRecord], tiles: &[Tile], img_w: u32, img_h: u32) -> Result<Vec<Proposal>> {
    records
        .iter()
        .map(|r| {
            let local = r.to_proposal()?;
            let mask = match r.tile_index {
                None => {
                    if r.width != img_w || r.height != img_h {
                        return Err(Error::SizeMismatch {
                            a_w: r.width,
                            a_h: r.height,
                            b_w: img_w,
                            b_h: img_h,
                        });
                    }
                    local.mask
                }
                Some(i) => {
                    let tile = tiles.get(i).ok_or(Error::UnknownTile {
                        index: i,
                        len: tiles.len(),
                    })?;
                    remap_mask(tile, &local.mask, img_w, img_h)?
                }
            };
            Ok(Proposal {
                mask,
                objectness: local.objectness,
            })
        })
        .collect()
}

/// Runs the pipeline on one image of `img_w`x`img_h` pixels.
///
/// `gt` is only read by the simulated source.
pub fn run(
    img_w: u32,
    img_h: u32,
    gt: &[GroundTruthObject],
    source: ProposalSource<'_>,
    config: &PipelineConfig,
) -> Result<Vec<Proposal>> {
    config.validate()?;
    let tiles = config.tiles(img_w, img_h)?;
    let merged: Vec<Proposal> = match source {
        ProposalSource::Simulated(profile) => {
            profile.validate()?;
            let boxes: Vec<BBox> = gt.iter().map(|o| o.mask.bbox()).collect();
            let per_tile: Vec<Vec<Proposal>> = tiles
                .par_iter()
                .map(|t| tile_proposals(t, img_w, img_h, gt, &boxes, profile))
                .collect::<Result<_>>()?;
            per_tile.into_iter().flatten().collect()
        }
        ProposalSource::Exchange(records) => exchange_proposals(records, &tiles, img_w, img_h)?,
    };
    let mut kept = nms(merged, config.nms_iou);
    kept.truncate(config.top_k);
    Ok(kept)
}

/// Tiled processing with the given grid.
pub fn run_tiled(
    img_w: u32,
    img_h: u32,
    gt: &[GroundTruthObject],
    source: ProposalSource<'_>,
    grid: TileGridSpec,
    nms_iou: f64,
    top_k: usize,
) -> Result<Vec<Proposal>> {
    let config = PipelineConfig {
        grid: GridMode::Tiled(grid),
        nms_iou,
        top_k,
    };
    run(img_w, img_h, gt, source, &config)
}

/// The untiled baseline: the whole image is one region.
pub fn run_whole(
    img_w: u32,
    img_h: u32,
    gt: &[GroundTruthObject],
    source: ProposalSource<'_>,
    nms_iou: f64,
    top_k: usize,
) -> Result<Vec<Proposal>> {
    let config = PipelineConfig {
        grid: GridMode::Whole,
        nms_iou,
        top_k,
    };
    run(img_w, img_h, gt, source, &config)
}

/// Whole-image exchange records for a final proposal list.
pub fn to_records(image_id: &str, proposals: &[Proposal]) -> Vec<ProposalRecord> {
    proposals
        .iter()
        .map(|p| ProposalRecord::from_proposal(image_id, None, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Preset;
    use crate::mask::rect_mask;
    use proptest::prelude::*;

    fn sq(x: u32, score: f64) -> Proposal {
        Proposal {
            mask: rect_mask(40, 20, x, 0, 10, 10).unwrap(),
            objectness: score,
        }
    }

    fn gt_square(id: u32, x: u32, y: u32, side: u32) -> GroundTruthObject {
        GroundTruthObject::new(id, rect_mask(1280, 720, x, y, side, side).unwrap()).unwrap()
    }

    #[test]
    fn nms_examples() {
        let out = nms(vec![sq(0, 0.8), sq(0, 0.9)], 0.7);
        assert_eq!(out, vec![sq(0, 0.9)]);

        let out = nms(vec![sq(0, 0.5), sq(20, 0.6)], 0.7);
        assert_eq!(out, vec![sq(20, 0.6), sq(0, 0.5)]);

        let (a, b, c) = (sq(0, 0.9), sq(5, 0.8), sq(10, 0.7));
        // brute-force pairwise IoUs on decoded grids
        let brute = |p: &Proposal, q: &Proposal| {
            let (x, y) = (p.mask.decode(), q.mask.decode());
            let i = x.iter().zip(&y).filter(|(u, v)| **u && **v).count() as f64;
            let u = x.iter().zip(&y).filter(|(u, v)| **u || **v).count() as f64;
            i / u
        };
        assert_eq!(brute(&a, &b), 1.0 / 3.0);
        assert_eq!(brute(&a, &c), 0.0);
        let out = nms(vec![a.clone(), b, c.clone()], 0.3);
        assert_eq!(out, vec![a, c]);
    }

    #[test]
    fn nms_ties_prefer_larger_then_earlier() {
        let small = Proposal {
            mask: rect_mask(40, 20, 0, 0, 5, 5).unwrap(),
            objectness: 0.5,
        };
        let big = Proposal {
            mask: rect_mask(40, 20, 20, 0, 10, 10).unwrap(),
            objectness: 0.5,
        };
        let out = nms(vec![small.clone(), big.clone()], 0.7);
        assert_eq!(out, vec![big, small]);
        let first = sq(0, 0.5);
        let second = Proposal { mask: rect_mask(40, 20, 0, 0, 10, 10).unwrap(), objectness: 0.5 };
        assert_eq!(nms(vec![first.clone(), second], 0.7).len(), 1);
    }

    #[test]
    fn whole_equals_single_tile() {
        let gt: Vec<_> = (0..20).map(|i| gt_square(i + 1, 60 * i, 30 + 10 * i, 20 + 2 * i)).collect();
        let p = Preset::Attentionmask4To16.profile();
        let whole = run_whole(1280, 720, &gt, ProposalSource::Simulated(&p), 0.7, 100).unwrap();
        let tiled = run_tiled(
            1280,
            720,
            &gt,
            ProposalSource::Simulated(&p),
            TileGridSpec::whole(1280, 720),
            0.7,
            100,
        )
        .unwrap();
        assert!(!whole.is_empty());
        assert_eq!(whole, tiled);
    }

    #[test]
    fn duplicate_detections_across_tiles_collapse() {
        // inside four overlapping tiles of the default grid
        let gt = vec![gt_square(1, 200, 150, 20)];
        let p = DetectorProfile { jitter: 0, ..Preset::Attentionmask.profile() };
        let config = PipelineConfig::default();
        let tiles = config.tiles(1280, 720).unwrap();
        let containing = tiles
            .iter()
            .filter(|t| t.contains(200, 150) && t.contains(219, 169))
            .count();
        assert!(containing >= 2);
        let out = run(1280, 720, &gt, ProposalSource::Simulated(&p), &config).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].mask, gt[0].mask);
    }

    #[test]
    fn truncates_to_top_k() {
        let gt: Vec<_> = (0..40)
            .map(|i| gt_square(i + 1, 30 * (i % 40), 300, 20 + (i % 7)))
            .collect();
        let p = Preset::Attentionmask4To16.profile();
        let all = run_whole(1280, 720, &gt, ProposalSource::Simulated(&p), 0.7, 1000).unwrap();
        let top = run_whole(1280, 720, &gt, ProposalSource::Simulated(&p), 0.7, 5).unwrap();
        assert!(all.len() > 5);
        assert_eq!(top.len(), 5);
        assert_eq!(&all[..5], &top[..]);
        assert!(top.windows(2).all(|w| w[0].objectness >= w[1].objectness));
    }

    #[test]
    fn empty_ground_truth() {
        let p = Preset::Attentionmask.profile();
        assert!(run_whole(1280, 720, &[], ProposalSource::Simulated(&p), 0.7, 100).unwrap().is_empty());
    }

    #[test]
    fn exchange_records_are_remapped() {
        let local = rect_mask(320, 240, 5, 5, 10, 10).unwrap();
        let rec = ProposalRecord {
            image_id: "img".into(),
            tile_index: Some(8),
            width: 320,
            height: 240,
            objectness: 0.5,
            runs: local.into_runs(),
        };
        let config = PipelineConfig::default();
        let tile = config.tiles(1280, 720).unwrap()[8];
        let recs = [rec.clone()];
        let out = run(1280, 720, &[], ProposalSource::Exchange(&recs), &config).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].mask.bbox(), BBox { x: tile.x0 + 5, y: tile.y0 + 5, w: 10, h: 10 });

        let unknown = [ProposalRecord { tile_index: Some(99), ..rec }];
        assert!(matches!(
            run(1280, 720, &[], ProposalSource::Exchange(&unknown), &config),
            Err(Error::UnknownTile { index: 99, len: 35 })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let p = Preset::Attentionmask.profile();
        let bad = PipelineConfig { top_k: 0, ..PipelineConfig::default() };
        assert!(run(1280, 720, &[], ProposalSource::Simulated(&p), &bad).is_err());
        let bad = PipelineConfig { nms_iou: 0.0, ..PipelineConfig::default() };
        assert!(run(1280, 720, &[], ProposalSource::Simulated(&p), &bad).is_err());
    }

    fn proposals() -> impl Strategy<Value = Vec<Proposal>> {
        prop::collection::vec((0u32..30, 0u32..20, 1u32..12, 1u32..12, 0u32..=20), 0..25).prop_map(|v| {
            v.into_iter()
                .map(|(x, y, w, h, s)| Proposal {
                    mask: rect_mask(40, 30, x, y, w, h).unwrap(),
                    objectness: s as f64 / 20.0,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn nms_idempotent_and_bounded(ps in proptest::collection::vec(proposals(), 1).prop_map(|mut v| v.remove(0)), t in 0.05f64..=1.0) {
            let once = nms(ps, t);
            for i in 0..once.len() {
                for j in i + 1..once.len() {
                    prop_assert!(once[i].mask.iou(&once[j].mask).unwrap() < t);
                }
            }
            prop_assert!(once.windows(2).all(|w| w[0].objectness >= w[1].objectness));
            let twice = nms(once.clone(), t);
            prop_assert_eq!(twice, once);
        }
    }
}
