//! Average Recall over IoU thresholds 0.50:0.05:0.95, with greedy one-to-one
//! matching and size-stratified variants.

mod overlay;
mod report;

pub use overlay::render_overlay;
pub use report::{ARReport, SystemMetrics};

use rayon::prelude::*;

use crate::annotations::{GroundTruthObject, SizeCategory};
use crate::error::Result;
use crate::mask::BBox;
use crate::pipeline::Proposal;

/// The ten IoU thresholds, exactly as decimal literals.
pub const IOU_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

pub const BUDGET_SMALL: usize = 10;
pub const BUDGET_LARGE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub gt_id: u32,
    pub proposal: usize,
    pub iou: f64,
}

/// One-to-one pairing of ground truth objects and proposals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<MatchPair>,
}

impl Assignment {
    pub fn iou_of(&self, gt_id: u32) -> Option<f64> {
        self.pairs.iter().find(|p| p.gt_id == gt_id).map(|p| p.iou)
    }
}

/// Greedy matching: all positive-IoU pairs sorted by IoU (descending), ties
/// by lower gt id then lower proposal index; a pair is taken when both sides
/// are still free.
pub fn match_proposals(gt: &[GroundTruthObject], proposals: &[Proposal]) -> Result<Assignment> {
    let gt_boxes: Vec<BBox> = gt.iter().map(|g| g.mask.bbox()).collect();
    let p_boxes: Vec<BBox> = proposals.iter().map(|p| p.mask.bbox()).collect();
    let mut candidates = Vec::new();
    for (gi, g) in gt.iter().enumerate() {
        for (pi, p) in proposals.iter().enumerate() {
            if !gt_boxes[gi].intersects(&p_boxes[pi]) {
                continue;
            }
            let iou = g.mask.iou(&p.mask)?;
            if iou > 0.0 {
                candidates.push((gi, pi, iou));
            }
        }
    }
    Ok(assign_greedy(
        candidates
            .into_iter()
            .map(|(gi, pi, iou)| MatchPair {
                gt_id: gt[gi].instance_id,
                proposal: pi,
                iou,
            })
            .collect(),
    ))
}

/// Greedy one-to-one selection over scored candidate pairs (see
/// [`match_proposals`]). Pairs with IoU 0 are ignored.
pub fn assign_greedy(mut candidates: Vec<MatchPair>) -> Assignment {
    candidates.retain(|c| c.iou > 0.0);
    candidates.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.gt_id.cmp(&b.gt_id))
            .then(a.proposal.cmp(&b.proposal))
    });
    let mut gt_used = std::collections::HashSet::new();
    let mut p_used = std::collections::HashSet::new();
    let pairs = candidates
        .into_iter()
        .filter(|c| {
            if gt_used.contains(&c.gt_id) || p_used.contains(&c.proposal) {
                return false;
            }
            gt_used.insert(c.gt_id);
            p_used.insert(c.proposal);
            true
        })
        .collect();
    Assignment { pairs }
}

/// Hit counts per IoU threshold over a pool of ground truth objects.
///
/// Counts add across images, which is how dataset-level recall is pooled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecallCounts {
    pub total: u64,
    pub hits: [u64; 10],
}

impl RecallCounts {
    pub fn from_assignment<'a>(gt: impl IntoIterator<Item = &'a GroundTruthObject>, assignment: &Assignment) -> Self {
        let mut c = RecallCounts::default();
        for g in gt {
            c.total += 1;
            if let Some(iou) = assignment.iou_of(g.instance_id) {
                for (h, &t) in c.hits.iter_mut().zip(&IOU_THRESHOLDS) {
                    if iou >= t {
                        *h += 1;
                    }
                }
            }
        }
        c
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.total += other.total;
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        self
    }

    /// Recall at the `i`-th threshold; `None` without ground truth.
    pub fn recall(&self, i: usize) -> Option<f64> {
        (self.total > 0).then(|| self.hits[i] as f64 / self.total as f64)
    }

    /// Mean recall over the thresholds; `None` without ground truth.
    pub fn average_recall(&self) -> Option<f64> {
        (self.total > 0).then(|| self.hits.iter().sum::<u64>() as f64 / (IOU_THRESHOLDS.len() as u64 * self.total) as f64)
    }
}

/// AR of one ground truth set; `None` signals that `gt` is empty.
pub fn average_recall(gt: &[GroundTruthObject], assignment: &Assignment) -> Option<f64> {
    RecallCounts::from_assignment(gt, assignment).average_recall()
}

/// Ground truth and ranked proposals of one image.
#[derive(Debug, Clone, Default)]
pub struct ImageResult {
    pub image_id: String,
    pub gt: Vec<GroundTruthObject>,
    pub proposals: Vec<Proposal>,
}

/// Pooled counts for one image: `[@10, @100, XS@100, S@100, M@100]`.
fn image_counts(img: &ImageResult) -> Result<[RecallCounts; 5]> {
    let top = |k: usize| &img.proposals[..img.proposals.len().min(k)];
    let at_small = match_proposals(&img.gt, top(BUDGET_SMALL))?;
    let at_large = match_proposals(&img.gt, top(BUDGET_LARGE))?;
    let mut out = [
        RecallCounts::from_assignment(&img.gt, &at_small),
        RecallCounts::from_assignment(&img.gt, &at_large),
        RecallCounts::default(),
        RecallCounts::default(),
        RecallCounts::default(),
    ];
    for (slot, cat) in out[2..].iter_mut().zip(SizeCategory::ALL) {
        let restricted: Vec<GroundTruthObject> = img.gt.iter().filter(|g| g.category == cat).cloned().collect();
        let a = match_proposals(&restricted, top(BUDGET_LARGE))?;
        *slot = RecallCounts::from_assignment(&restricted, &a);
    }
    Ok(out)
}

/// Table-style metrics for one system over a dataset.
pub fn evaluate_dataset(system: &str, images: &[ImageResult]) -> Result<SystemMetrics> {
    let per_image: Vec<[RecallCounts; 5]> = images.par_iter().map(image_counts).collect::<Result<_>>()?;
    let pooled = per_image.into_iter().fold([RecallCounts::default(); 5], |acc, c| {
        [
            acc[0].merge(c[0]),
            acc[1].merge(c[1]),
            acc[2].merge(c[2]),
            acc[3].merge(c[3]),
            acc[4].merge(c[4]),
        ]
    });
    Ok(SystemMetrics::from_counts(system, &pooled))
}

/// Recall curves `[@10, @100]` pooled over the dataset.
pub fn recall_curves(images: &[ImageResult]) -> Result<[RecallCounts; 2]> {
    let mut acc = [RecallCounts::default(); 2];
    for img in images {
        let c = image_counts(img)?;
        acc[0] = acc[0].merge(c[0]);
        acc[1] = acc[1].merge(c[1]);
    }
    Ok(acc)
}
