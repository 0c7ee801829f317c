//! Visualization of matched and missed ground truth.

use crate::annotations::GroundTruthObject;
use crate::error::Result;
use crate::mask::BinaryMask;
use crate::pipeline::Proposal;
use crate::raster::RasterImage;

use super::match_proposals;

const MISSED: [u16; 3] = [255, 0, 0];

const PALETTE: [[u16; 3]; 8] = [
    [0, 200, 255],
    [255, 220, 0],
    [0, 255, 120],
    [255, 0, 255],
    [80, 120, 255],
    [255, 140, 0],
    [160, 255, 0],
    [255, 255, 255],
];

pub fn instance_color(id: u32) -> [u16; 3] {
    PALETTE[id as usize % PALETTE.len()]
}

fn to_rgb8(image: &RasterImage) -> RasterImage {
    let shift = if image.depth() == 16 { 8 } else { 0 };
    let samples: Vec<u16> = if image.channels() == 3 {
        image.samples().iter().map(|&v| v >> shift).collect()
    } else {
        image.samples().iter().flat_map(|&v| [v >> shift; 3]).collect()
    };
    RasterImage::new(image.width(), image.height(), 3, 8, samples).expect("same dimensions")
}

/// Calls `f(x, y, on_contour)` for each foreground pixel of `mask`.
fn for_each_pixel(mask: &BinaryMask, mut f: impl FnMut(u32, u32, bool)) {
    let b = mask.bbox();
    if b.is_empty() {
        return;
    }
    let local = mask.crop(b.x, b.y, b.w, b.h).expect("bbox inside mask");
    let bits = local.decode();
    let at = |x: i64, y: i64| x >= 0 && y >= 0 && x < b.w as i64 && y < b.h as i64 && bits[(y * b.w as i64 + x) as usize];
    for y in 0..b.h as i64 {
        for x in 0..b.w as i64 {
            if !at(x, y) {
                continue;
            }
            let edge = !(at(x - 1, y) && at(x + 1, y) && at(x, y - 1) && at(x, y + 1));
            f(b.x + x as u32, b.y + y as u32, edge);
        }
    }
}

/// RGB rendering: every ground truth object with an assigned proposal gets
/// that proposal drawn as a half-transparent fill with a colored contour;
/// objects without one get a red outline only.
pub fn render_overlay(
    image: &RasterImage,
    gt: &[GroundTruthObject],
    proposals: &[Proposal],
) -> Result<RasterImage> {
    let mut out = to_rgb8(image);
    let assignment = match_proposals(gt, proposals)?;
    for obj in gt {
        match assignment.pairs.iter().find(|p| p.gt_id == obj.instance_id) {
            Some(pair) => {
                let color = instance_color(obj.instance_id);
                for_each_pixel(&proposals[pair.proposal].mask, |x, y, edge| {
                    let px: [u16; 3] = if edge {
                        color
                    } else {
                        let cur = out.pixel(x, y);
                        [0, 1, 2].map(|c| (cur[c] + color[c]).div_ceil(2))
                    };
                    out.set_pixel(x, y, &px);
                });
            }
            None => for_each_pixel(&obj.mask, |x, y, edge| {
                if edge {
                    out.set_pixel(x, y, &MISSED);
                }
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::rect_mask;

    fn scene() -> (RasterImage, Vec<GroundTruthObject>) {
        let img = RasterImage::filled(60, 40, 3, 8, 40).unwrap();
        let gt = vec![
            GroundTruthObject::new(1, rect_mask(60, 40, 5, 5, 10, 10).unwrap()).unwrap(),
            GroundTruthObject::new(2, rect_mask(60, 40, 30, 10, 12, 12).unwrap()).unwrap(),
        ];
        (img, gt)
    }

    fn red_pixels(img: &RasterImage) -> usize {
        img.samples().chunks(3).filter(|p| p == &MISSED).count()
    }

    #[test]
    fn no_proposals_outlines_everything_red() {
        let (img, gt) = scene();
        let out = render_overlay(&img, &gt, &[]).unwrap();
        // perimeter pixels of 10x10 and 12x12 squares
        assert_eq!(red_pixels(&out), 36 + 44);
        for (a, b) in img.samples().chunks(3).zip(out.samples().chunks(3)) {
            assert!(a == b || b == MISSED);
        }
    }

    #[test]
    fn perfect_proposals_fill_without_red() {
        let (img, gt) = scene();
        let props: Vec<Proposal> = gt
            .iter()
            .map(|g| Proposal { mask: g.mask.clone(), objectness: 1.0 })
            .collect();
        let out = render_overlay(&img, &gt, &props).unwrap();
        assert_eq!(red_pixels(&out), 0);
        // centroid of object 1 is (9.5, 9.5)
        assert_ne!(out.pixel(9, 9), img.pixel(9, 9));
        assert_ne!(out.pixel(35, 15), img.pixel(35, 15));
        assert_eq!(out.pixel(50, 35), img.pixel(50, 35));
    }

    #[test]
    fn gray16_input_is_converted() {
        let img = RasterImage::filled(4, 4, 1, 16, 0x8000).unwrap();
        let out = render_overlay(&img, &[], &[]).unwrap();
        assert_eq!((out.channels(), out.depth()), (3, 8));
        assert_eq!(out.pixel(0, 0), &[128, 128, 128]);
    }
}
