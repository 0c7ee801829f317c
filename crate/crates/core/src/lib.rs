//! Tiled small-object proposal generation and size-stratified Average Recall
//! evaluation.
//!
//! The crate covers the whole path from pixels to a results table:
//!
//! - [`mask`]: run-length-encoded binary masks and exact IoU,
//! - [`pnm`] / [`raster`]: `P5`/`P6` image I/O,
//! - [`annotations`]: instance maps to ground truth with XS/S/M categories,
//! - [`tiling`]: overlapping tile grids and coordinate remapping,
//! - [`synth`]: deterministic synthetic orchard scenes,
//! - [`detector`]: a pyramid-geometry detector simulator,
//! - [`exchange`]: the JSON-lines proposal format,
//! - [`pipeline`]: per-tile proposals, merge, NMS, top-k,
//! - [`eval`]: matching, AR@K, reports and overlays.

pub mod annotations;
pub mod detector;
pub mod error;
pub mod eval;
pub mod exchange;
pub mod mask;
pub mod pipeline;
pub mod pnm;
pub mod raster;
pub mod rng;
pub mod synth;
pub mod tiling;

pub use annotations::{extract_instances, size_category, GroundTruthObject, InstanceMap, SizeCategory};
pub use detector::{detectable_range, simulate, DetectorProfile, Preset, Region};
pub use error::{Error, Result};
pub use eval::{average_recall, evaluate_dataset, match_proposals, render_overlay, ARReport, Assignment, ImageResult, SystemMetrics};
pub use exchange::{read_proposals, write_proposals, ProposalRecord};
pub use mask::{BBox, BinaryMask};
pub use pipeline::{nms, run_tiled, run_whole, PipelineConfig, Proposal, ProposalSource};
pub use raster::RasterImage;
pub use synth::{generate_scene, Scene, SceneSpec};
pub use tiling::{plan_grid, verify_coverage, Tile, TileGridSpec};
