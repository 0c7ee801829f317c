use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tileprop::eval::ImageResult;
use tileprop::exchange::{read_proposals, write_proposals, ProposalRecord};
use tileprop::pipeline::{run as run_pipeline, to_records, GridMode, PipelineConfig, Proposal, ProposalSource};
use tileprop::synth::{list_scenes, scene_id, scene_seed, write_scene, SceneFiles};
use tileprop::{
    evaluate_dataset, extract_instances, generate_scene, pnm, render_overlay, ARReport, DetectorProfile,
    GroundTruthObject, InstanceMap, Preset, SceneSpec, TileGridSpec,
};

use crate::manifest::{system_label, RunConfig, RunManifest};
use crate::{parse_dims, CliError, EvalArgs, Mode, OverlayArgs, RunArgs, SynthArgs};

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let spec = SceneSpec {
        width: a.width,
        height: a.height,
        n_apples: a.apples,
        radius_min: a.radius_min,
        radius_max: a.radius_max,
        xs_fraction: a.xs_fraction,
        n_leaves: a.leaves,
        min_visible: a.min_visible,
        seed: a.seed,
    };
    spec.validate()?;
    create_dir(&a.out)?;
    let files: Vec<SceneFiles> = (0..a.count)
        .into_par_iter()
        .map(|i| {
            let scene = generate_scene(&SceneSpec {
                seed: scene_seed(a.seed, i),
                ..spec.clone()
            })?;
            Ok(write_scene(&scene, &a.out, &scene_id(a.seed, i))?)
        })
        .collect::<Result<_, CliError>>()?;
    let outputs = files
        .iter()
        .flat_map(|f| [file_name(&f.image), file_name(&f.instances)])
        .collect();
    let config = RunConfig::Synth {
        count: a.count,
        seed: a.seed,
        scene: spec,
    };
    RunManifest::new(config, vec![], outputs).write(&a.out)
}

fn detector_profile(a: &RunArgs) -> Result<DetectorProfile, CliError> {
    let preset: Preset = a.detector.parse()?;
    let mut p = preset.profile();
    if let Some(path) = &a.detector_config {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        p.apply_config(&text)?;
    }
    if let Some(v) = &a.input {
        let d = parse_dims(v, "input")?;
        p.input_w = d.w;
        p.input_h = d.h;
    }
    if let Some(v) = &a.levels {
        p.set("levels", v)?;
    }
    if let Some(v) = a.fill_min {
        p.fill_min = v;
    }
    if let Some(v) = a.fill_max {
        p.fill_max = v;
    }
    if let Some(v) = a.jitter {
        p.jitter = v;
    }
    if let Some(v) = a.objectness_noise {
        p.objectness_noise = v;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    p.validate()?;
    Ok(p)
}

fn load_gt(files: &SceneFiles) -> Result<(InstanceMap, Vec<GroundTruthObject>), CliError> {
    let map = InstanceMap::read_pgm(&files.instances)?;
    let gt = extract_instances(&map);
    Ok((map, gt))
}

fn exchange_records(dir: &Path, id: &str) -> Result<Vec<ProposalRecord>, CliError> {
    let path = dir.join(format!("{id}.jsonl"));
    if !path.exists() {
        return Ok(Vec::new());
    }
    let recs = read_proposals(&path)?;
    if let Some(r) = recs.iter().find(|r| r.image_id != id) {
        return Err(CliError::Data(format!(
            "{}: record for image {:?} in file of {id:?}",
            path.display(),
            r.image_id
        )));
    }
    Ok(recs)
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    let grid = match a.mode {
        Mode::Whole => GridMode::Whole,
        Mode::Tiled => {
            let t = parse_dims(&a.tile, "tile")?;
            let s = parse_dims(&a.stride, "stride")?;
            GridMode::Tiled(TileGridSpec::new(t.w, t.h, s.w, s.h)?)
        }
    };
    let config = PipelineConfig {
        grid,
        nms_iou: a.nms_iou,
        top_k: a.top_k,
    };
    config.validate()?;
    let profile = match &a.exchange {
        None => Some(detector_profile(a)?),
        Some(_) => None,
    };

    let scenes = list_scenes(&a.scenes)?;
    create_dir(&a.out)?;
    let outputs: Vec<String> = scenes
        .par_iter()
        .map(|files| {
            let (map, gt) = load_gt(files)?;
            let records;
            let source = match (&profile, &a.exchange) {
                (Some(p), _) => ProposalSource::Simulated(p),
                (None, Some(dir)) => {
                    records = exchange_records(dir, &files.id)?;
                    ProposalSource::Exchange(&records)
                }
                (None, None) => unreachable!("profile is built when no exchange dir is given"),
            };
            let proposals = run_pipeline(map.width(), map.height(), &gt, source, &config)?;
            let path = a.out.join(format!("{}.jsonl", files.id));
            write_proposals(&to_records(&files.id, &proposals), &path)?;
            Ok(file_name(&path))
        })
        .collect::<Result<_, CliError>>()?;

    let source = match &a.exchange {
        Some(_) => "exchange".to_string(),
        None => a.detector.clone(),
    };
    let seed = profile.as_ref().map(|p| p.seed);
    let mut inputs = vec![a.scenes.display().to_string()];
    if let Some(dir) = &a.exchange {
        inputs.push(dir.display().to_string());
    }
    let manifest = RunManifest::new(
        RunConfig::Run {
            source,
            detector: profile,
            grid,
            nms_iou: a.nms_iou,
            top_k: a.top_k,
            seed,
        },
        inputs,
        outputs,
    );
    manifest.write(&a.out)
}

/// Whole-image proposals of one file, ranked by objectness (stable).
fn load_ranked(path: &Path, id: &str, width: u32, height: u32) -> Result<Vec<Proposal>, CliError> {
    let mut out = Vec::new();
    for r in read_proposals(path)? {
        if r.image_id != id {
            return Err(CliError::Data(format!(
                "{}: record for image {:?} in file of {id:?}",
                path.display(),
                r.image_id
            )));
        }
        if r.tile_index.is_some() || r.width != width || r.height != height {
            return Err(CliError::Data(format!(
                "{}: expected whole-image {width}x{height} records",
                path.display()
            )));
        }
        out.push(r.to_proposal()?);
    }
    out.sort_by(|a, b| b.objectness.total_cmp(&a.objectness));
    Ok(out)
}

fn proposal_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "jsonl") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let scenes = list_scenes(&a.scenes)?;
    let files = proposal_files(&a.proposals)?;
    if !files.is_empty() {
        let scene_ids: BTreeSet<&str> = scenes.iter().map(|s| s.id.as_str()).collect();
        let missing: Vec<&str> = scene_ids.iter().copied().filter(|id| !files.contains_key(*id)).collect();
        let unknown: Vec<&str> = files.keys().map(String::as_str).filter(|id| !scene_ids.contains(id)).collect();
        if !missing.is_empty() || !unknown.is_empty() {
            return Err(CliError::Data(format!(
                "id mismatch between scenes and proposals; missing proposals: [{}]; unknown ids: [{}]",
                missing.join(", "),
                unknown.join(", ")
            )));
        }
    }
    let images: Vec<ImageResult> = scenes
        .par_iter()
        .map(|s| {
            let (map, gt) = load_gt(s)?;
            let proposals = match files.get(&s.id) {
                Some(p) => load_ranked(p, &s.id, map.width(), map.height())?,
                None => Vec::new(),
            };
            Ok(ImageResult {
                image_id: s.id.clone(),
                gt,
                proposals,
            })
        })
        .collect::<Result<_, CliError>>()?;

    let system = a
        .system
        .clone()
        .or_else(|| system_label(&a.proposals))
        .unwrap_or_else(|| file_name(&a.proposals));
    let report = ARReport::new(vec![evaluate_dataset(&system, &images)?]);
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    for (ext, body) in [
        ("txt", report.to_text()),
        ("json", report.to_json()),
        ("csv", report.to_csv()),
    ] {
        let path = a.out.with_extension(ext);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    print!("{}", report.to_text());
    Ok(())
}

pub fn overlay(a: &OverlayArgs) -> Result<(), CliError> {
    let image = pnm::read(&a.image)?;
    let map = InstanceMap::read_pgm(&a.instances)?;
    if (map.width(), map.height()) != (image.width(), image.height()) {
        return Err(CliError::Data(format!(
            "image is {}x{} but instance map is {}x{}",
            image.width(),
            image.height(),
            map.width(),
            map.height()
        )));
    }
    let gt = extract_instances(&map);
    let mut proposals = Vec::new();
    for r in read_proposals(&a.proposals)? {
        if r.tile_index.is_some() {
            return Err(CliError::Data("overlay expects whole-image proposals".into()));
        }
        proposals.push(r.to_proposal()?);
    }
    proposals.sort_by(|x, y| y.objectness.total_cmp(&x.objectness));
    proposals.truncate(a.top_k);
    let out = render_overlay(&image, &gt, &proposals)?;
    pnm::write(&out, &a.out)?;
    Ok(())
}
