use tileprop::pipeline::{to_records, DEFAULT_NMS_IOU, DEFAULT_TOP_K};
use tileprop::synth::{list_scenes, write_scene};
use tileprop::{
    evaluate_dataset, extract_instances, generate_scene, pnm, read_proposals, run_tiled, run_whole, write_proposals,
    ImageResult, InstanceMap, Preset, ProposalSource, SceneSpec, TileGridSpec,
};

fn scene(seed: u64) -> tileprop::Scene {
    generate_scene(&SceneSpec {
        seed,
        ..SceneSpec::default()
    })
    .unwrap()
}

#[test]
fn scene_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene(3);
    let files = write_scene(&s, dir.path(), "a").unwrap();
    assert_eq!(pnm::read(&files.image).unwrap(), s.image);
    let map = InstanceMap::read_pgm(&files.instances).unwrap();
    assert_eq!(map, s.instances);
    assert_eq!(extract_instances(&map), s.objects);
    assert_eq!(list_scenes(dir.path()).unwrap(), vec![files]);
}

#[test]
fn tiling_helps_small_objects() {
    let am = Preset::Attentionmask.profile();
    let mut tiled_images = Vec::new();
    let mut whole_images = Vec::new();
    for seed in 0..4 {
        let s = scene(seed);
        let src = ProposalSource::Simulated(&am);
        let grid = TileGridSpec::default();
        let tiled = run_tiled(1280, 720, &s.objects, src, grid, DEFAULT_NMS_IOU, DEFAULT_TOP_K).unwrap();
        let whole = run_whole(1280, 720, &s.objects, src, DEFAULT_NMS_IOU, DEFAULT_TOP_K).unwrap();
        assert!(tiled.len() <= DEFAULT_TOP_K);
        for (out, proposals) in [(&mut tiled_images, tiled), (&mut whole_images, whole)] {
            out.push(ImageResult {
                image_id: seed.to_string(),
                gt: s.objects.clone(),
                proposals,
            });
        }
    }
    let t = evaluate_dataset("tiled", &tiled_images).unwrap();
    let w = evaluate_dataset("whole", &whole_images).unwrap();
    assert!(t.ar_xs_at_100.unwrap() > w.ar_xs_at_100.unwrap());
    assert!(t.ar_at_10.unwrap() <= t.ar_at_100.unwrap());
}

#[test]
fn proposals_survive_the_exchange_format() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene(9);
    let am = Preset::Attentionmask.profile();
    let props = run_whole(1280, 720, &s.objects, ProposalSource::Simulated(&am), 0.7, 100).unwrap();
    let path = dir.path().join("p.jsonl");
    write_proposals(&to_records("x", &props), &path).unwrap();
    let back: Vec<_> = read_proposals(&path)
        .unwrap()
        .iter()
        .map(|r| r.to_proposal().unwrap())
        .collect();
    assert_eq!(back, props);
}

#[test]
fn documented_record_bytes() {
    use tileprop::BinaryMask;
    let bits = [
        false, true, true, false, //
        false, true, false, false, //
        false, false, false, false,
    ];
    let mask = BinaryMask::encode(4, 3, &bits).unwrap();
    assert_eq!(mask.runs(), [1, 2, 2, 1, 6]);
    let rec = tileprop::ProposalRecord::from_proposal(
        "scene_42_0",
        None,
        &tileprop::Proposal {
            mask,
            objectness: 0.9123456,
        },
    );
    let text = tileprop::exchange::serialize_proposals(&[rec]);
    assert_eq!(
        text,
        "{\"image_id\":\"scene_42_0\",\"tile_index\":null,\"width\":4,\"height\":3,\"objectness\":0.912346,\"runs\":[1,2,2,1,6]}\n"
    );
    assert_eq!(text.len(), 106);
}
