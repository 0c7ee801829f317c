//! JSON-lines proposal exchange.
//!
//! One record per line with keys in a fixed order:
//!
//! ```text
//! {"image_id":"scene_42_0","tile_index":null,"width":4,"height":2,"objectness":0.912500,"runs":[1,2,5]}
//! ```
//!
//! `tile_index` is `null` for whole-image coordinates, otherwise the index of
//! the tile (in the grid the consumer is configured with) whose frame the mask
//! lives in. `objectness` is always printed with six decimals, so writing the
//! same records twice yields identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::pipeline::Proposal;

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalRecord {
    pub image_id: String,
    pub tile_index: Option<usize>,
    pub width: u32,
    pub height: u32,
    pub objectness: f64,
    pub runs: Vec<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    image_id: String,
    #[serde(default)]
    tile_index: Option<usize>,
    width: u32,
    height: u32,
    objectness: f64,
    runs: Vec<u32>,
}

impl ProposalRecord {
    pub fn from_proposal(image_id: &str, tile_index: Option<usize>, p: &Proposal) -> Self {
        Self {
            image_id: image_id.to_string(),
            tile_index,
            width: p.mask.width(),
            height: p.mask.height(),
            objectness: p.objectness,
            runs: p.mask.runs().to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.objectness) {
            return Err(Error::Validation(format!(
                "objectness {} outside [0, 1]",
                self.objectness
            )));
        }
        self.mask().map(|_| ())
    }

    pub fn mask(&self) -> Result<BinaryMask> {
        BinaryMask::from_runs(self.width, self.height, self.runs.clone())
    }

    pub fn to_proposal(&self) -> Result<Proposal> {
        self.validate()?;
        Ok(Proposal {
            mask: self.mask()?,
            objectness: self.objectness,
        })
    }

    /// Canonical single-line form, without the trailing newline.
    pub fn to_line(&self) -> String {
        let mut s = String::with_capacity(96 + self.runs.len() * 4);
        s.push_str("{\"image_id\":");
        s.push_str(&serde_json::to_string(&self.image_id).expect("strings always serialize"));
        s.push_str(",\"tile_index\":");
        match self.tile_index {
            Some(i) => write!(s, "{i}").unwrap(),
            None => s.push_str("null"),
        }
        write!(
            s,
            ",\"width\":{},\"height\":{},\"objectness\":{:.6},\"runs\":[",
            self.width, self.height, self.objectness
        )
        .unwrap();
        for (i, r) in self.runs.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{r}").unwrap();
        }
        s.push_str("]}");
        s
    }
}

/// Parses JSONL text; `origin` only labels error messages.
pub fn parse_proposals(text: &str, origin: &Path) -> Result<Vec<ProposalRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: n + 1,
            msg: e.to_string(),
        })?;
        let rec = ProposalRecord {
            image_id: raw.image_id,
            tile_index: raw.tile_index,
            width: raw.width,
            height: raw.height,
            objectness: raw.objectness,
            runs: raw.runs,
        };
        rec.validate().map_err(|e| Error::Record {
            path: origin.to_path_buf(),
            line: n + 1,
            source: Box::new(e),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_proposals(path: impl AsRef<Path>) -> Result<Vec<ProposalRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_proposals(&text, path)
}

/// Canonical serialization of a record list.
pub fn serialize_proposals(records: &[ProposalRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn write_proposals(records: &[ProposalRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ctx = || format!("writing {}", path.display());
    let mut f = fs::File::create(path).map_err(|e| Error::io(ctx(), e))?;
    f.write_all(serialize_proposals(records).as_bytes())
        .map_err(|e| Error::io(ctx(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, objectness: f64) -> ProposalRecord {
        ProposalRecord {
            image_id: id.into(),
            tile_index: None,
            width: 4,
            height: 2,
            objectness,
            runs: vec![1, 2, 5],
        }
    }

    #[test]
    fn documented_line() {
        assert_eq!(
            rec("scene_42_0", 0.9125).to_line(),
            r#"{"image_id":"scene_42_0","tile_index":null,"width":4,"height":2,"objectness":0.912500,"runs":[1,2,5]}"#
        );
        let mut r = rec("a\"b", 1.0);
        r.tile_index = Some(3);
        assert_eq!(
            r.to_line(),
            r#"{"image_id":"a\"b","tile_index":3,"width":4,"height":2,"objectness":1.000000,"runs":[1,2,5]}"#
        );
    }

    #[test]
    fn empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        write_proposals(&[], &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"");
        assert!(read_proposals(&p).unwrap().is_empty());
    }

    #[test]
    fn roundtrip_preserves_order_and_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        let recs = vec![rec("b", 0.5), rec("a", 0.25)];
        write_proposals(&recs, &p).unwrap();
        let first = fs::read(&p).unwrap();
        let back = read_proposals(&p).unwrap();
        assert_eq!(back, recs);
        write_proposals(&back, &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
    }

    #[test]
    fn tile_index_may_be_omitted() {
        let recs = parse_proposals(
            r#"{"image_id":"x","width":4,"height":2,"objectness":0.5,"runs":[8]}"#,
            Path::new("mem"),
        )
        .unwrap();
        assert_eq!(recs[0].tile_index, None);
    }

    #[test]
    fn validation_errors_name_the_line() {
        let good = rec("x", 0.5).to_line();
        let bad = rec("x", 1.5).to_line();
        let text = format!("{good}\n\n{bad}\n");
        match parse_proposals(&text, Path::new("f.jsonl")) {
            Err(Error::Record { line: 3, source, .. }) => assert!(matches!(*source, Error::Validation(_))),
            other => panic!("unexpected {other:?}"),
        }
        match parse_proposals("{not json", Path::new("f.jsonl")) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let mut corrupt = rec("x", 0.5);
        corrupt.runs = vec![1, 2, 4];
        match parse_proposals(&corrupt.to_line(), Path::new("f.jsonl")) {
            Err(Error::Record { line: 1, source, .. }) => {
                assert!(matches!(*source, Error::RleCorrupt { sum: 7, expected: 8 }))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_proposals(
            r#"{"image_id":"x","width":4,"height":2,"objectness":0.5,"runs":[8],"extra":1}"#,
            Path::new("m")
        )
        .is_err());
    }

    fn record() -> impl Strategy<Value = ProposalRecord> {
        (
            "[a-z0-9_\"\\\\ ]{0,12}",
            prop::option::of(0usize..64),
            1u32..20,
            1u32..20,
            0u32..=1_000_000,
            any::<u64>(),
        )
            .prop_map(|(id, tile, w, h, score, bits)| {
                let pixels: Vec<bool> = (0..w * h).map(|i| (bits >> (i % 64)) & 1 == 1).collect();
                let mask = BinaryMask::encode(w, h, &pixels).unwrap();
                ProposalRecord {
                    image_id: id,
                    tile_index: tile,
                    width: w,
                    height: h,
                    objectness: score as f64 / 1e6,
                    runs: mask.into_runs(),
                }
            })
    }

    proptest! {
        #[test]
        fn read_inverts_write(recs in prop::collection::vec(record(), 0..8)) {
            let text = serialize_proposals(&recs);
            let back = parse_proposals(&text, Path::new("mem")).unwrap();
            prop_assert_eq!(&back, &recs);
            prop_assert_eq!(serialize_proposals(&back), text);
        }
    }
}
