//! Binary portable anymap I/O: `P5` (8/16-bit gray) and `P6` (8-bit RGB).
//!
//! Written files always use the header `P5\n<w> <h>\n<maxval>\n` (or `P6`),
//! with maxval 255 for 8-bit and 65535 for 16-bit data. 16-bit samples are
//! big-endian. The reader accepts any whitespace between header tokens and
//! `#` comments, as netpbm does.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::RasterImage;

/// Serializes an image to PNM bytes.
pub fn encode(img: &RasterImage) -> Result<Vec<u8>> {
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::Pnm(format!("cannot encode {c}-channel image"))),
    };
    if img.channels() == 3 && img.depth() != 8 {
        return Err(Error::Pnm("P6 output supports 8-bit samples only".into()));
    }
    let header = format!("{magic}\n{} {}\n{}\n", img.width(), img.height(), img.max_value());
    let bytes_per = if img.depth() == 8 { 1 } else { 2 };
    let mut out = Vec::with_capacity(header.len() + img.samples().len() * bytes_per);
    out.extend_from_slice(header.as_bytes());
    if img.depth() == 8 {
        out.extend(img.samples().iter().map(|&v| v as u8));
    } else {
        for &v in img.samples() {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    Ok(out)
}

struct Header {
    magic: [u8; 2],
    width: u32,
    height: u32,
    maxval: u32,
    data_start: usize,
}

fn parse_header(data: &[u8]) -> Result<Header> {
    if data.len() < 2 || data[0] != b'P' {
        return Err(Error::Pnm("missing magic number".into()));
    }
    let magic = [data[0], data[1]];
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match data.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = data.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(Error::Pnm("truncated header".into())),
            }
        }
        let start = pos;
        while data.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Pnm(format!("expected a number at byte {start}")));
        }
        let text = std::str::from_utf8(&data[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::Pnm(format!("header value {text} out of range")))?;
    }
    // exactly one whitespace byte separates maxval from the payload
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Pnm("missing whitespace after maxval".into())),
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        maxval: fields[2],
        data_start: pos,
    })
}

/// Parses PNM bytes into an image. Only `P5` and `P6` are accepted.
pub fn decode(data: &[u8]) -> Result<RasterImage> {
    let h = parse_header(data)?;
    let channels: u8 = match &h.magic {
        b"P5" => 1,
        b"P6" => 3,
        m => {
            return Err(Error::Pnm(format!(
                "unsupported format {}",
                String::from_utf8_lossy(m)
            )))
        }
    };
    if h.width == 0 || h.height == 0 {
        return Err(Error::Pnm(format!("empty image {}x{}", h.width, h.height)));
    }
    if h.maxval == 0 || h.maxval > 65535 {
        return Err(Error::Pnm(format!("maxval {} out of range", h.maxval)));
    }
    let depth: u8 = if h.maxval < 256 { 8 } else { 16 };
    if channels == 3 && depth != 8 {
        return Err(Error::Pnm("16-bit P6 is not supported".into()));
    }
    let n = h.width as usize * h.height as usize * channels as usize;
    let payload = &data[h.data_start..];
    let bytes_per = if depth == 8 { 1 } else { 2 };
    if payload.len() < n * bytes_per {
        return Err(Error::Pnm(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            n * bytes_per
        )));
    }
    let samples: Vec<u16> = if depth == 8 {
        payload[..n].iter().map(|&b| b as u16).collect()
    } else {
        payload[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(v) = samples.iter().find(|&&v| v as u32 > h.maxval) {
        return Err(Error::Pnm(format!("sample {v} exceeds maxval {}", h.maxval)));
    }
    RasterImage::new(h.width, h.height, channels, depth, samples)
}

pub fn read(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    decode(&data)
}

pub fn write(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(img)?).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
