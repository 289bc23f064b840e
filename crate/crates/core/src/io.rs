//! Binary file formats: `CDM1` depth maps, PGM masks, PPM color renders and
//! binary little-endian PLY point clouds. JSON helpers for everything else.

use std::path::Path;

use nalgebra::Point3;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::render::{DepthMap, ForegroundMask, PointCloud};

pub const CDM_MAGIC: &[u8; 4] = b"CDM1";

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_file(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn encode_cdm(depth: &DepthMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * depth.len());
    out.extend_from_slice(CDM_MAGIC);
    out.extend_from_slice(&(depth.width as u32).to_le_bytes());
    out.extend_from_slice(&(depth.height as u32).to_le_bytes());
    for v in &depth.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_cdm(bytes: &[u8]) -> Result<DepthMap> {
    if bytes.len() < 4 {
        return Err(Error::format(bytes.len(), "truncated CDM1 header"));
    }
    if let Some(i) = (0..4).find(|&i| bytes[i] != CDM_MAGIC[i]) {
        return Err(Error::format(i, "bad magic bytes, expected `CDM1`"));
    }
    if bytes.len() < 12 {
        return Err(Error::format(bytes.len(), "truncated CDM1 header"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(12))
        .ok_or_else(|| Error::format(4, "CDM1 dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            bytes.len().min(expected),
            format!("CDM1 payload is {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DepthMap::from_data(width, height, data)
}

pub fn encode_pgm(mask: &ForegroundMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.data.iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<ForegroundMask> {
    let (header, offset) = parse_pnm_header(bytes, b"P5")?;
    let [width, height, maxval] = header;
    if maxval != 255 {
        return Err(Error::format(offset, format!("PGM maxval {maxval} unsupported, expected 255")));
    }
    let body = &bytes[offset..];
    if body.len() != width * height {
        return Err(Error::format(offset, format!("PGM body is {} bytes, expected {}", body.len(), width * height)));
    }
    Ok(ForegroundMask {
        width,
        height,
        data: body.iter().map(|&v| v >= 128).collect(),
    })
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for px in &img.data {
        out.extend_from_slice(px);
    }
    out
}

pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let (header, offset) = parse_pnm_header(bytes, b"P6")?;
    let [width, height, maxval] = header;
    if maxval != 255 {
        return Err(Error::format(offset, "PPM maxval must be 255"));
    }
    let body = &bytes[offset..];
    if body.len() != 3 * width * height {
        return Err(Error::format(offset, "PPM body size mismatch"));
    }
    Ok(RgbImage {
        width,
        height,
        data: body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}

/// Parse "P5/P6 <w> <h> <maxval>" plus one whitespace byte; returns fields and body offset.
fn parse_pnm_header(bytes: &[u8], magic: &[u8; 2]) -> Result<([usize; 3], usize)> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::format(0, format!("expected `{}` magic", String::from_utf8_lossy(magic))));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(start, "bad header number"))?;
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::format(pos, "missing whitespace after header"));
    }
    Ok((fields, pos + 1))
}

pub fn encode_ply(cloud: &PointCloud) -> Vec<u8> {
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    if cloud.colors.is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str("end_header\n");
    let mut out = header.into_bytes();
    for (i, p) in cloud.points.iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        if let Some(colors) = &cloud.colors {
            out.extend_from_slice(&colors[i]);
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum PlyType {
    F32,
    F64,
    U8,
    Other(usize),
}

impl PlyType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            "uchar" | "uint8" => PlyType::U8,
            "char" | "int8" => PlyType::Other(1),
            "short" | "ushort" | "int16" | "uint16" => PlyType::Other(2),
            "int" | "uint" | "int32" | "uint32" => PlyType::Other(4),
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::F32 => 4,
            PlyType::F64 => 8,
            PlyType::U8 => 1,
            PlyType::Other(n) => n,
        }
    }
}

/// Read a binary little-endian PLY with float x/y/z and optional uchar
/// red/green/blue vertex properties; other properties are skipped.
pub fn decode_ply(bytes: &[u8]) -> Result<PointCloud> {
    let end = find_subslice(bytes, b"end_header\n")
        .ok_or_else(|| Error::format(0, "PLY header has no end_header"))?;
    let body_start = end + b"end_header\n".len();
    let header = std::str::from_utf8(&bytes[..end]).map_err(|e| Error::format(e.valid_up_to(), "PLY header is not ASCII"))?;
    let mut lines = header.lines();
    if lines.next() != Some("ply") {
        return Err(Error::format(0, "missing `ply` magic"));
    }
    let mut count = None;
    let mut props: Vec<(String, PlyType)> = Vec::new();
    let mut in_vertex = false;
    let mut offset = 4;
    for line in lines {
        let line_offset = offset;
        offset += line.len() + 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["format", fmt, _] => {
                if *fmt != "binary_little_endian" {
                    return Err(Error::format(line_offset, format!("unsupported PLY format `{fmt}`")));
                }
            }
            ["element", name, n] => {
                if *name == "vertex" {
                    if count.is_some() {
                        return Err(Error::format(line_offset, "duplicate vertex element"));
                    }
                    count = Some(n.parse::<usize>().map_err(|_| Error::format(line_offset, "bad vertex count"))?);
                } else if count.is_none() {
                    return Err(Error::format(line_offset, "vertex element must come first"));
                }
                in_vertex = *name == "vertex";
            }
            ["property", "list", ..] if in_vertex => {
                return Err(Error::format(line_offset, "list properties on vertices are unsupported"));
            }
            ["property", ty, name] if in_vertex => {
                let t = PlyType::parse(ty)
                    .ok_or_else(|| Error::format(line_offset, format!("unknown PLY type `{ty}`")))?;
                props.push((name.to_string(), t));
            }
            _ => {}
        }
    }
    let count = count.ok_or_else(|| Error::format(0, "PLY has no vertex element"))?;
    let find = |name: &str| props.iter().position(|(n, _)| n == name);
    let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::Data("PLY vertex element lacks x/y/z properties".into())),
    };
    let color_idx = match (find("red"), find("green"), find("blue")) {
        (Some(r), Some(g), Some(b)) => {
            if [r, g, b].iter().any(|&i| props[i].1 != PlyType::U8) {
                return Err(Error::Data("PLY color properties must be uchar".into()));
            }
            Some([r, g, b])
        }
        _ => None,
    };
    let offsets: Vec<usize> = props
        .iter()
        .scan(0, |acc, (_, t)| {
            let o = *acc;
            *acc += t.size();
            Some(o)
        })
        .collect();
    let stride: usize = props.iter().map(|(_, t)| t.size()).sum();
    let need = count * stride;
    let body = &bytes[body_start..];
    if body.len() < need {
        return Err(Error::format(bytes.len(), format!("PLY body truncated: {} of {need} bytes", body.len())));
    }
    let read_f = |rec: &[u8], i: usize| -> f64 {
        let o = offsets[i];
        match props[i].1 {
            PlyType::F64 => f64::from_le_bytes(rec[o..o + 8].try_into().unwrap()),
            _ => f64::from(f32::from_le_bytes(rec[o..o + 4].try_into().unwrap())),
        }
    };
    for i in [ix, iy, iz] {
        if !matches!(props[i].1, PlyType::F32 | PlyType::F64) {
            return Err(Error::Data("PLY coordinates must be float or double".into()));
        }
    }
    let mut points = Vec::with_capacity(count);
    let mut colors = color_idx.map(|_| Vec::with_capacity(count));
    for rec in body[..need].chunks_exact(stride.max(1)).take(count) {
        points.push(Point3::new(read_f(rec, ix), read_f(rec, iy), read_f(rec, iz)));
        if let (Some(cols), Some(idx)) = (&mut colors, color_idx) {
            cols.push([rec[offsets[idx[0]]], rec[offsets[idx[1]]], rec[offsets[idx[2]]]]);
        }
    }
    PointCloud::new(points, colors)
}

fn find_subslice(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}
