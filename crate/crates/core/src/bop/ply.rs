use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use super::writer::write_atomic;
use super::BopError;
use crate::Cloud;

/// Writes a point cloud (meters) as a binary little-endian PLY in
/// millimeters, the BOP model unit. Coordinates are stored as `double` so
/// models read back exactly.
pub fn write_ply(path: &Path, cloud: &Cloud) -> Result<(), BopError> {
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        cloud.len()
    );
    let mut bytes = header.into_bytes();
    for p in cloud.points() {
        for c in p.iter() {
            bytes.extend_from_slice(&(c * 1000.0).to_le_bytes());
        }
    }
    write_atomic(path, &bytes)
}

#[derive(Clone, Copy)]
enum Prop {
    F32,
    F64,
}

impl Prop {
    fn size(self) -> usize {
        match self {
            Prop::F32 => 4,
            Prop::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Prop::F32 => f32::from_le_bytes(b[..4].try_into().expect("4 bytes")) as f64,
            Prop::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

/// Reads the vertices of a binary little-endian PLY whose vertex
/// properties are all `float` or `double`, converting millimeters to meters.
/// Elements after the vertices (faces) are ignored.
pub fn read_ply(path: &Path) -> Result<Cloud, BopError> {
    let bytes = fs::read(path).map_err(|e| BopError::io(path, e))?;
    let bad = |m: &str| BopError::format(path, m);
    let end = b"end_header\n";
    let header_len = bytes
        .windows(end.len())
        .position(|w| w == end)
        .ok_or_else(|| bad("missing end_header"))?
        + end.len();
    let header = std::str::from_utf8(&bytes[..header_len]).map_err(|_| bad("header is not UTF-8"))?;
    let mut lines = header.lines();
    if lines.next() != Some("ply") {
        return Err(bad("not a PLY file"));
    }
    let mut count = None;
    let mut props: Vec<(String, Prop)> = Vec::new();
    let mut in_vertex = false;
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", fmt, _] if *fmt != "binary_little_endian" => {
                return Err(bad(&format!("unsupported PLY format {fmt}")));
            }
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| bad("bad vertex count"))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", ty, name] if in_vertex => {
                let p = match *ty {
                    "float" | "float32" => Prop::F32,
                    "double" | "float64" => Prop::F64,
                    other => return Err(bad(&format!("unsupported vertex property type {other}"))),
                };
                props.push((name.to_string(), p));
            }
            _ => {}
        }
    }
    let count = count.ok_or_else(|| bad("no vertex element"))?;
    let offset_of = |name: &str| -> Result<(usize, Prop), BopError> {
        let mut off = 0;
        for (n, p) in &props {
            if n == name {
                return Ok((off, *p));
            }
            off += p.size();
        }
        Err(bad(&format!("vertex property {name} missing")))
    };
    let axes = [offset_of("x")?, offset_of("y")?, offset_of("z")?];
    let stride: usize = props.iter().map(|(_, p)| p.size()).sum();
    let body = &bytes[header_len..];
    if body.len() < count * stride {
        return Err(bad("truncated vertex data"));
    }
    let points = body
        .chunks_exact(stride)
        .take(count)
        .map(|rec| Vector3::from_fn(|k, _| axes[k].1.read(&rec[axes[k].0..]) / 1000.0))
        .collect();
    Ok(Cloud::new(points)?)
}
