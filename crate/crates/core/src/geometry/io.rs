//! On-disk formats for depth views, voxel grids, meshes and dataset manifests.
//!
//! All binary integers and floats are little-endian.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::mesh::TriMesh;
use super::raster::DepthView;
use super::voxel::VoxelGrid;
use crate::error::{Error, Result};

pub const DEPTH_MAGIC: &[u8; 4] = b"DPTH";
pub const GRID_MAGIC: &[u8; 4] = b"VOXG";

/// Payload encoding of a voxel-grid file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// One bit per voxel, x-fastest then y then z, least significant bit first,
    /// zero-padded to a whole byte.
    Binary = 0,
    /// One `f32` per voxel in storage order.
    Float = 1,
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, pos: 0, what }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::format(self.what, "unexpected end of data"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::format(self.what, "length overflow"))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_depth(view: &DepthView) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * view.values.len());
    out.extend_from_slice(DEPTH_MAGIC);
    out.extend_from_slice(&(view.width as u32).to_le_bytes());
    out.extend_from_slice(&(view.height as u32).to_le_bytes());
    for v in &view.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_depth(bytes: &[u8]) -> Result<DepthView> {
    let mut r = Reader::new(bytes, "depth view");
    if r.take(4)? != DEPTH_MAGIC {
        return Err(Error::format("depth view", "bad magic"));
    }
    let w = r.u32()? as usize;
    let h = r.u32()? as usize;
    let values = r.f32s(w * h)?;
    if r.remaining() != 0 {
        return Err(Error::format("depth view", "trailing bytes"));
    }
    DepthView::new(w, h, values)
}

pub fn encode_grid(grid: &VoxelGrid, kind: GridKind) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&(grid.n as u32).to_le_bytes());
    out.push(kind as u8);
    match kind {
        GridKind::Binary => {
            if !grid.is_binary() {
                return Err(Error::invalid("bit-packed grids must hold only 0 and 1"));
            }
            let mut packed = vec![0u8; grid.values.len().div_ceil(8)];
            for (i, &v) in grid.values.iter().enumerate() {
                if v == 1.0 {
                    packed[i / 8] |= 1 << (i % 8);
                }
            }
            out.extend_from_slice(&packed);
        }
        GridKind::Float => {
            for v in &grid.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_grid(bytes: &[u8]) -> Result<(VoxelGrid, GridKind)> {
    let mut r = Reader::new(bytes, "voxel grid");
    if r.take(4)? != GRID_MAGIC {
        return Err(Error::format("voxel grid", "bad magic"));
    }
    let n = r.u32()? as usize;
    let count = n
        .checked_mul(n)
        .and_then(|v| v.checked_mul(n))
        .ok_or_else(|| Error::format("voxel grid", "extent overflow"))?;
    let (values, kind) = match r.u8()? {
        0 => {
            let packed = r.take(count.div_ceil(8))?;
            ((0..count).map(|i| ((packed[i / 8] >> (i % 8)) & 1) as f32).collect(), GridKind::Binary)
        }
        1 => (r.f32s(count)?, GridKind::Float),
        k => return Err(Error::format("voxel grid", format!("unknown kind {k}"))),
    };
    if r.remaining() != 0 {
        return Err(Error::format("voxel grid", "trailing bytes"));
    }
    Ok((VoxelGrid::new(n, values)?, kind))
}

pub fn write_depth(path: &Path, view: &DepthView) -> Result<()> {
    write_file(path, &encode_depth(view))
}

pub fn read_depth(path: &Path) -> Result<DepthView> {
    decode_depth(&read_file(path)?)
}

pub fn write_grid(path: &Path, grid: &VoxelGrid, kind: GridKind) -> Result<()> {
    write_file(path, &encode_grid(grid, kind)?)
}

pub fn read_grid(path: &Path) -> Result<VoxelGrid> {
    Ok(decode_grid(&read_file(path)?)?.0)
}

/// `v x y z` and `f i j k` lines (1-based), followed by `# d <value>` lines
/// when a per-vertex scalar is supplied.
pub fn encode_obj(mesh: &TriMesh, per_vertex: Option<&[f64]>) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    if let Some(d) = per_vertex {
        for v in d {
            let _ = writeln!(s, "# d {v}");
        }
    }
    s
}

pub fn decode_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let bad = |what: &str| Error::format("mesh", format!("line {}: {what}", ln + 1));
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|t| t.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("bad coordinate"))?;
                let [x, y, z] = c[..] else { return Err(bad("vertex needs 3 coordinates")) };
                vertices.push([x, y, z]);
            }
            Some("f") => {
                let c: Vec<usize> = it.map(|t| t.parse::<usize>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("bad index"))?;
                let [i, j, k] = c[..] else { return Err(bad("face needs 3 indices")) };
                if i == 0 || j == 0 || k == 0 {
                    return Err(bad("indices are 1-based"));
                }
                triangles.push([i - 1, j - 1, k - 1]);
            }
            Some(t) if t.starts_with('#') => {}
            None => {}
            Some(other) => return Err(bad(&format!("unsupported record {other:?}"))),
        }
    }
    TriMesh::new(vertices, triangles)
}

pub fn write_obj(path: &Path, mesh: &TriMesh, per_vertex: Option<&[f64]>) -> Result<()> {
    write_file(path, encode_obj(mesh, per_vertex).as_bytes())
}

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    let bytes = read_file(path)?;
    decode_obj(&String::from_utf8_lossy(&bytes))
}

/// One dataset sample; paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRecord {
    pub depth_path: PathBuf,
    pub grid_path: PathBuf,
    pub seed: u64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub expression: f64,
}

impl ManifestRecord {
    /// Sample identifier: the depth file's stem.
    pub fn sample_id(&self) -> String {
        self.depth_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    }
}

pub fn encode_manifest(records: &[ManifestRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.depth_path.display(),
            r.grid_path.display(),
            r.seed,
            r.yaw,
            r.pitch,
            r.roll,
            r.expression
        );
    }
    s
}

pub fn decode_manifest(text: &str) -> Result<Vec<ManifestRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(ln, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            let bad = |what: &str| Error::format("manifest", format!("line {}: {what}", ln + 1));
            if f.len() != 7 {
                return Err(bad(&format!("expected 7 fields, got {}", f.len())));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad("bad number"));
            Ok(ManifestRecord {
                depth_path: PathBuf::from(f[0]),
                grid_path: PathBuf::from(f[1]),
                seed: f[2].parse().map_err(|_| bad("bad seed"))?,
                yaw: num(3)?,
                pitch: num(4)?,
                roll: num(5)?,
                expression: num(6)?,
            })
        })
        .collect()
}
