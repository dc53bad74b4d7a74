//! Binary training snapshot.
//!
//! Layout (little-endian): `"AGCK"`, `u32` version, `u64` total file length,
//! preset string, then four tensor sections (generator parameters, critic
//! parameters, generator Adam moments, critic Adam moments), a key/value
//! metadata section, and a CRC32 of every preceding byte. Strings are a `u32` byte length followed by UTF-8;
//! each section starts with a `u32` entry count; a tensor entry is its name,
//! `u32` rank, `u32` extents and `f32` values.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::NetworkParams;
use crate::tensor::Tensor;

use super::adam::AdamState;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AGCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub preset: String,
    pub generator: NetworkParams,
    pub critic: NetworkParams,
    pub generator_opt: AdamState,
    pub critic_opt: AdamState,
    pub meta: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::format("checkpoint", format!("missing metadata key {key}")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.meta(key)?;
        raw.parse().map_err(|_| Error::format("checkpoint", format!("bad value {raw:?} for {key}")))
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

fn put_tensor(out: &mut Vec<u8>, name: &str, t: &Tensor) {
    put_str(out, name);
    put_u32(out, t.rank() as u32);
    for &e in t.shape() {
        put_u32(out, e as u32);
    }
    for &v in t.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn put_moments(out: &mut Vec<u8>, params: &NetworkParams, state: &AdamState) {
    put_u32(out, 2 * state.m.len() as u32);
    for (name, m) in params.names().zip(&state.m) {
        put_tensor(out, &format!("{name}.m"), m);
    }
    for (name, v) in params.names().zip(&state.v) {
        put_tensor(out, &format!("{name}.v"), v);
    }
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    out.extend_from_slice(&[0; 8]);
    put_str(&mut out, &ck.preset);
    for p in [&ck.generator, &ck.critic] {
        put_u32(&mut out, p.len() as u32);
        for (name, t) in p.iter() {
            put_tensor(&mut out, name, t);
        }
    }
    put_moments(&mut out, &ck.generator, &ck.generator_opt);
    put_moments(&mut out, &ck.critic, &ck.critic_opt);
    put_u32(&mut out, ck.meta.len() as u32);
    for (k, v) in &ck.meta {
        put_str(&mut out, k);
        put_str(&mut out, v);
    }
    let total = out.len() as u64 + 4;
    out[8..16].copy_from_slice(&total.to_le_bytes());
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(Error::Truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::format("checkpoint", "non-UTF-8 string"))
    }

    fn tensor(&mut self) -> Result<(String, Tensor)> {
        let name = self.string()?;
        let rank = self.u32()? as usize;
        if rank > 8 {
            return Err(Error::format("checkpoint", format!("{name}: rank {rank}")));
        }
        let shape = (0..rank).map(|_| self.u32().map(|e| e as usize)).collect::<Result<Vec<_>>>()?;
        let len = shape.iter().try_fold(1usize, |a, &e| a.checked_mul(e)).ok_or(Error::Truncated)?;
        let bytes = self.take(len.checked_mul(4).ok_or(Error::Truncated)?)?;
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        Ok((name, Tensor::new(shape, data)?))
    }

    fn params(&mut self) -> Result<NetworkParams> {
        let n = self.u32()?;
        let mut p = NetworkParams::new();
        for _ in 0..n {
            let (name, t) = self.tensor()?;
            p.push(name, t)?;
        }
        Ok(p)
    }

    fn moments(&mut self, params: &NetworkParams) -> Result<(Vec<Tensor>, Vec<Tensor>)> {
        let n = self.u32()? as usize;
        if n != 2 * params.len() {
            return Err(Error::format("checkpoint", format!("{n} moment tensors for {} parameters", params.len())));
        }
        let mut all = Vec::with_capacity(n);
        for _ in 0..n {
            all.push(self.tensor()?.1);
        }
        let v = all.split_off(params.len());
        for (p, (m, v)) in params.tensors().zip(all.iter().zip(&v)) {
            if p.shape() != m.shape() || p.shape() != v.shape() {
                return Err(Error::format("checkpoint", "moment shape differs from parameter"));
            }
        }
        Ok((all, v))
    }
}

fn parse_body(bytes: &[u8]) -> Result<Checkpoint> {
    let mut c = Cursor { buf: bytes, pos: 16 };
    let preset = c.string()?;
    let generator = c.params()?;
    let critic = c.params()?;
    let (gm, gv) = c.moments(&generator)?;
    let (cm, cv) = c.moments(&critic)?;
    let n = c.u32()?;
    let mut meta = BTreeMap::new();
    for _ in 0..n {
        let k = c.string()?;
        meta.insert(k, c.string()?);
    }
    if c.pos != bytes.len() {
        return Err(Error::format("checkpoint", "bytes after metadata"));
    }
    let g_t = meta.get("generator_steps_taken").and_then(|v| v.parse().ok()).unwrap_or(0);
    let c_t = meta.get("critic_steps_taken").and_then(|v| v.parse().ok()).unwrap_or(0);
    Ok(Checkpoint {
        preset,
        generator,
        critic,
        generator_opt: AdamState { m: gm, v: gv, t: g_t },
        critic_opt: AdamState { m: cm, v: cv, t: c_t },
        meta,
    })
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 4 {
        return Err(Error::Truncated);
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint", "bad magic"));
    }
    if bytes.len() < 8 {
        return Err(Error::Truncated);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version { found: version, expected: CHECKPOINT_VERSION });
    }
    if bytes.len() < 20 {
        return Err(Error::Truncated);
    }
    let declared = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if (bytes.len() as u64) < declared {
        return Err(Error::Truncated);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Crc { stored, computed });
    }
    if bytes.len() as u64 != declared {
        return Err(Error::format("checkpoint", "length field disagrees with file size"));
    }
    parse_body(body).map_err(|e| match e {
        Error::Truncated => Error::format("checkpoint", "section overruns the file"),
        e => e,
    })
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let bytes = encode_checkpoint(ck);
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut generator = NetworkParams::new();
        generator.push("a", Tensor::randn([2, 3], 1.0, &mut rng).map(|v| v as f32 as f64)).unwrap();
        generator.push("b", Tensor::randn([4], 1.0, &mut rng).map(|v| v as f32 as f64)).unwrap();
        let mut critic = NetworkParams::new();
        critic.push("c", Tensor::randn([1, 2, 2, 1], 1.0, &mut rng).map(|v| v as f32 as f64)).unwrap();
        let mut generator_opt = AdamState::new(&generator);
        generator_opt.m[0].data_mut()[1] = 0.25;
        generator_opt.t = 6;
        let mut critic_opt = AdamState::new(&critic);
        critic_opt.v[0].data_mut()[2] = 0.5;
        critic_opt.t = 3;
        let mut meta = BTreeMap::new();
        meta.insert("generator_steps_taken".into(), "6".into());
        meta.insert("critic_steps_taken".into(), "3".into());
        meta.insert("note".into(), "x=y".into());
        Checkpoint { preset: "desk".into(), generator, critic, generator_opt, critic_opt, meta }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let bytes = encode_checkpoint(&ck);
        assert_eq!(&bytes[..4], b"AGCK");
        assert_eq!(decode_checkpoint(&bytes).unwrap(), ck);
    }

    #[test]
    fn corrupted_byte_is_a_crc_error() {
        let mut bytes = encode_checkpoint(&sample());
        let at = bytes.len() / 2;
        bytes[at] ^= 0x10;
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::Crc { .. })));
    }

    #[test]
    fn truncation_and_version_are_distinct() {
        let bytes = encode_checkpoint(&sample());
        for cut in [3, 20, bytes.len() - 2] {
            assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(Error::Truncated)), "cut {cut}");
        }
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(decode_checkpoint(&v2), Err(Error::Version { found: 2, expected: 1 })));
    }

    #[test]
    fn save_is_atomic_and_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.agck");
        save_checkpoint(&path, &sample()).unwrap();
        assert!(!dir.path().join("model.tmp").exists());
        assert_eq!(load_checkpoint(&path).unwrap(), sample());
    }
}
