//! Versioned binary container for fusion-net parameters.
//!
//! Layout, all integers little-endian:
//! `b"TBFN"`, `u32` version, `u64` seed, `u32` descriptor length, the
//! architecture descriptor as JSON, `u64` parameter count, then the
//! parameters as `f64`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::fusion::{FusionArch, FusionNet};

pub const MAGIC: &[u8; 4] = b"TBFN";
pub const CONTAINER_VERSION: u32 = 1;

pub fn encode_container(net: &FusionNet) -> Result<Vec<u8>> {
    let arch = serde_json::to_vec(&net.arch)?;
    let mut out = Vec::with_capacity(32 + arch.len() + 8 * net.params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.extend_from_slice(&net.seed.to_le_bytes());
    out.extend_from_slice(&(arch.len() as u32).to_le_bytes());
    out.extend_from_slice(&arch);
    out.extend_from_slice(&(net.params.len() as u64).to_le_bytes());
    for p in &net.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Container("truncated container".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_container(bytes: &[u8]) -> Result<FusionNet> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CONTAINER_VERSION {
        return Err(Error::Container(format!(
            "container version {version} is not supported (expected {CONTAINER_VERSION})"
        )));
    }
    let seed = r.u64()?;
    let len = r.u32()? as usize;
    let arch: FusionArch = serde_json::from_slice(r.take(len)?)
        .map_err(|e| Error::Container(format!("bad architecture descriptor: {e}")))?;
    let count = r.u64()? as usize;
    let mut net = FusionNet::with_arch(arch, seed)?;
    if count != net.n_params() {
        return Err(Error::Container(format!(
            "{count} parameters stored, architecture needs {}",
            net.n_params()
        )));
    }
    for p in net.params.iter_mut() {
        *p = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
    }
    if r.pos != bytes.len() {
        return Err(Error::Container("trailing bytes after parameters".into()));
    }
    Ok(net)
}

pub fn save_fusion_net(net: &FusionNet, path: &Path) -> Result<()> {
    fs::write(path, encode_container(net)?).map_err(|e| Error::io(path, e))
}

pub fn load_fusion_net(path: &Path) -> Result<FusionNet> {
    decode_container(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
