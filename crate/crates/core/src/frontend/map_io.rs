//! `LSMAP1` binary container for spectro-temporal maps.
//!
//! Layout (little-endian): magic `LSMAP1`, kind tag `u8` (0 source,
//! 1 vocal tract), `u32` channels, `u32` frames, `f32` hop in ms, `f32` fmin,
//! `f32` fmax, `channels` x `f32` centre frequencies, then the values as
//! channel-major (row-major) `f32`.

use std::io::{Read, Write};

use super::{ErbScaleGrid, FrontendError, MapKind, SpectroTemporalMap};

pub const MAP_MAGIC: &[u8; 6] = b"LSMAP1";

pub fn write_map<W: Write>(mut w: W, map: &SpectroTemporalMap) -> Result<(), FrontendError> {
    let mut buf = Vec::with_capacity(31 + 4 * (map.n_channels() * (map.n_frames() + 1)));
    buf.extend_from_slice(MAP_MAGIC);
    buf.push(map.kind.tag());
    buf.extend_from_slice(&(map.n_channels() as u32).to_le_bytes());
    buf.extend_from_slice(&(map.n_frames() as u32).to_le_bytes());
    for v in [map.frame_hop_ms, map.grid.fmin, map.grid.fmax] {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for &cf in &map.grid.center_frequencies {
        buf.extend_from_slice(&(cf as f32).to_le_bytes());
    }
    for &v in map.values() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrontendError> {
        let end = self.pos + n;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| FrontendError::MalformedMap(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, FrontendError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f64, FrontendError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()) as f64)
    }
}

pub fn read_map<R: Read>(mut r: R) -> Result<SpectroTemporalMap, FrontendError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(6)? != MAP_MAGIC {
        return Err(FrontendError::MalformedMap("bad magic".into()));
    }
    let tag = c.take(1)?[0];
    let kind = MapKind::from_tag(tag)
        .ok_or_else(|| FrontendError::MalformedMap(format!("unknown kind tag {tag}")))?;
    let n_channels = c.u32()? as usize;
    let n_frames = c.u32()? as usize;
    let hop_ms = c.f32()?;
    let fmin = c.f32()?;
    let fmax = c.f32()?;
    let center_frequencies = (0..n_channels).map(|_| c.f32()).collect::<Result<_, _>>()?;
    let rows = (0..n_channels)
        .map(|_| (0..n_frames).map(|_| c.f32()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    if c.pos != bytes.len() {
        return Err(FrontendError::MalformedMap("trailing bytes".into()));
    }
    let grid = ErbScaleGrid {
        center_frequencies,
        fmin,
        fmax,
    };
    SpectroTemporalMap::from_rows(rows, grid, hop_ms, kind)
}
