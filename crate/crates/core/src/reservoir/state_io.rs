//! `LSTATE1` container for cached liquid states.
//!
//! Layout (little-endian): magic `LSTATE1`, reservoir kind `u8` (0 source,
//! 1 vocal tract), `u64` seed, 32-byte SHA-256 config hash, then one `f32`
//! mean rate per neuron to the end of the file.

use std::io::{Read, Write};

use super::{LiquidState, ReservoirError};
use crate::frontend::MapKind;

pub const STATE_MAGIC: &[u8; 7] = b"LSTATE1";
const HEADER_LEN: usize = 7 + 1 + 8 + 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateHeader {
    pub kind: MapKind,
    pub seed: u64,
    pub config_hash: [u8; 32],
}

pub fn write_state<W: Write>(
    mut w: W,
    header: &StateHeader,
    state: &LiquidState,
) -> Result<(), ReservoirError> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * state.len());
    buf.extend_from_slice(STATE_MAGIC);
    buf.push(header.kind.tag());
    buf.extend_from_slice(&header.seed.to_le_bytes());
    buf.extend_from_slice(&header.config_hash);
    for &r in &state.mean_rates {
        buf.extend_from_slice(&(r as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_state<R: Read>(mut r: R) -> Result<(StateHeader, LiquidState), ReservoirError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let malformed = |m: &str| ReservoirError::MalformedState(m.to_string());
    if bytes.len() < HEADER_LEN || &bytes[..7] != STATE_MAGIC {
        return Err(malformed("bad magic or truncated header"));
    }
    let kind = MapKind::from_tag(bytes[7]).ok_or_else(|| malformed("unknown reservoir kind"))?;
    let seed = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let config_hash: [u8; 32] = bytes[16..48].try_into().unwrap();
    let body = &bytes[HEADER_LEN..];
    if body.len() % 4 != 0 {
        return Err(malformed("body is not a whole number of f32 values"));
    }
    let mean_rates = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((
        StateHeader {
            kind,
            seed,
            config_hash,
        },
        LiquidState { mean_rates },
    ))
}
