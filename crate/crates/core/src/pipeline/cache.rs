use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::frontend::{read_map, write_map, FrontendConfig, MapKind, SpectroTemporalMap};
use crate::reservoir::{read_state, write_state, LiquidState, ReservoirConfig, StateHeader};

/// SHA-256 over an artifact's inputs: file content, stage name and the
/// configuration the stage depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey(pub [u8; 32]);

impl CacheKey {
    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

fn feed(h: &mut Sha256, bytes: &[u8]) {
    h.update((bytes.len() as u64).to_le_bytes());
    h.update(bytes);
}

/// Key of one map of an audio file. Depends on the file bytes, the frontend
/// configuration and the map kind.
pub fn map_key(audio: &[u8], frontend: &FrontendConfig, kind: MapKind) -> CacheKey {
    let mut h = Sha256::new();
    feed(&mut h, b"preprocess");
    feed(&mut h, audio);
    feed(&mut h, serde_json::to_string(frontend).expect("serializes").as_bytes());
    feed(&mut h, kind.name().as_bytes());
    CacheKey(h.finalize().into())
}

/// Key of a liquid state: the map it was driven by plus the reservoir
/// configuration.
pub fn state_key(map: &CacheKey, reservoir: &ReservoirConfig) -> CacheKey {
    let mut h = Sha256::new();
    feed(&mut h, b"simulate");
    feed(&mut h, &map.0);
    feed(&mut h, &reservoir.fingerprint());
    CacheKey(h.finalize().into())
}

/// Content-addressed artifact store with `maps/` and `states/` subdirectories.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn map_path(&self, key: &CacheKey) -> PathBuf {
        self.root.join("maps").join(format!("{}.lsmap", key.hex()))
    }

    pub fn state_path(&self, key: &CacheKey) -> PathBuf {
        self.root.join("states").join(format!("{}.lstate", key.hex()))
    }

    pub fn read_map(&self, key: &CacheKey) -> std::io::Result<SpectroTemporalMap> {
        let file = File::open(self.map_path(key))?;
        read_map(BufReader::new(file)).map_err(std::io::Error::other)
    }

    pub fn write_map(&self, key: &CacheKey, map: &SpectroTemporalMap) -> std::io::Result<()> {
        write_atomic(&self.map_path(key), |w| {
            write_map(w, map).map_err(std::io::Error::other)
        })
    }

    /// The cached state, if present, readable and produced by `expected`.
    pub fn read_state(&self, key: &CacheKey, expected: &StateHeader) -> Option<LiquidState> {
        let file = File::open(self.state_path(key)).ok()?;
        match read_state(BufReader::new(file)) {
            Ok((header, state)) if header == *expected => Some(state),
            Ok(_) => {
                log::warn!("state {} has a stale header; recomputing", key.hex());
                None
            }
            Err(e) => {
                log::warn!("state {} is unreadable ({e}); recomputing", key.hex());
                None
            }
        }
    }

    pub fn write_state(
        &self,
        key: &CacheKey,
        header: &StateHeader,
        state: &LiquidState,
    ) -> std::io::Result<()> {
        write_atomic(&self.state_path(key), |w| {
            write_state(w, header, state).map_err(std::io::Error::other)
        })
    }
}

/// Write through a temporary file in the destination directory and rename
/// it into place, so readers never see a partial artifact.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>,
) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_track_their_inputs() {
        let fe = FrontendConfig::default();
        let a = map_key(b"abc", &fe, MapKind::Source);
        assert_eq!(a, map_key(b"abc", &fe, MapKind::Source));
        assert_ne!(a, map_key(b"abd", &fe, MapKind::Source));
        assert_ne!(a, map_key(b"abc", &fe, MapKind::VocalTract));
        let fe2 = FrontendConfig {
            lp_order: 12,
            ..fe.clone()
        };
        assert_ne!(a, map_key(b"abc", &fe2, MapKind::Source));

        let r = ReservoirConfig::default();
        let s = state_key(&a, &r);
        assert_ne!(
            s,
            state_key(
                &a,
                &ReservoirConfig {
                    g_max: 0.03,
                    ..r.clone()
                }
            )
        );
        assert_ne!(s, state_key(&map_key(b"abd", &fe, MapKind::Source), &r));
        assert_eq!(a.hex().len(), 64);
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("x.bin");
        let err = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            Err(std::io::Error::other("boom"))
        });
        assert!(err.is_err());
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 0);
        write_atomic(&path, |w| w.write_all(b"ok")).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"ok");
    }
}
