use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::frontend::{FrontendConfig, MapKind};
use crate::readout::EvalConfig;
use crate::reservoir::ReservoirConfig;

/// One reservoir configuration per map kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirPair {
    pub vocal_tract: ReservoirConfig,
    pub source: ReservoirConfig,
}

impl Default for ReservoirPair {
    fn default() -> Self {
        Self {
            vocal_tract: ReservoirConfig {
                tau_minus_ratio: 5.0,
                rng_seed: 1,
                ..ReservoirConfig::default()
            },
            source: ReservoirConfig {
                tau_minus_ratio: 3.0,
                rng_seed: 2,
                ..ReservoirConfig::default()
            },
        }
    }
}

impl ReservoirPair {
    pub fn get(&self, kind: MapKind) -> &ReservoirConfig {
        match kind {
            MapKind::VocalTract => &self.vocal_tract,
            MapKind::Source => &self.source,
        }
    }

    pub fn get_mut(&mut self, kind: MapKind) -> &mut ReservoirConfig {
        match kind {
            MapKind::VocalTract => &mut self.vocal_tract,
            MapKind::Source => &mut self.source,
        }
    }

    /// Topology seeds: `seed` for the vocal-tract reservoir, `seed + 1` for
    /// the source reservoir.
    pub fn set_seed(&mut self, seed: u64) {
        self.vocal_tract.rng_seed = seed;
        self.source.rng_seed = seed.wrapping_add(1);
    }
}

/// Component-count sweep; each axis is `{0} ∪ lo..=hi` in steps of `stride`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k_vt: (usize, usize),
    pub k_src: (usize, usize),
    pub stride: usize,
}

impl SweepConfig {
    /// Parse `A..BxC..D`.
    pub fn parse(spec: &str, stride: usize) -> Result<Self, String> {
        let (vt, src) = spec
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("sweep {spec:?} is not of the form A..BxC..D"))?;
        let range = |s: &str| -> Result<(usize, usize), String> {
            let (a, b) = s
                .split_once("..")
                .ok_or_else(|| format!("range {s:?} is not of the form A..B"))?;
            let a = a.trim().parse().map_err(|_| format!("bad bound {a:?}"))?;
            let b = b.trim().parse().map_err(|_| format!("bad bound {b:?}"))?;
            if a > b {
                return Err(format!("empty range {s:?}"));
            }
            Ok((a, b))
        };
        if stride == 0 {
            return Err("stride must be at least 1".into());
        }
        Ok(Self {
            k_vt: range(vt)?,
            k_src: range(src)?,
            stride,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory scanned for Emo-DB style `*.wav` files.
    pub corpus: PathBuf,
    pub cache_dir: PathBuf,
    /// Where reports and grids are written.
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Run only this reservoir; the other's component count is treated as 0.
    pub single_reservoir: Option<MapKind>,
    /// Label permutations for the significance test; 0 skips it.
    pub permutations: usize,
    pub permutation_seed: u64,
    pub frontend: FrontendConfig,
    pub reservoir: ReservoirPair,
    pub readout: EvalConfig,
    pub sweep: Option<SweepConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus"),
            cache_dir: PathBuf::from("cache"),
            output_dir: PathBuf::from("out"),
            jobs: 0,
            single_reservoir: None,
            permutations: 0,
            permutation_seed: 99,
            frontend: FrontendConfig::default(),
            reservoir: ReservoirPair::default(),
            readout: EvalConfig::default(),
            sweep: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Map kinds whose reservoirs run.
    pub fn active_kinds(&self) -> Vec<MapKind> {
        match self.single_reservoir {
            Some(kind) => vec![kind],
            None => MapKind::BOTH.to_vec(),
        }
    }

    /// The readout settings with the component count of an inactive
    /// reservoir forced to zero.
    pub fn effective_readout(&self) -> EvalConfig {
        let mut r = self.readout.clone();
        match self.single_reservoir {
            Some(MapKind::Source) => r.k_vt = 0,
            Some(MapKind::VocalTract) => r.k_src = 0,
            None => {}
        }
        r
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if let Err(e) = self.frontend.validate() {
            return bad(format!("frontend: {e}"));
        }
        for kind in MapKind::BOTH {
            let r = self.reservoir.get(kind);
            if let Err(e) = r.validate() {
                return bad(format!("reservoir.{}: {e}", kind.name()));
            }
            if r.n_layers != self.frontend.channels {
                return bad(format!(
                    "reservoir.{} has {} layers but the frontend produces {} channels",
                    kind.name(),
                    r.n_layers,
                    self.frontend.channels
                ));
            }
        }
        if let Err(e) = self.effective_readout().validate() {
            return bad(format!("readout: {e}"));
        }
        if let Some(s) = &self.sweep {
            if s.stride == 0 || s.k_vt.0 > s.k_vt.1 || s.k_src.0 > s.k_src.1 {
                return bad("sweep ranges must be non-empty with stride >= 1".into());
            }
        }
        Ok(())
    }
}
