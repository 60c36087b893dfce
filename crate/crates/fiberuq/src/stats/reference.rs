use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kde::{Bandwidth, KdeDensity};
use super::{empirical_cdf, empirical_quantile, sorted, StatsError};

pub const REFERENCE_SCHEMA: &str = "fiberuq.reference/1";

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "FIBERUQ_CACHE_DIR";

/// Statistics of a large sample of the exact response, with density data
/// from a Silverman-bandwidth kernel density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStatistics {
    pub schema: String,
    pub key: String,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub cdf: Vec<(f64, f64)>,
    pub quantile: (f64, f64),
    pub bandwidth: f64,
    pub sup_density: f64,
    pub density_at_q: f64,
    #[serde(skip)]
    pub sorted: Vec<f64>,
}

impl ReferenceStatistics {
    pub fn from_values(values: Vec<f64>, thresholds: &[f64], p: f64, key: &str) -> Result<Self, StatsError> {
        let sorted = sorted(values);
        let n = sorted.len();
        if n < 2 {
            return Err(StatsError::Degenerate("reference needs at least two samples".into()));
        }
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let std = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let q = empirical_quantile(&sorted, p)?;
        let kde = KdeDensity::new(sorted.clone(), Bandwidth::Silverman)?;
        Ok(Self {
            schema: REFERENCE_SCHEMA.into(),
            key: key.into(),
            n,
            mean,
            std,
            cdf: thresholds.iter().map(|&t| (t, empirical_cdf(&sorted, t))).collect(),
            quantile: (p, q),
            bandwidth: kde.bandwidth(),
            sup_density: kde.sup_density(),
            density_at_q: kde.density(q),
            sorted,
        })
    }
}

/// On-disk cache of reference statistics, keyed by a content hash.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Uses the directory from the environment when set, `default` otherwise.
    pub fn from_env_or(default: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(default),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// SHA-256 hex digest of `content`.
    pub fn key(content: &str) -> String {
        hex::encode(Sha256::digest(content.as_bytes()))
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{key}.json")), self.dir.join(format!("{key}.bin")))
    }

    pub fn load(&self, key: &str) -> Result<Option<ReferenceStatistics>, StatsError> {
        let (json, bin) = self.paths(key);
        if !json.exists() || !bin.exists() {
            return Ok(None);
        }
        let mut r: ReferenceStatistics =
            serde_json::from_str(&fs::read_to_string(&json)?).map_err(|e| StatsError::Format(e.to_string()))?;
        if r.schema != REFERENCE_SCHEMA || r.key != key {
            return Ok(None);
        }
        let bytes = fs::read(&bin)?;
        if bytes.len() != 8 * r.n {
            return Ok(None);
        }
        r.sorted = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Some(r))
    }

    pub fn store(&self, r: &ReferenceStatistics) -> Result<(), StatsError> {
        fs::create_dir_all(&self.dir)?;
        let (json, bin) = self.paths(&r.key);
        let bytes: Vec<u8> = r.sorted.iter().flat_map(|x| x.to_le_bytes()).collect();
        atomic_write(&bin, &bytes)?;
        let text = serde_json::to_string_pretty(r).map_err(|e| StatsError::Format(e.to_string()))?;
        Ok(atomic_write(&json, text.as_bytes())?)
    }

    pub fn get_or_compute<F>(&self, key: &str, force: bool, compute: F) -> Result<ReferenceStatistics, StatsError>
    where
        F: FnOnce() -> Result<ReferenceStatistics, StatsError>,
    {
        if !force {
            if let Some(r) = self.load(key)? {
                return Ok(r);
            }
        }
        let r = compute()?;
        self.store(&r)?;
        Ok(r)
    }
}

/// Writes to a temporary sibling file and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
