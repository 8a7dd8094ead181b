//! Content-addressed caching of convolution-power grid dumps between runs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use paralab_core::convolution::{convolve_power_on_plan, ConvolutionPlan};
use paralab_core::grid::GridField;
use paralab_core::parabola::AtomicMeasure;
use sha2::{Digest, Sha256};

/// Cache directory: `PARALAB_CACHE` when set, else `<out>/cache`.
pub fn cache_dir(out_dir: &Path) -> PathBuf {
    match std::env::var_os("PARALAB_CACHE") {
        Some(dir) => PathBuf::from(dir),
        None => out_dir.join("cache"),
    }
}

fn cache_key(m: &AtomicMeasure, n: u32, delta: f64, delta_max: f64, h: f64) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(m)?);
    hasher.update(n.to_le_bytes());
    hasher.update(delta.to_bits().to_le_bytes());
    hasher.update(delta_max.to_bits().to_le_bytes());
    hasher.update(h.to_bits().to_le_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

/// Convolution power on a shared layout, with a binary grid-dump cache keyed
/// by the content hash of (measure JSON, n, delta, layout parameters).
pub fn cached_convolve_power_on_plan(
    dir: &Path,
    m: &AtomicMeasure,
    n: u32,
    delta: f64,
    delta_max: f64,
    h: f64,
) -> Result<GridField> {
    let key = cache_key(m, n, delta, delta_max, h)?;
    let path = dir.join(format!("{key}.grid"));
    if path.exists() {
        let bytes = fs::read(&path)?;
        if let Ok(field) = GridField::read_binary(&mut bytes.as_slice()) {
            return Ok(field);
        }
        // unreadable cache entries are recomputed and overwritten
    }
    let plan = ConvolutionPlan::for_measure(m, n, delta_max, h)?;
    let field = convolve_power_on_plan(m, n, delta, &plan).context("convolution power")?;
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    field.write_binary(&mut buf)?;
    fs::write(&path, buf)?;
    Ok(field)
}
