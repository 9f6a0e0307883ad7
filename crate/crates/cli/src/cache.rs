//! On-disk basis cache keyed by model, cutoff and resolution.

use std::path::{Path, PathBuf};

use eigenprod_core::manifolds::{load_basis, save_basis};
use eigenprod_core::{build_basis, ManifoldModel, Resolution, SpectralBasis};
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "EIGENPROD_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
    /// The cached file was unreadable or stale and has been rebuilt.
    Rebuilt,
}

fn key(model: &ManifoldModel, lambda_max: f64, res: &Resolution) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(model).expect("model serializes"));
    h.update(lambda_max.to_bits().to_le_bytes());
    h.update(serde_json::to_vec(res).expect("resolution serializes"));
    h.finalize()[..12].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_path(dir: &Path, model: &ManifoldModel, lambda_max: f64, res: &Resolution) -> PathBuf {
    dir.join(format!("basis-{}.eprd", key(model, lambda_max, res)))
}

pub fn cached_basis(
    model: &ManifoldModel,
    lambda_max: f64,
    res: &Resolution,
    dir: Option<&Path>,
) -> eigenprod_core::Result<(SpectralBasis, CacheStatus)> {
    let Some(dir) = dir else {
        return Ok((build_basis(model, lambda_max, res)?, CacheStatus::Disabled));
    };
    let path = cache_path(dir, model, lambda_max, res);
    let mut status = CacheStatus::Miss;
    if path.exists() {
        match load_basis(&path) {
            Ok(b) if b.model == *model && b.lambda_max.to_bits() == lambda_max.to_bits() && b.resolution == *res => {
                return Ok((b, CacheStatus::Hit));
            }
            Ok(_) => status = CacheStatus::Rebuilt,
            Err(e) => {
                eprintln!("warning: ignoring cached basis {}: {e}", path.display());
                status = CacheStatus::Rebuilt;
            }
        }
    }
    let basis = build_basis(model, lambda_max, res)?;
    std::fs::create_dir_all(dir)?;
    save_basis(&basis, &path)?;
    Ok((basis, status))
}
