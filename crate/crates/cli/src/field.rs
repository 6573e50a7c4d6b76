//! Field acquisition: vacuum, direct quadrature, or the grid cache with a
//! JSON sidecar recording what the grid was built from.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgspin::config::{ConfigFile, GeometryConfig};
use sgspin::magnetostatics::{
    build_field_grid, build_geometry, FieldEvaluator, FieldGrid, FieldSource, QuadratureConfig,
};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheMeta {
    geometry: GeometryConfig,
    grid_spacing: f64,
    quadrature: QuadratureConfig,
}

impl CacheMeta {
    fn of(cfg: &ConfigFile) -> Self {
        Self {
            geometry: cfg.geometry.clone(),
            grid_spacing: cfg.field.grid_spacing,
            quadrature: cfg.field.quadrature,
        }
    }
}

fn meta_path(cache: &Path) -> PathBuf {
    let mut name = cache.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn evaluator(cfg: &ConfigFile) -> Result<FieldEvaluator, CliError> {
    let geometry = build_geometry(&cfg.geometry.params())?;
    Ok(FieldEvaluator::new(geometry, cfg.field.quadrature))
}

/// Builds the grid for `cfg` and writes it plus its sidecar to the cache path.
pub fn build_and_cache(cfg: &ConfigFile) -> Result<(FieldGrid, PathBuf), CliError> {
    let ev = evaluator(cfg)?;
    let spec = cfg.grid_spec();
    log::info!("building field grid {:?} nodes", spec.dims());
    let grid = build_field_grid(&ev, &spec)?;
    let path = cfg.cache_path();
    grid.save(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let meta = serde_json::to_string_pretty(&CacheMeta::of(cfg)).expect("serializable");
    std::fs::write(meta_path(&path), meta).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((grid, path))
}

/// Field for the dynamics: vacuum for an unmagnetized device, otherwise
/// direct quadrature or the cached grid, whose sidecar must match `cfg`.
pub fn load(cfg: &ConfigFile) -> Result<FieldSource, CliError> {
    if cfg.geometry.params().is_unmagnetized() {
        return Ok(FieldSource::Vacuum);
    }
    if cfg.field.direct {
        return Ok(FieldSource::Direct(evaluator(cfg)?));
    }
    let path = cfg.cache_path();
    if !path.exists() {
        return Err(CliError::Field(format!(
            "no field cache at {}; run `sgspin field` first or pass --direct-field",
            path.display()
        )));
    }
    let meta_text = std::fs::read_to_string(meta_path(&path))
        .map_err(|e| CliError::Field(format!("field cache sidecar for {}: {e}", path.display())))?;
    let meta: CacheMeta = serde_json::from_str(&meta_text)
        .map_err(|e| CliError::Field(format!("field cache sidecar for {}: {e}", path.display())))?;
    if meta != CacheMeta::of(cfg) {
        return Err(CliError::Field(format!(
            "field cache {} was built for a different geometry or grid; rebuild it with `sgspin field`",
            path.display()
        )));
    }
    log::info!("loading field cache {}", path.display());
    Ok(FieldSource::Grid(FieldGrid::load(&path)?))
}
